from pydantic import BaseModel
import os
import logging
from pathlib import Path
from typing import Dict

logger = logging.getLogger(__name__)

_ENV_FILE = Path(__file__).resolve().parent.parent / ".env"
_ENV_PREFIX = "QBL_"


def _load_env_file(path: Path) -> Dict[str, str]:
    """Export QBL_* assignments from a dotenv file; variables already set win.

    Returns the assignments that were exported.
    """
    exported: Dict[str, str] = {}
    if not path.exists():
        return exported
    for raw in path.read_text().splitlines():
        entry = raw.strip()
        if not entry or entry.startswith("#") or "=" not in entry:
            continue
        name, _, setting = entry.partition("=")
        name = name.strip().removeprefix("export ").strip()
        if not name.startswith(_ENV_PREFIX) or name in os.environ:
            continue
        os.environ[name] = exported[name] = setting.strip().strip("'\"")
    return exported


_load_env_file(_ENV_FILE)


def _sanitize_level(val: str) -> str:
    """Normalize a logging level name, falling back to INFO for unknown names."""
    name = val.strip().upper()
    return name if isinstance(logging.getLevelName(name), int) else "INFO"


class Settings(BaseModel):
    # Output
    out_dir: str = os.getenv("QBL_OUT_DIR", "out")
    threads: int = int(os.getenv("QBL_THREADS", "1"))
    log_level: str = _sanitize_level(os.getenv("QBL_LOG_LEVEL", "INFO"))
    float_digits: int = int(os.getenv("QBL_FLOAT_DIGITS", "17"))

    # Structural tolerances (max-norm)
    struct_tol: float = float(os.getenv("QBL_STRUCT_TOL", "1e-12"))
    psd_tol: float = float(os.getenv("QBL_PSD_TOL", "1e-10"))
    hurwitz_tol: float = float(os.getenv("QBL_HURWITZ_TOL", "1e-10"))

    # Bloch-symbol sampling
    k_count: int = int(os.getenv("QBL_K_COUNT", "256"))

    # Pseudospectrum grids
    grid_points: int = int(os.getenv("QBL_GRID_POINTS", "200"))

    # Truncated Fock oracle
    fock_nmax: int = int(os.getenv("QBL_FOCK_NMAX", "14"))
    fock_dim_cap: int = int(os.getenv("QBL_FOCK_DIM_CAP", "4096"))
    leakage_tol: float = float(os.getenv("QBL_LEAKAGE_TOL", "1e-6"))


settings = Settings()

# Refuse to run with tolerances that would silently disable every check
if min(settings.struct_tol, settings.psd_tol, settings.hurwitz_tol, settings.leakage_tol) <= 0:
    raise SystemExit("FATAL: QBL_*_TOL values must be positive.")
if settings.threads < 1 or settings.k_count < 64 or settings.grid_points < 2:
    raise SystemExit("FATAL: QBL_THREADS >= 1, QBL_K_COUNT >= 64 and QBL_GRID_POINTS >= 2 are required.")

logger.debug(f"Config: out_dir={settings.out_dir}, threads={settings.threads}, k_count={settings.k_count}")
logger.debug(f"Config: fock n_max={settings.fock_nmax}, dim cap={settings.fock_dim_cap}")
