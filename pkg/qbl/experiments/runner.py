"""Experiment runner — validates configs, dispatches experiments and writes artifacts."""
import csv
import hashlib
import json
import logging
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..config import settings
from ..errors import ConfigError, QBLError
from ..models import ModelSpec
from .registry import ExperimentResult, Plot, Table, get_experiment

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ExperimentEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: str
    name: Optional[str] = None
    params: Dict[str, Any] = Field(default_factory=dict)
    model: Optional[Dict[str, Any]] = None  # field overrides on the top-level model


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelSpec = Field(default_factory=ModelSpec)
    experiments: List[ExperimentEntry] = Field(default_factory=list)
    output_dir: Optional[str] = None
    seed: Optional[int] = None
    threads: Optional[int] = Field(default=None, ge=1)


@dataclass
class RunContext:
    seed: int = 0
    threads: int = 1
    out_dir: Path = Path("out")


@dataclass
class RunOutcome:
    exit_code: int
    out_dir: Path
    files: List[Path] = field(default_factory=list)
    manifest: Dict[str, Any] = field(default_factory=dict)


def load_config(path: str) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}", module=__name__)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}", module=__name__) from e
    return ExperimentConfig.model_validate(data)


def config_hash(config: ExperimentConfig) -> str:
    payload = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _versions() -> Dict[str, str]:
    import pydantic
    import scipy

    from .. import __version__

    return {"qbl": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "pydantic": pydantic.VERSION}


def format_value(value: Any, digits: int = None) -> str:
    """Floats with a fixed number of significant digits; complex values must be split by the caller."""
    digits = settings.float_digits if digits is None else digits
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.{digits}g}"
    if isinstance(value, (complex, np.complexfloating)):
        raise TypeError("complex cell; write re/im columns instead")
    return "" if value is None else str(value)


def write_table(path: Path, table: Table) -> Path:
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([format_value(v) for v in row])
    return path


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def write_json(path: Path, payload: Dict[str, Any]) -> Path:
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_svg(path: Path, plot: Plot, table: Table) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4))
    groups = sorted(set(table.column(plot.group)), key=str) if plot.group else [None]
    for g in groups:
        rows = [r for r in table.rows if plot.group is None or r[table.columns.index(plot.group)] == g]
        xs = [r[table.columns.index(plot.x)] for r in rows]
        for y in plot.ys:
            ys = [r[table.columns.index(y)] for r in rows]
            label = y if g is None else f"{y} ({plot.group}={g})"
            if plot.scatter:
                ax.scatter(xs, ys, s=6, label=label)
            else:
                ax.plot(xs, ys, lw=1, label=label)
    if plot.logx:
        ax.set_xscale("log")
    if plot.logy:
        ax.set_yscale("log")
    ax.set_xlabel(plot.x)
    ax.legend(fontsize=6)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def execute_experiment(kind: str, spec: ModelSpec, params: Dict[str, Any], ctx: RunContext) -> ExperimentResult:
    """Execute a registered experiment by name.

    Unknown kinds, unknown parameters and missing required parameters raise ConfigError;
    library errors propagate to the caller with their module provenance.
    """
    exp = get_experiment(kind)
    if not exp:
        logger.warning(f"Unknown experiment: {kind}")
        raise ConfigError(f"Unknown experiment: {kind}", module=__name__)

    known = {p.name for p in exp.params}
    extra = sorted(set(params) - known)
    if extra:
        raise ConfigError(f"experiment {kind} got unknown params: {', '.join(extra)}", module=__name__)
    for param in exp.params:
        if param.required and param.name not in params:
            raise ConfigError(f"experiment {kind} requires param {param.name!r}", module=__name__)
    args = {**exp.defaults(), **params}

    arg_str = ", ".join(f"{k}={v!r}" for k, v in params.items())
    logger.info(f"Running experiment: {kind}({arg_str})")
    t0 = time.monotonic()
    result = exp.handler(spec, ctx=ctx, **args)
    elapsed = time.monotonic() - t0
    logger.info(f"Experiment {kind}: {elapsed:.1f}s -> {result.type}")
    return result


def _emit(result: ExperimentResult, stem: str, out_dir: Path, svg: bool) -> List[Path]:
    files = []
    for tname, table in result.tables.items():
        files.append(write_table(out_dir / f"{stem}_{tname}.csv", table))
    if result.summary:
        files.append(write_json(out_dir / f"{stem}_summary.json", result.summary))
    if svg:
        for pname, plot in result.plots.items():
            try:
                files.append(write_svg(out_dir / f"{stem}_{pname}.svg", plot, result.tables[plot.table]))
            except ImportError:
                logger.warning("matplotlib is not installed; skipping SVG output")
                break
    return files


def run(config: ExperimentConfig, out_dir: Optional[str] = None, threads: Optional[int] = None,
        seed: Optional[int] = None, svg: bool = False, only_kind: Optional[str] = None) -> RunOutcome:
    """Run every experiment of ``config`` (or only those of ``only_kind``); manifest.json is always written."""
    out = Path(out_dir or config.output_dir or settings.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ctx = RunContext(
        seed=seed if seed is not None else (config.seed if config.seed is not None else 0),
        threads=threads or config.threads or settings.threads,
        out_dir=out,
    )
    entries = list(enumerate(config.experiments))
    if only_kind:
        entries = [(i, e) for i, e in entries if e.kind == only_kind] or [(0, ExperimentEntry(kind=only_kind))]

    t_start = time.monotonic()
    files: List[Path] = []
    records: List[Dict[str, Any]] = []
    exit_code = EXIT_OK
    error: Optional[Dict[str, Any]] = None
    for index, entry in entries:
        stem = entry.name or f"{index:02d}_{entry.kind}"
        record: Dict[str, Any] = {"name": stem, "kind": entry.kind, "status": "ok"}
        records.append(record)
        try:
            spec = config.model.with_(**entry.model) if entry.model else config.model
            result = execute_experiment(entry.kind, spec, entry.params, ctx)
            written = _emit(result, stem, out, svg)
            files.extend(written)
            record["files"] = [p.name for p in written]
            record["summary"] = result.summary
        except (ValidationError, ConfigError) as e:
            exit_code = EXIT_CONFIG
            error = {"error": str(e), "module": getattr(e, "module", None) or __name__, "experiment": stem}
        except QBLError as e:
            exit_code = EXIT_NUMERICAL
            error = {"error": str(e), "module": e.module, "experiment": stem}
        except Exception as e:
            logger.error(f"Experiment {stem} failed: {e}", exc_info=True)
            exit_code = EXIT_NUMERICAL
            error = {"error": f"{type(e).__name__}: {e}", "module": None, "experiment": stem}
        if error:
            record["status"] = "error"
            logger.error(f"Experiment {stem} failed in {error['module']}: {error['error']}")
            break

    manifest = {
        "config_hash": config_hash(config),
        "versions": _versions(),
        "wall_time_s": round(time.monotonic() - t_start, 3),
        "seed": ctx.seed,
        "threads": ctx.threads,
        "experiments": records,
        "exit_code": exit_code,
    }
    if error:
        manifest.update(error)
    write_json(out / "manifest.json", manifest)
    return RunOutcome(exit_code=exit_code, out_dir=out, files=files, manifest=manifest)


def write_failure_manifest(out_dir: Optional[str], exc: Exception, exit_code: int) -> Path:
    """Manifest for runs that fail before any experiment starts (unreadable or invalid config)."""
    out = Path(out_dir or settings.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "config_hash": None,
        "versions": _versions(),
        "wall_time_s": 0.0,
        "experiments": [],
        "exit_code": exit_code,
        "error": str(exc),
        "module": getattr(exc, "module", None) or __name__,
    }
    return write_json(out / "manifest.json", manifest)
