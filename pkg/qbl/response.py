"""Susceptibility, two-time correlators and steady-state power spectra."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .config import settings
from .core import DynamicalMatrix, ModeVector, block_pauli, dynamical_matrix, two_norm, x_form
from .dynamics import GaussianState, Propagator, fit_line, steady_state
from .errors import NumericalError
from .models import ModelSpec, build_bdg

logger = logging.getLogger(__name__)

RESOLVENT_COND_LIMIT = 1e14


def susceptibility(G: np.ndarray, omega: float) -> np.ndarray:
    """chi_N(omega) = i (omega 1 - G)^{-1}."""
    A = omega * np.eye(G.shape[0]) - G
    s = sla.svdvals(A)
    cond = float(s[0] / s[-1]) if s[-1] > 0 else float("inf")
    if cond > RESOLVENT_COND_LIMIT:
        raise NumericalError(f"resolvent at omega={omega} is singular (cond {cond:.2e})", module=__name__)
    logger.debug(f"Resolvent at omega={omega}: cond {cond:.2e}")
    return 1j * sla.solve(A, np.eye(G.shape[0], dtype=complex))


def resolvent_norm(G: np.ndarray, omega: float) -> float:
    """||chi_N(omega)||_2 = 1 / sigma_min(omega 1 - G)."""
    s = sla.svdvals(omega * np.eye(G.shape[0]) - G)
    return float("inf") if s[-1] == 0 else float(1.0 / s[-1])


def _vec(v) -> np.ndarray:
    return v.v if isinstance(v, ModeVector) else np.asarray(v, dtype=complex)


def two_time_correlator(alpha, beta, Q_t: np.ndarray, G: np.ndarray, tau: float) -> complex:
    """C(t, tau) = alpha^dag tau3 e^{-iG tau} Q(t) tau3 beta = <alpha^(t + tau) beta^dag(t)>."""
    a, b = _vec(alpha), _vec(beta)
    t3 = block_pauli(3, a.shape[0] // 2)
    U = sla.expm(-1j * G * tau) if tau != 0 else np.eye(G.shape[0])
    return complex(a.conj() @ t3 @ U @ Q_t @ t3 @ b)


def correlator_trace(alpha, beta, Q_t: np.ndarray, G: np.ndarray, taus: Sequence[float]) -> np.ndarray:
    """C(t, tau) on a tau grid, reusing one step exponential when the grid is uniform."""
    a, b = _vec(alpha), _vec(beta)
    t3 = block_pauli(3, a.shape[0] // 2)
    left = a.conj() @ t3
    right = Q_t @ t3 @ b
    return np.array([left @ U @ right for U in Propagator(DynamicalMatrix(G)).matrices(taus)])


@dataclass
class PowerSpectrum:
    omega: np.ndarray
    values: np.ndarray          # S(omega)
    alpha: ModeVector
    beta: ModeVector
    normalization: complex      # C(inf, 0)

    @property
    def normalized(self) -> np.ndarray:
        if abs(self.normalization) == 0.0:
            raise NumericalError("C(inf, 0) vanishes; normalized spectrum undefined", module=__name__)
        return self.values / self.normalization

    def zero_frequency_value(self) -> complex:
        i = int(np.argmin(np.abs(self.omega)))
        if self.omega[i] != 0.0:
            logger.warning(f"omega grid lacks 0; using omega={self.omega[i]:.3e}")
        return complex(self.normalized[i])

    def as_dict(self) -> Dict[str, object]:
        z = self.zero_frequency_value()
        return {"C_inf_0": [self.normalization.real, self.normalization.imag],
                "zero_freq_value": abs(z)}


def default_omega_grid(G: np.ndarray, n_points: int = 401, n_refine: int = 81) -> np.ndarray:
    """401 points on [-2||G||, 2||G||] merged with 81 points in a narrow window around 0."""
    span = 2.0 * two_norm(G)
    coarse = np.linspace(-span, span, n_points)
    window = span / (n_points - 1)
    fine = np.linspace(-window, window, n_refine)
    return np.unique(np.concatenate([coarse, fine, [0.0]]))


def power_spectrum(alpha, beta, spec: ModelSpec, omegas: Optional[Sequence[float]] = None,
                   steady: Optional[GaussianState] = None, threads: int = None) -> PowerSpectrum:
    """S(omega) = alpha^dag [tau3 chi_N(omega) Q_ss tau3] beta, evaluated through the resolvent."""
    bdg = build_bdg(spec)
    dm = dynamical_matrix(bdg)
    steady = steady or steady_state(dm, bdg.M)
    a, b = _vec(alpha), _vec(beta)
    t3 = block_pauli(3, spec.N)
    left = a.conj() @ t3
    right = steady.Q @ t3 @ b
    G = dm.G
    n = G.shape[0]
    omegas = default_omega_grid(G) if omegas is None else np.asarray(omegas, dtype=float)

    def at(w: float) -> complex:
        # left (chi) right without forming chi
        x = sla.solve(w * np.eye(n) - G, right)
        return complex(1j * (left @ x))

    threads = threads or settings.threads
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(at, omegas))
    else:
        values = [at(w) for w in omegas]
    norm = complex(left @ right)
    alpha_v = alpha if isinstance(alpha, ModeVector) else ModeVector(a)
    beta_v = beta if isinstance(beta, ModeVector) else ModeVector(b)
    return PowerSpectrum(omega=omegas, values=np.array(values), alpha=alpha_v, beta=beta_v, normalization=norm)


def _edge_x(spec: ModelSpec) -> ModeVector:
    return x_form(spec.N, spec.N)


def zero_frequency_scan(spec: ModelSpec, Ns: Sequence[int], alpha_rule=_edge_x, beta_rule=None) -> Dict[str, object]:
    """|S~(0)| against N with a log-log fit; observables are rebuilt per N by the rules (default x_N)."""
    beta_rule = beta_rule or alpha_rule
    values = []
    for n in Ns:
        s = spec.with_(N=int(n), bc="OBC")
        ps = power_spectrum(alpha_rule(s), beta_rule(s), s, omegas=[0.0])
        values.append(abs(ps.zero_frequency_value()))
    slope, intercept, r2 = fit_line(np.log(np.asarray(Ns, dtype=float)), np.log(values))
    logger.info(f"Zero-frequency scan over N={list(Ns)}: log-log slope {slope:.3f}")
    return {"N": [int(n) for n in Ns], "abs_Snorm_0": values, "slope": slope, "intercept": intercept, "r2": r2}


def resolvent_norm_scaling(spec: ModelSpec, omega: float, Ns: Sequence[int]) -> Dict[str, object]:
    """||chi_N(omega)||_2 against N with a log-linear fit."""
    norms = [resolvent_norm(dynamical_matrix(build_bdg(spec.with_(N=int(n), bc="OBC"))).G, omega) for n in Ns]
    slope, intercept, r2 = fit_line(Ns, np.log(norms))
    return {"N": [int(n) for n in Ns], "chi_norm": norms, "slope": slope, "intercept": intercept, "r2": r2}
