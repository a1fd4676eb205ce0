"""Moment dynamics: dm/dt = -iG m and dQ/dt = -i(GQ - QG^dag) + tau3 M tau3."""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla
from scipy.integrate import solve_ivp

from .core import (
    DynamicalMatrix,
    ModeVector,
    block_pauli,
    dynamical_matrix,
    expectation,
    mean_from_quadratures,
    tau1_conj,
    two_norm,
    x_form,
)
from .errors import NumericalError, StructureError
from .models import ModelSpec, build_bdg
from .spectral import rapidities

logger = logging.getLogger(__name__)


@dataclass
class GaussianState:
    m: np.ndarray  # <Phi>
    Q: np.ndarray  # <Phi Phi^dag>

    @property
    def N(self) -> int:
        return self.m.shape[0] // 2

    def commutation_defect(self) -> float:
        t1, t3 = block_pauli(1, self.N), block_pauli(3, self.N)
        return float(np.max(np.abs(self.Q - t1 @ self.Q.T @ t1 - t3)))

    def validate(self, tol: float = 1e-8, psd_tol: float = 1e-9) -> "GaussianState":
        if np.max(np.abs(self.Q - self.Q.conj().T)) > tol:
            raise StructureError("second moments are not Hermitian", module=__name__)
        if self.commutation_defect() > tol:
            raise StructureError(f"Q - tau1 Q^T tau1 != tau3 (defect {self.commutation_defect():.2e})",
                                 module=__name__)
        if np.min(np.linalg.eigvalsh(0.5 * (self.Q + self.Q.conj().T))) < -psd_tol:
            raise StructureError("second moments are not positive-semidefinite", module=__name__)
        if np.max(np.abs(self.m - tau1_conj(self.m)), initial=0.0) > tol:
            raise StructureError("first moments lack conjugate structure m = tau1 m*", module=__name__)
        return self

    def connected(self) -> np.ndarray:
        """Q - m m^dag."""
        return self.Q - np.outer(self.m, self.m.conj())


def vacuum(N: int) -> GaussianState:
    """<a a^dag> = 1, everything else zero."""
    return GaussianState(m=np.zeros(2 * N, dtype=complex),
                         Q=0.5 * (np.eye(2 * N) + block_pauli(3, N)).astype(complex))


class Propagator:
    """Caches e^{-iG dt} per step so uniform grids cost one exponential."""

    def __init__(self, dm: DynamicalMatrix):
        self.G = dm.G
        self._steps: Dict[float, np.ndarray] = {}

    def step(self, dt: float) -> np.ndarray:
        key = round(float(dt), 15)
        if key not in self._steps:
            self._steps[key] = sla.expm(-1j * self.G * dt)
        return self._steps[key]

    def matrices(self, times: Sequence[float]) -> List[np.ndarray]:
        times = np.asarray(times, dtype=float)
        if times.size == 0:
            return []
        diffs = np.diff(times)
        uniform = diffs.size > 0 and np.allclose(diffs, diffs[0], rtol=1e-12, atol=0.0)
        if uniform and diffs[0] > 0:
            U = sla.expm(-1j * self.G * times[0])
            step = self.step(diffs[0])
            out = [U]
            for _ in diffs:
                U = step @ U
                out.append(U)
            return out
        return [sla.expm(-1j * self.G * t) for t in times]


def propagate_mean(dm: DynamicalMatrix, m0: np.ndarray, times: Sequence[float]) -> np.ndarray:
    """m(t) = e^{-iGt} m0; rows follow ``times``."""
    m0 = np.asarray(m0, dtype=complex)
    return np.array([U @ m0 for U in Propagator(dm).matrices(times)])


def propagator_norms(dm: DynamicalMatrix, times: Sequence[float]) -> np.ndarray:
    """d_lin(t) = ||e^{-iGt}||_2."""
    return np.array([two_norm(U) for U in Propagator(dm).matrices(times)])


def _qss_source(M: np.ndarray) -> np.ndarray:
    t3 = block_pauli(3, M.shape[0] // 2)
    return t3 @ M @ t3


def steady_state(dm: DynamicalMatrix, M: np.ndarray) -> GaussianState:
    """Unique Gaussian steady state: m = 0 and G Q - Q G^dag = -i tau3 M tau3."""
    spec = rapidities(dm)
    if not spec.hurwitz:
        raise NumericalError(f"-iG is not Hurwitz (max Re = {spec.max_real:.3e}); no unique steady state",
                             module=__name__)
    G = dm.G
    src = _qss_source(M)
    Q = sla.solve_sylvester(G, -G.conj().T, -1j * src)
    Q = 0.5 * (Q + Q.conj().T)
    residual = float(np.max(np.abs(-1j * (G @ Q - Q @ G.conj().T) + src)))
    cond = float(np.linalg.cond(G))
    if cond > 1e8:
        logger.warning(f"Steady-state solve: cond(G) = {cond:.2e}, residual = {residual:.2e}")
    if residual > 1e-10 * max(1.0, float(np.max(np.abs(Q)))):
        raise NumericalError(f"Sylvester residual {residual:.2e} exceeds tolerance", module=__name__)
    return GaussianState(m=np.zeros(G.shape[0], dtype=complex), Q=Q)


def evolve_covariance(dm: DynamicalMatrix, M: np.ndarray, Q0: np.ndarray, times: Sequence[float],
                      method: str = "auto", rtol: float = 1e-10, atol: float = 1e-12) -> np.ndarray:
    """Second moments Q(t) on ``times`` (array of shape (len(times), 2N, 2N)).

    ``auto`` uses Q(t) = e^{-iGt}(Q0 - Qss)e^{iG^dag t} + Qss when -iG is Hurwitz and the
    adaptive RK45 stepper otherwise; ``stepper`` forces integration.
    """
    times = np.asarray(times, dtype=float)
    Q0 = np.asarray(Q0, dtype=complex)
    if method not in ("auto", "closed", "stepper"):
        raise ValueError(f"unknown method {method!r}")
    if method != "stepper" and rapidities(dm).hurwitz:
        Qss = steady_state(dm, M).Q
        D = Q0 - Qss
        return np.array([U @ D @ U.conj().T + Qss for U in Propagator(dm).matrices(times)])
    if method == "closed":
        raise NumericalError("closed-form covariance needs a Hurwitz generator", module=__name__)

    G = dm.G
    n = G.shape[0]
    src = _qss_source(M)

    def rhs(_t, y):
        Q = y.reshape(n, n)
        return (-1j * (G @ Q - Q @ G.conj().T) + src).ravel()

    sol = solve_ivp(rhs, (float(times[0]), float(times[-1])), Q0.ravel(), t_eval=times,
                    method="RK45", rtol=rtol, atol=atol)
    if sol.status < 0:
        t_fail = float(sol.t[-1]) if sol.t.size else float(times[0])
        raise NumericalError(f"covariance integration failed at t={t_fail:.4g}: {sol.message}",
                             module=__name__)
    return sol.y.T.reshape(-1, n, n)


@dataclass
class MixingReport:
    delta: float
    t_lin: float
    times: np.ndarray
    d_lin: np.ndarray
    t_peak: float
    peak: float

    def as_dict(self) -> Dict[str, float]:
        return {"delta": self.delta, "t_lin": self.t_lin, "t_peak": self.t_peak, "peak": self.peak}


def linear_mixing_time(dm: DynamicalMatrix, delta: float, horizon: float,
                       n_points: int = 2001) -> MixingReport:
    """First time after the global peak of d_lin at which d_lin drops below delta.

    The crossing is located by log-linear interpolation between grid points.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not rapidities(dm).hurwitz:
        raise NumericalError("linear mixing time needs a Hurwitz generator", module=__name__)
    times = np.linspace(0.0, horizon, n_points)
    d = propagator_norms(dm, times)
    i_peak = int(np.argmax(d))
    below = np.nonzero(d[i_peak:] < delta)[0]
    if below.size == 0:
        raise NumericalError(f"d_lin never falls below {delta} within horizon {horizon}", module=__name__)
    i = i_peak + int(below[0])
    if np.any(d[i:] >= delta):
        raise NumericalError(f"d_lin re-crosses {delta} after t={times[i]:.4g}; extend the horizon",
                             module=__name__)
    if i == 0:
        t_lin = 0.0
    else:
        l0, l1 = np.log(d[i - 1]), np.log(d[i])
        frac = (l0 - np.log(delta)) / (l0 - l1) if l0 != l1 else 1.0
        t_lin = float(times[i - 1] + frac * (times[i] - times[i - 1]))
    return MixingReport(delta=delta, t_lin=t_lin, times=times, d_lin=d,
                        t_peak=float(times[i_peak]), peak=float(d[i_peak]))


def sample_unit_means(N: int, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Means with ||m|| = 1, uniform on the real sphere of quadrature expectations.

    Returns an array of shape (2N, n_samples).
    """
    r = rng.standard_normal((n_samples, 2 * N))
    r /= np.linalg.norm(r, axis=1, keepdims=True)
    return np.array([mean_from_quadratures(row) for row in r]).T


@dataclass
class AmplificationStats:
    N: int
    times: np.ndarray
    peak_times: np.ndarray
    mean_trace: np.ndarray  # mean |<observable>|(t) over samples
    mean_peak: float
    std_peak: float
    traces: Optional[np.ndarray] = field(default=None, repr=False)

    def as_dict(self) -> Dict[str, float]:
        return {"N": self.N, "mean_peak": self.mean_peak, "std_peak": self.std_peak,
                "n_samples": int(self.peak_times.shape[0])}


def amplification_experiment(spec: ModelSpec, n_samples: int, times: Sequence[float],
                             observable: Optional[ModeVector] = None, seed: int = 0,
                             keep_traces: bool = False) -> AmplificationStats:
    """Peak times of |<observable>|(t) over random unit initial means (default x_N)."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    dm = dynamical_matrix(build_bdg(spec))
    observable = observable or x_form(spec.N, spec.N)
    times = np.asarray(times, dtype=float)
    rng = np.random.default_rng(seed)
    M0 = sample_unit_means(spec.N, n_samples, rng)
    s3 = np.tile([1.0, -1.0], spec.N)
    row = observable.v.conj() * s3
    traces = np.array([(row @ (U @ M0)).real for U in Propagator(dm).matrices(times)]).T
    peaks = times[np.argmax(np.abs(traces), axis=1)]
    logger.info(f"Amplification N={spec.N}: mean peak {peaks.mean():.3f} over {n_samples} samples")
    return AmplificationStats(
        N=spec.N,
        times=times,
        peak_times=peaks,
        mean_trace=np.abs(traces).mean(axis=0),
        mean_peak=float(peaks.mean()),
        std_peak=float(peaks.std()),
        traces=traces if keep_traces else None,
    )


def observable_trace(observable: ModeVector, trajectory: np.ndarray) -> np.ndarray:
    """<observable>(t) along a mean trajectory (rows = times)."""
    return np.array([expectation(observable.v, m) for m in trajectory])


def fit_line(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float, float]:
    """Least-squares slope, intercept and R^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2
