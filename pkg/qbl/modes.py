"""Majorana-boson edge modes: closed forms at J = Delta, numerical detection, certification.

A conserved mode v is an eps-pseudoeigenvector of G~ at 0 (L*(v^) = (i G~ v)^ is small);
a symmetry-generator mode is one of G at 0.  Detection works on the real quadrature
matrices of i G~ and -i G, so every candidate is a Hermitian linear form by construction.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla
from scipy.optimize import brentq

from .config import settings
from .core import (
    DynamicalMatrix,
    ModeVector,
    adjoint_generator,
    block_pauli,
    dynamical_matrix,
    form_commutator,
    form_from_quadratures,
    hermiticity_defect,
    quadrature_basis,
    quadrature_generators,
    tau1_conj,
    two_norm,
)
from .dynamics import GaussianState, Propagator, fit_line, steady_state
from .errors import NumericalError, SpecError, StructureError
from .models import DisorderSpec, ModelSpec, bloch_symbol, build_bdg, build_hamiltonian
from .pseudospectrum import omega_constant
from .spectral import StabilityClass, classify, winding

logger = logging.getLogger(__name__)

Kind = Literal["conserved", "symmetry", "zero"]
Side = Literal["left", "right", "ambiguous"]


@dataclass
class MajoranaMode:
    kind: Kind
    side: Side
    v: ModeVector
    residual: float
    localization_length: float
    label: str = ""

    def as_dict(self) -> Dict[str, object]:
        q = np.real(quadrature_basis(self.v.N).conj().T @ self.v.v)
        return {
            "label": self.label,
            "kind": self.kind,
            "side": self.side,
            "residual": self.residual,
            "localization_length": self.localization_length,
            "coefficients": {"x": q[0::2].tolist(), "p": q[1::2].tolist()},
            "quadrature_convention": "x=(a+a^dag)/sqrt2, p=i(a^dag-a)/sqrt2",
        }


@dataclass
class MajoranaPair:
    conserved: MajoranaMode
    symmetry: MajoranaMode
    commutator: complex


def _as_vector(v) -> np.ndarray:
    if isinstance(v, MajoranaMode):
        return v.v.v
    if isinstance(v, ModeVector):
        return v.v
    return np.asarray(v, dtype=complex)


def commutator(v, w) -> complex:
    """c-number [v^, w^] of two linear forms."""
    return form_commutator(_as_vector(v), _as_vector(w))


def side_of(weights: np.ndarray) -> Side:
    """Left/right by the weight center of mass over sites 1..N; within one site of the middle is ambiguous."""
    N = weights.shape[0]
    sites = np.arange(1, N + 1)
    com = float(np.sum(sites * weights) / np.sum(weights))
    middle = 0.5 * (N + 1)
    if abs(com - middle) <= 1.0:
        return "ambiguous"
    return "left" if com < middle else "right"


def localization_length(weights: np.ndarray, side: Side) -> float:
    """Decay length (in sites) from an exponential fit of |coefficients| away from the edge."""
    amp = np.sqrt(np.asarray(weights, dtype=float))
    if side == "right":
        amp = amp[::-1]
    keep = amp > 1e-14 * amp.max()
    dist = np.arange(amp.shape[0])[keep]
    if dist.shape[0] < 2:
        return 0.0
    slope, _ = np.polyfit(dist, np.log(amp[keep]), 1)
    return float(-1.0 / slope) if slope < 0 else float("inf")


def defect(mode: MajoranaMode, dm: DynamicalMatrix) -> np.ndarray:
    """Coefficient vector of the generator defect: i G~ v (conserved) or -i G v (symmetry)."""
    v = mode.v.v
    if mode.kind == "symmetry":
        return -1j * dm.G @ v
    return 1j * adjoint_generator(dm).G @ v


def residuals(mode: MajoranaMode, dm: DynamicalMatrix) -> float:
    """||G~ v|| / ||v|| for conserved modes, ||G v|| / ||v|| for symmetry modes."""
    return float(np.linalg.norm(defect(mode, dm)) / mode.v.norm)


def noether_defect(symmetry_mode: MajoranaMode, dm: DynamicalMatrix, w: np.ndarray) -> complex:
    """L*([g, w^]) - [g, L*(w^)] for a linear form w^; equals -[(-iGv)^, w^]."""
    v = symmetry_mode.v.v
    Lw = 1j * adjoint_generator(dm).G @ np.asarray(w, dtype=complex)
    # [g, w^] is a c-number, so its L* image vanishes
    return -commutator(v, Lw)


def mb_deltas(spec: ModelSpec) -> Tuple[float, float]:
    """(delta_plus, delta_minus) = (-(mu + kappa)/J, -(mu - kappa)/J)."""
    if spec.J == 0:
        raise SpecError("delta_pm undefined for J = 0", module=__name__)
    return -(spec.mu + spec.kappa) / spec.J, -(spec.mu - spec.kappa) / spec.J


def _require_sweet_spot(spec: ModelSpec) -> None:
    if spec.family != "model1":
        raise SpecError("closed-form modes exist for model1 only", module=__name__)
    if not np.isclose(spec.J, spec.Delta, rtol=0.0, atol=1e-14):
        raise SpecError(f"closed-form modes need J = Delta (J={spec.J}, Delta={spec.Delta})", module=__name__)


def _geometric(delta: float, N: int, from_right: bool) -> np.ndarray:
    j = np.arange(1, N + 1)
    powers = (N - j) if from_right else (j - 1)
    return np.power(float(delta), powers)


def _mode(kind: Kind, label: str, x=None, p=None, N: int = 0, dm: Optional[DynamicalMatrix] = None,
          side: Optional[Side] = None) -> MajoranaMode:
    zeros = np.zeros(N)
    vec = form_from_quadratures(zeros if x is None else x, zeros if p is None else p, label=label)
    weights = vec.site_weights()
    side = side or side_of(weights)
    mode = MajoranaMode(kind=kind, side=side, v=vec, residual=0.0,
                        localization_length=localization_length(weights, side), label=label)
    if dm is not None:
        mode.residual = residuals(mode, dm)
    return mode


def closed_form_modes(spec: ModelSpec) -> Dict[str, MajoranaMode]:
    """The four dissipative modes of Model 1 at J = Delta, kept when their |delta| < 1.

    gamma_L^c = sum delta_-^{j-1} x_j      gamma_R^c = sum delta_+^{N-j} p_j
    gamma_L^s = sum delta_+^{j-1} x_j      gamma_R^s = sum delta_-^{N-j} p_j
    """
    _require_sweet_spot(spec)
    N = spec.N
    dplus, dminus = mb_deltas(spec)
    dm = dynamical_matrix(build_bdg(spec.with_(bc="OBC")))
    table = [
        ("gamma_L_c", "conserved", dminus, "x", "left"),
        ("gamma_R_c", "conserved", dplus, "p", "right"),
        ("gamma_L_s", "symmetry", dplus, "x", "left"),
        ("gamma_R_s", "symmetry", dminus, "p", "right"),
    ]
    out = {}
    for label, kind, delta, quad, side in table:
        if abs(delta) >= 1.0:
            continue
        coeffs = _geometric(delta, N, from_right=(side == "right"))
        kw = {"x": coeffs} if quad == "x" else {"p": coeffs}
        out[label] = _mode(kind, label, N=N, dm=dm, side=side, **kw)
    return out


def closed_system_modes(spec: ModelSpec) -> Dict[str, MajoranaMode]:
    """kappa -> 0 zero modes gamma_L = sum delta0^{j-1} x_j, gamma_R = sum delta0^{N-j} p_j, delta0 = -mu/J."""
    _require_sweet_spot(spec)
    N = spec.N
    d0 = -spec.mu / spec.J
    return {
        "gamma_L": _mode("zero", "gamma_L", x=_geometric(d0, N, False), N=N, side="left"),
        "gamma_R": _mode("zero", "gamma_R", p=_geometric(d0, N, True), N=N, side="right"),
    }


def hamiltonian_commutator(mode: MajoranaMode, spec: ModelSpec) -> np.ndarray:
    """Coefficient vector of [H, v^] for the closed chain (kappa = 0), i.e. -i times i G0~ v."""
    N = spec.N
    H = build_hamiltonian(spec.with_(bc="OBC"))
    t3 = block_pauli(3, N)
    G0 = t3 @ H
    G0_tilde = t3 @ G0.conj().T @ t3
    # L*(v^) = i[H, v^] = (i G0~ v)^, and (c u)^ = c* u^ for the antilinear form map
    return np.conj(-1j) * (1j * G0_tilde @ mode.v.v)


def _localized_basis(Qsub: np.ndarray, N: int) -> np.ndarray:
    """Rotate an orthonormal real basis to diagonalize the projected site-position operator."""
    if Qsub.shape[1] < 2:
        return Qsub
    positions = np.repeat(np.arange(1, N + 1, dtype=float), 2)
    X = Qsub.T @ (positions[:, None] * Qsub)
    _, R = np.linalg.eigh(0.5 * (X + X.T))
    return Qsub @ R


def _candidates(R: np.ndarray, kind: Kind, threshold: float, N: int) -> List[MajoranaMode]:
    try:
        _, s, vt = sla.svd(R)
    except (sla.LinAlgError, ValueError) as e:
        raise NumericalError(f"SVD failed during mode detection: {e}", module=__name__) from e
    small = np.nonzero(s < threshold)[0]
    if small.size == 0:
        return []
    basis = _localized_basis(vt[small].T, N)
    T = quadrature_basis(N)
    modes = []
    for i in range(basis.shape[1]):
        q = basis[:, i]
        vec = ModeVector(T @ q, hermitian=True, label=kind)
        weights = vec.site_weights()
        side = side_of(weights)
        if side == "ambiguous":
            logger.warning(f"Detected {kind} mode with ambiguous side (residual {np.linalg.norm(R @ q):.2e})")
        modes.append(MajoranaMode(kind=kind, side=side, v=vec, residual=float(np.linalg.norm(R @ q)),
                                  localization_length=localization_length(weights, side),
                                  label=f"{kind}_{side}_{i}"))
    return modes


def default_threshold(dm: DynamicalMatrix) -> float:
    return 1e-4 * two_norm(dm.G)


@dataclass
class Detection:
    conserved: List[MajoranaMode]
    symmetry: List[MajoranaMode]
    pairs: List[MajoranaPair]
    threshold: float


def detect(dm: DynamicalMatrix, threshold: Optional[float] = None) -> Detection:
    threshold = default_threshold(dm) if threshold is None else threshold
    C, Y = quadrature_generators(dm)
    conserved = _candidates(C, "conserved", threshold, dm.N)
    symmetry = _candidates(Y, "symmetry", threshold, dm.N)

    scored = []
    for i, c in enumerate(conserved):
        for j, s in enumerate(symmetry):
            if "ambiguous" in (c.side, s.side) or c.side == s.side:
                continue
            comm = commutator(c, s)
            scored.append((abs(comm), i, j, comm))
    scored.sort(key=lambda t: -t[0])
    used_c, used_s, pairs = set(), set(), []
    for mag, i, j, comm in scored:
        if i in used_c or j in used_s or mag == 0.0:
            continue
        used_c.add(i)
        used_s.add(j)
        pairs.append(MajoranaPair(conserved=conserved[i], symmetry=symmetry[j], commutator=comm))
    logger.debug(f"Mode detection: {len(conserved)} conserved, {len(symmetry)} symmetry, {len(pairs)} pairs")
    return Detection(conserved=conserved, symmetry=symmetry, pairs=pairs, threshold=threshold)


def detect_mbs(spec: ModelSpec, eps_threshold: Optional[float] = None) -> List[MajoranaPair]:
    """Majorana-boson pairs of the OBC chain; empty when no candidate passes the threshold."""
    if spec.bc != "OBC":
        raise SpecError("mode detection needs open boundary conditions", module=__name__)
    return detect(dynamical_matrix(build_bdg(spec)), eps_threshold).pairs


def weyl_shift(v: np.ndarray) -> np.ndarray:
    """s with e^{i theta g} Phi e^{-i theta g} = Phi + theta s for the linear form g = v^."""
    return 1j * tau1_conj(np.asarray(v, dtype=complex))


def quasi_steady_state(spec: ModelSpec, symmetry_mode, theta: float,
                       steady: Optional[GaussianState] = None) -> GaussianState:
    """rho_theta = e^{-i theta g} rho_ss e^{i theta g}: means shift by theta s, connected part unchanged."""
    v = _as_vector(symmetry_mode)
    if hermiticity_defect(v) > 1e-10 * max(1.0, float(np.linalg.norm(v))):
        raise StructureError("quasi-steady states need a Hermitian generator", module=__name__)
    if steady is None:
        bdg = build_bdg(spec.with_(bc="OBC") if spec.bc != "OBC" else spec)
        steady = steady_state(dynamical_matrix(bdg), bdg.M)
    s = weyl_shift(v)
    m = steady.m + theta * s
    Q = steady.Q - np.outer(steady.m, steady.m.conj()) + np.outer(m, m.conj())
    return GaussianState(m=m, Q=Q)


@dataclass
class QuasiBoundCurves:
    t: np.ndarray
    lhs: np.ndarray
    mid: np.ndarray
    outer: np.ndarray
    eps: float
    omega: float
    t_delta: float
    delta: float
    m0: np.ndarray = field(repr=False, default=None)
    trajectory: np.ndarray = field(repr=False, default=None)

    @property
    def violations(self) -> int:
        tol = 1e-12
        return int(np.sum(self.lhs > self.mid + tol) + np.sum(self.mid > self.outer + tol))


def bound_crossing_time(eps: float, omega: float, delta: float) -> float:
    """First t with eps t e^{omega t} = delta."""
    if eps <= 0:
        return float("inf")
    f = lambda t: eps * t * np.exp(omega * t) - delta
    hi = 1.0
    while f(hi) < 0:
        hi *= 2.0
        if hi > 1e12:
            return float("inf")
    return float(brentq(f, 0.0, hi, xtol=1e-12))


def quasi_bound_check(spec: ModelSpec, symmetry_mode: MajoranaMode, theta: float, times: Sequence[float],
                      delta: float = 0.1) -> QuasiBoundCurves:
    """LHS ||m(t) - m(0)|| / ||m(0)||, middle eps t sup||e^{-iG tau}||, outer eps t e^{Omega t}."""
    obc = spec.with_(bc="OBC")
    bdg = build_bdg(obc)
    dm = dynamical_matrix(bdg)
    state = quasi_steady_state(obc, symmetry_mode, theta, steady_state(dm, bdg.M))
    norm0 = float(np.linalg.norm(state.m))
    if norm0 == 0.0:
        raise NumericalError("quasi-steady mean vanishes (theta = 0?)", module=__name__)
    eps = residuals(symmetry_mode, dm) if isinstance(symmetry_mode, MajoranaMode) else \
        float(np.linalg.norm(dm.G @ _as_vector(symmetry_mode)) / np.linalg.norm(_as_vector(symmetry_mode)))
    omega = omega_constant(bloch_symbol(obc.with_(disorder=None)))
    t = np.asarray(times, dtype=float)
    Us = Propagator(dm).matrices(t)
    traj = np.array([U @ state.m for U in Us])
    lhs = np.linalg.norm(traj - state.m, axis=1) / norm0
    sup = np.maximum.accumulate(np.array([two_norm(U) for U in Us]))
    mid = eps * t * sup
    outer = eps * t * np.exp(omega * t)
    return QuasiBoundCurves(t=t, lhs=lhs, mid=mid, outer=outer, eps=eps, omega=omega,
                            t_delta=bound_crossing_time(eps, omega, delta), delta=delta,
                            m0=state.m, trajectory=traj)


def observable_bound_check(curves: QuasiBoundCurves, n_observables: int, seed: int = 0) -> np.ndarray:
    """|<a>_t - <a>_0| / (||a|| ||m(0)||) for random unit linear forms a; rows are observables."""
    rng = np.random.default_rng(seed)
    n = curves.m0.shape[0]
    alphas = rng.standard_normal((n_observables, n)) + 1j * rng.standard_normal((n_observables, n))
    alphas /= np.linalg.norm(alphas, axis=1, keepdims=True)
    s3 = np.tile([1.0, -1.0], n // 2)
    diff = (curves.trajectory - curves.m0) * s3
    return np.abs(alphas.conj() @ diff.T) / np.linalg.norm(curves.m0)


@dataclass
class DisorderStats:
    survival_fraction: float
    clean_pairs: int
    pair_counts: List[int]
    residuals: List[List[float]]
    shifts: List[List[float]]
    perturbation_norms: List[float]
    violations: int
    carried_residuals: List[List[float]] = field(default_factory=list)
    carried_violations: int = 0

    def as_dict(self) -> Dict[str, object]:
        return {
            "survival_fraction": self.survival_fraction,
            "clean_pairs": self.clean_pairs,
            "pair_counts": self.pair_counts,
            "max_shift": max((max(s) for s in self.shifts if s), default=0.0),
            "max_perturbation_norm": max(self.perturbation_norms, default=0.0),
            "max_carried_residual": max((max(r) for r in self.carried_residuals if r), default=0.0),
            "violations": self.violations,
            "carried_violations": self.carried_violations,
        }


def disorder_robustness(spec: ModelSpec, disorder: DisorderSpec, eps_threshold: Optional[float] = None,
                        n_realizations: int = 50, threads: int = None) -> DisorderStats:
    """Re-detect modes over seeded disorder realizations and check two perturbation bounds.

    For every realization and each of the k smallest singular values of G~ (k = clean
    conserved-mode count), |sigma_i(disordered) - sigma_i(clean)| <= ||G~_dis - G~_clean||_2.
    Each clean conserved mode v is also carried into the disordered chain unchanged:
    ||G~_dis v|| <= ||G~_clean v|| + ||G~_dis - G~_clean||_2 (``carried_residuals``).
    The two agree on the k-dimensional subspace but the second is checked per mode.
    """
    clean_spec = spec.with_(bc="OBC", disorder=None)
    dm_clean = dynamical_matrix(build_bdg(clean_spec))
    eps_threshold = default_threshold(dm_clean) if eps_threshold is None else eps_threshold
    clean = detect(dm_clean, eps_threshold)
    k = len(clean.conserved)
    Gt_clean = adjoint_generator(dm_clean).G
    s_clean = sla.svdvals(Gt_clean)[::-1][:k]
    children = np.random.SeedSequence(disorder.seed).spawn(n_realizations)
    seeds = [int(c.generate_state(1)[0]) for c in children]

    def one(seed: int):
        dis_spec = clean_spec.with_(disorder=disorder.model_copy(update={"seed": seed}).model_dump())
        dm = dynamical_matrix(build_bdg(dis_spec))
        det = detect(dm, eps_threshold)
        Gt = adjoint_generator(dm).G
        s_dis = sla.svdvals(Gt)[::-1][:k]
        carried = [residuals(m, dm) for m in clean.conserved]
        return det, np.abs(s_dis - s_clean).tolist(), two_norm(Gt - Gt_clean), carried

    threads = threads or settings.threads
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, seeds))
    else:
        results = [one(s) for s in seeds]

    counts = [len(r[0].pairs) for r in results]
    shifts = [r[1] for r in results]
    norms = [r[2] for r in results]
    carried = [r[3] for r in results]
    violations = sum(int(x > nrm + 1e-12) for sh, nrm in zip(shifts, norms) for x in sh)
    carried_violations = sum(int(r > m.residual + nrm + 1e-12)
                             for rs, nrm in zip(carried, norms) for r, m in zip(rs, clean.conserved))
    survived = sum(int(c == len(clean.pairs)) for c in counts)
    logger.info(f"Disorder W={disorder.W}: {survived}/{n_realizations} realizations keep {len(clean.pairs)} pairs")
    return DisorderStats(
        survival_fraction=survived / n_realizations if n_realizations else 1.0,
        clean_pairs=len(clean.pairs),
        pair_counts=counts,
        residuals=[[m.residual for m in r[0].conserved + r[0].symmetry] for r in results],
        shifts=shifts,
        perturbation_norms=norms,
        violations=violations,
        carried_residuals=carried,
        carried_violations=carried_violations,
    )


def sigma_min_scaling(spec: ModelSpec, Ns: Sequence[int], lam: complex = 0.0) -> Dict[str, object]:
    """sigma_min(-iG~ - lam) of the OBC chain against N with a log-linear fit."""
    sigmas = []
    for n in Ns:
        dm = dynamical_matrix(build_bdg(spec.with_(N=int(n), bc="OBC")))
        A = -1j * adjoint_generator(dm).G
        sigmas.append(float(sla.svdvals(A - lam * np.eye(A.shape[0]))[-1]))
    slope, intercept, r2 = fit_line(Ns, np.log(np.maximum(sigmas, 1e-300)))
    return {"N": list(Ns), "sigma_min": sigmas, "slope": slope, "intercept": intercept, "r2": r2}


def detection_size(J: float, Delta: float, mu: float, kappa: float, tol: float = 1e-5,
                   N_min: int = 20, N_max: int = 400) -> int:
    """Chain length at which the slowest winding band's edge modes decay to ``tol`` across the chain.

    A quadrature band with offset s in {mu - kappa, mu + kappa} decays per site by
    rho(s) = |(|s| + sqrt(s^2 + J^2 - Delta^2)) / (J + Delta)| and winds when rho < 1.
    Returns ``N_min`` when no band winds.
    """
    if J + Delta == 0:
        return N_min
    rates = []
    for s in (mu - kappa, mu + kappa):
        rho = abs((abs(s) + np.sqrt(complex(s * s + J * J - Delta * Delta))) / (J + Delta))
        if 0.0 < rho < 1.0:
            rates.append(rho)
    if not rates:
        return N_min
    n = int(np.ceil(np.log(tol) / np.log(max(rates))))
    return int(min(max(n, N_min), N_max))


@dataclass
class TopologySummary:
    stability: str
    winding_total: Optional[int]
    windings: Dict[str, int]
    winding_bands: Optional[int]
    mb_pairs: int
    N: int

    @property
    def topological(self) -> bool:
        """Metastable with at least one quadrature band winding around 0."""
        return self.stability == StabilityClass.METASTABLE.value and bool(self.winding_bands)

    @property
    def certified(self) -> bool:
        """Topological and every winding band has its Majorana-boson pair on the OBC chain."""
        return self.topological and self.mb_pairs == self.winding_bands


def topology_summary(spec: ModelSpec, N: Optional[int] = None, eps_threshold: Optional[float] = None,
                     k_count: int = None) -> TopologySummary:
    """Stability, bulk winding at 0 and detected MB pairs of one model.

    The total winding is that of det A(k); bands of opposite chirality cancel in it, so
    MB-carrying chains are told apart by the per-quadrature band windings instead.
    Bands touching 0 leave the windings ``None``. ``N`` overrides the chain length used for
    detection; for Model 1 it defaults to ``detection_size``.
    """
    if N is None:
        N = detection_size(spec.J, spec.Delta, spec.mu, spec.kappa, N_min=spec.N) \
            if spec.family == "model1" else spec.N
    obc = spec.with_(N=int(N), bc="OBC")
    try:
        w = winding(bloch_symbol(obc), 0.0, k_count=k_count)
        total, per = w.total, w.by_quadrature()
        bands = sum(int(b != 0) for b in w.band_windings)
    except NumericalError as e:
        logger.debug(f"Winding at mu={spec.mu}, kappa={spec.kappa}: {e}")
        total, per, bands = None, {}, None
    return TopologySummary(
        stability=classify(obc).value,
        winding_total=total,
        windings=per,
        winding_bands=bands,
        mb_pairs=len(detect_mbs(obc, eps_threshold)),
        N=int(N),
    )


@dataclass
class PhaseCell:
    mu: float
    kappa: float
    stability: str
    winding_x: Optional[int]
    winding_p: Optional[int]
    winding_bands: Optional[int]
    mb_pairs: int
    N: int

    @property
    def consistent(self) -> bool:
        return self.winding_bands is None or self.winding_bands == self.mb_pairs


def phase_diagram(J: float, Delta: float, mu_ratios: Sequence[float], kappa_ratios: Sequence[float],
                  N: Optional[int] = None, eps_threshold: Optional[float] = None, k_count: int = None,
                  N_min: int = 20, N_max: int = 400) -> List[PhaseCell]:
    """Model 1 over a (mu/Delta, kappa/Delta) grid: stability, per-quadrature winding at 0, MB pairs.

    Cells whose bands touch 0 get ``None`` windings. With ``N`` unset each cell is detected on
    a chain long enough for its slowest edge mode (``detection_size`` within [N_min, N_max]).
    """
    cells = []
    for kr in kappa_ratios:
        for mr in mu_ratios:
            mu, kappa = mr * Delta, kr * Delta
            n = N if N is not None else detection_size(J, Delta, mu, kappa, N_min=N_min, N_max=N_max)
            spec = ModelSpec(family="model1", J=J, Delta=Delta, mu=mu, kappa=kappa, N=n, bc="OBC")
            summary = topology_summary(spec, N=n, eps_threshold=eps_threshold, k_count=k_count)
            cells.append(PhaseCell(
                mu=spec.mu,
                kappa=spec.kappa,
                stability=summary.stability,
                winding_x=summary.windings.get("x", 0) if summary.winding_bands is not None else None,
                winding_p=summary.windings.get("p", 0) if summary.winding_bands is not None else None,
                winding_bands=summary.winding_bands,
                mb_pairs=summary.mb_pairs,
                N=n,
            ))
    mismatched = sum(int(not c.consistent) for c in cells)
    logger.info(f"Phase diagram {len(kappa_ratios)}x{len(mu_ratios)} at J={J}: {mismatched} mismatched cells")
    return cells
