"""Rapidity spectra, stability classification, bulk bands and winding numbers."""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment

from .config import settings
from .core import DynamicalMatrix
from .errors import BandTrackingError, NumericalError, SpecError
from .models import BlochSymbol, ModelSpec, bloch_symbol, build_dynamical

logger = logging.getLogger(__name__)

_X_SPINOR = np.array([1.0, 1.0]) / np.sqrt(2.0)
_P_SPINOR = np.array([1.0, -1.0]) / np.sqrt(2.0)


class StabilityClass(str, Enum):
    UNSTABLE = "unstable"
    METASTABLE = "metastable"
    UNCONDITIONALLY_STABLE = "unconditionally_stable"


@dataclass
class RapiditySpectrum:
    eigenvalues: np.ndarray
    gap: float
    hurwitz: bool
    marginal: bool = False

    @property
    def max_real(self) -> float:
        return float(np.max(self.eigenvalues.real))


def rapidities(dm: DynamicalMatrix, tol: Optional[float] = None) -> RapiditySpectrum:
    """Eigenvalues of -iG with Hurwitz verdict and spectral gap.

    Max real parts inside (-tol, tol) are flagged marginal rather than trusted.
    """
    tol = settings.hurwitz_tol if tol is None else tol
    try:
        ev = sla.eigvals(dm.rapidity_matrix)
    except (sla.LinAlgError, ValueError) as e:
        raise NumericalError(f"eigensolver failed: {e}", module=__name__) from e
    if not np.all(np.isfinite(ev)):
        raise NumericalError("eigensolver returned non-finite rapidities", module=__name__)
    ev = ev[np.lexsort((ev.imag, ev.real))]
    top = float(np.max(ev.real))
    marginal = abs(top) < tol
    if marginal:
        logger.warning(f"Marginal Hurwitz verdict: max Re rapidity = {top:.3e}")
    return RapiditySpectrum(eigenvalues=ev, gap=abs(top), hurwitz=top < -tol, marginal=marginal)


def spectral_gap(dm: DynamicalMatrix) -> float:
    """Delta_L = |max Re sigma(-iG)|."""
    return rapidities(dm).gap


@dataclass
class StabilityReport:
    label: StabilityClass
    obc: RapiditySpectrum
    pbc: RapiditySpectrum

    @property
    def marginal(self) -> bool:
        return self.obc.marginal or self.pbc.marginal


def stability_report(spec: ModelSpec) -> StabilityReport:
    if not spec.translation_invariant:
        raise SpecError("classification requires a translation-invariant spec", module=__name__)
    obc = rapidities(build_dynamical(spec.with_(bc="OBC")))
    pbc = rapidities(build_dynamical(spec.with_(bc="PBC")))
    if not obc.hurwitz:
        label = StabilityClass.UNSTABLE
    elif not pbc.hurwitz:
        label = StabilityClass.METASTABLE
    else:
        label = StabilityClass.UNCONDITIONALLY_STABLE
    return StabilityReport(label=label, obc=obc, pbc=pbc)


def classify(spec: ModelSpec) -> StabilityClass:
    """metastable iff OBC Hurwitz and PBC not; unstable iff OBC not Hurwitz."""
    return stability_report(spec).label


@dataclass
class BandCurves:
    k: np.ndarray
    values: np.ndarray            # (n_bands, k_count)
    labels: List[str]             # "x", "p" or "mixed" per band
    closing: List[int]            # band b at k = 2pi continues as band closing[b] at k = 0
    ambiguous_steps: List[int] = field(default_factory=list)

    @property
    def n_bands(self) -> int:
        return self.values.shape[0]

    def cycles(self) -> List[List[int]]:
        """Bands grouped into closed curves (bands that swap over the zone share a curve)."""
        seen, out = set(), []
        for start in range(self.n_bands):
            if start in seen:
                continue
            cycle, b = [], start
            while b not in seen:
                seen.add(b)
                cycle.append(b)
                b = self.closing[b]
            out.append(cycle)
        return out


def _quadrature_label(u: np.ndarray) -> str:
    if u.shape[0] != 2:
        return "mixed"
    wx = abs(np.vdot(_X_SPINOR, u)) ** 2
    wp = abs(np.vdot(_P_SPINOR, u)) ** 2
    if wx > 0.9:
        return "x"
    if wp > 0.9:
        return "p"
    return "mixed"


def _assign(prev: np.ndarray, new: np.ndarray) -> Tuple[np.ndarray, bool]:
    """Column permutation of ``new`` best matching ``prev`` by eigenvector overlap."""
    overlap = np.abs(prev.conj().T @ new)
    rows, cols = linear_sum_assignment(-overlap)
    ambiguous = False
    for r, c in zip(rows, cols):
        best = overlap[r, c]
        others = np.delete(overlap[r], c)
        runner_up = float(np.max(others)) if others.size else 0.0
        if best < 0.5 or best - runner_up < 0.1:
            ambiguous = True
    return cols, ambiguous


def _resolve_degenerate(w: np.ndarray, V: np.ndarray, prev: np.ndarray, tol: float) -> np.ndarray:
    """Inside clusters of (near-)equal eigenvalues pick the eigenvectors closest to ``prev``."""
    V = V.copy()
    n = w.shape[0]
    done = set()
    for i in range(n):
        if i in done:
            continue
        cluster = [j for j in range(n) if j not in done and abs(w[j] - w[i]) < tol]
        done.update(cluster)
        if len(cluster) < 2:
            continue
        Qc, _ = np.linalg.qr(V[:, cluster])
        proj = Qc @ (Qc.conj().T @ prev)
        best = np.argsort(-np.linalg.norm(proj, axis=0))[:len(cluster)]
        cols, _ = np.linalg.qr(proj[:, np.sort(best)])
        V[:, cluster] = cols
    return V


def bulk_bands(symbol: BlochSymbol, k_count: int = None, strict: bool = False) -> BandCurves:
    """Eigenvalues of -iG(k) on [0, 2pi), tracked into branches by eigenvector overlap."""
    k_count = settings.k_count if k_count is None else k_count
    if k_count < 64:
        raise ValueError(f"k_count must be >= 64, got {k_count}")
    ks = 2 * np.pi * np.arange(k_count) / k_count
    values, vectors = [], []
    ambiguous = []
    prev = None
    for step, k in enumerate(ks):
        w, V = sla.eig(symbol.rapidity_at(k))
        V = V / np.linalg.norm(V, axis=0)
        if prev is not None:
            V = _resolve_degenerate(w, V, prev, 1e-8 * max(1.0, float(np.max(np.abs(w)))))
            perm, amb = _assign(prev, V)
            w, V = w[perm], V[:, perm]
            if amb:
                ambiguous.append(step)
        values.append(w)
        vectors.append(V)
        prev = V
    closing, amb = _assign(vectors[-1], vectors[0])
    if amb:
        ambiguous.append(k_count)
    if ambiguous:
        msg = f"Band tracking ambiguous at {len(ambiguous)} of {k_count} steps"
        if strict:
            raise BandTrackingError(msg, module=__name__)
        logger.warning(msg)
    labels = [_quadrature_label(vectors[0][:, b]) for b in range(vectors[0].shape[1])]
    return BandCurves(
        k=ks,
        values=np.array(values).T,
        labels=labels,
        closing=[int(c) for c in closing],
        ambiguous_steps=ambiguous,
    )


@dataclass
class WindingResult:
    band_windings: List[int]
    total: int
    reference: complex
    min_distance: float
    band_labels: List[str] = field(default_factory=list)
    residual: float = 0.0

    def by_quadrature(self) -> Dict[str, int]:
        out: Dict[str, int] = {}
        for label, w in zip(self.band_labels, self.band_windings):
            out[label] = out.get(label, 0) + w
        return out


def _accumulated_turns(z: np.ndarray) -> float:
    phase = np.unwrap(np.angle(z))
    steps = np.abs(np.diff(phase))
    if steps.size and np.max(steps) > np.pi / 2:
        raise NumericalError("phase steps too large for a reliable winding; increase k_count",
                             module=__name__)
    return float((phase[-1] - phase[0]) / (2 * np.pi))


def winding(symbol: BlochSymbol, lam0: complex = 0.0, k_count: int = None,
            floor: float = 1e-8) -> WindingResult:
    """Winding of det(-iG(k) - lam0) over the Brillouin zone, plus per-curve numbers."""
    k_count = settings.k_count if k_count is None else k_count
    bands = bulk_bands(symbol, k_count)
    min_distance = float(np.min(np.abs(bands.values - lam0)))
    if min_distance < floor:
        raise NumericalError(f"bulk band passes within {min_distance:.2e} of {lam0}; winding ill-defined",
                             module=__name__)

    ks = np.append(bands.k, 2 * np.pi)
    b = symbol.rapidity_at(0).shape[0]
    dets = np.array([np.linalg.det(symbol.rapidity_at(k) - lam0 * np.eye(b)) for k in ks])
    raw = _accumulated_turns(dets)
    total = int(round(raw))
    residual = abs(raw - total)
    if residual > 0.1:
        raise NumericalError(f"winding residual {residual:.3f} too large; increase k_count", module=__name__)

    band_windings = [0] * bands.n_bands
    for cycle in bands.cycles():
        path = np.concatenate([bands.values[c] for c in cycle])
        path = np.append(path, bands.values[cycle[0], 0])
        band_windings[cycle[0]] = int(round(_accumulated_turns(path - lam0)))
    if sum(band_windings) != total:
        logger.warning(f"Per-band windings {band_windings} do not sum to total {total}")
    logger.debug(f"Winding around {lam0}: total={total}, bands={band_windings}")
    return WindingResult(
        band_windings=band_windings,
        total=total,
        reference=complex(lam0),
        min_distance=min_distance,
        band_labels=bands.labels,
        residual=residual,
    )


def pbc_on_bands(spec: ModelSpec, symbol: Optional[BlochSymbol] = None) -> float:
    """Largest distance from a PBC rapidity to the bulk-band values at k = 2pi m / N."""
    symbol = symbol or bloch_symbol(spec)
    ev = rapidities(build_dynamical(spec.with_(bc="PBC"))).eigenvalues
    ks = 2 * np.pi * np.arange(spec.N) / spec.N
    bulk = np.concatenate([sla.eigvals(symbol.rapidity_at(k)) for k in ks])
    return float(max(np.min(np.abs(bulk - e)) for e in ev))
