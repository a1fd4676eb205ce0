"""epsilon-pseudospectra from smallest-singular-value grids.

sigma_eps(A) = {lam : sigma_min(A - lam) < eps}.  Grids are evaluated point by point
with full SVDs (dense, 2N <= 128), rows farmed out to a thread pool and assembled in
order, so results do not depend on the worker count.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from .config import settings
from .errors import NumericalError
from .models import BlochSymbol

logger = logging.getLogger(__name__)

Region = Tuple[float, float, float, float]  # (re_min, re_max, im_min, im_max)

DEFAULT_EPSILONS = tuple(10.0 ** -p for p in range(1, 11))


def sigma_min(A: np.ndarray, lam: complex) -> float:
    try:
        s = sla.svdvals(A - lam * np.eye(A.shape[0]))
    except (sla.LinAlgError, ValueError) as e:
        raise NumericalError(f"SVD failed at lambda={lam}: {e}", module=__name__) from e
    return float(s[-1])


@dataclass
class PseudospectrumGrid:
    re: np.ndarray
    im: np.ndarray
    values: np.ndarray  # values[i_im, i_re] = sigma_min(A - (re + i im))

    @property
    def region(self) -> Region:
        return float(self.re[0]), float(self.re[-1]), float(self.im[0]), float(self.im[-1])

    @property
    def resolution(self) -> Tuple[int, int]:
        return self.re.shape[0], self.im.shape[0]

    def points(self):
        """Yield (re, im, sigma_min) row by row."""
        for i, y in enumerate(self.im):
            for j, x in enumerate(self.re):
                yield float(x), float(y), float(self.values[i, j])


def default_region(A: np.ndarray, pad: float = 0.2) -> Region:
    """Eigenvalue hull padded by ``pad`` times its larger side."""
    ev = sla.eigvals(A)
    re_lo, re_hi = float(ev.real.min()), float(ev.real.max())
    im_lo, im_hi = float(ev.imag.min()), float(ev.imag.max())
    side = max(re_hi - re_lo, im_hi - im_lo, 1e-3 * max(1.0, float(np.max(np.abs(ev)))))
    return re_lo - pad * side, re_hi + pad * side, im_lo - pad * side, im_hi + pad * side


def sigma_min_grid(A: np.ndarray, region: Optional[Region] = None,
                   resolution: Optional[Tuple[int, int]] = None, threads: int = None) -> PseudospectrumGrid:
    region = region or default_region(A)
    n = settings.grid_points
    n_re, n_im = resolution or (n, n)
    re_min, re_max, im_min, im_max = region
    if n_re < 2 or n_im < 2:
        raise ValueError(f"resolution must be at least 2x2, got {n_re}x{n_im}")
    if not (re_max > re_min and im_max > im_min):
        raise ValueError(f"degenerate region {region}")
    re = np.linspace(re_min, re_max, n_re)
    im = np.linspace(im_min, im_max, n_im)
    threads = threads or settings.threads

    def row(y: float) -> np.ndarray:
        return np.array([sigma_min(A, complex(x, y)) for x in re])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, im))
    else:
        rows = [row(y) for y in im]
    logger.debug(f"sigma_min grid {n_re}x{n_im} over {region}")
    return PseudospectrumGrid(re=re, im=im, values=np.vstack(rows))


@dataclass
class PseudoMode:
    lam: complex
    sigma_min: float
    v: np.ndarray  # unit right singular vector


def pseudo_mode(A: np.ndarray, lam: complex = 0.0) -> PseudoMode:
    """Smallest right singular pair of A - lam: ||(A - lam) v|| = sigma_min."""
    try:
        _, s, vh = sla.svd(A - lam * np.eye(A.shape[0]))
    except (sla.LinAlgError, ValueError) as e:
        raise NumericalError(f"SVD failed at lambda={lam}: {e}", module=__name__) from e
    return PseudoMode(lam=complex(lam), sigma_min=float(s[-1]), v=vh[-1].conj())


def pseudo_abscissa(A: np.ndarray, eps: float, region: Optional[Region] = None,
                    refinement_tol: float = 1e-8, grid: Optional[PseudospectrumGrid] = None) -> float:
    """Lower bound on alpha_eps = max Re sigma_eps(A).

    Candidates are the eigenvalues and the grid points inside the eps-sublevel set;
    from the rightmost candidate the boundary is bracketed along Re at fixed Im and
    bisected to ``refinement_tol``.
    """
    grid = grid or sigma_min_grid(A, region)
    re_min, re_max, im_min, im_max = grid.region
    ev = sla.eigvals(A)
    inside = [(float(e.real), float(e.imag)) for e in ev
              if re_min <= e.real <= re_max and im_min <= e.imag <= im_max]
    ii, jj = np.nonzero(grid.values < eps)
    inside += [(float(grid.re[j]), float(grid.im[i])) for i, j in zip(ii, jj)]
    if not inside:
        raise NumericalError(f"eps={eps:.3e} below every grid value in {grid.region}; empty pseudospectrum",
                             module=__name__)
    lo, y = max(inside)

    step = max(grid.re[1] - grid.re[0], refinement_tol)
    hi = lo + step
    for _ in range(200):
        if sigma_min(A, complex(hi, y)) >= eps:
            break
        lo, hi = hi, hi + step
        step *= 2.0
    else:
        raise NumericalError("pseudospectral boundary not bracketed; region too small", module=__name__)

    while hi - lo > refinement_tol:
        mid = 0.5 * (lo + hi)
        if sigma_min(A, complex(mid, y)) < eps:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass
class TransientBound:
    epsilons: List[float]
    abscissas: List[float]
    bound: float  # max_eps alpha_eps / eps

    def as_dict(self) -> Dict[str, object]:
        return {"epsilons": self.epsilons, "abscissas": self.abscissas, "transient_bound": self.bound}


def transient_bound(A: np.ndarray, epsilons: Sequence[float] = DEFAULT_EPSILONS,
                    region: Optional[Region] = None, refinement_tol: float = 1e-10,
                    grid: Optional[PseudospectrumGrid] = None) -> TransientBound:
    """Best lower bound on sup_t ||e^{At}||_2 from alpha_eps / eps."""
    grid = grid or sigma_min_grid(A, region)
    abscissas = []
    for eps in epsilons:
        abscissas.append(pseudo_abscissa(A, eps, refinement_tol=refinement_tol, grid=grid))
    ratios = [a / e for a, e in zip(abscissas, epsilons)]
    return TransientBound(epsilons=list(epsilons), abscissas=abscissas, bound=float(max(ratios)))


def hermitian_part(X: np.ndarray) -> np.ndarray:
    return 0.5 * (X + X.conj().T)


def omega_constant(symbol: BlochSymbol, k_count: int = None) -> float:
    """Omega = max_k lambda_max(Herm(-iG(k))), the numerical abscissa of the bulk generator."""
    k_count = settings.k_count if k_count is None else k_count
    ks = 2 * np.pi * np.arange(k_count) / k_count
    return float(max(np.linalg.eigvalsh(hermitian_part(symbol.rapidity_at(k)))[-1] for k in ks))


def epsilon_contours(grid: PseudospectrumGrid, epsilons: Sequence[float] = DEFAULT_EPSILONS):
    """Marching-squares level lines of log10 sigma_min, one list of (n, 2) arrays per eps."""
    import contourpy  # ships with the optional matplotlib extra

    gen = contourpy.contour_generator(grid.re, grid.im, np.log10(np.maximum(grid.values, 1e-300)))
    return {float(eps): gen.lines(np.log10(eps)) for eps in epsilons}
