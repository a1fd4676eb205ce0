"""Nambu-space conventions shared by every other module.

Ordering: Phi = (a_1, a_1^dag, ..., a_N, a_N^dag), flattened index 2(site-1) + species.
A complex 2N-vector v stands for the linear form v^ = v^dag tau3 Phi.

Quadratures: x_j = (a_j + a_j^dag)/sqrt2, p_j = i(a_j^dag - a_j)/sqrt2, so [x_j, p_j] = i.
Quadrature coefficient vectors are interleaved the same way as Phi: (x_1, p_1, x_2, p_2, ...).
"""
import logging
from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache
from typing import Literal, Tuple

import numpy as np
import scipy.linalg as sla

from .config import settings
from .errors import StructureError

logger = logging.getLogger(__name__)

SQRT2 = np.sqrt(2.0)

_SIGMA = {
    1: np.array([[0, 1], [1, 0]], dtype=complex),
    2: np.array([[0, -1j], [1j, 0]], dtype=complex),
    3: np.array([[1, 0], [0, -1]], dtype=complex),
}


class Species(IntEnum):
    ANNIHILATION = 0
    CREATION = 1


@dataclass(frozen=True)
class NambuIndex:
    site: int  # 1-based
    species: Species

    @property
    def flat(self) -> int:
        return 2 * (self.site - 1) + int(self.species)

    @classmethod
    def from_flat(cls, index: int) -> "NambuIndex":
        return cls(site=index // 2 + 1, species=Species(index % 2))

    def partner(self) -> "NambuIndex":
        """Particle-hole partner (the tau1 image)."""
        return NambuIndex(self.site, Species(1 - int(self.species)))


@lru_cache(maxsize=128)
def _block_pauli_cached(j: int, N: int) -> np.ndarray:
    mat = np.kron(np.eye(N), _SIGMA[j])
    mat.setflags(write=False)
    return mat


def block_pauli(j: int, N: int) -> np.ndarray:
    """Return tau_j = 1_N (x) sigma_j as a read-only 2N x 2N array."""
    if j not in _SIGMA:
        raise StructureError(f"block Pauli index must be 1, 2 or 3, got {j}", module=__name__)
    if N < 1:
        raise StructureError(f"mode count must be >= 1, got {N}", module=__name__)
    return _block_pauli_cached(j, N)


def tau1_conj(v: np.ndarray) -> np.ndarray:
    """tau1 v* for a Nambu vector (swap each (a, a^dag) pair and conjugate)."""
    v = np.asarray(v)
    out = np.empty_like(v, dtype=complex)
    out[0::2] = np.conj(v[1::2])
    out[1::2] = np.conj(v[0::2])
    return out


def _max_abs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


@dataclass
class BdGPair:
    H: np.ndarray
    M: np.ndarray

    @property
    def N(self) -> int:
        return self.H.shape[0] // 2

    def validate(self, tol: float = None, psd_tol: float = None) -> "BdGPair":
        tol = settings.struct_tol if tol is None else tol
        psd_tol = settings.psd_tol if psd_tol is None else psd_tol
        H, M = self.H, self.M
        if H.ndim != 2 or H.shape[0] != H.shape[1] or H.shape[0] % 2 or H.shape != M.shape:
            raise StructureError(f"H and M must be matching 2N x 2N matrices, got {H.shape}, {M.shape}",
                                 module=__name__)
        t1 = block_pauli(1, self.N)
        scale = max(1.0, _max_abs(H), _max_abs(M))
        if _max_abs(H - H.conj().T) > tol * scale:
            raise StructureError("H is not Hermitian", module=__name__)
        if _max_abs(H - t1 @ H.conj() @ t1) > tol * scale:
            raise StructureError("H violates H = tau1 H* tau1", module=__name__)
        if _max_abs(M - M.conj().T) > tol * scale:
            raise StructureError("M is not Hermitian", module=__name__)
        lo = float(np.min(np.linalg.eigvalsh(M))) if M.size else 0.0
        if lo < -psd_tol * scale:
            raise StructureError(f"M is not positive-semidefinite (min eigenvalue {lo:.3e})", module=__name__)
        return self


@dataclass
class DynamicalMatrix:
    G: np.ndarray

    @property
    def N(self) -> int:
        return self.G.shape[0] // 2

    @property
    def rapidity_matrix(self) -> np.ndarray:
        """-iG, whose eigenvalues are the rapidities."""
        return -1j * self.G

    def structure_defect(self) -> float:
        t1 = block_pauli(1, self.N)
        return _max_abs(self.G + t1 @ self.G.conj() @ t1)

    def validate(self, tol: float = None) -> "DynamicalMatrix":
        tol = settings.struct_tol if tol is None else tol
        scale = max(1.0, _max_abs(self.G))
        defect = self.structure_defect()
        if defect > tol * scale:
            raise StructureError(f"G violates G = -tau1 G* tau1 (defect {defect:.3e})", module=__name__)
        return self


@dataclass
class ModeVector:
    v: np.ndarray
    hermitian: bool = False
    label: str = ""

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=complex)
        if self.hermitian and hermiticity_defect(self.v) > 1e-10 * max(1.0, np.linalg.norm(self.v)):
            raise StructureError(f"mode {self.label or '?'} flagged Hermitian but tau1 v* != -v",
                                 module=__name__)

    @property
    def N(self) -> int:
        return self.v.shape[0] // 2

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.v))

    def normalized(self) -> "ModeVector":
        n = self.norm
        if n == 0:
            raise StructureError("cannot normalize a zero mode vector", module=__name__)
        return ModeVector(self.v / n, hermitian=self.hermitian, label=self.label)

    def site_weights(self) -> np.ndarray:
        """|coefficient|^2 summed over the two Nambu slots of each site."""
        w = np.abs(self.v) ** 2
        return w[0::2] + w[1::2]


def hermiticity_defect(v: np.ndarray) -> float:
    """max |tau1 v* + v|: zero exactly for Hermitian linear forms."""
    return _max_abs(tau1_conj(v) + np.asarray(v))


def dynamical_matrix(bdg: BdGPair) -> DynamicalMatrix:
    """G = tau3 H - (i/2) tau3 (M - tau1 M^T tau1)."""
    bdg.validate()
    N = bdg.N
    t1, t3 = block_pauli(1, N), block_pauli(3, N)
    G = t3 @ bdg.H - 0.5j * t3 @ (bdg.M - t1 @ bdg.M.T @ t1)
    return DynamicalMatrix(G).validate()


def adjoint_generator(dm: DynamicalMatrix) -> DynamicalMatrix:
    """G~ = tau3 G^dag tau3, the generator acting on linear-form coefficients."""
    t3 = block_pauli(3, dm.N)
    return DynamicalMatrix(t3 @ dm.G.conj().T @ t3)


@lru_cache(maxsize=64)
def _quadrature_basis_cached(N: int) -> np.ndarray:
    cell = np.array([[1.0, 1j], [-1.0, 1j]], dtype=complex) / SQRT2  # columns: x, p
    T = np.kron(np.eye(N), cell)
    T.setflags(write=False)
    return T


def quadrature_basis(N: int) -> np.ndarray:
    """Unitary T whose columns are the Nambu vectors of x_1, p_1, ..., x_N, p_N."""
    if N < 1:
        raise StructureError(f"mode count must be >= 1, got {N}", module=__name__)
    return _quadrature_basis_cached(N)


def quadrature_change(v: np.ndarray, direction: Literal["to_xp", "to_nambu"]) -> np.ndarray:
    """Change between Nambu coefficients and quadrature coefficients (x_1, p_1, ...).

    Hermitian forms map to real quadrature vectors; the change is unitary.
    """
    v = np.asarray(v, dtype=complex)
    T = quadrature_basis(v.shape[0] // 2)
    if direction == "to_xp":
        return T.conj().T @ v
    if direction == "to_nambu":
        return T @ v
    raise ValueError(f"unknown direction {direction!r}")


def x_form(site: int, N: int) -> ModeVector:
    return ModeVector(quadrature_basis(N)[:, 2 * (site - 1)].copy(), hermitian=True, label=f"x_{site}")


def p_form(site: int, N: int) -> ModeVector:
    return ModeVector(quadrature_basis(N)[:, 2 * (site - 1) + 1].copy(), hermitian=True, label=f"p_{site}")


def form_from_quadratures(x_coeffs: np.ndarray, p_coeffs: np.ndarray, label: str = "") -> ModeVector:
    """Build sum_j x_coeffs[j] x_j + p_coeffs[j] p_j as a ModeVector."""
    x_coeffs = np.asarray(x_coeffs)
    p_coeffs = np.asarray(p_coeffs)
    q = np.empty(2 * x_coeffs.shape[0], dtype=complex)
    q[0::2] = x_coeffs
    q[1::2] = p_coeffs
    hermitian = bool(np.all(np.isreal(q)))
    return ModeVector(quadrature_change(q, "to_nambu"), hermitian=hermitian, label=label)


def hermitize(v: np.ndarray) -> np.ndarray:
    """Project v onto the Hermitian-form subspace after removing its global phase.

    The phase is chosen to maximize the norm of the Hermitian part, then the
    result is renormalized to the norm of v.
    """
    v = np.asarray(v, dtype=complex)
    q = quadrature_change(v, "to_xp")
    z = np.sum(q * q)
    if abs(z) > 0:
        q = q * np.exp(-0.5j * np.angle(z))
    real = q.real
    n = np.linalg.norm(real)
    if n == 0:
        raise StructureError("vector has no Hermitian component", module=__name__)
    return quadrature_change(real * (np.linalg.norm(v) / n), "to_nambu")


def form_commutator(v: np.ndarray, w: np.ndarray) -> complex:
    """c-number [v^, w^] = -i v^dag tau2 w* from [a_i, a_j^dag] = delta_ij."""
    v = np.asarray(v, dtype=complex)
    w = np.asarray(w, dtype=complex)
    t2 = block_pauli(2, v.shape[0] // 2)
    return complex(-1j * (v.conj() @ t2 @ w.conj()))


def expectation(v: np.ndarray, m: np.ndarray) -> complex:
    """<v^> for first moments m = <Phi>."""
    v = np.asarray(v, dtype=complex)
    s3 = np.tile([1.0, -1.0], v.shape[0] // 2)
    return complex(v.conj() @ (s3 * m))


def mean_from_quadratures(r: np.ndarray) -> np.ndarray:
    """Nambu mean <Phi> from real quadrature means r = (<x_1>, <p_1>, ...)."""
    r = np.asarray(r, dtype=float)
    s3 = np.tile([1.0, -1.0], r.shape[0] // 2)
    return s3 * (quadrature_basis(r.shape[0] // 2) @ r)


def quadrature_generators(dm: DynamicalMatrix) -> Tuple[np.ndarray, np.ndarray]:
    """Real matrices of the conserved and symmetry defect maps on Hermitian forms.

    Returns (C, Y) with C = T^dag (i G~) T and Y = T^dag (-i G) T, so that for a
    real quadrature vector q with v = T q: ||G~ v|| = ||C q|| and ||G v|| = ||Y q||.
    """
    T = quadrature_basis(dm.N)
    Th = T.conj().T
    C = Th @ (1j * adjoint_generator(dm).G) @ T
    Y = Th @ (-1j * dm.G) @ T
    scale = max(1.0, _max_abs(dm.G))
    for name, mat in (("C", C), ("Y", Y)):
        if _max_abs(mat.imag) > 1e-9 * scale:
            raise StructureError(f"quadrature generator {name} is not real; G lacks Nambu structure",
                                 module=__name__)
    return C.real, Y.real


def two_norm(A: np.ndarray) -> float:
    return float(sla.norm(A, 2))


def is_psd(A: np.ndarray, tol: float = None) -> bool:
    tol = settings.psd_tol if tol is None else tol
    return bool(np.min(np.linalg.eigvalsh(0.5 * (A + A.conj().T))) >= -tol)
