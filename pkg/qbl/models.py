"""Chain models: ModelSpec schema, BdG construction, disorder and the Bloch symbol.

Model 1 is the bosonic Kitaev chain

    H = (i/2) sum_j (J a_{j+1}^dag a_j + Delta a_{j+1}^dag a_j^dag) + (i mu/2) sum_j (a_j^dag)^2 + H.c.

with onsite loss L_j = sqrt(2 kappa) a_j.  Model 2 adds next-nearest-neighbor damping
L_j = sqrt(Gamma) (a_j + e^{i phi} a_{j+2}) with phi = pi unless set.  The pair a_j - a_{j+2}
leaves the k = 0 gain of Model 1 in place, so the PBC chain stays unstable; at phi = 0 and
Gamma = 0.12 the same loss quenches it and the default chain is unconditionally stable.
The ``custom`` family takes the Hamiltonian and the extra Lindblad operators from
translation-invariant stencils.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .core import BdGPair, DynamicalMatrix, dynamical_matrix
from .errors import SpecError

logger = logging.getLogger(__name__)

ComplexPair = Tuple[float, float]  # (re, im) in JSON


def _c(pair: ComplexPair) -> complex:
    return complex(pair[0], pair[1])


class DisorderSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    target: List[Literal["J", "mu", "kappa"]] = Field(default_factory=lambda: ["mu"])
    W: float = Field(0.0, ge=0.0)
    seed: int = 0


class HamiltonianTerm(BaseModel):
    """2x2 block coupling site j to site j+r in the Nambu Hamiltonian matrix.

    For r > 0 the Hermitian-conjugate block at -r is added automatically; the
    r = 0 block must itself be Hermitian.
    """
    model_config = ConfigDict(extra="forbid")

    r: int = Field(ge=0, le=2)
    block: List[List[ComplexPair]]


class LindbladCoefficient(BaseModel):
    model_config = ConfigDict(extra="forbid")

    r: int = Field(ge=0, le=2)
    a: ComplexPair = (0.0, 0.0)
    adag: ComplexPair = (0.0, 0.0)


class LindbladStencil(BaseModel):
    """One translation-invariant family L_j = sum_r (c_a a_{j+r} + c_adag a_{j+r}^dag)."""
    model_config = ConfigDict(extra="forbid")

    terms: List[LindbladCoefficient]


class ModelSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    family: Literal["model1", "model2", "custom"] = "model1"
    J: float = Field(2.0, ge=0.0)
    Delta: float = Field(0.5, ge=0.0)
    mu: float = 0.0
    kappa: float = Field(0.3, gt=0.0)
    Gamma: float = Field(0.0, ge=0.0)
    phi: Optional[float] = None
    N: int = Field(25, ge=2)
    bc: Literal["PBC", "OBC"] = "OBC"
    disorder: Optional[DisorderSpec] = None
    hamiltonian_stencil: Optional[List[HamiltonianTerm]] = None
    lindblad_stencil: Optional[List[LindbladStencil]] = None

    @model_validator(mode="after")
    def _check_physics(self) -> "ModelSpec":
        if self.Delta > self.J:
            raise ValueError(f"pairing Delta={self.Delta} exceeds hopping J={self.J}")
        if self.family == "custom" and self.hamiltonian_stencil is None:
            raise ValueError("family 'custom' requires hamiltonian_stencil")
        if self.family != "custom" and (self.hamiltonian_stencil or self.lindblad_stencil):
            raise ValueError("stencils are only accepted for family 'custom'")
        return self

    def with_(self, **changes) -> "ModelSpec":
        """Validated copy with fields replaced."""
        data = self.model_dump()
        data.update(changes)
        return ModelSpec.model_validate(data)

    @property
    def nnn_phase(self) -> float:
        """Relative phase of the Model 2 damping pair; pi when not given."""
        return np.pi if self.phi is None else self.phi

    @property
    def translation_invariant(self) -> bool:
        return self.disorder is None or self.disorder.W == 0.0


@dataclass
class SiteParameters:
    """Bond- and site-resolved couplings (0-based)."""
    J: np.ndarray      # per bond j -> j+1
    Delta: np.ndarray  # per bond
    mu: np.ndarray     # per site
    kappa: np.ndarray  # per site


def _bonds(N: int, bc: str, r: int = 1) -> List[Tuple[int, int]]:
    if bc == "PBC":
        return [(j, (j + r) % N) for j in range(N)]
    return [(j, j + r) for j in range(N - r)]


def clean_parameters(spec: ModelSpec) -> SiteParameters:
    n_bonds = len(_bonds(spec.N, spec.bc))
    return SiteParameters(
        J=np.full(n_bonds, spec.J),
        Delta=np.full(n_bonds, spec.Delta),
        mu=np.full(spec.N, spec.mu),
        kappa=np.full(spec.N, spec.kappa),
    )


def disordered_parameters(spec: ModelSpec, seed: Optional[int] = None) -> SiteParameters:
    """Uniform perturbations u_j in [-W, W] on each targeted parameter.

    Draw order is fixed (J, mu, kappa) so a given seed always gives the same chain.
    """
    if spec.disorder is None:
        raise SpecError("disorder requested but ModelSpec.disorder is absent", module=__name__)
    dis = spec.disorder
    rng = np.random.default_rng(dis.seed if seed is None else seed)
    params = clean_parameters(spec)
    for name in ("J", "mu", "kappa"):
        values = getattr(params, name)
        shift = rng.uniform(-dis.W, dis.W, size=values.shape)
        if name in dis.target:
            setattr(params, name, values + shift)
    if np.any(params.kappa <= 0):
        raise SpecError(f"disorder W={dis.W} drives some kappa_j <= 0", module=__name__)
    return params


def _add_hopping(H: np.ndarray, i: int, j: int, h: complex) -> None:
    """h a_i^dag a_j + H.c."""
    H[2 * i, 2 * j] += h
    H[2 * j, 2 * i] += np.conj(h)
    H[2 * j + 1, 2 * i + 1] += h
    H[2 * i + 1, 2 * j + 1] += np.conj(h)


def _add_pairing(H: np.ndarray, i: int, j: int, g: complex) -> None:
    """g a_i^dag a_j^dag + H.c."""
    H[2 * i, 2 * j + 1] += g
    H[2 * j, 2 * i + 1] += g
    H[2 * j + 1, 2 * i] += np.conj(g)
    H[2 * i + 1, 2 * j] += np.conj(g)


def build_hamiltonian(spec: ModelSpec, params: Optional[SiteParameters] = None) -> np.ndarray:
    """Nambu Hamiltonian matrix with H_sys = (1/2) Phi^dag H Phi."""
    N = spec.N
    H = np.zeros((2 * N, 2 * N), dtype=complex)
    if spec.family == "custom":
        for term in spec.hamiltonian_stencil:
            block = np.array([[_c(e) for e in row] for row in term.block], dtype=complex)
            pairs = [(j, j) for j in range(N)] if term.r == 0 else _bonds(N, spec.bc, term.r)
            for i, j in pairs:
                H[2 * i:2 * i + 2, 2 * j:2 * j + 2] += block
                if term.r > 0:
                    H[2 * j:2 * j + 2, 2 * i:2 * i + 2] += block.conj().T
        return H

    params = params or clean_parameters(spec)
    for b, (j, jp) in enumerate(_bonds(N, spec.bc)):
        _add_hopping(H, jp, j, 0.5j * params.J[b])
        _add_pairing(H, jp, j, 0.5j * params.Delta[b])
    for j in range(N):
        _add_pairing(H, j, j, 0.5j * params.mu[j])
    return H


def lindblad_vectors(spec: ModelSpec, params: Optional[SiteParameters] = None) -> List[np.ndarray]:
    """Coefficient vectors l^k with L_k = sum_j l^k_j Phi_j."""
    N = spec.N
    params = params or clean_parameters(spec)
    out = []
    for j in range(N):
        ell = np.zeros(2 * N, dtype=complex)
        ell[2 * j] = np.sqrt(2.0 * params.kappa[j])
        out.append(ell)
    if spec.family == "model2" and spec.Gamma > 0:
        phase = np.exp(1j * spec.nnn_phase)
        for j, j2 in _bonds(N, spec.bc, 2):
            ell = np.zeros(2 * N, dtype=complex)
            ell[2 * j] += np.sqrt(spec.Gamma)
            ell[2 * j2] += np.sqrt(spec.Gamma) * phase
            out.append(ell)
    if spec.family == "custom" and spec.lindblad_stencil:
        for stencil in spec.lindblad_stencil:
            span = max(t.r for t in stencil.terms)
            starts = range(N) if spec.bc == "PBC" else range(N - span)
            for j in starts:
                ell = np.zeros(2 * N, dtype=complex)
                for t in stencil.terms:
                    site = (j + t.r) % N
                    ell[2 * site] += _c(t.a)
                    ell[2 * site + 1] += _c(t.adag)
                out.append(ell)
    return out


def build_bath(spec: ModelSpec, params: Optional[SiteParameters] = None) -> np.ndarray:
    """M_ij = sum_k (l^k_i)* l^k_j."""
    N = spec.N
    M = np.zeros((2 * N, 2 * N), dtype=complex)
    for ell in lindblad_vectors(spec, params):
        M += np.outer(ell.conj(), ell)
    return M


def build_bdg(spec: ModelSpec) -> BdGPair:
    """BdG pair for the spec, disordered when a non-trivial DisorderSpec is present."""
    if not spec.translation_invariant:
        return apply_disorder(spec)
    return BdGPair(build_hamiltonian(spec), build_bath(spec)).validate()


def apply_disorder(spec: ModelSpec, seed: Optional[int] = None) -> BdGPair:
    params = disordered_parameters(spec, seed)
    bdg = BdGPair(build_hamiltonian(spec, params), build_bath(spec, params)).validate()
    logger.debug(f"Disordered chain N={spec.N}, W={spec.disorder.W}, seed={spec.disorder.seed if seed is None else seed}")
    return bdg


def build_dynamical(spec: ModelSpec) -> DynamicalMatrix:
    return dynamical_matrix(build_bdg(spec))


@dataclass
class BlochSymbol:
    """G(k) = sum_r G_r e^{ikr}, with G_r the 2x2 block coupling site j to site j+r."""
    blocks: Dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def r_max(self) -> int:
        return max((abs(r) for r in self.blocks), default=0)

    def at(self, k: float) -> np.ndarray:
        out = np.zeros((2, 2), dtype=complex)
        for r, block in self.blocks.items():
            out += block * np.exp(1j * k * r)
        return out

    def rapidity_at(self, k: float) -> np.ndarray:
        return -1j * self.at(k)

    def circulant(self, N: int) -> np.ndarray:
        """PBC dynamical matrix of an N-site ring; wrapped shifts accumulate."""
        G = np.zeros((2 * N, 2 * N), dtype=complex)
        for i in range(N):
            for r, block in self.blocks.items():
                j = (i + r) % N
                G[2 * i:2 * i + 2, 2 * j:2 * j + 2] += block
        return G

    def toeplitz(self, N: int) -> np.ndarray:
        """OBC truncation of the bi-infinite block-Toeplitz operator."""
        G = np.zeros((2 * N, 2 * N), dtype=complex)
        for i in range(N):
            for r, block in self.blocks.items():
                j = i + r
                if 0 <= j < N:
                    G[2 * i:2 * i + 2, 2 * j:2 * j + 2] += block
        return G


def _stencil_range(spec: ModelSpec) -> int:
    if spec.family == "model1":
        return 1
    if spec.family == "model2":
        return 2
    r_h = max((t.r for t in spec.hamiltonian_stencil), default=0)
    r_l = max((max(t.r for t in s.terms) for s in (spec.lindblad_stencil or [])), default=0)
    return max(r_h, r_l, 1)


def bloch_symbol(spec: ModelSpec) -> BlochSymbol:
    """Extract {G_r} from the PBC dynamical matrix of a ring long enough to avoid aliasing."""
    if not spec.translation_invariant:
        raise SpecError("Bloch symbol requires a translation-invariant (disorder-free) spec", module=__name__)
    r_bound = _stencil_range(spec)
    n_ref = 2 * r_bound + 3
    ring = spec.with_(bc="PBC", N=n_ref, disorder=None)
    G = build_dynamical(ring).G
    blocks = {}
    for r in range(-r_bound, r_bound + 1):
        j = r % n_ref
        block = G[0:2, 2 * j:2 * j + 2].copy()
        if np.any(block != 0):
            blocks[r] = block
    return BlochSymbol(blocks)


def model_label(spec: ModelSpec) -> str:
    return f"{spec.family}(J={spec.J:g}, Delta={spec.Delta:g}, mu={spec.mu:g}, kappa={spec.kappa:g}, " \
           f"Gamma={spec.Gamma:g}, N={spec.N}, {spec.bc})"


def specs_over_N(spec: ModelSpec, Ns: Sequence[int]) -> List[ModelSpec]:
    return [spec.with_(N=int(n)) for n in Ns]
