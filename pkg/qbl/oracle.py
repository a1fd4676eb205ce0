"""Truncated-Fock Lindblad oracle for chains of up to three modes.

Works directly with density matrices, independent of the moment equations, so it can
certify them: the Hamiltonian is 1/2 Phi^dag H Phi with truncated ladder matrices and the
jump operators come from the eigendecomposition of the bath matrix M.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from pydantic import BaseModel, Field
from scipy.integrate import solve_ivp

from .config import settings
from .core import BdGPair, ModeVector
from .errors import NumericalError, StructureError
from .models import ModelSpec, build_bdg

logger = logging.getLogger(__name__)

System = Union[ModelSpec, BdGPair]
Initial = Union[np.ndarray, Callable[["FockConfig"], np.ndarray]]


class FockConfig(BaseModel):
    """Per-mode photon cutoff; the Hilbert dimension is (n_max + 1)^N."""

    N: int = Field(ge=1, le=3)
    n_max: int = Field(default_factory=lambda: settings.fock_nmax, ge=1)

    @property
    def local_dim(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return self.local_dim ** self.N

    def check_cap(self, cap: Optional[int] = None) -> "FockConfig":
        cap = settings.fock_dim_cap if cap is None else cap
        if self.dim > cap:
            raise NumericalError(f"Fock dimension {self.dim} exceeds cap {cap}", module=__name__)
        return self

    def doubled(self) -> "FockConfig":
        return FockConfig(N=self.N, n_max=2 * self.n_max)


def _bdg(system: System) -> BdGPair:
    if isinstance(system, BdGPair):
        return system.validate()
    if system.N > 3:
        raise StructureError(f"the Fock oracle handles N <= 3 modes, got N={system.N}", module=__name__)
    return build_bdg(system)


@dataclass
class FockOperators:
    fock: FockConfig
    phi: List[sp.csr_matrix]      # a_1, a_1^dag, a_2, a_2^dag, ...
    shell: np.ndarray             # basis indices with some mode at the cutoff

    @property
    def dim(self) -> int:
        return self.fock.dim

    def linear_form(self, v) -> sp.csr_matrix:
        """Operator v^ = v^dag tau3 Phi."""
        v = v.v if isinstance(v, ModeVector) else np.asarray(v, dtype=complex)
        s3 = np.tile([1.0, -1.0], self.fock.N)
        out = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        for coeff, op in zip(v.conj() * s3, self.phi):
            if coeff != 0:
                out = out + coeff * op
        return out


def fock_operators(fock: FockConfig) -> FockOperators:
    d = fock.local_dim
    a = sp.diags(np.sqrt(np.arange(1, d, dtype=float)), 1, format="csr", dtype=complex)
    eye = sp.identity(d, format="csr", dtype=complex)
    phi = []
    for j in range(fock.N):
        factors = [eye] * fock.N
        factors[j] = a
        op = factors[0]
        for f in factors[1:]:
            op = sp.kron(op, f, format="csr")
        phi.extend([op, op.conj().T.tocsr()])
    occupations = np.array(np.unravel_index(np.arange(fock.dim), (d,) * fock.N))
    shell = np.nonzero(np.any(occupations == fock.n_max, axis=0))[0]
    return FockOperators(fock=fock, phi=phi, shell=shell)


def hamiltonian_operator(H: np.ndarray, ops: FockOperators) -> sp.csr_matrix:
    """1/2 sum_ij Phi_i^dag H_ij Phi_j."""
    out = sp.csr_matrix((ops.dim, ops.dim), dtype=complex)
    for i, Pi in enumerate(ops.phi):
        Pi_dag = Pi.conj().T
        for j, Pj in enumerate(ops.phi):
            if H[i, j] != 0:
                out = out + 0.5 * H[i, j] * (Pi_dag @ Pj)
    return out.tocsr()


def jump_operators(M: np.ndarray, ops: FockOperators, tol: float = 1e-14) -> List[sp.csr_matrix]:
    """L = sum_j ell_j Phi_j with M = sum ell* ell^T from the eigendecomposition of M."""
    lam, U = np.linalg.eigh(0.5 * (M + M.conj().T))
    jumps = []
    for k in range(lam.shape[0]):
        if lam[k] <= tol:
            continue
        ell = np.sqrt(lam[k]) * U[:, k].conj()
        L = sp.csr_matrix((ops.dim, ops.dim), dtype=complex)
        for c, op in zip(ell, ops.phi):
            if c != 0:
                L = L + c * op
        jumps.append(L.tocsr())
    return jumps


@dataclass
class LindbladModel:
    ops: FockOperators
    H: sp.csr_matrix
    jumps: List[sp.csr_matrix]
    _LdL: sp.csr_matrix = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.ops.dim

    @property
    def LdL(self) -> sp.csr_matrix:
        if self._LdL is None:
            acc = sp.csr_matrix((self.dim, self.dim), dtype=complex)
            for L in self.jumps:
                acc = acc + L.conj().T @ L
            self._LdL = acc.tocsr()
        return self._LdL

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """L(rho) = -i[H, rho] + sum (L rho L^dag - 1/2 {L^dag L, rho})."""
        out = -1j * (self.H @ rho - (self.H.conj().T @ rho.conj().T).conj().T)
        for L in self.jumps:
            out = out + L @ (L @ rho.conj().T).conj().T
        K = self.LdL @ rho
        return out - 0.5 * (K + (self.LdL @ rho.conj().T).conj().T)


def lindblad_model(system: System, fock: FockConfig) -> LindbladModel:
    bdg = _bdg(system)
    if bdg.N != fock.N:
        raise StructureError(f"system has {bdg.N} modes but FockConfig has N={fock.N}", module=__name__)
    fock.check_cap()
    ops = fock_operators(fock)
    return LindbladModel(ops=ops, H=hamiltonian_operator(bdg.H, ops), jumps=jump_operators(bdg.M, ops))


def build_superoperator(system: System, fock: FockConfig) -> sp.csr_matrix:
    """Row-major vectorized Liouvillian, vec(A rho B) = (A kron B^T) vec(rho)."""
    model = lindblad_model(system, fock)
    d = model.dim
    eye = sp.identity(d, format="csr", dtype=complex)
    H = model.H
    S = -1j * (sp.kron(H, eye) - sp.kron(eye, H.T))
    for L in model.jumps:
        S = S + sp.kron(L, L.conj())
    LdL = model.LdL
    S = S - 0.5 * (sp.kron(LdL, eye) + sp.kron(eye, LdL.T))
    S = S.tocsr()
    residual = trace_residual(S, d)
    if residual > 1e-12 * max(1.0, float(abs(S).max())):
        raise StructureError(f"superoperator is not trace preserving (residual {residual:.2e})", module=__name__)
    logger.debug(f"Superoperator: dim {d}, nnz {S.nnz}, trace residual {residual:.1e}")
    return S


def trace_residual(S: sp.spmatrix, d: int) -> float:
    """max |vec(I)^T S|, the trace-preservation defect."""
    tr = np.zeros(d * d, dtype=complex)
    tr[np.arange(d) * (d + 1)] = 1.0
    return float(np.max(np.abs(S.T @ tr)))


def vacuum_state(fock: FockConfig) -> np.ndarray:
    rho = np.zeros((fock.dim, fock.dim), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def coherent_state(fock: FockConfig, alphas: Sequence[complex]) -> np.ndarray:
    """Product coherent state truncated at n_max and renormalized."""
    if len(alphas) != fock.N:
        raise ValueError(f"need {fock.N} amplitudes, got {len(alphas)}")
    n = np.arange(fock.local_dim)
    log_fact = np.cumsum(np.log(np.maximum(n, 1)))
    psi = np.ones(1, dtype=complex)
    for alpha in alphas:
        local = np.exp(-0.5 * abs(alpha) ** 2) * np.power(complex(alpha), n) / np.exp(0.5 * log_fact)
        psi = np.kron(psi, local)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def moments(rho: np.ndarray, ops: FockOperators) -> Tuple[np.ndarray, np.ndarray]:
    """(<Phi_i>, <Phi_i Phi_j^dag>) of a density matrix."""
    n = len(ops.phi)
    m = np.array([np.sum(op.multiply(rho.T)) for op in ops.phi], dtype=complex)
    Q = np.empty((n, n), dtype=complex)
    for i, Pi in enumerate(ops.phi):
        for j, Pj in enumerate(ops.phi):
            Q[i, j] = np.sum((Pi @ Pj.conj().T).multiply(rho.T))
    return m, Q


def leakage(rho: np.ndarray, ops: FockOperators) -> float:
    """Population on basis states with at least one mode at the cutoff."""
    return float(np.sum(np.real(np.diag(rho))[ops.shell]))


@dataclass
class OracleTrajectory:
    times: np.ndarray
    m: np.ndarray                  # (len(times), 2N)
    Q: np.ndarray                  # (len(times), 2N, 2N)
    leakage: float                 # max over the grid
    min_eigenvalue: float
    trace_error: float
    fock: FockConfig

    def as_dict(self) -> Dict[str, float]:
        return {"n_max": self.fock.n_max, "leakage": self.leakage,
                "min_eigenvalue": self.min_eigenvalue, "trace_error": self.trace_error}


def _integrate(model: LindbladModel, X0: np.ndarray, times: np.ndarray, rtol: float, atol: float) -> np.ndarray:
    d = model.dim

    def rhs(_t, y):
        return model.apply(y.reshape(d, d)).ravel()

    sol = solve_ivp(rhs, (float(times[0]), float(times[-1])), X0.ravel(), t_eval=times,
                    method="RK45", rtol=rtol, atol=atol)
    if sol.status < 0:
        t_fail = float(sol.t[-1]) if sol.t.size else float(times[0])
        raise NumericalError(f"oracle integration failed at t={t_fail:.4g}: {sol.message}", module=__name__)
    return sol.y.T.reshape(-1, d, d)


def _run_moments(system: System, fock: FockConfig, rho0: np.ndarray, times: np.ndarray,
                 rtol: float, atol: float) -> OracleTrajectory:
    model = lindblad_model(system, fock)
    rhos = _integrate(model, rho0, times, rtol, atol)
    ms, Qs, leaks, mins, traces = [], [], [], [], []
    for rho in rhos:
        m, Q = moments(rho, model.ops)
        ms.append(m)
        Qs.append(Q)
        leaks.append(leakage(rho, model.ops))
        mins.append(float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]))
        traces.append(abs(np.trace(rho) - 1.0))
    return OracleTrajectory(times=times, m=np.array(ms), Q=np.array(Qs), leakage=max(leaks),
                            min_eigenvalue=min(mins), trace_error=max(traces), fock=fock)


def oracle_moments(system: System, fock: FockConfig, initial: Initial, times: Sequence[float],
                   rtol: float = 1e-10, atol: float = 1e-12, adaptive: bool = True) -> OracleTrajectory:
    """Integrate rho' = L(rho) and read off <Phi> and <Phi Phi^dag> on ``times``.

    With a callable ``initial`` (FockConfig -> rho0) the cutoff is doubled until the
    leakage criterion passes or the dimension cap trips.
    """
    times = np.asarray(times, dtype=float)
    tol = settings.leakage_tol
    while True:
        rho0 = initial(fock) if callable(initial) else np.asarray(initial, dtype=complex)
        traj = _run_moments(system, fock, rho0, times, rtol, atol)
        if traj.leakage <= tol:
            break
        if not (adaptive and callable(initial)):
            raise NumericalError(f"cutoff leakage {traj.leakage:.2e} exceeds {tol:.1e} at n_max={fock.n_max}",
                                 module=__name__)
        nxt = fock.doubled()
        if nxt.dim > settings.fock_dim_cap:
            raise NumericalError(f"leakage {traj.leakage:.2e} at n_max={fock.n_max}; doubling exceeds the "
                                 f"dimension cap", module=__name__)
        logger.info(f"Oracle leakage {traj.leakage:.2e} at n_max={fock.n_max}; retrying with n_max={nxt.n_max}")
        fock = nxt
    if traj.min_eigenvalue < -1e-8 or traj.trace_error > 1e-9:
        logger.warning(f"Oracle state drifted: min eigenvalue {traj.min_eigenvalue:.2e}, "
                       f"trace error {traj.trace_error:.2e}")
    return traj


def oracle_steady_state(system: System, fock: FockConfig) -> np.ndarray:
    """Null vector of the superoperator with one row replaced by the trace condition."""
    S = build_superoperator(system, fock).tolil()
    d = fock.dim
    row = np.zeros(d * d, dtype=complex)
    row[np.arange(d) * (d + 1)] = 1.0
    S[0, :] = row
    b = np.zeros(d * d, dtype=complex)
    b[0] = 1.0
    try:
        x = spla.spsolve(S.tocsc(), b)
    except RuntimeError as e:
        raise NumericalError(f"steady-state solve failed: {e}", module=__name__) from e
    rho = x.reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho)
    ops = fock_operators(fock)
    leak = leakage(rho, ops)
    if leak > settings.leakage_tol:
        raise NumericalError(f"steady-state cutoff leakage {leak:.2e} at n_max={fock.n_max}", module=__name__)
    return rho


def liouvillian_spectrum(system: System, fock: FockConfig, k: Optional[int] = None) -> np.ndarray:
    """Liouvillian eigenvalues sorted by decreasing real part; ``k`` nearest 0 via shift-invert."""
    S = build_superoperator(system, fock)
    if k is None:
        if S.shape[0] > settings.fock_dim_cap:
            raise NumericalError(f"dense spectrum of a {S.shape[0]}-dimensional superoperator; pass k",
                                 module=__name__)
        ev = sla.eigvals(S.toarray())
    else:
        ev = spla.eigs(S.tocsc(), k=k, sigma=1e-3, which="LM", return_eigenvectors=False)
    return ev[np.argsort(-ev.real, kind="stable")]


def weyl_displace(fock: FockConfig, v, theta: float, rho: np.ndarray) -> np.ndarray:
    """e^{-i theta g} rho e^{i theta g} for the linear form g = v^."""
    ops = fock_operators(fock)
    g = ops.linear_form(v).toarray()
    U = sla.expm(-1j * theta * g)
    return U @ rho @ U.conj().T


def oracle_correlator(system: System, fock: FockConfig, alpha, beta, taus: Sequence[float],
                      rho_ss: Optional[np.ndarray] = None, rtol: float = 1e-10, atol: float = 1e-12) -> np.ndarray:
    """C(inf, tau) = tr(alpha^ e^{L tau}(beta^dag rho_ss)) by the quantum regression theorem."""
    model = lindblad_model(system, fock)
    rho_ss = oracle_steady_state(system, fock) if rho_ss is None else rho_ss
    A = model.ops.linear_form(alpha)
    B_dag = model.ops.linear_form(beta).conj().T
    X0 = np.asarray(B_dag @ rho_ss)
    taus = np.asarray(taus, dtype=float)
    Xs = _integrate(model, X0, taus, rtol, atol)
    return np.array([np.sum(A.multiply(X.T)) for X in Xs])


def state_moments(fock: FockConfig, rho: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return moments(rho, fock_operators(fock))


def commutator_check(fock: FockConfig, v, w) -> complex:
    """[v^, w^] evaluated in the low-photon block (away from the cutoff)."""
    ops = fock_operators(fock)
    V, W = ops.linear_form(v), ops.linear_form(w)
    C = (V @ W - W @ V).toarray()
    return complex(C[0, 0])
