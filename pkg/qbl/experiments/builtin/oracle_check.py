"""Convention check — moment equations against the truncated-Fock oracle on a short chain."""
import logging

import numpy as np

from ...core import dynamical_matrix, form_commutator, p_form, x_form
from ...dynamics import evolve_covariance, propagate_mean, steady_state
from ...models import ModelSpec, build_bdg
from ...modes import quasi_steady_state
from ...oracle import (
    FockConfig,
    build_superoperator,
    coherent_state,
    commutator_check,
    oracle_correlator,
    oracle_moments,
    oracle_steady_state,
    state_moments,
    trace_residual,
    weyl_displace,
)
from ...response import correlator_trace
from ..registry import ExperimentParam, ExperimentResult, Table, register_experiment

logger = logging.getLogger(__name__)


@register_experiment(
    "oracle-check",
    description="Pass/fail report of moment dynamics, steady state, Weyl shift and correlator against the Fock oracle",
    params=[
        ExperimentParam("N", "int", "modes (1-3 for the oracle; model1 needs 2-3)", default=2),
        ExperimentParam("n_max", "int", "initial photon cutoff", default=8),
        ExperimentParam("alphas", "list", "coherent amplitudes [re, im] per mode", default=[[0.3, 0.0], [0.0, -0.2]]),
        ExperimentParam("theta", "float", "Weyl displacement along x_1", default=0.1),
        ExperimentParam("n_times", "int", "time samples over [0, 5/kappa]", default=26),
        ExperimentParam("tol", "float", "acceptance tolerance", default=1e-6),
    ],
    category="oracle",
)
def oracle_check(spec: ModelSpec, ctx=None, N: int = 2, n_max: int = 8, alphas=(), theta: float = 0.1,
                 n_times: int = 26, tol: float = 1e-6) -> ExperimentResult:
    small = spec.with_(N=N, bc="OBC", disorder=None)
    fock = FockConfig(N=N, n_max=n_max)
    bdg = build_bdg(small)
    dm = dynamical_matrix(bdg)
    amps = [complex(a[0], a[1]) for a in alphas][:N]
    amps += [0j] * (N - len(amps))
    times = np.linspace(0.0, 5.0 / small.kappa, n_times)

    checks = Table(["check", "error", "tolerance", "passed"])

    def record(name: str, error: float, bound: float) -> None:
        checks.add(name, float(error), bound, bool(error <= bound))
        logger.info(f"Oracle check {name}: error {error:.2e} (tol {bound:.0e})")

    S = build_superoperator(small, fock)
    record("trace_preservation", trace_residual(S, fock.dim), 1e-12)
    record("canonical_commutator",
           abs(commutator_check(fock, x_form(1, N), p_form(1, N)) - form_commutator(x_form(1, N).v, p_form(1, N).v)),
           1e-12)

    traj = oracle_moments(small, fock, lambda f: coherent_state(f, amps), times)
    ms = propagate_mean(dm, traj.m[0], times)
    Qs = evolve_covariance(dm, bdg.M, traj.Q[0], times)
    record("mean_trajectory", float(np.max(np.abs(ms - traj.m))), tol)
    record("covariance_trajectory", float(np.max(np.abs(Qs - traj.Q))), tol)

    fock = traj.fock
    rho_ss = oracle_steady_state(small, fock)
    _, Q_oracle = state_moments(fock, rho_ss)
    ss = steady_state(dm, bdg.M)
    record("steady_state", float(np.max(np.abs(Q_oracle - ss.Q))), tol)

    shifted = weyl_displace(fock, x_form(1, N), theta, rho_ss)
    m_oracle, _ = state_moments(fock, shifted)
    expected = quasi_steady_state(small, x_form(1, N), theta, ss)
    record("weyl_shift", float(np.max(np.abs(m_oracle - expected.m))), tol)

    taus = times[: max(2, n_times // 2)]
    c_oracle = oracle_correlator(small, fock, x_form(N, N), x_form(N, N), taus, rho_ss)
    c_moments = correlator_trace(x_form(N, N), x_form(N, N), ss.Q, dm.G, taus)
    record("correlator", float(np.max(np.abs(c_oracle - c_moments))), 10 * tol)

    passed = all(row[3] for row in checks.rows)
    summary = {
        "all_passed": passed,
        "checks": {row[0]: row[3] for row in checks.rows},
        "n_max": fock.n_max,
        "leakage": traj.leakage,
        "min_eigenvalue": traj.min_eigenvalue,
        "trace_error": traj.trace_error,
    }
    if not passed:
        logger.warning(f"Oracle checks failed: {[row[0] for row in checks.rows if not row[3]]}")
    return ExperimentResult(type="data", tables={"checks": checks}, summary=summary)
