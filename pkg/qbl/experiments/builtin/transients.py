"""Moment-dynamics experiments — trajectories, linear mixing time, transient amplification."""
import logging
from typing import List, Optional

import numpy as np

from ...core import block_pauli, dynamical_matrix, mean_from_quadratures, p_form, quadrature_basis, x_form
from ...dynamics import (
    amplification_experiment,
    evolve_covariance,
    fit_line,
    linear_mixing_time,
    propagate_mean,
    vacuum,
)
from ...errors import SpecError
from ...models import ModelSpec, bloch_symbol, build_bdg
from ...pseudospectrum import omega_constant
from ..registry import ExperimentParam, ExperimentResult, Plot, Table, register_experiment

logger = logging.getLogger(__name__)


def _quadrature_means(m: np.ndarray) -> np.ndarray:
    N = m.shape[0] // 2
    return np.real(quadrature_basis(N).conj().T @ (block_pauli(3, N) @ m))


@register_experiment(
    "evolve",
    description="Mean and covariance trajectories from a unit quadrature displacement of the vacuum",
    params=[
        ExperimentParam("t_max", "float", "final time", default=10.0),
        ExperimentParam("n_times", "int", "time samples", default=201),
        ExperimentParam("initial_site", "int", "displaced site (1-based); N if omitted", default=None),
        ExperimentParam("initial_quadrature", "string", "'x' or 'p'", default="x"),
        ExperimentParam("method", "string", "'auto', 'closed' or 'stepper'", default="auto"),
    ],
    category="dynamics",
)
def evolve(spec: ModelSpec, ctx=None, t_max: float = 10.0, n_times: int = 201, initial_site: Optional[int] = None,
           initial_quadrature: str = "x", method: str = "auto") -> ExperimentResult:
    N = spec.N
    site = initial_site or N
    if not 1 <= site <= N or initial_quadrature not in ("x", "p"):
        raise SpecError(f"bad initial displacement {initial_quadrature}_{site} for N={N}", module=__name__)
    bdg = build_bdg(spec)
    dm = dynamical_matrix(bdg)
    r = np.zeros(2 * N)
    r[2 * (site - 1) + (0 if initial_quadrature == "x" else 1)] = 1.0
    m0 = mean_from_quadratures(r)
    Q0 = vacuum(N).Q + np.outer(m0, m0.conj())
    times = np.linspace(0.0, t_max, n_times)
    ms = propagate_mean(dm, m0, times)
    Qs = evolve_covariance(dm, bdg.M, Q0, times, method=method)

    columns = ["t"] + [f"x_{j}" for j in range(1, N + 1)] + [f"p_{j}" for j in range(1, N + 1)] + ["nbar"]
    table = Table(columns)
    for t, m, Q in zip(times, ms, Qs):
        q = _quadrature_means(m)
        nbar = float(np.sum(np.real(np.diag(Q))[0::2]) - N)
        table.add(t, *q[0::2], *q[1::2], nbar)
    summary = {"final_mean_norm": float(np.linalg.norm(ms[-1])), "final_nbar": table.rows[-1][-1]}
    return ExperimentResult(type="data", tables={"trajectory": table}, summary=summary,
                            plots={"trajectory": Plot("trajectory", "t", [f"x_{N}", "nbar"])})


@register_experiment(
    "mixing",
    description="Linear mixing time t_lin(delta) against N with the ln(w)/Omega lower bounds",
    params=[
        ExperimentParam("delta", "float", "accuracy", default=0.5),
        ExperimentParam("Ns", "list", "chain lengths", default=[10, 15, 20, 25, 30]),
        ExperimentParam("horizon", "float", "time horizon", default=200.0),
        ExperimentParam("n_points", "int", "time samples", default=2001),
        ExperimentParam("ws", "list", "w values for ln(w)/Omega", default=[2, 4, 8]),
    ],
    category="dynamics",
)
def mixing(spec: ModelSpec, ctx=None, delta: float = 0.5, Ns: List[int] = (), horizon: float = 200.0,
           n_points: int = 2001, ws: List[float] = ()) -> ExperimentResult:
    times_table = Table(["N", "t_lin", "t_peak", "peak"])
    dlin = Table(["N", "t", "d_lin"])
    t_lins = []
    for n in Ns:
        s = spec.with_(N=int(n), bc="OBC")
        report = linear_mixing_time(dynamical_matrix(build_bdg(s)), delta, horizon, n_points)
        times_table.add(int(n), report.t_lin, report.t_peak, report.peak)
        for t, d in zip(report.times, report.d_lin):
            dlin.add(int(n), t, d)
        t_lins.append(report.t_lin)
    omega = omega_constant(bloch_symbol(spec.with_(disorder=None)))
    bounds = {str(w): (float(np.log(w) / omega) if omega > 0 else None) for w in ws}
    summary = {
        "omega": omega,
        "lower_bounds": bounds,
        "monotone": bool(np.all(np.diff(t_lins) > 0)),
        "exceeds_at_largest_N": {k: (b is not None and t_lins[-1] > b) for k, b in bounds.items()} if t_lins else {},
    }
    return ExperimentResult(type="data", tables={"t_lin": times_table, "d_lin": dlin}, summary=summary,
                            plots={"d_lin": Plot("d_lin", "t", ["d_lin"], group="N", logy=True)})


@register_experiment(
    "amplify",
    description="Peak times of an edge quadrature over random unit initial means",
    params=[
        ExperimentParam("n_samples", "int", "sampled initial conditions", default=500),
        ExperimentParam("Ns", "list", "chain lengths", default=[30]),
        ExperimentParam("t_max", "float", "final time", default=40.0),
        ExperimentParam("n_times", "int", "time samples", default=801),
        ExperimentParam("observable", "string", "'x' or 'p' at the last site", default="x"),
    ],
    category="dynamics",
)
def amplify(spec: ModelSpec, ctx=None, n_samples: int = 500, Ns: List[int] = (), t_max: float = 40.0,
            n_times: int = 801, observable: str = "x") -> ExperimentResult:
    times = np.linspace(0.0, t_max, n_times)
    peaks = Table(["N", "mean_peak", "std_peak", "n_samples"])
    traces = Table(["N", "t", "mean_abs"])
    seed = ctx.seed if ctx else 0
    means = []
    for n in Ns:
        n = int(n)
        obs = x_form(n, n) if observable == "x" else p_form(n, n)
        stats = amplification_experiment(spec.with_(N=n), n_samples, times, obs, seed=seed)
        peaks.add(n, stats.mean_peak, stats.std_peak, n_samples)
        for t, v in zip(times, stats.mean_trace):
            traces.add(n, t, v)
        means.append(stats.mean_peak)
    summary = {"mean_peak": dict(zip([str(int(n)) for n in Ns], means))}
    if len(Ns) >= 2:
        slope, intercept, r2 = fit_line(Ns, means)
        summary.update({"peak_slope": slope, "peak_intercept": intercept, "peak_r2": r2})
    return ExperimentResult(type="data", tables={"peaks": peaks, "traces": traces}, summary=summary,
                            plots={"traces": Plot("traces", "t", ["mean_abs"], group="N")})
