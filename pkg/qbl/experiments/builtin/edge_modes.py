"""Majorana-boson experiments — detection, quasi-steady bounds, disorder robustness."""
import logging
from typing import List, Optional

import numpy as np

from ...core import dynamical_matrix, quadrature_change
from ...errors import NumericalError
from ...models import DisorderSpec, ModelSpec, bloch_symbol, build_bdg
from ...modes import (
    MajoranaMode,
    bound_crossing_time,
    closed_form_modes,
    commutator,
    detect,
    disorder_robustness,
    observable_bound_check,
    quasi_bound_check,
)
from ...pseudospectrum import omega_constant
from ..registry import ExperimentParam, ExperimentResult, Plot, Table, register_experiment

logger = logging.getLogger(__name__)


def _is_sweet_spot(spec: ModelSpec) -> bool:
    return spec.family == "model1" and np.isclose(spec.J, spec.Delta, rtol=0.0, atol=1e-14)


def symmetry_mode(spec: ModelSpec, side: str = "left") -> MajoranaMode:
    """Closed-form gamma^s at J = Delta, otherwise the best detected symmetry mode on ``side``."""
    if _is_sweet_spot(spec):
        label = "gamma_L_s" if side == "left" else "gamma_R_s"
        found = closed_form_modes(spec)
        if label in found:
            return found[label]
    det = detect(dynamical_matrix(build_bdg(spec.with_(bc="OBC"))))
    candidates = [m for m in det.symmetry if m.side == side]
    if not candidates:
        raise NumericalError(f"no {side} symmetry-generator mode below threshold {det.threshold:.2e}",
                             module=__name__)
    return min(candidates, key=lambda m: m.residual)


@register_experiment(
    "modes",
    description="Detect and pair MB modes; closed forms and commutators at J = Delta",
    params=[ExperimentParam("eps_threshold", "float", "residual threshold; 1e-4 ||G|| if omitted", default=None)],
    category="modes",
)
def modes(spec: ModelSpec, ctx=None, eps_threshold: Optional[float] = None) -> ExperimentResult:
    obc = spec.with_(bc="OBC")
    det = detect(dynamical_matrix(build_bdg(obc)), eps_threshold)
    mt = Table(["label", "kind", "side", "residual", "localization_length"])
    coeffs = Table(["label", "site", "x", "p"])
    found = det.conserved + det.symmetry
    closed = closed_form_modes(obc) if _is_sweet_spot(obc) else {}
    labelled = [(m.label, m) for m in found] + [(f"closed_{k}", m) for k, m in closed.items()]
    for label, m in labelled:
        mt.add(label, m.kind, m.side, m.residual, m.localization_length)
        q = np.real(quadrature_change(m.v.v, "to_xp"))
        for j in range(obc.N):
            coeffs.add(label, j + 1, q[2 * j], q[2 * j + 1])
    pt = Table(["conserved", "symmetry", "commutator_re", "commutator_im"])
    for p in det.pairs:
        pt.add(p.conserved.label, p.symmetry.label, p.commutator.real, p.commutator.imag)
    summary = {"threshold": det.threshold, "conserved": len(det.conserved), "symmetry": len(det.symmetry),
               "pairs": len(det.pairs)}
    if closed:
        comms = {}
        for c, s in (("gamma_L_c", "gamma_R_s"), ("gamma_L_s", "gamma_R_c"), ("gamma_L_c", "gamma_R_c")):
            if c in closed and s in closed:
                comms[f"[{c},{s}]"] = commutator(closed[c], closed[s])
        summary["closed_form_commutators"] = comms
    return ExperimentResult(type="data", tables={"modes": mt, "coefficients": coeffs, "pairs": pt}, summary=summary)


@register_experiment(
    "quasi",
    description="Quasi-steady-state deviation against its two upper bounds, plus t(delta) against N",
    params=[
        ExperimentParam("theta", "float", "Weyl displacement strength", default=1.0),
        ExperimentParam("side", "string", "edge of the symmetry-generator mode", default="left"),
        ExperimentParam("t_max", "float", "final time", default=50.0),
        ExperimentParam("n_times", "int", "time samples", default=501),
        ExperimentParam("delta", "float", "accuracy for t(delta)", default=0.1),
        ExperimentParam("n_observables", "int", "random linear observables", default=250),
        ExperimentParam("Ns", "list", "chain lengths for t(delta)", default=None),
    ],
    category="modes",
)
def quasi(spec: ModelSpec, ctx=None, theta: float = 1.0, side: str = "left", t_max: float = 50.0,
          n_times: int = 501, delta: float = 0.1, n_observables: int = 250,
          Ns: Optional[List[int]] = None) -> ExperimentResult:
    mode = symmetry_mode(spec, side)
    times = np.linspace(0.0, t_max, n_times)
    curves = quasi_bound_check(spec, mode, theta, times, delta)
    devs = observable_bound_check(curves, n_observables, seed=ctx.seed if ctx else 0)
    bt = Table(["t", "lhs", "mid", "outer", "max_observable"])
    for i, t in enumerate(times):
        bt.add(t, curves.lhs[i], curves.mid[i], curves.outer[i], float(devs[:, i].max()))
    obs_violations = int(np.sum(devs > curves.lhs[None, :] + 1e-12))
    tables = {"bounds": bt}
    summary = {"eps": curves.eps, "omega": curves.omega, "t_delta": curves.t_delta,
               "violations": curves.violations + obs_violations, "mode": mode.label}
    if Ns:
        omega = omega_constant(bloch_symbol(spec.with_(disorder=None)))
        nt = Table(["N", "eps", "t_delta"])
        for n in Ns:
            m = symmetry_mode(spec.with_(N=int(n)), side)
            nt.add(int(n), m.residual, bound_crossing_time(m.residual, omega, delta))
        tables["t_delta"] = nt
    return ExperimentResult(type="data", tables=tables, summary=summary,
                            plots={"bounds": Plot("bounds", "t", ["lhs", "mid", "outer"], logy=True)})


@register_experiment(
    "disorder",
    description="MB survival and singular-value perturbation bound over seeded disorder",
    params=[
        ExperimentParam("W", "float", "disorder strength; 0.02 J if omitted", default=None),
        ExperimentParam("targets", "list", "disordered parameters among J, mu, kappa", default=["mu"]),
        ExperimentParam("n_realizations", "int", "realizations", default=50),
        ExperimentParam("eps_threshold", "float", "detection threshold", default=None),
        ExperimentParam("threshold_factor", "float", "threshold as a multiple of the clean residual", default=10.0),
    ],
    category="modes",
)
def disorder(spec: ModelSpec, ctx=None, W: Optional[float] = None, targets: List[str] = ("mu",),
             n_realizations: int = 50, eps_threshold: Optional[float] = None,
             threshold_factor: float = 10.0) -> ExperimentResult:
    obc = spec.with_(bc="OBC", disorder=None)
    W = 0.02 * spec.J if W is None else W
    if eps_threshold is None:
        clean = detect(dynamical_matrix(build_bdg(obc)))
        paired = [m.residual for p in clean.pairs for m in (p.conserved, p.symmetry)]
        eps_threshold = threshold_factor * max(paired) if paired else None
    dis = DisorderSpec(target=list(targets), W=W, seed=ctx.seed if ctx else 0)
    stats = disorder_robustness(obc, dis, eps_threshold, n_realizations, threads=ctx.threads if ctx else None)
    table = Table(["realization", "pairs", "max_shift", "perturbation_norm"])
    for i, (count, shifts, nrm) in enumerate(zip(stats.pair_counts, stats.shifts, stats.perturbation_norms)):
        table.add(i, count, max(shifts) if shifts else 0.0, nrm)
    summary = stats.as_dict()
    summary.update({"W": W, "eps_threshold": eps_threshold})
    return ExperimentResult(type="data", tables={"realizations": table}, summary=summary)
