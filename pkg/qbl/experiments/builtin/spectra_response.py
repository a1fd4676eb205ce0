"""Response experiments — steady-state power spectra and the zero-frequency scan."""
import logging
from typing import List, Optional

import numpy as np

from ...core import p_form, x_form
from ...models import ModelSpec
from ...response import power_spectrum, resolvent_norm_scaling, zero_frequency_scan
from ..registry import ExperimentParam, ExperimentResult, Plot, Table, register_experiment

logger = logging.getLogger(__name__)


def _edge_rule(observable: str):
    def rule(spec: ModelSpec):
        return x_form(spec.N, spec.N) if observable == "x" else p_form(spec.N, spec.N)
    return rule


@register_experiment(
    "power",
    description="Power spectrum S(omega) of an edge quadrature and its normalized modulus",
    params=[
        ExperimentParam("observable", "string", "'x' or 'p' at the last site", default="x"),
        ExperimentParam("omegas", "list", "frequency grid; 401 points over +-2||G|| refined at 0 if omitted",
                        default=None),
    ],
    category="response",
)
def power(spec: ModelSpec, ctx=None, observable: str = "x", omegas: Optional[List[float]] = None) -> ExperimentResult:
    obs = _edge_rule(observable)(spec)
    ps = power_spectrum(obs, obs, spec.with_(bc="OBC"), omegas, threads=ctx.threads if ctx else None)
    norm = ps.normalized
    table = Table(["omega", "re_S", "im_S", "abs_Snorm"])
    for w, s, sn in zip(ps.omega, ps.values, norm):
        table.add(w, s.real, s.imag, abs(sn))
    return ExperimentResult(type="data", tables={"spectrum": table}, summary=ps.as_dict(),
                            plots={"spectrum": Plot("spectrum", "omega", ["abs_Snorm"], logy=True)})


@register_experiment(
    "scan",
    description="|S~(0)| and ||chi_N(0)|| against N with log-log and log-linear fits",
    params=[
        ExperimentParam("Ns", "list", "chain lengths", default=[10, 15, 20, 25, 30]),
        ExperimentParam("observable", "string", "'x' or 'p' at the last site", default="x"),
        ExperimentParam("omega", "float", "frequency of the resolvent-norm scan", default=0.0),
    ],
    category="response",
)
def scan(spec: ModelSpec, ctx=None, Ns: List[int] = (), observable: str = "x", omega: float = 0.0) -> ExperimentResult:
    zf = zero_frequency_scan(spec, Ns, _edge_rule(observable))
    chi = resolvent_norm_scaling(spec, omega, Ns)
    table = Table(["N", "abs_Snorm_0", "chi_norm"])
    for n, s, c in zip(zf["N"], zf["abs_Snorm_0"], chi["chi_norm"]):
        table.add(n, s, c)
    values = np.asarray(zf["abs_Snorm_0"])
    summary = {
        "fit_slope": zf["slope"],
        "fit_r2": zf["r2"],
        "chi_slope": chi["slope"],
        "chi_r2": chi["r2"],
        "max_ratio_to_first": float(values.max() / values[0]) if values.size else None,
    }
    return ExperimentResult(type="data", tables={"zero_frequency": table}, summary=summary,
                            plots={"zero_frequency": Plot("zero_frequency", "N", ["abs_Snorm_0"], logx=True, logy=True)})
