"""Spectral experiments — rapidities, bulk bands, winding, pseudospectra, phase diagram."""
import logging
from typing import List, Optional

import numpy as np

from ...core import adjoint_generator
from ...models import ModelSpec, bloch_symbol, build_dynamical
from ...modes import phase_diagram, sigma_min_scaling
from ...pseudospectrum import DEFAULT_EPSILONS, epsilon_contours, omega_constant, sigma_min_grid, transient_bound
from ...spectral import bulk_bands, pbc_on_bands, stability_report, winding
from ..registry import ExperimentParam, ExperimentResult, Plot, Table, register_experiment

logger = logging.getLogger(__name__)


@register_experiment(
    "spectrum",
    description="OBC and PBC rapidities with bulk bands and stability class",
    params=[
        ExperimentParam("bands", "bool", "include bulk band curves", default=True),
        ExperimentParam("k_count", "int", "Brillouin-zone samples", default=None),
    ],
    category="spectral",
)
def spectrum(spec: ModelSpec, ctx=None, bands: bool = True, k_count: Optional[int] = None) -> ExperimentResult:
    report = stability_report(spec)
    rap = Table(["bc", "re", "im"])
    for bc, rs in (("OBC", report.obc), ("PBC", report.pbc)):
        for lam in rs.eigenvalues:
            rap.add(bc, lam.real, lam.imag)
    tables = {"rapidities": rap}
    summary = {
        "classification": report.label.value,
        "obc_max_real": report.obc.max_real,
        "pbc_max_real": report.pbc.max_real,
        "spectral_gap": report.obc.gap,
        "marginal": report.marginal,
    }
    plots = {"rapidities": Plot("rapidities", "re", ["im"], group="bc", scatter=True)}
    if bands:
        symbol = bloch_symbol(spec)
        curves = bulk_bands(symbol, k_count)
        bt = Table(["band", "quadrature", "k", "re", "im"])
        for b in range(curves.n_bands):
            for k, lam in zip(curves.k, curves.values[b]):
                bt.add(b, curves.labels[b], k, lam.real, lam.imag)
        tables["bands"] = bt
        summary["pbc_band_distance"] = pbc_on_bands(spec, symbol)
        summary["ambiguous_band_steps"] = len(curves.ambiguous_steps)
        plots["bands"] = Plot("bands", "re", ["im"], group="band")
    return ExperimentResult(type="data", tables=tables, summary=summary, plots=plots)


@register_experiment(
    "winding",
    description="Winding of the bulk rapidity bands around a reference point",
    params=[
        ExperimentParam("lam0_re", "float", "reference point, real part", default=0.0),
        ExperimentParam("lam0_im", "float", "reference point, imaginary part", default=0.0),
        ExperimentParam("k_count", "int", "Brillouin-zone samples", default=None),
    ],
    category="spectral",
)
def winding_number(spec: ModelSpec, ctx=None, lam0_re: float = 0.0, lam0_im: float = 0.0,
                   k_count: Optional[int] = None) -> ExperimentResult:
    w = winding(bloch_symbol(spec), complex(lam0_re, lam0_im), k_count)
    table = Table(["band", "quadrature", "winding"])
    for b, (label, n) in enumerate(zip(w.band_labels, w.band_windings)):
        table.add(b, label, n)
    summary = {"total": w.total, "by_quadrature": w.by_quadrature(), "min_distance": w.min_distance,
               "residual": w.residual}
    return ExperimentResult(type="data", tables={"windings": table}, summary=summary)


@register_experiment(
    "pseudo",
    description="sigma_min grid of -iG, pseudospectral abscissae and transient lower bound",
    params=[
        ExperimentParam("region", "list", "[re_min, re_max, im_min, im_max]; eigenvalue hull if omitted", default=None),
        ExperimentParam("resolution", "int", "grid points per axis", default=None),
        ExperimentParam("epsilons", "list", "epsilon levels", default=list(DEFAULT_EPSILONS)),
        ExperimentParam("generator", "string", "'rapidity' (-iG) or 'adjoint' (-iG~)", default="rapidity"),
        ExperimentParam("Ns", "list", "chain lengths for the sigma_min(0) scaling fit", default=None),
    ],
    category="spectral",
)
def pseudo(spec: ModelSpec, ctx=None, region: Optional[List[float]] = None, resolution: Optional[int] = None,
           epsilons: List[float] = DEFAULT_EPSILONS, generator: str = "rapidity",
           Ns: Optional[List[int]] = None) -> ExperimentResult:
    dm = build_dynamical(spec)
    A = -1j * (adjoint_generator(dm).G if generator == "adjoint" else dm.G)
    region = tuple(region) if region else None
    res = (resolution, resolution) if resolution else None
    threads = ctx.threads if ctx else None
    grid = sigma_min_grid(A, region, res, threads=threads)
    gt = Table(["re", "im", "sigma_min"])
    for x, y, s in grid.points():
        gt.add(x, y, s)
    bound = transient_bound(A, epsilons, grid=grid)
    at = Table(["epsilon", "alpha_eps", "ratio"])
    for eps, a in zip(bound.epsilons, bound.abscissas):
        at.add(eps, a, a / eps)
    tables = {"grid": gt, "abscissa": at}
    try:
        ct = Table(["epsilon", "segment", "re", "im"])
        for eps, lines in epsilon_contours(grid, epsilons).items():
            for s, line in enumerate(lines):
                for x, y in line:
                    ct.add(eps, s, x, y)
        tables["contours"] = ct
    except ImportError:
        logger.debug("contourpy not installed; skipping epsilon contours")
    summary = bound.as_dict()
    if spec.translation_invariant:
        summary["omega"] = omega_constant(bloch_symbol(spec))
    if Ns:
        scaling = sigma_min_scaling(spec, Ns)
        st = Table(["N", "sigma_min"])
        for n, s in zip(scaling["N"], scaling["sigma_min"]):
            st.add(int(n), s)
        tables["sigma_min_scaling"] = st
        summary.update({"sigma_min_slope": scaling["slope"], "sigma_min_r2": scaling["r2"]})
    plots = {"abscissa": Plot("abscissa", "epsilon", ["ratio"], logx=True)}
    return ExperimentResult(type="data", tables=tables, summary=summary, plots=plots)


@register_experiment(
    "phase-diagram",
    description="Model 1 stability, winding and MB pairs over a (mu/Delta, kappa/Delta) grid",
    params=[
        ExperimentParam("mu_ratios", "list", "mu/Delta values", default=[float(x) for x in np.linspace(-3.0, 3.0, 13)]),
        ExperimentParam("kappa_ratios", "list", "kappa/Delta values (> 0)", default=[float(x) for x in np.linspace(0.25, 3.0, 12)]),
        ExperimentParam("J_values", "list", "hopping values (>= Delta); the model J if omitted", default=None),
        ExperimentParam("eps_threshold", "float", "MB residual threshold", default=None),
        ExperimentParam("fixed_size", "bool", "detect every cell at the model N instead of sizing it by edge-mode decay", default=False),
        ExperimentParam("N_max", "int", "largest chain used when sizing cells", default=200),
    ],
    category="modes",
)
def phase(spec: ModelSpec, ctx=None, mu_ratios: List[float] = (), kappa_ratios: List[float] = (),
          J_values: Optional[List[float]] = None, eps_threshold: Optional[float] = None,
          fixed_size: bool = False, N_max: int = 200) -> ExperimentResult:
    table = Table(["J", "mu_over_delta", "kappa_over_delta", "N", "stability", "winding_x", "winding_p",
                   "winding_bands", "mb_pairs"])
    mismatched = 0
    for J in J_values or [spec.J]:
        cells = phase_diagram(J, spec.Delta, mu_ratios, kappa_ratios, spec.N if fixed_size else None,
                              eps_threshold, N_min=spec.N, N_max=max(N_max, spec.N))
        for c in cells:
            table.add(J, c.mu / spec.Delta, c.kappa / spec.Delta, c.N, c.stability,
                      c.winding_x, c.winding_p, c.winding_bands, c.mb_pairs)
            mismatched += int(not c.consistent)
    return ExperimentResult(type="data", tables={"cells": table},
                            summary={"cells": len(table.rows), "mismatched": mismatched})
