"""Tests for qbl/modes.py — closed-form and detected Majorana-boson modes, quasi-steady bounds, disorder."""
import numpy as np
import pytest

from qbl.core import dynamical_matrix, x_form
from qbl.errors import SpecError
from qbl.models import DisorderSpec, ModelSpec, build_bdg
from qbl.modes import (
    bound_crossing_time,
    closed_form_modes,
    closed_system_modes,
    commutator,
    defect,
    detect,
    detect_mbs,
    detection_size,
    disorder_robustness,
    hamiltonian_commutator,
    localization_length,
    mb_deltas,
    noether_defect,
    observable_bound_check,
    phase_diagram,
    quasi_bound_check,
    quasi_steady_state,
    side_of,
    sigma_min_scaling,
    topology_summary,
    weyl_shift,
)


@pytest.fixture
def zero_mu_sweet_spot():
    return ModelSpec(family="model1", J=1.0, Delta=1.0, mu=0.0, kappa=0.3, N=12, bc="OBC")


class TestClosedForms:
    def test_deltas(self, sweet_spot):
        dplus, dminus = mb_deltas(sweet_spot)
        assert dplus == pytest.approx(-0.4)
        assert dminus == pytest.approx(0.2)

    def test_all_four_modes_present(self, sweet_spot):
        modes = closed_form_modes(sweet_spot)
        assert set(modes) == {"gamma_L_c", "gamma_R_c", "gamma_L_s", "gamma_R_s"}
        assert modes["gamma_L_c"].side == "left"
        assert modes["gamma_R_s"].side == "right"
        assert modes["gamma_L_c"].kind == "conserved"
        assert modes["gamma_L_s"].kind == "symmetry"

    def test_conserved_left_defect_sits_on_last_site(self, sweet_spot):
        """L*(gamma_L^c) = -J delta_-^N x_N."""
        N = sweet_spot.N
        _, dminus = mb_deltas(sweet_spot)
        dm = dynamical_matrix(build_bdg(sweet_spot))
        mode = closed_form_modes(sweet_spot)["gamma_L_c"]
        expected = -sweet_spot.J * dminus ** N * x_form(N, N).v
        assert np.allclose(defect(mode, dm), expected, rtol=0, atol=1e-12)

    def test_residual_magnitudes(self, sweet_spot):
        N, J = sweet_spot.N, sweet_spot.J
        dplus, dminus = mb_deltas(sweet_spot)
        dm = dynamical_matrix(build_bdg(sweet_spot))
        modes = closed_form_modes(sweet_spot)
        assert np.linalg.norm(defect(modes["gamma_L_c"], dm)) == pytest.approx(J * abs(dminus) ** N, rel=1e-6)
        assert np.linalg.norm(defect(modes["gamma_R_c"], dm)) == pytest.approx(J * abs(dplus) ** N, rel=1e-6)
        assert np.linalg.norm(defect(modes["gamma_L_s"], dm)) == pytest.approx(J * abs(dplus) ** N, rel=1e-6)
        for mode in modes.values():
            assert mode.residual < 1e-3

    def test_pair_commutators(self, sweet_spot):
        N = sweet_spot.N
        dplus, dminus = mb_deltas(sweet_spot)
        modes = closed_form_modes(sweet_spot)
        assert commutator(modes["gamma_L_c"], modes["gamma_R_s"]) == pytest.approx(1j * N * dminus ** (N - 1),
                                                                                   rel=1e-10)
        assert commutator(modes["gamma_R_c"], modes["gamma_L_s"]) == pytest.approx(-1j * N * dplus ** (N - 1),
                                                                                   rel=1e-10)

    def test_conserved_modes_commute_at_zero_mu(self, zero_mu_sweet_spot):
        modes = closed_form_modes(zero_mu_sweet_spot)
        assert abs(commutator(modes["gamma_L_c"], modes["gamma_R_c"])) < 1e-14

    def test_modes_dropped_when_delta_leaves_unit_disk(self):
        spec = ModelSpec(J=1.0, Delta=1.0, mu=0.6, kappa=0.9, N=10)
        assert set(closed_form_modes(spec)) == {"gamma_L_c", "gamma_R_s"}
        assert closed_form_modes(spec.with_(mu=0.0, kappa=1.5)) == {}

    def test_needs_j_equal_delta(self, bkc_metastable):
        with pytest.raises(SpecError):
            closed_form_modes(bkc_metastable)

    def test_as_dict_is_real(self, sweet_spot):
        d = closed_form_modes(sweet_spot)["gamma_L_c"].as_dict()
        assert d["coefficients"]["x"][0] == pytest.approx(1.0)
        assert all(c == pytest.approx(0.0, abs=1e-14) for c in d["coefficients"]["p"])


class TestClosedSystem:
    def test_hamiltonian_commutator(self, sweet_spot):
        """[H, gamma_L] leaves only -i J delta0^N on x_N."""
        N, J = sweet_spot.N, sweet_spot.J
        d0 = -sweet_spot.mu / J
        mode = closed_system_modes(sweet_spot)["gamma_L"]
        expected = -1j * J * d0 ** N * x_form(N, N).v
        assert np.allclose(hamiltonian_commutator(mode, sweet_spot), expected, rtol=0, atol=1e-12)

    def test_zero_mu_modes_are_single_site(self, zero_mu_sweet_spot):
        modes = closed_system_modes(zero_mu_sweet_spot)
        assert np.allclose(modes["gamma_L"].v.v, x_form(1, zero_mu_sweet_spot.N).v)
        assert np.allclose(hamiltonian_commutator(modes["gamma_L"], zero_mu_sweet_spot), 0.0, atol=1e-14)


class TestGeometry:
    def test_side_of(self):
        w = np.zeros(8)
        w[0] = 1.0
        assert side_of(w) == "left"
        assert side_of(w[::-1]) == "right"
        assert side_of(np.ones(8)) == "ambiguous"

    def test_localization_length(self):
        weights = 0.25 ** np.arange(8)
        assert localization_length(weights, "left") == pytest.approx(1.0 / np.log(2.0))
        assert localization_length(weights[::-1], "right") == pytest.approx(1.0 / np.log(2.0))


class TestDetection:
    def test_two_pairs_at_zero_mu(self, zero_mu_sweet_spot):
        det = detect(dynamical_matrix(build_bdg(zero_mu_sweet_spot)))
        assert len(det.conserved) == 2
        assert len(det.symmetry) == 2
        assert len(det.pairs) == 2
        for pair in det.pairs:
            assert {pair.conserved.side, pair.symmetry.side} == {"left", "right"}
            assert abs(pair.commutator) > 0.0
        for mode in det.conserved + det.symmetry:
            assert mode.residual < det.threshold

    def test_no_pairs_in_trivial_phase(self):
        spec = ModelSpec(J=1.0, Delta=1.0, mu=0.0, kappa=1.5, N=12)
        assert detect_mbs(spec) == []

    def test_pbc_rejected(self, zero_mu_sweet_spot):
        with pytest.raises(SpecError):
            detect_mbs(zero_mu_sweet_spot.with_(bc="PBC"))

    def test_noether_defect_identity(self, sweet_spot):
        dm = dynamical_matrix(build_bdg(sweet_spot))
        mode = closed_form_modes(sweet_spot)["gamma_L_s"]
        rng = np.random.default_rng(0)
        w = rng.standard_normal(2 * sweet_spot.N) + 1j * rng.standard_normal(2 * sweet_spot.N)
        expected = -commutator(-1j * dm.G @ mode.v.v, w)
        assert noether_defect(mode, dm, w) == pytest.approx(expected, abs=1e-12)


class TestQuasiSteady:
    def test_weyl_shift_of_x(self):
        s = weyl_shift(x_form(1, 1).v)
        assert np.allclose(s, np.array([-1j, 1j]) / np.sqrt(2.0))

    def test_state_is_shifted_steady_state(self, sweet_spot):
        mode = closed_form_modes(sweet_spot)["gamma_L_s"]
        state = quasi_steady_state(sweet_spot, mode, 0.5).validate()
        assert np.allclose(state.m, 0.5 * weyl_shift(mode.v.v))

    def test_bound_chain_holds(self, sweet_spot):
        mode = closed_form_modes(sweet_spot)["gamma_L_s"]
        curves = quasi_bound_check(sweet_spot, mode, 1.0, np.linspace(0.0, 20.0, 201))
        assert curves.violations == 0
        assert curves.lhs[0] == 0.0
        assert curves.eps == pytest.approx(mode.residual)
        obs = observable_bound_check(curves, 25, seed=1)
        assert obs.shape == (25, 201)
        assert np.all(obs <= curves.lhs[None, :] + 1e-12)

    def test_crossing_time(self):
        assert bound_crossing_time(0.1, 0.0, 1.0) == pytest.approx(10.0)
        t = bound_crossing_time(1e-3, 0.5, 0.1)
        assert 1e-3 * t * np.exp(0.5 * t) == pytest.approx(0.1)
        assert bound_crossing_time(0.0, 0.5, 0.1) == float("inf")


class TestDisorder:
    def test_weak_disorder_keeps_pairs(self, zero_mu_sweet_spot):
        stats = disorder_robustness(zero_mu_sweet_spot, DisorderSpec(target=["mu"], W=0.01, seed=1),
                                    n_realizations=4, threads=1)
        assert stats.clean_pairs == 2
        assert stats.survival_fraction == 1.0
        assert stats.violations == 0
        assert stats.as_dict()["max_perturbation_norm"] <= 0.01 + 1e-12

    def test_carried_modes_obey_perturbation_bound(self, zero_mu_sweet_spot):
        stats = disorder_robustness(zero_mu_sweet_spot, DisorderSpec(target=["mu", "J"], W=0.05, seed=2),
                                    n_realizations=5, threads=1)
        assert stats.carried_violations == 0
        assert all(len(r) == 2 for r in stats.carried_residuals)
        for carried, nrm in zip(stats.carried_residuals, stats.perturbation_norms):
            assert max(carried) <= nrm + 1e-4
        assert stats.as_dict()["max_carried_residual"] > 0.0

    def test_threads_do_not_change_counts(self, zero_mu_sweet_spot):
        disorder = DisorderSpec(target=["mu", "J"], W=0.02, seed=7)
        a = disorder_robustness(zero_mu_sweet_spot, disorder, n_realizations=3, threads=1)
        b = disorder_robustness(zero_mu_sweet_spot, disorder, n_realizations=3, threads=3)
        assert a.pair_counts == b.pair_counts
        assert a.perturbation_norms == b.perturbation_norms


class TestPhaseDiagram:
    @pytest.mark.parametrize("mu_ratio,kappa_ratio,pairs", [
        (0.0, 0.3, 2),
        (0.6, 0.9, 1),
        (0.0, 1.5, 0),
        (2.0, 0.3, 0),
    ])
    def test_pairs_match_winding(self, mu_ratio, kappa_ratio, pairs):
        (cell,) = phase_diagram(1.0, 1.0, [mu_ratio], [kappa_ratio], N=20, k_count=256)
        assert cell.mb_pairs == pairs
        assert cell.winding_bands == pairs
        assert cell.consistent

    def test_cells_default_to_their_detection_size(self):
        (cell,) = phase_diagram(1.0, 1.0, [0.0], [1.5], k_count=256)
        assert cell.N == 20

    @pytest.mark.parametrize("mu_ratio,kappa_ratio,pairs,N", [
        (0.0, 0.3, 2, 22),
        (0.0, 1.5, 0, 20),
    ])
    def test_pairs_match_winding_away_from_sweet_spot(self, mu_ratio, kappa_ratio, pairs, N):
        (cell,) = phase_diagram(1.5, 1.0, [mu_ratio], [kappa_ratio], k_count=256)
        assert cell.N == N
        assert cell.mb_pairs == pairs
        assert cell.winding_bands == pairs
        assert cell.consistent


class TestDetectionSize:
    def test_sweet_spot_decay(self):
        """rho = (mu + kappa) / J at J = Delta, so 0.3^N reaches 1e-5 after ten sites."""
        assert detection_size(1.0, 1.0, 0.0, 0.3, N_min=2) == 10

    def test_default_point(self):
        assert detection_size(2.0, 0.5, 0.0, 0.3) == 114

    def test_non_winding_bands_use_minimum(self):
        assert detection_size(2.0, 0.5, 0.0, 0.7) == 20
        assert detection_size(0.0, 0.0, 0.0, 0.3) == 20

    def test_clamped_near_the_transition(self):
        assert detection_size(1.5, 1.0, 0.0, 0.999, N_max=150) == 150


class TestTopologySummary:
    def test_sweet_spot_is_certified(self, zero_mu_sweet_spot):
        summary = topology_summary(zero_mu_sweet_spot, k_count=256)
        assert summary.topological and summary.certified
        assert summary.winding_total == 0
        assert summary.mb_pairs == summary.winding_bands == 2
        assert summary.N == 12

    def test_stable_chain_is_trivial(self, bkc_stable):
        summary = topology_summary(bkc_stable, k_count=256)
        assert summary.stability == "unconditionally_stable"
        assert summary.winding_bands == 0
        assert not summary.topological

    def test_short_chain_is_topological_but_uncertified(self, bkc_metastable):
        summary = topology_summary(bkc_metastable, N=12, k_count=256)
        assert summary.topological
        assert summary.mb_pairs == 0
        assert not summary.certified

    def test_model2_is_metastable_with_zero_total_winding(self, model2_metastable):
        summary = topology_summary(model2_metastable, k_count=512)
        assert summary.stability == "metastable"
        assert summary.winding_total == 0
        assert summary.winding_bands == 2
        assert summary.mb_pairs == 0
        assert summary.N == 25


class TestModel2Detection:
    def test_no_pairs_at_default_length(self, model2_metastable):
        assert detect_mbs(model2_metastable) == []


class TestStableResolvent:
    def test_sigma_min_stays_away_from_zero(self, bkc_stable):
        scaling = sigma_min_scaling(bkc_stable, [10, 20, 30])
        assert min(scaling["sigma_min"]) >= 0.19
