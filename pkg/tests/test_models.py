"""Tests for qbl/models.py — ModelSpec schema, BdG construction, disorder and the Bloch symbol."""
import numpy as np
import pytest
from pydantic import ValidationError

from qbl.core import dynamical_matrix
from qbl.errors import SpecError
from qbl.models import (
    DisorderSpec,
    ModelSpec,
    apply_disorder,
    bloch_symbol,
    build_bath,
    build_bdg,
    build_hamiltonian,
    build_dynamical,
    lindblad_vectors,
    model_label,
    specs_over_N,
)


class TestModelSpec:
    def test_defaults(self):
        spec = ModelSpec()
        assert spec.family == "model1"
        assert (spec.J, spec.Delta, spec.kappa, spec.N) == (2.0, 0.5, 0.3, 25)
        assert spec.bc == "OBC"
        assert spec.translation_invariant

    def test_delta_above_j_rejected(self):
        with pytest.raises(ValidationError):
            ModelSpec(J=0.5, Delta=1.0)

    def test_nonpositive_kappa_rejected(self):
        with pytest.raises(ValidationError):
            ModelSpec(kappa=0.0)

    def test_unknown_field_rejected(self):
        with pytest.raises(ValidationError):
            ModelSpec(hopping=1.0)

    def test_custom_needs_stencil(self):
        with pytest.raises(ValidationError):
            ModelSpec(family="custom")

    def test_with_copies_and_validates(self, bkc_metastable):
        other = bkc_metastable.with_(kappa=0.7)
        assert other.kappa == 0.7
        assert bkc_metastable.kappa == 0.3
        with pytest.raises(ValidationError):
            bkc_metastable.with_(N=1)

    def test_label_and_sweep(self, bkc_metastable):
        assert "model1" in model_label(bkc_metastable)
        assert [s.N for s in specs_over_N(bkc_metastable, [4, 6])] == [4, 6]


class TestBdG:
    def test_hamiltonian_is_hermitian_and_particle_hole(self, bkc_metastable):
        H = build_hamiltonian(bkc_metastable)
        t1 = np.kron(np.eye(bkc_metastable.N), [[0, 1], [1, 0]])
        assert np.allclose(H, H.conj().T)
        assert np.allclose(H, t1 @ H.conj() @ t1)

    def test_onsite_loss_vectors(self, bkc_metastable):
        ells = lindblad_vectors(bkc_metastable)
        assert len(ells) == bkc_metastable.N
        assert ells[0][0] == pytest.approx(np.sqrt(0.6))

    def test_model2_adds_nnn_dissipators(self):
        spec = ModelSpec(family="model2", Gamma=0.12, N=8)
        assert len(lindblad_vectors(spec)) == 8 + 6
        assert len(lindblad_vectors(spec.with_(bc="PBC"))) == 8 + 8

    def test_model2_pair_is_antisymmetric_by_default(self):
        spec = ModelSpec(family="model2", Gamma=0.12, N=8)
        ell = lindblad_vectors(spec)[8]
        assert ell[0] == pytest.approx(np.sqrt(0.12))
        assert ell[4] == pytest.approx(-np.sqrt(0.12), abs=1e-15)
        assert lindblad_vectors(spec.with_(phi=0.0))[8][4] == pytest.approx(np.sqrt(0.12))

    def test_bath_is_psd(self):
        M = build_bath(ModelSpec(family="model2", Gamma=0.12, phi=0.4, N=6))
        assert np.min(np.linalg.eigvalsh(M)) > -1e-12

    def test_obc_quadrature_decay_rate(self, bkc_metastable):
        """Every OBC rapidity of Model 1 at mu = 0 sits on Re = -kappa."""
        ev = np.linalg.eigvals(-1j * build_dynamical(bkc_metastable).G)
        assert np.max(np.abs(ev.real + bkc_metastable.kappa)) < 1e-8


class TestDisorder:
    def test_same_seed_same_chain(self, bkc_metastable):
        spec = bkc_metastable.with_(disorder={"target": ["mu", "J"], "W": 0.05, "seed": 3})
        a, b = build_bdg(spec), build_bdg(spec)
        assert np.array_equal(a.H, b.H)
        assert not spec.translation_invariant

    def test_different_seed_differs(self, bkc_metastable):
        spec = bkc_metastable.with_(disorder={"target": ["mu"], "W": 0.05, "seed": 3})
        assert not np.allclose(apply_disorder(spec).H, apply_disorder(spec, seed=4).H)

    def test_zero_strength_is_clean(self, bkc_metastable):
        spec = bkc_metastable.with_(disorder=DisorderSpec(W=0.0).model_dump())
        assert spec.translation_invariant
        assert np.allclose(build_bdg(spec).H, build_hamiltonian(bkc_metastable))

    def test_kappa_disorder_cannot_flip_sign(self, bkc_metastable):
        spec = bkc_metastable.with_(disorder={"target": ["kappa"], "W": 5.0, "seed": 0})
        with pytest.raises(SpecError):
            apply_disorder(spec)


class TestBlochSymbol:
    def test_circulant_reproduces_pbc(self, bkc_metastable):
        spec = bkc_metastable.with_(bc="PBC")
        symbol = bloch_symbol(spec)
        assert np.allclose(symbol.circulant(spec.N), build_dynamical(spec).G)

    def test_toeplitz_reproduces_obc(self, bkc_metastable):
        symbol = bloch_symbol(bkc_metastable)
        assert np.allclose(symbol.toeplitz(bkc_metastable.N), build_dynamical(bkc_metastable).G)

    def test_model2_range(self):
        symbol = bloch_symbol(ModelSpec(family="model2", Gamma=0.12, N=10))
        assert symbol.r_max == 2

    def test_bulk_ellipse(self, bkc_metastable):
        """At mu = 0 the bulk rapidities are -kappa +- Delta cos k + i J sin k (up to orientation)."""
        symbol = bloch_symbol(bkc_metastable)
        for k in np.linspace(0.0, 2 * np.pi, 7):
            ev = np.sort_complex(np.linalg.eigvals(symbol.rapidity_at(k)))
            J, D, kap = bkc_metastable.J, bkc_metastable.Delta, bkc_metastable.kappa
            re = sorted([-kap + D * np.cos(k), -kap - D * np.cos(k)])
            assert np.allclose(sorted(ev.real), re, atol=1e-12)
            assert np.allclose(np.abs(ev.imag), abs(J * np.sin(k)), atol=1e-12)

    def test_disordered_spec_has_no_symbol(self, bkc_metastable):
        spec = bkc_metastable.with_(disorder={"W": 0.1})
        with pytest.raises(SpecError):
            bloch_symbol(spec)

    def test_dynamical_matrix_of_bdg(self, bkc_metastable):
        assert np.allclose(dynamical_matrix(build_bdg(bkc_metastable)).G, build_dynamical(bkc_metastable).G)
