"""Tests for qbl/pseudospectrum.py — sigma_min grids, abscissae and the transient bound."""
import numpy as np
import pytest
import scipy.linalg as sla

from qbl.errors import NumericalError
from qbl.models import ModelSpec, bloch_symbol, build_dynamical
from qbl.pseudospectrum import (
    PseudospectrumGrid,
    default_region,
    epsilon_contours,
    hermitian_part,
    omega_constant,
    pseudo_abscissa,
    pseudo_mode,
    sigma_min,
    sigma_min_grid,
    transient_bound,
)


def _jordan(n: int, lam: float = -1.0, coupling: float = 2.0) -> np.ndarray:
    return lam * np.eye(n) + coupling * np.eye(n, k=-1)


class TestSigmaMin:
    def test_normal_matrix_is_distance_to_spectrum(self):
        A = np.diag([-1.0, -2.0, -3.0]).astype(complex)
        assert sigma_min(A, -1.5 + 0.5j) == pytest.approx(abs(0.5 + 0.5j))

    def test_zero_at_eigenvalue(self):
        A = np.diag([-1.0, -2.0]).astype(complex)
        assert sigma_min(A, -2.0) == pytest.approx(0.0, abs=1e-14)

    def test_pseudo_mode_residual(self):
        A = _jordan(8)
        pm = pseudo_mode(A, 0.0)
        assert np.linalg.norm(A @ pm.v) == pytest.approx(pm.sigma_min, rel=1e-8)
        assert np.linalg.norm(pm.v) == pytest.approx(1.0)


class TestGrid:
    def test_shape_and_ordering(self):
        A = np.diag([-1.0, -2.0]).astype(complex)
        grid = sigma_min_grid(A, (-3.0, 0.0, -1.0, 1.0), (7, 5))
        assert grid.values.shape == (5, 7)
        assert grid.resolution == (7, 5)
        first = next(grid.points())
        assert first[:2] == (-3.0, -1.0)
        assert first[2] == pytest.approx(sigma_min(A, -3.0 - 1.0j))

    def test_threads_do_not_change_values(self):
        A = _jordan(6)
        region = (-2.0, 0.5, -1.0, 1.0)
        a = sigma_min_grid(A, region, (9, 9), threads=1)
        b = sigma_min_grid(A, region, (9, 9), threads=3)
        assert np.array_equal(a.values, b.values)

    def test_degenerate_region(self):
        with pytest.raises(ValueError):
            sigma_min_grid(np.eye(2), (0.0, 0.0, -1.0, 1.0), (4, 4))

    def test_default_region_contains_spectrum(self, bkc_metastable):
        A = -1j * build_dynamical(bkc_metastable).G
        re_min, re_max, im_min, im_max = default_region(A)
        ev = np.linalg.eigvals(A)
        assert np.all((ev.real > re_min) & (ev.real < re_max))
        assert np.all((ev.imag > im_min) & (ev.imag < im_max))


class TestContours:
    def test_circle_around_single_eigenvalue(self):
        pytest.importorskip("contourpy")
        re = np.linspace(-1.5, -0.5, 101)
        im = np.linspace(-0.5, 0.5, 101)
        values = np.abs(re[None, :] + 1j * im[:, None] + 1.0)
        lines = epsilon_contours(PseudospectrumGrid(re=re, im=im, values=values), [0.1, 0.01])
        assert set(lines) == {0.1, 0.01}
        assert lines[0.1]
        pts = np.concatenate(lines[0.1])
        assert np.allclose(np.abs(pts[:, 0] + 1j * pts[:, 1] + 1.0), 0.1, atol=5e-3)
        assert np.ptp(pts[:, 0]) == pytest.approx(0.2, abs=1e-2)


class TestAbscissa:
    def test_normal_matrix(self):
        A = np.diag([-1.0, -2.0]).astype(complex)
        a = pseudo_abscissa(A, 0.1, region=(-3.0, 0.5, -1.0, 1.0))
        assert a <= -0.9 + 1e-9
        assert a == pytest.approx(-0.9, abs=1e-3)

    def test_nonnormal_abscissa_crosses_zero(self):
        """A Hurwitz Jordan-like block has pseudospectra reaching into Re > 0."""
        A = _jordan(16)
        grid = sigma_min_grid(A, (-3.0, 1.0, -2.0, 2.0), (41, 41))
        a = pseudo_abscissa(A, 1e-3, grid=grid)
        assert a > 0.0

    def test_empty_pseudospectrum(self):
        A = np.diag([-1.0, -2.0]).astype(complex)
        grid = sigma_min_grid(A, (5.0, 6.0, 5.0, 6.0), (3, 3))
        with pytest.raises(NumericalError):
            pseudo_abscissa(A, 1e-3, grid=grid)

    def test_transient_bound_is_a_lower_bound(self):
        A = _jordan(8)
        bound = transient_bound(A, [1e-1, 1e-2, 1e-3], region=(-3.0, 1.5, -2.0, 2.0))
        peak = max(np.linalg.norm(sla.expm(A * t), 2) for t in np.linspace(0.0, 20.0, 401))
        assert bound.bound > 1.0
        assert bound.bound <= peak * (1 + 1e-6)
        assert set(bound.as_dict()) == {"epsilons", "abscissas", "transient_bound"}


class TestOmega:
    def test_hermitian_part(self):
        X = np.array([[1.0, 2.0j], [0.0, 3.0]])
        assert np.allclose(hermitian_part(X), hermitian_part(X).conj().T)

    def test_omega_bounds_obc_numerical_abscissa(self, bkc_metastable):
        omega = omega_constant(bloch_symbol(bkc_metastable), k_count=256)
        A = -1j * build_dynamical(bkc_metastable).G
        obc = float(np.linalg.eigvalsh(hermitian_part(A))[-1])
        assert obc <= omega + 1e-12
        assert omega > 0.0

    def test_lossy_modes(self, lossy_pair):
        assert omega_constant(bloch_symbol(lossy_pair), k_count=64) == pytest.approx(-0.5)


@pytest.mark.slow
class TestSigmaMinScaling:
    def test_metastable_decays_and_stable_does_not(self):
        from qbl.modes import sigma_min_scaling

        meta = ModelSpec(J=2.0, Delta=0.5, kappa=0.3)
        stab = ModelSpec(J=2.0, Delta=0.5, kappa=0.7)
        Ns = [10, 15, 20, 25, 30]
        m = sigma_min_scaling(meta, Ns)
        assert m["slope"] < 0 and m["r2"] > 0.99
        s = sigma_min_scaling(stab, Ns)
        assert min(s["sigma_min"]) > 0.05
