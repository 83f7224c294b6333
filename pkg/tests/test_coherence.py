import numpy as np
import pytest

from cohvortex.coherence import (
    Axis,
    Ensemble,
    analytic_step_G,
    assemble,
    assemble_gradient,
    degree_of_coherence,
    grid,
    hermiticity_error,
    intensity,
    mixture,
    normalize,
    step_mixture,
)
from cohvortex.potential import PotentialProfile, free_space, make_step
from cohvortex.scattering import solve, step_coefficients

from conftest import K, Q


def free_pure(k=1.0):
    return Ensemble((solve(free_space(), k * k),))


def test_ensemble_validation():
    with pytest.raises(ValueError):
        Ensemble(())
    with pytest.raises(ValueError):
        Ensemble((solve(free_space(), 1.0, 0.0),))
    with pytest.raises(ValueError):
        mixture([free_space()], 1.0, [1.0, 2.0])


def test_assemble_pure_plane_wave():
    ens = free_pure()
    x, xp = -3.2, 7.1
    G = assemble(ens, x, xp)
    assert G == pytest.approx(np.exp(1j * (xp - x)), abs=1e-14)
    assert abs(G) == pytest.approx(1.0, abs=1e-14)


def test_assemble_three_phasor_expansion(step_ensemble):
    # direct expansion of conj(psi1(x)) psi1(x') + conj(psi2(x)) psi2(x')
    T, R = 20 / 11, 9 / 11
    x, xp = -1.0, 1.0
    expected = np.exp(1j * (-K * x + K * xp)) + T * np.exp(1j * (-K * x + Q * xp)) + T * R * np.exp(1j * (K * x + Q * xp))
    assert assemble(step_ensemble, x, xp) == pytest.approx(expected, abs=1e-12)


def test_assemble_diagonal_is_intensity(step_ensemble):
    xs = np.array([-4.0, -0.3, 0.0, 2.2, 9.0])
    G = assemble(step_ensemble, xs, xs)
    np.testing.assert_allclose(G.imag, 0, atol=1e-14)
    assert np.all(G.real >= 0)
    np.testing.assert_allclose(G.real, intensity(step_ensemble, xs), rtol=1e-14)


def test_analytic_matches_assemble(step_ensemble):
    assert analytic_step_G(K, Q, -1.0, 1.0) == pytest.approx(assemble(step_ensemble, -1.0, 1.0), abs=1e-10)


def test_analytic_free_limit():
    x, xp = -2.0, 3.0
    assert analytic_step_G(1.0, 1.0, x, xp) == pytest.approx(2 * np.exp(1j * (xp - x)), abs=1e-14)


@pytest.mark.parametrize("x, xp", [(0.0, 1.0), (1.0, 1.0), (-1.0, 0.0), (-1.0, -2.0)])
def test_analytic_quadrant_enforced(x, xp):
    with pytest.raises(ValueError):
        analytic_step_G(K, Q, x, xp)


def test_gradient_matches_finite_difference(step_ensemble):
    x, xp, h = -2.3, 4.1, 1e-6
    gx, gxp = assemble_gradient(step_ensemble, x, xp)
    fx = (assemble(step_ensemble, x + h, xp) - assemble(step_ensemble, x - h, xp)) / (2 * h)
    fxp = (assemble(step_ensemble, x, xp + h) - assemble(step_ensemble, x, xp - h)) / (2 * h)
    assert abs(gx - fx) < 1e-8 and abs(gxp - fxp) < 1e-8


def test_grid_free_wave_unit_modulus():
    cf = grid(free_pure(), Axis(-1, 1, 2), Axis(-1, 1, 2))
    np.testing.assert_allclose(np.abs(cf.values), 1.0, atol=1e-15)
    assert not cf.normalized


def test_grid_entries_equal_assemble(step_ensemble):
    xa, xpa = Axis(-5, 5, 7), Axis(-3, 8, 9)
    cf = grid(step_ensemble, xa, xpa)
    X, XP = np.meshgrid(xa.values, xpa.values, indexing="ij")
    np.testing.assert_allclose(cf.values, assemble(step_ensemble, X, XP), atol=1e-14)


def test_grid_symmetric_axes_hermitian(step_ensemble):
    ax = Axis(-10, 10, 101)
    cf = grid(step_ensemble, ax, ax)
    assert np.max(np.abs(cf.values - cf.values.conj().T)) < 1e-12 * cf.max_abs()
    assert hermiticity_error(cf) < 1e-12 * cf.max_abs()


def test_hermiticity_error_non_symmetric_axes(step_ensemble):
    cf = grid(step_ensemble, Axis(-5, 1, 31), Axis(-2, 6, 41))
    assert hermiticity_error(cf) < 1e-12 * cf.max_abs()


def test_fig5_density_morphology(small_field):
    d = np.abs(small_field.values) ** 2
    d /= d.max()
    assert d.max() == 1.0
    # the field has zeros and reaches the phasor-sum maximum (1 + T + TR)^2
    T, R = step_coefficients(K, Q)
    assert small_field.max_abs() <= 1 + T + T * R + 1e-12
    assert small_field.max_abs() > 0.95 * (1 + T + T * R)
    assert d.min() < 1e-3


@pytest.mark.parametrize("bad", [1, 0])
def test_axis_needs_two_points(bad):
    with pytest.raises(ValueError):
        Axis(0.0, 1.0, bad)


def test_axis_parse():
    ax = Axis.parse("-15:0:1500")
    assert (ax.start, ax.stop, ax.count) == (-15.0, 0.0, 1500)
    assert ax.step == pytest.approx(15 / 1499)
    with pytest.raises(ValueError):
        Axis.parse("1:2")


def test_normalize_pure_plane_wave():
    ax = Axis(-4, 4, 21)
    g = normalize(grid(free_pure(), ax, ax))
    np.testing.assert_allclose(np.abs(g.values), 1.0, atol=1e-14)


def test_normalize_diagonal_and_bound(step_ensemble):
    ax = Axis(-8, 8, 81)
    g = normalize(grid(step_ensemble, ax, ax))
    np.testing.assert_allclose(np.diag(g.values), 1.0, atol=1e-14)
    assert np.nanmax(np.abs(g.values)) <= 1 + 1e-9


def test_normalize_keeps_phase(step_ensemble):
    cf = grid(step_ensemble, Axis(-8, -0.1, 40), Axis(0.1, 9, 50))
    g = normalize(cf)
    d = np.angle(g.values * np.conj(cf.values))
    np.testing.assert_allclose(d, 0, atol=1e-12)


def test_normalize_vanishes_at_vortex_core(step_ensemble):
    from cohvortex.singularity import analytic_lattice

    site = analytic_lattice(K, Q, 1, ((-6.0, -0.1), (0.1, 6.0)))[0]
    g = degree_of_coherence(step_ensemble, site.x, site.xp)
    assert abs(g) < 1e-12


def test_normalize_flags_degenerate_intensity():
    # a barrier far too thick to tunnel through: transmitted intensity underflows
    ens = Ensemble((solve(PotentialProfile((0.0,), (0.0, 400.0)), 1.0),))
    cf = grid(ens, Axis(-2, 2, 5), Axis(4, 8, 5))
    g = normalize(cf)
    assert g.degenerate.all()
    assert np.isnan(g.values).all()


def test_transpose_swaps_arguments(step_ensemble):
    cf = grid(step_ensemble, Axis(-5, -1, 5), Axis(1, 5, 7))
    t = cf.transpose()
    assert t.shape == (7, 5)
    np.testing.assert_allclose(t.values, cf.values.T)
    assert t.evaluate(2.0, -3.0) == pytest.approx(cf.evaluate(-3.0, 2.0))
