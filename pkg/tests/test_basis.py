import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from thinlayers.basis import SpectralCoeffs, analyze, eval_basis, evaluate, make_grid, synthesize
from thinlayers.errors import ConfigurationError, InputError


def test_eval_basis_examples():
    assert eval_basis(0, 1.3, 4.0, 0) == pytest.approx(0.5, abs=1e-15)
    assert eval_basis(3, 0.0, 2.0, 0) == pytest.approx(1.0, abs=1e-15)
    assert eval_basis(1, 0.0, np.pi, 3) == 0.0


@pytest.mark.parametrize("deriv", [0, 1, 2, 3])
def test_eval_basis_matches_closed_form(deriv):
    L = 2.5
    x = np.linspace(0, L, 37)
    ref = {0: oracles.phi, 1: oracles.dphi, 3: oracles.d3phi}
    for k in range(6):
        got = eval_basis(k, x, L, deriv)
        if deriv == 2:
            want = -((k * np.pi / L) ** 2) * oracles.phi(k, x, L)
        else:
            want = ref[deriv](k, x, L)
        np.testing.assert_allclose(got, want, atol=1e-12)


def test_mean_mode_derivatives_vanish():
    x = np.linspace(0, 3.0, 11)
    for d in (1, 2, 3):
        assert np.all(eval_basis(0, x, 3.0, d) == 0.0)


@pytest.mark.parametrize("bad", [dict(k=0, x=-0.1, L=1.0), dict(k=0, x=1.1, L=1.0), dict(k=-1, x=0.5, L=1.0)])
def test_eval_basis_domain(bad):
    with pytest.raises(InputError):
        eval_basis(bad["k"], bad["x"], bad["L"])
    with pytest.raises(InputError):
        eval_basis(0, 0.5, 1.0, deriv=4)


def test_midpoint_grid():
    grid = make_grid(8, 1.0)
    np.testing.assert_allclose(grid.weights, 1 / 8)
    assert grid.weights.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.all(np.diff(grid.nodes) > 0)


def test_gauss_grid_weights_sum_to_length():
    grid = make_grid(64, 3.0, rule="gauss")
    assert grid.weights.sum() == pytest.approx(3.0, rel=1e-14)
    assert np.all(grid.weights > 0)


def test_grid_rejects_bad_sizes():
    with pytest.raises(ConfigurationError):
        make_grid(1, 1.0)
    with pytest.raises(ConfigurationError):
        make_grid(16, 1.0, n=8)


@pytest.mark.parametrize("n", [0, 1, 8, 17, 40, 64])
def test_gram_matrix_is_identity(n):
    L = 1.7
    grid = make_grid(4 * (n + 1), L)
    T0 = grid.table(n, 0)
    gram = (T0 * grid.weights) @ T0.T
    assert np.max(np.abs(gram - np.eye(n + 1))) <= 1e-12


def test_gram_n8_M64():
    grid = make_grid(64, 1.0)
    T0 = grid.table(8, 0)
    assert np.max(np.abs((T0 * grid.weights) @ T0.T - np.eye(9))) <= 1e-12


def test_third_derivative_pairing_closed_form():
    n, L = 10, 2.0
    grid = make_grid(8 * (n + 1), L)
    pairing = (grid.table(n, 3) * grid.weights) @ grid.table(n, 1).T
    expected = -np.diag((np.arange(n + 1) * np.pi / L) ** 4)
    np.testing.assert_allclose(pairing, expected, atol=1e-10 * np.abs(expected).max(), rtol=0)


def test_synthesize_constant_and_eigenfunction():
    L, n = 2.0, 6
    grid = make_grid(8 * (n + 1), L)
    c = SpectralCoeffs.constant(1.0, n, L)
    np.testing.assert_allclose(synthesize(c, grid), 1.0, atol=1e-14)
    e1 = np.zeros(n + 1)
    e1[1] = 1.0
    np.testing.assert_allclose(
        synthesize(SpectralCoeffs(e1, L), grid, 2), -((np.pi / L) ** 2) * oracles.phi(1, grid.nodes, L), atol=1e-13
    )


def test_analyze_examples():
    L, n = 2.0, 5
    grid = make_grid(8 * (n + 1), L)
    c = analyze(np.ones(grid.M), grid, n)
    np.testing.assert_allclose(c.coeffs, [np.sqrt(2.0)] + [0.0] * n, atol=1e-14)
    c2 = analyze(oracles.phi(2, grid.nodes, L), grid, n)
    want = np.zeros(n + 1)
    want[2] = 1.0
    np.testing.assert_allclose(c2.coeffs, want, atol=1e-12)


def test_projection_of_clipped_parabola_can_undershoot():
    # documents that non-negativity survives truncation only approximately
    L, n = 1.0, 8
    grid = make_grid(64 * (n + 1), L)
    vals = np.maximum(0.0, 1.0 - ((grid.nodes - 0.5) / 0.2) ** 2)
    c = analyze(vals, grid, n)
    assert synthesize(c, grid).min() < 0.0


def test_length_mismatch():
    grid = make_grid(40, 1.0)
    with pytest.raises(InputError):
        synthesize(SpectralCoeffs(np.ones(3), 2.0), grid)
    with pytest.raises(InputError):
        analyze(np.ones(39), grid, 3)


def test_boundary_derivatives_vanish_exactly():
    rng = np.random.default_rng(3)
    for L in (1.0, np.pi, 0.37):
        c = SpectralCoeffs(rng.standard_normal(20), L)
        for d in (1, 3):
            assert evaluate(c, 0.0, d) == 0.0
            assert evaluate(c, L, d) == 0.0


coeff_vectors = st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=33)


@settings(max_examples=50, deadline=None)
@given(coeff_vectors, st.floats(0.1, 10.0))
def test_round_trip(coeffs, L):
    n = len(coeffs) - 1
    grid = make_grid(4 * (n + 1), L)
    c = SpectralCoeffs(np.array(coeffs), L)
    back = analyze(synthesize(c, grid), grid, n)
    np.testing.assert_allclose(back.coeffs, c.coeffs, atol=1e-12 * max(1.0, np.abs(c.coeffs).max()))


@settings(max_examples=30, deadline=None)
@given(coeff_vectors, st.floats(0.2, 5.0))
def test_eigen_relation(coeffs, L):
    n = len(coeffs) - 1
    grid = make_grid(4 * (n + 1), L)
    c = SpectralCoeffs(np.array(coeffs), L)
    got = analyze(-synthesize(c, grid, 2), grid, n).coeffs
    want = (np.arange(n + 1) * np.pi / L) ** 2 * c.coeffs
    np.testing.assert_allclose(got, want, atol=1e-10 * max(1.0, np.abs(want).max()))


def test_padding():
    c = SpectralCoeffs([1.0, 2.0, 3.0], 1.0)
    assert list(c.padded(4).coeffs) == [1.0, 2.0, 3.0, 0.0, 0.0]
    assert list(c.padded(1).coeffs) == [1.0, 2.0]
