import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bgkheat.errors import ConfigurationError, ContractViolation, DomainError
from bgkheat.phase_space import (
    build_grid, default_v_max, maxwellian, maxwellian_field, moments, spectral_derivative,
)


def test_grid_midpoint_node_and_spacing():
    g = build_grid(64, 129, 8.0)
    assert g.dx == 1 / 64
    assert g.velocity_nodes[64] == 0.0


def test_small_grid_weights_sum():
    g = build_grid(4, 9, 1.0)
    assert math.isclose(g.velocity_weights.sum(), 2.0, rel_tol=0, abs_tol=1e-15)


@pytest.mark.parametrize("args", [(3, 9, 1.0), (2, 9, 1.0), (4, 8, 1.0), (4, 7, 1.0), (4, 9, 0.0), (4, 9, -1.0)])
def test_bad_grids_rejected(args):
    with pytest.raises(ConfigurationError):
        build_grid(*args)


def test_only_one_dimension_is_gridded():
    with pytest.raises(ConfigurationError):
        build_grid(8, 9, 1.0, d=2)


@given(st.sampled_from([4, 8, 16, 64]), st.integers(4, 200), st.floats(0.5, 20.0))
def test_grid_symmetry_and_total_weight(nx, half, v_max):
    g = build_grid(nx, 2 * half + 1, v_max)
    v = g.velocity_nodes
    assert np.array_equal(v, -v[::-1])
    assert math.isclose(g.velocity_weights.sum(), 2 * v_max, rel_tol=1e-14)


def test_maxwellian_peak_value():
    g = build_grid(4, 9, 1.0)
    assert math.isclose(maxwellian(1.0, g)[4], 0.5641895835477563, rel_tol=1e-15)


def test_maxwellian_rejects_nonpositive_temperature():
    g = build_grid(4, 9, 1.0)
    for T in (0.0, -1.0, float("nan")):
        with pytest.raises(DomainError):
            maxwellian(T, g)


@pytest.mark.parametrize("T", [0.25, 1.0, 2.0, 4.0])
def test_moment_identities(T):
    g = build_grid(16, 257, 8 * math.sqrt(T))
    M, v, w = maxwellian(T, g), g.velocity_nodes, g.velocity_weights
    assert abs(w @ M - 1) < 1e-10
    assert abs(w @ (v**2 * M) - T / 2) < 1e-10
    assert abs(w @ (v**4 * M) - 3 * T**2 / 4) < 1e-9


def test_moments_at_temperature_two():
    g = build_grid(8, 257, 6 * math.sqrt(2))
    M, v, w = maxwellian(2.0, g), g.velocity_nodes, g.velocity_weights
    assert abs(w @ M - 1) < 1e-10
    assert abs(w @ (v**2 * M) - 1.0) < 1e-10
    assert abs(w @ (v**4 * M) - 3.0) < 1e-9


def test_maxwellian_positive_and_even():
    g = build_grid(4, 129, 8.0)
    M = maxwellian(0.7, g)
    assert np.all(M > 0)
    assert np.array_equal(M, M[::-1])


def test_moments_of_uniform_maxwellian_state():
    g = build_grid(16, 257, 8.0)
    f = 2.0 * np.tile(maxwellian(1.0, g), (g.nx, 1))
    rho, mom, energy = moments(f, g)
    assert np.max(np.abs(rho - 2)) < 1e-12
    assert np.max(np.abs(mom)) < 1e-12
    assert np.max(np.abs(energy - 1)) < 1e-9


def test_moments_of_zero():
    g = build_grid(8, 17, 4.0)
    for m in moments(np.zeros(g.shape), g):
        assert np.all(m == 0)


def test_even_distribution_has_zero_momentum(small_grid, rng):
    half = rng.random((small_grid.nx, small_grid.nv))
    f = half + half[:, ::-1]
    _, mom, _ = moments(f, small_grid)
    assert np.all(np.abs(mom) < 1e-15)


@settings(max_examples=25)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**32 - 1))
def test_moments_linear(a, b, seed):
    g = build_grid(8, 33, 5.0)
    r = np.random.default_rng(seed)
    f, h = r.random(g.shape), r.random(g.shape)
    left = moments(a * f + b * h, g)
    mf, mh = moments(f, g), moments(h, g)
    for lhs, x, y in zip(left, mf, mh):
        assert np.allclose(lhs, a * x + b * y, rtol=0, atol=1e-13)


def test_moments_shape_contract():
    g = build_grid(8, 17, 4.0)
    with pytest.raises(ContractViolation):
        moments(np.zeros((8, 16)), g)


def test_maxwellian_field_rows_match_scalar():
    g = build_grid(8, 33, 6.0)
    T = np.linspace(0.5, 2.0, 8)
    field = maxwellian_field(T, g)
    for i in range(8):
        assert np.array_equal(field[i], maxwellian(T[i], g))


def test_default_v_max():
    assert default_v_max(1.0) == 8.0
    assert math.isclose(default_v_max(4.0), 16.0)


def test_spectral_derivative_of_single_mode():
    x = np.arange(32) / 32
    u = np.sin(2 * np.pi * 3 * x)
    assert np.allclose(spectral_derivative(u), 6 * np.pi * np.cos(2 * np.pi * 3 * x), atol=1e-12)
    assert np.allclose(spectral_derivative(u, 2), -(6 * np.pi) ** 2 * u, atol=1e-9)
