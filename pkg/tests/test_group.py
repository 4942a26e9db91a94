import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from gapspec.errors import EmptyOrders, FactorTooSmall, GroupMismatch, GroupTooLarge, NotReal
from gapspec.group import (
    GroupFunction,
    character_function,
    convolve,
    fourier,
    indicator,
    inverse_fourier,
    make_group,
    modulate_real,
    point_mass,
)

small_orders = st.lists(st.integers(2, 6), min_size=1, max_size=3).filter(
    lambda o: int(np.prod(o)) <= 64)


def random_function(grp, rng, real=False):
    vals = rng.standard_normal(grp.size)
    if not real:
        vals = vals + 1j * rng.standard_normal(grp.size)
    return GroupFunction(grp, vals)


def test_make_group_basic():
    g = make_group([8])
    assert g.size == 8 and g.rank == 1
    d = make_group([2, 2, 2])
    assert d.is_dyadic
    for gamma in range(d.size):
        assert set(np.unique(d.character(gamma))) <= {-1.0, 1.0}


@pytest.mark.parametrize("orders, exc", [([], EmptyOrders), ([4, 1], FactorTooSmall),
                                         ([2] * 23, GroupTooLarge)])
def test_make_group_errors(orders, exc):
    with pytest.raises(exc):
        make_group(orders)


def test_fourier_of_constant_and_character():
    g = make_group([4])
    assert np.allclose(fourier(GroupFunction(g, np.ones(4))).coefficients, [1, 0, 0, 0])
    g8 = make_group([8])
    coeffs = fourier(character_function(g8, 3)).coefficients
    expected = np.zeros(8)
    expected[3] = 1
    assert np.allclose(coeffs, expected, atol=1e-14)


def test_point_mass_transform_matches_defining_sum():
    g = make_group([4])
    vals = np.array([1.0, 0, 0, 0])
    got = fourier(GroupFunction(g, vals)).coefficients
    assert np.allclose(got, 0.25, atol=1e-15)
    assert np.allclose(got, oracles.dft_sum([4], vals), atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(orders=small_orders, seed=st.integers(0, 2 ** 32 - 1))
def test_transform_matches_oracle(orders, seed):
    g = make_group(orders)
    f = random_function(g, np.random.default_rng(seed))
    got = fourier(f).coefficients
    assert np.max(np.abs(got - oracles.dft_sum(orders, f.values))) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(orders=st.lists(st.integers(2, 16), min_size=1, max_size=3), seed=st.integers(0, 2 ** 32 - 1))
def test_plancherel_and_round_trip(orders, seed):
    g = make_group(orders)
    f = random_function(g, np.random.default_rng(seed))
    fh = fourier(f)
    assert np.isclose(fh.l2(), f.l2(), rtol=1e-10)
    back = inverse_fourier(fh, real=False).values
    assert np.max(np.abs(back - f.values)) <= 1e-12 * max(1.0, f.sup())


@settings(max_examples=40, deadline=None)
@given(orders=st.lists(st.integers(2, 12), min_size=1, max_size=3), seed=st.integers(0, 2 ** 32 - 1))
def test_convolution_theorem(orders, seed):
    g = make_group(orders)
    rng = np.random.default_rng(seed)
    f, h = random_function(g, rng), random_function(g, rng)
    lhs = fourier(convolve(f, h)).coefficients
    rhs = fourier(f).coefficients * fourier(h).coefficients
    assert np.max(np.abs(lhs - rhs)) <= 1e-10


@settings(max_examples=30, deadline=None)
@given(orders=small_orders, seed=st.integers(0, 2 ** 32 - 1))
def test_convolution_matches_oracle(orders, seed):
    g = make_group(orders)
    rng = np.random.default_rng(seed)
    f, h = random_function(g, rng), random_function(g, rng)
    assert np.allclose(convolve(f, h).values, oracles.convolve_sum(orders, f.values, h.values), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(orders=st.lists(st.integers(2, 12), min_size=1, max_size=3), seed=st.integers(0, 2 ** 32 - 1))
def test_real_functions_have_hermitian_spectrum(orders, seed):
    g = make_group(orders)
    f = random_function(g, np.random.default_rng(seed), real=True)
    c = fourier(f).coefficients
    assert np.max(np.abs(c[g.neg_perm] - np.conj(c))) <= 1e-12


def test_convolution_identities():
    g = make_group([3, 4])
    f = random_function(g, np.random.default_rng(0))
    assert np.allclose(convolve(f, point_mass(g)).values, f.values, atol=1e-12)
    chi = character_function(g, 5)
    assert np.allclose(convolve(chi, chi).values, chi.values, atol=1e-12)


def test_interval_self_convolution_at_zero():
    g = make_group([8])
    u = indicator(g, [1, 1, 0, 0, 0, 0, 0, 1])
    assert convolve(u, u).values[0] == pytest.approx(3 / 8, abs=1e-15)


def test_convolve_rejects_mismatched_groups():
    with pytest.raises(GroupMismatch):
        convolve(GroupFunction(make_group([4]), np.ones(4)), GroupFunction(make_group([5]), np.ones(5)))


def test_modulate_real():
    g = make_group([8])
    one = GroupFunction(g, np.ones(8))
    assert np.allclose(modulate_real(one, 2).values, np.cos(2 * np.pi * 2 * np.arange(8) / 8), atol=1e-15)
    assert np.allclose(modulate_real(one, 3).values, g.character(3).real)
    d = make_group([2, 2, 2])
    f = random_function(d, np.random.default_rng(1), real=True)
    for gamma in range(d.size):
        assert np.array_equal(modulate_real(f, gamma).values, f.values * d.character(gamma))
    with pytest.raises(NotReal):
        modulate_real(GroupFunction(g, 1j * np.ones(8)), 1)


@pytest.mark.parametrize("gamma, two_torsion", [(2, False), (4, True)])
def test_modulated_spectrum_shape(gamma, two_torsion):
    g = make_group([8])
    f = GroupFunction(g, 1 + np.cos(2 * np.pi * np.arange(8) / 8))  # spectrum {-1, 0, 1}
    c = fourier(modulate_real(f, gamma)).coefficients
    supp = set(np.flatnonzero(np.abs(c) > 1e-12))
    base = {7, 0, 1}
    expected = {(k + gamma) % 8 for k in base} | {(k - gamma) % 8 for k in base}
    assert supp == expected
    fc = fourier(f).coefficients
    # halved coefficients unless 2 gamma = 0
    scale = 1.0 if two_torsion else 0.5
    assert np.isclose(abs(c[gamma]), scale * abs(fc[0]))
