import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from gapspec.errors import NonDividingBlock
from gapspec.group import GroupFunction, fourier, make_group
from gapspec.kernels import (
    WindowConstraints,
    coset_blocks,
    covering_partition,
    fejer_system,
    full_window,
    interval_window,
    select_window,
    smooth,
    subgroup_window,
    triangle_blocks,
)

orders_st = st.lists(st.integers(2, 24), min_size=1, max_size=2)


def test_fejer_z8():
    g = make_group([8])
    psi, phi = fejer_system(interval_window(g, 1))
    assert np.allclose(psi.coefficients.real, oracles.fejer_counts(8, 1) / 3, atol=1e-15)
    assert np.allclose(psi.coefficients.real, [1, 2 / 3, 1 / 3, 0, 0, 0, 1 / 3, 2 / 3])
    assert phi.integral() == pytest.approx(1, abs=1e-12)


def test_full_window_gives_identity_kernel():
    g = make_group([6, 4])
    psi, phi = fejer_system(full_window(g))
    assert np.allclose(psi.coefficients, 1)
    expected = np.zeros(g.size)
    expected[0] = g.size
    assert np.allclose(phi.values, expected, atol=1e-9)


def test_dyadic_subgroup_kernel_is_annihilator_indicator():
    g = make_group([2] * 4)
    win = subgroup_window(g, [0, 1])
    psi, phi = fejer_system(win)
    assert np.array_equal(psi.coefficients.real, win.mask.astype(float))
    annihilator = np.all(g.coords[:, :2] == 0, axis=1)
    assert np.allclose(phi.values, 4.0 * annihilator)
    assert phi.integral() == pytest.approx(1)


@settings(max_examples=50, deadline=None)
@given(orders=orders_st, data=st.data())
def test_fejer_properties(orders, data):
    g = make_group(orders)
    u = [data.draw(st.integers(0, n // 2)) for n in orders]
    win = interval_window(g, u)
    psi, phi = fejer_system(win)
    assert np.all(phi.values >= 0)
    assert abs(phi.integral() - 1) <= 1e-12
    assert psi.coefficients[0] == pytest.approx(1)
    assert np.array_equal(psi.support(), g.sumset(win.mask, win.mask))


def test_select_window_matches_brute_force():
    g = make_group([16])
    f = GroupFunction(g, np.r_[np.ones(8), np.zeros(8)])
    win = select_window(WindowConstraints(g, functions=[f], rho=0.3))
    assert win.params == (oracles.smallest_interval_window(16, f.values, 0.3),)
    assert win.params == (1,)


@pytest.mark.parametrize("n", [32, 64, 81])
def test_select_window_is_minimal_on_cyclic_groups(n):
    g = make_group([n])
    rng = np.random.default_rng(n)
    f = GroupFunction(g, (rng.uniform(size=n) < 0.4).astype(float))
    for rho in (0.2, 0.05, 0.01):
        win = select_window(WindowConstraints(g, functions=[f], rho=rho))
        assert win.params == (oracles.smallest_interval_window(n, f.values, rho),)


def test_select_window_monotone_in_budget():
    g = make_group([64])
    f = GroupFunction(g, (np.arange(64) % 7 < 3).astype(float))
    widths = [select_window(WindowConstraints(g, functions=[f], rho=r)).params[0]
              for r in (0.4, 0.2, 0.1, 0.05, 0.02)]
    assert widths == sorted(widths)


def test_domination_holds_for_constant_weight():
    g = make_group([30])
    one = GroupFunction(g, np.ones(30))
    for u in range(16):
        assert np.allclose(smooth(one, interval_window(g, u)).values, 1)
        assert WindowConstraints(g, weight=one, ratio=1.0).admits(interval_window(g, u))


def test_energy_constraint():
    g = make_group([27])
    part = covering_partition(g, 4)
    cons = WindowConstraints(g, bumps=[part.profile])
    win = select_window(cons)
    beta = smooth(part.profile, win)
    assert beta.l2() ** 2 >= 0.5 * part.profile.l2() ** 2
    if win.params[0] > 0:
        smaller = interval_window(g, win.params[0] - 1)
        assert not cons.admits(smaller)


def test_triangle_partition_z9():
    g = make_group([9])
    part = covering_partition(g, 1)
    assert list(part.centers) == [0, 3, 6]
    assert np.allclose(part.bump(0).values, oracles.fejer_counts(9, 1) / 3)
    assert np.allclose(part.bump(0).values[:4], [1, 2 / 3, 1 / 3, 0])
    assert np.allclose(sum(b.values for b in part.bumps), 1, atol=1e-12)
    assert part.multiplicity() == 2


def test_coset_partition():
    g = make_group([2] * 4)
    part = covering_partition(g, (2, 3), "coset")
    assert len(part) == 4
    for b in part.bumps:
        assert set(np.unique(b.values)) == {0.0, 1.0}
    assert np.array_equal(sum(b.values for b in part.bumps), np.ones(16))
    assert part.multiplicity() == 1


def test_non_dividing_block():
    with pytest.raises(NonDividingBlock):
        covering_partition(make_group([8]), 1)


def _all_partitions(g):
    for block in triangle_blocks(g):
        yield covering_partition(g, block, "triangle")
    for block in coset_blocks(g):
        yield covering_partition(g, block, "coset")


@pytest.mark.parametrize("orders", [[9], [15], [27], [3, 5], [9, 3], [2, 2, 2], [2, 9], [25]])
def test_partition_invariants(orders):
    g = make_group(orders)
    for part in _all_partitions(g):
        total = sum(b.values for b in part.bumps)
        assert np.max(np.abs(total - 1)) <= 1e-12
        for b in part.bumps:
            assert b.values.max() == pytest.approx(1)
            assert b.values.min() >= -1e-15
            assert abs(fourier(b).l1() - 1) <= 1e-10
        d = part.dim if part.style == "triangle" else 0
        assert part.multiplicity() <= 2 ** d
        squares = sum(b.values ** 2 for b in part.bumps)
        assert squares.min() >= 2.0 ** (-d) - 1e-12


def test_triangle_blocks_order():
    g = make_group([45])
    assert triangle_blocks(g) == [(22,), (7,), (4,), (2,), (1,), (0,)]
    assert triangle_blocks(make_group([256])) == [(0,)]
