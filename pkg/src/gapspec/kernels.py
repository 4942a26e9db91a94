"""Fejer-type kernels Phi_U, window search, and covering partitions of unity."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import NonDividingBlock
from .group import (
    Group,
    GroupFunction,
    SpectralFunction,
    _dft,
    fourier,
    multiply_spectrum,
)

NEG_CLAMP = 1e-12


@dataclass(frozen=True, eq=False)
class SpectrumWindow:
    """Symmetric neighbourhood U of 0 in the dual group.

    ``params`` holds per-axis half-widths for the interval style and the tuple
    of full axes for the subgroup style.
    """

    group: Group
    mask: np.ndarray
    style: str
    params: tuple

    @property
    def size(self):
        return int(self.mask.sum())

    def contains(self, other):
        return bool(np.all(self.mask[other.mask]))

    def __repr__(self):
        return f"SpectrumWindow({self.style}, {self.params}, |U|={self.size})"


def interval_window(group, halfwidths):
    """Product of symmetric segments {-u_j..u_j}; u_j >= N_j // 2 gives the whole factor."""
    if np.isscalar(halfwidths):
        halfwidths = [halfwidths] * group.rank
    u = tuple(min(int(h), n // 2) for h, n in zip(halfwidths, group.orders))
    mask = np.all(np.abs(group.signed_coords) <= np.asarray(u), axis=1)
    mask.flags.writeable = False
    return SpectrumWindow(group, mask, "interval", u)


def subgroup_window(group, axes):
    """Coordinate subgroup: full factors on ``axes``, zero elsewhere.

    On Z_2^m with ``axes = range(k)`` this is the Walsh-Paley block of the first
    2^k characters.
    """
    axes = tuple(sorted(set(int(a) for a in axes)))
    others = [j for j in range(group.rank) if j not in axes]
    mask = np.all(group.coords[:, others] == 0, axis=1) if others else np.ones(group.size, bool)
    mask.flags.writeable = False
    return SpectrumWindow(group, mask, "subgroup", axes)


def full_window(group, style="interval"):
    if style == "subgroup":
        return subgroup_window(group, range(group.rank))
    return interval_window(group, [n // 2 for n in group.orders])


def _self_convolution_counts(group, mask):
    """#(A intersect (x - A)) for every x, exact integers."""
    a = np.asarray(mask, dtype=float)
    spec = _dft(a, group, False)
    return np.rint(_dft(spec * spec, group, True).real / group.size)


def fejer_system(window):
    """Return (psi_U, Phi_U).

    psi_U = (chi_U * chi_U)/|U| on the dual group (counting measure) and
    Phi_U = |sum_{u in U} u(x)|^2 / |U|, which is the inverse transform of psi_U.
    """
    grp = window.group
    n_u = window.size
    psi = _self_convolution_counts(grp, window.mask) / n_u
    dirichlet = _dft(window.mask.astype(float), grp, True)
    phi = np.abs(dirichlet) ** 2 / n_u
    phi[(phi < 0) & (phi > -NEG_CLAMP)] = 0.0
    return SpectralFunction(grp, psi), GroupFunction(grp, phi)


def fejer_multiplier(window):
    """psi_U as a real array (the Fourier multiplier of f -> Phi_U * f)."""
    return _self_convolution_counts(window.group, window.mask) / window.size


def smooth(f, window, multiplier=None):
    """Phi_U * f, applied as a Fourier multiplier."""
    if multiplier is None:
        multiplier = fejer_multiplier(window)
    return multiply_spectrum(f, multiplier)


@dataclass
class WindowConstraints:
    """Conditions a window U_n has to meet.

    functions/rho: ||Phi_U * f - f||_1 < rho for every f.
    weight/ratio: Phi_U * w <= ratio * w pointwise.
    bumps: ||Phi_U * alpha||_2^2 >= 1/2 ||alpha||_2^2 for every alpha.
    """

    group: Group
    style: str = "interval"
    previous: Optional[SpectrumWindow] = None
    functions: Sequence[GroupFunction] = field(default_factory=list)
    rho: float = np.inf
    weight: Optional[GroupFunction] = None
    ratio: float = 1.0
    bumps: Sequence[GroupFunction] = field(default_factory=list)

    def __post_init__(self):
        self._f_hats = [_dft(f.values, self.group, False) / self.group.size for f in self.functions]
        self._w_hat = None if self.weight is None else _dft(self.weight.values, self.group, False) / self.group.size
        # translates share |alpha-hat|; keep the distinct profiles only
        seen, mods = set(), []
        for b in self.bumps:
            m = np.abs(fourier(b).coefficients) ** 2
            key = np.round(m, 14).tobytes()
            if key not in seen:
                seen.add(key)
                mods.append(m)
        self._bump_mods = mods

    def failures(self, window):
        """Names of the violated conditions (empty list when U is admissible)."""
        grp = self.group
        psi = fejer_multiplier(window)
        failed = []
        for fh in self._f_hats:
            diff = _dft(fh * (psi - 1.0), grp, True)
            if np.abs(diff).mean() >= self.rho:
                failed.append("approximation")
                break
        if self._w_hat is not None:
            conv = _dft(self._w_hat * psi, grp, True).real
            w = self.weight.values.real
            if np.any(conv > self.ratio * w * (1 + 1e-12) + 1e-12):
                failed.append("domination")
        for m in self._bump_mods:
            if (psi ** 2 * m).sum() < 0.5 * m.sum() * (1 - 1e-12):
                failed.append("energy")
                break
        return failed

    def admits(self, window):
        return not self.failures(window)


def window_candidates(group, style, previous=None):
    """Windows in the fixed search order, all containing ``previous``."""
    if style == "subgroup":
        start = 0 if previous is None else len(previous.params)
        for k in range(start, group.rank + 1):
            yield subgroup_window(group, range(k))
        return
    prev_u = np.zeros(group.rank, int) if previous is None else np.asarray(previous.params)
    top = max(n // 2 for n in group.orders)
    for s in range(int(prev_u.max(initial=0)), top + 1):
        u = np.maximum(prev_u, np.minimum(s, [n // 2 for n in group.orders]))
        yield interval_window(group, u)


def _interval_at(group, prev_u, s):
    return interval_window(group, np.maximum(prev_u, np.minimum(s, [n // 2 for n in group.orders])))


def select_window(constraints):
    """Smallest window containing ``previous`` meeting every constraint.

    Interval style: the common half-width doubles until the constraints hold
    and is then refined by bisection.  Subgroup style walks the chain of
    coordinate subgroups.  The full dual group satisfies every constraint, so
    the search terminates.
    """
    grp = constraints.group
    if constraints.style == "subgroup":
        for cand in window_candidates(grp, "subgroup", constraints.previous):
            if constraints.admits(cand):
                return cand
        return full_window(grp, "subgroup")

    prev = constraints.previous
    prev_u = np.zeros(grp.rank, int) if prev is None else np.asarray(prev.params)
    top = max(n // 2 for n in grp.orders)
    s = int(prev_u.max(initial=0))
    lo = s - 1  # last half-width known to fail
    while True:
        cand = _interval_at(grp, prev_u, s)
        if s >= top or constraints.admits(cand):
            break
        lo = s
        s = max(1, 2 * s)
        s = min(s, top)
    hi = s
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if constraints.admits(_interval_at(grp, prev_u, mid)):
            hi = mid
        else:
            lo = mid
    return _interval_at(grp, prev_u, hi)


class Partition:
    """Partition of unity alpha_i(t) = profile(t - x_i) over tiling centres x_i."""

    def __init__(self, group, centers, profile, style, block, dim):
        self.group = group
        self.centers = np.asarray(centers, dtype=int)
        self.profile = profile
        self.style = style
        self.block = block
        self.dim = dim

    def __len__(self):
        return len(self.centers)

    def __repr__(self):
        return f"Partition({self.style}, block={self.block}, {len(self)} bumps)"

    def bump(self, i):
        return GroupFunction(self.group, self.group.translate(self.profile.values, self.centers[i]))

    @property
    def bumps(self):
        return [self.bump(i) for i in range(len(self))]

    def combine(self, coeffs):
        """sum_i c_i alpha_i as one convolution of the coefficient field with the profile."""
        grp = self.group
        field_ = np.zeros(grp.size, dtype=np.result_type(np.asarray(coeffs), float))
        field_[self.centers] = coeffs
        vals = _dft(_dft(field_, grp, False) * _dft(self.profile.values, grp, False), grp, True) / grp.size
        if not np.iscomplexobj(field_):
            vals = vals.real
        return GroupFunction(grp, vals)

    def multiplicity(self):
        grp = self.group
        supp = (self.profile.values > 1e-14).astype(float)
        marks = np.zeros(grp.size)
        marks[self.centers] = 1.0
        counts = _dft(_dft(supp, grp, False) * _dft(marks, grp, False), grp, True).real / grp.size
        return int(np.rint(counts).max())


def _dim(group):
    return sum(1 for n in group.orders if n > 2)


def covering_partition(group, block, style="triangle"):
    """Partition of unity from a covering neighbourhood V.

    triangle: ``block`` is the per-axis half-size b_j of V = prod {-b_j..b_j};
    2 b_j + 1 must divide N_j and the centres are the multiples of 2 b_j + 1.
    coset: ``block`` is the tuple of axes on which the subgroup V is full;
    the centres form the complementary coordinate transversal.
    """
    if style == "triangle":
        if np.isscalar(block):
            block = [block] * group.rank
        block = tuple(int(b) for b in block)
        steps = [2 * b + 1 for b in block]
        for m, n in zip(steps, group.orders):
            if n % m:
                raise NonDividingBlock(f"block size {m} does not divide factor order {n}")
        vmask = np.all(np.abs(group.signed_coords) <= np.asarray(block), axis=1)
        profile = _self_convolution_counts(group, vmask) / vmask.sum()
        centers = np.flatnonzero(np.all(group.coords % np.asarray(steps) == 0, axis=1))
        return Partition(group, centers, GroupFunction(group, profile), style, block, _dim(group))
    if style == "coset":
        free = tuple(sorted(set(int(a) for a in block)))
        fixed = [j for j in range(group.rank) if j not in free]
        if free:
            vmask = np.all(group.coords[:, fixed] == 0, axis=1) if fixed else np.ones(group.size, bool)
            centers = np.flatnonzero(np.all(group.coords[:, list(free)] == 0, axis=1))
        else:
            vmask = np.zeros(group.size, bool)
            vmask[0] = True
            centers = np.arange(group.size)
        return Partition(group, centers, GroupFunction(group, vmask.astype(float)), style, free, 0)
    raise ValueError(f"unknown partition style {style!r}")


def triangle_blocks(group):
    """Admissible triangle half-sizes, coarsest first, refining the widest axis each time."""
    divisors = []
    for n in group.orders:
        odd = sorted((m for m in range(1, n + 1, 2) if n % m == 0), reverse=True)
        divisors.append(odd)
    pos = [0] * group.rank
    out = []
    while True:
        out.append(tuple((divisors[j][pos[j]] - 1) // 2 for j in range(group.rank)))
        movable = [j for j in range(group.rank) if pos[j] + 1 < len(divisors[j])]
        if not movable:
            return out
        j = max(movable, key=lambda j: divisors[j][pos[j]])
        pos[j] += 1


def coset_blocks(group):
    """Coset subgroups V_k (free on axes k..r-1), coarsest (k = 0) first."""
    return [tuple(range(k, group.rank)) for k in range(group.rank + 1)]
