"""Sufficient pairs, summation bases, splitting unions and partial-sum operators."""

from __future__ import annotations

from itertools import product
from typing import NamedTuple, Optional

import numpy as np

from .errors import BasisNotEnumerable
from .group import _dft, multiply_spectrum

DEFAULT_BASIS_CAP = 50_000
_CHUNK = 2048


def as_mask(group, indices):
    mask = np.zeros(group.size, dtype=bool)
    mask[np.asarray(list(indices), dtype=int)] = True
    return mask


def splits(b, e):
    """B splits E iff both E & B and E \\ B are nonempty."""
    b = np.asarray(b, dtype=bool)
    e = np.asarray(e, dtype=bool)
    return bool(np.any(e & b) and np.any(e & ~b))


class SummationBasis:
    """Finite family of dual sets, stored as a boolean (members x |Gamma|) matrix."""

    def __init__(self, group, kind, members):
        members = np.asarray(members, dtype=bool)
        if members.ndim != 2 or members.shape[1] != group.size:
            raise ValueError("basis members must be masks over the dual group")
        if not members.any(axis=0).all():
            raise ValueError("basis does not cover every character")
        members.flags.writeable = False
        self.group = group
        self.kind = kind
        self.members = members

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __repr__(self):
        return f"SummationBasis({self.kind}, {len(self)} members)"

    def describe(self):
        if self.kind == "explicit":
            return {"kind": "explicit", "sets": [np.flatnonzero(m).tolist() for m in self.members]}
        return {"kind": self.kind}


def symmetric_interval_basis(group):
    """Cubes {max_j |gamma_j| <= k} for k = 0 .. max N_j // 2."""
    mag = np.abs(group.signed_coords).max(axis=1)
    top = max(n // 2 for n in group.orders)
    return SummationBasis(group, "symmetric-interval", mag[None, :] <= np.arange(top + 1)[:, None])


def walsh_prefix_basis(group):
    """First n Walsh-Paley characters, n = 1 .. 2^m."""
    pal = group.paley_number
    return SummationBasis(group, "walsh-prefix", pal[None, :] < np.arange(1, group.size + 1)[:, None])


def _order_ideals(dims, cap):
    """Down-closed subsets of prod range(d) as boolean arrays, nonempty, canonical order."""
    if len(dims) == 1:
        d = dims[0]
        for k in range(1, d + 1):
            arr = np.zeros(d, bool)
            arr[:k] = True
            yield arr
        return
    head, rest = dims[0], dims[1:]
    inner = [np.zeros(rest, bool)] + list(_order_ideals(rest, cap))
    if len(inner) > cap:
        raise BasisNotEnumerable(f"more than {cap} solid sets")
    # nonincreasing chains of inner ideals (by index: containment is checked explicitly)
    contains = np.array([[bool(np.all(b[a])) for b in inner] for a in inner])  # contains[a, b]: a subset of b

    def chains(pos, upper):
        if pos == head:
            yield ()
            return
        for i in range(len(inner)):
            if upper is None or contains[i, upper]:
                for tail in chains(pos + 1, i):
                    yield (i,) + tail

    count = 0
    for chain in chains(0, None):
        if chain[0] == 0:
            continue  # empty slice at magnitude 0 means the whole set is empty
        count += 1
        if count > cap:
            raise BasisNotEnumerable(f"more than {cap} solid sets")
        yield np.stack([inner[i] for i in chain])


def solid_basis(group, cap=DEFAULT_BASIS_CAP):
    """All solid sets: y in B whenever |y_j| <= |x_j| for all j and x in B."""
    dims = [n // 2 + 1 for n in group.orders]
    mags = np.abs(group.signed_coords)
    members = []
    for ideal in _order_ideals(dims, cap):
        members.append(ideal[tuple(mags.T)])
    return SummationBasis(group, "solid", np.array(members))


def explicit_basis(group, sets):
    return SummationBasis(group, "explicit", np.array([as_mask(group, s) for s in sets]))


def make_basis(group, descriptor, cap=DEFAULT_BASIS_CAP):
    kind = descriptor["kind"] if isinstance(descriptor, dict) else descriptor
    if kind == "symmetric-interval":
        return symmetric_interval_basis(group)
    if kind == "walsh-prefix":
        return walsh_prefix_basis(group)
    if kind == "solid":
        return solid_basis(group, cap=descriptor.get("cap", cap) if isinstance(descriptor, dict) else cap)
    if kind == "explicit":
        return explicit_basis(group, descriptor["sets"])
    raise ValueError(f"unknown basis kind {kind!r}")


def _split_flags(members, e):
    e = np.asarray(e, dtype=bool)
    inside = members[:, e].sum(axis=1)
    return (inside > 0) & (inside < e.sum())


def splitting_union(e, basis):
    """E_B: union of all basis members that split E."""
    flags = _split_flags(basis.members, e)
    if not flags.any():
        return np.zeros(basis.group.size, dtype=bool)
    return basis.members[flags].any(axis=0)


def box_family(group, cap=None, radius=None):
    """Translates tau + prod {-h_j..h_j} with h_j <= cap_j and |tau_j| <= radius_j.

    Defaults: cap_j = N_j // 64 and radius_j = N_j // 16.  Duplicates are removed.
    """
    cap = _per_axis(group, cap, [n // 64 for n in group.orders])
    radius = _per_axis(group, radius, [n // 16 for n in group.orders])
    mags = np.abs(group.signed_coords)
    shifts = np.flatnonzero(np.all(mags <= np.asarray(radius), axis=1))
    seen, out = set(), []
    for hw in product(*(range(c + 1) for c in cap)):
        box = np.all(mags <= np.asarray(hw), axis=1)
        for tau in shifts:
            m = group.translate(box, tau)
            key = np.packbits(m).tobytes()
            if key not in seen:
                seen.add(key)
                out.append(m)
    return np.array(out)


def _per_axis(group, value, default):
    if value is None:
        value = default
    elif np.isscalar(value):
        value = [int(value)] * group.rank
    return [min(int(v), n // 2) for v, n in zip(value, group.orders)]


def paley_family(group, depth=None, radius=None):
    """Dyadic test sets: A_k + tau for k <= depth and Paley number of tau below 2^radius.

    A_k is the block of the first 2^k Walsh-Paley characters.  Defaults:
    depth = m // 4 and radius = m // 2.
    """
    m = group.rank
    depth = m // 4 if depth is None else int(depth)
    radius = m // 2 if radius is None else int(radius)
    pal = group.paley_number
    shifts = np.flatnonzero(pal < 2 ** radius)
    seen, out = set(), []
    for k in range(depth + 1):
        block = pal < 2 ** k
        for tau in shifts:
            mask = group.translate(block, tau)
            key = np.packbits(mask).tobytes()
            if key not in seen:
                seen.add(key)
                out.append(mask)
    return np.array(out)


def default_family(group):
    return paley_family(group) if group.is_dyadic else box_family(group)


class SufficientPair:
    """(R, S) together with the finite family of test sets E."""

    def __init__(self, group, r, s, family=None):
        self.group = group
        self.r = np.asarray(r, dtype=bool)
        self.s = np.asarray(s, dtype=bool)
        self.family = default_family(group) if family is None else np.asarray(family, dtype=bool)

    def stripped(self, mask):
        return SufficientPair(self.group, self.r & ~mask, self.s & ~mask, self.family)

    @property
    def union(self):
        return self.r | self.s


class SufficiencyCheck(NamedTuple):
    ok: bool
    witnesses: dict
    failed: Optional[int]


def _counts(group, a, b):
    """(chi_A * chi_B)(gamma) with counting measure, exact integers, batched over rows of A."""
    fa = _dft(np.asarray(a, dtype=float), group, False)
    fb = _dft(np.asarray(b, dtype=float), group, False)
    return np.rint(_dft(fa * fb, group, True).real / group.size)


def admissible_shifts(group, e, r, s):
    """Mask of gamma with -gamma + E in R and gamma + E in S."""
    e = np.asarray(e, dtype=bool)
    size = e.sum()
    # #{e : e - gamma in R} = (chi_E * chi_{-R})(gamma);  #{e : e + gamma in S} = (chi_{-E} * chi_S)(gamma)
    cnt_r = _counts(group, e, group.negate(r))
    cnt_s = _counts(group, group.negate(e), s)
    return (cnt_r == size) & (cnt_s == size)


def is_sufficient(pair, stop_at_first_failure=False):
    """Check sufficiency against ``pair.family``; witnesses follow the group's search order."""
    grp = pair.group
    order = grp.search_order
    witnesses = {}
    failed = None
    fam = pair.family
    neg_r = grp.negate(pair.r).astype(float)
    s = pair.s.astype(float)
    fr = _dft(neg_r, grp, False)
    fs = _dft(s, grp, False)
    for start in range(0, len(fam), _CHUNK):
        block = fam[start:start + _CHUNK].astype(float)
        sizes = block.sum(axis=1)
        cnt_r = np.rint(_dft(_dft(block, grp, False) * fr, grp, True).real / grp.size)
        neg_block = block[:, grp.neg_perm]
        cnt_s = np.rint(_dft(_dft(neg_block, grp, False) * fs, grp, True).real / grp.size)
        good = (cnt_r == sizes[:, None]) & (cnt_s == sizes[:, None])
        good_ordered = good[:, order]
        has = good_ordered.any(axis=1)
        first = order[np.argmax(good_ordered, axis=1)]
        for k in range(len(block)):
            idx = start + k
            if has[k]:
                witnesses[idx] = int(first[k])
            else:
                witnesses[idx] = None
                if failed is None:
                    failed = idx
                if stop_at_first_failure:
                    return SufficiencyCheck(False, witnesses, failed)
    return SufficiencyCheck(failed is None, witnesses, failed)


def is_coordinated(basis, pair, probes=None):
    """(ok, index of the first probe E whose stripped pair is not sufficient)."""
    probes = pair.family if probes is None else np.asarray(probes, dtype=bool)
    cache = {}
    for idx, e in enumerate(probes):
        eb = splitting_union(e, basis)
        key = np.packbits(eb).tobytes()
        if key not in cache:
            cache[key] = is_sufficient(pair.stripped(eb), stop_at_first_failure=True).ok
        if not cache[key]:
            return False, idx
    return True, None


def partial_sum(f, b):
    """P_B f = F^{-1}(chi_B F f)."""
    return multiply_spectrum(f, np.asarray(b, dtype=float))


def partial_sum_sups(f, basis):
    """||P_B f||_inf for every member of the basis."""
    grp = f.group
    coeffs = _dft(f.values, grp, False) / grp.size
    out = np.empty(len(basis))
    for start in range(0, len(basis), _CHUNK):
        block = basis.members[start:start + _CHUNK]
        vals = _dft(block * coeffs[None, :], grp, True)
        out[start:start + len(block)] = np.abs(vals).max(axis=1)
    return out


def u_norm(f, basis):
    """(sup_B ||P_B f||_inf + ||f||_1, index of an attaining member)."""
    sups = partial_sum_sups(f, basis)
    worst = int(np.argmax(sups))
    return float(sups[worst] + f.l1()), worst


def _linear_index(group):
    if group.is_dyadic:
        return group.paley_number
    return group.signed_coords[:, 0]


def gapped_pair(group, start, width, gap, count, family=None):
    """S = union of ``count`` blocks of ``width`` characters separated by ``gap``, R = -S.

    Blocks run along the Paley enumeration on dyadic groups and along the
    signed first coordinate otherwise.
    """
    lin = _linear_index(group)
    s = np.zeros(group.size, dtype=bool)
    for j in range(count):
        lo = start + j * (width + gap)
        s |= (lin >= lo) & (lin < lo + width)
    return SufficientPair(group, group.negate(s), s, family)
