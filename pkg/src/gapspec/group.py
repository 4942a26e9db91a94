"""Finite abelian groups Z_{N_1} x ... x Z_{N_r}, their duals and Fourier analysis.

Elements and characters share one flat indexing (C order over ``orders``).
The character with index ``gamma`` is ``x -> exp(2 pi i sum_j gamma_j x_j / N_j)``.
Haar measure on G is counting measure divided by |G|, on the dual it is plain
counting measure, so that

    fhat(gamma) = |G|^{-1} sum_x f(x) conj(gamma(x)),   f(x) = sum_gamma fhat(gamma) gamma(x)

and the transform is unitary.
"""

from __future__ import annotations

from functools import cached_property, reduce
import operator

import numpy as np

from .errors import EmptyOrders, FactorTooSmall, GroupMismatch, GroupTooLarge, NotReal

DEFAULT_CAP = 2 ** 22
SUPPORT_TOL = 1e-10


class Group:
    """Product of cyclic factors.  Treat instances as immutable."""

    def __init__(self, orders):
        self.orders = tuple(int(n) for n in orders)
        self.shape = self.orders
        self.rank = len(self.orders)
        self.size = reduce(operator.mul, self.orders, 1)

    def __repr__(self):
        return f"Group({list(self.orders)})"

    def __eq__(self, other):
        return isinstance(other, Group) and other.orders == self.orders

    def __hash__(self):
        return hash(self.orders)

    @property
    def is_dyadic(self):
        return all(n == 2 for n in self.orders)

    @cached_property
    def coords(self):
        """(size, rank) array of coordinates in [0, N_j)."""
        grids = np.indices(self.shape).reshape(self.rank, -1)
        coords = grids.T.copy()
        coords.flags.writeable = False
        return coords

    @cached_property
    def signed_coords(self):
        """Coordinates mapped into (-N_j/2, N_j/2]."""
        n = np.asarray(self.orders)
        c = self.coords.copy()
        c = np.where(c > n // 2, c - n, c)
        c.flags.writeable = False
        return c

    @cached_property
    def neg_perm(self):
        """Flat index of -x for every flat index x."""
        n = np.asarray(self.orders)
        neg = (-self.coords) % n
        perm = np.ravel_multi_index(neg.T, self.shape)
        perm.flags.writeable = False
        return perm

    @cached_property
    def search_order(self):
        """Flat indices sorted by max |signed coordinate|, then lexicographically.

        The tie-break reads coordinates from the last axis to the first, which
        on Z_2^m is exactly the Walsh-Paley order.
        """
        sc = self.signed_coords
        mag = np.abs(sc).max(axis=1)
        keys = [sc[:, j] for j in range(self.rank)] + [mag]
        order = np.lexsort(keys)
        order.flags.writeable = False
        return order

    @cached_property
    def paley_number(self):
        """Walsh-Paley enumeration of the characters of Z_2^m.

        Axis 0 is the first binary digit of an element and the least
        significant bit of the Paley number.
        """
        if not self.is_dyadic:
            raise ValueError("Paley enumeration needs a dyadic group")
        weights = 1 << np.arange(self.rank)
        num = self.coords @ weights
        num.flags.writeable = False
        return num

    def index(self, coords):
        return int(np.ravel_multi_index(tuple(int(c) % n for c, n in zip(coords, self.orders)),
                                        self.shape))

    def coord(self, idx):
        return tuple(int(c) for c in np.unravel_index(int(idx), self.shape))

    def add(self, i, j):
        n = np.asarray(self.orders)
        return self.index((self.coords[i] + self.coords[j]) % n)

    def neg(self, i):
        return int(self.neg_perm[i])

    def is_two_torsion(self, gamma):
        """True iff 2*gamma = 0."""
        n = np.asarray(self.orders)
        return bool(np.all((2 * self.coords[gamma]) % n == 0))

    def translate(self, mask, shift):
        """Mask of ``shift + mask``."""
        arr = np.asarray(mask).reshape(self.shape)
        shifts = self.coords[shift]
        out = np.roll(arr, tuple(int(s) for s in shifts), axis=tuple(range(self.rank)))
        return out.reshape(-1)

    def negate(self, mask):
        """Mask of ``-mask``."""
        return np.asarray(mask)[self.neg_perm]

    def character(self, gamma):
        n = np.asarray(self.orders, dtype=float)
        phase = (self.coords * (self.coords[gamma] / n)).sum(axis=1)
        vals = np.exp(2j * np.pi * phase)
        if self.is_two_torsion(gamma):
            vals = np.round(vals.real)  # +-1 exactly
        return vals

    def sumset(self, a, b):
        """Mask of A + B (computed with exact integer rounding of a convolution)."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if not a.any() or not b.any():
            return np.zeros(self.size, dtype=bool)
        counts = _dft(_dft(a, self, False) * _dft(b, self, False), self, True) / self.size
        return np.rint(counts.real) > 0.5


def make_group(orders, cap=DEFAULT_CAP):
    orders = list(orders)
    if not orders:
        raise EmptyOrders("a group needs at least one cyclic factor")
    for n in orders:
        if int(n) < 2:
            raise FactorTooSmall(f"cyclic factor of order {n} < 2")
    size = reduce(operator.mul, (int(n) for n in orders), 1)
    if size > cap:
        raise GroupTooLarge(f"|G| = {size} exceeds cap {cap}")
    return Group(orders)


def _butterfly(arr, axis):
    a = np.take(arr, 0, axis=axis)
    b = np.take(arr, 1, axis=axis)
    return np.stack((a + b, a - b), axis=axis)


def _dft(values, group, inverse):
    """Unnormalized transform over the group axes (leading axes are a batch).

    Forward uses conj(gamma(x)); inverse uses gamma(x).  Order-2 axes go
    through the Walsh-Hadamard butterfly, the rest through numpy's FFT.
    """
    values = np.asarray(values)
    lead = values.shape[:-1]
    arr = values.reshape(lead + group.shape)
    off = len(lead)
    for j, n in enumerate(group.orders):
        axis = off + j
        if n == 2:
            arr = _butterfly(arr, axis)
        elif inverse:
            arr = np.fft.ifft(arr, axis=axis) * n
        else:
            arr = np.fft.fft(arr, axis=axis)
    return arr.reshape(lead + (group.size,))


def _freeze(values):
    values = np.array(values, copy=True)
    values.flags.writeable = False
    return values


class GroupFunction:
    """Function on G with normalized Haar measure."""

    __array_priority__ = 100

    def __init__(self, group, values):
        values = np.asarray(values)
        if values.shape != (group.size,):
            raise GroupMismatch(f"expected {group.size} values, got shape {values.shape}")
        if not np.iscomplexobj(values):
            values = values.astype(float)
        self.group = group
        self.values = _freeze(values)

    def __repr__(self):
        return f"GroupFunction({self.group!r}, sup={self.sup():.4g})"

    def _other(self, other):
        if isinstance(other, GroupFunction):
            if other.group != self.group:
                raise GroupMismatch("functions live on different groups")
            return other.values
        return other

    def __add__(self, other):
        return GroupFunction(self.group, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GroupFunction(self.group, self.values - self._other(other))

    def __rsub__(self, other):
        return GroupFunction(self.group, self._other(other) - self.values)

    def __mul__(self, other):
        return GroupFunction(self.group, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GroupFunction(self.group, self.values / self._other(other))

    def __neg__(self):
        return GroupFunction(self.group, -self.values)

    @property
    def real(self):
        return GroupFunction(self.group, np.real(self.values))

    @property
    def imag(self):
        return GroupFunction(self.group, np.imag(self.values))

    def conj(self):
        return GroupFunction(self.group, np.conj(self.values))

    def is_real(self, tol=1e-10):
        return not np.iscomplexobj(self.values) or np.max(np.abs(self.values.imag), initial=0.0) <= tol

    def integral(self):
        return self.values.mean()

    def l1(self):
        return float(np.abs(self.values).mean())

    def l2(self):
        return float(np.sqrt((np.abs(self.values) ** 2).mean()))

    def sup(self):
        return float(np.abs(self.values).max())

    def inner(self, other):
        """<f, g> = int f conj(g)."""
        return np.vdot(self._other(other), self.values) / self.group.size


class SpectralFunction:
    """Function on the dual group with counting measure."""

    def __init__(self, group, coefficients):
        coefficients = np.asarray(coefficients, dtype=complex)
        if coefficients.shape != (group.size,):
            raise GroupMismatch(f"expected {group.size} coefficients, got {coefficients.shape}")
        self.group = group
        self.coefficients = _freeze(coefficients)

    def __repr__(self):
        return f"SpectralFunction({self.group!r}, |supp|={int(self.support().sum())})"

    def support(self, tau=SUPPORT_TOL):
        return np.abs(self.coefficients) > tau

    def l1(self):
        return float(np.abs(self.coefficients).sum())

    def l2(self):
        return float(np.sqrt((np.abs(self.coefficients) ** 2).sum()))


def as_function(group, values):
    return values if isinstance(values, GroupFunction) else GroupFunction(group, values)


def fourier(f):
    g = f.group
    return SpectralFunction(g, _dft(f.values, g, inverse=False) / g.size)


def inverse_fourier(fhat, real=None):
    """Inverse transform.  ``real=True`` drops the imaginary part after checking it is tiny."""
    g = fhat.group
    vals = _dft(fhat.coefficients, g, inverse=True)
    if real is None:
        real = bool(np.max(np.abs(vals.imag), initial=0.0) <= 1e-12 * max(1.0, np.abs(vals).max(initial=0.0)))
    if real:
        vals = vals.real
    return GroupFunction(g, vals)


def convolve(f, g):
    """(f * g)(x) = |G|^{-1} sum_y f(y) g(x - y)."""
    if f.group != g.group:
        raise GroupMismatch("cannot convolve functions on different groups")
    grp = f.group
    prod = _dft(f.values, grp, False) * _dft(g.values, grp, False) / grp.size ** 2
    vals = _dft(prod, grp, True)
    if not (np.iscomplexobj(f.values) or np.iscomplexobj(g.values)):
        vals = vals.real
    return GroupFunction(grp, vals)


def multiply_spectrum(f, multiplier):
    """inverse_fourier(multiplier * fourier(f)).

    Real input stays real when the multiplier is Hermitian-symmetric.
    """
    grp = f.group
    multiplier = np.asarray(multiplier)
    coeffs = _dft(f.values, grp, False) * multiplier
    vals = _dft(coeffs, grp, True) / grp.size
    if not np.iscomplexobj(f.values) and np.array_equal(multiplier[grp.neg_perm], np.conj(multiplier)):
        vals = vals.real
    return GroupFunction(grp, vals)


def character_function(group, gamma):
    return GroupFunction(group, group.character(gamma))


def indicator(group, mask):
    return GroupFunction(group, np.asarray(mask, dtype=float))


def point_mass(group, x=0):
    """Convolution identity: value |G| at x, zero elsewhere."""
    vals = np.zeros(group.size)
    vals[x] = group.size
    return GroupFunction(group, vals)


def modulate_real(f, gamma):
    """Re(f * gamma) for a real function f."""
    if not f.is_real():
        raise NotReal("modulate_real needs a real-valued function")
    chi = f.group.character(gamma)
    return GroupFunction(f.group, np.real(f.values) * np.real(chi))


def support(f, tau=SUPPORT_TOL):
    """Spectrum of f as a boolean mask over the dual group."""
    return fourier(f).support(tau)

