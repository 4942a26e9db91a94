"""Inductive construction of f_k^{(n)} and extraction of the corrected set b.

Each level n adds a row f_0^{(n)}, ..., f_n^{(n)}: the old row is smoothed by
Phi_{U_n}, and the new last entry adds modulated bumps Re(c_i beta_i gamma_i)
whose spectra are parked in R u S away from everything placed before.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import logging
import math
from typing import List, Optional

import numpy as np

from .errors import (
    EmptySet,
    InvariantViolation,
    NotConverged,
    NotCoordinated,
    PairNotSufficient,
    PartitionExhausted,
    RangeViolation,
    SpectrumExhausted,
    ZeroFunction,
)
from .group import GroupFunction, _dft, modulate_real, support
from .kernels import (
    SpectrumWindow,
    WindowConstraints,
    coset_blocks,
    covering_partition,
    fejer_multiplier,
    interval_window,
    select_window,
    smooth,
    subgroup_window,
    triangle_blocks,
)
from .spectral import is_coordinated, is_sufficient, splitting_union

log = logging.getLogger(__name__)

RANGE_TOL = 1e-9
CONSERVATION_TOL = 1e-10
ENERGY_RATIO = 0.9


@dataclass
class Schedules:
    epsilon: float
    t: List[float]
    rho: List[float]
    n_max: int = 12
    g_tol: Optional[float] = None

    def __post_init__(self):
        if self.g_tol is None:
            self.g_tol = self.epsilon
        self.validate()

    @classmethod
    def default(cls, epsilon, n_max=12, g_tol=None, unit_weight=False):
        """t_n = 1 + (eps/2)(1 - 2^{-n-1}) (or 1 for w = 1), rho_n = eps^2 4^{-n-2}."""
        levels = range(n_max + 1)
        if unit_weight:
            t = [1.0 for _ in levels]
        else:
            t = [1.0 + 0.5 * epsilon * (1.0 - 2.0 ** (-n - 1)) for n in levels]
        rho = [epsilon ** 2 * 4.0 ** (-n - 2) for n in levels]
        return cls(epsilon, t, rho, n_max, g_tol)

    def validate(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if len(self.t) < self.n_max + 1 or len(self.rho) < self.n_max + 1:
            raise ValueError("t and rho need n_max + 1 entries")
        t = np.asarray(self.t[: self.n_max + 1])
        constant_one = np.all(t == 1.0)
        if not constant_one:
            if np.any(np.diff(t) <= 0) or t[0] <= 1 or t[-1] > 1 + self.epsilon:
                raise ValueError("t must increase strictly inside (1, 1 + epsilon]")
        rho = np.asarray(self.rho[: self.n_max + 1])
        if np.any(rho <= 0) or np.sqrt(rho).sum() >= self.epsilon:
            raise ValueError("need positive rho with sum of sqrt(rho_n) < epsilon")

    def to_dict(self):
        return {"epsilon": self.epsilon, "t": list(self.t), "rho": list(self.rho),
                "n_max": self.n_max, "g_tol": self.g_tol}


@dataclass
class StepRecord:
    n: int
    window: SpectrumWindow
    g_norm: float
    delta: float = 0.0
    block: tuple = ()
    coeffs: List[float] = field(default_factory=list)
    gammas: List[int] = field(default_factory=list)
    betas: List[GroupFunction] = field(default_factory=list)
    below_ok: bool = True
    next_overrun: float = 0.0
    retried: bool = False


@dataclass
class ConstructionState:
    group: object
    a: np.ndarray
    w: GroupFunction
    pair: object
    basis: object
    schedules: Schedules
    window_style: str
    partition_style: str
    row: List[GroupFunction]
    windows: List[SpectrumWindow]
    K: np.ndarray
    spectra: List[np.ndarray]
    forbidden: np.ndarray
    f00: GroupFunction
    target_integral: float
    n: int = 0
    steps: List[StepRecord] = field(default_factory=list)
    trace: List[dict] = field(default_factory=list)
    checks: bool = True
    conservation_residual: float = 0.0

    @property
    def t_current(self):
        return self.schedules.t[self.n]

    @property
    def allowed(self):
        return self.K | self.pair.union


@dataclass
class CorrectionResult:
    b: np.ndarray
    f_final: GroupFunction
    t_final: float
    report: dict
    K: np.ndarray
    R: np.ndarray
    S: np.ndarray
    state: ConstructionState


def _forbid(mask, basis):
    return mask | splitting_union(mask, basis)


def _check(cond, message):
    if not cond:
        raise InvariantViolation(message)


def init(a, w, pair, basis, schedules, window_style="interval", partition_style="triangle",
         checks=True, probes=None):
    """Level 0: f_0^{(0)} = (chi_a w) * Phi_{U_0} and K = U_0 + U_0."""
    grp = w.group
    a = np.asarray(a, dtype=bool)
    if not a.any():
        raise EmptySet("the set a is empty")
    wv = w.values.real
    if np.any(wv <= 0) or np.any(wv > 2 + 1e-12):
        raise ValueError("weight must be positive and at most 2")
    if checks:
        if not is_sufficient(pair, stop_at_first_failure=True).ok:
            raise PairNotSufficient("(R, S) fails the sufficiency check")
        ok, bad = is_coordinated(basis, pair, probes)
        if not ok:
            raise NotCoordinated(f"basis and pair are not coordinated (probe set #{bad})")

    chi_aw = GroupFunction(grp, np.where(a, wv, 0.0))
    cons = WindowConstraints(grp, window_style, None, [chi_aw], schedules.rho[0],
                             GroupFunction(grp, wv), schedules.t[0])
    u0 = select_window(cons)
    f00 = smooth(chi_aw, u0)
    K = grp.sumset(u0.mask, u0.mask)
    spec0 = support(f00)
    target = float(chi_aw.integral().real)
    state = ConstructionState(
        group=grp, a=a, w=GroupFunction(grp, wv), pair=pair, basis=basis, schedules=schedules,
        window_style=window_style, partition_style=partition_style, row=[f00], windows=[u0],
        K=K, spectra=[spec0], forbidden=_forbid(K, basis) | _forbid(spec0, basis), f00=f00,
        target_integral=target, checks=checks,
    )
    if checks:
        _check(np.all(K[spec0]), "spectrum of f_0^(0) leaves K")
        _check(np.all(f00.values >= -RANGE_TOL), "f_0^(0) is negative somewhere")
        _check(np.all(f00.values <= schedules.t[0] * wv + RANGE_TOL), "f_0^(0) exceeds t_0 w")
        state.conservation_residual = abs(float(f00.integral().real) - target)
        _check(state.conservation_residual <= CONSERVATION_TOL, "integral of f_0^(0) drifted")
    state.trace.append({"event": "init", "window": list(u0.params), "K_size": int(K.sum()),
                        "l1_error": float((f00 - chi_aw).l1())})
    log.info("init: U_0 %s, |K| = %d", u0.params, int(K.sum()))
    return state


def auxiliary(f, t, w):
    """g = f (1 - f / (t w)); 0 <= g <= t w / 4."""
    upper = t * w.values.real
    fv = f.values.real
    if np.any(fv < -RANGE_TOL) or np.any(fv > upper + RANGE_TOL):
        raise RangeViolation("need 0 <= f <= t w")
    fv = np.clip(fv, 0.0, upper)
    return GroupFunction(f.group, fv * (1.0 - fv / upper))


def threshold_truncate(g, ratio=ENERGY_RATIO, rel_width=1e-9):
    """Largest delta with ||(g - delta) chi_{g >= delta}||_2 > ratio ||g||_2."""
    gv = g.values.real
    norm = g.l2()
    if norm == 0:
        raise ZeroFunction("g vanishes identically")

    def energy(d):
        return np.sqrt((np.where(gv >= d, gv - d, 0.0) ** 2).mean())

    lo, hi = 0.0, float(gv.max())
    while hi - lo > rel_width * gv.max():
        mid = 0.5 * (lo + hi)
        if energy(mid) > ratio * norm:
            lo = mid
        else:
            hi = mid
    delta = lo
    return delta, GroupFunction(g.group, np.where(gv >= delta, gv - delta, 0.0))


def build_h(g_trunc, g_orig, partition_style="triangle", tol=1e-10):
    """h = sum c_i alpha_i with c_i = g_trunc(x_i), coarsest covering block first.

    Accepts the first block with h <= g_orig pointwise and ||h||^2 >= ||g_orig||^2 / 2.
    """
    grp = g_trunc.group
    blocks = triangle_blocks(grp) if partition_style == "triangle" else coset_blocks(grp)
    target = 0.5 * g_orig.l2() ** 2
    if g_trunc.l2() == 0:
        part = covering_partition(grp, blocks[-1], partition_style)
        return part, np.zeros(len(part)), GroupFunction(grp, np.zeros(grp.size))
    for block in blocks:
        part = covering_partition(grp, block, partition_style)
        c = g_trunc.values.real[part.centers]
        h = part.combine(c)
        if np.all(h.values <= g_orig.values.real + tol) and h.l2() ** 2 >= target:
            return part, c, h
    raise PartitionExhausted("finest covering block still violates h <= g or the energy bound")


def admissible_characters(group, beta_spec, beta_sq_spec, good):
    """Mask of gamma with +-gamma + spec(beta) inside ``good`` and the 2*gamma condition."""
    b = np.asarray(beta_spec, dtype=float)
    size = b.sum()
    # #{l in spec : l + gamma in good} = (chi_{-spec} * chi_good)(gamma)
    cnt = np.rint(_dft(_dft(group.negate(b), group, False) * _dft(good.astype(float), group, False),
                       group, True).real / group.size)
    plus = cnt == size
    ok = plus & group.negate(plus)
    n = np.asarray(group.orders)
    doubled = (2 * group.coords) % n
    two_idx = np.ravel_multi_index(doubled.T, group.shape)
    torsion = two_idx == 0
    sq = np.asarray(beta_sq_spec, dtype=bool)
    cond2 = torsion | (~sq[two_idx] & ~sq[group.neg_perm[two_idx]])
    return ok & cond2


def select_character(beta_spec, beta_sq_spec, allowed, forbidden, group):
    """First gamma (search order) placing Re(beta gamma) in allowed \\ forbidden."""
    good = np.asarray(allowed, bool) & ~np.asarray(forbidden, bool)
    cand = admissible_characters(group, beta_spec, beta_sq_spec, good)
    order = group.search_order
    hits = cand[order]
    if not hits.any():
        raise SpectrumExhausted("no character places the bump spectrum inside R u S")
    return int(order[np.argmax(hits)])


def _modulated_spectrum(group, spec, gamma):
    return group.translate(spec, gamma) | group.translate(spec, group.neg(gamma))


def _shrunk_window(state, window):
    prev = state.windows[-1]
    if window.style == "subgroup":
        k_prev, k = len(prev.params), len(window.params)
        return None if k - k_prev < 2 else subgroup_window(state.group, range((k + k_prev) // 2))
    u_prev, u = np.asarray(prev.params), np.asarray(window.params)
    mid = (u + u_prev) // 2
    if np.array_equal(mid, u):
        return None
    return interval_window(state.group, mid)


def _place_bumps(state, window, part, coeffs, J):
    grp = state.group
    psi = fejer_multiplier(window)
    new_row = [smooth(f, window, psi) for f in state.row]
    forbidden = state.forbidden.copy()
    for f in new_row:
        forbidden |= _forbid(support(f), state.basis)
    allowed = state.pair.union
    gammas, betas, terms_spec = [], [], []
    h_tilde = np.zeros(grp.size)
    for i in J:
        beta = smooth(part.bump(i), window, psi)
        bspec = support(beta)
        sqspec = support(beta * beta)
        gamma = select_character(bspec, sqspec, allowed, forbidden, grp)
        spec_i = _modulated_spectrum(grp, bspec, gamma)
        forbidden |= _forbid(spec_i, state.basis)
        h_tilde += coeffs[i] * modulate_real(beta, gamma).values
        gammas.append(gamma)
        betas.append(beta)
        terms_spec.append(spec_i)
    inc_spec = np.any(terms_spec, axis=0) if terms_spec else np.zeros(grp.size, bool)
    return new_row, GroupFunction(grp, h_tilde), gammas, betas, inc_spec, forbidden


def step(state):
    """Advance the construction from level n-1 to level n (mutates ``state``)."""
    grp = state.group
    sch = state.schedules
    n = state.n + 1
    if n > sch.n_max:
        raise NotConverged("iteration cap reached", state=state)
    t_prev, t_n = sch.t[n - 1], sch.t[n]
    last = state.row[-1]
    g = auxiliary(last, t_prev, state.w)
    record = StepRecord(n=n, window=state.windows[-1], g_norm=g.l2())

    if g.l2() == 0:
        part, coeffs, J = None, np.zeros(0), []
    else:
        delta, g_trunc = threshold_truncate(g)
        part, coeffs, h = build_h(g_trunc, g, state.partition_style)
        record.delta, record.block = delta, tuple(part.block)
        J = [int(i) for i in np.flatnonzero(coeffs > 0)]
        alpha_sq = part.profile.l2() ** 2
        record.below_ok = bool(g.l2() ** 2 <= 2 ** (part.dim + 1) * (coeffs ** 2).sum() * alpha_sq * (1 + 1e-9))

    bumps = [part.profile] if J else []
    cons = WindowConstraints(grp, state.window_style, state.windows[-1], state.row, sch.rho[n],
                             state.w, t_n / t_prev, bumps)
    window = select_window(cons)
    try:
        placed = _place_bumps(state, window, part, coeffs, J)
    except SpectrumExhausted:
        smaller = _shrunk_window(state, window)
        relaxed = WindowConstraints(grp, state.window_style, state.windows[-1], [], np.inf,
                                    state.w, t_n / t_prev, bumps)
        if smaller is None or not relaxed.admits(smaller):
            raise
        log.info("level %d: spectrum exhausted, retrying with %s", n, smaller.params)
        window = smaller
        record.retried = True
        placed = _place_bumps(state, window, part, coeffs, J)
    new_row, h_tilde, gammas, betas, inc_spec, forbidden = placed
    f_n = new_row[-1] + h_tilde
    record.window = window
    record.gammas, record.betas = gammas, betas
    record.coeffs = [float(coeffs[i]) for i in J]
    record.next_overrun = max(
        [max(0.0, (a - b).l1() - sch.rho[n]) for a, b in zip(new_row, state.row)] or [0.0])

    if state.checks:
        wv = state.w.values.real
        for f in new_row + [f_n]:
            _check(np.all(f.values >= -RANGE_TOL), f"level {n}: negative value")
            _check(np.all(f.values <= t_n * wv + RANGE_TOL), f"level {n}: exceeds t_n w")
        lower = smooth(last - g, window)
        upper = smooth(last + g, window)
        _check(np.all(lower.values <= f_n.values + RANGE_TOL)
               and np.all(f_n.values <= upper.values + RANGE_TOL), f"level {n}: sandwich fails")
        actual = support(h_tilde)
        _check(np.all(inc_spec[actual]), f"level {n}: increment spectrum outside its prediction")
        _check(not np.any(inc_spec & state.forbidden), f"level {n}: increment meets a prior spectrum")
        _check(np.all(state.allowed[inc_spec]), f"level {n}: spectrum leaves K u R u S")
        resid = max(abs(float(f.integral().real) - state.target_integral) for f in new_row + [f_n])
        state.conservation_residual = max(state.conservation_residual, resid)
        _check(resid <= CONSERVATION_TOL, f"level {n}: integral drifted by {resid:.3g}")

    state.row = new_row + [f_n]
    state.windows.append(window)
    state.spectra.append(inc_spec)
    state.forbidden = forbidden
    state.n = n
    state.steps.append(record)
    state.trace.append({"event": "step", "n": n, "window": list(window.params), "g_norm": record.g_norm,
                        "delta": record.delta, "bumps": len(J), "block": list(record.block),
                        "retried": record.retried})
    log.info("level %d: U %s, %d bumps, ||g|| = %.3g", n, window.params, len(J), record.g_norm)
    return state


def residual(state):
    return auxiliary(state.row[-1], state.t_current, state.w).l2()


def run(a, w, pair, basis, schedules, window_style="interval", partition_style="triangle",
        checks=True, probes=None):
    """Iterate until ||g_n||_2 <= g_tol ||chi_a w||_2 and extract b = {f > t w / 2}."""
    from .verify import build_report

    state = init(a, w, pair, basis, schedules, window_style, partition_style, checks, probes)
    wv = state.w.values.real
    ref = math.sqrt(float((np.where(state.a, wv, 0.0) ** 2).mean()))
    while True:
        res = residual(state)
        state.trace.append({"event": "residual", "n": state.n, "g_norm": res})
        if res <= schedules.g_tol * ref:
            break
        if state.n >= schedules.n_max:
            raise NotConverged(f"||g|| = {res:.3g} after {state.n} levels", residual=res, state=state)
        step(state)
    t_final = state.t_current
    f_final = state.row[-1]
    b = f_final.values.real > t_final * wv / 2
    report = build_report(state, b, f_final)
    return CorrectionResult(b, f_final, t_final, report, state.K, state.pair.r, state.pair.s, state)


@dataclass
class BoundedCorrection:
    f: GroupFunction
    parts: list
    K: np.ndarray


def correct_bounded(h, epsilon, pair, basis, n_max=12, g_tol=None, **kwargs):
    """Two-rail correction of a bounded function with |h| <= 1.

    h is split into at most four nonnegative parts.  Each part v with support a
    is run on the rails w1 = v + 1 and w2 = 1 (budget epsilon / 4 each) and
    contributes chi_{b1} w1 - chi_{b2} w2.
    """
    grp = h.group
    hv = np.asarray(h.values, dtype=complex)
    if np.abs(hv).max(initial=0.0) > 1 + 1e-12:
        raise ValueError("need ||h||_inf <= 1")
    units = [(1.0, np.maximum(hv.real, 0)), (-1.0, np.maximum(-hv.real, 0)),
             (1j, np.maximum(hv.imag, 0)), (-1j, np.maximum(-hv.imag, 0))]
    budget = epsilon / 4
    out = np.zeros(grp.size, dtype=complex)
    K = np.zeros(grp.size, bool)
    parts = []
    for unit, v in units:
        a = v > 0
        if not a.any():
            continue
        w1 = GroupFunction(grp, v + 1.0)
        w2 = GroupFunction(grp, np.ones(grp.size))
        r1 = run(a, w1, pair, basis, Schedules.default(budget, n_max, g_tol), **kwargs)
        r2 = run(a, w2, pair, basis, Schedules.default(budget, n_max, g_tol, unit_weight=True),
                 **kwargs)
        piece = np.where(r1.b, w1.values, 0.0) - np.where(r2.b, 1.0, 0.0)
        out += unit * piece
        K |= r1.K | r2.K
        parts.append({"unit": unit, "a": a, "rail_results": (r1, r2), "piece": GroupFunction(grp, piece)})
    if np.all(np.abs(out.imag) == 0):
        out = out.real
    return BoundedCorrection(GroupFunction(grp, out), parts, K)
