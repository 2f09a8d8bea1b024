"""Increasing interval maps whose fixed points are a coded tree's path set.

Given a decidable tree, the map is the identity plus one scaled bump per
connected component of the level-n complement structure, weighted 3**-n at
level n.  Every evaluation carries an explicit error ledger: a truncation
level N with tail below 1/(2 * 3**N) and a per-term budget that splits the
remaining tolerance evenly.
"""

from __future__ import annotations

import threading
from bisect import bisect_right
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional

from .cantor import Tree, coded_path_value, complement_components
from .exact import FunctionCode, RealCode, pow2, round_dyadic

# Certified envelope for the default bump's derivative.  The derivative bound
# oracle (see derivative_bound_certificate and the acceptance suite) encloses
# sup|b'| below 0.078; we use the safe round constant 2/25 = 0.08.  Summing
# the level weights 3**-n gives |f' - 1| <= 0.08/2 = 1/25 for every tree.
BUMP_DERIV_SUP = Fraction(2, 25)
DISPLACEMENT_DERIV_SUP = Fraction(1, 25)


def _round_div(a: int, b: int) -> int:
    """Round a/b to the nearest integer (b > 0), ties away from zero."""
    if a >= 0:
        return (2 * a + b) // (2 * b)
    return -((-2 * a + b) // (2 * b))


def exp_neg(t: Fraction, p: int) -> Fraction:
    """Rigorous evaluation of exp(-t) for t >= 0 within 2**-p.

    Argument reduction exp(-t) = exp(-t/2**k)**(2**k) keeps the alternating
    series short.  The series and the squarings run on integers scaled by
    2**guard with guard = p+k+16, and every rounding is charged to the error
    ledger: the reduced argument costs one ulp, each series term half an
    ulp, truncation two ulps, and each squaring doubles the accumulated
    error and adds half an ulp; the total stays below 2**-p with room.
    For t >= max(p, 1) the value itself is below 2**-p, so 0 is valid.
    """
    if t < 0:
        raise ValueError("exp_neg takes a nonnegative argument")
    if t == 0:
        return Fraction(1)
    if t >= max(p, 1):
        return Fraction(0)
    k = 0
    while t > Fraction(1, 2):
        t /= 2
        k += 1
    guard = p + k + 16
    one = 1 << guard
    s_int = _round_div(t.numerator << guard, t.denominator)
    term = one
    total = one
    j = 0
    while abs(term) > 1:
        j += 1
        term = -_round_div(term * s_int, j << guard)
        total += term
        if j > guard + 4:  # pragma: no cover - terms at least halve each step
            break
    y = min(max(total, 0), one)
    for _ in range(k):
        y = _round_div(y * y, one)
        if y > one:
            y = one
    return Fraction(y, one)


def exp_neg_upper(t: Fraction) -> Fraction:
    """A rigorous upper bound on exp(-t), cheap for large t.

    Uses exp(-t) <= 2**-floor(36 t / 25) (since 36/25 * ln 2 < 1) when t is
    large, and the series evaluation otherwise.
    """
    if t <= 0:
        return Fraction(1)
    if t >= 40:
        shift = (36 * t.numerator) // (25 * t.denominator)
        return pow2(int(shift))
    return exp_neg(t, 48) + pow2(48)


@dataclass(frozen=True)
class BumpSpec:
    """Scaling constant for the bump (1/scale) * exp(-1/(x(1-x))).

    scale = 1 is valid: the bump's derivative stays below 1 everywhere, which
    the derivative bound oracle certifies with a wide margin (sup ~ 0.078).
    """

    scale: Fraction = Fraction(1)

    def __post_init__(self):
        if self.scale < 1:
            raise ValueError("bump scale must be at least 1")


DEFAULT_BUMP = BumpSpec()


def bump_eval(x: Fraction, p: int, spec: BumpSpec = DEFAULT_BUMP) -> Fraction:
    """Evaluate the bump at a rational within 2**-p; endpoints are exact 0."""
    if x < 0 or x > 1:
        raise ValueError("bump argument must lie in [0, 1]")
    if x == 0 or x == 1:
        return Fraction(0)
    w = x * (1 - x)
    val = exp_neg(1 / w, p)
    return val / spec.scale


def scaled_bump_eval(a: Fraction, c: Fraction, x: Fraction, p: int,
                     spec: BumpSpec = DEFAULT_BUMP) -> Fraction:
    """The bump rescaled to have support [a, c], within 2**-p; 0 outside."""
    if a >= c:
        raise ValueError("support must satisfy a < c")
    if x <= a or x >= c:
        return Fraction(0)
    width = c - a
    extra = 0
    w = width
    while w > 1:  # widths above 1 amplify the bump error by the width
        w /= 2
        extra += 1
    # rounding the relative position costs at most sup|b'| * ulp, well under
    # the 2**-(p+2) left in the budget, and keeps denominators dyadic
    u = round_dyadic((x - a) / width, p + extra + 12)
    u = min(max(u, Fraction(0)), Fraction(1))
    return width * bump_eval(u, p + extra + 1, spec)


class _ComponentCache:
    """Per-tree cache of complement component lists, one per level.

    Populated lazily; idempotent fills keep concurrent read-through safe.
    """

    def __init__(self, tree: Tree):
        self.tree = tree
        self._lock = threading.Lock()
        self._levels: dict[int, tuple[list[tuple[Fraction, Fraction]], list[Fraction]]] = {}

    def level(self, n: int):
        with self._lock:
            got = self._levels.get(n)
        if got is not None:
            return got
        comps = complement_components(self.tree, n)
        lefts = [c[0] for c in comps]
        with self._lock:
            got = self._levels.setdefault(n, (comps, lefts))
        return got


_cache_registry: "dict[int, _ComponentCache]" = {}
_registry_lock = threading.Lock()


def _components_for(tree: Tree) -> _ComponentCache:
    key = id(tree)
    with _registry_lock:
        cache = _cache_registry.get(key)
        if cache is None or cache.tree is not tree:
            cache = _ComponentCache(tree)
            _cache_registry[key] = cache
    return cache


def level_bump_sum(tree: Tree, n: int, x: Fraction, p: int,
                   spec: BumpSpec = DEFAULT_BUMP) -> Fraction:
    """The level-n term: 3**-n times the bump of the component containing x.

    Components are disjoint, so at most one summand is nonzero; it is found
    by binary search over the sorted component list.  Result within 2**-p.
    """
    if n < 1:
        raise ValueError("levels start at 1")
    if x < 0 or x > 1:
        raise ValueError("argument must lie in [0, 1]")
    comps, lefts = _components_for(tree).level(n)
    i = bisect_right(lefts, x) - 1
    if i < 0:
        return Fraction(0)
    a, c = comps[i]
    if not (a < x < c):
        return Fraction(0)
    weight = Fraction(1, 3**n)
    # the output scale factor weight*(c-a) <= 1 never amplifies the error;
    # the final dyadic rounding keeps sums of these terms cheap and costs
    # 2**-(p+8), charged against the slack left by the inner budget
    return round_dyadic(weight * scaled_bump_eval(a, c, x, p + 1, spec), p + 8)


class Fixedness(Enum):
    FIXED_UP_TO_P = "fixed-up-to-p"
    NOT_FIXED = "not-fixed"


class DynamicsCode(FunctionCode):
    """Function code for the tree-driven map.

    Modulus d(m) = m + 1, justified by the derivative envelope (1/2, 3/2).
    The sharper certified envelope 1 +- 1/25 is exposed as
    ``displacement_margin`` for enclosure arithmetic that needs tight
    per-step stretch factors.
    """

    def __init__(self, tree: Tree, bump: BumpSpec = DEFAULT_BUMP):
        self.tree = tree
        self.bump = bump
        self._cache = _components_for(tree)
        self.displacement_margin = DISPLACEMENT_DERIV_SUP

    # -- error ledger -----------------------------------------------------
    # target 2**-p splits as: tail 1/(2*3**N) <= 2**-(p+1), and N terms each
    # within 2**-(p+1+ceil(log2 N)) so their sum stays below 2**-(p+1).

    @staticmethod
    def truncation_level(p: int) -> int:
        n = 1
        power = 3
        bound = 1 << (p + 1)
        while 2 * power < bound:
            n += 1
            power *= 3
        return n

    def partial(self, x: Fraction, levels: int, p: int) -> Fraction:
        """x plus the level sums through ``levels``, within 2**-p."""
        if levels < 0:
            raise ValueError("levels must be nonnegative")
        if x == 0 or x == 1:
            return Fraction(x)
        per = p + 1 + max(levels - 1, 0).bit_length()
        total = Fraction(x)
        for n in range(1, levels + 1):
            total += level_bump_sum(self.tree, n, x, per, self.bump)
        return total

    def displacement(self, x: Fraction, p: int) -> Fraction:
        """f(x) - x within 2**-p (exact 0 when every level term vanishes)."""
        return self._eval(x, p) - x

    def _eval(self, x: Fraction, p: int) -> Fraction:
        if x == 0 or x == 1:
            return Fraction(x)
        n = self.truncation_level(p)
        return self.partial(x, n, p + 1)

    def rational_eval(self, q: Fraction) -> RealCode:
        if q < 0 or q > 1:
            raise ValueError("argument must lie in [0, 1]")
        if q == 0 or q == 1:
            return RealCode.from_rational(Fraction(q))
        qq = Fraction(q)
        # at a coded path value every level term vanishes, so the map is
        # exactly the identity there; propagating exactness lets downstream
        # consumers avoid chasing precision next to a fixed point
        if coded_path_value(self.tree, qq) is not None:
            return RealCode.from_rational(qq)
        return RealCode(lambda p: self._eval(qq, p))

    def modulus(self, m: int) -> int:
        return m + 1

    def __repr__(self):
        return f"DynamicsCode({self.tree!r})"


def build_dynamics(tree: Tree, bump: BumpSpec = DEFAULT_BUMP) -> DynamicsCode:
    """Function code of the increasing map fixing exactly the coded path set
    together with both interval endpoints."""
    if not tree.member(""):
        raise ValueError("tree must be nonempty")
    return DynamicsCode(tree, bump)


# Escalation ladder for fixedness verdicts: the displacement at a non-fixed
# point can sit far below the requested tolerance (deep components move
# points by amounts around 3**-n times an exponentially small bump value),
# so certifying NOT_FIXED may need a few extra bits beyond p.
_IS_FIXED_LADDER = (3, 8, 13, 16)


def is_fixed(fc: FunctionCode, x: Fraction, p: int) -> Fixedness:
    """Finite-precision fixed-point verdict.

    NOT_FIXED certifies f(x) != x (for these maps, f(x) > x).  FIXED_UP_TO_P
    certifies |f(x) - x| <= 2**-p.  The two can overlap; certification of a
    strict difference is preferred and searched for along a short precision
    ladder before settling.
    """
    code = fc.rational_eval(x)
    last_q = None
    for step in _IS_FIXED_LADDER:
        q = p + step
        v = code.query(q)
        if abs(v - x) > pow2(q):
            return Fixedness.NOT_FIXED
        last_q = q
    v = code.query(last_q)
    if abs(v - x) <= pow2(p) - pow2(last_q):
        return Fixedness.FIXED_UP_TO_P
    # Hairline case: |f(x) - x| within one ulp of the tolerance.  Spend one
    # deep query to split it.
    deep = p + 24
    v = code.query(deep)
    if abs(v - x) > pow2(deep):
        return Fixedness.NOT_FIXED
    return Fixedness.FIXED_UP_TO_P


def derivative_bound_certificate(cells: int = 10_000, precision: int = 30,
                                 sample_stride: int = 10) -> dict:
    """Enclose sup|b'| for the unit-scale bump over a uniform cell partition.

    On each cell the derivative magnitude (1-2x) * exp(-1/w) / w**2 with
    w = x(1-x) is bounded two ways: via monotonicity of v -> exp(-1/v)/v**2
    on (0, 1/2) using the cell's largest w (valid on every cell since
    w <= 1/4), and, when the cell's smallest w is positive, via factorwise
    maximization.  The certificate records the max over cells of the smaller
    bound, plus a pointwise sample estimate for reference.
    """
    if cells < 2:
        raise ValueError("need at least two cells")
    best_upper = Fraction(0)
    point_estimate = Fraction(0)
    half = Fraction(1, 2)
    for i in range(cells):
        a = Fraction(i, cells)
        b = Fraction(i + 1, cells)
        wa = a * (1 - a)
        wb = b * (1 - b)
        if a <= half <= b:
            wmax = Fraction(1, 4)
        else:
            wmax = max(wa, wb)
        wmin = min(wa, wb)
        e_upper = exp_neg_upper(1 / wmax)
        mono = e_upper / (wmax * wmax)
        if wmin > 0:
            slope = max(abs(1 - 2 * a), abs(1 - 2 * b))
            quot = slope * e_upper / (wmin * wmin)
            cell_bound = min(mono, quot)
        else:
            cell_bound = mono
        if cell_bound > best_upper:
            best_upper = cell_bound
        if i % sample_stride == 0 and 0 < a and b < 1:
            m = (a + b) / 2
            wm = m * (1 - m)
            est = abs(1 - 2 * m) * exp_neg(1 / wm, precision) / (wm * wm)
            if est > point_estimate:
                point_estimate = est
    return {
        "cells": cells,
        "precision": precision,
        "upper_bound": best_upper,
        "point_estimate": point_estimate,
        "certifies_below_one": best_upper < 1,
    }
