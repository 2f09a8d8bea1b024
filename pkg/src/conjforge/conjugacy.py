"""Synthesis and verification of conjugacies between tree-driven dynamics.

Given trees with decidable structural walks and an order isomorphism between
their path sets, the synthesized homeomorphism agrees with the isomorphism on
coded fixed points and transports each fixed-point-free gap onto its image
gap by matching fundamental domains of the two dynamics: the gap midpoint
anchors an affine seed between the domains [x0, f(x0)) and [y0, g(y0)), and
iterate indices are located by certified interval comparisons.

Every intermediate quantity is an exact-rational interval guaranteed to
contain the true value, so results are enclosures and failures are explicit
(budget or precision exhaustion), never silent drift.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from .cantor import (
    ALL_ONES,
    ECPath,
    OnesZerosTree,
    Path,
    Tree,
    cantor_decode,
    cantor_encode,
    cantor_value,
    ec_compare,
)
from .dynamics import DynamicsCode, build_dynamics
from .errors import (
    BudgetExhaustedError,
    OrderIsoValidationError,
    OutOfDomainError,
    PrecisionExhaustedError,
)
from .exact import (
    FunctionCode,
    RealCode,
    Separation,
    format_rational,
    pow2,
    round_dyadic,
    separate,
)
from .orders import OrderTree

ZERO = Fraction(0)
ONE = Fraction(1)


# ---------------------------------------------------------------------------
# exact-rational intervals

@dataclass(frozen=True)
class Iv:
    """Closed interval with exact rational endpoints; encloses a true value."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"inverted interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, q: Fraction) -> "Iv":
        q = Fraction(q)
        return cls(q, q)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def round_out(self, bits: int) -> "Iv":
        ulp = pow2(bits)
        return Iv(round_dyadic(self.lo, bits) - ulp, round_dyadic(self.hi, bits) + ulp)

    def shift(self, q: Fraction) -> "Iv":
        return Iv(self.lo + q, self.hi + q)

    def mul(self, other: "Iv") -> "Iv":
        cands = (self.lo * other.lo, self.lo * other.hi,
                 self.hi * other.lo, self.hi * other.hi)
        return Iv(min(cands), max(cands))

    def div(self, other: "Iv") -> Optional["Iv"]:
        if other.lo <= 0:
            return None  # caller refines until the denominator clears zero
        cands = (self.lo / other.lo, self.lo / other.hi,
                 self.hi / other.lo, self.hi / other.hi)
        return Iv(min(cands), max(cands))

    def clip(self, lo: Fraction, hi: Fraction) -> "Iv":
        return Iv(max(self.lo, lo), min(self.hi, hi))


# ---------------------------------------------------------------------------
# order isomorphisms between path sets

@dataclass
class OrderIso:
    """Order-preserving bijection between two path sets, both directions."""

    forward: Callable[[Path], Path]
    backward: Callable[[Path], Path]

    def inverse(self) -> "OrderIso":
        return OrderIso(forward=self.backward, backward=self.forward)


def ones_zeros_order_iso(domain: OnesZerosTree, image: OnesZerosTree) -> OrderIso:
    """The unique order isomorphism between two ones-then-zeros path sets.

    Paths of n ones map by matching ranks within the respective sample
    complements; the all-ones path maps to itself.
    """

    def _map(tree_from: OnesZerosTree, tree_to: OnesZerosTree, x: Path) -> Path:
        if not isinstance(x, ECPath):
            raise OrderIsoValidationError(
                "this isomorphism is defined on eventually constant paths")
        if x == ALL_ONES:
            return ALL_ONES
        if x.tail != 0 or any(ch != "1" for ch in x.prefix):
            raise OrderIsoValidationError(f"{x!r} is not a path of the tree")
        n = len(x.prefix)
        rank = tree_from.complement_rank(n)
        return ECPath("1" * tree_to.complement_element(rank), 0)

    return OrderIso(
        forward=lambda x: _map(domain, image, x),
        backward=lambda x: _map(image, domain, x),
    )


def label_path_iso(domain: OrderTree, image: OrderTree) -> OrderIso:
    """Path isomorphism induced by matching the two recovered finite orders."""
    from .orders import recover_order

    domain._ensure_complete()
    image._ensure_complete()
    a_sorted = recover_order(domain, domain.built_depth)
    b_sorted = recover_order(image, image.built_depth)
    if len(a_sorted) != len(b_sorted):
        raise OrderIsoValidationError(
            "the two orders have different sizes; no isomorphism exists")
    fwd_label = {domain.label(a): image.label(b) for a, b in zip(a_sorted, b_sorted)}
    bwd_label = {v: k for k, v in fwd_label.items()}

    def _map(table: dict[str, str], x: Path) -> Path:
        if not isinstance(x, ECPath):
            raise OrderIsoValidationError(
                "this isomorphism is defined on eventually constant paths")
        if x == ALL_ONES:
            return ALL_ONES
        if x.tail != 1 or x.prefix not in table:
            raise OrderIsoValidationError(f"{x!r} is not a labeled path")
        return ECPath(table[x.prefix], 1)

    return OrderIso(
        forward=lambda x: _map(fwd_label, x),
        backward=lambda x: _map(bwd_label, x),
    )


def order_iso_for(domain: Tree, image: Tree) -> OrderIso:
    """Canonical isomorphism for supported same-family tree pairs."""
    if isinstance(domain, OnesZerosTree) and isinstance(image, OnesZerosTree):
        return ones_zeros_order_iso(domain, image)
    if isinstance(domain, OrderTree) and isinstance(image, OrderTree):
        return label_path_iso(domain, image)
    raise OrderIsoValidationError(
        f"no canonical isomorphism between {type(domain).__name__} "
        f"and {type(image).__name__}")


def validate_order_iso(domain: Tree, image: Tree, iso: OrderIso,
                       depth: int = 10) -> None:
    """Spot-check that ``iso`` behaves like an order isomorphism.

    Samples the extremal paths through all depth-limited nodes, then checks
    round trips, image membership at finite depth, and order preservation on
    consecutive samples.  Raises OrderIsoValidationError on any violation.
    """
    paths: list[ECPath] = []
    seen = set()
    for n in range(depth + 1):
        for s in domain.level_strings(n):
            for x in (domain.leftmost_path(s), domain.rightmost_path(s)):
                if x is not None and x not in seen:
                    seen.add(x)
                    paths.append(x)
    import functools

    paths.sort(key=functools.cmp_to_key(ec_compare))
    images = []
    for x in paths:
        y = iso.forward(x)
        back = iso.backward(y)
        if not isinstance(y, ECPath) or not isinstance(back, ECPath):
            raise OrderIsoValidationError("isomorphism left the eventually "
                                          "constant fragment")
        if back != x:
            raise OrderIsoValidationError(
                f"round trip failed: {x!r} -> {y!r} -> {back!r}")
        prefix = "".join(str(y.bit(i)) for i in range(depth))
        for k in range(depth + 1):
            if not image.member(prefix[:k]):
                raise OrderIsoValidationError(
                    f"image path {y!r} leaves the image tree at depth {k}")
        images.append(y)
    for (x1, y1), (x2, y2) in zip(zip(paths, images), zip(paths[1:], images[1:])):
        if ec_compare(x1, x2) < 0 and ec_compare(y1, y2) >= 0:
            raise OrderIsoValidationError(
                f"order not preserved: {x1!r} < {x2!r} but images compare otherwise")


# ---------------------------------------------------------------------------
# gap structure

@dataclass(frozen=True)
class GapInterval:
    """A maximal open interval free of fixed points, with certified fixed
    endpoints (None means the corresponding unit-interval endpoint)."""

    left_path: Optional[ECPath]
    right_path: Optional[ECPath]
    a: Fraction
    b: Fraction
    image_a: Fraction
    image_b: Fraction
    certified: bool = True


class _Fixed:
    __slots__ = ("path",)

    def __init__(self, path: ECPath):
        self.path = path


class _Hull:
    __slots__ = ("left", "right", "image_lo", "image_hi")

    def __init__(self, left, right, image_lo, image_hi):
        self.left = left
        self.right = right
        self.image_lo = image_lo
        self.image_hi = image_hi


class _GapState:
    """Anchor chains for one gap at one working precision.

    ``fwd[k]`` encloses the k-th forward iterate of the domain midpoint under
    the domain dynamics, ``yfwd[k]`` the matching image-side iterate; ``bwd``
    and ``ybwd`` hold the inverse iterates.  Image anchors are exact values
    of the synthesized map at the domain anchors, which is what makes both
    the index search and the endpoint pinch certifiable.  The image chains
    grow only when the seed slope or an endpoint pinch needs them.
    """

    def __init__(self, x0: Fraction, y0: Fraction, bits: int):
        self.bits = bits
        self.fwd = [Iv.point(x0)]
        self.bwd = [Iv.point(x0)]
        self.yfwd = [Iv.point(y0)]
        self.ybwd = [Iv.point(y0)]
        self.lock = threading.RLock()


def _fwd_interval(code: DynamicsCode, iv: Iv, bits: int) -> Iv:
    # one evaluation at the midpoint, padded by the certified Lipschitz
    # envelope 1 + margin over the interval radius
    eps = pow2(bits)
    mid = min(max(iv.mid, ZERO), ONE)
    v = code._eval(mid, bits)
    pad = (1 + code.displacement_margin) * iv.width / 2 + eps
    return Iv(v - pad, v + pad).round_out(bits + 4)


def _inv_interval(code: DynamicsCode, iv: Iv, bits: int) -> Iv:
    """Enclose the preimage of an enclosed value under the dynamics.

    Solves f(z) = mid by the contraction z <- mid - (f(z) - z), whose
    contraction factor is the certified displacement-derivative margin; the
    final enclosure comes from the residual and the derivative floor
    1 - margin, independent of how the iteration behaved.
    """
    margin = code.displacement_margin          # sup |f' - 1|
    floor_inv = 1 / (1 - margin)               # bound on 1 / inf f'
    target = min(max(iv.mid, ZERO), ONE)
    z = target
    eps = pow2(bits)
    for _ in range(bits + 40):
        disp = code.displacement(z, bits)
        z_next = min(max(round_dyadic(target - disp, bits + 4), ZERO), ONE)
        done = abs(z_next - z) <= eps
        z = z_next
        if done:
            break
    # residual from the final displacement: f(z) = z + disp(z) +- 2**-bits
    fz = z + code.displacement(z, bits)
    residual = max(abs(fz - iv.lo), abs(fz - iv.hi)) + eps
    pad = residual * floor_inv
    return Iv(z - pad, z + pad).round_out(bits + 4)


# ---------------------------------------------------------------------------
# the synthesized map

class SynthesizedConjugacy(FunctionCode):
    """Function code of the conjugacy synthesized from a path isomorphism.

    Evaluation at a rational first locates the point against the certified
    fixed-point structure (walking the tree with exact extremal paths); a
    point inside a fixed hull gets the hull's image, and a point inside a
    gap goes through the fundamental-domain matching.  Near gap endpoints
    the iterate index grows without bound, so evaluation there ends in a
    monotone endpoint pinch when it certifies, and an explicit budget error
    otherwise; the bump dynamics moves points exponentially slowly near
    fixed points and no evaluator of this map can do better.

    ``modulus`` is mathematically defined but its certified computation at
    useful resolutions needs the same unbounded iterate counts, so it
    searches within a budget and raises rather than guess; ``real_eval``
    bypasses it with adaptive monotone bracketing.
    """

    def __init__(self, domain_tree: Tree, image_tree: Tree, iso: OrderIso,
                 iteration_budget: int = 10_000, depth_margin: int = 4):
        self.domain_tree = domain_tree
        self.image_tree = image_tree
        self.iso = iso
        self.iteration_budget = iteration_budget
        self.depth_margin = depth_margin
        self.f_code = build_dynamics(domain_tree)
        self.g_code = build_dynamics(image_tree)
        self._gap_states: dict[tuple[Fraction, Fraction], _GapState] = {}
        self._states_lock = threading.Lock()

    # -- structure ----------------------------------------------------------

    def _image_value(self, x: Optional[ECPath], side: int) -> Fraction:
        if x is None:
            return ZERO if side == 0 else ONE
        y = self.iso.forward(x)
        if not isinstance(y, ECPath):
            raise OrderIsoValidationError(
                "synthesis needs eventually constant image paths")
        return cantor_value(y)

    def _gap(self, left: Optional[ECPath], right: Optional[ECPath]) -> GapInterval:
        a = cantor_value(left) if left is not None else ZERO
        b = cantor_value(right) if right is not None else ONE
        return GapInterval(
            left_path=left, right_path=right, a=a, b=b,
            image_a=self._image_value(left, 0),
            image_b=self._image_value(right, 1),
        )

    def _locate(self, x: Fraction, image_tol: Fraction, depth_cap: int):
        """Walk the domain tree: returns _Fixed, _Hull, or GapInterval."""
        tree = self.domain_tree
        if not tree.member("") or not tree.has_path_through(""):
            return self._gap(None, None)
        left = tree.leftmost_path("")
        right = tree.rightmost_path("")
        if x < cantor_value(left):
            return self._gap(None, left)
        if x > cantor_value(right):
            return self._gap(right, None)
        sigma = ""
        while True:
            if left == right:
                return _Fixed(left)
            ylo = self._image_value(left, 0)
            yhi = self._image_value(right, 1)
            if yhi - ylo <= image_tol:
                return _Hull(left, right, ylo, yhi)
            if len(sigma) >= depth_cap:
                raise BudgetExhaustedError(
                    f"fixed-point hull not resolved within depth {depth_cap}")
            kids = [s for s in (sigma + "0", sigma + "1")
                    if tree.member(s) and tree.has_path_through(s)]
            if not kids:
                raise BudgetExhaustedError(
                    f"structure walk lost all paths below {sigma!r}")
            if len(kids) == 1:
                sigma = kids[0]
                left = tree.leftmost_path(sigma)
                right = tree.rightmost_path(sigma)
                continue
            l0, r0 = tree.leftmost_path(kids[0]), tree.rightmost_path(kids[0])
            l1, r1 = tree.leftmost_path(kids[1]), tree.rightmost_path(kids[1])
            if x <= cantor_value(r0):
                sigma, left, right = kids[0], l0, r0
            elif x < cantor_value(l1):
                return self._gap(r0, l1)
            else:
                sigma, left, right = kids[1], l1, r1

    # -- gap evaluation -----------------------------------------------------

    def _gap_state(self, gap: GapInterval, bits: int) -> _GapState:
        # quantized working precision so different callers land on the same
        # anchor chains instead of regenerating them
        bits = max(48, 16 * ((bits + 15) // 16))
        key = (gap.a, gap.b)
        with self._states_lock:
            st = self._gap_states.get(key)
            if st is None or st.bits < bits:
                x0 = (gap.a + gap.b) / 2
                y0 = (gap.image_a + gap.image_b) / 2
                st = _GapState(x0, y0, bits)
                self._gap_states[key] = st
        return st

    def _ensure_fwd(self, st: _GapState, k: int):
        with st.lock:
            while len(st.fwd) <= k:
                st.fwd.append(_fwd_interval(self.f_code, st.fwd[-1], st.bits))

    def _ensure_bwd(self, st: _GapState, k: int):
        with st.lock:
            while len(st.bwd) <= k:
                st.bwd.append(_inv_interval(self.f_code, st.bwd[-1], st.bits))

    def _ensure_yfwd(self, st: _GapState, k: int):
        with st.lock:
            while len(st.yfwd) <= k:
                st.yfwd.append(_fwd_interval(self.g_code, st.yfwd[-1], st.bits))

    def _ensure_ybwd(self, st: _GapState, k: int):
        with st.lock:
            while len(st.ybwd) <= k:
                st.ybwd.append(_inv_interval(self.g_code, st.ybwd[-1], st.bits))

    def _search_index(self, st: _GapState, xiv: Iv):
        """Locate the fundamental domain of the enclosed point.

        Returns ("n", k) with the point certified inside (T_k, T_{k+1}),
        ("tie", ...) when an anchor overlap needs more precision, or
        ("pinch", side) when the budget ran out on one side.
        """
        x0 = st.fwd[0].lo
        if xiv.lo > x0:
            k = 0
            while k < self.iteration_budget:
                self._ensure_fwd(st, k + 1)
                nxt = st.fwd[k + 1]
                if xiv.hi < nxt.lo:
                    return ("n", k)
                if xiv.lo > nxt.hi:
                    k += 1
                    continue
                return ("tie", k + 1)
            return ("pinch", +1)
        if xiv.hi < x0:
            k = 0
            while k < self.iteration_budget:
                self._ensure_bwd(st, k + 1)
                nxt = st.bwd[k + 1]
                if xiv.lo > nxt.hi:
                    return ("n", -(k + 1))
                if xiv.hi < nxt.lo:
                    k += 1
                    continue
                return ("tie", -(k + 1))
            return ("pinch", -1)
        return ("tie", 0)

    def _tie_enclosure(self, st: _GapState, xiv: Iv, j: int,
                       eps: Fraction) -> Optional[Iv]:
        """Two-domain monotone bound when the point overlaps anchor j.

        The search invariant already certifies the point above the previous
        anchor; one further anchor on each side traps the value between the
        matching image anchors.
        """
        if j == 0:
            # straddles the midpoint: certify membership in (T_-1, T_1)
            self._ensure_fwd(st, 1)
            self._ensure_bwd(st, 1)
            if not (xiv.lo > st.bwd[1].hi and xiv.hi < st.fwd[1].lo):
                return None
            self._ensure_yfwd(st, 1)
            self._ensure_ybwd(st, 1)
            out = Iv(st.ybwd[1].lo, st.yfwd[1].hi)
            return out if out.width <= eps else None
        if j > 0:
            self._ensure_fwd(st, j + 1)
            if not xiv.hi < st.fwd[j + 1].lo:
                return None
            self._ensure_yfwd(st, j + 1)
            lo_iv = st.yfwd[j - 1] if j >= 1 else st.yfwd[0]
            out = Iv(lo_iv.lo, st.yfwd[j + 1].hi)
            return out if out.width <= eps else None
        k = -j
        self._ensure_bwd(st, k + 1)
        if not xiv.lo > st.bwd[k + 1].hi:
            return None
        self._ensure_ybwd(st, k + 1)
        hi_iv = st.ybwd[k - 1] if k >= 1 else st.ybwd[0]
        out = Iv(st.ybwd[k + 1].lo, hi_iv.hi)
        return out if out.width <= eps else None

    def _compose(self, gap: GapInterval, st: _GapState, xiv: Iv, n: int,
                 comp_bits: int) -> Optional[Iv]:
        """Transport an enclosed point through the fundamental-domain match."""
        x0 = st.fwd[0].lo
        y0 = st.yfwd[0].lo
        self._ensure_fwd(st, 1)
        self._ensure_yfwd(st, 1)
        fp1 = st.fwd[1]
        den = fp1.shift(-x0)
        num = st.yfwd[1].shift(-y0)
        slope = num.div(den)
        if slope is None:
            return None
        z = xiv
        if n >= 0:
            for _ in range(n):
                z = _inv_interval(self.f_code, z, comp_bits)
        else:
            for _ in range(-n):
                z = _fwd_interval(self.f_code, z, comp_bits)
        try:
            z = z.clip(x0, fp1.hi)
        except ValueError:
            return None  # enclosures drifted apart; retry with more bits
        w = z.shift(-x0).mul(slope).shift(y0)
        y = w
        if n >= 0:
            for _ in range(n):
                y = _fwd_interval(self.g_code, y, comp_bits)
        else:
            for _ in range(-n):
                y = _inv_interval(self.g_code, y, comp_bits)
        try:
            return y.clip(gap.image_a, gap.image_b)
        except ValueError:
            return None

    def _gap_eval(self, gap: GapInterval, x, p: int) -> Iv:
        """Enclose the image of x (exact rational or real code) in the gap,
        to width at most 2**-p."""
        eps = pow2(p)
        if gap.image_b - gap.image_a <= eps:
            return Iv(gap.image_a, gap.image_b)
        x0 = (gap.a + gap.b) / 2
        y0 = (gap.image_a + gap.image_b) / 2
        exact = x if isinstance(x, Fraction) else x.exact
        if exact is not None and exact == x0:
            return Iv.point(y0)
        state_bits = 48 if p <= 30 else p + 24
        extra = 0
        for _attempt in range(6):
            st = self._gap_state(gap, state_bits + extra)
            if exact is not None:
                xiv = Iv.point(exact)
            else:
                qbits = st.bits + extra
                q = x.query(qbits)
                xiv = Iv(q - pow2(qbits), q + pow2(qbits))
            kind, val = self._search_index(st, xiv)
            if kind == "pinch":
                b = self.iteration_budget
                if val > 0:
                    self._ensure_yfwd(st, b)
                    out = Iv(st.yfwd[b].lo, gap.image_b)
                else:
                    self._ensure_ybwd(st, b)
                    out = Iv(gap.image_a, st.ybwd[b].hi)
                if out.width <= eps:
                    return out
                raise BudgetExhaustedError(
                    "iterate index exceeds the budget and the endpoint pinch "
                    f"is wider than the tolerance (gap [{gap.a}, {gap.b}]); "
                    "the requested precision is too aggressive for this point")
            if kind == "tie":
                # the point overlaps an anchor enclosure; monotonicity still
                # bounds the value by the image anchors one step out, which
                # settles it whenever the image domains are already small
                out = self._tie_enclosure(st, xiv, val, eps)
                if out is not None:
                    return out
            if kind == "n":
                # working width for the transport: each of the ~2|n| steps
                # stretches by at most 26/25 and adds one ulp
                comp_bits = p + 18 + abs(val) // 8 + extra
                out = self._compose(gap, st, xiv, val, comp_bits)
                if out is not None and out.width <= eps:
                    return out
            extra += 24
        raise PrecisionExhaustedError(
            f"gap evaluation did not stabilize at {state_bits + extra} "
            "working bits")

    # -- public evaluation ----------------------------------------------------

    def _enclose(self, x: Fraction, p: int) -> Iv:
        """Enclosure of the map's value at an exact rational, width <= 2**-p."""
        if x < 0 or x > 1:
            raise OutOfDomainError(f"{format_rational(x)} outside [0,1]")
        if x == 0:
            return Iv.point(ZERO)
        if x == 1:
            return Iv.point(ONE)
        depth_cap = max(4 * p + 64, 96)
        loc = self._locate(x, pow2(p + 1), depth_cap)
        if isinstance(loc, _Fixed):
            y = self.iso.forward(loc.path)
            if isinstance(y, ECPath):
                return Iv.point(cantor_value(y))
            q = cantor_encode(y).query(p + 2)
            return Iv(q - pow2(p + 2), q + pow2(p + 2))
        if isinstance(loc, _Hull):
            return Iv(loc.image_lo, loc.image_hi)
        return self._gap_eval(loc, x, p)

    def rational_eval(self, q: Fraction) -> RealCode:
        if q < 0 or q > 1:
            raise OutOfDomainError(f"{format_rational(q)} outside [0,1]")
        if q == 0 or q == 1:
            return RealCode.from_rational(Fraction(q))
        qq = Fraction(q)
        # exactness probe: a rational sitting on a coded fixed point maps to
        # the exact coded image whenever both paths are eventually constant
        try:
            loc = self._locate(qq, ZERO, 96)
        except BudgetExhaustedError:
            loc = None
        if isinstance(loc, _Fixed):
            y = self.iso.forward(loc.path)
            if isinstance(y, ECPath):
                return RealCode.from_rational(cantor_value(y))
        return RealCode(lambda p: self._enclose(qq, p + 1).mid)

    def real_eval(self, x: RealCode) -> RealCode:
        if x.exact is not None:
            return self.rational_eval(x.exact)

        def query(p: int) -> Fraction:
            # monotone bracketing: the map is increasing, so its value is
            # trapped between the values at rational bounds of the argument.
            # The bracket starts well below the typical fundamental-domain
            # width so each endpoint resolves within one domain.
            bits = max(p + 8, 56)
            for _ in range(12):
                q = x.query(bits)
                e = pow2(bits)
                lo = min(max(q - e, ZERO), ONE)
                hi = min(max(q + e, ZERO), ONE)
                enc_lo = self._enclose(lo, p + 2)
                enc_hi = self._enclose(hi, p + 2)
                out = Iv(min(enc_lo.lo, enc_hi.lo), max(enc_lo.hi, enc_hi.hi))
                if out.width <= 2 * pow2(p):
                    return out.mid
                bits += 16
            raise PrecisionExhaustedError(
                "argument bracket did not stabilize; the point sits too close "
                "to a steep or slow region for this precision")

        return RealCode(query)

    def modulus(self, m: int) -> int:
        """Certified modulus of uniform continuity, searched within a budget.

        The certified mesh needs endpoint pinches on every gap at resolution
        2**-m, whose iterate counts grow beyond any budget as m grows; this
        raises instead of guessing when the budget is hit.  Evaluation does
        not depend on it (``real_eval`` uses monotone bracketing instead).
        """
        boundaries = structural_fixed_boundaries(self.domain_tree)
        min_width = ONE
        for left, right in boundaries.gaps:
            gap = self._gap(left, right)
            if gap.b - gap.a <= 0:
                continue
            min_width = min(min_width, self._gap_mesh(gap, m))
        # the cluster region around the limit point contributes pieces no
        # wider than its own diameter
        if boundaries.cluster_width > 0:
            min_width = min(min_width, boundaries.cluster_width)
        d = 0
        step = ONE
        while step > min_width:
            d += 1
            step /= 2
        return d + 1

    def _gap_mesh(self, gap: GapInterval, m: int) -> Fraction:
        """Smallest certified piece width covering the gap at image mesh
        2**-m; raises BudgetExhaustedError when anchors cannot reach the
        endpoint pinches within the budget."""
        eps = pow2(m)
        if gap.image_b - gap.image_a <= eps:
            return gap.b - gap.a
        bits = m + 24
        st = self._gap_state(gap, bits)
        budget = min(self.iteration_budget, 2000)
        min_piece = gap.b - gap.a
        k = 0
        while True:
            self._ensure_fwd(st, k + 1)
            self._ensure_yfwd(st, k + 1)
            min_piece = min(min_piece, st.fwd[k + 1].lo - st.fwd[k].hi)
            if gap.image_b - st.yfwd[k + 1].lo <= eps:
                break
            k += 1
            if k >= budget:
                raise BudgetExhaustedError(
                    f"modulus at 2**-{m} needs more than {budget} iterates "
                    f"in gap [{gap.a}, {gap.b}]")
        k = 0
        while True:
            self._ensure_bwd(st, k + 1)
            self._ensure_ybwd(st, k + 1)
            min_piece = min(min_piece, st.bwd[k].lo - st.bwd[k + 1].hi)
            if st.ybwd[k + 1].hi - gap.image_a <= eps:
                break
            k += 1
            if k >= budget:
                raise BudgetExhaustedError(
                    f"modulus at 2**-{m} needs more than {budget} iterates "
                    f"in gap [{gap.a}, {gap.b}]")
        if min_piece <= 0:
            raise PrecisionExhaustedError("anchor enclosures overlap; "
                                          "modulus needs more working bits")
        return min_piece


# ---------------------------------------------------------------------------
# homeomorphisms

@dataclass
class Homeo:
    """Orientation-preserving homeomorphism code with its inverse."""

    fn: FunctionCode
    inv: FunctionCode


def synth_conjugacy(domain_tree: Tree, image_tree: Tree, iso: OrderIso,
                    iteration_budget: int = 10_000) -> Homeo:
    """Build the conjugacy (and its inverse) from a path-set isomorphism.

    The midpoint/affine seed makes the construction symmetric: synthesizing
    in the reverse direction with the inverse isomorphism yields exactly the
    inverse map, and equal trees with the identity isomorphism synthesize
    the identity.
    """
    fwd = SynthesizedConjugacy(domain_tree, image_tree, iso,
                               iteration_budget=iteration_budget)
    bwd = SynthesizedConjugacy(image_tree, domain_tree, iso.inverse(),
                               iteration_budget=iteration_budget)
    return Homeo(fn=fwd, inv=bwd)


def extract_order_iso(h: Homeo, domain_tree: Tree, image_tree: Tree,
                      max_precision: int = 256) -> OrderIso:
    """Read the path-set isomorphism off a conjugacy.

    Forward: encode the path, run it through the homeomorphism, decode the
    result.  Decoding certifies failure (value outside the coded set) when
    the claimed conjugacy does not map fixed points to fixed points.
    """

    def forward(x: Path) -> Path:
        return cantor_decode(h.fn.real_eval(cantor_encode(x)), max_precision)

    def backward(y: Path) -> Path:
        return cantor_decode(h.inv.real_eval(cantor_encode(y)), max_precision)

    return OrderIso(forward=forward, backward=backward)


def invert_monotone(fc: FunctionCode, y: RealCode, p: int,
                    inverse_lipschitz: int = 2) -> Fraction:
    """Preimage of y under a strictly increasing map fixing 0 and 1.

    Certified bisection on exact rationals: strict comparison verdicts move
    the bracket, and an indistinguishable verdict ends the search because
    the inverse stretch bound turns closeness of values into closeness of
    arguments.  ``inverse_lipschitz`` is that bound (2 covers the tree
    dynamics, whose derivative stays above 1/2); a generic monotone map with
    no such bound admits no certified inversion.
    """
    lip_bits = max(int(inverse_lipschitz).bit_length() - 1, 0) + 1
    wp = p + 3 + lip_bits
    yq = y.query(wp)
    if yq - pow2(wp) > 1 or yq + pow2(wp) < 0:
        raise OutOfDomainError("target certified outside [0, 1]")
    lo, hi = ZERO, ONE
    while hi - lo > pow2(p):
        mid = (lo + hi) / 2
        verdict = separate(fc.rational_eval(mid), y, wp)
        if verdict is Separation.LESS:
            lo = mid
        elif verdict is Separation.GREATER:
            hi = mid
        else:
            # |f(mid) - y| <= 2**-(wp-2), so mid is within
            # inverse_lipschitz * 2**-(wp-2) <= 2**-p of the preimage
            return mid
    return (lo + hi) / 2


# ---------------------------------------------------------------------------
# verification

@dataclass
class PointCheck:
    x: Fraction
    lhs: Fraction
    rhs: Fraction
    diff: Fraction
    tolerance: Fraction
    passed: bool
    certified_failure: bool

    @property
    def verdict(self) -> str:
        if self.passed:
            return "pass"
        return "fail-certified" if self.certified_failure else "fail"


@dataclass
class VerificationReport:
    convention: str
    precision: int
    rows: list[PointCheck]
    sanity: dict

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows) and self.sanity["homeo_ok"]

    @property
    def failures(self) -> int:
        return sum(1 for r in self.rows if not r.passed)

    @property
    def certified_failures(self) -> int:
        return sum(1 for r in self.rows if r.certified_failure)

    def to_csv(self) -> str:
        lines = [f"# convention: {self.convention}",
                 f"# precision: {self.precision}",
                 "grid_point,lhs,rhs,diff_bound,verdict"]
        for r in self.rows:
            lines.append(",".join([
                format_rational(r.x),
                format_rational(r.lhs),
                format_rational(r.rhs),
                format_rational(r.diff + r.tolerance),
                r.verdict,
            ]))
        s = self.sanity
        lines.append(f"# endpoints_fixed: {s['endpoints_fixed']}")
        lines.append(f"# monotone_on_grid: {s['monotone_on_grid']}")
        return "\n".join(lines) + "\n"


def verify_conjugacy(f: FunctionCode, g: FunctionCode, h: Homeo,
                     grid: list[Fraction], p: int) -> VerificationReport:
    """Check the conjugacy equation h(f(x)) = g(h(x)) on a rational grid.

    Both sides are computed to precision p+2; a point passes when the
    computed difference is at most 2**-p, and a failure is certified when
    the computed difference exceeds the tolerance by more than the total
    evaluation error budget.  The report also carries a homeomorphism
    sanity block: endpoint fixing and monotonicity of the computed values.
    """
    tol = pow2(p)
    rows = []
    hvals = []
    for q in sorted(set(Fraction(q) for q in grid)):
        fx = f.rational_eval(q)
        lhs = h.fn.real_eval(fx).query(p + 2)
        v_prec = g.modulus(p + 2) + 1
        v = h.fn.rational_eval(q).query(v_prec)
        v = min(max(v, ZERO), ONE)
        rhs = g.rational_eval(v).query(p + 2)
        diff = abs(lhs - rhs)
        # total error: lhs 2**-(p+2); rhs 2**-(p+2) evaluation plus
        # 2**-(p+2) propagated through g's modulus
        budget = 3 * pow2(p + 2)
        rows.append(PointCheck(
            x=q, lhs=lhs, rhs=rhs, diff=diff, tolerance=tol,
            passed=diff <= tol,
            certified_failure=diff - budget > tol,
        ))
        hvals.append((q, v))
    h0 = h.fn.rational_eval(ZERO).query(p + 2)
    h1 = h.fn.rational_eval(ONE).query(p + 2)
    endpoints_fixed = abs(h0) <= tol and abs(h1 - 1) <= tol
    monotone = all(v2 + pow2(p + 1) > v1
                   for (_, v1), (_, v2) in zip(hvals, hvals[1:]))
    strictly_up = sum(1 for (_, v1), (_, v2) in zip(hvals, hvals[1:])
                      if v2 - v1 > pow2(p + 1))
    sanity = {
        "endpoints_fixed": endpoints_fixed,
        "monotone_on_grid": monotone,
        "strict_increases_certified": strictly_up,
        "homeo_ok": endpoints_fixed and monotone,
    }
    return VerificationReport(
        convention="h(f(x)) compared against g(h(x))",
        precision=p, rows=rows, sanity=sanity,
    )


# ---------------------------------------------------------------------------
# grids

@dataclass
class StructuralBoundaries:
    """Certified fixed points and the true gaps between consecutive ones.

    ``gaps`` holds (left_path, right_path) pairs with None for the unit
    endpoints; ``cluster_width`` is the diameter of the region near the
    limit point that still contains unlisted fixed points (zero when the
    fixed set is finite and fully listed).
    """

    fixed_values: list[Fraction]
    gaps: list[tuple[Optional[ECPath], Optional[ECPath]]]
    cluster_width: Fraction


def structural_fixed_boundaries(tree: Tree, cluster_depth: int = 20) -> StructuralBoundaries:
    if isinstance(tree, OnesZerosTree):
        paths = [ECPath("1" * tree.complement_element(r), 0)
                 for r in range(cluster_depth)]
        top = ALL_ONES
        gaps: list[tuple[Optional[ECPath], Optional[ECPath]]] = [(None, paths[0])]
        gaps += list(zip(paths, paths[1:]))
        # between the last listed path and the top point more fixed points
        # accumulate, so that stretch is a cluster, not a gap
        gaps.append((top, None))
        cluster = cantor_value(top) - cantor_value(paths[-1])
        values = [cantor_value(x) for x in paths] + [cantor_value(top)]
        return StructuralBoundaries(values, gaps, cluster)
    if isinstance(tree, OrderTree):
        tree._ensure_complete()
        import functools

        paths = sorted((ECPath(l, 1) for l in tree.labels().values()),
                       key=functools.cmp_to_key(ec_compare))
        top = ALL_ONES
        all_paths = paths + [top]
        gaps = [(None, all_paths[0])]
        gaps += list(zip(all_paths, all_paths[1:]))
        gaps.append((top, None))
        values = [cantor_value(x) for x in all_paths]
        return StructuralBoundaries(values, gaps, ZERO)
    raise OrderIsoValidationError(
        f"no structural boundary data for {type(tree).__name__}")


def default_verification_grid(tree: Tree, count: int = 100,
                              cluster_depth: int = 20,
                              homeo: Optional[Homeo] = None) -> list[Fraction]:
    """Deterministic grid adapted to the fixed-point structure.

    Contains the unit endpoints, the coded fixed points up to the cluster
    depth, the midpoints of the certified gaps between consecutive fixed
    points, and (when a synthesized homeomorphism is supplied) points graded
    along the iterate chains inside each gap, covering fundamental domains
    on both sides of the midpoint.  The dynamics moves points exponentially
    slowly near its fixed points, so values close to gap endpoints are
    unreachable at realistic budgets for every evaluator; the graded points
    exercise the deepest iterate indices that stay feasible.
    """
    bounds = structural_fixed_boundaries(tree, cluster_depth)
    chosen = {ZERO, ONE}
    chosen.update(bounds.fixed_values)
    gap_pairs = []
    for left, right in bounds.gaps:
        a = cantor_value(left) if left is not None else ZERO
        b = cantor_value(right) if right is not None else ONE
        if b > a:
            gap_pairs.append((left, right, a, b))
    gap_pairs.sort(key=lambda g: g[3] - g[2], reverse=True)
    for _, _, a, b in gap_pairs:
        chosen.add((a + b) / 2)
    synth = None
    if homeo is not None and isinstance(homeo.fn, SynthesizedConjugacy) \
            and homeo.fn.domain_tree is tree:
        synth = homeo.fn
    if synth is not None:
        graded = [1, -1, 2, -2, 3, -3, 4, -4, 6, -6, 8, -8, 11, -11]
        wide = []
        for left, right, a, b in gap_pairs:
            if b - a <= pow2(24):
                continue
            # graded offsets make sense only where the fundamental domains
            # are wide enough for every evaluator to work at comfortable
            # precision; deeper gaps keep just their midpoint
            disp = synth.f_code.displacement((a + b) / 2, 40)
            if disp > pow2(30):
                wide.append((left, right))
        for k in graded:
            for left, right in wide:
                if len(chosen) >= count:
                    break
                gap = synth._gap(left, right)
                st = synth._gap_state(gap, 48)
                if k > 0:
                    synth._ensure_fwd(st, k + 1)
                    lo_anchor, hi_anchor = st.fwd[k], st.fwd[k + 1]
                else:
                    synth._ensure_bwd(st, -k + 1)
                    lo_anchor, hi_anchor = st.bwd[-k + 1], st.bwd[-k]
                if lo_anchor.hi < hi_anchor.lo:
                    chosen.add((lo_anchor.hi + hi_anchor.lo) / 2)
            if len(chosen) >= count:
                break
    else:
        # without chain data only the outermost gaps accept interior offsets
        # at modest iterate depth
        outer = [g for g in gap_pairs if g[2] == ZERO or g[3] == ONE]
        for t in (Fraction(3, 8), Fraction(5, 8), Fraction(1, 4), Fraction(3, 4)):
            for _, _, a, b in outer:
                if len(chosen) >= count:
                    break
                chosen.add(a + (b - a) * t)
            if len(chosen) >= count:
                break
    return sorted(chosen)[:count]
