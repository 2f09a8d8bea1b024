"""Finite binary strings, decidable trees, and the shrunken Cantor coding.

Infinite binary sequences are ordered by the first differing bit.  The coding
``c`` sends a sequence to the real in [1/3, 2/3] whose ternary expansion
starts with digit 1 and continues with digit ``2 * bit``; it is a strictly
increasing bijection onto the middle-thirds set shrunk into [1/3, 2/3], and
both directions are computable.
"""

from __future__ import annotations

import threading
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from .errors import (
    BudgetExhaustedError,
    NotInCantorSetError,
    PrecisionExhaustedError,
    SpecParseError,
    UnsupportedTreeOperationError,
)
from .exact import RealCode, pow2

# ---------------------------------------------------------------------------
# bit strings

def check_bits(s: str) -> str:
    if any(ch not in "01" for ch in s):
        raise ValueError(f"not a binary string: {s!r}")
    return s


def is_prefix(sigma: str, tau: str) -> bool:
    return tau.startswith(sigma)


def ones_zeros_split(s: str) -> Optional[tuple[int, int]]:
    """Decompose s as n ones followed by m zeros, or None if not that shape."""
    n = 0
    while n < len(s) and s[n] == "1":
        n += 1
    m = len(s) - n
    if "1" in s[n:]:
        return None
    return n, m


# ---------------------------------------------------------------------------
# paths

class Path:
    """An infinite binary sequence, queried one bit at a time."""

    def bit(self, n: int) -> int:
        raise NotImplementedError


class ECPath(Path):
    """Eventually constant path: a finite prefix followed by a constant tail.

    Normalized so the prefix never ends with the tail bit; two equal paths
    therefore compare equal as objects.  Every path handled by name in this
    library (tree interval endpoints, labeled order paths) has this form.
    """

    __slots__ = ("prefix", "tail")

    def __init__(self, prefix: str, tail: int):
        check_bits(prefix)
        if tail not in (0, 1):
            raise ValueError("tail bit must be 0 or 1")
        t = str(tail)
        while prefix.endswith(t):
            prefix = prefix[:-1]
        self.prefix = prefix
        self.tail = tail

    def bit(self, n: int) -> int:
        if n < len(self.prefix):
            return int(self.prefix[n])
        return self.tail

    def __eq__(self, other):
        return (isinstance(other, ECPath) and self.prefix == other.prefix
                and self.tail == other.tail)

    def __hash__(self):
        return hash((self.prefix, self.tail))

    def __repr__(self):
        return f"ECPath({self.describe()})"

    def describe(self) -> str:
        """Regex-like rendering, e.g. '1^2 0^w' for two ones then zeros."""
        parts = []
        i = 0
        while i < len(self.prefix):
            j = i
            while j < len(self.prefix) and self.prefix[j] == self.prefix[i]:
                j += 1
            parts.append(f"{self.prefix[i]}^{j - i}")
            i = j
        parts.append(f"{self.tail}^w")
        return " ".join(parts)


def ones_path(n: int) -> ECPath:
    """The path of n ones followed by zeros forever."""
    return ECPath("1" * n, 0)


ALL_ONES = ECPath("", 1)
ALL_ZEROS = ECPath("", 0)


class LazyPath(Path):
    """Path whose bits come from a callable, memoized as they are read."""

    def __init__(self, fn: Callable[[int], int]):
        self._fn = fn
        self._bits: list[int] = []
        self._lock = threading.Lock()

    def bit(self, n: int) -> int:
        with self._lock:
            while len(self._bits) <= n:
                self._bits.append(self._fn(len(self._bits)))
            return self._bits[n]


class PathOrder(Enum):
    LESS = "less"
    GREATER = "greater"
    EQUAL_UP_TO_BUDGET = "equal-up-to-budget"


def path_compare(x: Path, y: Path, budget: int) -> PathOrder:
    """Compare by the first differing bit among the first ``budget`` bits.

    Strict answers are ground truth; EQUAL_UP_TO_BUDGET only says no
    difference was seen within the scanned prefix.
    """
    for n in range(budget):
        bx, by = x.bit(n), y.bit(n)
        if bx != by:
            return PathOrder.LESS if bx < by else PathOrder.GREATER
    return PathOrder.EQUAL_UP_TO_BUDGET


def ec_compare(x: ECPath, y: ECPath) -> int:
    """Exact three-way comparison of eventually constant paths."""
    horizon = max(len(x.prefix), len(y.prefix)) + 1
    for n in range(horizon):
        bx, by = x.bit(n), y.bit(n)
        if bx != by:
            return -1 if bx < by else 1
    return 0


# ---------------------------------------------------------------------------
# trees

class Tree:
    """A decidable, prefix-closed set of finite binary strings.

    ``member`` is the defining predicate.  The structural capabilities
    (``has_path_through``, extremal paths) are only available on tree families
    where they are decidable; the base class refuses them, which is the honest
    default for an arbitrary decidable tree.
    """

    def member(self, s: str) -> bool:
        raise NotImplementedError

    def has_path_through(self, s: str) -> bool:
        raise UnsupportedTreeOperationError(
            f"{type(self).__name__} cannot decide path existence")

    def leftmost_path(self, s: str) -> Optional[ECPath]:
        raise UnsupportedTreeOperationError(
            f"{type(self).__name__} cannot compute extremal paths")

    def rightmost_path(self, s: str) -> Optional[ECPath]:
        raise UnsupportedTreeOperationError(
            f"{type(self).__name__} cannot compute extremal paths")

    def spec_string(self) -> str:
        raise UnsupportedTreeOperationError(
            f"{type(self).__name__} has no text form")

    def level_strings(self, n: int, cap: int = 1 << 22) -> list[str]:
        """All members of length n, in lexicographic order.

        Enumerates by recursive descent over membership tests, pruning
        non-member prefixes (sound because trees are prefix-closed).
        """
        if n == 0:
            return [""] if self.member("") else []
        frontier = [""] if self.member("") else []
        for _ in range(n):
            nxt = []
            for s in frontier:
                if self.member(s + "0"):
                    nxt.append(s + "0")
                if self.member(s + "1"):
                    nxt.append(s + "1")
                if len(nxt) > cap:
                    raise BudgetExhaustedError(
                        f"level {n} enumeration exceeded the node cap")
            frontier = nxt
        return frontier


class FullTree(Tree):
    """The complete binary tree; its path set is all of Cantor space."""

    def member(self, s: str) -> bool:
        check_bits(s)
        return True

    def has_path_through(self, s: str) -> bool:
        return True

    def leftmost_path(self, s: str) -> ECPath:
        return ECPath(s, 0)

    def rightmost_path(self, s: str) -> ECPath:
        return ECPath(s, 1)

    def __repr__(self):
        return "FullTree()"


class OnesZerosTree(Tree):
    """Trees whose strings are runs of ones followed by runs of zeros.

    ``sample`` is a finite injective enumeration a_0, a_1, ... standing in
    for an enumerated set A.  A string of n ones and m zeros belongs to the
    tree when no forbidden index among the first m enumeration stages equals
    n.  With an empty sample this is the unrestricted ones-then-zeros tree.
    The path set is {n ones then zeros : n not in A} plus the all-ones path.
    """

    def __init__(self, sample: Sequence[int] = (), kind: str = "P"):
        sample = tuple(int(a) for a in sample)
        if any(a < 0 for a in sample):
            raise ValueError("sample elements must be naturals")
        if len(set(sample)) != len(sample):
            raise ValueError("sample enumeration must be injective")
        if sample and kind == "P":
            kind = "Q"
        self.sample = sample
        self.kind = kind
        self._members = frozenset(sample)

    def member(self, s: str) -> bool:
        check_bits(s)
        shape = ones_zeros_split(s)
        if shape is None:
            return False
        n, m = shape
        stages = min(m, len(self.sample))
        return all(self.sample[i] != n for i in range(stages))

    def has_path_through(self, s: str) -> bool:
        if not self.member(s):
            return False
        n, m = ones_zeros_split(s)
        if m == 0:
            return True  # extends to the all-ones path
        return n not in self._members

    def leftmost_path(self, s: str) -> Optional[ECPath]:
        if not self.member(s):
            return None
        n, m = ones_zeros_split(s)
        if m > 0:
            return ones_path(n) if n not in self._members else None
        k = n
        while k in self._members:
            k += 1
        return ones_path(k)

    def rightmost_path(self, s: str) -> Optional[ECPath]:
        if not self.member(s):
            return None
        n, m = ones_zeros_split(s)
        if m == 0:
            return ALL_ONES
        return ones_path(n) if n not in self._members else None

    def complement_element(self, rank: int) -> int:
        """The rank-th natural (0-based) missing from the sample."""
        k = 0
        seen = 0
        while True:
            if k not in self._members:
                if seen == rank:
                    return k
                seen += 1
            k += 1

    def complement_rank(self, n: int) -> int:
        """Position of n within the complement of the sample."""
        if n in self._members:
            raise ValueError(f"{n} is in the sample, not its complement")
        return n - sum(1 for a in self._members if a < n)

    def spec_string(self) -> str:
        if self.kind == "P":
            return "P"
        return "Q: " + ",".join(str(a) for a in self.sample) if self.sample else "Q:"

    def __repr__(self):
        return f"OnesZerosTree(sample={self.sample})"


def make_p_tree() -> OnesZerosTree:
    """The unrestricted ones-then-zeros tree (path set of order type w+1)."""
    return OnesZerosTree((), kind="P")


def make_q_tree(enumeration: Sequence[int]) -> OnesZerosTree:
    """Ones-then-zeros tree with exclusions driven by a finite enumeration.

    Stages past the end of the sequence contribute nothing, so a finite list
    fully determines the tree.
    """
    return OnesZerosTree(enumeration, kind="Q")


class SampledTree(Tree):
    """Pseudorandom prefix-closed sample to a cutoff depth, full below.

    Nodes at depth <= cutoff are kept or dropped by a seeded coin (with the
    leftmost branch forced alive so the tree is never empty); every surviving
    cutoff node grows a complete subtree.  Deterministic in the seed; used for
    stress tests.
    """

    def __init__(self, seed: int, cutoff: int = 8, keep_thousandths: int = 700):
        import random

        self.seed = seed
        self.cutoff = cutoff
        rng = random.Random(seed)
        kept = {""}
        frontier = [""]
        for depth in range(cutoff):
            nxt = []
            for s in frontier:
                for b in "01":
                    child = s + b
                    if s == "0" * depth and b == "0":
                        keep = True  # forced spine
                    else:
                        keep = rng.randrange(1000) < keep_thousandths
                    if keep:
                        kept.add(child)
                        nxt.append(child)
            frontier = nxt
        self._kept = frozenset(kept)

    def member(self, s: str) -> bool:
        check_bits(s)
        return s[: self.cutoff] in self._kept if len(s) > self.cutoff \
            else s in self._kept

    def __repr__(self):
        return f"SampledTree(seed={self.seed}, cutoff={self.cutoff})"


# ---------------------------------------------------------------------------
# the coding c

THIRD = Fraction(1, 3)
TWO_THIRDS = Fraction(2, 3)


def cantor_endpoint(sigma: str, bit: int) -> Fraction:
    """Exact value of c at the path sigma followed by the constant bit.

    Ternary expansion 0.1 d1 d2 ... with d_{k+1} = 2 * sigma(k), then all
    digits 0 (bit 0) or all digits 2 (bit 1); the constant tail sums in
    closed form to 3**-(len(sigma)+1).
    """
    check_bits(sigma)
    if bit not in (0, 1):
        raise ValueError("bit must be 0 or 1")
    val = THIRD
    scale = Fraction(1, 9)
    for ch in sigma:
        if ch == "1":
            val += 2 * scale
        scale /= 3
    if bit == 1:
        val += Fraction(1, 3 ** (len(sigma) + 1))
    return val


def cantor_value(x: Path) -> Fraction:
    """Exact c-value of an eventually constant path."""
    if not isinstance(x, ECPath):
        raise ValueError("exact coding needs an eventually constant path")
    return cantor_endpoint(x.prefix, x.tail)


def cantor_encode(x: Path) -> RealCode:
    """Code of c(X).  Exact for eventually constant paths.

    For a general path the precision-p query reads just enough bits that the
    remaining ternary tail spread 3**-(k+1) drops below 2**-p and returns the
    midpoint of the bracketing interval.
    """
    if isinstance(x, ECPath):
        return RealCode.from_rational(cantor_value(x))

    def query(p: int) -> Fraction:
        k = 0
        spread = THIRD  # 3**-(k+1)
        eps = pow2(p) * 2
        while spread > eps:
            k += 1
            spread /= 3
        prefix = "".join(str(x.bit(i)) for i in range(k))
        lo = cantor_endpoint(prefix, 0)
        hi = cantor_endpoint(prefix, 1)
        return (lo + hi) / 2

    return RealCode(query)


class DecodedPath(LazyPath):
    """Path recovered bit-by-bit from a real code known to lie in the coded set.

    Bit k is decided by bracketing the value against the removed middle-third
    gap at depth k (width 3**-(k+2)); queries escalate up to ``max_precision``
    bits, then signal precision exhaustion.  If the approximations ever
    certify the value inside a removed gap or outside [1/3, 2/3], the value
    is not in the coded set and decoding fails.
    """

    def __init__(self, code: RealCode, max_precision: int = 256):
        self._code = code
        self._max_precision = max_precision
        # current bracketing interval endpoints as exact rationals
        self._state = [(THIRD, TWO_THIRDS)]
        super().__init__(self._decide)

    def _decide(self, k: int) -> int:
        lo, hi = self._state[-1]
        width = hi - lo
        gap_lo = lo + width / 3
        gap_hi = hi - width / 3
        # start where one query usually settles it: below a third of the gap
        p = 1
        while pow2(p) * 3 >= width / 3:
            p += 1
        while True:
            q = self._code.query(p)
            eps = pow2(p)
            if q - eps > gap_lo and q + eps < gap_hi:
                raise NotInCantorSetError(
                    f"value certified inside the removed gap at depth {k}")
            if q - eps > hi or q + eps < lo:
                raise NotInCantorSetError(
                    f"value certified outside the depth-{k} interval")
            if q + eps < gap_hi:
                self._state.append((lo, gap_lo))
                return 0
            if q - eps > gap_lo:
                self._state.append((gap_hi, hi))
                return 1
            if p >= self._max_precision:
                raise PrecisionExhaustedError(
                    f"bit {k} undecided at {p} bits (value too close to a gap endpoint)")
            p = min(p * 2, self._max_precision)


def _decode_exact(value: Fraction, max_bits: int) -> Path:
    """Decode an exact rational: digit extraction with tail detection."""
    if value < THIRD or value > TWO_THIRDS:
        raise NotInCantorSetError(f"{value} outside [1/3, 2/3]")
    t = value * 3 - 1  # residual in [0, 1]
    bits = []
    for _ in range(max_bits):
        if t == 0:
            return ECPath("".join(bits), 0)
        if t == 1:
            return ECPath("".join(bits), 1)
        t3 = t * 3
        if t3 <= 1:
            bits.append("0")
            t = t3  # digit 0; boundary t3 == 1 resolves as 0 then all-ones
        elif t3 >= 2:
            bits.append("1")
            t = t3 - 2
        else:
            raise NotInCantorSetError(
                f"ternary digit 1 at depth {len(bits)}: value in a removed gap")
    raise PrecisionExhaustedError(
        f"no constant tail within {max_bits} bits (periodic expansion)")


def coded_path_value(tree: Tree, q: Fraction, max_bits: int = 512) -> Optional[ECPath]:
    """The eventually constant tree path whose coded value is exactly q.

    Returns None when q is not such a value, when the path leaves the tree,
    or when the tree lacks the extremal-path capability to certify
    membership of the constant tail.
    """
    if q < THIRD or q > TWO_THIRDS:
        return None
    try:
        x = _decode_exact(q, max_bits)
    except (NotInCantorSetError, PrecisionExhaustedError):
        return None
    if not isinstance(x, ECPath):
        return None
    try:
        if not tree.member(x.prefix):
            return None
        # the constant-tail extension is extremal among paths through the
        # prefix, so membership of the whole path reduces to one walk
        if x.tail == 0:
            ext = tree.leftmost_path(x.prefix)
        else:
            ext = tree.rightmost_path(x.prefix)
    except UnsupportedTreeOperationError:
        return None
    return x if ext == x else None


def cantor_decode(r: RealCode, max_precision: int = 256) -> Path:
    """Inverse of the coding on its image.

    Exact rational codes decode eagerly (and produce an eventually constant
    path whenever one exists within the bit ceiling); other codes decode
    lazily, with per-bit certificates.  Raises NotInCantorSetError when the
    queries certify the value is outside the coded set, and
    PrecisionExhaustedError when a bit cannot be certified within the
    precision ceiling.
    """
    if r.exact is not None:
        return _decode_exact(r.exact, max_precision)
    return DecodedPath(r, max_precision)


# ---------------------------------------------------------------------------
# level structure

def level_intervals(tree: Tree, n: int) -> list[tuple[str, tuple[Fraction, Fraction]]]:
    """Members of length n with their coded intervals, sorted by position.

    The interval of sigma spans from c(sigma then zeros) to c(sigma then
    ones); lexicographic string order agrees with interval order.
    """
    out = []
    for s in tree.level_strings(n):
        out.append((s, (cantor_endpoint(s, 0), cantor_endpoint(s, 1))))
    return out


def complement_components(tree: Tree, n: int) -> list[tuple[Fraction, Fraction]]:
    """Maximal open components of (0,1) minus the level-n intervals, sorted.

    Distinct same-level intervals are separated by removed gaps, so the
    components always have positive width; with no level-n members the single
    component (0, 1) is returned.
    """
    if n < 1:
        raise ValueError("component structure starts at level 1")
    intervals = level_intervals(tree, n)
    if not intervals:
        return [(Fraction(0), Fraction(1))]
    comps = []
    prev = Fraction(0)
    for _, (lo, hi) in intervals:
        comps.append((prev, lo))
        prev = hi
    comps.append((prev, Fraction(1)))
    return comps


# ---------------------------------------------------------------------------
# text format

def parse_tree_spec(text: str) -> Tree:
    """Parse the one-line tree format: ``P`` or ``Q:`` with a sample prefix."""
    body = text.strip()
    if body == "P":
        return make_p_tree()
    if body.startswith("Q:"):
        rest = body[2:].strip()
        if not rest:
            return make_q_tree(())
        try:
            sample = [int(tok) for tok in rest.split(",")]
        except ValueError as exc:
            raise SpecParseError(f"bad sample list {rest!r}") from exc
        return make_q_tree(sample)
    if body.startswith("ORDER:"):
        raise SpecParseError(
            "order-encoded trees are built from order spec files, not inline")
    raise SpecParseError(f"unknown tree spec {body!r}")
