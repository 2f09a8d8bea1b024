"""Exact rational arithmetic and queryable codes for reals and continuous maps.

A real number is represented by a query interface: asking at precision ``p``
yields a rational within ``2**-p`` of the represented value.  A continuous
self-map of the unit interval is represented by rational-point evaluation
together with a modulus of uniform continuity.  Nothing in this module ever
rounds silently; every approximation carries an explicit error bound.
"""

from __future__ import annotations

import threading
from enum import Enum
from fractions import Fraction
from typing import Callable, Optional

from .errors import OutOfDomainError

# The canonical exact rational.  Arbitrary precision, stored in lowest terms
# with positive denominator, which is exactly the invariant we need.
Rational = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


def pow2(p: int) -> Fraction:
    """Return 2**-p as an exact rational (p may be negative)."""
    if p >= 0:
        return Fraction(1, 1 << p)
    return Fraction(1 << (-p), 1)


def round_dyadic(x: Fraction, bits: int) -> Fraction:
    """Round x to the nearest multiple of 2**-bits (ties toward +inf).

    The result differs from x by at most 2**-(bits+1); used to keep
    denominators short in long computations.
    """
    scaled = x * (1 << bits)
    n = (scaled.numerator * 2 + scaled.denominator) // (2 * scaled.denominator)
    return Fraction(n, 1 << bits)


def format_rational(q: Fraction) -> str:
    """Serialize as ``num/den`` (always with the slash, even for integers)."""
    return f"{q.numerator}/{q.denominator}"


def parse_rational(text: str) -> Fraction:
    """Parse ``num/den`` or a plain integer string into an exact rational."""
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return Fraction(int(num), int(den))
    return Fraction(int(text))


class RealCode:
    """A queryable real number.

    ``query(p)`` returns a rational within ``2**-p`` of one fixed real.
    Queries are deterministic and memoized, so repeated queries at the same
    precision return the identical rational.  Instances are immutable after
    construction and safe for concurrent use; the memo is lock-protected.

    ``exact`` is set when the represented value is a known rational, which
    lets downstream code (decoding, conjugacy synthesis) take exact paths.
    """

    __slots__ = ("_fn", "exact", "_memo", "_lock")

    def __init__(self, fn: Callable[[int], Fraction], exact: Optional[Fraction] = None):
        self._fn = fn
        self.exact = exact
        self._memo: dict[int, Fraction] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_rational(cls, q: Fraction) -> "RealCode":
        q = Fraction(q)
        return cls(lambda p: q, exact=q)

    def query(self, p: int) -> Fraction:
        if p < 0:
            raise ValueError("precision must be a natural number")
        if self.exact is not None:
            return self.exact
        with self._lock:
            got = self._memo.get(p)
        if got is not None:
            return got
        val = self._fn(p)
        with self._lock:
            # first writer wins; queries are deterministic so both agree
            got = self._memo.setdefault(p, val)
        return got

    def __repr__(self):
        if self.exact is not None:
            return f"RealCode(exact={format_rational(self.exact)})"
        return "RealCode(<query>)"


def approx(r: RealCode, p: int) -> Fraction:
    """Rational approximation of r accurate to within 2**-p."""
    return r.query(p)


class Separation(Enum):
    LESS = "less"
    GREATER = "greater"
    INDISTINGUISHABLE = "indistinguishable"


def separate(r1: RealCode, r2: RealCode, p: int) -> Separation:
    """Compare two real codes at resolution p.

    Strict verdicts are ground truth.  INDISTINGUISHABLE guarantees
    |r1 - r2| <= 2**-(p-2), i.e. the values are within four ulps at this
    resolution.  Real equality is undecidable, so no exact-equality verdict
    exists.
    """
    eps = pow2(p)
    q1 = r1.query(p)
    q2 = r2.query(p)
    if q1 + eps < q2 - eps:
        return Separation.LESS
    if q2 + eps < q1 - eps:
        return Separation.GREATER
    return Separation.INDISTINGUISHABLE


class FunctionCode:
    """A continuous self-map of [0, 1] given by rational evaluation plus a
    modulus of uniform continuity.

    ``rational_eval(q)`` returns a code for the value at the rational q, and
    ``modulus(m)`` returns d with |f(x) - f(y)| < 2**-m whenever
    |x - y| < 2**-d.  ``real_eval`` composes the two to evaluate at an
    arbitrary real code; subclasses may override it with a faster direct
    route as long as the accuracy contract is kept.
    """

    def rational_eval(self, q: Fraction) -> RealCode:
        raise NotImplementedError

    def modulus(self, m: int) -> int:
        raise NotImplementedError

    def real_eval(self, x: RealCode) -> RealCode:
        if x.exact is not None:
            exact_in = x.exact
            if exact_in < 0 or exact_in > 1:
                raise OutOfDomainError(f"{format_rational(exact_in)} outside [0,1]")
            return self.rational_eval(exact_in)

        def query(p: int) -> Fraction:
            prec_x = self.modulus(p + 1) + 1
            q = x.query(prec_x)
            eps = pow2(prec_x)
            if q - eps > 1 or q + eps < 0:
                raise OutOfDomainError("input certified outside [0,1]")
            q = min(ONE, max(ZERO, q))
            # |q - x| <= 2**-prec_x < 2**-modulus(p+1), so the evaluation at q
            # is within 2**-(p+1) of the true value; querying that code at
            # p+1 gives total error <= 2**-p.
            return self.rational_eval(q).query(p + 1)

        return RealCode(query)


def eval_fn(fc: FunctionCode, x: RealCode) -> RealCode:
    """Evaluate a function code at a real code.

    Dispatches to the code's own ``real_eval`` so structured implementations
    can use direct routes; the generic route queries the argument at
    ``modulus(p+1)+1`` and the pointwise code at ``p+1``, giving total error
    at most ``2**-p``.
    """
    return fc.real_eval(x)


class ExactMapCode(FunctionCode):
    """Function code backed by an exact rational map with known stretch.

    ``lipschitz_log2`` is an integer L with |f(x)-f(y)| <= 2**L * |x-y|;
    the modulus is then m -> m + max(L, 0).
    """

    def __init__(self, fn: Callable[[Fraction], Fraction], lipschitz_log2: int = 0,
                 name: str = "map"):
        self._fn = fn
        self._lip = max(lipschitz_log2, 0)
        self.name = name

    def rational_eval(self, q: Fraction) -> RealCode:
        return RealCode.from_rational(self._fn(q))

    def modulus(self, m: int) -> int:
        return m + self._lip

    def __repr__(self):
        return f"ExactMapCode({self.name})"


def identity_code() -> ExactMapCode:
    return ExactMapCode(lambda q: q, 0, name="identity")


def reflection_code() -> ExactMapCode:
    """The order-reversing map x -> 1 - x (useful as a negative control)."""
    return ExactMapCode(lambda q: 1 - q, 0, name="reflection")
