"""Base arithmetic for beta-expansions: the maps T_i(x) = beta*x - i, the
three branching regions of I_beta = [0, 1/(beta-1)], binary words, and the
numeric policy (plain floats vs exact quadratic-integer arithmetic).

Conventions used throughout the package:

* the switch region S = [1/beta, 1/(beta*(beta-1))] is closed at both ends
  (both digits keep the orbit inside I_beta there);
* the lower region [0, 1/beta) and upper region (1/(beta*(beta-1)), 1/(beta-1)]
  are half-open accordingly;
* in float mode a point counts as inside I_beta if it lies in
  [-tau, 1/(beta-1)+tau], guarding against rounding drift over deep words.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from typing import Iterable, Sequence, Union


class DomainError(ValueError):
    """Raised when a point lies outside the interval the operation needs."""


class DepthCapError(RuntimeError):
    """Raised when an enumeration depth exceeds the configured cap."""


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"interval endpoints out of order: {self.lo} > {self.hi}")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return self.lo - slack <= x <= self.hi + slack


class Region(IntEnum):
    LOWER = 0
    SWITCH = 1
    UPPER = 2


Rational = Union[int, Fraction]


class AlgebraicValue:
    """Element a + b*beta of the quadratic field Q(beta), beta^2 = p*beta + q.

    Coefficients are exact rationals so that orbits of rational starting
    points stay exactly representable.  Supports field arithmetic and exact
    order comparisons (beta is the larger root of x^2 - p*x - q).
    """

    __slots__ = ("a", "b", "p", "q")

    def __init__(self, a, b, p: int, q: int):
        self.a = Fraction(a)
        self.b = Fraction(b)
        self.p = p
        self.q = q

    def _coerce(self, other) -> "AlgebraicValue":
        if isinstance(other, AlgebraicValue):
            if (other.p, other.q) != (self.p, self.q):
                raise ValueError("mixing values from different quadratic fields")
            return other
        if isinstance(other, (int, Fraction)):
            return AlgebraicValue(other, 0, self.p, self.q)
        return NotImplemented

    @property
    def shadow(self) -> float:
        return float(self.a) + float(self.b) * _beta_root(self.p, self.q)

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return AlgebraicValue(self.a + o.a, self.b + o.b, self.p, self.q)

    __radd__ = __add__

    def __neg__(self):
        return AlgebraicValue(-self.a, -self.b, self.p, self.q)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        # (a1 + b1 B)(a2 + b2 B) with B^2 = p B + q
        a = self.a * o.a + self.q * self.b * o.b
        b = self.a * o.b + self.b * o.a + self.p * self.b * o.b
        return AlgebraicValue(a, b, self.p, self.q)

    __rmul__ = __mul__

    def inverse(self) -> "AlgebraicValue":
        # conjugate of beta is p - beta; norm of a + b*beta is rational
        norm = self.a * self.a + self.a * self.b * self.p - self.b * self.b * self.q
        if norm == 0:
            raise ZeroDivisionError("algebraic value has zero norm")
        return AlgebraicValue((self.a + self.b * self.p) / norm, -self.b / norm,
                              self.p, self.q)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return o * self.inverse()

    def _sign(self) -> int:
        """Exact sign of a + b*beta."""
        a, b = self.a, self.b
        if b == 0:
            return (a > 0) - (a < 0)
        # a + b*beta >= 0  <=>  beta >= -a/b (b > 0)  or  beta <= -a/b (b < 0)
        r = -a / b
        disc = self.p * self.p + 4 * self.q
        t = 2 * r - self.p  # beta >= r  <=>  sqrt(disc) >= t
        if b > 0:
            ge = t <= 0 or t * t <= disc
            gt = t < 0 or t * t < disc
        else:
            ge = t >= 0 and t * t >= disc
            gt = t > 0 and t * t > disc
        if gt:
            return 1
        if ge:
            return 0
        return -1

    def __eq__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self.a == o.a and self.b == o.b

    def __hash__(self):
        return hash((self.a, self.b, self.p, self.q))

    def __lt__(self, other):
        o = self._coerce(other)
        return (self - o)._sign() < 0

    def __le__(self, other):
        o = self._coerce(other)
        return (self - o)._sign() <= 0

    def __gt__(self, other):
        o = self._coerce(other)
        return (self - o)._sign() > 0

    def __ge__(self, other):
        o = self._coerce(other)
        return (self - o)._sign() >= 0

    def __float__(self):
        return self.shadow

    def __repr__(self):
        return f"AlgebraicValue({self.a}, {self.b}; x^2={self.p}x+{self.q})"


def _beta_root(p: int, q: int) -> float:
    return (p + math.sqrt(p * p + 4 * q)) / 2.0


@dataclass(frozen=True)
class BetaParam:
    """Base beta in (1,2) with its numeric policy.

    ``minpoly=(p, q)`` switches on exact mode: beta is the larger root of
    x^2 - p*x - q and orbit values are carried as AlgebraicValue.  Otherwise
    everything runs in floats with admissibility tolerance ``tau``.
    """

    beta: float
    tau: float = 1e-9
    minpoly: tuple[int, int] | None = None

    def __post_init__(self):
        if not (1.0 < self.beta < 2.0):
            raise ValueError(f"beta must lie in (1,2), got {self.beta}")
        if self.minpoly is not None:
            p, q = self.minpoly
            root = _beta_root(p, q)
            if abs(root - self.beta) > 1e-12:
                raise ValueError(
                    f"beta={self.beta} is not the stated root {root} of x^2-{p}x-{q}")

    @classmethod
    def golden(cls) -> "BetaParam":
        return cls((1.0 + math.sqrt(5.0)) / 2.0, minpoly=(1, 1))

    @classmethod
    def from_minpoly(cls, p: int, q: int) -> "BetaParam":
        return cls(_beta_root(p, q), minpoly=(p, q))

    @property
    def exact(self) -> bool:
        return self.minpoly is not None

    @property
    def right_endpoint(self) -> float:
        return 1.0 / (self.beta - 1.0)

    def beta_value(self) -> AlgebraicValue:
        p, q = self.minpoly
        return AlgebraicValue(0, 1, p, q)

    def lift(self, x):
        """Convert x to the value type of the active numeric mode.

        Exact mode accepts ints, Fractions and AlgebraicValues; floats are
        rejected there because they silently mean a different rational.
        """
        if not self.exact:
            if isinstance(x, AlgebraicValue):
                return x.shadow
            return float(x)
        if isinstance(x, AlgebraicValue):
            if (x.p, x.q) != self.minpoly:
                raise ValueError("value belongs to a different quadratic field")
            return x
        if isinstance(x, float):
            raise TypeError("exact mode needs int/Fraction/AlgebraicValue, not float")
        p, q = self.minpoly
        return AlgebraicValue(x, 0, p, q)

    def thresholds(self):
        """(1/beta, 1/(beta*(beta-1)), 1/(beta-1)) in the active mode."""
        if not self.exact:
            b = self.beta
            return 1.0 / b, 1.0 / (b * (b - 1.0)), 1.0 / (b - 1.0)
        bv = self.beta_value()
        one = AlgebraicValue(1, 0, *self.minpoly)
        inv_b = one / bv
        right = one / (bv - 1)
        return inv_b, inv_b * right, right


def apply_map(i: int, x, bp: BetaParam):
    """One inverse-branch step T_i(x) = beta*x - i."""
    if isinstance(x, AlgebraicValue):
        return x * bp.beta_value() - i
    return bp.beta * x - i


def apply_word(word: Sequence[int], x, bp: BetaParam):
    """Apply T along the word, first digit first."""
    for d in word:
        x = apply_map(d, x, bp)
    return x


def shift_word(word: Sequence[int]) -> tuple:
    if len(word) == 0:
        raise ValueError("empty word")
    return tuple(word[1:])


def bernoulli_cylinder_mass(word: Sequence[int]) -> float:
    """Fair-coin measure of the cylinder fixed by the word: 2^-len."""
    return 2.0 ** -len(word)


def regions(bp: BetaParam) -> tuple[Interval, Interval, Interval]:
    """(lower, switch, upper) partition of I_beta.

    Returned as plain float intervals; the switch region is closed at both
    ends, its neighbours half-open, see the module docstring.
    """
    b = bp.beta
    lo_hi = 1.0 / b
    sw_hi = 1.0 / (b * (b - 1.0))
    return (Interval(0.0, lo_hi), Interval(lo_hi, sw_hi),
            Interval(sw_hi, 1.0 / (b - 1.0)))


def normalized_switch_measure(bp: BetaParam) -> float:
    """Lebesgue measure of the switch region normalised to I_beta: 2/beta - 1."""
    return 2.0 / bp.beta - 1.0


class Branching:
    """Region classifier bound to one BetaParam.

    Built once per enumeration; holds the branch thresholds in the active
    numeric mode so per-node classification is a pair of comparisons.
    """

    def __init__(self, bp: BetaParam):
        self.bp = bp
        self.inv_beta, self.switch_hi, self.right = bp.thresholds()

    def classify(self, x) -> Region:
        if x < self.inv_beta:
            return Region.LOWER
        if x <= self.switch_hi:
            return Region.SWITCH
        return Region.UPPER

    def digits(self, x) -> tuple[int, ...]:
        r = self.classify(x)
        if r == Region.LOWER:
            return (0,)
        if r == Region.UPPER:
            return (1,)
        return (0, 1)

    def in_domain(self, x) -> bool:
        if isinstance(x, AlgebraicValue):
            return 0 <= x <= self.right
        return -self.bp.tau <= x <= float(self.right) + self.bp.tau


def require_in_domain(x, bp: BetaParam):
    """Raise DomainError unless x lies in I_beta (tau-slack in float mode)."""
    if not Branching(bp).in_domain(x):
        raise DomainError(f"x={x} outside [0, {bp.right_endpoint}]")
