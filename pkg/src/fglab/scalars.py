"""Exact scalar arithmetic: p-local rationals, prime fields, truncated u-series.

Three coefficient domains underpin everything else here:

* p-local rationals.  Represented by :class:`fractions.Fraction`, which already
  maintains the invariants we need (always reduced, positive denominator,
  arbitrary precision).  p-locality is a *certificate* checked at the moment a
  rational is reduced mod p, never assumed.

* the prime field F_p, as :class:`FpElement` values tied to a validated prime,

* F_p[[u]] / (u^M): truncated power series in one variable u over F_p, as
  :class:`USeries`.  The coefficient list has fixed length M and every stated
  identity on these values is an identity modulo u^M.

All values are immutable after construction and all operations are pure, so
values can be shared freely between threads or workers.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import InexactDivision, NotPIntegral, PrecisionMismatch

# Desk scale: small primes keep the distinguished degree p^(n+1) - p^n small.
MAX_PRIME = 17

RationalLike = Fraction | int


def validate_prime(p: int) -> int:
    """Check that p is a prime <= MAX_PRIME, by trial division."""
    if not isinstance(p, int) or p < 2:
        raise ValueError(f"p must be an integer >= 2, got {p!r}")
    if p > MAX_PRIME:
        raise ValueError(f"p={p} exceeds the desk-scale bound {MAX_PRIME}")
    for q in range(2, p):
        if q * q > p:
            break
        if p % q == 0:
            raise ValueError(f"p={p} is not prime (divisible by {q})")
    return p


def p_valuation(value: RationalLike, p: int) -> int | None:
    """p-adic valuation of an exact rational; None for 0."""
    q = Fraction(value)
    if q == 0:
        return None
    v = 0
    num, den = q.numerator, q.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def is_p_integral(value: RationalLike, p: int) -> bool:
    return Fraction(value).denominator % p != 0


def reduce_mod_p(value: RationalLike, p: int) -> "FpElement":
    """Reduce a p-integral rational mod p: numerator * denominator^(-1) mod p.

    Raises NotPIntegral when p divides the denominator; that always signals a
    failed integrality certification upstream, e.g. a wrongly constructed
    formal group law, and must not be masked.
    """
    q = Fraction(value)
    if q.denominator % p == 0:
        raise NotPIntegral(f"{q} is not p-integral at p={p}")
    residue = q.numerator * pow(q.denominator, -1, p) % p
    return FpElement(residue, p)


class FpElement:
    """An element of F_p, stored as the canonical residue in [0, p)."""

    __slots__ = ("residue", "p")

    def __init__(self, residue: int, p: int):
        self.residue = residue % p
        self.p = p

    def _coerce(self, other) -> "FpElement":
        if isinstance(other, FpElement):
            if other.p != self.p:
                raise ValueError(f"mixed moduli {self.p} and {other.p}")
            return other
        if isinstance(other, int):
            return FpElement(other, self.p)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return FpElement(self.residue + other.residue, self.p)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return FpElement(self.residue - other.residue, self.p)

    def __rsub__(self, other):
        other = self._coerce(other)
        return other - self

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return FpElement(self.residue * other.residue, self.p)

    __rmul__ = __mul__

    def __neg__(self):
        return FpElement(-self.residue, self.p)

    def __pow__(self, e: int):
        return FpElement(pow(self.residue, e, self.p), self.p)

    def inverse(self) -> "FpElement":
        if self.residue == 0:
            raise ZeroDivisionError(f"0 has no inverse mod {self.p}")
        return FpElement(pow(self.residue, -1, self.p), self.p)

    def __eq__(self, other):
        if isinstance(other, FpElement):
            return self.p == other.p and self.residue == other.residue
        if isinstance(other, int):
            return self.residue == other % self.p
        return NotImplemented

    def __hash__(self):
        return hash((self.residue, self.p))

    def __bool__(self):
        return self.residue != 0

    def __repr__(self):
        return f"FpElement({self.residue}, p={self.p})"

    def __str__(self):
        return str(self.residue)


class PrimeField:
    """The field F_p; hands out elements and validates p once."""

    __slots__ = ("p", "zero", "one")

    def __init__(self, p: int):
        self.p = validate_prime(p)
        self.zero = FpElement(0, p)
        self.one = FpElement(1, p)

    def from_int(self, k: int) -> FpElement:
        return FpElement(k, self.p)

    def elements(self):
        return [FpElement(r, self.p) for r in range(self.p)]

    def __eq__(self, other):
        return isinstance(other, PrimeField) and other.p == self.p

    def __hash__(self):
        return hash(("PrimeField", self.p))

    def __repr__(self):
        return f"PrimeField({self.p})"


class USeries:
    """Element of F_p[[u]]/(u^M): Sum c_t u^t with t < M = precision.

    The weight (u-valuation) of a nonzero value is the least t with c_t != 0.
    Arithmetic requires equal precision on both operands; anything else is a
    caller bug and raises PrecisionMismatch.
    """

    __slots__ = ("p", "coeffs")

    def __init__(self, p: int, coeffs):
        self.p = p
        self.coeffs = tuple(c % p for c in coeffs)

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, p: int, precision: int) -> "USeries":
        return cls(p, (0,) * precision)

    @classmethod
    def one(cls, p: int, precision: int) -> "USeries":
        return cls(p, (1,) + (0,) * (precision - 1))

    @classmethod
    def monomial(cls, p: int, precision: int, t: int, c: int = 1) -> "USeries":
        if not 0 <= t < precision:
            return cls.zero(p, precision)
        coeffs = [0] * precision
        coeffs[t] = c
        return cls(p, coeffs)

    @classmethod
    def from_coeffs(cls, p: int, precision: int, coeffs) -> "USeries":
        cs = list(coeffs)[:precision]
        cs += [0] * (precision - len(cs))
        return cls(p, cs)

    # -- structure ---------------------------------------------------------

    @property
    def precision(self) -> int:
        return len(self.coeffs)

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def is_unit(self) -> bool:
        return self.coeffs[0] != 0

    def weight(self) -> int | None:
        """u-valuation; None when zero up to precision."""
        for t, c in enumerate(self.coeffs):
            if c:
                return t
        return None

    def _check(self, other: "USeries"):
        if self.p != other.p:
            raise ValueError(f"mixed primes {self.p} and {other.p}")
        if self.precision != other.precision:
            raise PrecisionMismatch(
                f"precision {self.precision} vs {other.precision}"
            )

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other: "USeries") -> "USeries":
        self._check(other)
        return USeries(self.p, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other: "USeries") -> "USeries":
        self._check(other)
        return USeries(self.p, [a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __neg__(self) -> "USeries":
        return USeries(self.p, [-a for a in self.coeffs])

    def __mul__(self, other: "USeries") -> "USeries":
        self._check(other)
        M = self.precision
        # Exact: entries < p^2 * M stay far below 2^63.
        full = np.convolve(
            np.array(self.coeffs, dtype=np.int64),
            np.array(other.coeffs, dtype=np.int64),
        )
        return USeries(self.p, (full[:M] % self.p).tolist())

    def __pow__(self, e: int) -> "USeries":
        if e < 0:
            raise ValueError("negative powers not supported; invert first")
        result = USeries.one(self.p, self.precision)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def scale(self, c: int) -> "USeries":
        return USeries(self.p, [c * a for a in self.coeffs])

    def shift(self, t: int) -> "USeries":
        """Multiply by u^t (truncating)."""
        if t == 0:
            return self
        M = self.precision
        return USeries(self.p, (0,) * t + self.coeffs[: M - t])

    def divide_by_u(self, t: int = 1) -> "USeries":
        """Exact division by u^t.  The quotient's top t coefficients are not
        determined by this value and are set to 0; callers must account for
        the lost precision."""
        if any(self.coeffs[:t]):
            raise InexactDivision(
                f"u^{t} does not divide {self.render()} (precision {self.precision})"
            )
        return USeries(self.p, self.coeffs[t:] + (0,) * t)

    def inverse(self) -> "USeries":
        """Multiplicative inverse of a unit, by the standard recurrence."""
        if not self.is_unit():
            raise ZeroDivisionError("constant term is zero; not a unit")
        p, M = self.p, self.precision
        c0_inv = pow(self.coeffs[0], -1, p)
        out = [0] * M
        out[0] = c0_inv
        for t in range(1, M):
            acc = sum(self.coeffs[k] * out[t - k] for k in range(1, t + 1))
            out[t] = (-acc * c0_inv) % p
        return USeries(p, out)

    # -- comparison / rendering -------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, USeries):
            return NotImplemented
        return (
            self.p == other.p
            and self.precision == other.precision
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        return hash((self.p, self.coeffs))

    def __bool__(self):
        return not self.is_zero()

    def __repr__(self):
        return f"USeries(p={self.p}, {self.render()})"

    def render(self) -> str:
        """Canonical text form, lowest exponent first, e.g. ``1 + 2*u^3``."""
        parts = []
        for t, c in enumerate(self.coeffs):
            if not c:
                continue
            if t == 0:
                parts.append(str(c))
            elif t == 1:
                parts.append("u" if c == 1 else f"{c}*u")
            else:
                parts.append(f"u^{t}" if c == 1 else f"{c}*u^{t}")
        return " + ".join(parts) if parts else "0"


def useries_arith(lhs: USeries, rhs: USeries, kind: str) -> USeries:
    """Dispatching form of u-series arithmetic: kind in {'add', 'mul'}."""
    if kind == "add":
        return lhs + rhs
    if kind == "mul":
        return lhs * rhs
    raise ValueError(f"unknown kind {kind!r}")
