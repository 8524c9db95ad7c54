"""The norm coordinate and the quotient p-series over the valuation ring.

Over R = F_p[[u]][a]/g(a), the p-series of the quotient law is pinned down by
one identity in R[[x]]:

    prod_{k=0}^{p-1} ([p](x) -_F [k](a))  =  Q( prod_{k=0}^{p-1} (x -_F [k](a)) )

for a unique series Q(y) over Frac(R).  The right-hand product is the norm
coordinate f(x); its linear coefficient is the product of the [-k](a), a
valuation-(p-1) element equal to +/- Psi, so f only reverts over the fraction
field.  Q is recovered as (left product) composed with the reversion of f,
every coefficient is certified to lie in R (denominator-free after
normalization), and the defining identity is re-checked by back-substitution.

Both factors x -_F [k](a) and [p](x) -_F [k](a) are evaluations of the
addition-law slab F(x, y) at y = [-k](a): translation by a ring element never
needs the full two-variable law at large degree, just the slab rows.

From Q:

* the y^(p^i) coefficients for i < n must vanish in R (checked, and required
  before the next extraction is meaningful), as must every other coefficient
  below y^(p^n);
* the y^(p^n) coefficient is the image of u_n under the reduced power
  operation.  A second, independent route computes the same element by exact
  division: it is the unique r with r * Psi^(p^n - 1) = u_n.  The two routes
  must agree bit-for-bit up to the precision horizon, and the sign epsilon in
  (u_n image) * Psi^(p^n) = epsilon * u_n * Psi is determined empirically
  rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    IntegralityFailure,
    NeitherSignHolds,
    PrecisionExhausted,
    PrerequisiteVanishingFailed,
    ResidualMismatch,
)
from .dvr import DvrElement, DvrRing
from .scalars import USeries
from .series import MultiSeries


class FracElement:
    """num * a^(-shift) over R; normalized so shift = 0 or val(num) = 0."""

    __slots__ = ("num", "shift")

    def __init__(self, num: DvrElement, shift: int = 0, normalize: bool = True):
        if normalize and shift > 0:
            if num.is_zero():
                shift = 0
            while shift > 0:
                v = num.valuation()
                if v is None or v < 1:
                    break
                num = num.divide_by_a()
                shift -= 1
        self.num = num
        self.shift = shift

    @property
    def is_integral(self) -> bool:
        return self.shift == 0

    def _align(self, other: "FracElement"):
        s = max(self.shift, other.shift)
        ring = self.num.ring
        a = ring.a()
        n1, n2 = self.num, other.num
        if s > self.shift:
            n1 = n1 * a ** (s - self.shift)
        if s > other.shift:
            n2 = n2 * a ** (s - other.shift)
        return n1, n2, s

    def __add__(self, other: "FracElement") -> "FracElement":
        n1, n2, s = self._align(other)
        return FracElement(n1 + n2, s)

    def __sub__(self, other: "FracElement") -> "FracElement":
        n1, n2, s = self._align(other)
        return FracElement(n1 - n2, s)

    def __neg__(self) -> "FracElement":
        return FracElement(-self.num, self.shift, normalize=False)

    def __mul__(self, other: "FracElement") -> "FracElement":
        return FracElement(self.num * other.num, self.shift + other.shift)

    def __eq__(self, other):
        if not isinstance(other, FracElement):
            return NotImplemented
        n1, n2, _ = self._align(other)
        return (n1 - n2).is_zero()

    def __hash__(self):
        return hash((self.num, self.shift))

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def valuation_value(self):
        v = self.num.valuation()
        return None if v is None else v - self.shift

    def as_dvr(self) -> DvrElement:
        if self.shift:
            raise IntegralityFailure(
                f"element has residual pole a^-{self.shift}; not in R"
            )
        return self.num

    def render(self) -> str:
        body = self.num.render()
        return body if not self.shift else f"({body})/a^{self.shift}"

    def __repr__(self):
        return f"FracElement({self.render()})"


class FracRing:
    """Scalar adapter for Frac(R), with a-power denominators only."""

    def __init__(self, dvr: DvrRing):
        self.dvr = dvr
        self.zero = FracElement(dvr.zero(), 0, normalize=False)
        self.one = FracElement(dvr.one(), 0, normalize=False)

    def from_int(self, k: int) -> FracElement:
        return FracElement(self.dvr.from_int(k), 0, normalize=False)

    def embed(self, e: DvrElement) -> FracElement:
        return FracElement(e, 0, normalize=False)

    @staticmethod
    def is_zero(c: FracElement) -> bool:
        return c.is_zero()

    def inv(self, c: FracElement) -> FracElement:
        unit, v = c.num.unit_part()
        inv = unit.unit_inverse()
        if c.shift >= v:
            return FracElement(inv * self.dvr.a() ** (c.shift - v), 0, normalize=False)
        return FracElement(inv, v - c.shift, normalize=False)

    def __eq__(self, other):
        return isinstance(other, FracRing) and other.dvr == self.dvr

    def __hash__(self):
        return hash(("FracRing", self.dvr))

    def __repr__(self):
        return f"FracRing({self.dvr!r})"


# ---------------------------------------------------------------------------
# Slab evaluation: x +_F c as an x-series over R.


def slab_row_tables(slab: dict, x_cap: int) -> list[dict]:
    """Per-x-degree tables: row[i] maps y-degree j to the u-poly {t: residue}."""
    rows = [dict() for _ in range(x_cap + 1)]
    for (t, j, i), r in slab.items():
        if i <= x_cap:
            rows[i].setdefault(j, {})[t] = r
    return rows


def translate_series(
    ring: DvrRing, rows: list[dict], c: DvrElement, x_cap: int
) -> list[DvrElement]:
    """Coefficients of x +_F c: entry i is sum_j F_row[i][j] * c^j in R."""
    p, d, M = ring.p, ring.d, ring.precision
    jmax = 0
    for row in rows:
        if row:
            jmax = max(jmax, max(row))
    powers = [ring.one()]
    for j in range(1, jmax + 1):
        nxt = powers[-1] * c
        powers.append(nxt)
        if nxt.is_zero():
            # Higher powers stay zero at this resolution; reuse it.
            powers.extend([nxt] * (jmax - j))
            break
    out = []
    for i in range(x_cap + 1):
        acc = np.zeros((d, M), dtype=np.int64)
        prec = ring.prec_cap
        for j, upoly in rows[i].items():
            cj = powers[j]
            prec = min(prec, cj.prec)
            for t, r in upoly.items():
                if t >= M:
                    continue
                for ii in range(d):
                    cs = cj.coeffs[ii].coeffs
                    if t == 0:
                        acc[ii] += np.array(cs, dtype=np.int64) * r
                    else:
                        acc[ii, t:] += np.array(cs[: M - t], dtype=np.int64) * r
            acc %= p
        coeffs = tuple(USeries(p, acc[ii].tolist()) for ii in range(d))
        out.append(DvrElement(ring, coeffs, prec=prec))
    return out


def _xseries_mul(ring: DvrRing, A: list, B: list, x_cap: int) -> list:
    out = [ring.zero() for _ in range(x_cap + 1)]
    for i, ai in enumerate(A):
        if ai.is_zero():
            continue
        for j, bj in enumerate(B):
            if i + j > x_cap:
                break
            if bj.is_zero():
                continue
            out[i + j] = out[i + j] + ai * bj
    return out


@dataclass
class QuotientPSeries:
    """The quotient p-series Q(y): coefficients over Frac(R), certified to be
    integral (shift 0) coefficient by coefficient."""

    coefficients: list  # FracElement, index = y-degree, entry 0 is zero
    integral: list  # bool per coefficient

    def dvr_coefficient(self, j: int) -> DvrElement:
        return self.coefficients[j].as_dvr()


@dataclass
class NormData:
    """Everything the identity pins down, plus the checks' raw defects."""

    ring: DvrRing
    x_cap: int
    f_coeffs: list  # norm coordinate coefficients, index = x-degree
    lhs_coeffs: list  # left product coefficients
    quotient: QuotientPSeries
    residual_defects: list  # (valuation, precision) of the defect per x-degree


def norm_coordinate(ring: DvrRing, slab_rows: list, series_a: dict, x_cap: int) -> list:
    """f(x) = prod_{k=0}^{p-1} (x -_F [k](a)) as x-series coefficients over R.

    The k = 0 factor is x itself; each factor for k >= 1 is the slab
    evaluated at the inverse multiple [-k](a)."""
    p = ring.p
    prod = [ring.one()]
    for k in range(1, p):
        ck = ring.from_rows(series_a[-k])
        factor = translate_series(ring, slab_rows, ck, x_cap)
        prod = _xseries_mul(ring, prod, factor, x_cap) if k > 1 else factor
    out = [ring.zero()] + prod[:x_cap]
    return out


def p_series_x_over_ring(ring: DvrRing, p_series_x: dict, x_cap: int) -> list:
    """[p](x) as an x-series with coefficients in F_p[[u]] inside R."""
    coeffs = [ring.zero() for _ in range(x_cap + 1)]
    M = ring.precision
    for (t, deg), r in p_series_x.items():
        if deg <= x_cap and t < M:
            coeffs[deg] = coeffs[deg] + ring.monomial(t, 0, r)
    return coeffs


def quotient_p_series(
    ring: DvrRing,
    slab_rows: list,
    series_a: dict,
    p_series_x: dict,
    x_cap: int,
) -> NormData:
    """Solve the defining identity for Q and certify its coefficients.

    Raises ResidualMismatch when back-substitution leaves a defect that is
    visibly nonzero at the working precision."""
    p = ring.p
    f = norm_coordinate(ring, slab_rows, series_a, x_cap)

    # Left-hand product: each factor [p](x) -_F [k](a) is the slab at [-k](a)
    # composed with the x-series [p](x).
    P = p_series_x_over_ring(ring, p_series_x, x_cap)
    lhs = P
    for k in range(1, p):
        ck = ring.from_rows(series_a[-k])
        phi = translate_series(ring, slab_rows, ck, x_cap)
        factor = [phi[0]] + [ring.zero()] * x_cap
        cur = [ring.one()]
        for i in range(1, len(phi)):
            cur = _xseries_mul(ring, cur, P, x_cap)
            if all(e.is_zero() for e in cur):
                break
            if phi[i].is_zero():
                continue
            for deg, e in enumerate(cur):
                if not e.is_zero():
                    factor[deg] = factor[deg] + e * phi[i]
        lhs = _xseries_mul(ring, lhs, factor, x_cap)

    # Reversion of f over Frac(R) and composition.
    frac = FracRing(ring)
    fx = MultiSeries(
        frac,
        ("x",),
        x_cap,
        None,
        {(i,): frac.embed(c) for i, c in enumerate(f) if not c.is_zero()},
    )
    rev = fx.reversion()
    lhs_ms = MultiSeries(
        frac,
        ("x",),
        x_cap,
        None,
        {(i,): frac.embed(c) for i, c in enumerate(lhs) if not c.is_zero()},
    )
    q_ms = lhs_ms.compose({"x": rev})

    coefficients = [frac.zero]
    integral = [True]
    for j in range(1, x_cap + 1):
        c = q_ms.terms.get((j,), frac.zero)
        c = FracElement(c.num, c.shift)  # re-normalize
        coefficients.append(c)
        integral.append(c.is_integral)
    quotient = QuotientPSeries(coefficients=coefficients, integral=integral)
    if not all(integral):
        bad = [j for j, ok in enumerate(integral) if not ok]
        starved = [
            j
            for j in bad
            if coefficients[j].num.prec <= 0
            or (lambda v, pr: v is None or v >= pr)(
                coefficients[j].num.valuation(), coefficients[j].num.prec
            )
        ]
        if starved == bad:
            raise PrecisionExhausted(
                f"cannot certify integrality of the quotient p-series at "
                f"y-degrees {bad}: the u-precision is too small for this "
                "configuration (raise --u-prec)"
            )
        raise IntegralityFailure(
            f"quotient p-series coefficients at y-degrees {bad} have residual poles"
        )

    # Back-substitute: Q(f(x)) must reproduce the left product.
    q_dvr = [c.as_dvr() for c in coefficients]
    back = [ring.zero() for _ in range(x_cap + 1)]
    cur = [ring.one()]
    for j in range(1, x_cap + 1):
        cur = _xseries_mul(ring, cur, f, x_cap)
        if q_dvr[j].is_zero():
            continue
        for deg, e in enumerate(cur):
            if e.is_zero():
                continue
            back[deg] = back[deg] + e * q_dvr[j]
    residual_defects = []
    for deg in range(x_cap + 1):
        delta = back[deg] - lhs[deg]
        v = delta.valuation()
        residual_defects.append((v, delta.prec))
        if v is not None and v < delta.prec:
            raise ResidualMismatch(
                f"back-substitution defect at x^{deg}: valuation {v} "
                f"below precision {delta.prec}"
            )
    return NormData(
        ring=ring,
        x_cap=x_cap,
        f_coeffs=f,
        lhs_coeffs=lhs,
        quotient=quotient,
        residual_defects=residual_defects,
    )


def extract_un_image(data: NormData, n: int) -> DvrElement:
    """The y^(p^n) coefficient of Q, after checking that every lower
    coefficient vanishes (in particular the y^(p^i), i < n, in order)."""
    ring = data.ring
    p = ring.p
    failures = []
    for j in range(1, p**n):
        c = data.quotient.coefficients[j]
        if not c.is_zero():
            failures.append((j, c.render()))
    if failures:
        raise PrerequisiteVanishingFailed(
            f"coefficients below y^{p**n} do not vanish: {failures[:4]}"
        )
    return data.quotient.dvr_coefficient(p**n)


def un_image_by_division(psi: DvrElement, n: int) -> DvrElement:
    """The unique r with r * Psi^(p^n - 1) = u_n, by exact division in R."""
    ring = psi.ring
    denom = psi ** (ring.p**n - 1)
    return ring.un().divide_exact(denom)


def equal_within_prec(x: DvrElement, y: DvrElement) -> tuple[bool, int]:
    """Compare two elements up to the coarser precision; returns (equal, prec)."""
    delta = x - y
    prec = delta.prec
    v = delta.valuation()
    return (v is None or v >= prec), prec


def sign_check(un_image: DvrElement, psi: DvrElement, n: int) -> int:
    """epsilon with un_image * Psi^(p^n) = epsilon * u_n * Psi; raises
    NeitherSignHolds when no sign satisfies the identity."""
    ring = psi.ring
    lhs = un_image * psi ** (ring.p**n)
    rhs = ring.un() * psi
    plus, _ = equal_within_prec(lhs, rhs)
    minus, _ = equal_within_prec(lhs, -rhs)
    if plus:
        return 1
    if minus:
        return -1
    raise NeitherSignHolds(
        f"neither sign matches: lhs val {lhs.valuation()}, rhs val {rhs.valuation()}"
    )
