"""Weierstrass preparation of the reduced p-series and the valuation ring it cuts out.

In F_p[[u, a]] (u = u_n after killing p and the lower u's), the p-series
factors as

    [p](a) = U * a^(p^n) * g(a)

with U a unit and g monic of degree d = p^(n+1) - p^n, Eisenstein at (u):
lower coefficients divisible by u, constant term divisible by u but not u^2,
and g = a^d mod u.  The quotient R = F_p[[u]][a]/g(a) is then a discrete
valuation ring with maximal ideal (a); since representatives keep a-degree
i < d, the valuation of a monomial u^t a^i is t*d + i and (t, i) -> t*d + i
is injective, so valuations are read off directly.

Preparation is by u-adic successive approximation: writing h = [p](a)/a^(p^n)
and solving h = g * W level by level in powers of u.  At level m the linear
problem splits as g_m * vbar + a^d * W_m = known, with vbar the level-zero
unit part, so g_m is the low part of vbar^(-1) * known and W_m the rest.
Exactly ``levels`` refinement rounds are run.  The input rows must be deep
enough in the (t*d + i)-triangle to support the requested levels: the level-m
slice of g needs h up to degree about (m+2)*d, which is why the big-series
stage works to a-degree (M+2)*d + p^n.

Precision semantics are explicit everywhere: a DvrElement carries ``prec``,
the valuation below which its coefficients are exact; elements whose
valuation reaches ``prec`` are indistinguishable from zero and operations
that would need to distinguish them raise PrecisionExhausted rather than
guessing.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    InexactDivision,
    NotPreparable,
    PrecisionExhausted,
    PrecisionMismatch,
)
from .fgl import FormalGroupLaw
from .scalars import USeries, reduce_mod_p
from .series import MultiSeries, PrimeFieldRing


# ---------------------------------------------------------------------------
# Small-cap reductions of the exact-rational law; the deep computation
# uses bigseries data instead.


def reduce_to_un(F: FormalGroupLaw) -> MultiSeries:
    """The addition law with u_1..u_{n-1} set to 0 and coefficients mod p;
    variables (x, y, un)."""
    kill = [f"u{j}" for j in range(1, F.config.n)]
    return F.reduced_addition.substitute_zero(kill)


def reduced_p_series(F: FormalGroupLaw) -> MultiSeries:
    """[p](x) mod (p, u_1..u_{n-1}); variables (x, un)."""
    from .fgl import i_series

    ser = i_series(F, F.config.p)
    red = ser.map_coefficients(
        lambda c: reduce_mod_p(c, F.config.p), PrimeFieldRing(F.config.p)
    )
    return red.substitute_zero([f"u{j}" for j in range(1, F.config.n)])


def rows_from_reduced_series(ms: MultiSeries, formal_var: str = "x") -> dict:
    """Convert a reduced univariate series (formal_var, un) to (t, deg) rows."""
    vi = ms.variables.index(formal_var)
    others = [i for i, v in enumerate(ms.variables) if i != vi]
    if len(others) > 1:
        raise ValueError("expected a univariate series over one u-variable")
    out = {}
    for e, c in ms.terms.items():
        t = e[others[0]] if others else 0
        out[(t, e[vi])] = c.residue
    return out


# ---------------------------------------------------------------------------
# Distinguished polynomials and the Weierstrass factorization.


@dataclass(frozen=True)
class DistinguishedPoly:
    """Monic degree-d polynomial over F_p[[u]], Eisenstein at (u).

    ``coefficients[i]`` is the USeries coefficient of a^i, i = 0..d, with
    coefficients[d] = 1.  ``levels`` records how many u-levels of the lower
    coefficients were actually solved for (the USeries precision equals the
    ring precision; levels <= that precision).
    """

    p: int
    degree: int
    coefficients: tuple
    levels: int

    def __post_init__(self):
        d = self.degree
        if len(self.coefficients) != d + 1:
            raise NotPreparable("coefficient list has wrong length")
        top = self.coefficients[d]
        if top != USeries.one(self.p, top.precision):
            raise NotPreparable("not monic")
        for i in range(d):
            w = self.coefficients[i].weight()
            if w is not None and w < 1:
                raise NotPreparable(f"coefficient of a^{i} is a unit; not distinguished")
        w0 = self.coefficients[0].weight()
        if w0 != 1:
            raise NotPreparable(
                f"constant term has u-valuation {w0}, expected exactly 1"
            )

    @property
    def precision(self) -> int:
        return self.coefficients[0].precision

    def render(self) -> str:
        parts = [f"a^{self.degree}"]
        for i in range(self.degree - 1, -1, -1):
            c = self.coefficients[i]
            if not c.is_zero():
                mono = f"a^{i}" if i > 1 else ("a" if i == 1 else "")
                parts.append(f"({c.render()})" + ("*" + mono if mono else ""))
        return " + ".join(parts)


def eisenstein_check(g: DistinguishedPoly) -> bool:
    """True iff all lower coefficients lie in (u) and the constant term is in
    (u) but not (u^2) - the irreducibility certificate."""
    for i in range(g.degree):
        w = g.coefficients[i].weight()
        if w is not None and w < 1:
            return False
    return g.coefficients[0].weight() == 1


@dataclass(frozen=True)
class WeierstrassFactorization:
    """[p](a) = unit * a^pole_order * distinguished, with the unit carried as
    (t, a-degree) residue rows valid on t*d + deg <= valid_vbound."""

    unit_rows: dict
    distinguished: DistinguishedPoly
    pole_order: int
    valid_vbound: int

    def unit_constant(self) -> int:
        return self.unit_rows.get((0, 0), 0)


def _series_inverse_modp(p: int, v: list, length: int) -> list:
    """Inverse of a unit power series over F_p, coefficient list form."""
    inv0 = pow(v[0], -1, p)
    out = [0] * length
    out[0] = inv0
    for k in range(1, length):
        acc = 0
        top = min(k, len(v) - 1)
        for i in range(1, top + 1):
            if v[i]:
                acc += v[i] * out[k - i]
        out[k] = (-acc * inv0) % p
    return out


def weierstrass_from_rows(
    p: int,
    rows: dict,
    d: int,
    pole: int,
    precision: int,
    levels: int,
    depth: int | None = None,
) -> WeierstrassFactorization:
    """Prepare rows of [p](a) (keys (t, a-degree), residues mod p).

    ``levels`` refinement rounds are run; callers must supply rows exact on a
    region t*d + (deg - pole) <= (levels + 2) * d for the solved levels to be
    exact.  ``depth`` is the a-degree up to which the rows are guaranteed
    complete (zeros included); inferred from the largest key when omitted.
    """
    if levels < 2:
        raise NotPreparable(
            "at least 2 u-levels are needed to certify the distinguished shape"
        )
    if any(deg < pole and r for (t, deg), r in rows.items()):
        raise NotPreparable(f"input has terms below a^{pole}")
    if depth is None:
        depth = max((deg for (_, deg) in rows), default=0)
    a_cap = depth - pole
    if a_cap < 2 * d:
        raise NotPreparable(
            f"input depth a^{a_cap} after the pole cannot support preparation "
            f"(need at least 2d = {2 * d})"
        )
    if (levels + 2) * d > a_cap + d:
        raise NotPreparable(
            f"input depth {a_cap} supports at most {(a_cap + d) // d - 2} levels, "
            f"{levels} requested"
        )
    # h = [p](a) / a^pole as per-level coefficient lists.
    h = [[0] * (a_cap + 1) for _ in range(levels)]
    for (t, deg), r in rows.items():
        if t < levels and deg - pole <= a_cap:
            h[t][deg - pole] = r

    hbar = h[0]
    if any(hbar[i] for i in range(d)) or not hbar[d]:
        raise NotPreparable(
            "level-0 part is not a unit times a^d; wrong degree or wrong input"
        )
    vbar = hbar[d:]
    vy = _series_inverse_modp(p, vbar, a_cap + 1)

    def conv(xs, ys, length):
        out = [0] * length
        for i, xi in enumerate(xs):
            if not xi or i >= length:
                continue
            top = min(len(ys), length - i)
            for j in range(top):
                if ys[j]:
                    out[i + j] += xi * ys[j]
        return [v % p for v in out]

    g_levels = [[0] * d for _ in range(levels)]  # lower coefficients per level
    w_levels = [vbar + [0] * d]  # W level lists, level 0 = vbar
    for m in range(1, levels):
        known = list(h[m])
        for t in range(1, m):
            gl = g_levels[t]
            wl = w_levels[m - t]
            for i, gi in enumerate(gl):
                if not gi:
                    continue
                top = min(len(wl), a_cap + 1 - i)
                for j in range(top):
                    if wl[j]:
                        known[i + j] -= gi * wl[j]
        known = [v % p for v in known]
        G = conv(vy, known, a_cap + 1)
        g_levels[m] = G[:d]
        w_levels.append(conv(vbar, G[d:], a_cap + 1))

    coeffs = []
    for i in range(d):
        cs = [0] * precision
        for m in range(min(levels, precision)):
            cs[m] = g_levels[m][i]
        coeffs.append(USeries(p, cs))
    coeffs.append(USeries.one(p, precision))
    g = DistinguishedPoly(p=p, degree=d, coefficients=tuple(coeffs), levels=levels)

    # The computed unit is exact only where its dependency cone stayed inside
    # the supplied rows: t*d + j <= input depth - d.
    valid_vbound = (levels + 1) * d
    unit_rows = {}
    for m in range(levels):
        wl = w_levels[m]
        for j, v in enumerate(wl):
            if v % p and m * d + j <= valid_vbound:
                unit_rows[(m, j)] = v % p
    return WeierstrassFactorization(
        unit_rows=unit_rows,
        distinguished=g,
        pole_order=pole,
        valid_vbound=valid_vbound,
    )


def weierstrass_prepare(h: MultiSeries, d: int, pole: int, levels: int) -> WeierstrassFactorization:
    """Prepare a reduced univariate series given as a MultiSeries over
    (a, un) with F_p coefficients; its formal cap is the guaranteed depth."""
    rows = rows_from_reduced_series(h, "a" if "a" in h.variables else "x")
    p = h.ring.p
    precision = levels
    return weierstrass_from_rows(
        p, rows, d, pole, precision, levels, depth=h.formal_cap
    )


def reconstruction_defect(
    fact: WeierstrassFactorization, rows: dict, ulevels: int
) -> dict:
    """U * a^pole * g minus the input rows, over the region where the computed
    unit is exact: t*d + (deg - pole) <= valid_vbound, t < ulevels.
    Empty dict means bit-exact agreement."""
    g = fact.distinguished
    d, pole, p = g.degree, fact.pole_order, g.p
    vb = fact.valid_vbound
    prod = {}
    for (t1, j), uv in fact.unit_rows.items():
        for i in range(d + 1):
            ci = g.coefficients[i]
            for t2, cv in enumerate(ci.coeffs):
                if not cv:
                    continue
                t = t1 + t2
                deg = j + i + pole
                if t >= ulevels or t * d + (deg - pole) > vb:
                    continue
                key = (t, deg)
                prod[key] = (prod.get(key, 0) + uv * cv) % p
    defect = {}
    for key in set(prod) | set(rows):
        t, deg = key
        if t >= ulevels or t * d + (deg - pole) > vb:
            continue
        delta = (prod.get(key, 0) - rows.get(key, 0)) % p
        if delta:
            defect[key] = delta
    return defect


# ---------------------------------------------------------------------------
# The valuation ring R = F_p[[u]][a]/g(a).


@dataclass(frozen=True)
class WeightValue:
    """A weight: valuation / d, or infinite for zero-up-to-precision."""

    valuation: int | None
    denominator: int

    @property
    def is_infinite(self) -> bool:
        return self.valuation is None

    def as_fraction(self) -> Fraction | None:
        if self.valuation is None:
            return None
        return Fraction(self.valuation, self.denominator)

    def render(self) -> str:
        if self.valuation is None:
            return "inf"
        f = self.as_fraction()
        return f"{f.numerator}/{f.denominator}"

    def __lt__(self, other: "WeightValue"):
        a, b = self.as_fraction(), other.as_fraction()
        if b is None:
            return a is not None
        if a is None:
            return False
        return a < b

    def __eq__(self, other):
        if not isinstance(other, WeightValue):
            return NotImplemented
        return self.as_fraction() == other.as_fraction()


class DvrRing:
    """F_p[[u]][a]/g(a) at u-precision M; tables for reduction by the monic g."""

    def __init__(self, g: DistinguishedPoly):
        self.g = g
        self.p = g.p
        self.d = g.degree
        self.precision = g.precision  # u-levels per coefficient
        self.prec_cap = self.precision * self.d  # valuation resolution of R
        self._a_pow: list = []  # a^k mod g as tuple-of-USeries rows
        self._ensure_pow(2 * self.d - 1)

    def _ensure_pow(self, kmax: int):
        p, d, M = self.p, self.d, self.precision
        if not self._a_pow:
            for k in range(d):
                row = [USeries.zero(p, M) for _ in range(d)]
                row[k] = USeries.one(p, M)
                self._a_pow.append(tuple(row))
        while len(self._a_pow) <= kmax:
            prev = self._a_pow[-1]
            top = prev[d - 1]
            row = [USeries.zero(p, M)] + list(prev[: d - 1])
            if not top.is_zero():
                for i in range(d):
                    row[i] = row[i] - top * self.g.coefficients[i]
            self._a_pow.append(tuple(row))

    # -- constructors ------------------------------------------------------

    def zero(self) -> "DvrElement":
        return DvrElement(
            self, tuple(USeries.zero(self.p, self.precision) for _ in range(self.d))
        )

    def one(self) -> "DvrElement":
        cs = [USeries.zero(self.p, self.precision) for _ in range(self.d)]
        cs[0] = USeries.one(self.p, self.precision)
        return DvrElement(self, tuple(cs))

    def from_int(self, k: int) -> "DvrElement":
        cs = [USeries.zero(self.p, self.precision) for _ in range(self.d)]
        cs[0] = USeries.monomial(self.p, self.precision, 0, k)
        return DvrElement(self, tuple(cs))

    def monomial(self, t: int, i: int, c: int = 1) -> "DvrElement":
        cs = [USeries.zero(self.p, self.precision) for _ in range(self.d)]
        cs[i] = USeries.monomial(self.p, self.precision, t, c)
        return DvrElement(self, tuple(cs))

    def un(self) -> "DvrElement":
        return self.monomial(1, 0)

    def a(self) -> "DvrElement":
        return self.monomial(0, 1)

    def from_rows(self, rows: dict, prec: int | None = None) -> "DvrElement":
        """Reduce a (t, a-degree) residue grid mod g into R (numpy-accumulated)."""
        p, d, M = self.p, self.d, self.precision
        kmax = max((deg for (_, deg) in rows), default=0)
        self._ensure_pow(kmax)
        acc = np.zeros((d, M), dtype=np.int64)
        for (t, deg), r in rows.items():
            if t >= M:
                continue
            row = self._a_pow[deg]
            for i in range(d):
                cs = row[i].coeffs
                if t == 0:
                    acc[i] += np.array(cs, dtype=np.int64) * r
                else:
                    acc[i, t:] += np.array(cs[: M - t], dtype=np.int64) * r
            acc %= p
        coeffs = tuple(USeries(p, acc[i].tolist()) for i in range(d))
        return DvrElement(self, coeffs, prec=prec)

    # -- ring description ----------------------------------------------------

    def is_zero(self, e: "DvrElement") -> bool:
        return e.is_zero()

    def inv(self, e: "DvrElement") -> "DvrElement":
        return e.unit_inverse()

    def __eq__(self, other):
        return isinstance(other, DvrRing) and other.g == self.g

    def __hash__(self):
        return hash((self.p, self.d, self.precision))

    def __repr__(self):
        return f"DvrRing(p={self.p}, d={self.d}, M={self.precision})"


class DvrElement:
    """Element of R as sum_{i<d} c_i(u) a^i with explicit precision.

    ``prec`` (in valuation units) bounds what the element is good for: terms
    of valuation >= prec are unknown.  Fresh elements get the full resolution
    M*d of the ring.
    """

    __slots__ = ("ring", "coeffs", "prec")

    def __init__(self, ring: DvrRing, coeffs, prec: int | None = None):
        self.ring = ring
        self.coeffs = tuple(coeffs)
        self.prec = ring.prec_cap if prec is None else min(prec, ring.prec_cap)

    def _check(self, other: "DvrElement"):
        if self.ring != other.ring:
            raise PrecisionMismatch("elements of different rings")

    # -- arithmetic -----------------------------------------------------------

    def __add__(self, other: "DvrElement") -> "DvrElement":
        self._check(other)
        return DvrElement(
            self.ring,
            tuple(a + b for a, b in zip(self.coeffs, other.coeffs)),
            prec=min(self.prec, other.prec),
        )

    def __sub__(self, other: "DvrElement") -> "DvrElement":
        self._check(other)
        return DvrElement(
            self.ring,
            tuple(a - b for a, b in zip(self.coeffs, other.coeffs)),
            prec=min(self.prec, other.prec),
        )

    def __neg__(self) -> "DvrElement":
        return DvrElement(self.ring, tuple(-a for a in self.coeffs), prec=self.prec)

    def __mul__(self, other: "DvrElement") -> "DvrElement":
        self._check(other)
        ring = self.ring
        d, p, M = ring.d, ring.p, ring.precision
        full = [USeries.zero(p, M) for _ in range(2 * d - 1)]
        for i, a in enumerate(self.coeffs):
            if a.is_zero():
                continue
            for j, b in enumerate(other.coeffs):
                if b.is_zero():
                    continue
                full[i + j] = full[i + j] + a * b
        out = [USeries.zero(p, M) for _ in range(d)]
        for k, c in enumerate(full):
            if c.is_zero():
                continue
            row = ring._a_pow[k]
            for i in range(d):
                out[i] = out[i] + c * row[i]
        va = self.valuation()
        vb = other.valuation()
        prec = min(
            ring.prec_cap,
            self.prec + (vb if vb is not None else other.prec),
            other.prec + (va if va is not None else self.prec),
        )
        return DvrElement(ring, tuple(out), prec=prec)

    def __pow__(self, e: int) -> "DvrElement":
        if e < 0:
            raise ValueError("negative powers: use unit_inverse or divide_exact")
        result = self.ring.one()
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def scale_useries(self, c: USeries) -> "DvrElement":
        return DvrElement(
            self.ring, tuple(a * c for a in self.coeffs), prec=self.prec
        )

    # -- valuation / weight -----------------------------------------------------

    def valuation(self) -> int | None:
        """min over stored monomials u^t a^i of t*d + i; None when zero."""
        d = self.ring.d
        best = None
        for i, c in enumerate(self.coeffs):
            w = c.weight()
            if w is None:
                continue
            v = w * d + i
            if best is None or v < best:
                best = v
        return best

    def weight(self) -> WeightValue:
        return WeightValue(self.valuation(), self.ring.d)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, DvrElement):
            return NotImplemented
        return self.ring == other.ring and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    # -- division -----------------------------------------------------------------

    def divide_by_a(self) -> "DvrElement":
        """Exact division by a.  Needs valuation >= 1; costs one u-level of the
        top coefficient (accounted in prec)."""
        ring = self.ring
        d = ring.d
        c0 = self.coeffs[0]
        w0 = c0.weight()
        if w0 is not None and w0 < 1:
            raise InexactDivision("element has valuation 0; a does not divide it")
        b0 = ring.g.coefficients[0]
        w_unit_inv = b0.divide_by_u(1).inverse()
        q_top = -(c0.divide_by_u(1) * w_unit_inv)
        out = [USeries.zero(ring.p, ring.precision) for _ in range(d)]
        out[d - 1] = q_top
        for i in range(d - 1):
            out[i] = self.coeffs[i + 1] + q_top * ring.g.coefficients[i + 1]
        return DvrElement(ring, tuple(out), prec=self.prec - 1)

    def unit_part(self) -> tuple["DvrElement", int]:
        """(self / a^v, v) with v the valuation; raises on zero."""
        v = self.valuation()
        if v is None:
            raise PrecisionExhausted(
                f"element is zero up to precision {self.prec}; no unit part"
            )
        e = self
        for _ in range(v):
            e = e.divide_by_a()
        return e, v

    def unit_inverse(self) -> "DvrElement":
        """Newton inversion of a unit (valuation 0) in the complete local ring."""
        v = self.valuation()
        if v != 0:
            raise InexactDivision(f"valuation {v} element is not a unit of R")
        ring = self.ring
        r0 = self.coeffs[0].coeffs[0]
        y = ring.from_int(pow(r0, -1, ring.p))
        two = ring.from_int(2)
        goal = ring.prec_cap
        reached = 1
        while reached < goal:
            y = y * (two - self * y)
            reached *= 2
        return DvrElement(ring, y.coeffs, prec=self.prec)

    def divide_exact(self, other: "DvrElement") -> "DvrElement":
        """self / other when val(self) >= val(other) in the DVR."""
        self._check(other)
        ov = other.valuation()
        if ov is None:
            raise PrecisionExhausted("division by zero-up-to-precision element")
        sv = self.valuation()
        if sv is None:
            return DvrElement(self.ring, self.ring.zero().coeffs, prec=self.prec - ov)
        if sv < ov:
            raise InexactDivision(
                f"valuation {sv} not divisible by valuation {ov} element"
            )
        unit, v = other.unit_part()
        num = self
        for _ in range(v):
            num = num.divide_by_a()
        return num * unit.unit_inverse()

    # -- views --------------------------------------------------------------

    def coefficient(self, i: int) -> USeries:
        return self.coeffs[i]

    def residue_mod_m(self) -> int:
        """Image in R/(a, u) = F_p."""
        return self.coeffs[0].coeffs[0]

    def render(self) -> str:
        parts = []
        for i, c in enumerate(self.coeffs):
            if c.is_zero():
                continue
            mono = "" if i == 0 else ("a" if i == 1 else f"a^{i}")
            cs = c.render()
            if mono and cs != "1":
                parts.append(f"({cs})*{mono}")
            elif mono:
                parts.append(mono)
            else:
                parts.append(cs)
        return " + ".join(parts) if parts else "0"

    def __repr__(self):
        return f"DvrElement({self.render()}, prec={self.prec})"


def dvr_mul(lhs: DvrElement, rhs: DvrElement, g: DistinguishedPoly) -> DvrElement:
    """Multiplication in R as a standalone operation (the elements carry
    their ring; g is cross-checked against it)."""
    if lhs.ring.g != g:
        raise PrecisionMismatch("element does not belong to the ring of g")
    return lhs * rhs


def valuation(e: DvrElement) -> WeightValue:
    return e.weight()


def compute_psi(ring: DvrRing, series_a: dict) -> DvrElement:
    """Psi = product over 1 <= i <= p-1 of [i](a), reduced into R.

    Also available: the same product over the negated multiples, which equals
    Psi; both are computed and compared by the pipeline, not assumed.
    """
    p = ring.p
    psi = ring.from_rows(series_a[1])
    for i in range(2, p):
        psi = psi * ring.from_rows(series_a[i])
    return psi


def compute_psi_negative(ring: DvrRing, series_a: dict) -> DvrElement:
    p = ring.p
    out = ring.from_rows(series_a[-1])
    for i in range(2, p):
        out = out * ring.from_rows(series_a[-i])
    return out
