"""Large-degree series data for the reduced law, by exact scaled-integer arithmetic.

After killing u_1,...,u_{n-1}, the law specializes to the p-typical law over
Q[u] (u = u_n) with logarithm recursion

    p * m_j = m_{j-n} * u^(p^(j-n)) + m_{j-n-1},    m_0 = 1,

(terms present when the index is >= 0).  Everything the valuation-ring stage
consumes is derived from this univariate specialization:

* [i](a) = exp(i*log(a)) for the small multiples i needed downstream,
* [p](a), whose Weierstrass preparation defines the distinguished polynomial,
* the addition-law slab F(x, y) = exp(log x + log y) with x-degree kept small
  and y-degree kept large, used to evaluate x +_F c for ring elements c.

Why a dedicated engine: the distinguished factor g at u-precision M genuinely
depends on [p](a) up to a-degree about (M+2)*d, where d = p^(n+1) - p^n.  That
is far beyond the bivariate cap the exact-rational construction works at, so
this module recomputes the specialized law from scratch with scaled integers:
every coefficient is mantissa * p^(-scale) with an arbitrary-precision integer
mantissa.  All arithmetic is exact in Z[1/p]; reduction mod p happens only
after certifying that p^scale divides the mantissa.  There is no floating
point and no modular shortcut anywhere.

Truncation discipline: monomials u^t * a^i are kept only while
t*d + i <= vbound (and t < the u-level count).  The discarded span is an ideal
- the weighted valuation of a product is at least the sum of the weights - so
working modulo it is exact ring arithmetic, and vbound = (M+2)*d (+ p^n for
the p-series) is deep enough to determine g modulo u^M (see the preparation
routine in the dvr module).

The two routes to the same law (this module versus the exact-rational
bivariate construction) overlap on low degrees; their agreement there is
asserted by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

from .errors import IntegralityFailure
from .fgl import ChromaticConfig

# A "row" is a u-polynomial {t: mantissa}; a "grid" maps (t, deg) or
# (t, ydeg, xdeg) to mantissas.  A mantissa m at scale s means m * p^(-s).


def _strip_scale(p: int, scale: int, values) -> int:
    """Largest k <= scale with p^k dividing every value (0 values ignored)."""
    best = scale
    for v in values:
        if best == 0:
            break
        k = 0
        while k < best and v % p == 0:
            v //= p
            k += 1
        best = min(best, k)
    return best


def _row_mul(r1: dict, r2: dict, tmax: int) -> dict:
    out: dict = {}
    for t1, m1 in r1.items():
        for t2, m2 in r2.items():
            t = t1 + t2
            if t > tmax:
                continue
            out[t] = out.get(t, 0) + m1 * m2
    return {t: m for t, m in out.items() if m}


def reduced_log_rows(p: int, n: int, jmax: int) -> list[tuple[int, dict]]:
    """Logarithm coefficients m_0..m_jmax of the u_n-specialized law, as
    (scale, u-poly row) with scale(m_j) = j exactly."""
    ms: list[tuple[int, dict]] = [(0, {0: 1})]
    for j in range(1, jmax + 1):
        acc: dict = {}
        # m_{j-n} * u^(p^(j-n)), rescaled from j-n to j-1 digits below 1.
        if j - n >= 0:
            s_a, row_a = ms[j - n]
            lift = p ** ((j - 1) - s_a)
            e = p ** (j - n)
            for t, m in row_a.items():
                acc[t + e] = acc.get(t + e, 0) + m * lift
        if j - n - 1 >= 0:
            s_b, row_b = ms[j - n - 1]
            lift = p ** ((j - 1) - s_b)
            for t, m in row_b.items():
                acc[t] = acc.get(t, 0) + m * lift
        ms.append((j, {t: m for t, m in acc.items() if m}))
    return ms


def _jmax_for(p: int, cap: int) -> int:
    j = 0
    while p ** (j + 1) <= cap:
        j += 1
    return j


def reduced_exp_rows(
    p: int, n: int, deg_cap: int, ulevels: int, uweight: int, vbound: int
) -> list[tuple[int, dict]]:
    """Coefficient rows E_1..E_deg_cap of exp = log^(-1) for the specialized
    law, solved degree by degree from log(exp(x)) = x.

    Power arrays exp^e for every exponent e on the addition chain of
    p, p^2, ... are extended one degree at a time; the degree-K slice of any
    power only involves rows of degree < K, so each new E_K is determined by
    already-known data with no divisions beyond the exact p-powers carried in
    the scales.
    """
    jmax = _jmax_for(p, deg_cap)
    ms = reduced_log_rows(p, n, jmax)

    # Addition chain covering p^1..p^jmax: each entry e = e1 + e2 of earlier ones.
    chain: list[int] = [1]
    plan: dict[int, tuple[int, int]] = {}

    def ensure(e: int):
        if e in chain:
            return
        half = e // 2
        ensure(half)
        ensure(e - half)
        plan[e] = (half, e - half)
        chain.append(e)

    for j in range(1, jmax + 1):
        ensure(p**j)
    chain.sort()

    def tmax_at(deg: int) -> int:
        by_tri = (vbound - deg) // uweight
        return min(ulevels - 1, by_tri)

    # arrays[e][K] = (scale, row) for the x^K coefficient of exp^e.
    arrays: dict[int, list] = {e: [] for e in chain}
    zero = (0, {})
    for e in chain:
        for K in range(deg_cap + 1):
            arrays[e].append(zero)
    arrays[1][1] = (0, {0: 1})  # exp = x + ...

    out_rows: list[tuple[int, dict]] = [zero, (0, {0: 1})]

    for K in range(2, deg_cap + 1):
        tm = tmax_at(K)
        # Extend every composite power to degree K using rows of degree < K.
        for e in chain:
            if e == 1:
                continue
            e1, e2 = plan[e]
            a1, a2 = arrays[e1], arrays[e2]
            acc: dict = {}
            acc_scale = 0
            for i in range(e1, K - e2 + 1):
                s1, r1 = a1[i]
                if not r1:
                    continue
                s2, r2 = a2[K - i]
                if not r2:
                    continue
                s = s1 + s2
                if s > acc_scale:
                    lift = p ** (s - acc_scale)
                    acc = {t: m * lift for t, m in acc.items()}
                    acc_scale = s
                lift = p ** (acc_scale - s)
                for t1, m1 in r1.items():
                    for t2, m2 in r2.items():
                        t = t1 + t2
                        if t > tm:
                            continue
                        acc[t] = acc.get(t, 0) + m1 * m2 * lift
            acc = {t: m for t, m in acc.items() if m}
            g = _strip_scale(p, acc_scale, acc.values())
            if g:
                acc = {t: m // p**g for t, m in acc.items()}
                acc_scale -= g
            arrays[e][K] = (acc_scale, acc)

        # E_K = -sum_j m_j * (exp^(p^j))|_K.
        acc = {}
        acc_scale = 0
        for j in range(1, jmax + 1):
            if p**j > K:
                break
            sj, rowj = ms[j]
            sp, rowp = arrays[p**j][K]
            if not rowp:
                continue
            s = sj + sp
            if s > acc_scale:
                lift = p ** (s - acc_scale)
                acc = {t: m * lift for t, m in acc.items()}
                acc_scale = s
            lift = p ** (acc_scale - s)
            for t1, m1 in rowj.items():
                for t2, m2 in rowp.items():
                    t = t1 + t2
                    if t > tm:
                        continue
                    acc[t] = acc.get(t, 0) - m1 * m2 * lift
        acc = {t: m for t, m in acc.items() if m}
        g = _strip_scale(p, acc_scale, acc.values())
        if g:
            acc = {t: m // p**g for t, m in acc.items()}
            acc_scale -= g
        out_rows.append((acc_scale, acc))
        arrays[1][K] = (acc_scale, acc)

    return out_rows


@dataclass
class Consumer:
    """One weighted sum over powers: out = sum_l E_(l + row_offset) * scalar(l) * base^l."""

    name: str
    row_offset: int
    scalar_of: object  # callable l -> exact int
    vbound: int
    scale: int = 0
    grid: dict = None  # (t, deg) -> mantissa

    def __post_init__(self):
        self.grid = {}

    def absorb(self, p: int, contrib_scale: int, contrib: dict):
        if contrib_scale > self.scale:
            lift = p ** (contrib_scale - self.scale)
            self.grid = {k: m * lift for k, m in self.grid.items()}
            self.scale = contrib_scale
        lift = p ** (self.scale - contrib_scale)
        g = self.grid
        for k, m in contrib.items():
            g[k] = g.get(k, 0) + m * lift


def _power_pass(
    p: int,
    uweight: int,
    ulevels: int,
    exp_rows: list,
    base_scale: int,
    base_terms: dict,
    lmax: int,
    consumers: list,
):
    """Single pass over powers base^l, feeding every consumer.

    The running power is carried as (scale, grid) and multiplied by the
    sparse base each step; consumers absorb E-row-weighted copies.  All
    arithmetic is exact; scales only ever grow by lifting mantissas with
    explicit p-powers, and common p-factors are stripped after each step to
    keep scales (hence mantissa sizes) bounded.
    """
    pow_vbound = max(c.vbound for c in consumers)
    pow_scale = 0
    pow_grid = {(0, 0): 1}
    base_items = list(base_terms.items())
    nrows = len(exp_rows)
    for l in range(lmax + 1):
        for c in consumers:
            k = l + c.row_offset
            if k >= nrows:
                continue
            s_row, row = exp_rows[k]
            if not row:
                continue
            sc = c.scalar_of(l)
            if sc == 0:
                continue
            vb = c.vbound
            contrib: dict = {}
            for t_r, m_r in row.items():
                mm = m_r * sc
                for (t_b, deg), m_b in pow_grid.items():
                    t = t_r + t_b
                    if t >= ulevels or t * uweight + deg > vb:
                        continue
                    key = (t, deg)
                    v = contrib.get(key)
                    contrib[key] = m_b * mm if v is None else v + m_b * mm
            if contrib:
                c.absorb(p, s_row + pow_scale, contrib)
        if l == lmax:
            break
        # pow_grid *= base (sparse), truncated to the deepest consumer region.
        nxt: dict = {}
        for (t1, d1), m1 in pow_grid.items():
            for (t2, d2), m2 in base_items:
                t = t1 + t2
                deg = d1 + d2
                if t >= ulevels or t * uweight + deg > pow_vbound:
                    continue
                key = (t, deg)
                v = nxt.get(key)
                nxt[key] = m1 * m2 if v is None else v + m1 * m2
        pow_scale += base_scale
        pow_grid = {k: m for k, m in nxt.items() if m}
        if not pow_grid:
            break
        g = _strip_scale(p, pow_scale, pow_grid.values())
        if g:
            pow_grid = {k: m // p**g for k, m in pow_grid.items()}
            pow_scale -= g
    return


def _grid_to_residues(p: int, scale: int, grid: dict, what: str) -> dict:
    """Certify p-integrality of every mantissa and reduce mod p."""
    q = p**scale
    out = {}
    for key, m in grid.items():
        if m % q:
            raise IntegralityFailure(
                f"{what}: coefficient at {key} has denominator p^{scale} "
                "after exact evaluation; the construction is broken"
            )
        r = (m // q) % p
        if r:
            out[key] = r
    return out


@dataclass
class ReducedLawData:
    """Everything the valuation-ring stage needs, already reduced mod p.

    Grids are dicts of residues: ``p_series_a`` and ``series_a[i]`` over keys
    (t, a-degree); ``slab`` over (t, y-degree, x-degree); ``p_series_x`` over
    (t, x-degree).  The kept region satisfies t*d + deg <= vbound (+ p^n for
    the p-series), which pins down everything downstream modulo valuation
    m^(vbound) of the valuation ring.
    """

    config: ChromaticConfig
    d: int
    vbound: int
    a_cap: int
    x_cap: int
    p_series_a: dict
    series_a: dict
    slab: dict
    p_series_x: dict
    exp_scale_max: int


def build_reduced_law_data(config: ChromaticConfig) -> ReducedLawData:
    p, n, M = config.p, config.n, config.u_precision
    d = config.eisenstein_degree
    x_cap = config.isogeny_x_cap
    vbound = (M + 2) * d
    a_cap = vbound + p**n
    ulevels = M + 2
    # Slab consumers index rows m + l with l <= vbound, m <= x_cap; the
    # univariate ones index up to a_cap.  One cap covers both.
    deg_cap = max(a_cap, vbound + x_cap)

    exp_rows = reduced_exp_rows(p, n, deg_cap, ulevels, d, deg_cap)
    jmax = _jmax_for(p, deg_cap)
    ms = reduced_log_rows(p, n, jmax)

    # log(a) as a sparse (t, deg) grid at a common scale.
    la_scale = jmax
    la_terms: dict = {}
    for j, (sj, rowj) in enumerate(ms):
        deg = p**j
        if deg > a_cap:
            break
        lift = p ** (la_scale - sj)
        for t, m in rowj.items():
            if t < ulevels and t * d + deg <= a_cap:
                la_terms[(t, deg)] = m * lift

    consumers = [
        Consumer("p_series_a", 0, lambda l: p**l, a_cap),
    ]
    series_labels = []
    for i in list(range(2, p)) + [-k for k in range(1, p)]:
        series_labels.append(i)
        consumers.append(Consumer(f"series_{i}", 0, (lambda i: lambda l: i**l)(i), a_cap))
    slab_offset = len(consumers)
    for m in range(x_cap + 1):
        consumers.append(
            Consumer(f"slab_h{m}", m, (lambda m: lambda l: comb(m + l, m))(m), vbound)
        )

    _power_pass(p, d, ulevels, exp_rows, la_scale, la_terms, a_cap, consumers)

    p_series_a = _grid_to_residues(
        p, consumers[0].scale, consumers[0].grid, "p-series"
    )
    series_a = {1: {(0, 1): 1}}
    for idx, i in enumerate(series_labels, start=1):
        series_a[i] = _grid_to_residues(
            p, consumers[idx].scale, consumers[idx].grid, f"[{i}](a)"
        )

    # Assemble the slab F(x, y) = sum_m (log x)^m * H_m and certify at the end:
    # only the total is p-integral.
    lx_scale = _jmax_for(p, x_cap)
    lx_terms: dict = {}
    for j in range(0, _jmax_for(p, x_cap) + 1):
        sj, rowj = ms[j]
        deg = p**j
        lift = p ** (lx_scale - sj)
        for t, m in rowj.items():
            if t < ulevels and t * d <= vbound:
                lx_terms[(t, deg)] = rowj[t] * lift
    slab_scale = 0
    slab_grid: dict = {}
    lxp_scale = 0
    lxp_grid = {(0, 0): 1}  # (t, xdeg) -> mantissa, the running power of log x
    for m in range(x_cap + 1):
        h = consumers[slab_offset + m]
        if h.grid:
            s = h.scale + lxp_scale
            contrib: dict = {}
            for (t1, xdeg), m1 in lxp_grid.items():
                if xdeg > x_cap:
                    continue
                for (t2, ydeg), m2 in h.grid.items():
                    t = t1 + t2
                    if t >= ulevels or t * d + ydeg > vbound:
                        continue
                    key = (t, ydeg, xdeg)
                    v = contrib.get(key)
                    contrib[key] = m1 * m2 if v is None else v + m1 * m2
            if s > slab_scale:
                lift = p ** (s - slab_scale)
                slab_grid = {k: v * lift for k, v in slab_grid.items()}
                slab_scale = s
            lift = p ** (slab_scale - s)
            for key, v in contrib.items():
                slab_grid[key] = slab_grid.get(key, 0) + v * lift
        if m < x_cap:
            nxt: dict = {}
            for (t1, d1), m1 in lxp_grid.items():
                for (t2, d2), m2 in lx_terms.items():
                    t, deg = t1 + t2, d1 + d2
                    if t >= ulevels or deg > x_cap or t * d > vbound:
                        continue
                    key = (t, deg)
                    v = nxt.get(key)
                    nxt[key] = m1 * m2 if v is None else v + m1 * m2
            lxp_grid = {k: v for k, v in nxt.items() if v}
            lxp_scale += lx_scale
            g = _strip_scale(p, lxp_scale, lxp_grid.values())
            if g:
                lxp_grid = {k: v // p**g for k, v in lxp_grid.items()}
                lxp_scale -= g
    slab_grid = {k: v for k, v in slab_grid.items() if v}
    slab = _grid_to_residues(p, slab_scale, slab_grid, "addition slab")

    # [p](x) on the small x side: exp(p * log x).
    px_scale = 0
    px_grid: dict = {}
    pw_scale = 0
    pw_grid = {(0, 0): 1}
    for l in range(x_cap + 1):
        if l >= 1 and l < len(exp_rows):
            s_row, row = exp_rows[l]
            if row:
                sc = p**l
                contrib = {}
                for t_r, m_r in row.items():
                    for (t_b, deg), m_b in pw_grid.items():
                        t = t_r + t_b
                        if t >= ulevels or deg > x_cap or t * d > vbound:
                            continue
                        key = (t, deg)
                        v = contrib.get(key)
                        add = m_r * sc * m_b
                        contrib[key] = add if v is None else v + add
                s = s_row + pw_scale
                if s > px_scale:
                    lift = p ** (s - px_scale)
                    px_grid = {k: v * lift for k, v in px_grid.items()}
                    px_scale = s
                lift = p ** (px_scale - s)
                for key, v in contrib.items():
                    px_grid[key] = px_grid.get(key, 0) + v * lift
        if l < x_cap:
            nxt = {}
            for (t1, d1), m1 in pw_grid.items():
                for (t2, d2), m2 in lx_terms.items():
                    t, deg = t1 + t2, d1 + d2
                    if t >= ulevels or deg > x_cap or t * d > vbound:
                        continue
                    key = (t, deg)
                    v = nxt.get(key)
                    nxt[key] = m1 * m2 if v is None else v + m1 * m2
            pw_grid = {k: v for k, v in nxt.items() if v}
            pw_scale += lx_scale
    p_series_x = _grid_to_residues(
        p, px_scale, {k: v for k, v in px_grid.items() if v}, "[p](x)"
    )

    exp_scale_max = max(s for s, _ in exp_rows)
    return ReducedLawData(
        config=config,
        d=d,
        vbound=vbound,
        a_cap=a_cap,
        x_cap=x_cap,
        p_series_a=p_series_a,
        series_a=series_a,
        slab=slab,
        p_series_x=p_series_x,
        exp_scale_max=exp_scale_max,
    )
