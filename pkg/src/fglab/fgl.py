"""Construction and verification of the p-typical formal group law.

The law is built over the exact rationals in u_1,...,u_n from the Hazewinkel
generator recursion

    p * m_j = sum_{0 <= i < j} m_i * v_{j-i}^(p^i),        m_0 = 1,

specialized at v_k = u_k for 1 <= k <= n, v_{n+1} = 1 and v_j = 0 otherwise.
The logarithm is log(x) = sum_j m_j x^(p^j), the exponential is its
compositional inverse, and the addition law is F(x,y) = exp(log x + log y),
truncated at the configured formal degree cap.

Every coefficient of F is certified p-integral at construction (the
functional-equation construction guarantees this; a failure is a bug) and the
structural congruences the rest of the pipeline relies on are *asserted at
runtime* rather than assumed:

* F(x,y) = x + y + u_k C_{p^k}(x,y)   mod (u_1,...,u_{k-1}) + (x,y)^(p^k + 1)
* F(x,y) = x + y + C_{p^(n+1)}(x,y)   mod (u_1,...,u_n)     + (x,y)^(p^(n+1)+1)
* [i](x) = i x + u_k gamma_{i,k} x^(p^k)   mod (p, u_1,...,u_{k-1}, x^(p^k+1))
* [i](x) = i x + gamma_{i,n+1} x^(p^(n+1)) mod (p, u_1,...,u_n, x^(p^(n+1)+1))

where C_q(x,y) = (x^q + y^q - (x+y)^q)/p and gamma_{i,k} = (i - i^(p^k))/p.
Any coordinate passing these congruences supports everything downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import IntegralityFailure
from .scalars import is_p_integral, reduce_mod_p, validate_prime
from .series import MultiSeries, PrimeFieldRing, RationalRing


@dataclass(frozen=True)
class ChromaticConfig:
    """Global parameters: prime p, index n >= 1 (the height is n+1), formal
    degree cap and u-series precision."""

    p: int
    n: int
    formal_cap: int = 0  # 0 means "use the default p^(n+1) + 2"
    u_precision: int = 32

    def __post_init__(self):
        validate_prime(self.p)
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.formal_cap == 0:
            object.__setattr__(self, "formal_cap", self.p ** (self.n + 1) + 2)
        if self.formal_cap < self.p ** (self.n + 1) + 1:
            raise ValueError(
                f"formal cap {self.formal_cap} too small to see degree "
                f"{self.p ** (self.n + 1)} congruences"
            )
        if self.u_precision < 2:
            raise ValueError("u-precision must be at least 2")

    @property
    def height(self) -> int:
        return self.n + 1

    @property
    def eisenstein_degree(self) -> int:
        """d = p^(n+1) - p^n, the degree of the distinguished polynomial."""
        return self.p ** (self.n + 1) - self.p**self.n

    @property
    def isogeny_x_cap(self) -> int:
        """x-degree cap for the norm-coordinate stage: >= p * p^n + guard."""
        return self.p ** (self.n + 1) + self.p + 2

    @property
    def u_names(self) -> tuple:
        return tuple(f"u{k}" for k in range(1, self.n + 1))

    def cost_estimate(self) -> int:
        """Rough size metric used by the desk-scale guard."""
        big = (self.u_precision + 2) * self.eisenstein_degree + self.isogeny_x_cap
        return big * big * (self.u_precision + 2) // 1000


QQ = RationalRing()


def c_poly(p: int, m: int) -> MultiSeries:
    """C_{p^m}(x,y) = (x^(p^m) + y^(p^m) - (x+y)^(p^m)) / p, an integral
    bivariate polynomial."""
    validate_prime(p)
    if m < 1:
        raise ValueError("m must be >= 1")
    q = p**m
    variables = ("x", "y")
    terms = {}
    # -(x+y)^q expanded, with the pure powers x^q, y^q cancelled.
    binom = 1
    for i in range(q + 1):
        if 0 < i < q:
            terms[(q - i, i)] = Fraction(-binom, p)
        binom = binom * (q - i) // (i + 1)
    return MultiSeries(QQ, variables, q, None, terms)


def gamma(i: int, k: int, p: int) -> Fraction:
    """gamma_{i,k} = (i - i^(p^k)) / p; an integer by Fermat."""
    if i < 0:
        raise ValueError("i must be >= 0")
    if k < 1:
        raise ValueError("k must be >= 1")
    return Fraction(i - i ** (p**k), p)


def hazewinkel_coefficients(cfg: ChromaticConfig, jmax: int) -> list[MultiSeries]:
    """The logarithm coefficients m_0..m_jmax as polynomials in u_1..u_n."""
    p, n = cfg.p, cfg.n
    uvars = cfg.u_names

    def upoly(terms):
        return MultiSeries(QQ, uvars, 0, None, terms)

    zero_exp = (0,) * n
    ms = [upoly({zero_exp: Fraction(1)})]
    for j in range(1, jmax + 1):
        acc = MultiSeries.zero(QQ, uvars, 0, None)
        for i in range(j):
            k = j - i
            if k <= n:
                e = [0] * n
                e[k - 1] = p**i
                vk_pow = upoly({tuple(e): Fraction(1)})
            elif k == n + 1:
                vk_pow = upoly({zero_exp: Fraction(1)})
            else:
                continue
            acc = acc + (ms[i] * vk_pow)
        ms.append(acc.scale(Fraction(1, p)))
    return ms


@dataclass(frozen=True)
class FormalGroupLaw:
    """The constructed law: exact-rational data plus its mod-p reduction.

    ``addition`` has variables (x, y, u1..un); ``log_series`` and
    ``exp_series`` have variables (x, u1..un).  All invariants (unit,
    symmetry, associativity up to the cap, p-integrality) are checked by
    :func:`build_fgl` before the instance is returned.
    """

    config: ChromaticConfig
    log_series: MultiSeries
    exp_series: MultiSeries
    addition: MultiSeries
    reduced_addition: MultiSeries
    _cache: dict = field(default_factory=dict, repr=False, compare=False)


def _embed_log(ms_list, cfg: ChromaticConfig, varname: str, variables) -> MultiSeries:
    """log(v) = sum_j m_j v^(p^j) over the given variable list."""
    D = cfg.formal_cap
    out = MultiSeries.zero(QQ, variables, D, None)
    pos = {v: i for i, v in enumerate(variables)}
    for j, mj in enumerate(ms_list):
        deg = cfg.p**j
        if deg > D:
            break
        for ue, c in mj.terms.items():
            e = [0] * len(variables)
            e[pos[varname]] = deg
            for uk, ev in zip(cfg.u_names, ue):
                e[pos[uk]] = ev
            out = out + MultiSeries(QQ, variables, D, None, {tuple(e): c})
    return out


def build_fgl(config: ChromaticConfig) -> FormalGroupLaw:
    """Construct the law and certify its invariants.

    Raises IntegralityFailure if any coefficient of the addition law fails to
    be p-integral; with this construction that indicates a bug, not bad input.
    """
    p, n, D = config.p, config.n, config.formal_cap
    jmax = 0
    while p ** (jmax + 1) <= D:
        jmax += 1
    ms_list = hazewinkel_coefficients(config, jmax)

    xvars = ("x",) + config.u_names
    log_x = _embed_log(ms_list, config, "x", xvars)
    exp_x = log_x.reversion()

    fvars = ("x", "y") + config.u_names
    log_in_f = _embed_log(ms_list, config, "x", fvars)
    log_y = _embed_log(ms_list, config, "y", fvars)
    addition = exp_x.compose({"x": log_in_f + log_y})

    for e, c in addition.terms.items():
        if not is_p_integral(c, p):
            raise IntegralityFailure(
                f"coefficient {c} of exponent {e} is not {p}-integral"
            )
    reduced = addition.map_coefficients(
        lambda c: reduce_mod_p(c, p), PrimeFieldRing(p)
    )

    law = FormalGroupLaw(
        config=config,
        log_series=log_x,
        exp_series=exp_x,
        addition=addition,
        reduced_addition=reduced,
    )
    _assert_fgl_axioms(law)
    return law


def _assert_fgl_axioms(law: FormalGroupLaw):
    for name, ok, _ in fgl_axiom_checks(law):
        if not ok:
            raise IntegralityFailure(f"formal group law axiom failed: {name}")


def fgl_axiom_checks(law: FormalGroupLaw):
    """Unit, symmetry and associativity checks; returns (name, ok, defect)."""
    cfg = law.config
    F = law.addition
    fvars = F.variables
    D = cfg.formal_cap
    x = MultiSeries.variable(QQ, fvars, "x", D, None)
    y = MultiSeries.variable(QQ, fvars, "y", D, None)
    zero = MultiSeries.zero(QQ, fvars, D, None)

    results = []
    unit_defect = F.compose({"x": x, "y": zero}) - x
    results.append(("fgl_unit_x", unit_defect.is_zero(), unit_defect))
    unit_defect_y = F.compose({"x": zero, "y": y}) - y
    results.append(("fgl_unit_y", unit_defect_y.is_zero(), unit_defect_y))

    swapped = F.rename_variables({"x": "y", "y": "x"})
    sym_defect = swapped.extend_variables(fvars) - F
    results.append(("fgl_symmetry", sym_defect.is_zero(), sym_defect))

    avars = ("x", "y", "z") + cfg.u_names
    xa = MultiSeries.variable(QQ, avars, "x", D, None)
    ya = MultiSeries.variable(QQ, avars, "y", D, None)
    za = MultiSeries.variable(QQ, avars, "z", D, None)
    fxy = F.compose({"x": xa, "y": ya})
    fyz = F.compose({"x": ya, "y": za})
    assoc_defect = F.compose({"x": fxy, "y": za}) - F.compose({"x": xa, "y": fyz})
    results.append(("fgl_associativity", assoc_defect.is_zero(), assoc_defect))
    return results


def formal_inverse(F: FormalGroupLaw) -> MultiSeries:
    """iota(x) = exp(-log(x)), so that F(x, iota(x)) = 0 up to the cap."""
    if "inverse" not in F._cache:
        F._cache["inverse"] = F.exp_series.compose({"x": -F.log_series})
    return F._cache["inverse"]


def i_series(F: FormalGroupLaw, i: int) -> MultiSeries:
    """[i](x): the i-fold formal sum of x, over the exact rationals.

    [0] = 0, [i] = F([i-1](x), x), and [-i] = iota([i](x)).
    """
    cache = F._cache.setdefault("iseries", {})
    if i in cache:
        return cache[i]
    cfg = F.config
    xvars = ("x",) + cfg.u_names
    if i == 0:
        out = MultiSeries.zero(QQ, xvars, cfg.formal_cap, None)
    elif i == 1:
        out = MultiSeries.variable(QQ, xvars, "x", cfg.formal_cap, None)
    elif i > 1:
        prev = i_series(F, i - 1)
        x = MultiSeries.variable(QQ, xvars, "x", cfg.formal_cap, None)
        out = F.addition.compose({"x": prev, "y": x})
    else:
        out = formal_inverse(F).compose({"x": i_series(F, -i)})
    cache[i] = out
    return out


@dataclass
class CheckRow:
    """One verification row: failures are data, not exceptions."""

    name: str
    ok: bool
    detail: str = ""
    defect: str = ""
    horizon: bool = False

    @property
    def status(self) -> str:
        if not self.ok:
            return "fail"
        return "horizon-flagged" if self.horizon else "pass"


@dataclass
class CongruenceReport:
    rows: list

    @property
    def all_ok(self) -> bool:
        return all(r.ok for r in self.rows)

    def row(self, name: str) -> CheckRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)


def _mod_p_kill_u(series: MultiSeries, p: int, kill: list, x_keep: int) -> MultiSeries:
    """Reduce mod p, set the named u-variables to zero, truncate x above x_keep."""
    red = series.map_coefficients(lambda c: reduce_mod_p(c, p), PrimeFieldRing(p))
    red = red.substitute_zero(kill)
    return red.truncate_formal(x_keep)


def ideal_text(kill_upto: int, extra: str = "", with_p: bool = False) -> str:
    """Human rendering of the working ideal, e.g. ``(p, u_1, u_2, x^10)``."""
    parts = (["p"] if with_p else []) + [f"u_{j}" for j in range(1, kill_upto + 1)]
    if extra:
        parts.append(extra)
    return "(" + ", ".join(parts) + ")"


def verify_fgl_congruences(F: FormalGroupLaw) -> CongruenceReport:
    """Check every structural congruence of the constructed coordinate.

    For each 1 <= k <= n: the addition congruence against u_k C_{p^k} (an
    exact identity over the rationals after killing u_1..u_{k-1} and
    truncating at total degree p^k), plus the top-degree case.  For each
    0 <= i <= p^2 + 1 and each k, the i-series congruence mod
    (p, u_1..u_{k-1}, x^(p^k + 1)), and the top case modulo
    (p, u_1,...,u_n, x^(p^(n+1)+1)) read with exponent n+1 in gamma.
    """
    cfg = F.config
    p, n = cfg.p, cfg.n
    rows = [CheckRow(name, ok, defect="" if ok else d.render())
            for name, ok, d in fgl_axiom_checks(F)]
    rows.append(CheckRow("fgl_integrality", True, detail="certified at construction"))

    fvars = F.addition.variables
    x = MultiSeries.variable(QQ, fvars, "x", cfg.formal_cap, None)
    y = MultiSeries.variable(QQ, fvars, "y", cfg.formal_cap, None)

    # Addition congruences, exact over the rationals.
    for k in range(1, n + 1):
        kill = [f"u{j}" for j in range(1, k)]
        q = p**k
        keep_vars = tuple(v for v in fvars if v not in kill)
        lhs = F.addition.substitute_zero(kill).truncate_formal(q)
        uk = MultiSeries.variable(QQ, keep_vars, f"u{k}", q, None)
        ck = c_poly(p, k).extend_variables(keep_vars)
        rhs = (x + y).substitute_zero(kill).truncate_formal(q) + uk * ck
        defect = lhs - rhs
        rows.append(
            CheckRow(
                f"addition_congruence_k{k}",
                defect.is_zero(),
                detail=f"modulo {ideal_text(k - 1)} + (x,y)^{q + 1}",
                defect="" if defect.is_zero() else defect.render(),
            )
        )

    qtop = p ** (n + 1)
    kill_all = list(cfg.u_names)
    lhs_top = F.addition.substitute_zero(kill_all).truncate_formal(qtop)
    ctop = c_poly(p, n + 1).extend_variables(("x", "y"))
    rhs_top = (x + y).substitute_zero(kill_all).truncate_formal(qtop) + ctop.truncate_formal(qtop)
    defect_top = lhs_top - rhs_top
    rows.append(
        CheckRow(
            "addition_congruence_top",
            defect_top.is_zero(),
            detail=f"modulo {ideal_text(n)} + (x,y)^{qtop + 1}",
            defect="" if defect_top.is_zero() else defect_top.render(),
        )
    )

    # i-series congruences mod p.
    xvars = ("x",) + cfg.u_names
    fp = PrimeFieldRing(p)
    imax = p * p + 1
    for i in range(imax + 1):
        ser = i_series(F, i)
        for k in range(1, n + 1):
            kill = [f"u{j}" for j in range(1, k)]
            q = p**k
            got = _mod_p_kill_u(ser, p, kill, q)
            keep_vars = tuple(v for v in xvars if v not in kill)
            gk = reduce_mod_p(gamma(i, k, p), p)
            expect_terms = {}
            e_lin = tuple(1 if v == "x" else 0 for v in keep_vars)
            if i % p:
                expect_terms[e_lin] = fp.from_int(i)
            e_top = tuple(
                q if v == "x" else (1 if v == f"u{k}" else 0) for v in keep_vars
            )
            if gk.residue:
                expect_terms[e_top] = gk
            expect = MultiSeries(fp, keep_vars, q, None, expect_terms)
            defect = got - expect
            rows.append(
                CheckRow(
                    f"iseries_congruence_i{i}_k{k}",
                    defect.is_zero(),
                    detail=f"[{i}](x) = {i}x + u{k}*gamma({i},{k})*x^{q} "
                    f"mod {ideal_text(k - 1, f'x^{q + 1}', with_p=True)}",
                    defect="" if defect.is_zero() else defect.render(),
                )
            )
        # Top case: gamma exponent read as n+1.
        got = _mod_p_kill_u(ser, p, kill_all, qtop)
        gtop = reduce_mod_p(gamma(i, n + 1, p), p)
        expect_terms = {}
        if i % p:
            expect_terms[(1,)] = fp.from_int(i)
        if gtop.residue:
            expect_terms[(qtop,)] = gtop
        expect = MultiSeries(fp, ("x",), qtop, None, expect_terms)
        defect = got - expect
        detail = (f"[{i}](x) = {i}x + gamma({i},{n+1})*x^{qtop} "
                  f"mod {ideal_text(n, f'x^{qtop + 1}', with_p=True)}")
        if not defect.is_zero():
            # Diagnose whether some other exponent reading would have passed.
            for alt in range(1, n + 1):
                galt = reduce_mod_p(gamma(i, alt, p), p)
                alt_terms = dict(expect_terms)
                alt_terms.pop((qtop,), None)
                if galt.residue:
                    alt_terms[(qtop,)] = galt
                if (got - MultiSeries(fp, ("x",), qtop, None, alt_terms)).is_zero():
                    detail += f" [note: exponent reading k={alt} would pass]"
                    break
        rows.append(
            CheckRow(
                f"iseries_congruence_i{i}_top",
                defect.is_zero(),
                detail=detail,
                defect="" if defect.is_zero() else defect.render(),
            )
        )
    return CongruenceReport(rows)
