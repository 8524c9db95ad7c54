"""The large-degree engine against the exact-rational route and direct oracles."""

from fractions import Fraction

import pytest

from fglab.bigseries import (
    build_reduced_law_data,
    reduced_exp_rows,
    reduced_log_rows,
    _grid_to_residues,
)
from fglab.errors import IntegralityFailure
from fglab.fgl import ChromaticConfig, build_fgl, i_series
from fglab.scalars import reduce_mod_p
from fglab.series import PrimeFieldRing


def fraction_log_oracle(p, n, jmax):
    """Independent recomputation of the specialized logarithm coefficients as
    exact Fractions in u (dict exponent -> Fraction)."""
    ms = [{0: Fraction(1)}]
    for j in range(1, jmax + 1):
        acc = {}
        if j - n >= 0:
            for t, c in ms[j - n].items():
                acc[t + p ** (j - n)] = acc.get(t + p ** (j - n), 0) + c
        if j - n - 1 >= 0:
            for t, c in ms[j - n - 1].items():
                acc[t] = acc.get(t, 0) + c
        ms.append({t: c / p for t, c in acc.items() if c})
    return ms


@pytest.mark.parametrize("p,n", [(2, 1), (3, 1), (2, 2)])
def test_log_rows_match_fraction_oracle(p, n):
    jmax = 6
    rows = reduced_log_rows(p, n, jmax)
    oracle = fraction_log_oracle(p, n, jmax)
    for j, (scale, row) in enumerate(rows):
        got = {t: Fraction(m, p**scale) for t, m in row.items()}
        assert got == oracle[j], f"m_{j} differs"


@pytest.mark.parametrize("p,n", [(2, 1), (2, 2)])
def test_exp_rows_match_rational_reversion(p, n):
    """The scaled-integer exp agrees with the exact-Fraction reversion of the
    full law specialized at u_1 = ... = u_{n-1} = 0."""
    cfg = ChromaticConfig(p, n)
    F = build_fgl(cfg)
    exp_small = F.exp_series.substitute_zero([f"u{j}" for j in range(1, n)])
    # variables now (x, un)
    rows = reduced_exp_rows(p, n, cfg.formal_cap, 40, cfg.eisenstein_degree, 1000)
    for K in range(1, cfg.formal_cap + 1):
        scale, row = rows[K]
        got = {t: Fraction(m, p**scale) for t, m in row.items()}
        want = {}
        for e, c in exp_small.terms.items():
            if e[0] == K and c:
                want[e[1]] = c
        assert got == want, f"exp row {K} differs"


def small_route_pseries(cfg):
    F = build_fgl(cfg)
    ser = i_series(F, cfg.p)
    red = ser.map_coefficients(lambda c: reduce_mod_p(c, cfg.p), PrimeFieldRing(cfg.p))
    red = red.substitute_zero([f"u{j}" for j in range(1, cfg.n)])
    return {(e[1], e[0]): c.residue for e, c in red.terms.items()}


def small_route_slab(cfg):
    F = build_fgl(cfg)
    red = F.reduced_addition.substitute_zero([f"u{j}" for j in range(1, cfg.n)])
    return {(e[2], e[1], e[0]): c.residue for e, c in red.terms.items()}


@pytest.mark.parametrize("p,n", [(2, 1), (3, 1), (2, 2)])
def test_routes_agree(p, n):
    cfg = ChromaticConfig(p, n)
    data = build_reduced_law_data(cfg)
    d, vb, D = data.d, data.vbound, cfg.formal_cap

    small = small_route_pseries(cfg)
    big = {
        k: v
        for k, v in data.p_series_a.items()
        if k[1] <= D and k[0] * d + k[1] <= vb
    }
    small = {k: v for k, v in small.items() if k[0] * d + k[1] <= vb}
    assert big == small

    slab_small = {
        k: v
        for k, v in small_route_slab(cfg).items()
        if k[1] + k[2] <= D and k[0] * d + k[1] <= vb and k[2] <= data.x_cap
    }
    slab_big = {
        k: v
        for k, v in data.slab.items()
        if k[1] + k[2] <= D and k[0] * d + k[1] <= vb
    }
    assert slab_big == slab_small


@pytest.mark.parametrize("p,n", [(2, 1), (2, 2), (3, 1)])
def test_iseries_rows_agree_with_rational_route(p, n):
    cfg = ChromaticConfig(p, n)
    data = build_reduced_law_data(cfg)
    F = build_fgl(cfg)
    d, vb, D = data.d, data.vbound, cfg.formal_cap
    for i in list(range(1, p)) + [-k for k in range(1, p)]:
        ser = i_series(F, i)
        red = ser.map_coefficients(lambda c: reduce_mod_p(c, p), PrimeFieldRing(p))
        red = red.substitute_zero([f"u{j}" for j in range(1, n)])
        small = {
            (e[1], e[0]): c.residue
            for e, c in red.terms.items()
            if e[1] * d + e[0] <= vb
        }
        big = {
            k: v
            for k, v in data.series_a[i].items()
            if k[1] <= D and k[0] * d + k[1] <= vb
        }
        assert big == small, f"[{i}](a) differs"


def test_pseries_x_matches_pseries_a_shape():
    """[p](x) on the x side agrees with [p](a) where both are defined."""
    cfg = ChromaticConfig(2, 1)
    data = build_reduced_law_data(cfg)
    for (t, deg), v in data.p_series_x.items():
        if deg <= data.x_cap and t * data.d + deg <= data.vbound:
            assert data.p_series_a.get((t, deg)) == v


def test_slab_unit_rows():
    """F(0, y) = y and F(x, 0) = x hold in the slab exactly."""
    cfg = ChromaticConfig(3, 1)
    data = build_reduced_law_data(cfg)
    x_rows = {k: v for k, v in data.slab.items() if k[1] == 0}
    assert x_rows == {(0, 0, 1): 1}
    y_rows = {k: v for k, v in data.slab.items() if k[2] == 0}
    assert y_rows == {(0, 1, 0): 1}


def test_grid_to_residues_certifies():
    # 3 / 2 is not 2-integral: the mantissa 3 at scale 1 fails
    with pytest.raises(IntegralityFailure):
        _grid_to_residues(2, 1, {(0, 0): 3}, "test")
    assert _grid_to_residues(2, 1, {(0, 0): 6}, "test") == {(0, 0): 1}
    assert _grid_to_residues(2, 1, {(0, 0): 4}, "test") == {}
