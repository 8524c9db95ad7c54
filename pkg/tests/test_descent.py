import random
from fractions import Fraction

import pytest

from fglab.descent import (
    ReducedPowerOperator,
    apply_reduced_power,
    descent_run,
    descent_step,
    phi_extract,
    weight_of,
    weight_rule_witness,
)
from fglab.dvr import DvrElement
from fglab.errors import IndexOutOfRange, PrecisionExhausted
from fglab.scalars import USeries


class TestWeightOf:
    def test_un(self):
        assert weight_of(USeries.monomial(2, 8, 1)) == 1

    def test_unit(self):
        assert weight_of(USeries.one(3, 8)) == 0

    def test_higher(self):
        z = USeries.monomial(2, 32, 5) + USeries.monomial(2, 32, 7)
        assert weight_of(z) == 5

    def test_zero(self):
        assert weight_of(USeries.zero(2, 8)) is None


class TestPhiExtract:
    def test_dual_basis(self, pipeline):
        ring = pipeline(3, 1).ring
        d = ring.d
        for i in range(d):
            e = ring.monomial(0, i)
            for j in range(d):
                got = phi_extract(e, j)
                if i == j:
                    assert got == USeries.one(3, ring.precision)
                else:
                    assert got.is_zero()

    def test_linear_over_coefficients(self, pipeline):
        ring = pipeline(2, 1).ring
        e = ring.monomial(1, 1)  # u * a
        assert phi_extract(e, 1) == USeries.monomial(2, ring.precision, 1)

    def test_additive_random(self, pipeline):
        ring = pipeline(2, 2).ring
        rng = random.Random(9)
        for _ in range(10):
            x = ring.monomial(rng.randrange(3), rng.randrange(ring.d))
            y = ring.monomial(rng.randrange(3), rng.randrange(ring.d))
            i = rng.randrange(ring.d)
            assert phi_extract(x + y, i) == phi_extract(x, i) + phi_extract(y, i)

    def test_index_out_of_range(self, pipeline):
        ring = pipeline(2, 1).ring
        with pytest.raises(IndexOutOfRange):
            phi_extract(ring.one(), ring.d)


class TestApplyReducedPower:
    def test_generator(self, pipeline):
        pipe = pipeline(2, 1)
        M = pipe.config.u_precision
        got = apply_reduced_power(USeries.monomial(2, M, 1), pipe.un_image_divided)
        assert got == pipe.un_image_divided

    def test_maps_one_to_one(self, pipeline):
        pipe = pipeline(3, 1)
        M = pipe.config.u_precision
        got = apply_reduced_power(USeries.one(3, M), pipe.un_image_divided)
        assert got == pipe.ring.one()

    @pytest.mark.parametrize("p,n", [(2, 1), (3, 1)])
    def test_multiplicative_random(self, pipeline, p, n):
        """Homomorphism property: both sides computed independently."""
        pipe = pipeline(p, n)
        op = pipe.operator
        M = pipe.config.u_precision
        rng = random.Random(31)
        for _ in range(8):
            z1 = USeries.from_coeffs(p, M, [rng.randrange(p) for _ in range(6)])
            z2 = USeries.from_coeffs(p, M, [rng.randrange(p) for _ in range(6)])
            lhs = op.apply(z1 * z2)
            rhs = op.apply(z1) * op.apply(z2)
            delta = lhs - rhs
            assert delta.valuation() is None or delta.valuation() >= delta.prec

    @pytest.mark.parametrize("p,n", [(2, 1), (3, 1), (2, 2)])
    def test_monomial_weight_formula(self, pipeline, p, n):
        """wt(image of u^t) = t (p-1)/d, by valuation multiplicativity."""
        pipe = pipeline(p, n)
        d = pipe.ring.d
        M = pipe.config.u_precision
        for t in (1, 2, 5):
            img = pipe.operator.apply(USeries.monomial(p, M, t))
            assert img.weight().as_fraction() == Fraction(t * (p - 1), d)


class TestDescentStep:
    def test_un_step_21(self, pipeline):
        """z = u at (2,1): the image has valuation 1 = 0*d + 1, so index 1
        carries a unit coefficient and one step lands on a unit."""
        pipe = pipeline(2, 1)
        M = pipe.config.u_precision
        z1, idx, _ = descent_step(USeries.monomial(2, M, 1), pipe.operator)
        assert idx == 1
        assert z1.weight() == 0

    def test_un_squared_step_21(self, pipeline):
        """z = u^2: image valuation 2 = 1*d + 0, index 0, weight 1 < 2."""
        pipe = pipeline(2, 1)
        M = pipe.config.u_precision
        z1, idx, _ = descent_step(USeries.monomial(2, M, 2), pipe.operator)
        assert idx == 0
        assert z1.weight() == 1

    def test_unit_rejected(self, pipeline):
        pipe = pipeline(2, 1)
        with pytest.raises(ValueError):
            descent_step(USeries.one(2, pipe.config.u_precision), pipe.operator)

    def test_precision_exhaustion_raises(self, pipeline):
        """An operator whose image is invisible at its precision must refuse
        rather than fabricate a zero."""
        pipe = pipeline(2, 1)
        ring = pipe.ring
        starved = DvrElement(ring, pipe.un_image_divided.coeffs, prec=1)
        op = ReducedPowerOperator(starved)
        with pytest.raises(PrecisionExhausted):
            descent_step(USeries.monomial(2, pipe.config.u_precision, 1), op)


class TestDescentRun:
    def test_unit_empty_trace(self, pipeline):
        pipe = pipeline(2, 1)
        z = USeries.one(2, pipe.config.u_precision)
        trace = descent_run(z, pipe.operator)
        assert trace.steps == []
        assert trace.terminal == z

    def test_un_single_step(self, pipeline):
        pipe = pipeline(2, 1)
        trace = descent_run(USeries.monomial(2, pipe.config.u_precision, 1), pipe.operator)
        assert len(trace.steps) == 1
        assert trace.terminal.weight() == 0

    @pytest.mark.parametrize("p,n", [(2, 1), (3, 1), (2, 2)])
    def test_random_batch(self, pipeline, p, n):
        pipe = pipeline(p, n)
        M = pipe.config.u_precision
        rng = random.Random(77)
        for _ in range(30):
            w = rng.randint(1, 20)
            coeffs = [0] * w + [rng.randrange(p) for _ in range(M - w)]
            coeffs[w] = rng.randrange(1, p)
            z = USeries(p, coeffs)
            trace = descent_run(z, pipe.operator)
            ws = trace.weights
            assert all(b < a for a, b in zip(ws, ws[1:]))
            assert trace.terminal.weight() == 0
            assert len(trace.steps) <= w * pipe.ring.d

    def test_zero_rejected(self, pipeline):
        pipe = pipeline(2, 1)
        with pytest.raises(ValueError):
            descent_run(USeries.zero(2, pipe.config.u_precision), pipe.operator)


def test_weight_rule_witness():
    w = weight_rule_witness(2, 8)
    assert w["min_rule_holds"]
    assert not w["additive_rule_holds"]
    assert w["wt_sum"] == min(w["wt_f1"], w["wt_f2"])
