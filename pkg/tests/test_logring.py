import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kam_atlas.logring import (
    DiffOperator,
    LogElement,
    RingCapError,
    expand_operator,
    leading_constant,
    operator_order,
)

FOOTNOTE_N2 = ("z^6*D^7 + 18*z^5*D^6 + 98*z^4*D^5 + 184*z^3*D^4 "
               "+ 100*z^2*D^3 + 8*z*D^2")


class TestRingOps:
    def test_monomial_product(self):
        zlz = LogElement.monomial(1, 1)
        assert str(zlz * zlz) == "z^2 * (1)*log(z)^2"

    def test_derivative_of_z_log_z(self):
        d = LogElement.monomial(1, 1).derivative()
        assert d == LogElement.monomial(0, 0) + LogElement.monomial(0, 1)

    def test_euler_on_monomials(self):
        # L(z^m log^k z) = m z^m log^k z + k z^m log^{k-1} z
        for m in range(0, 4):
            for k in range(0, 4):
                e = LogElement.monomial(m, k)
                expected = LogElement.monomial(m, k, m)
                if k >= 1:
                    expected = expected + LogElement.monomial(m, k - 1, k)
                assert e.zdz() == expected

    def test_order_bookkeeping(self):
        # orders multiply as (h, p) (k, q) -> (h + k, p + q)
        a = LogElement.monomial(2, 1, Fraction(3, 2))
        b = LogElement.monomial(-1, 2, Fraction(1, 3))
        assert (a * b).order() == (1, 3)

    def test_negative_exponents_and_eval(self):
        f = LogElement.monomial(-2, 1, 3)
        z = 0.37
        assert f.eval(z) == pytest.approx(3 * math.log(z) / z ** 2, rel=1e-14)


@st.composite
def log_elements(draw):
    h = draw(st.integers(min_value=-3, max_value=3))
    n_logs = draw(st.integers(min_value=1, max_value=3))
    logs = []
    for _ in range(n_logs):
        deg = draw(st.integers(min_value=0, max_value=3))
        poly = tuple(Fraction(draw(st.integers(-9, 9)),
                              draw(st.integers(1, 9)))
                     for _ in range(deg + 1))
        logs.append(poly)
    return LogElement(h, tuple(logs))


class TestRingLaws:
    @given(log_elements(), log_elements(), log_elements())
    @settings(max_examples=60, deadline=None)
    def test_associativity_and_distributivity(self, a, b, c):
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert (a + b) + c == a + (b + c)

    @given(log_elements(), log_elements())
    @settings(max_examples=60, deadline=None)
    def test_commutativity_and_leibniz(self, a, b):
        assert a * b == b * a
        assert (a * b).derivative() == a.derivative() * b + a * b.derivative()

    @given(log_elements())
    @settings(max_examples=40, deadline=None)
    def test_additive_inverse(self, a):
        assert (a - a).is_zero


class TestOperatorExpansion:
    def test_footnote_polynomial_exactly(self):
        op = expand_operator(2)
        assert str(op) == FOOTNOTE_N2
        coeffs = {j: tuple(op.coefficient(j)) for j, _ in op.terms}
        assert coeffs[7] == (0, 0, 0, 0, 0, 0, 1)
        assert coeffs[6] == (0, 0, 0, 0, 0, 18)
        assert coeffs[5] == (0, 0, 0, 0, 98)
        assert coeffs[4] == (0, 0, 0, 184)
        assert coeffs[3] == (0, 0, 100)
        assert coeffs[2] == (0, 8)

    def test_order_formula(self):
        assert expand_operator(2).order == operator_order(2) == 7
        assert operator_order(3) == 20

    def test_lowest_derivative_index(self):
        op = expand_operator(2)
        assert op.lowest_order == 2  # nbar + 1

    def test_rejects_small_dimension(self):
        with pytest.raises(ValueError):
            expand_operator(1)

    def test_consistency_on_monomials(self):
        # the expanded form agrees with the step-by-step composition exactly
        op = expand_operator(2)
        nbar = 1
        for p in range(0, 9):
            f = LogElement.monomial(p, 0)
            g = f
            for _ in range(nbar):
                for _ in range(3 * nbar):
                    g = g.zdz()
                g = g.derivative()
            for _ in range(3 * nbar):
                g = g.zdz()
            assert op.apply(f) == g

    def test_numeric_consistency_on_exponential(self):
        # apply the expanded operator to exp(z) via its derivatives and
        # compare with the compositional route evaluated symbolically as
        # (polynomial) * exp(z)
        op = expand_operator(2)

        def euler(poly):      # L(p e^z) = z (p' + p) e^z
            dp = [i * c for i, c in enumerate(poly)][1:] or [0.0]
            dp = dp + [0.0] * (len(poly) - len(dp))
            s = [a + b for a, b in zip(dp, poly)]
            return [0.0] + s

        def ddz(poly):
            dp = [i * c for i, c in enumerate(poly)][1:] or [0.0]
            dp = dp + [0.0] * (len(poly) - len(dp))
            return [a + b for a, b in zip(dp, poly)] + [0.0]

        poly = [1.0]
        for _ in range(3):
            poly = euler(poly)
        poly = ddz(poly)
        for _ in range(3):
            poly = euler(poly)

        for z in (0.1, 0.37, 1.0):
            direct = sum(c * z ** i for i, c in enumerate(poly)) * math.exp(z)
            via_expansion = op.apply_numeric(lambda j: math.exp(z), z)
            assert via_expansion == pytest.approx(direct, rel=1e-10)


class TestLeadingConstant:
    def test_reference_values(self):
        c, res = leading_constant(1, 3)
        assert c == 6
        assert res.is_zero or res.eval(1e-8) == pytest.approx(0.0, abs=1e-6)
        assert leading_constant(0, 0)[0] == 1
        assert leading_constant(2, 6)[0] == 92160

    def test_factorial_identity_full_range(self):
        for m in range(0, 4):
            for k in range(0, 10):
                c, res = leading_constant(m, k)
                assert c == Fraction(math.factorial(m)) ** (k + 1) * math.factorial(k)
                if not res.is_zero:
                    assert res.h >= 1          # vanishes as z -> 0+
                    assert res.log_order <= max(k - 1, 0)

    def test_residual_vanishes_numerically(self):
        _, res = leading_constant(2, 6)
        if not res.is_zero:
            assert abs(res.eval(1e-8)) < 1e-5


class TestCaps:
    def test_degree_cap(self):
        with pytest.raises(RingCapError):
            LogElement(0, ((Fraction(1),) * 70,))

    def test_log_cap(self):
        with pytest.raises(RingCapError):
            LogElement.monomial(0, 40)
