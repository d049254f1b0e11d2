import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import dblquad, quad
from scipy.stats import norm

from mmlab.errors import UnsupportedPenaltyError
from mmlab.models import MidPriceModel, conditional_mean, conditional_variance
from mmlab.quotes import (
    _double_integrated_variance,
    MarketState,
    Penalty,
    QuotePair,
    StrategyParams,
    Utility,
    compute_quotes,
    exponential_base_spread,
    exponential_quotes,
    general_penalty_quotes,
    intensity,
    linear_penalty_quotes,
    linear_quotes,
    theta0_exponential,
    theta2_exponential,
    value_lower_bound,
)

MART = MidPriceModel.martingale(sigma=0.05)
OU = MidPriceModel.ou(a=1.0, mu=0.98, sigma=0.05)
ABM = MidPriceModel.abm(b=0.02, sigma=0.05)

prices = st.floats(0.5, 2.0)
inventories = st.integers(-200, 200)
times = st.floats(0.0, 1.0)


def P(**kw):
    base = dict(A=1500.0, k=100.0, T=1.0)
    base.update(kw)
    return StrategyParams(**base)


class TestLinear:
    def test_martingale(self):
        qp = linear_quotes(MART, P(), MarketState(0.0, 1.0))
        assert (qp.delta_ask, qp.delta_bid, qp.spread, qp.indifference) == (0.01, 0.01, 0.02, 1.0)

    def test_ou(self):
        qp = linear_quotes(OU, P(), MarketState(0.0, 1.03))
        assert qp.delta_ask == pytest.approx(-0.021606028, abs=1e-8)
        assert qp.delta_bid == pytest.approx(0.041606028, abs=1e-8)
        assert qp.indifference == pytest.approx(0.998393972058572, abs=1e-12)

    def test_abm_drift(self):
        qp = linear_quotes(ABM, P(), MarketState(0.0, 1.0))
        assert qp.delta_ask == pytest.approx(0.03)
        assert qp.delta_bid == pytest.approx(-0.01)
        assert qp.indifference == pytest.approx(1.02)

    @given(times, prices, inventories)
    def test_spread_exact_and_martingale_symmetry(self, t, s, q):
        qp = linear_quotes(MART, P(), MarketState(t, s, q))
        assert qp.spread == 2 / 100
        assert qp.delta_ask == qp.delta_bid
        assert qp.indifference == s


class TestLinearPenalty:
    def test_table_spread(self):
        assert linear_penalty_quotes(OU, P(eta=0.0001), MarketState(0.3, 1.1, 7)).spread == 0.0202

    def test_inventory_fifty(self):
        qp = linear_penalty_quotes(MART, P(eta=0.0001), MarketState(0.0, 1.0, 50))
        assert qp.indifference == pytest.approx(0.99)
        assert qp.delta_ask == pytest.approx(0.0001)
        assert qp.delta_bid == pytest.approx(0.0201)

    @given(times, prices, inventories, st.sampled_from([MART, OU, ABM]))
    def test_eta_zero_reduces_to_linear(self, t, s, q, model):
        state = MarketState(t, s, q)
        assert linear_penalty_quotes(model, P(eta=0.0), state) == linear_quotes(model, P(), state)

    @given(times, prices, inventories, st.floats(0, 0.01))
    def test_spread_independent_of_state(self, t, s, q, eta):
        qp = linear_penalty_quotes(OU, P(eta=eta), MarketState(t, s, q))
        assert qp.spread == 2.0 * (1 / 100 + eta)
        # the sum rounds at the scale of the larger distance, not of the spread
        scale = max(abs(qp.delta_ask), abs(qp.delta_bid))
        assert abs(qp.delta_ask + qp.delta_bid - qp.spread) <= 4 * math.ulp(scale)

    @given(times, prices, inventories)
    def test_indifference_slope(self, t, s, q):
        eta = 0.0004
        a = linear_penalty_quotes(OU, P(eta=eta), MarketState(t, s, q))
        b = linear_penalty_quotes(OU, P(eta=eta), MarketState(t, s, q + 1))
        assert b.indifference - a.indifference == pytest.approx(-2 * eta, abs=1e-12)
        assert b.delta_ask < a.delta_ask and b.delta_bid > a.delta_bid


class TestGeneralPenalty:
    @given(times, prices, inventories, st.sampled_from([MART, OU, ABM]))
    def test_pi_one_reduces(self, t, s, q, model):
        state = MarketState(t, s, q)
        params = P(eta=0.0003, penalty_pi="one")
        assert general_penalty_quotes(model, params, state) == linear_penalty_quotes(model, params, state)

    def test_square_penalty(self):
        qp = general_penalty_quotes(MART, P(eta=0.0001, penalty_pi="square"), MarketState(0.0, 1.0, 10))
        assert qp.indifference == pytest.approx(0.997995, abs=1e-12)
        assert qp.spread == 0.0202

    @given(times, prices, st.sampled_from([Penalty.ONE, Penalty.SQUARE]))
    def test_flat_inventory(self, t, s, pi):
        qp = general_penalty_quotes(OU, P(eta=0.001, penalty_pi=pi), MarketState(t, s, 0))
        assert qp.indifference == conditional_mean(OU, t, s, 1.0)

    def test_second_moment_against_quadrature(self):
        m, v = conditional_mean(OU, 0.2, 1.05, 1.0), conditional_variance(OU, 0.2, 1.0)
        oracle, _ = quad(lambda y: y * y * norm.pdf(y, m, math.sqrt(v)), m - 12 * math.sqrt(v),
                         m + 12 * math.sqrt(v))
        qp = general_penalty_quotes(OU, P(eta=0.001, penalty_pi="square"), MarketState(0.2, 1.05, 5))
        assert qp.indifference == pytest.approx(m - 2 * 5 * 0.001 * oracle, abs=1e-12)

    def test_unsupported_penalty(self):
        with pytest.raises(UnsupportedPenaltyError):
            P(utility="general_penalty", penalty_pi="cube")


class TestExponential:
    def test_theta2(self):
        assert theta2_exponential(MART, P(), 1.0) == 0.0
        assert theta2_exponential(MART, P(eta=0.002), 1.0) == -0.002
        assert theta2_exponential(MART, P(), 0.0) == pytest.approx(-0.00125, abs=1e-15)
        assert theta2_exponential(OU, P(), 0.0) == pytest.approx(-0.000540415447977117, abs=1e-15)

    @pytest.mark.parametrize("model,beta", [
        (MART, lambda xi: 1.0),
        (OU, lambda xi: math.exp(-(1.0 - xi))),
    ])
    def test_theta2_against_quadrature(self, model, beta):
        for t in (0.0, 0.4, 0.9):
            integral, _ = quad(lambda xi: 0.05**2 * beta(xi) ** 2, t, 1.0, epsabs=1e-14)
            assert theta2_exponential(model, P(gamma=0.7, eta=1e-4), t) == pytest.approx(
                -1e-4 - 0.35 * integral, abs=1e-10)

    def test_avellaneda_stoikov_value(self):
        qp = exponential_quotes(MART, P(gamma=1.0), MarketState(0.0, 1.0, 0))
        assert qp.delta_ask == pytest.approx(0.011200330853168091, abs=1e-15)
        assert qp.delta_bid == qp.delta_ask

    @given(times, prices, inventories, st.floats(0.01, 5.0), st.floats(0.01, 0.2))
    def test_avellaneda_stoikov_boxed_form(self, t, s, q, g, sigma):
        # boxed ABM forms: r = s - q g sigma^2 (T-t), psi = 2/g log(1+g/k) + g sigma^2 (T-t)
        model = MidPriceModel.martingale(sigma=sigma)
        qp = exponential_quotes(model, P(gamma=g), MarketState(t, s, q))
        tau = 1.0 - t
        base = math.log1p(g / 100) / g
        half = base + 0.5 * g * sigma**2 * tau
        skew = -q * g * sigma**2 * tau
        # half + skew may cancel, so compare on the scale of the terms
        tol = 8 * math.ulp(max(abs(half), abs(skew), abs(s)))
        assert qp.delta_ask == pytest.approx(half + skew, rel=0, abs=tol)
        assert qp.delta_bid == pytest.approx(half - skew, rel=0, abs=tol)
        assert qp.spread == pytest.approx(2 * base + g * sigma**2 * tau, rel=1e-12)
        assert qp.indifference == pytest.approx(s - q * g * sigma**2 * tau, rel=0, abs=tol)

    @given(times, prices, inventories)
    def test_ou_boxed_form(self, t, s, q):
        g, sig, a, mu = 1.0, 0.05, 1.0, 0.98
        tau = 1.0 - t
        v = sig**2 / (2 * a) * (1 - math.exp(-2 * a * tau))
        theta1 = s * math.exp(-a * tau) + mu * (1 - math.exp(-a * tau))
        qp = exponential_quotes(OU, P(gamma=g), MarketState(t, s, q))
        assert qp.delta_ask == pytest.approx(
            math.log(1 + g / 100) / g + g * v / 2 + theta1 - s - q * g * v, abs=1e-13)
        assert qp.delta_bid == pytest.approx(
            math.log(1 + g / 100) / g + g * v / 2 - (theta1 - s - q * g * v), abs=1e-13)

    def test_ou_inventory_ten(self):
        qp = exponential_quotes(OU, P(gamma=1.0), MarketState(0.0, 1.0, 10))
        assert qp.delta_ask == pytest.approx(-0.0129600, abs=1e-6)

    @given(prices, inventories)
    def test_terminal_quotes(self, s, q):
        qp = exponential_quotes(OU, P(gamma=0.5), MarketState(1.0, s, q))
        assert qp.delta_ask == qp.delta_bid == math.log1p(0.5 / 100) / 0.5
        assert qp.indifference == s

    @given(times, prices, inventories)
    def test_spread_independent_of_state(self, t, s, q):
        p = P(gamma=0.3, eta=1e-4)
        qp = exponential_quotes(OU, p, MarketState(t, s, q))
        assert qp.spread == 2 * (exponential_base_spread(p) - theta2_exponential(OU, p, t))

    def test_gamma_to_zero_limit(self):
        vals = [exponential_base_spread(P(gamma=g)) for g in (1.0, 1e-3, 1e-6)]
        assert vals[0] < vals[1] < vals[2] < 1 / 100
        assert vals[2] == pytest.approx(1 / 100, rel=1e-6)

    def test_negative_quotes_pass_through(self):
        qp = exponential_quotes(OU, P(gamma=1.0), MarketState(0.0, 1.0, 10))
        assert qp.delta_ask < 0

    def test_gamma_required(self):
        with pytest.raises(ValueError):
            P(gamma=0.0, utility=Utility.EXPONENTIAL)


class TestValueBound:
    def test_linear_terminal(self):
        assert value_lower_bound(MART, P(), MarketState(1.0, 1.1, 3, 2.0)) == pytest.approx(2.0 + 3 * 1.1)

    def test_linear_martingale(self):
        got = value_lower_bound(MART, P(), MarketState(0.0, 1.0, 2, 0.5))
        assert got == pytest.approx(0.5 + 2 * 1500 / (math.e * 100) + 2.0)

    def test_linear_penalty_flat(self):
        got = value_lower_bound(MART, P(eta=0.0001, utility="linear_penalty"), MarketState(0.0, 1.0))
        assert got == pytest.approx(10.981201318967555, rel=1e-12)

    def test_exponential_terminal(self):
        p = P(gamma=0.8, eta=0.001, utility="exponential")
        got = value_lower_bound(OU, p, MarketState(1.0, 1.2, 4, 0.3))
        assert got == pytest.approx(-math.exp(-0.8 * (0.3 + 4 * 1.2 - 0.001 * 16)), rel=1e-14)

    def test_theta0_against_dblquad(self):
        p = P(gamma=0.5, eta=0.0002, utility="exponential")
        A, k, g = 1500.0, 100.0, 0.5
        for model, beta in ((MART, lambda xi: 1.0), (OU, lambda xi: math.exp(-(1.0 - xi)))):
            inner, _ = dblquad(lambda xi, z: 0.05**2 * beta(xi) ** 2, 0.2, 1.0, lambda z: z,
                               lambda z: 1.0, epsabs=1e-14)
            oracle = (2 * A / (k + g) * (1 - k / g * math.log(1 + g / k) - k * 0.0002) * 0.8
                      - k * g * A / (k + g) * inner)
            assert theta0_exponential(model, p, 0.2) == pytest.approx(oracle, rel=1e-10)

    def test_schedule_double_integral_uses_quadrature(self):
        const = MidPriceModel.ou(a=1.0, mu=1.0, sigma=0.05)
        piece = MidPriceModel.ou(a=1.0, mu=1.0, sigma=0.05, sigma_schedule=((0.0, 0.05), (0.5, 0.05)))
        assert _double_integrated_variance(piece, 0.0, 1.0) == pytest.approx(
            _double_integrated_variance(const, 0.0, 1.0), abs=1e-10)

    def test_schedule_double_integral_against_dblquad(self):
        sched = ((0.0, 0.05), (0.3, 0.02), (0.7, 0.08))
        model = MidPriceModel.ou(a=2.0, mu=1.0, sigma=0.05, sigma_schedule=sched)
        # swapping the order of integration leaves a single integral with known kinks
        oracle, _ = quad(lambda xi: (xi - 0.1) * model.sigma_at(xi) ** 2 * math.exp(-4.0 * (1.0 - xi)),
                         0.1, 1.0, points=[0.3, 0.7], epsabs=1e-15)
        assert _double_integrated_variance(model, 0.1, 1.0) == pytest.approx(oracle, abs=2e-10)

    def test_general_penalty_against_quadrature(self):
        eta, q, x, t, s = 0.001, 3, 0.2, 0.25, 1.04
        p = P(eta=eta, utility="general_penalty", penalty_pi="square")
        tau = 1.0 - t

        # oracle: integrate E[S(T)^2 | S(xi)] over the law of S(xi) and then over xi
        def inner(xi):
            m_xi, v_xi = conditional_mean(OU, t, s, xi), conditional_variance(OU, t, xi)
            sd = math.sqrt(v_xi) if v_xi > 0 else 0.0
            if sd == 0.0:
                return conditional_mean(OU, xi, s, 1.0) ** 2 + conditional_variance(OU, xi, 1.0)
            f = lambda y: (conditional_mean(OU, xi, y, 1.0) ** 2 + conditional_variance(OU, xi, 1.0)) \
                * norm.pdf(y, m_xi, sd)
            return quad(f, m_xi - 10 * sd, m_xi + 10 * sd)[0]

        running, _ = quad(inner, t, 1.0, epsabs=1e-12)
        e_pi = conditional_mean(OU, t, s, 1.0) ** 2 + conditional_variance(OU, t, 1.0)
        oracle = (x + 2 * 1500 / (math.e * 100) * tau - eta * 1500 / math.e * running
                  + q * conditional_mean(OU, t, s, 1.0) - eta * q * q * e_pi)
        assert value_lower_bound(OU, p, MarketState(t, s, q, x)) == pytest.approx(oracle, rel=1e-9)


def test_intensity():
    p = P()
    assert intensity(p, 0.0) == 1500.0
    assert intensity(p, 0.01) == pytest.approx(551.8191617571636, rel=1e-14)
    assert intensity(p, 0.02) == pytest.approx(203.00292485491906, rel=1e-14)
    assert intensity(p, -0.01) > 1500.0


def test_compute_quotes_vectorised_state():
    s = np.array([0.9, 1.0, 1.1])
    q = np.array([-3, 0, 4])
    qp = compute_quotes(OU, P(eta=0.001, utility="linear_penalty"), MarketState(0.1, s, q))
    for i in range(3):
        one = linear_penalty_quotes(OU, P(eta=0.001), MarketState(0.1, float(s[i]), int(q[i])))
        assert qp.delta_ask[i] == pytest.approx(one.delta_ask)


def test_quote_pair_prices():
    qp = QuotePair.from_half_spread(0.01, 0.002, 1.0)
    assert qp.ask == pytest.approx(1.0 + 0.012)
    assert qp.bid == pytest.approx(1.0 - 0.008)
