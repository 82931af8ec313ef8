"""
Reference pricer tests: Fourier inversion and Monte Carlo

Functions:
    run_oracle_test: Run the oracle tests
"""
import math
from dataclasses import replace

import pytest

from core.errors import ValidationError
from core.payoff import Payoff
from oracle import McConfig, black_scholes_call, heston_cf_call, heston_cf_put, mc_price
from oracle.characteristic import log_price_cf


def test_characteristic_function_at_zero(params):
    assert abs(log_price_cf(0.0, params, 50.0, 0.09) - 1.0) < 1e-14


def test_martingale_property(params):
    # E[S_T] = S0 exp(rT)
    value = log_price_cf(-1j, params, 50.0, 0.09)
    assert value.real == pytest.approx(50.0 * math.exp(params.r * params.T), rel=1e-12)


def test_black_scholes_limit(params):
    flat = replace(params, rho=0.0, xi=1e-4, gamma=0.09, kappa=2.0)
    for S0 in (40.0, 50.0, 60.0):
        heston = heston_cf_call(flat, 50.0, S0, 0.09)
        bs = black_scholes_call(S0, 50.0, params.r, 0.3, params.T)
        assert abs(heston - bs) < 1e-4


@pytest.mark.parametrize('S0, v0', [(40.0, 0.09), (50.0, 0.09), (60.0, 0.25)])
def test_put_call_parity(params, S0, v0):
    call = heston_cf_call(params, 50.0, S0, v0)
    put = heston_cf_put(params, 50.0, S0, v0)
    assert call - put == pytest.approx(S0 - 50.0 * math.exp(-params.r * params.T), abs=1e-8)


def test_call_is_monotone_in_spot(params):
    prices = [heston_cf_call(params, 50.0, S0, 0.09) for S0 in (30.0, 40.0, 50.0, 60.0, 70.0)]
    assert all(b > a for a, b in zip(prices, prices[1:]))
    assert prices[0] >= max(30.0 - 50.0 * math.exp(-params.r * params.T), 0.0)


def test_invalid_fourier_inputs(params):
    with pytest.raises(ValidationError):
        heston_cf_call(params, -1.0, 50.0, 0.09)


def test_deterministic_dynamics(params):
    still = replace(params, gamma=0.0)
    payoff = Payoff.call(50.0)
    price, stderr = mc_price(still, payoff, -2.0, 55.0, 0.0, McConfig(n_paths=10_000, n_steps=20))
    exact = math.exp(-params.r * params.T) * payoff.evaluate(55.0 * math.exp(params.r * params.T))
    assert price == pytest.approx(exact, abs=1e-10)
    assert stderr < 1e-6


@pytest.mark.slow
def test_monte_carlo_matches_fourier_price(params):
    cf = heston_cf_call(params, 50.0, 50.0, 0.09)
    price, stderr = mc_price(params, Payoff.call(50.0), 0.0, 50.0, 0.09,
                             McConfig(n_paths=40_000, n_steps=100, seed=7))
    assert abs(price - cf) <= 3 * stderr


def test_fixed_seed_is_reproducible(params):
    cfg = McConfig(n_paths=5_000, n_steps=20, seed=99)
    first = mc_price(params, Payoff.butterfly(50, 20), -2.4, 50.0, 0.09, cfg)
    second = mc_price(params, Payoff.butterfly(50, 20), -2.4, 50.0, 0.09, cfg)
    assert first == second
    other = mc_price(params, Payoff.butterfly(50, 20), -2.4, 50.0, 0.09, replace(cfg, seed=100))
    assert other != first


def test_standard_error_scaling(params):
    payoff = Payoff.butterfly(50, 20)
    _, small = mc_price(params, payoff, -2.4, 50.0, 0.09, McConfig(n_paths=20_000, n_steps=20, seed=1))
    _, large = mc_price(params, payoff, -2.4, 50.0, 0.09, McConfig(n_paths=80_000, n_steps=20, seed=2))
    assert 1.6 <= small / large <= 2.4


def test_antithetic_pairs_reduce_error(params):
    payoff = Payoff.call(50.0)
    plain = mc_price(params, payoff, 0.0, 50.0, 0.09, McConfig(n_paths=20_000, n_steps=20, seed=3))
    paired = mc_price(params, payoff, 0.0, 50.0, 0.09,
                      McConfig(n_paths=20_000, n_steps=20, seed=3, antithetic=True))
    # variance ratio is about 0.74 at this seed
    assert (paired[1] / plain[1]) ** 2 <= 0.85
    assert abs(paired[0] - plain[0]) <= 4 * plain[1]


def test_invalid_monte_carlo_inputs(params):
    with pytest.raises(ValidationError):
        mc_price(params, Payoff.call(50.0), 0.0, -1.0, 0.09, McConfig(n_paths=100, n_steps=2))
    with pytest.raises(ValidationError):
        mc_price(params, Payoff.call(50.0), 0.0, 50.0, 0.09, McConfig(n_paths=1, n_steps=2))


def run_oracle_test():
    """Run the reference pricer tests"""
    from test import run_module
    return run_module(__file__)
