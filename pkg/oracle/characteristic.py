"""
Semi-analytic Heston prices for lambda = 0

Gil-Pelaez inversion of the log-price characteristic function in the
rotation-free ("little trap") form, integrated with adaptive quadrature.
"""
import logging
import math
import warnings

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.stats import norm

from config.settings import CONFIG
from core.errors import QuadratureError, ValidationError

logger = logging.getLogger('hjbpricer.oracle.characteristic')


def log_price_cf(u, params, S0, v0):
    """
    E[exp(i u ln S_T)] under the risk-neutral dynamics

    (beta - d) is evaluated as (beta^2 - d^2) / (beta + d) so that the
    small vol-of-vol limit stays accurate.
    """
    u = np.asarray(u, dtype=complex)
    kappa, gamma, xi, rho, r, T = params.kappa, params.gamma, params.xi, params.rho, params.r, params.T
    beta = kappa - 1j * rho * xi * u
    d = np.sqrt(beta ** 2 + xi ** 2 * (u ** 2 + 1j * u))
    q = -(u ** 2 + 1j * u) / (beta + d)
    g = xi ** 2 * q / (beta + d)
    e = np.exp(-d * T)
    log_term = np.log1p(g * (1.0 - e) / (1.0 - g)) / xi ** 2
    C = kappa * gamma * (q * T - 2.0 * log_term)
    D = q * (1.0 - e) / (1.0 - g * e)
    return np.exp(1j * u * (math.log(S0) + r * T) + C + D * v0)


def _integrate(integrand):
    with warnings.catch_warnings():
        warnings.simplefilter('error', IntegrationWarning)
        try:
            value, error = quad(integrand, 0.0, np.inf, epsabs=CONFIG['CF_ABS_TOLERANCE'],
                                limit=CONFIG['CF_INTEGRATION_LIMIT'])
        except IntegrationWarning as e:
            raise QuadratureError(f"Fourier integral did not converge: {e}")
    if not math.isfinite(value):
        raise QuadratureError("Fourier integral is not finite")
    return value


def exercise_probabilities(params, K, S0, v0):
    """
    (P1, P2): exercise probabilities under the stock and money-market measures
    """
    if not (K > 0 and S0 > 0 and v0 >= 0):
        raise ValidationError("need K > 0, S0 > 0 and v0 >= 0")
    log_k = math.log(K)
    forward = S0 * math.exp(params.r * params.T)

    def p1_integrand(u):
        value = np.exp(-1j * u * log_k) * log_price_cf(u - 1j, params, S0, v0) / (1j * u * forward)
        return float(np.real(value))

    def p2_integrand(u):
        value = np.exp(-1j * u * log_k) * log_price_cf(u, params, S0, v0) / (1j * u)
        return float(np.real(value))

    P1 = 0.5 + _integrate(p1_integrand) / math.pi
    P2 = 0.5 + _integrate(p2_integrand) / math.pi
    return P1, P2


def heston_cf_call(params, K, S0, v0):
    """
    European call price for lambda = 0

    Parameters:
    - params: HestonParams
    - K: strike
    - S0, v0: initial price and variance

    Returns:
    - price
    """
    P1, P2 = exercise_probabilities(params, K, S0, v0)
    price = S0 * P1 - K * math.exp(-params.r * params.T) * P2
    logger.debug(f"CF call K={K} S0={S0} v0={v0}: {price:.10g}")
    return price


def heston_cf_put(params, K, S0, v0):
    P1, P2 = exercise_probabilities(params, K, S0, v0)
    return K * math.exp(-params.r * params.T) * (1.0 - P2) - S0 * (1.0 - P1)


def black_scholes_call(S0, K, r, sigma, T):
    d1 = (math.log(S0 / K) + (r + 0.5 * sigma ** 2) * T) / (sigma * math.sqrt(T))
    d2 = d1 - sigma * math.sqrt(T)
    return S0 * norm.cdf(d1) - K * math.exp(-r * T) * norm.cdf(d2)
