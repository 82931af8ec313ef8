"""
Model constants, truncated domain and the uncertainty set for lambda
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

logger = logging.getLogger('hjbpricer.core.model')


@dataclass(frozen=True)
class HestonParams:
    """
    Market and model constants under the risk-neutral measure

    Parameters:
    - r: risk-free rate
    - kappa: mean-reversion rate of the variance
    - gamma: long-term variance mean
    - xi: volatility of volatility
    - rho: correlation between stock and variance noise
    - T: maturity
    """
    r: float
    kappa: float
    gamma: float
    xi: float
    rho: float
    T: float

    @classmethod
    def case_study(cls):
        return cls(r=0.03, kappa=7.0, gamma=0.3, xi=0.7, rho=0.5, T=0.5)


@dataclass(frozen=True)
class TruncatedDomain:
    """Rectangle [s_min, s_max] x [0, v_max] in (S, v)"""
    s_min: float
    s_max: float
    v_max: float

    @classmethod
    def case_study(cls):
        return cls(s_min=1.0, s_max=100.0, v_max=3.0)


@dataclass(frozen=True)
class ControlInterval:
    """
    Interval L = [lambda_min, lambda_max] for the market price of volatility risk

    n_points is the size of the finite control discretization; the
    discretization always contains both endpoints, and zero when the
    interval straddles it.
    """
    lambda_min: float
    lambda_max: float
    n_points: int = 2

    @classmethod
    def singleton(cls, value):
        return cls(value, value, 1)

    @classmethod
    def symmetric(cls, center, diameter, n_points=2):
        half = 0.5 * diameter
        return cls(center - half, center + half, n_points)

    @property
    def is_singleton(self):
        return self.lambda_min == self.lambda_max

    @property
    def straddles_zero(self):
        return self.lambda_min < 0.0 < self.lambda_max

    @property
    def diameter(self):
        return self.lambda_max - self.lambda_min

    def points(self):
        """
        Control discretization, ascending

        Returns:
        - numpy array with exact endpoints; a single value for a singleton interval
        """
        if self.is_singleton:
            return np.array([float(self.lambda_min)])
        pts = np.linspace(self.lambda_min, self.lambda_max, max(self.n_points, 2))
        pts[0] = self.lambda_min
        pts[-1] = self.lambda_max
        if self.straddles_zero:
            # the operator is affine on each sign piece, so 0 is an extreme control
            pts = np.union1d(pts, [0.0])
        return pts

    def contains(self, value, tolerance=1e-14):
        return self.lambda_min - tolerance <= value <= self.lambda_max + tolerance


def feller_satisfied(params):
    """Feller condition 2 kappa gamma >= xi^2"""
    return 2.0 * params.kappa * params.gamma >= params.xi ** 2


def _check_finite(name, value):
    if not math.isfinite(value):
        raise ValidationError(f"{name} is not finite")


def validate(params, domain, control):
    """
    Check all parameter invariants

    Parameters:
    - params: HestonParams
    - domain: TruncatedDomain
    - control: ControlInterval

    Returns:
    - the (params, domain, control) triple unchanged

    Raises:
    - ValidationError naming the first violated invariant
    """
    for name in ('r', 'kappa', 'gamma', 'xi', 'rho', 'T'):
        _check_finite(name, getattr(params, name))
    if not params.xi > 0:
        raise ValidationError("xi must be positive")
    if not params.kappa > 0:
        raise ValidationError("kappa must be positive")
    if not params.gamma >= 0:
        raise ValidationError("gamma must be nonnegative")
    if not params.T > 0:
        raise ValidationError("T must be positive")
    if not -1.0 < params.rho < 1.0:
        raise ValidationError("rho out of (-1,1)")

    for name in ('s_min', 's_max', 'v_max'):
        _check_finite(name, getattr(domain, name))
    if not 0 < domain.s_min < domain.s_max:
        raise ValidationError("price range must satisfy 0 < s_min < s_max")
    if not domain.v_max > 0:
        raise ValidationError("v_max must be positive")

    _check_finite('lambda_min', control.lambda_min)
    _check_finite('lambda_max', control.lambda_max)
    if control.lambda_min > control.lambda_max:
        raise ValidationError("empty control interval")
    if control.n_points < 1:
        raise ValidationError("n_points must be positive")

    if not feller_satisfied(params):
        logger.warning(
            f"Feller condition violated: 2*kappa*gamma={2 * params.kappa * params.gamma:.4g} "
            f"< xi^2={params.xi ** 2:.4g}"
        )
    return params, domain, control
