"""
Terminal pay-off profiles and the boundary data they induce
"""
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

KINDS = ('call', 'put', 'butterfly', 'straddle')

_SLOPES = {'call': 1.0, 'put': 0.0, 'butterfly': 0.0, 'straddle': 1.0}


def _ramp(x):
    return np.maximum(0.0, x)


def _step(x):
    # right derivative of max(0, x)
    return np.where(x >= 0.0, 1.0, 0.0)


@dataclass(frozen=True)
class Payoff:
    """
    Piecewise linear pay-off Lambda(S)

    Parameters:
    - kind: 'call', 'put', 'butterfly' or 'straddle'
    - K: strike
    - a: half-width of the butterfly (ignored otherwise)
    """
    kind: str
    K: float
    a: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown payoff kind '{self.kind}'")
        if not self.K > 0:
            raise ValidationError("strike must be positive")
        if self.kind == 'butterfly' and not 0 < self.a < self.K:
            raise ValidationError("butterfly half-width must satisfy 0 < a < K")

    @classmethod
    def call(cls, K):
        return cls('call', K)

    @classmethod
    def put(cls, K):
        return cls('put', K)

    @classmethod
    def butterfly(cls, K, a):
        return cls('butterfly', K, a)

    @classmethod
    def straddle(cls, K):
        return cls('straddle', K)

    def evaluate(self, S):
        """
        Pay-off value

        Parameters:
        - S: scalar or array of prices, S >= 0

        Returns:
        - value with the shape of S
        """
        S = np.asarray(S, dtype=float)
        K = self.K
        if self.kind == 'call':
            out = _ramp(S - K)
        elif self.kind == 'put':
            out = _ramp(K - S)
        elif self.kind == 'butterfly':
            a = self.a
            out = _ramp(S - (K - a)) - 2.0 * _ramp(S - K) + _ramp(S - (K + a))
        else:
            out = _ramp(S - K) + _ramp(K - S)
        return out if out.ndim else float(out)

    def derivative(self, S):
        """Right one-sided derivative dLambda/dS"""
        S = np.asarray(S, dtype=float)
        K = self.K
        if self.kind == 'call':
            out = _step(S - K)
        elif self.kind == 'put':
            out = _step(S - K) - 1.0
        elif self.kind == 'butterfly':
            a = self.a
            out = _step(S - (K - a)) - 2.0 * _step(S - K) + _step(S - (K + a))
        else:
            out = 2.0 * _step(S - K) - 1.0
        return out if out.ndim else float(out)

    def slope_in_log_coordinate(self, x):
        """
        dLambda(S(x))/dx with S = e^x

        Parameters:
        - x: log-price

        Returns:
        - e^x * Lambda'(e^x)
        """
        S = np.exp(np.asarray(x, dtype=float))
        out = S * self.derivative(S)
        return out if np.ndim(out) else float(out)

    @property
    def value_at_zero(self):
        return float(self.evaluate(0.0))

    @property
    def asymptotic_slope(self):
        return _SLOPES[self.kind]

    @property
    def maximum(self):
        """Supremum of Lambda over [0, inf), None if unbounded"""
        if self.kind == 'butterfly':
            return self.a
        if self.kind == 'put':
            return self.K
        return None

    def to_dict(self):
        data = {'kind': self.kind, 'K': self.K}
        if self.kind == 'butterfly':
            data['a'] = self.a
        return data

    @classmethod
    def from_dict(cls, data):
        return cls(data['kind'], float(data['K']), float(data.get('a', 0.0)))
