"""
Independent reference pricers used to check the PDE solver
"""

__version__ = '1.0.0'

from .characteristic import heston_cf_call, heston_cf_put, black_scholes_call
from .monte_carlo import McConfig, mc_price

__all__ = ['heston_cf_call', 'heston_cf_put', 'black_scholes_call', 'McConfig', 'mc_price']
