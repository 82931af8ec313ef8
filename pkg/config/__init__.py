"""
Configuration package for the uncertain-lambda Heston pricer
"""

__version__ = '1.0.0'

# Import configuration for easier access
from .settings import CONFIG
from .experiment import ExperimentConfig, EXPERIMENTS

# Define package exports
__all__ = ['CONFIG', 'ExperimentConfig', 'EXPERIMENTS']
