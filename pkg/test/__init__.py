"""
Uncertain-lambda Heston Pricer - Test Package

Every *_test.py module is a pytest module that also exposes a
run_<name>_test() entry point; main.py discovers these and registers
them as test-<name> commands.

Test Modules:
    model_test: parameter validation and control discretization
    payoff_test: pay-off profiles and boundary slopes
    transform_test: coordinate maps and the trapezoid
    mesh_test: triangulation, tags and refinement
    assembly_test: coefficients, sign structure and consistency
    hjb_solver_test: time stepping, Howard iteration and ordering
    greeks_test: gradient recovery and point queries
    oracle_test: Monte Carlo and Fourier reference prices
    application_test: experiment runners, configuration and CLI
    settings_test: environment overrides
    coarse_case_test: case-study checks on a reduced mesh (default run)
    acceptance_test: case-study checks on the default mesh (marker: acceptance)
"""

__version__ = '1.0.0'
__author__ = 'Heston Pricer Team'

import os
import sys

# Add parent directory to path to allow imports from main project
_current_dir = os.path.dirname(os.path.abspath(__file__))
_parent_dir = os.path.dirname(_current_dir)
if _parent_dir not in sys.path:
    sys.path.insert(0, _parent_dir)


def run_module(path, *extra):
    """Run one test module through pytest and return its exit code"""
    import pytest
    setup_test_environment()
    return int(pytest.main([path, '-q', *extra]))


# Test utilities
def setup_test_environment():
    """Setup common test environment"""
    # Ensure project directories exist
    for directory in ('logs',):
        os.makedirs(os.path.join(_parent_dir, directory), exist_ok=True)


__all__ = ['run_module', 'setup_test_environment']
