"""
Uncertain-lambda Heston Pricer - Core Package

Numerical core: model constants, payoffs, the coordinate transform,
mesh, operator assembly, the HJB solver and gradient recovery. The
experiment runners live in core.application and are imported from there
explicitly.

Core Components:
    model: HestonParams, TruncatedDomain, ControlInterval, validate
    payoff: Payoff profiles and boundary data
    transform: CoordinateMap and TrapezoidDomain
    mesh: structured triangulation and refinement
    assembly: affine-in-lambda discrete operator
    hjb_solver: fixed-control and Howard time stepping
    greeks: gradient recovery and point queries
"""

__version__ = '1.0.0'

from .errors import (PricerError, ValidationError, DomainError, MeshError, AssemblyError,
                     SolverError, HowardConvergenceError, QuadratureError)
from .model import HestonParams, TruncatedDomain, ControlInterval, validate
from .payoff import Payoff
from .transform import CoordinateMap, TrapezoidDomain, build_trapezoid
from .mesh import Mesh, structured_triangulation, refine, build_mesh
from .assembly import DiscreteOperator, assemble, coefficients_at
from .hjb_solver import ValueSurface, solve_fixed, solve_hjb, howard_select
from .greeks import PricedSurface, recover_gradient, query, price_surface

__all__ = [
    'PricerError', 'ValidationError', 'DomainError', 'MeshError', 'AssemblyError',
    'SolverError', 'HowardConvergenceError', 'QuadratureError',
    'HestonParams', 'TruncatedDomain', 'ControlInterval', 'validate',
    'Payoff',
    'CoordinateMap', 'TrapezoidDomain', 'build_trapezoid',
    'Mesh', 'structured_triangulation', 'refine', 'build_mesh',
    'DiscreteOperator', 'assemble', 'coefficients_at',
    'ValueSurface', 'solve_fixed', 'solve_hjb', 'howard_select',
    'PricedSurface', 'recover_gradient', 'query', 'price_surface',
]
