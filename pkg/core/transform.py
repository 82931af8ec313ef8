"""
Change of variables (S, v) -> (x, v) -> (y, z) and the trapezoidal computational domain

x = ln S, y = x - (rho/xi) v, z = (sqrt(1 - rho^2)/xi) v. In (y, z) the
second-order part of the pricing operator is isotropic.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, MeshError

logger = logging.getLogger('hjbpricer.core.transform')

TAGS = ('interior', 'D', 'Rt', 'R2', 'R1')
INTERIOR, DIRICHLET, BOTTOM, RIGHT, TOP = range(5)


@dataclass(frozen=True)
class CoordinateMap:
    rho: float
    xi: float

    @classmethod
    def from_params(cls, params):
        return cls(rho=params.rho, xi=params.xi)

    @property
    def shear(self):
        return self.rho / self.xi

    @property
    def z_scale(self):
        return math.sqrt(1.0 - self.rho ** 2) / self.xi

    def to_transformed(self, S, v):
        """
        Map (S, v) to (y, z)

        Parameters:
        - S: price(s), strictly positive
        - v: variance(s), nonnegative

        Returns:
        - (y, z) with the broadcast shape of the inputs
        """
        S = np.asarray(S, dtype=float)
        v = np.asarray(v, dtype=float)
        if np.any(S <= 0):
            raise DomainError("price must be positive")
        if np.any(v < 0):
            raise DomainError("variance must be nonnegative")
        y = np.log(S) - self.shear * v
        z = self.z_scale * v
        return _unwrap(y), _unwrap(z)

    def from_transformed(self, y, z):
        """Inverse map (y, z) -> (S, v); z must be nonnegative"""
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        if np.any(z < 0):
            raise DomainError("z must be nonnegative")
        v = z / self.z_scale
        S = np.exp(y + self.shear * v)
        return _unwrap(S), _unwrap(v)

    def delta_from_gradient(self, grad_w, S):
        """
        Delta dV/dS from (dw/dy, dw/dz)

        Since dV/dx = dw/dy and dV/dx = S dV/dS, Delta = (1/S) dw/dy.
        """
        S = np.asarray(S, dtype=float)
        if np.any(S <= 0):
            raise DomainError("price must be positive")
        dw_dy = np.asarray(grad_w, dtype=float)[..., 0]
        return _unwrap(dw_dy / S)

    def vega_direction(self):
        """Coefficients (a, b) with dV/dv = a dw/dy + b dw/dz"""
        return np.array([-self.shear, self.z_scale])


def _unwrap(a):
    return a if np.ndim(a) else float(a)


@dataclass(frozen=True)
class TrapezoidDomain:
    """
    Image of the truncated rectangle in (y, z)

    The left (D) and right (R2) edges are lines of constant x, the bottom
    (Rt) lies on z = 0 and the top (R1) on z = z_scale * v_max.
    """
    x_min: float
    x_max: float
    height: float
    slope: float

    @property
    def corners(self):
        """Bottom-left, bottom-right, top-right, top-left"""
        h = self.height
        return np.array([
            [self.x_min, 0.0],
            [self.x_max, 0.0],
            [self.x_max + self.slope * h, h],
            [self.x_min + self.slope * h, h],
        ])

    @property
    def width(self):
        return self.x_max - self.x_min

    @property
    def area(self):
        return self.width * self.height

    def left_y(self, z):
        return self.x_min + self.slope * np.asarray(z, dtype=float)

    def right_y(self, z):
        return self.x_max + self.slope * np.asarray(z, dtype=float)

    def classify(self, points, tolerance=1e-9):
        """
        Region tag per point

        Corner precedence is D > Rt > R2 > R1; points off the boundary are
        interior.

        Returns:
        - integer array of tag codes (indices into TAGS)
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        y, z = pts[:, 0], pts[:, 1]
        scale = tolerance * max(1.0, self.width, self.height)
        tags = np.full(len(pts), INTERIOR, dtype=np.int8)
        tags[np.abs(z - self.height) <= scale] = TOP
        tags[np.abs(y - self.right_y(z)) <= scale] = RIGHT
        tags[np.abs(z) <= scale] = BOTTOM
        tags[np.abs(y - self.left_y(z)) <= scale] = DIRICHLET
        return tags

    def contains(self, points, tolerance=1e-9):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        y, z = pts[:, 0], pts[:, 1]
        scale = tolerance * max(1.0, self.width, self.height)
        return (
            (z >= -scale) & (z <= self.height + scale)
            & (y >= self.left_y(z) - scale) & (y <= self.right_y(z) + scale)
        )


def build_trapezoid(domain, cmap):
    """
    Construct the computational domain for a truncated rectangle

    Parameters:
    - domain: TruncatedDomain
    - cmap: CoordinateMap

    Returns:
    - TrapezoidDomain whose corners are the images of the rectangle corners
    """
    x_min = math.log(domain.s_min)
    x_max = math.log(domain.s_max)
    height = cmap.z_scale * domain.v_max
    if not x_max > x_min or not height > 0:
        raise MeshError("degenerate computational domain")
    # along a line of constant x: y = x - shear * z / z_scale
    slope = -cmap.shear / cmap.z_scale
    trap = TrapezoidDomain(x_min=x_min, x_max=x_max, height=height, slope=slope)
    logger.debug(f"Trapezoid corners: {np.round(trap.corners, 4).tolist()}")
    return trap
