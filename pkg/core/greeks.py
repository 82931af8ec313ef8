"""
Gradient recovery and point queries in (S, v)
"""
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError

logger = logging.getLogger('hjbpricer.core.greeks')

BARYCENTRIC_TOLERANCE = 1e-10


@dataclass(frozen=True)
class PricedSurface:
    """Value, Delta and selected control at sample points (S, v) for one time t"""
    S: np.ndarray
    v: np.ndarray
    t: float
    value: np.ndarray
    delta: np.ndarray
    control: np.ndarray


def triangle_gradients(mesh, w):
    """Constant P1 gradient (dw/dy, dw/dz) on every triangle"""
    p = mesh.nodes[mesh.triangles]
    jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=1)
    wt = np.asarray(w)[mesh.triangles]
    dw = np.column_stack([wt[:, 1] - wt[:, 0], wt[:, 2] - wt[:, 0]])
    return np.linalg.solve(jac, dw[:, :, None])[:, :, 0]


def nodal_gradients(mesh, w):
    """Area-weighted average of the triangle gradients around each node"""
    grads = triangle_gradients(mesh, w)
    areas = mesh.areas()
    idx = mesh.triangles.reshape(-1)
    weight = np.repeat(areas, 3)
    total = np.bincount(idx, weights=weight, minlength=mesh.n_nodes)
    gy = np.bincount(idx, weights=np.repeat(areas * grads[:, 0], 3), minlength=mesh.n_nodes)
    gz = np.bincount(idx, weights=np.repeat(areas * grads[:, 1], 3), minlength=mesh.n_nodes)
    return np.column_stack([gy, gz]) / total[:, None]


def recover_gradient(surface, mesh, t):
    """
    Nodal gradient of w at time t

    Parameters:
    - surface: ValueSurface
    - mesh: the mesh the surface lives on
    - t: a stored time of the surface

    Returns:
    - (N, 2) array of (dw/dy, dw/dz)
    """
    return nodal_gradients(mesh, surface.at(t))


class PointLocator:
    """Triangle lookup through a KD-tree over centroids"""

    def __init__(self, mesh, neighbours=12):
        self.mesh = mesh
        self.corners = mesh.nodes[mesh.triangles]
        self.tree = cKDTree(self.corners.mean(axis=1))
        self.neighbours = min(neighbours, mesh.n_triangles)
        e1 = self.corners[:, 1] - self.corners[:, 0]
        e2 = self.corners[:, 2] - self.corners[:, 0]
        self.det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]

    def barycentric(self, tri, point):
        c = self.corners[tri]
        d = point - c[..., 0, :]
        e1 = c[..., 1, :] - c[..., 0, :]
        e2 = c[..., 2, :] - c[..., 0, :]
        l1 = (d[..., 0] * e2[..., 1] - d[..., 1] * e2[..., 0]) / self.det[tri]
        l2 = (e1[..., 0] * d[..., 1] - e1[..., 1] * d[..., 0]) / self.det[tri]
        return np.stack([1.0 - l1 - l2, l1, l2], axis=-1)

    def locate(self, points):
        """
        Containing triangle and barycentric weights for each point

        Points inside the domain that miss every candidate by rounding are
        assigned to the candidate with the least negative weight.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        _, cand = self.tree.query(points, k=self.neighbours)
        cand = cand.reshape(len(points), -1)
        lam = self.barycentric(cand, points[:, None, :])
        worst = lam.min(axis=2)
        choice = np.argmax(worst, axis=1)
        rows = np.arange(len(points))
        tri = cand[rows, choice]
        weights = lam[rows, choice]
        misses = np.flatnonzero(worst[rows, choice] < -BARYCENTRIC_TOLERANCE)
        for m in misses:
            every = np.arange(self.mesh.n_triangles)
            all_lam = self.barycentric(every, points[m][None, :])
            best = int(np.argmax(all_lam.min(axis=1)))
            tri[m] = best
            weights[m] = all_lam[best]
        return tri, weights


@lru_cache(maxsize=8)
def _locator(mesh):
    return PointLocator(mesh)


def _to_domain(surface, S, v):
    cmap = surface.coordinate_map
    S = np.atleast_1d(np.asarray(S, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    try:
        y, z = cmap.to_transformed(S, v)
    except DomainError as e:
        raise DomainError(f"query point outside the truncated domain: {e}")
    pts = np.column_stack([np.atleast_1d(y), np.atleast_1d(z)])
    inside = surface.mesh.trapezoid.contains(pts)
    if not np.all(inside):
        k = int(np.flatnonzero(~inside)[0])
        raise DomainError(f"query point (S={S[k]}, v={v[k]}) outside the truncated domain")
    return S, pts


def _interpolate(surface, S, v, t):
    mesh = surface.mesh
    idx = surface.index_of(t)
    S, pts = _to_domain(surface, S, v)
    tri, lam = _locator(mesh).locate(pts)
    nodes = mesh.triangles[tri]
    w = surface.values[idx]
    grads = nodal_gradients(mesh, w)
    value = np.einsum('ij,ij->i', lam, w[nodes])
    grad = np.einsum('ij,ijk->ik', lam, grads[nodes])
    delta = surface.coordinate_map.delta_from_gradient(grad, S)
    nearest = nodes[np.arange(len(nodes)), np.argmax(lam, axis=1)]
    control = surface.controls[idx][nearest]
    return S, value, np.atleast_1d(delta), control


def query(surface, S, v, t):
    """
    Value and Delta at a point (S, v) and time t

    Parameters:
    - surface: ValueSurface
    - S, v: a point inside the truncated domain
    - t: a stored time

    Returns:
    - (value, delta)
    """
    _, value, delta, _ = _interpolate(surface, S, v, t)
    return float(value[0]), float(delta[0])


def query_many(surface, S, v, t):
    """Vectorised query returning (value, delta, control) arrays"""
    _, value, delta, control = _interpolate(surface, S, v, t)
    return value, delta, control


def price_surface(surface, S_grid, v_grid, t):
    """
    Sample a solved surface on a tensor grid in (S, v)

    Returns:
    - PricedSurface with flattened arrays, S varying fastest
    """
    vv, SS = np.meshgrid(np.asarray(v_grid, dtype=float), np.asarray(S_grid, dtype=float), indexing='ij')
    S = SS.reshape(-1)
    v = vv.reshape(-1)
    value, delta, control = query_many(surface, S, v, t)
    t_stored = float(surface.times[surface.index_of(t)])
    return PricedSurface(S=S, v=v, t=t_stored, value=value, delta=delta, control=control)
