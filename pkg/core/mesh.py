"""
Triangulation of the transformed trapezoid

Nodes are laid out in rows of constant z; node (i, j) has index
j * (n_y + 1) + i. Uniform refinement appends edge midpoints after the
existing nodes, so a coarse mesh's nodes are a prefix of its refinement.
"""
import logging
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import MeshError
from .transform import TAGS, INTERIOR, DIRICHLET, BOTTOM, RIGHT, TOP

logger = logging.getLogger('hjbpricer.core.mesh')


@dataclass(frozen=True, eq=False)
class Mesh:
    """
    Immutable triangle mesh with boundary-region tags

    Parameters:
    - nodes: (N, 2) array of (y, z)
    - triangles: (M, 3) array of counter-clockwise node indices
    - tags: (N,) integer region codes, see transform.TAGS
    - trapezoid: the TrapezoidDomain being tiled
    - refinement_level: number of uniform refinements applied
    """
    nodes: np.ndarray
    triangles: np.ndarray
    tags: np.ndarray
    trapezoid: object
    refinement_level: int = 0
    shape: tuple = field(default=None)

    def __post_init__(self):
        for arr in (self.nodes, self.triangles, self.tags):
            arr.setflags(write=False)

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @cached_property
    def signed_areas(self):
        p = self.nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def areas(self):
        return np.abs(self.signed_areas)

    @cached_property
    def edges(self):
        """Unique undirected edges (E, 2), sorted, and the per-triangle edge ids (M, 3)"""
        t = self.triangles
        # edge k of a triangle is opposite vertex k
        pairs = np.stack([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]], axis=1).reshape(-1, 2)
        pairs = np.sort(pairs, axis=1)
        unique, inverse, counts = np.unique(pairs, axis=0, return_inverse=True, return_counts=True)
        inverse = inverse.reshape(-1)
        return unique, inverse.reshape(-1, 3), counts

    def boundary_edges(self):
        unique, _, counts = self.edges
        return unique[counts == 1]

    def min_angle(self):
        """Smallest interior angle over all triangles, in degrees"""
        p = self.nodes[self.triangles]
        angles = []
        for k in range(3):
            a = p[:, (k + 1) % 3] - p[:, k]
            b = p[:, (k + 2) % 3] - p[:, k]
            cos = np.einsum('ij,ij->i', a, b) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            angles.append(np.degrees(np.arccos(np.clip(cos, -1.0, 1.0))))
        return float(np.min(angles))

    def max_angle(self):
        p = self.nodes[self.triangles]
        worst = 0.0
        for k in range(3):
            a = p[:, (k + 1) % 3] - p[:, k]
            b = p[:, (k + 2) % 3] - p[:, k]
            cos = np.einsum('ij,ij->i', a, b) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            worst = max(worst, float(np.degrees(np.arccos(np.clip(cos, -1.0, 1.0))).max()))
        return worst

    @cached_property
    def stars(self):
        """
        Incident-triangle fans

        Returns:
        - (centre, j, k) arrays of length 3M, sorted by centre node; for each
          entry the triangle reads (centre, j, k) counter-clockwise
        """
        t = self.triangles
        centre = t.reshape(-1)
        j = t[:, [1, 2, 0]].reshape(-1)
        k = t[:, [2, 0, 1]].reshape(-1)
        order = np.argsort(centre, kind='stable')
        return centre[order], j[order], k[order]

    def lumped_mass(self):
        """Row-summed P1 mass: one third of the incident triangle areas"""
        return np.bincount(self.triangles.reshape(-1), weights=np.repeat(self.areas() / 3.0, 3),
                           minlength=self.n_nodes)

    def tag_names(self):
        return [TAGS[t] for t in self.tags]

    def statistics(self):
        counts = np.bincount(self.tags, minlength=len(TAGS))
        return {
            'nodes': int(self.n_nodes),
            'triangles': int(self.n_triangles),
            'refinement_level': int(self.refinement_level),
            'min_angle_deg': round(self.min_angle(), 6),
            'max_angle_deg': round(self.max_angle(), 6),
            'area': float(self.areas().sum()),
            'tag_counts': {TAGS[i]: int(c) for i, c in enumerate(counts)},
        }


def _structured_tags(n_y, n_z):
    i, j = np.meshgrid(np.arange(n_y + 1), np.arange(n_z + 1))
    i = i.reshape(-1)
    j = j.reshape(-1)
    tags = np.full(i.shape, INTERIOR, dtype=np.int8)
    tags[j == n_z] = TOP
    tags[i == n_y] = RIGHT
    tags[j == 0] = BOTTOM
    tags[i == 0] = DIRICHLET
    return tags


def _min_angle_of(p0, p1, p2):
    """Vectorised minimum angle (radians) of the triangles (p0, p1, p2)"""
    pts = (p0, p1, p2)
    result = None
    for k in range(3):
        a = pts[(k + 1) % 3] - pts[k]
        b = pts[(k + 2) % 3] - pts[k]
        cos = np.einsum('ij,ij->i', a, b) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
        ang = np.arccos(np.clip(cos, -1.0, 1.0))
        result = ang if result is None else np.minimum(result, ang)
    return result


def structured_triangulation(trap, n_y, n_z):
    """
    Sheared-row triangulation of a trapezoid

    Parameters:
    - trap: TrapezoidDomain
    - n_y: cells per row
    - n_z: number of rows

    Returns:
    - Mesh with (n_y + 1)(n_z + 1) nodes and 2 n_y n_z triangles
    """
    if n_y < 1 or n_z < 1:
        raise MeshError(f"mesh needs at least one cell per direction, got {n_y}x{n_z}")
    if not trap.height > 0 or not trap.width > 0:
        raise MeshError("degenerate trapezoid")

    z = np.linspace(0.0, trap.height, n_z + 1)
    s = np.linspace(0.0, 1.0, n_y + 1)
    zz, ss = np.meshgrid(z, s, indexing='ij')
    yy = trap.left_y(zz) + ss * trap.width
    nodes = np.column_stack([yy.reshape(-1), zz.reshape(-1)])

    i, j = np.meshgrid(np.arange(n_y), np.arange(n_z))
    a = (j * (n_y + 1) + i).reshape(-1)
    b = a + 1
    c = a + n_y + 2
    d = a + n_y + 1

    # diagonal a-c versus b-d, keep the split with the larger minimum angle
    p = nodes
    q_ac = np.minimum(_min_angle_of(p[a], p[b], p[c]), _min_angle_of(p[a], p[c], p[d]))
    q_bd = np.minimum(_min_angle_of(p[a], p[b], p[d]), _min_angle_of(p[b], p[c], p[d]))
    use_ac = q_ac >= q_bd

    first = np.where(use_ac[:, None], np.column_stack([a, b, c]), np.column_stack([a, b, d]))
    second = np.where(use_ac[:, None], np.column_stack([a, c, d]), np.column_stack([b, c, d]))
    triangles = np.stack([first, second], axis=1).reshape(-1, 3)

    mesh = Mesh(nodes=nodes, triangles=triangles.astype(np.int64), tags=_structured_tags(n_y, n_z),
                trapezoid=trap, refinement_level=0, shape=(n_y, n_z))
    _check(mesh)
    logger.debug(f"Structured mesh {n_y}x{n_z}: {mesh.n_nodes} nodes, {mesh.n_triangles} triangles")
    return mesh


def refine(mesh):
    """
    Uniform red refinement

    Each triangle is split into four through its edge midpoints. Original
    nodes keep their indices; midpoints of boundary edges take that edge's
    region tag.
    """
    unique, tri_edges, counts = mesh.edges
    n = mesh.n_nodes
    mids = 0.5 * (mesh.nodes[unique[:, 0]] + mesh.nodes[unique[:, 1]])
    nodes = np.vstack([mesh.nodes, mids])

    mid_tags = np.full(len(unique), INTERIOR, dtype=np.int8)
    on_boundary = counts == 1
    mid_tags[on_boundary] = mesh.trapezoid.classify(mids[on_boundary])
    if np.any(mid_tags[on_boundary] == INTERIOR):
        raise MeshError("boundary edge midpoint does not lie on the trapezoid boundary")
    tags = np.concatenate([mesh.tags, mid_tags])

    t = mesh.triangles
    # m_k is the midpoint of the edge opposite vertex k
    m0 = n + tri_edges[:, 0]
    m1 = n + tri_edges[:, 1]
    m2 = n + tri_edges[:, 2]
    triangles = np.stack([
        np.column_stack([t[:, 0], m2, m1]),
        np.column_stack([m2, t[:, 1], m0]),
        np.column_stack([m1, m0, t[:, 2]]),
        np.column_stack([m0, m1, m2]),
    ], axis=1).reshape(-1, 3)

    shape = None if mesh.shape is None else (2 * mesh.shape[0], 2 * mesh.shape[1])
    fine = Mesh(nodes=nodes, triangles=triangles, tags=tags, trapezoid=mesh.trapezoid,
                refinement_level=mesh.refinement_level + 1, shape=shape)
    _check(fine)
    logger.debug(f"Refined mesh to level {fine.refinement_level}: {fine.n_nodes} nodes")
    return fine


def build_mesh(trap, n_y, n_z, refinements=0):
    mesh = structured_triangulation(trap, n_y, n_z)
    for _ in range(refinements):
        mesh = refine(mesh)
    logger.info(f"Mesh ready: {mesh.n_nodes} nodes, {mesh.n_triangles} triangles, "
                f"min angle {mesh.min_angle():.2f} deg")
    return mesh


def _check(mesh):
    if np.any(mesh.signed_areas <= 0):
        bad = int(np.argmin(mesh.signed_areas))
        raise MeshError(f"triangle {bad} has nonpositive signed area")


def write_mesh(mesh, path):
    """
    Write a plain-text node/element file

    Node lines read "id y z tag", triangle lines "id n0 n1 n2".
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as fh:
        fh.write(f"# nodes {mesh.n_nodes}\n")
        for idx, ((y, z), tag) in enumerate(zip(mesh.nodes, mesh.tags)):
            fh.write(f"{idx} {y:.17g} {z:.17g} {TAGS[tag]}\n")
        fh.write(f"# triangles {mesh.n_triangles}\n")
        for idx, (n0, n1, n2) in enumerate(mesh.triangles):
            fh.write(f"{idx} {n0} {n1} {n2}\n")
    logger.info(f"Mesh written to {path}")
    return path
