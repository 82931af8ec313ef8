"""
Discrete pricing operator on the transformed domain

In (y, z) the operator for a fixed control lambda reads

    L w = -a z Lap(w) + b(z, lambda) . grad(w) + r w,   a = xi sqrt(1 - rho^2) / 2

and the backward problem is -w_t + L w = 0 with boundary rows for the
Dirichlet (D), bottom transport (Rt), right Neumann (R2) and top oblique
(R1) regions. Diffusion uses the lumped-mass P1 stiffness with edgewise
clipping of positive couplings; first-order terms use nonnegative
directional stencils built from each node's incident triangles. The
lambda-free drift is moved towards central differences as far as the
physical diffusion allows.
"""
import logging
import math
import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from config.settings import CONFIG
from .errors import AssemblyError, DomainError, ValidationError
from .transform import INTERIOR, DIRICHLET, BOTTOM, RIGHT, TOP

logger = logging.getLogger('hjbpricer.core.assembly')

ROW_KINDS = {
    INTERIOR: 'pde',
    DIRICHLET: 'dirichlet',
    BOTTOM: 'robin_bottom',
    RIGHT: 'neumann_y',
    TOP: 'oblique',
}


@dataclass(frozen=True)
class CanonicalCoefficients:
    diffusion: object
    drift_y: object
    drift_z: object
    reaction: float


def _split_drift(z, params):
    """lambda-free and lambda-slope parts of (drift_y, drift_z)"""
    c = math.sqrt(1.0 - params.rho ** 2)
    xi, kappa, gamma, rho = params.xi, params.kappa, params.gamma, params.rho
    root = np.sqrt(z)
    drift_y0 = -params.r + kappa * gamma * rho / xi + ((xi / 2.0 - kappa * rho) / c) * z
    drift_y1 = -rho * math.sqrt(xi / c) * root
    drift_z0 = -kappa * gamma * c / xi + kappa * z
    drift_z1 = math.sqrt(xi * c) * root
    return (drift_y0, drift_z0), (drift_y1, drift_z1)


def coefficients_at(z, lam, params):
    """
    Coefficients of the canonical operator at height z

    Parameters:
    - z: scalar or array, z >= 0
    - lam: control value
    - params: HestonParams

    Returns:
    - CanonicalCoefficients (arrays when z is an array)
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise DomainError("coefficients requested below z = 0")
    c = math.sqrt(1.0 - params.rho ** 2)
    (y0, z0), (y1, z1) = _split_drift(z, params)
    unwrap = (lambda a: a) if z.ndim else float
    return CanonicalCoefficients(
        diffusion=unwrap(0.5 * params.xi * c * z),
        drift_y=unwrap(y0 + lam * y1),
        drift_z=unwrap(z0 + lam * z1),
        reaction=params.r,
    )


def directional_weights(mesh, directions, tolerance=None):
    """
    Nonnegative stencil weights for d . grad(w) at every node

    For node i and direction d, an incident triangle (i, j, k) whose edges
    e_j, e_k span a cone containing d gives d = alpha e_j + beta e_k with
    alpha, beta >= 0, so d . grad(w) ~ alpha (w_j - w_i) + beta (w_k - w_i),
    exact for linear w. Nodes whose fan does not contain d (only possible
    on the boundary) fall back to the incident edge of largest cosine.

    Parameters:
    - mesh: Mesh
    - directions: (N, 2) array, one direction per node

    Returns:
    - (rows, cols, weights) triplets and the list of fallback nodes
    """
    tol = CONFIG['STENCIL_TOLERANCE'] if tolerance is None else tolerance
    centre, j, k = mesh.stars
    p = mesh.nodes
    ej = p[j] - p[centre]
    ek = p[k] - p[centre]
    d = directions[centre]
    det = ej[:, 0] * ek[:, 1] - ej[:, 1] * ek[:, 0]
    alpha = (d[:, 0] * ek[:, 1] - d[:, 1] * ek[:, 0]) / det
    beta = (ej[:, 0] * d[:, 1] - ej[:, 1] * d[:, 0]) / det
    scale = np.linalg.norm(d, axis=1) / np.sqrt(np.minimum(np.einsum('ij,ij->i', ej, ej),
                                                           np.einsum('ij,ij->i', ek, ek)))
    ok = (alpha >= -tol * scale) & (beta >= -tol * scale)

    n = mesh.n_nodes
    candidates = np.flatnonzero(ok)
    nodes_ok, first = np.unique(centre[candidates], return_index=True)
    pick = candidates[first]

    rows = [centre[pick], centre[pick]]
    cols = [j[pick], k[pick]]
    weights = [np.maximum(alpha[pick], 0.0), np.maximum(beta[pick], 0.0)]

    missing = np.setdiff1d(np.arange(n), nodes_ok, assume_unique=True)
    if len(missing):
        # every edge of a fan appears as some entry's e_j
        in_missing = np.isin(centre, missing)
        cen = centre[in_missing]
        nbr = j[in_missing]
        e = ej[in_missing]
        dm = d[in_missing]
        len2 = np.einsum('ij,ij->i', e, e)
        proj = np.einsum('ij,ij->i', dm, e)
        cosine = proj / np.sqrt(len2 * np.maximum(np.einsum('ij,ij->i', dm, dm), 1e-300))
        order = np.lexsort((-cosine, cen))
        _, first_m = np.unique(cen[order], return_index=True)
        best = order[first_m]
        rows.append(cen[best])
        cols.append(nbr[best])
        weights.append(np.maximum(0.0, proj[best] / len2[best]))
        logger.debug(f"Stencil fallback at nodes {missing.tolist()}")

    return np.concatenate(rows), np.concatenate(cols), np.concatenate(weights), missing


def convection_matrix(mesh, velocity, active=None):
    """
    Upwind matrix C with (C w)_i ~ -velocity_i . grad(w)_i

    Diagonal entries are nonnegative, off-diagonals nonpositive and every
    row sums to zero.

    Parameters:
    - mesh: Mesh
    - velocity: (N, 2) array
    - active: optional boolean mask of rows to fill; other rows stay empty
    """
    n = mesh.n_nodes
    rows, cols, w, missing = directional_weights(mesh, velocity)
    if active is not None:
        keep = active[rows]
        rows, cols, w = rows[keep], cols[keep], w[keep]
        missing = missing[active[missing]]
    if len(missing):
        logger.debug(f"{len(missing)} boundary rows used the edge fallback stencil")
    off = sp.coo_matrix((-w, (rows, cols)), shape=(n, n))
    diag = sp.coo_matrix((w, (rows, rows)), shape=(n, n))
    return (off + diag).tocsr()


def central_correction(mesh, velocity, diffusion, active):
    """
    Limited anti-diffusion for the upwind stencil of convection_matrix

    Upwinding along a cone edge e_j with weight alpha adds the numerical
    diffusion (alpha / 2)(2 w_i - w_j - w_j') on the line through the
    opposite node j' = 2 i - j. This returns the matrix that removes
    theta = min(alpha / 2, D_ij') of it, D_ij' being the diffusion coupling
    between i and j'. Rows keep zero sums and nonpositive off-diagonals,
    and become central (second order) where theta = alpha / 2.

    Parameters:
    - mesh: Mesh
    - velocity: (N, 2) array, as passed to convection_matrix
    - diffusion: sparse diffusion rows (off-diagonals <= 0)
    - active: boolean mask of rows to correct

    Returns:
    - (sparse correction matrix, number of corrected couplings)
    """
    n = mesh.n_nodes
    rows, cols, alpha, _ = directional_weights(mesh, velocity)
    keep = active[rows] & (alpha > 0)
    rows, cols, alpha = rows[keep], cols[keep], alpha[keep]
    p = mesh.nodes
    target = 2.0 * p[rows] - p[cols]
    dist, opposite = cKDTree(p).query(target)
    found = dist <= 1e-9 * np.linalg.norm(p[cols] - p[rows], axis=1)
    rows, cols, alpha, opposite = rows[found], cols[found], alpha[found], opposite[found]

    coupling = -np.asarray(sp.csr_matrix(diffusion)[rows, opposite]).reshape(-1)
    theta = np.minimum(0.5 * alpha, np.maximum(coupling, 0.0))
    used = theta > 0
    rows, cols, opposite, theta = rows[used], cols[used], opposite[used], theta[used]
    correction = sp.coo_matrix(
        (np.concatenate([-2.0 * theta, theta, theta]),
         (np.concatenate([rows, rows, rows]), np.concatenate([rows, cols, opposite]))),
        shape=(n, n),
    )
    return correction.tocsr(), int(len(theta))


def stiffness_matrix(mesh):
    """Plain P1 stiffness matrix, K_kl = e_k . e_l / (4 area) per triangle"""
    t = mesh.triangles
    p = mesh.nodes[t]
    # e_k is the edge opposite vertex k
    e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    local = np.einsum('mki,mli->mkl', e, e) / (4.0 * mesh.areas())[:, None, None]
    rows = np.repeat(t, 3, axis=1).reshape(-1)
    cols = np.tile(t, (1, 3)).reshape(-1)
    n = mesh.n_nodes
    return sp.coo_matrix((local.reshape(-1), (rows, cols)), shape=(n, n)).tocsr()


def clip_positive_couplings(K):
    """
    Remove positive off-diagonal stiffness entries

    Each positive coupling K_ij is cancelled by adding the graph-Laplacian
    diffusion of the same size on edge (i, j), which keeps zero row sums.

    Returns:
    - (clipped matrix, total added amount, number of edges touched)
    """
    K = sp.csr_matrix(K)
    off = sp.triu(K, k=1).tocoo()
    positive = off.data > 0
    if not np.any(positive):
        return K, 0.0, 0
    i = off.row[positive]
    j = off.col[positive]
    d = off.data[positive]
    if logger.isEnabledFor(logging.DEBUG):
        for a, b, amount in zip(i, j, d):
            logger.debug(f"artificial diffusion {amount:.3e} on edge ({a}, {b})")
    n = K.shape[0]
    correction = sp.coo_matrix(
        (np.concatenate([-d, -d, d, d]),
         (np.concatenate([i, j, i, j]), np.concatenate([j, i, i, j]))),
        shape=(n, n),
    )
    clipped = (K + correction).tocsr()
    clipped.eliminate_zeros()
    return clipped, float(d.sum()), int(len(d))


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """
    Operator A(lambda) = base_matrix + min(lambda, 0) lambda_down + max(lambda, 0) lambda_up

    A is affine on each sign piece of lambda and does not depend on the
    control interval it was assembled for.

    Parameters:
    - base_matrix, lambda_down, lambda_up: sparse N x N (CSR)
    - rhs: boundary data, independent of lambda
    - row_kind: per-node row type name
    - mass: time-derivative weight per row (1 on pde and bottom rows, 0 on constraint rows)
    - terminal: final condition sampled at the nodes
    """
    base_matrix: sp.csr_matrix
    lambda_down: sp.csr_matrix
    lambda_up: sp.csr_matrix
    rhs: np.ndarray
    row_kind: tuple
    mass: np.ndarray
    terminal: np.ndarray
    lambda_min: float
    lambda_max: float
    mesh: object
    params: object
    payoff: object
    coordinate_map: object
    artificial_diffusion: float = 0.0

    @property
    def size(self):
        return self.base_matrix.shape[0]

    def operator(self, lam):
        return (self.base_matrix + min(lam, 0.0) * self.lambda_down + max(lam, 0.0) * self.lambda_up).tocsr()

    def lambda_products(self, w):
        """(lambda_down @ w, lambda_up @ w)"""
        return self.lambda_down @ w, self.lambda_up @ w

    def check_control(self, lam, tolerance=1e-12):
        if not self.lambda_min - tolerance <= lam <= self.lambda_max + tolerance:
            raise ValidationError(
                f"control {lam} outside the assembled interval [{self.lambda_min}, {self.lambda_max}]"
            )

    def system_matrix(self, controls, dt):
        """
        Implicit Euler matrix diag(mass)/dt + A with a per-node control

        Parameters:
        - controls: per-node control values (length N)
        - dt: time step
        """
        controls = np.asarray(controls, dtype=float)
        mass = sp.diags(self.mass / dt, format='csr')
        down = sp.diags(np.minimum(controls, 0.0), format='csr') @ self.lambda_down
        up = sp.diags(np.maximum(controls, 0.0), format='csr') @ self.lambda_up
        return (mass + self.base_matrix + down + up).tocsc()

    def check_m_matrix(self, controls, dt, tolerance=1e-12):
        """
        Sign structure of the implicit Euler matrix

        Returns:
        - list of (row, reason) violations, empty when the matrix is an M-matrix candidate
        """
        B = self.system_matrix(controls, dt).tocoo()
        scale = tolerance * max(1.0, float(np.abs(B.data).max()) if B.nnz else 1.0)
        problems = []
        off = B.row != B.col
        bad_off = B.row[off & (B.data > scale)]
        problems.extend((int(r), 'positive off-diagonal') for r in np.unique(bad_off))
        diag = np.asarray(B.tocsr().diagonal())
        problems.extend((int(r), 'nonpositive diagonal') for r in np.flatnonzero(diag <= 0))
        sums = np.asarray(B.tocsr().sum(axis=1)).reshape(-1)
        problems.extend((int(r), 'negative row sum') for r in np.flatnonzero(sums < -scale))
        return problems


def _row_select(matrix, mask):
    return (sp.diags(mask.astype(float), format='csr') @ matrix).tocsr()


def assemble(mesh, params, payoff, cmap, control):
    """
    Build the discrete operator for a mesh and control interval

    The diffusion coefficient a z is taken at the node, not as an element
    mean: a z_i (K w)_i / m_i discretizes the non-divergence term a z Lap(w),
    while an element-mean coefficient would discretize div(a z grad w) and
    miss the a dw/dz term.

    Parameters:
    - mesh: Mesh of the transformed trapezoid
    - params: validated HestonParams
    - payoff: Payoff
    - cmap: CoordinateMap matching params
    - control: ControlInterval; the sign structure is checked at its points

    Returns:
    - DiscreteOperator

    Raises:
    - AssemblyError when the map does not match params or the sign structure cannot be restored
    """
    if not (math.isclose(cmap.rho, params.rho) and math.isclose(cmap.xi, params.xi)):
        raise AssemblyError("coordinate map does not match the model parameters")

    n = mesh.n_nodes
    tags = mesh.tags
    z = mesh.nodes[:, 1]
    pde = tags == INTERIOR
    bottom = tags == BOTTOM
    right = tags == RIGHT
    top = tags == TOP
    dirichlet = tags == DIRICHLET

    # diffusion: a z_i (K w)_i / m_i on interior rows
    a = 0.5 * params.xi * math.sqrt(1.0 - params.rho ** 2)
    K, added, n_clipped = clip_positive_couplings(stiffness_matrix(mesh))
    if n_clipped:
        logger.info(f"Artificial diffusion on {n_clipped} edges, total {added:.4e}")
    mass = mesh.lumped_mass()
    diffusion = _row_select(sp.diags(a * z / mass, format='csr') @ K, pde)

    # velocity beta = -drift so that C(beta) w ~ drift . grad(w)
    (y0, z0), (y1, z1) = _split_drift(z, params)
    beta0 = -np.column_stack([y0, z0])
    beta1 = -np.column_stack([y1, z1])
    transport = pde | bottom
    lam_min, lam_max = control.lambda_min, control.lambda_max

    base_conv = convection_matrix(mesh, beta0, transport)
    correction, n_corrected = central_correction(mesh, beta0, diffusion, pde)
    base_conv = base_conv + correction
    logger.debug(f"Central correction on {n_corrected} drift couplings")
    # lambda <= 0 flips the upwind direction of the lambda drift
    lambda_down = -convection_matrix(mesh, -beta1, pde)
    lambda_up = convection_matrix(mesh, beta1, pde)

    reaction = sp.diags(np.where(transport, params.r, 0.0), format='csr')

    # constraint rows: R1 oblique n . grad(w) = 0, R2 dw/dy = slope
    vega = cmap.vega_direction()
    oblique = convection_matrix(mesh, np.tile(-vega, (n, 1)), top)
    neumann = convection_matrix(mesh, np.tile([-1.0, 0.0], (n, 1)), right)
    identity = sp.diags(dirichlet.astype(float), format='csr')

    base = (diffusion + base_conv + reaction + oblique + neumann + identity).tocsr()
    base.eliminate_zeros()
    lambda_down = lambda_down.tocsr()
    lambda_down.eliminate_zeros()
    lambda_up = lambda_up.tocsr()
    lambda_up.eliminate_zeros()

    rhs = np.zeros(n)
    rhs[dirichlet] = payoff.value_at_zero
    rhs[right] = payoff.slope_in_log_coordinate(mesh.trapezoid.x_max)

    S, _ = cmap.from_transformed(mesh.nodes[:, 0], z)
    terminal = np.asarray(payoff.evaluate(S), dtype=float)

    op = DiscreteOperator(
        base_matrix=base,
        lambda_down=lambda_down,
        lambda_up=lambda_up,
        rhs=rhs,
        row_kind=tuple(ROW_KINDS[t] for t in tags),
        mass=np.where(transport, 1.0, 0.0),
        terminal=terminal,
        lambda_min=lam_min,
        lambda_max=lam_max,
        mesh=mesh,
        params=params,
        payoff=payoff,
        coordinate_map=cmap,
        artificial_diffusion=added,
    )

    dt = params.T / CONFIG['DEFAULT_STEPS']
    for lam in control.points():
        problems = op.check_m_matrix(np.full(n, lam), dt)
        if problems:
            row, reason = problems[0]
            raise AssemblyError(f"sign structure violated at row {row} ({op.row_kind[row]}): {reason}")

    logger.info(f"Assembled operator: {n} rows, nnz base={base.nnz}, "
                f"nnz lambda={lambda_down.nnz}+{lambda_up.nnz}, "
                f"L=[{lam_min}, {lam_max}]")
    return op


def bottom_robin_row(op, node, dt):
    """
    Implicit Euler row of the z = 0 transport operator

    Parameters:
    - op: DiscreteOperator
    - node: index of an Rt node
    - dt: time step

    Returns:
    - dict {column: value} of the row of diag(mass)/dt + A
    """
    if op.row_kind[node] != 'robin_bottom':
        raise AssemblyError(f"node {node} is not on the bottom boundary")
    row = op.system_matrix(np.zeros(op.size), dt).tocsr().getrow(node).tocoo()
    return {int(c): float(v) for c, v in zip(row.col, row.data)}


def dump_matrices(op, directory):
    """Write base, lambda and rhs data as coordinate text files"""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for name, matrix in (('base', op.base_matrix), ('lambda_down', op.lambda_down),
                         ('lambda_up', op.lambda_up)):
        coo = matrix.tocoo()
        path = os.path.join(directory, f"{name}_matrix.txt")
        with open(path, 'w', encoding='utf-8', newline='\n') as fh:
            fh.write(f"# {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
            for r, c, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{r} {c} {v:.17g}\n")
        paths.append(path)
    path = os.path.join(directory, 'rhs.txt')
    with open(path, 'w', encoding='utf-8', newline='\n') as fh:
        for i, (v, kind) in enumerate(zip(op.rhs, op.row_kind)):
            fh.write(f"{i} {v:.17g} {kind}\n")
    paths.append(path)
    logger.info(f"Matrices written to {directory}")
    return paths
