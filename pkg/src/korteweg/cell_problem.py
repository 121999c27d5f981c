"""Periodic Stokes cell problems on the unit cell and the permeability
tensor assembled from their averages.

Discretization: MAC staggered grid with periodic wrap.  u[i, j] sits on
the x-face between cells (i-1, j) and (i, j), v[i, j] on the y-face
between (i, j-1) and (i, j).  A face adjacent to a solid cell carries
velocity zero and is removed from the unknowns; the five-point Laplacian
keeps its full diagonal, which enforces no-slip on the staircase grain
boundary to first order.  Divergence is exact (conservative fluxes), the
pressure is gauged to zero mean over the fluid cells.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigError, SolverError
from .geometry import UnitCell

Array = np.ndarray


def face_masks(solid: Array) -> tuple[Array, Array]:
    """Boolean masks of solid x-faces and y-faces (periodic neighbors)."""
    u_solid = solid | np.roll(solid, 1, axis=0)
    v_solid = solid | np.roll(solid, 1, axis=1)
    return u_solid, v_solid


class _MacOperators:
    """Sparse periodic MAC operators restricted to fluid faces/cells."""

    def __init__(self, solid: Array, h: float):
        self.solid = solid
        self.h = h
        m, n = solid.shape
        self.mshape = (m, n)
        u_solid, v_solid = face_masks(solid)
        self.u_fluid = ~u_solid
        self.v_fluid = ~v_solid
        self.c_fluid = ~solid

        self.u_id = -np.ones(solid.shape, dtype=int)
        self.v_id = -np.ones(solid.shape, dtype=int)
        self.c_id = -np.ones(solid.shape, dtype=int)
        self.u_id[self.u_fluid] = np.arange(int(self.u_fluid.sum()))
        self.v_id[self.v_fluid] = np.arange(int(self.v_fluid.sum()))
        self.c_id[self.c_fluid] = np.arange(int(self.c_fluid.sum()))
        self.nu = int(self.u_fluid.sum())
        self.nv = int(self.v_fluid.sum())
        self.nc = int(self.c_fluid.sum())

        self.laplacian = sp.block_diag(
            [
                self._component_laplacian(self.u_id, normal_axis=0),
                self._component_laplacian(self.v_id, normal_axis=1),
            ]
        ).tocsr()
        self.gradient = self._gradient().tocsr()

    def _component_laplacian(self, fid: Array, normal_axis: int) -> sp.csr_matrix:
        """Five-point Laplacian on fluid faces of one velocity component.

        A solid neighbor along the component's own axis sits exactly on the
        wall plane, so a plain zero there is second order.  A solid neighbor
        in the tangential direction lies across the wall plane halfway
        between the two faces; ghost reflection (value minus itself) adds
        one extra diagonal unit."""
        h2 = self.h**2
        n = int((fid >= 0).sum())
        rows, cols, vals = [], [], []
        idx = np.argwhere(fid >= 0)
        m, mn = self.mshape
        for i, j in idx:
            r = fid[i, j]
            diag = 4.0
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                nb = fid[(i + di) % m, (j + dj) % mn]
                if nb >= 0:
                    rows.append(r)
                    cols.append(nb)
                    vals.append(-1.0 / h2)
                elif (di == 0) == (normal_axis == 0):
                    # tangential solid neighbor: ghost reflection
                    diag += 1.0
            rows.append(r)
            cols.append(r)
            vals.append(diag / h2)
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    def _gradient(self) -> sp.csr_matrix:
        """G maps fluid-cell pressures to fluid faces; divergence is -G^T."""
        m, n = self.mshape
        rows, cols, vals = [], [], []
        for i, j in np.argwhere(self.u_fluid):
            r = self.u_id[i, j]
            rows += [r, r]
            cols += [self.c_id[i, j], self.c_id[(i - 1) % m, j]]
            vals += [1.0 / self.h, -1.0 / self.h]
        off = self.nu
        for i, j in np.argwhere(self.v_fluid):
            r = self.v_id[i, j] + off
            rows += [r, r]
            cols += [self.c_id[i, j], self.c_id[i, (j - 1) % n]]
            vals += [1.0 / self.h, -1.0 / self.h]
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.nu + self.nv, self.nc))

    def pack(self, u: Array, v: Array) -> Array:
        return np.concatenate([u[self.u_fluid], v[self.v_fluid]])

    def unpack(self, w: Array) -> tuple[Array, Array]:
        u = np.zeros(self.mshape)
        v = np.zeros(self.mshape)
        u[self.u_fluid] = w[: self.nu]
        v[self.v_fluid] = w[self.nu :]
        return u, v

    def divergence(self, u: Array, v: Array) -> Array:
        div = (np.roll(u, -1, axis=0) - u + np.roll(v, -1, axis=1) - v) / self.h
        return np.where(self.c_fluid, div, 0.0)


@dataclass(frozen=True)
class CellStokesSolution:
    index: int
    resolution: int
    h: float
    u: Array = field(repr=False)
    v: Array = field(repr=False)
    q: Array = field(repr=False)
    fluid: Array = field(repr=False)
    div_residual: float
    momentum_residual: float
    method: str


def _forcing(ops: _MacOperators, index: int) -> Array:
    f = np.zeros(ops.nu + ops.nv)
    if index == 1:
        f[: ops.nu] = 1.0
    elif index == 2:
        f[ops.nu :] = 1.0
    else:
        raise ConfigError("cell problem index must be 1 or 2")
    return f


def solve_cell_problem(
    cell: UnitCell,
    index: int,
    method: str = "direct",
    tol: float = 1e-12,
    max_iter: int = 500,
) -> CellStokesSolution:
    """Solve -Lap v + grad q = e_index, div v = 0 with no-slip on the grain.

    method "direct" factorizes the bordered saddle-point system (mean
    pressure pinned by a Lagrange multiplier); "uzawa" runs conjugate
    gradients on the pressure Schur complement with exact inner solves.
    """
    solid = cell.solid_mask
    if not solid.any():
        raise SolverError("ill-posed: no solid obstacle in the unit cell")
    ops = _MacOperators(solid, 1.0 / cell.resolution)
    A, G = ops.laplacian, ops.gradient
    f = _forcing(ops, index)

    if method == "direct":
        e = np.ones((ops.nc, 1)) / ops.nc
        K = sp.bmat(
            [[A, G, None], [G.T, None, sp.csr_matrix(e)], [None, sp.csr_matrix(e.T), None]],
            format="csc",
        )
        rhs = np.concatenate([f, np.zeros(ops.nc + 1)])
        sol = spla.spsolve(K, rhs)
        w = sol[: ops.nu + ops.nv]
        q_vec = sol[ops.nu + ops.nv : ops.nu + ops.nv + ops.nc]
    elif method == "uzawa":
        lu = spla.splu(A.tocsc())

        def schur(qv):
            return G.T @ lu.solve(G @ qv)

        b = G.T @ lu.solve(f)

        def project(x):
            return x - x.mean()

        q_vec = np.zeros(ops.nc)
        r = project(b - schur(q_vec))
        p = r.copy()
        rs = float(r @ r)
        b_norm = max(float(np.linalg.norm(b)), 1e-300)
        for _ in range(max_iter):
            if np.sqrt(rs) <= tol * b_norm:
                break
            Sp = project(schur(p))
            alpha = rs / float(p @ Sp)
            q_vec += alpha * p
            r -= alpha * Sp
            rs_new = float(r @ r)
            p = r + (rs_new / rs) * p
            rs = rs_new
        else:
            raise SolverError(
                f"Uzawa iteration did not converge: residual {np.sqrt(rs):.2e}"
            )
        q_vec = project(q_vec)
        w = lu.solve(f - G @ q_vec)
    else:
        raise ConfigError(f"unknown cell solver {method!r}")

    u, v = ops.unpack(w)
    q = np.zeros(ops.mshape)
    q[ops.c_fluid] = q_vec - q_vec.mean()  # gauge: zero mean over fluid cells

    div = ops.divergence(u, v)
    mom = A @ w + G @ q_vec - f
    return CellStokesSolution(
        index=index,
        resolution=cell.resolution,
        h=ops.h,
        u=u,
        v=v,
        q=q,
        fluid=ops.c_fluid,
        div_residual=float(np.abs(div).max()),
        momentum_residual=float(np.abs(mom).max()),
        method=method,
    )


@dataclass(frozen=True)
class PermeabilityMatrix:
    matrix: Array  # 2x2, matrix[j, i-1] = integral over Y of component j of v_i
    resolution: int
    div_residuals: tuple[float, float]
    momentum_residuals: tuple[float, float]
    asymmetry: float
    eigenvalues: tuple[float, float]


def integrate_velocity(sol: CellStokesSolution) -> np.ndarray:
    """Mean of the zero-extended velocity over the unit cell (midpoint rule;
    identical whether faces are summed directly or averaged to centers)."""
    h2 = sol.h**2
    return np.array([h2 * sol.u.sum(), h2 * sol.v.sum()])


def permeability(
    cell: UnitCell, method: str = "direct", tol: float = 1e-12
) -> PermeabilityMatrix:
    sols = [solve_cell_problem(cell, i, method=method, tol=tol) for i in (1, 2)]
    A = np.column_stack([integrate_velocity(s) for s in sols])
    sym = 0.5 * (A + A.T)
    eig = np.linalg.eigvalsh(sym)
    return PermeabilityMatrix(
        matrix=A,
        resolution=cell.resolution,
        div_residuals=tuple(s.div_residual for s in sols),
        momentum_residuals=tuple(s.momentum_residual for s in sols),
        asymmetry=float(np.abs(A - A.T).max()),
        eigenvalues=(float(eig[0]), float(eig[1])),
    )


@dataclass(frozen=True)
class RescaledCellField:
    eps: float
    h: float
    u: Array = field(repr=False)
    v: Array = field(repr=False)
    q: Array = field(repr=False)
    q_valid: Array = field(repr=False)  # Omega_{K,eps} cells where q is defined


def rescale_periodic(
    sol: CellStokesSolution, eps: float, extent: float = 1.0
) -> RescaledCellField:
    """Tile the cell solution periodically over a square of the given extent
    with grid spacing eps/m (pure copying; values are not recomputed).

    The velocity is continued over the whole square; the pressure is only
    meaningful on whole interior eps-cells minus the grains, flagged by
    q_valid.  q_valid excludes boundary-touching eps-cells, matching the
    interior-cell convention of the perforated domain.
    """
    n = extent / eps
    if abs(n - round(n)) > 1e-9:
        raise ConfigError("domain extent must be an integer multiple of eps")
    n = round(n)
    u = np.tile(sol.u, (n, n))
    v = np.tile(sol.v, (n, n))
    q = np.tile(sol.q, (n, n))
    fluid = np.tile(sol.fluid, (n, n))

    m = sol.resolution
    valid = np.zeros_like(fluid)
    for kx in range(n):
        for ky in range(n):
            if 0 < kx < n - 1 and 0 < ky < n - 1:
                valid[kx * m : (kx + 1) * m, ky * m : (ky + 1) * m] = True
    valid &= fluid
    return RescaledCellField(eps=eps, h=eps / m, u=u, v=v, q=q, q_valid=valid)


def sup_norms(field: RescaledCellField) -> dict[str, float]:
    """Sup norms entering the uniform rescaling bounds: |v|, eps |Dv|,
    |q|, eps |grad q| (pressure gradient only inside valid cells)."""
    h = field.h
    du = [
        (np.roll(field.u, -1, axis=0) - field.u) / h,
        (np.roll(field.u, -1, axis=1) - field.u) / h,
        (np.roll(field.v, -1, axis=0) - field.v) / h,
        (np.roll(field.v, -1, axis=1) - field.v) / h,
    ]
    v_sup = float(max(np.abs(field.u).max(), np.abs(field.v).max()))
    dv_sup = float(max(np.abs(d).max() for d in du))

    q_sup = float(np.abs(field.q[field.q_valid]).max()) if field.q_valid.any() else 0.0
    gqx = (np.roll(field.q, -1, axis=0) - field.q) / h
    gqy = (np.roll(field.q, -1, axis=1) - field.q) / h
    both_x = field.q_valid & np.roll(field.q_valid, -1, axis=0)
    both_y = field.q_valid & np.roll(field.q_valid, -1, axis=1)
    gq_sup = 0.0
    if both_x.any():
        gq_sup = max(gq_sup, float(np.abs(gqx[both_x]).max()))
    if both_y.any():
        gq_sup = max(gq_sup, float(np.abs(gqy[both_y]).max()))
    return {
        "v_sup": v_sup,
        "eps_dv_sup": field.eps * dv_sup,
        "q_sup": q_sup,
        "eps_grad_q_sup": field.eps * gq_sup,
    }
