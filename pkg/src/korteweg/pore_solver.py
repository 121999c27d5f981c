"""Quasi-static pore-scale solver: an elliptic momentum solve for the
velocity at the current density, then conservative upwind transport of the
density with the eps^2 time scaling.

Momentum operator: mu * (-Lap) + xi * (-grad div) on the MAC grid of the
perforated domain, velocity zero on every boundary face (grains and the
outer rectangle).  The right-hand side uses the generalized-pressure
grouping gamma * rho * grad(phi *_eps rho) - grad P(rho); with arithmetic
face averages this is algebraically identical to the bare-pressure
grouping, so either form may be used for cross-checks.

Energy bookkeeping per step records the physical dissipation, the upwind
(numerical) dissipation, and the residual of the discrete energy balance;
the residual is the pure time-discretization remainder and shrinks
first-order in dt.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .constitutive import EnergyFunction, PressureLaw, free_energy
from .errors import ConfigError, SolverError
from .geometry import DomainMask
from .nonlocal_ops import Kernel

Array = np.ndarray


@dataclass(frozen=True)
class PoreConfig:
    mu: float = 1.0
    xi: float = 0.0
    eps: float = 0.25
    t_end: float = 0.1
    cfl: float = 0.45
    momentum_tol: float = 1e-9
    record_times: tuple[float, ...] = ()

    def __post_init__(self):
        if self.mu <= 0:
            raise ConfigError("viscosity mu must be positive")
        if self.xi < 0:
            raise ConfigError("bulk viscosity xi must be nonnegative")
        if not 0 < self.cfl < 1:
            raise ConfigError("CFL number must lie in (0, 1)")


class MomentumOperator:
    """Factorized MAC operator mu*(-Lap) + xi*(-grad div) with no-slip on
    all boundary faces of the perforated domain."""

    def __init__(self, mask: DomainMask, mu: float, xi: float):
        self.mask = mask
        self.mu = mu
        self.xi = xi
        nx, ny = mask.shape
        fluid = mask.fluid
        h = mask.h

        u_fluid = np.zeros((nx + 1, ny), dtype=bool)
        u_fluid[1:nx, :] = fluid[:-1, :] & fluid[1:, :]
        v_fluid = np.zeros((nx, ny + 1), dtype=bool)
        v_fluid[:, 1:ny] = fluid[:, :-1] & fluid[:, 1:]
        self.u_fluid, self.v_fluid = u_fluid, v_fluid
        self.nu = int(u_fluid.sum())
        self.nv = int(v_fluid.sum())

        u_id = -np.ones(u_fluid.shape, dtype=int)
        v_id = -np.ones(v_fluid.shape, dtype=int)
        u_id[u_fluid] = np.arange(self.nu)
        v_id[v_fluid] = np.arange(self.nv)

        L = sp.block_diag(
            [self._laplacian(u_id, normal_axis=0), self._laplacian(v_id, normal_axis=1)]
        ).tocsr()
        D = self._divergence_matrix(u_id, v_id)
        self.laplacian = L
        self.grad_div = (D.T @ D).tocsr()
        A = (mu * L + xi * self.grad_div).tocsc()
        self._lu = spla.splu(A)
        self._A = A.tocsr()

    def _laplacian(self, fid: Array, normal_axis: int) -> sp.csr_matrix:
        # non-periodic variant of the cell-problem stencil: solid or outer
        # neighbors along the normal axis lie on the wall plane (plain zero),
        # tangential ones get ghost reflection
        h2 = self.mask.h**2
        n = int((fid >= 0).sum())
        nx, ny = fid.shape
        rows, cols, vals = [], [], []
        for i, j in np.argwhere(fid >= 0):
            r = fid[i, j]
            diag = 4.0
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                ii, jj = i + di, j + dj
                nb = fid[ii, jj] if 0 <= ii < nx and 0 <= jj < ny else -1
                if nb >= 0:
                    rows.append(r)
                    cols.append(nb)
                    vals.append(-1.0 / h2)
                elif (di == 0) == (normal_axis == 0):
                    diag += 1.0
            rows.append(r)
            cols.append(r)
            vals.append(diag / h2)
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    def _divergence_matrix(self, u_id: Array, v_id: Array) -> sp.csr_matrix:
        nx, ny = self.mask.shape
        h = self.mask.h
        fluid = self.mask.fluid
        c_id = -np.ones((nx, ny), dtype=int)
        c_id[fluid] = np.arange(int(fluid.sum()))
        rows, cols, vals = [], [], []
        for i, j in np.argwhere(fluid):
            c = c_id[i, j]
            for fid_arr, off, sgn in (
                (u_id, (i + 1, j), 1.0),
                (u_id, (i, j), -1.0),
            ):
                f = fid_arr[off]
                if f >= 0:
                    rows.append(c)
                    cols.append(f)
                    vals.append(sgn / h)
            for fid_arr, off, sgn in (
                (v_id, (i, j + 1), 1.0),
                (v_id, (i, j), -1.0),
            ):
                f = fid_arr[off]
                if f >= 0:
                    rows.append(c)
                    cols.append(f + self.nu)
                    vals.append(sgn / h)
        return sp.csr_matrix((vals, (rows, cols)), shape=(int(fluid.sum()), self.nu + self.nv))

    def pack(self, u: Array, v: Array) -> Array:
        return np.concatenate([u[self.u_fluid], v[self.v_fluid]])

    def unpack(self, w: Array) -> tuple[Array, Array]:
        u = np.zeros(self.u_fluid.shape)
        v = np.zeros(self.v_fluid.shape)
        u[self.u_fluid] = w[: self.nu]
        v[self.v_fluid] = w[self.nu :]
        return u, v

    def solve(self, rhs: Array, tol: float) -> Array:
        w = self._lu.solve(rhs)
        res = float(np.abs(self._A @ w - rhs).max())
        if res > tol * max(1.0, float(np.abs(rhs).max())):
            raise SolverError(f"momentum solve residual {res:.2e} above tolerance")
        return w

    def dissipation(self, w: Array) -> float:
        """h^2 * (mu w.Lap w + xi w.GradDiv w) = integral of mu|Du|^2 + xi(div u)^2."""
        h2 = self.mask.h**2
        return h2 * float(
            self.mu * (w @ (self.laplacian @ w)) + self.xi * (w @ (self.grad_div @ w))
        )

    def velocity_norms(self, w: Array) -> tuple[float, float]:
        """(||u||_L2, ||Du||_L2) with the discrete Dirichlet gradient norm."""
        h2 = self.mask.h**2
        l2 = float(np.sqrt(h2 * np.sum(w**2)))
        grad = float(np.sqrt(h2 * (w @ (self.laplacian @ w))))
        return l2, grad


def momentum_rhs(
    rho: Array,
    mask: DomainMask,
    kernel: Kernel,
    law: PressureLaw,
    op: MomentumOperator,
    form: str = "generalized",
) -> Array:
    """Face-centered forcing for the momentum solve.

    "generalized": gamma rho_bar dC - dP(rho)     (canonical)
    "bare":        gamma rho_bar d(C - rho) - dp(rho)
    The two coincide to round-off with arithmetic face averages.
    """
    law.check_range(rho[mask.fluid])
    conv = kernel.convolve_wall(rho, mask, law.rho_s)
    g = law.gamma
    h = mask.h
    if form == "generalized":
        scal = law.P(np.where(mask.fluid, rho, 0.0))
        nonloc = conv
    elif form == "bare":
        scal = law.p(np.where(mask.fluid, rho, 0.0))
        nonloc = conv - rho
    else:
        raise ConfigError(f"unknown momentum RHS form {form!r}")

    fx = np.zeros(op.u_fluid.shape)
    rho_bar_x = 0.5 * (rho[:-1, :] + rho[1:, :])
    fx[1:-1, :] = (
        g * rho_bar_x * (nonloc[1:, :] - nonloc[:-1, :]) - (scal[1:, :] - scal[:-1, :])
    ) / h
    fy = np.zeros(op.v_fluid.shape)
    rho_bar_y = 0.5 * (rho[:, :-1] + rho[:, 1:])
    fy[:, 1:-1] = (
        g * rho_bar_y * (nonloc[:, 1:] - nonloc[:, :-1]) - (scal[:, 1:] - scal[:, :-1])
    ) / h
    return op.pack(fx, fy)


def solve_momentum(
    rho: Array,
    mask: DomainMask,
    kernel: Kernel,
    law: PressureLaw,
    cfg: PoreConfig,
    op: MomentumOperator | None = None,
    form: str = "generalized",
) -> tuple[Array, Array, Array]:
    """Velocity (u, v) on MAC faces plus the packed solution vector."""
    if np.any(rho[mask.fluid] < 0):
        raise ConfigError("momentum solve needs rho >= 0")
    if op is None:
        op = MomentumOperator(mask, cfg.mu, cfg.xi)
    w = op.solve(momentum_rhs(rho, mask, kernel, law, op, form=form), cfg.momentum_tol)
    u, v = op.unpack(w)
    return u, v, w


def upwind_fluxes(rho: Array, u: Array, v: Array) -> tuple[Array, Array]:
    fu = np.zeros_like(u)
    fu[1:-1, :] = np.where(u[1:-1, :] > 0, rho[:-1, :], rho[1:, :]) * u[1:-1, :]
    fv = np.zeros_like(v)
    fv[:, 1:-1] = np.where(v[:, 1:-1] > 0, rho[:, :-1], rho[:, 1:]) * v[:, 1:-1]
    return fu, fv


def advance_density(
    rho: Array, u: Array, v: Array, dt: float, mask: DomainMask, eps: float
) -> Array:
    """Conservative first-order upwind step of eps^2 drho/dt + div(rho u) = 0."""
    h = mask.h
    speed = float(np.abs(u).max() + np.abs(v).max())
    if speed > 0 and dt > eps**2 * mask.h / speed + 1e-15:
        raise ConfigError("time step violates the transport CFL condition")
    fu, fv = upwind_fluxes(rho, u, v)
    div = (fu[1:, :] - fu[:-1, :] + fv[:, 1:] - fv[:, :-1]) / h
    rho_new = np.where(mask.fluid, rho - (dt / eps**2) * div, rho)
    neg = float(rho_new[mask.fluid].min())
    if neg < -1e-13 * max(1.0, float(rho[mask.fluid].max())):
        raise SolverError(f"upwind step produced negative density {neg:.2e}")
    return np.where(mask.fluid, np.maximum(rho_new, 0.0), rho)


@dataclass
class PoreRun:
    times: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    energy_ff: list = field(default_factory=list)
    energy_fs: list = field(default_factory=list)
    energy_bulk: list = field(default_factory=list)
    dissipation: list = field(default_factory=list)
    numerical_dissipation: list = field(default_factory=list)
    balance_residual: list = field(default_factory=list)
    max_velocity: list = field(default_factory=list)
    dt: list = field(default_factory=list)
    velocity_l2: list = field(default_factory=list)
    velocity_grad_l2: list = field(default_factory=list)
    rho_l2: list = field(default_factory=list)
    bulk_energy_l1: list = field(default_factory=list)  # integral of W(rho)
    snapshots: dict = field(default_factory=dict)  # t -> rho copy
    velocity_snapshots: dict = field(default_factory=dict)  # t -> (u, v)

    @property
    def energy(self) -> np.ndarray:
        return (
            np.asarray(self.energy_ff)
            + np.asarray(self.energy_fs)
            + np.asarray(self.energy_bulk)
        )


def chemical_potential(
    rho: Array, mask: DomainMask, kernel: Kernel, law: PressureLaw, energy: EnergyFunction
) -> Array:
    """dE/drho per unit volume: W'(rho) - gamma * (phi*_X rho - rho)."""
    conv = kernel.convolve_wall(rho, mask, law.rho_s)
    safe = np.where(mask.fluid & (rho > 0), rho, 1.0)
    return np.where(mask.fluid, energy.dW(safe) - law.gamma * (conv - rho), 0.0)


def run_pore(
    rho0: Array,
    cfg: PoreConfig,
    mask: DomainMask,
    kernel: Kernel,
    law: PressureLaw,
    energy: EnergyFunction,
    max_steps: int = 10**6,
    dt_fixed: float | None = None,
) -> PoreRun:
    """Time-step to cfg.t_end, recording per-step diagnostics and density /
    velocity snapshots at cfg.record_times (hit exactly by dt truncation)."""
    if np.any(rho0[mask.fluid] < 0):
        raise ConfigError("initial density must be nonnegative")
    eps = cfg.eps
    omega = eps**2
    h = mask.h
    op = MomentumOperator(mask, cfg.mu, cfg.xi)
    rho = np.where(mask.fluid, rho0, 0.0).astype(float)

    record = sorted(set(cfg.record_times))
    if record and record[-1] > cfg.t_end + 1e-12:
        raise ConfigError("record times must not exceed t_end")

    run = PoreRun()
    t = 0.0
    e_prev = None
    for _ in range(max_steps):
        u, v, w = solve_momentum(rho, mask, kernel, law, cfg, op=op)
        e = free_energy(rho, mask, kernel, law, energy, omega=omega)
        d_phys = op.dissipation(w)
        speed = float(np.abs(u).max() + np.abs(v).max())

        if dt_fixed is not None:
            dt = dt_fixed
        else:
            dt = cfg.cfl * omega * h / speed if speed > 0 else cfg.t_end - t
        if dt < 1e-12 * cfg.t_end:
            raise SolverError("time step collapsed below the stiffness guard")
        dt = min(dt, cfg.t_end - t)
        for tr in record:
            if t < tr - 1e-14 and t + dt > tr:
                dt = tr - t
                break

        # exact first variation of the discrete energy against the upwind flux
        mu_chem = chemical_potential(rho, mask, kernel, law, energy)
        fu, fv = upwind_fluxes(rho, u, v)
        div_f = (fu[1:, :] - fu[:-1, :] + fv[:, 1:] - fv[:, :-1]) / h
        s_lin = -(h**2) * float(np.sum((mu_chem * div_f)[mask.fluid]))

        rho_new = advance_density(rho, u, v, dt, mask, eps)
        e_new = free_energy(rho_new, mask, kernel, law, energy, omega=omega)
        d_num = -s_lin - d_phys
        residual = (e_new.total - e.total) / dt + d_phys + d_num

        run.times.append(t)
        run.mass.append(h**2 * float(rho[mask.fluid].sum()))
        run.energy_ff.append(e.fluid_fluid)
        run.energy_fs.append(e.fluid_solid)
        run.energy_bulk.append(e.bulk)
        run.dissipation.append(d_phys)
        run.numerical_dissipation.append(d_num)
        run.balance_residual.append(residual)
        run.max_velocity.append(float(max(np.abs(u).max(), np.abs(v).max())))
        run.dt.append(dt)
        l2, gl2 = op.velocity_norms(w)
        run.velocity_l2.append(l2)
        run.velocity_grad_l2.append(gl2)
        run.rho_l2.append(float(np.sqrt(h**2 * np.sum(rho[mask.fluid] ** 2))))
        run.bulk_energy_l1.append(e.bulk / omega)

        rho = rho_new
        t += dt
        e_prev = e_new
        for tr in record:
            if abs(t - tr) <= 1e-12:
                run.snapshots[tr] = rho.copy()
                run.velocity_snapshots[tr] = (u.copy(), v.copy())
        if t >= cfg.t_end - 1e-14:
            break
    else:
        raise SolverError("pore run exceeded the step budget")

    run.times.append(t)
    run.mass.append(h**2 * float(rho[mask.fluid].sum()))
    if e_prev is not None:
        run.energy_ff.append(e_prev.fluid_fluid)
        run.energy_fs.append(e_prev.fluid_solid)
        run.energy_bulk.append(e_prev.bulk)
    run.final_rho = rho
    return run
