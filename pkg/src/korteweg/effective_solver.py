"""Effective (homogenized) evolution on the unperforated rectangle:

    theta * d rho/dt + div J = 0,
    J = (1/mu) * rho * A_bar * (gamma * theta * rho * grad(phi *_0 rho) - grad P(rho)),

with P the generalized pressure, A_bar the cell-problem permeability, theta
the porosity, and no-flux conditions on the rectangle boundary.  The wall
convolution phi *_0 treats the exterior of the rectangle as solid at
density rho_s, matching the pore-scale operator at eps = 0.

Fluxes live on MAC faces; the density mobility is upwinded by the sign of
the face Darcy velocity u = (1/mu) A_bar F, which keeps the scheme positive
and conservative.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constitutive import PressureLaw
from .errors import ConfigError, SolverError
from .geometry import DomainMask
from .nonlocal_ops import Kernel

Array = np.ndarray


@dataclass(frozen=True)
class EffectiveConfig:
    mu: float = 1.0
    theta: float = 1.0
    t_end: float = 0.1
    cfl: float = 0.45
    record_times: tuple[float, ...] = ()

    def __post_init__(self):
        if self.mu <= 0:
            raise ConfigError("viscosity mu must be positive")
        if not 0 < self.theta <= 1:
            raise ConfigError("porosity theta must lie in (0, 1]")
        if not 0 < self.cfl < 1:
            raise ConfigError("CFL number must lie in (0, 1)")


def _check_permeability(a_bar: Array) -> Array:
    a = np.asarray(a_bar, dtype=float)
    if a.shape != (2, 2):
        raise ConfigError("permeability must be a 2x2 matrix")
    if abs(a[0, 1] - a[1, 0]) > 1e-8 * max(1.0, abs(a[0, 0])):
        raise ConfigError("permeability matrix must be symmetric")
    if np.linalg.eigvalsh(0.5 * (a + a.T)).min() <= 0:
        raise ConfigError("permeability matrix must be positive definite")
    return a


def darcy_velocity(
    rho: Array,
    mask: DomainMask,
    kernel: Kernel,
    law: PressureLaw,
    a_bar: Array,
    mu: float,
    theta: float,
) -> tuple[Array, Array]:
    """Face Darcy velocities (u on x-faces, v on y-faces), zero on the
    rectangle boundary.  u = (1/mu) A_bar (gamma theta rho_bar dC - dP)."""
    a = _check_permeability(a_bar)
    law.check_range(rho)
    conv = kernel.convolve_wall(rho, mask, law.rho_s)
    P = law.P(rho)
    g, h = law.gamma, mask.h
    nx, ny = mask.shape

    # force components on their native faces (interior faces only)
    fx = np.zeros((nx + 1, ny))
    rbx = 0.5 * (rho[:-1, :] + rho[1:, :])
    fx[1:-1, :] = (g * theta * rbx * (conv[1:, :] - conv[:-1, :]) - (P[1:, :] - P[:-1, :])) / h
    fy = np.zeros((nx, ny + 1))
    rby = 0.5 * (rho[:, :-1] + rho[:, 1:])
    fy[:, 1:-1] = (g * theta * rby * (conv[:, 1:] - conv[:, :-1]) - (P[:, 1:] - P[:, :-1])) / h

    # cross components averaged onto the other face set (4-point stencil)
    fy_at_x = np.zeros((nx + 1, ny))
    fy_at_x[1:-1, :] = 0.25 * (
        fy[:-1, :-1] + fy[:-1, 1:] + fy[1:, :-1] + fy[1:, 1:]
    )
    fx_at_y = np.zeros((nx, ny + 1))
    fx_at_y[:, 1:-1] = 0.25 * (
        fx[:-1, :-1] + fx[1:, :-1] + fx[:-1, 1:] + fx[1:, 1:]
    )

    u = (a[0, 0] * fx + a[0, 1] * fy_at_x) / mu
    v = (a[1, 0] * fx_at_y + a[1, 1] * fy) / mu
    u[0, :] = u[-1, :] = 0.0
    v[:, 0] = v[:, -1] = 0.0
    return u, v


def effective_flux(
    rho: Array,
    mask: DomainMask,
    kernel: Kernel,
    law: PressureLaw,
    a_bar: Array,
    mu: float,
    theta: float,
) -> tuple[Array, Array]:
    """Face fluxes J = rho_upwind * u with u the face Darcy velocity."""
    u, v = darcy_velocity(rho, mask, kernel, law, a_bar, mu, theta)
    ju = np.zeros_like(u)
    ju[1:-1, :] = np.where(u[1:-1, :] > 0, rho[:-1, :], rho[1:, :]) * u[1:-1, :]
    jv = np.zeros_like(v)
    jv[:, 1:-1] = np.where(v[:, 1:-1] > 0, rho[:, :-1], rho[:, 1:]) * v[:, 1:-1]
    return ju, jv


def effective_flux_bruteforce(
    rho: Array,
    mask: DomainMask,
    kernel: Kernel,
    law: PressureLaw,
    a_bar: Array,
    mu: float,
    theta: float,
) -> tuple[Array, Array]:
    """Plain double-loop construction of the same fluxes (oracle)."""
    a = np.asarray(a_bar, dtype=float)
    conv = kernel.convolve_wall(rho, mask, law.rho_s)
    P = law.P(rho)
    g, h = law.gamma, mask.h
    nx, ny = mask.shape

    fx = np.zeros((nx + 1, ny))
    fy = np.zeros((nx, ny + 1))
    for i in range(1, nx):
        for j in range(ny):
            rb = 0.5 * (rho[i - 1, j] + rho[i, j])
            fx[i, j] = (g * theta * rb * (conv[i, j] - conv[i - 1, j]) - (P[i, j] - P[i - 1, j])) / h
    for i in range(nx):
        for j in range(1, ny):
            rb = 0.5 * (rho[i, j - 1] + rho[i, j])
            fy[i, j] = (g * theta * rb * (conv[i, j] - conv[i, j - 1]) - (P[i, j] - P[i, j - 1])) / h

    ju = np.zeros((nx + 1, ny))
    jv = np.zeros((nx, ny + 1))
    for i in range(1, nx):
        for j in range(ny):
            corners = []
            for ii in (i - 1, i):
                for jj in (j, j + 1):
                    corners.append(fy[ii, jj])
            uf = (a[0, 0] * fx[i, j] + a[0, 1] * np.mean(corners)) / mu
            ju[i, j] = (rho[i - 1, j] if uf > 0 else rho[i, j]) * uf
    for i in range(nx):
        for j in range(1, ny):
            corners = []
            for ii in (i, i + 1):
                for jj in (j - 1, j):
                    corners.append(fx[ii, jj])
            vf = (a[1, 0] * np.mean(corners) + a[1, 1] * fy[i, j]) / mu
            jv[i, j] = (rho[i, j - 1] if vf > 0 else rho[i, j]) * vf
    return ju, jv


def step_effective(
    rho: Array,
    dt: float,
    mask: DomainMask,
    kernel: Kernel,
    law: PressureLaw,
    a_bar: Array,
    cfg: EffectiveConfig,
) -> Array:
    """One conservative explicit step; raises on CFL violation."""
    u, v = darcy_velocity(rho, mask, kernel, law, a_bar, cfg.mu, cfg.theta)
    speed = float(np.abs(u).max() + np.abs(v).max())
    if speed > 0 and dt > cfg.theta * mask.h / speed + 1e-15:
        raise ConfigError("time step violates the transport CFL condition")
    ju = np.zeros_like(u)
    ju[1:-1, :] = np.where(u[1:-1, :] > 0, rho[:-1, :], rho[1:, :]) * u[1:-1, :]
    jv = np.zeros_like(v)
    jv[:, 1:-1] = np.where(v[:, 1:-1] > 0, rho[:, :-1], rho[:, 1:]) * v[:, 1:-1]
    div = (ju[1:, :] - ju[:-1, :] + jv[:, 1:] - jv[:, :-1]) / mask.h
    rho_new = rho - (dt / cfg.theta) * div
    neg = float(rho_new.min())
    if neg < -1e-13 * max(1.0, float(rho.max())):
        raise SolverError(f"effective step produced negative density {neg:.2e}")
    return np.maximum(rho_new, 0.0)


@dataclass
class EffectiveRun:
    times: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    max_velocity: list = field(default_factory=list)
    dt: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)


def run_effective(
    rho0: Array,
    cfg: EffectiveConfig,
    mask: DomainMask,
    kernel: Kernel,
    law: PressureLaw,
    a_bar: Array,
    max_steps: int = 10**6,
) -> EffectiveRun:
    """Explicit upwind time-stepping to cfg.t_end on the full rectangle.

    mask must be an unperforated DomainMask (all cells fluid); snapshots at
    cfg.record_times are hit exactly by dt truncation."""
    if not mask.fluid.all():
        raise ConfigError("the effective solver runs on the unperforated domain")
    if np.any(rho0 < 0):
        raise ConfigError("initial density must be nonnegative")
    a = _check_permeability(a_bar)
    rho = np.asarray(rho0, dtype=float).copy()
    h = mask.h

    record = sorted(set(cfg.record_times))
    if record and record[-1] > cfg.t_end + 1e-12:
        raise ConfigError("record times must not exceed t_end")

    run = EffectiveRun()
    t = 0.0
    for _ in range(max_steps):
        u, v = darcy_velocity(rho, mask, kernel, law, a, cfg.mu, cfg.theta)
        speed = float(np.abs(u).max() + np.abs(v).max())
        dt = cfg.cfl * cfg.theta * h / speed if speed > 0 else cfg.t_end - t
        if dt < 1e-12 * cfg.t_end:
            raise SolverError("time step collapsed below the stiffness guard")
        dt = min(dt, cfg.t_end - t)
        for tr in record:
            if t < tr - 1e-14 and t + dt > tr:
                dt = tr - t
                break

        run.times.append(t)
        run.mass.append(h**2 * float(rho.sum()))
        run.max_velocity.append(float(max(np.abs(u).max(), np.abs(v).max())))
        run.dt.append(dt)

        ju = np.zeros_like(u)
        ju[1:-1, :] = np.where(u[1:-1, :] > 0, rho[:-1, :], rho[1:, :]) * u[1:-1, :]
        jv = np.zeros_like(v)
        jv[:, 1:-1] = np.where(v[:, 1:-1] > 0, rho[:, :-1], rho[:, 1:]) * v[:, 1:-1]
        div = (ju[1:, :] - ju[:-1, :] + jv[:, 1:] - jv[:, :-1]) / h
        rho = np.maximum(rho - (dt / cfg.theta) * div, 0.0)
        t += dt
        for tr in record:
            if abs(t - tr) <= 1e-12:
                run.snapshots[tr] = rho.copy()
        if t >= cfg.t_end - 1e-14:
            break
    else:
        raise SolverError("effective run exceeded the step budget")

    run.times.append(t)
    run.mass.append(h**2 * float(rho.sum()))
    run.final_rho = rho
    return run
