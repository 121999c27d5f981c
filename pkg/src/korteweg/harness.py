"""Homogenization study orchestration.

Runs the pore solver over a decreasing eps-sequence on one shared grid,
runs the effective solver with the permeability and porosity taken from
the cell problem, and measures:

  * e_rho(eps): the L2-in-space-time gap between the mean-value extension
    of the pore density and the effective density at common times,
  * weak-sense Darcy residuals between the rescaled pore velocity and the
    effective Darcy velocity,
  * the uniform-in-eps a-priori norm table,
  * Poincare ratios ||u|| / (eps ||Du||).

Grids are never interpolated: the shared spacing must divide every eps,
and configs violating that nesting are rejected up front.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .cell_problem import permeability
from .config import RunConfig
from .constitutive import EnergyFunction, PressureLaw
from .effective_solver import EffectiveConfig, darcy_velocity, run_effective
from .errors import ConfigError, ContractError
from .extensions import default_test_functions, mean_value_extend
from .geometry import DomainMask, build_perforated_domain
from .io import config_hash
from .nonlocal_ops import build_unperforated, make_kernel
from .pore_solver import PoreConfig, PoreRun, run_pore

Array = np.ndarray


@dataclass(frozen=True)
class EpsReport:
    eps: float
    density_error: float  # e_rho(eps)
    darcy_residual: float  # max over times and test functions
    apriori: dict  # four uniform-norm columns
    poincare_max: float
    wall_time: float


@dataclass
class ConvergenceReport:
    config_hash: str
    theta: float
    permeability: Array
    times: tuple[float, ...]
    rows: list = field(default_factory=list)  # EpsReport, eps decreasing
    effective_run: object = None
    pore_runs: dict = field(default_factory=dict)  # eps -> PoreRun
    masks: dict = field(default_factory=dict)  # eps -> DomainMask
    complete: bool = False

    def assert_monotone(self) -> None:
        errs = [r.density_error for r in self.rows]
        if any(b >= a for a, b in zip(errs, errs[1:])):
            raise ContractError(f"density errors not strictly decreasing: {errs}")
        res = [r.darcy_residual for r in self.rows]
        if any(b >= a for a, b in zip(res, res[1:])):
            raise ContractError(f"Darcy residuals not strictly decreasing: {res}")


def common_grid_spacing(cfg: RunConfig) -> float:
    """h = eps_min / m; every eps in the study must be an integer multiple."""
    eps_list = cfg.study.eps_list
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ConfigError("study eps_list must be strictly decreasing")
    h = min(eps_list) / cfg.geometry.m
    for eps in eps_list:
        r = eps / h
        if abs(r - round(r)) > 1e-9:
            raise ConfigError(f"grid nesting violated: eps={eps} is not a multiple of h={h}")
    for L in (cfg.geometry.domain.lx, cfg.geometry.domain.ly):
        n = L / h
        if abs(n - round(n)) > 1e-9:
            raise ConfigError("grid nesting violated: h does not divide the domain extent")
    return h


def _compare_times(cfg: RunConfig) -> tuple[float, ...]:
    times = cfg.study.compare_times
    if not times:
        n = 4
        t_end = cfg.pore.t_end
        times = tuple((k + 1) * t_end / n for k in range(n))
    if any(t <= 0 for t in times) or any(b <= a for a, b in zip(times, times[1:])):
        raise ConfigError("compare times must be positive and increasing")
    if times[-1] > cfg.pore.t_end + 1e-12:
        raise ConfigError("compare times must not exceed pore t_end")
    return times


def _cell_velocity(u: Array, v: Array) -> tuple[Array, Array]:
    """Average MAC face velocities to cell centers."""
    return 0.5 * (u[:-1, :] + u[1:, :]), 0.5 * (v[:, :-1] + v[:, 1:])


def darcy_residual(
    pore_uv: tuple[Array, Array],
    rho_eff: Array,
    eff_mask: DomainMask,
    kernel,
    law: PressureLaw,
    a_bar: Array,
    mu: float,
    theta: float,
    eps: float,
    rho_floor: float,
    test_functions=None,
) -> float:
    """Weak-sense gap between the rescaled pore velocity u_eps/eps^2 and the
    effective Darcy velocity, restricted to {rho_eff > rho_floor}."""
    if test_functions is None:
        test_functions = default_test_functions()
    h2 = eff_mask.h**2
    x, y = eff_mask.cell_centers()
    ux_p, uy_p = _cell_velocity(*pore_uv)
    ud, vd = darcy_velocity(rho_eff, eff_mask, kernel, law, a_bar, mu, theta)
    ux_d, uy_d = _cell_velocity(ud, vd)
    live = rho_eff > rho_floor
    ux_d = np.where(live, ux_d, 0.0)
    uy_d = np.where(live, uy_d, 0.0)
    worst = 0.0
    for psi in test_functions.values():
        w = psi(x, y)
        for p_c, d_c in ((ux_p, ux_d), (uy_p, uy_d)):
            gap = abs(h2 * float(np.sum(p_c * w / eps**2)) - h2 * float(np.sum(d_c * w)))
            worst = max(worst, gap)
    return worst


def apriori_norms(run: PoreRun, eps: float) -> dict:
    """The four uniform-in-eps norms from the pore diagnostics."""
    dt = np.asarray(run.dt)
    v_l2 = np.asarray(run.velocity_l2)
    v_h1 = np.asarray(run.velocity_grad_l2)
    return {
        "u_over_eps2_L2L2": float(np.sqrt(np.sum(dt * (v_l2 / eps**2) ** 2))),
        "Du_over_eps_L2L2": float(np.sqrt(np.sum(dt * (v_h1 / eps) ** 2))),
        "W_LinfL1": float(np.max(run.bulk_energy_l1)),
        "rho_LinfL2": float(np.max(run.rho_l2)),
    }


def poincare_ratios(run: PoreRun, eps: float) -> list[float]:
    """||u||_L2 / (eps ||Du||_L2) per step; zero-velocity steps skipped."""
    out = []
    for l2, gl2 in zip(run.velocity_l2, run.velocity_grad_l2):
        if gl2 > 0:
            out.append(l2 / (eps * gl2))
    return out


def convergence_study(cfg: RunConfig, progress=None) -> ConvergenceReport:
    """Run the full pore-vs-effective comparison for cfg.study.eps_list."""
    h = common_grid_spacing(cfg)
    cell = cfg.geometry.build_cell()
    law, energy = cfg.constitutive.build()
    kernel = make_kernel(cfg.kernel.delta, h)
    times = _compare_times(cfg)
    dom = cfg.geometry.domain

    perm = permeability(cell, method=cfg.study.cell_method)
    a_bar = perm.matrix
    if cfg.effective.permeability is not None:
        a_bar = np.asarray(cfg.effective.permeability, dtype=float)
    theta = cfg.effective.theta_override
    if theta is None:
        theta = cell.porosity

    eff_mask = build_unperforated(dom, h, cell)
    x, y = eff_mask.cell_centers()
    rho0 = cfg.pore.initial.evaluate(x, y, dom)
    law.check_range(rho0)

    eff_cfg = EffectiveConfig(
        mu=cfg.effective.mu, theta=theta, t_end=cfg.pore.t_end,
        cfl=cfg.effective.cfl, record_times=times,
    )
    eff_run = run_effective(rho0, eff_cfg, eff_mask, kernel, law, a_bar)

    report = ConvergenceReport(
        config_hash=config_hash(cfg.raw_text),
        theta=theta,
        permeability=a_bar,
        times=times,
        effective_run=eff_run,
    )

    dts = np.diff(np.concatenate([[0.0], np.asarray(times)]))
    rho_floor = cfg.study.rho_floor * float(rho0.max())
    for eps in cfg.study.eps_list:
        tic = time.perf_counter()
        mask = build_perforated_domain(cell, eps, dom, h=h)
        pore_cfg = PoreConfig(
            mu=cfg.pore.mu, xi=cfg.pore.xi, eps=eps, t_end=cfg.pore.t_end,
            cfl=cfg.pore.cfl, record_times=times,
        )
        run = run_pore(
            np.where(mask.fluid, rho0, 0.0), pore_cfg, mask, kernel, law, energy
        )

        err_sq = 0.0
        res = 0.0
        for t, dt_j in zip(times, dts):
            hat = mean_value_extend(run.snapshots[t], mask).values
            diff = hat - eff_run.snapshots[t]
            err_sq += dt_j * float(np.sum(diff**2)) * h**2
            res = max(
                res,
                darcy_residual(
                    run.velocity_snapshots[t], eff_run.snapshots[t], eff_mask,
                    kernel, law, a_bar, cfg.effective.mu, theta, eps, rho_floor,
                ),
            )
        ratios = poincare_ratios(run, eps)
        row = EpsReport(
            eps=eps,
            density_error=float(np.sqrt(err_sq)),
            darcy_residual=res,
            apriori=apriori_norms(run, eps),
            poincare_max=max(ratios) if ratios else 0.0,
            wall_time=time.perf_counter() - tic,
        )
        report.rows.append(row)
        report.pore_runs[eps] = run
        report.masks[eps] = mask
        if progress is not None:
            progress(row)
    report.complete = True
    return report


def apriori_table(report: ConvergenceReport) -> list[dict]:
    """Per-eps norm rows plus the 2x-envelope check against the coarsest eps."""
    rows = []
    base = report.rows[0].apriori
    for r in report.rows:
        row = {"eps": r.eps}
        ok = True
        for key, val in r.apriori.items():
            row[key] = val
            if base[key] > 0 and val > 2.0 * base[key]:
                ok = False
            if base[key] == 0 and val > 1e-12:
                ok = False
        row["within_envelope"] = ok
        rows.append(row)
    return rows


def poincare_table(report: ConvergenceReport) -> tuple[list[dict], float]:
    """Per-eps max ratio and the relative spread across eps."""
    rows = [{"eps": r.eps, "max_ratio": r.poincare_max} for r in report.rows]
    vals = [r.poincare_max for r in report.rows if r.poincare_max > 0]
    spread = (max(vals) - min(vals)) / max(vals) if vals else 0.0
    return rows, spread
