"""Command-line entry point.

    korteweg cell           --config cfg.yaml --out dir
    korteweg pore           --config cfg.yaml --out dir
    korteweg effective      --config cfg.yaml --out dir
    korteweg compare        --config cfg.yaml --out dir
    korteweg check-pressure --config cfg.yaml --out dir

Exit codes: 0 success, 2 config error, 3 solver failure, 4 contract
violation (e.g. a non-monotone convergence table).
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .cell_problem import permeability, solve_cell_problem
from .config import RunConfig, load_config
from .constitutive import check_admissibility
from .effective_solver import EffectiveConfig, run_effective
from .errors import ConfigError, ContractError, SolverError
from .extensions import mean_value_extend, zero_extend
from .geometry import build_perforated_domain
from .harness import apriori_table, convergence_study, poincare_table
from .io import FieldSnapshot, write_csv, write_field, write_manifest, write_mask
from .nonlocal_ops import build_unperforated, make_kernel
from .pore_solver import PoreConfig, run_pore


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_cell(cfg: RunConfig, out: Path) -> dict:
    cell = cfg.geometry.build_cell()
    perm = permeability(cell, method=cfg.study.cell_method)
    write_csv(
        out / "permeability.csv",
        ["row", "col", "value"],
        [(i, j, perm.matrix[i, j]) for i in range(2) for j in range(2)],
    )
    write_csv(
        out / "cell_report.csv",
        ["quantity", "value"],
        [
            ("porosity", cell.porosity),
            ("asymmetry", perm.asymmetry),
            ("eig_min", min(perm.eigenvalues)),
            ("eig_max", max(perm.eigenvalues)),
            ("div_residual_1", perm.div_residuals[0]),
            ("div_residual_2", perm.div_residuals[1]),
            ("momentum_residual_1", perm.momentum_residuals[0]),
            ("momentum_residual_2", perm.momentum_residuals[1]),
        ],
    )
    for i in (1, 2):
        sol = solve_cell_problem(cell, i, method=cfg.study.cell_method)
        for name, vals in (("u", sol.u), ("v", sol.v), ("q", sol.q)):
            write_field(
                out / f"cell_{name}{i}.field",
                FieldSnapshot(name=f"cell_{name}{i}", h=sol.h, t=0.0, values=vals),
            )
    write_mask(out / "cell_solid.mask", ~cell.solid_mask, 1.0 / cell.resolution)
    return {"porosity": cell.porosity, "permeability": perm.matrix.tolist()}


def cmd_pore(cfg: RunConfig, out: Path) -> dict:
    cell = cfg.geometry.build_cell()
    law, energy = cfg.constitutive.build()
    eps = cfg.geometry.eps[0]
    mask = build_perforated_domain(cell, eps, cfg.geometry.domain)
    kernel = make_kernel(cfg.kernel.delta, mask.h)
    x, y = mask.cell_centers()
    rho0 = np.where(mask.fluid, cfg.pore.initial.evaluate(x, y, cfg.geometry.domain), 0.0)
    pc = PoreConfig(
        mu=cfg.pore.mu, xi=cfg.pore.xi, eps=eps, t_end=cfg.pore.t_end,
        cfl=cfg.pore.cfl, record_times=cfg.pore.record_times,
    )
    run = run_pore(rho0, pc, mask, kernel, law, energy)
    n = len(run.dt)
    write_csv(
        out / "pore_diagnostics.csv",
        ["t", "mass", "E_fluid_fluid", "E_fluid_solid", "E_bulk", "D", "D_numerical",
         "residual", "max_u", "dt"],
        [
            (run.times[k], run.mass[k], run.energy_ff[k], run.energy_fs[k],
             run.energy_bulk[k], run.dissipation[k], run.numerical_dissipation[k],
             run.balance_residual[k], run.max_velocity[k], run.dt[k])
            for k in range(n)
        ],
    )
    write_mask(out / "pore_fluid.mask", mask.fluid, mask.h)
    for t, rho in sorted(run.snapshots.items()):
        hat = mean_value_extend(rho, mask)
        tilde = zero_extend(rho, mask)
        write_field(
            out / f"rho_eps_t{t:g}.field",
            FieldSnapshot("rho_eps", mask.h, t, rho, comments=("extension: none",)),
        )
        write_field(
            out / f"rho_hat_t{t:g}.field",
            FieldSnapshot("rho_hat", mask.h, t, hat.values,
                          comments=(f"extension: {hat.provenance}",)),
        )
        write_field(
            out / f"rho_tilde_t{t:g}.field",
            FieldSnapshot("rho_tilde", mask.h, t, tilde.values,
                          comments=(f"extension: {tilde.provenance}",)),
        )
    return {"eps": eps, "steps": n, "final_mass": run.mass[-1]}


def cmd_effective(cfg: RunConfig, out: Path) -> dict:
    cell = cfg.geometry.build_cell()
    law, _ = cfg.constitutive.build()
    dom = cfg.geometry.domain
    h = cfg.geometry.eps[0] / cfg.geometry.m
    mask = build_unperforated(dom, h, cell)
    kernel = make_kernel(cfg.kernel.delta, h)

    if cfg.effective.permeability is not None:
        a_bar = np.asarray(cfg.effective.permeability, dtype=float)
    elif cfg.effective.permeability_csv is not None:
        from .io import read_csv

        _, rows = read_csv(cfg.effective.permeability_csv)
        a_bar = np.zeros((2, 2))
        for i, j, v in rows:
            a_bar[int(i), int(j)] = float(v)
    else:
        a_bar = permeability(cell, method=cfg.study.cell_method).matrix
    theta = cfg.effective.theta_override
    if theta is not None:
        print(f"WARNING: porosity override theta={theta} (reduction-test mode)")
    else:
        theta = cell.porosity

    x, y = mask.cell_centers()
    rho0 = cfg.effective.initial.evaluate(x, y, dom)
    ec = EffectiveConfig(
        mu=cfg.effective.mu, theta=theta, t_end=cfg.effective.t_end,
        cfl=cfg.effective.cfl, record_times=cfg.effective.record_times,
    )
    run = run_effective(rho0, ec, mask, kernel, law, a_bar)
    write_csv(
        out / "effective_diagnostics.csv",
        ["t", "mass", "max_u", "dt"],
        [
            (run.times[k], run.mass[k], run.max_velocity[k], run.dt[k])
            for k in range(len(run.dt))
        ],
    )
    for t, rho in sorted(run.snapshots.items()):
        write_field(out / f"rho_ch_t{t:g}.field", FieldSnapshot("rho_ch", h, t, rho))
    return {"theta": theta, "steps": len(run.dt), "final_mass": run.mass[-1]}


def cmd_compare(cfg: RunConfig, out: Path) -> dict:
    rows = []

    def progress(row):
        print(
            f"eps={row.eps}: e_rho={row.density_error:.6e} "
            f"darcy={row.darcy_residual:.6e} ({row.wall_time:.1f}s)",
            flush=True,
        )

    report = convergence_study(cfg, progress=progress)
    for r in report.rows:
        rows.append((r.eps, r.density_error, r.darcy_residual, r.poincare_max,
                     r.wall_time, report.config_hash))
    write_csv(
        out / "convergence.csv",
        ["eps", "e_rho", "darcy_residual", "poincare_max", "wall_time", "config_hash"],
        rows,
    )
    ap = apriori_table(report)
    write_csv(
        out / "apriori.csv",
        ["eps", "u_over_eps2_L2L2", "Du_over_eps_L2L2", "W_LinfL1", "rho_LinfL2",
         "within_envelope", "config_hash"],
        [
            (r["eps"], r["u_over_eps2_L2L2"], r["Du_over_eps_L2L2"], r["W_LinfL1"],
             r["rho_LinfL2"], r["within_envelope"], report.config_hash)
            for r in ap
        ],
    )
    prow, spread = poincare_table(report)
    write_csv(
        out / "poincare.csv",
        ["eps", "max_ratio", "spread", "config_hash"],
        [(r["eps"], r["max_ratio"], spread, report.config_hash) for r in prow],
    )
    for t, rho in sorted(report.effective_run.snapshots.items()):
        write_field(
            out / f"rho_ch_t{t:g}.field",
            FieldSnapshot("rho_ch", min(report.masks.values(), key=lambda m: m.eps).h
                          if report.masks else 0.0, t, rho),
        )
    report.assert_monotone()
    return {"theta": report.theta, "eps_count": len(report.rows)}


def cmd_check_pressure(cfg: RunConfig, out: Path) -> dict:
    law, energy = cfg.constitutive.build()
    rep = check_admissibility(law, cfg.constitutive.r_max)
    width = max(len(i.name) for i in rep.items)
    for item in rep.items:
        status = "PASS" if item.passed else "FAIL"
        print(f"  {item.item}. {item.name:<{width}}  measured={item.measured:< 14.6e} "
              f"bound={item.bound:< 14.6e}  {status}")
    print(f"  overall: {'ADMISSIBLE' if rep.admissible else 'NOT ADMISSIBLE'}"
          f" (alpha = {rep.alpha:.6e})")
    write_csv(
        out / "admissibility.csv",
        ["item", "name", "measured", "bound", "pass"],
        [(i.item, i.name, i.measured, i.bound, i.passed) for i in rep.items],
    )
    r = np.linspace(0.0, min(cfg.constitutive.r_max, 4.0 * law.rho_s), 400)
    write_csv(
        out / "pressure_curves.csv",
        ["rho", "p", "P", "W"],
        zip(r.tolist(), law.p(r).tolist(), law.P(r).tolist(), energy.W(r).tolist()),
    )
    return {"admissible": rep.admissible, "alpha": rep.alpha}


_COMMANDS = {
    "cell": cmd_cell,
    "pore": cmd_pore,
    "effective": cmd_effective,
    "compare": cmd_compare,
    "check-pressure": cmd_check_pressure,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="korteweg",
        description="Pore-scale two-phase flow in perforated domains and its "
        "homogenized (nonlocal Cahn-Hilliard / Darcy) limit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--out", required=True, help="output directory")
    args = parser.parse_args(argv)

    t0 = time.perf_counter()
    try:
        cfg = load_config(args.config)
        out = _out_dir(args)
        extra = _COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except ContractError as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return 4
    write_manifest(
        out, cfg.raw_text, args.command,
        {"total": time.perf_counter() - t0}, extra={"results": extra},
    )
    print(f"done: outputs in {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
