#!/usr/bin/env python3
"""Desk-scale checks of the two limit mechanisms feeding the homogenized
equation: the perforated-convolution gradient limit and the equivalence of
the zero/mean-value extensions in the weak topology.

Usage: python scripts/run_limit_checks.py
"""

import numpy as np

from korteweg.extensions import default_test_functions, weak_limit_check
from korteweg.geometry import GrainShape, Rectangle, build_perforated_domain, build_unit_cell
from korteweg.nonlocal_ops import homogenized_convergence_check, make_kernel

if __name__ == "__main__":
    dom = Rectangle()
    cell = build_unit_cell(GrainShape("disc", radius=0.25), 8)
    eps_list = [0.25, 0.125, 0.0625]
    h = min(eps_list) / cell.resolution
    kernel = make_kernel(0.2, h)

    nx = round(dom.lx / h)
    x = (np.arange(nx) + 0.5) * h
    xx, yy = np.meshgrid(x, x, indexing="ij")
    f = 1.0 + 0.5 * np.sin(2 * np.pi * xx) * np.cos(2 * np.pi * yy)

    print("perforated-convolution gradient limit  ||grad(phi*_eps f) - theta grad(phi*_0 f)||_L2")
    for eps, err in homogenized_convergence_check(f, cell, dom, eps_list, kernel, rho_s=1.0):
        print(f"  eps={eps:<8} error={err:.6e}")

    print("\nextension weak-limit equivalence (per test function)")
    families = []
    for eps in eps_list:
        mask = build_perforated_domain(cell, eps, dom, h=h)
        families.append((eps, np.where(mask.fluid, f, 0.0), mask))
    rows = weak_limit_check(families, f, cell.porosity, default_test_functions())
    print(f"  {'eps':>8} {'psi':>10} {'mean-value err':>16} {'zero-ext err':>14}")
    for r in rows:
        print(f"  {r.eps:>8} {r.test_function:>10} {r.mean_value_error:>16.6e} {r.zero_error:>14.6e}")
