#!/usr/bin/env python3
"""Permeability self-convergence table: solve the cell Stokes problem on a
nested refinement hierarchy of one staircase grain and report the observed
Richardson order.

Usage: python scripts/run_cell_convergence.py [m0] [levels]
"""

import sys

import numpy as np

from korteweg.cell_problem import permeability
from korteweg.geometry import GrainShape, build_unit_cell, refine_unit_cell

if __name__ == "__main__":
    m0 = int(sys.argv[1]) if len(sys.argv) > 1 else 32
    levels = int(sys.argv[2]) if len(sys.argv) > 2 else 3
    base = build_unit_cell(GrainShape("disc", radius=0.25), m0)
    values = []
    print(f"{'m':>6} {'A11':>14} {'A12':>12} {'asymmetry':>12}")
    for k in range(levels):
        cell = refine_unit_cell(base, 2**k)
        perm = permeability(cell)
        a = perm.matrix
        values.append(a[0, 0])
        print(f"{cell.resolution:>6} {a[0, 0]:>14.8e} {a[0, 1]:>12.2e} {perm.asymmetry:>12.2e}")
    if len(values) >= 3:
        e = [abs(v - values[-1]) for v in values[:-1]]
        order = np.log2(e[0] / e[1]) if e[1] > 0 else float("inf")
        print(f"observed order vs finest level: {order:.3f}")
