"""Numerical laboratory for quasi-static nonlocal two-phase flow in
perforated domains and its effective nonlocal Cahn-Hilliard limit.

Subpackages / modules:
    geometry          unit cell, perforated domain masks
    constitutive      pressure laws, generalized pressure, energy function
    nonlocal_ops      interaction kernels and wall-aware convolutions
    cell_problem      periodic Stokes cell problems, permeability tensor
    pore_solver       quasi-static pore-scale time stepper
    effective_solver  effective nonlocal Cahn-Hilliard solver
    extensions        zero / mean-value extension operators
    harness           convergence studies and diagnostic tables
"""

__version__ = "0.1.0"
