"""Zero and mean-value extensions from the perforated domain to the full
rectangle, plus the weak-limit coupling check between the two.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError
from .geometry import DomainMask

Array = np.ndarray


@dataclass(frozen=True)
class ExtendedField:
    values: Array = field(repr=False)
    provenance: str  # "zero" | "mean_value"
    eps: float


def zero_extend(f: Array, mask: DomainMask) -> ExtendedField:
    """f on fluid cells, zero on grains."""
    return ExtendedField(
        values=np.where(mask.fluid, f, 0.0), provenance="zero", eps=mask.eps
    )


def mean_value_extend(f: Array, mask: DomainMask) -> ExtendedField:
    """f on fluid cells; on each grain the average of f over that eps-cell's
    annulus (the surrounding region of the unit cell minus the grain)."""
    r = mask.cells_per_eps
    annulus = mask.cell.annulus_mask_at(r)
    if not annulus.any():
        raise ConfigError("annulus contains no grid cells at this resolution")
    solid = mask.cell.solid_mask_at(r)
    n_ann = int(annulus.sum())

    out = np.where(mask.fluid, f, 0.0).astype(float)
    eps, h, dom = mask.eps, mask.h, mask.domain
    for kx, ky in mask.k_indices:
        ix = round((eps * kx - dom.x0) / h)
        iy = round((eps * ky - dom.y0) / h)
        block = f[ix : ix + r, iy : iy + r]
        avg = float(block[annulus].sum()) / n_ann
        sub = out[ix : ix + r, iy : iy + r]
        sub[solid] = avg
    return ExtendedField(values=out, provenance="mean_value", eps=mask.eps)


@dataclass(frozen=True)
class WeakLimitRow:
    eps: float
    test_function: str
    mean_value_error: float  # | int(hat g_eps psi) - int(g psi) |
    zero_error: float  # | int(tilde g_eps psi) - theta int(g psi) |


def weak_limit_check(
    families: Sequence[tuple[float, Array, DomainMask]],
    g: Array,
    theta: float,
    test_functions: dict[str, Callable[[Array, Array], Array]],
) -> list[WeakLimitRow]:
    """Probe the equivalence of the two weak limits with a fixed test set.

    families: (eps, g_eps on the common grid, mask) with eps decreasing.
    For each test function psi the mean-value extension is compared against
    int(g psi) and the zero extension against theta int(g psi); the two
    error columns are expected to shrink together.
    """
    if len(families) > 1 and any(
        b[0] >= a[0] for a, b in zip(families, families[1:])
    ):
        raise ConfigError("eps values must be strictly decreasing")
    shapes = {m.shape for _, _, m in families}
    if len(shapes) > 1 or (families and families[0][2].shape != g.shape):
        raise ConfigError("all fields must share one grid")

    rows = []
    for eps, g_eps, mask in families:
        h2 = mask.h**2
        x, y = mask.cell_centers()
        hat = mean_value_extend(g_eps, mask).values
        tilde = zero_extend(g_eps, mask).values
        for name, psi in test_functions.items():
            w = psi(x, y)
            target = h2 * float(np.sum(g * w))
            a_err = abs(h2 * float(np.sum(hat * w)) - target)
            b_err = abs(h2 * float(np.sum(tilde * w)) - theta * target)
            rows.append(WeakLimitRow(eps, name, a_err, b_err))
    return rows


def default_test_functions() -> dict[str, Callable[[Array, Array], Array]]:
    return {
        "one": lambda x, y: np.ones_like(x),
        "linear_x": lambda x, y: x,
        "linear_y": lambda x, y: y,
        "quadratic": lambda x, y: x * y + x**2,
        "gaussian": lambda x, y: np.exp(-8.0 * ((x - 0.5) ** 2 + (y - 0.5) ** 2)),
    }
