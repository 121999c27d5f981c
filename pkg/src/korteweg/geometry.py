"""Unit cell and perforated-domain construction.

All masks live on uniform Cartesian grids with array index [ix, iy] and
cell centers at x = x0 + (ix + 1/2) h.  A cell is solid iff its center
lies inside the grain (first-order accurate, so measured porosities carry
an O(1/m) quadrature error).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

_TOL = 1e-12


@dataclass(frozen=True)
class GrainShape:
    """Parametric solid grain inside the unit square.

    kind: "disc" (radius), "square" (half_width), "ellipse" (rx, ry).
    """

    kind: str
    center: tuple[float, float] = (0.5, 0.5)
    radius: float = 0.25
    half_width: float = 0.25
    radii: tuple[float, float] = (0.25, 0.15)

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        cx, cy = self.center
        if self.kind == "disc":
            return (x - cx) ** 2 + (y - cy) ** 2 <= self.radius**2
        if self.kind == "square":
            w = self.half_width
            return (np.abs(x - cx) <= w) & (np.abs(y - cy) <= w)
        if self.kind == "ellipse":
            rx, ry = self.radii
            return ((x - cx) / rx) ** 2 + ((y - cy) / ry) ** 2 <= 1.0
        raise ConfigError(f"unknown grain kind {self.kind!r}")

    @property
    def half_extents(self) -> tuple[float, float]:
        """Half-widths of the axis-aligned bounding box."""
        if self.kind == "disc":
            return (self.radius, self.radius)
        if self.kind == "square":
            return (self.half_width, self.half_width)
        if self.kind == "ellipse":
            return self.radii
        raise ConfigError(f"unknown grain kind {self.kind!r}")

    @property
    def circumradius(self) -> float:
        if self.kind == "disc":
            return self.radius
        if self.kind == "square":
            return self.half_width * np.sqrt(2.0)
        if self.kind == "ellipse":
            return max(self.radii)
        raise ConfigError(f"unknown grain kind {self.kind!r}")

    @property
    def analytic_area(self) -> float:
        if self.kind == "disc":
            return np.pi * self.radius**2
        if self.kind == "square":
            return (2.0 * self.half_width) ** 2
        if self.kind == "ellipse":
            return np.pi * self.radii[0] * self.radii[1]
        raise ConfigError(f"unknown grain kind {self.kind!r}")


def _center_grid(n: int) -> tuple[np.ndarray, np.ndarray]:
    c = (np.arange(n) + 0.5) / n
    return np.meshgrid(c, c, indexing="ij")


@dataclass(frozen=True)
class UnitCell:
    """Discrete unit cell: solid grain mask, annulus mask, porosity."""

    resolution: int
    shape: GrainShape
    annulus_radius: float
    solid_mask: np.ndarray = field(repr=False)
    annulus_mask: np.ndarray = field(repr=False)
    solid_area: float
    porosity: float

    def solid_mask_at(self, resolution: int) -> np.ndarray:
        """Re-stamp the grain on a grid of the given resolution using the
        same center-in-grain rule (identical to solid_mask when
        resolution == self.resolution)."""
        if resolution == self.resolution:
            return self.solid_mask
        x, y = _center_grid(resolution)
        return self.shape.contains(x, y)

    def annulus_mask_at(self, resolution: int) -> np.ndarray:
        """Annulus (surrounding region minus grain) at the given resolution."""
        if resolution == self.resolution:
            return self.annulus_mask
        x, y = _center_grid(resolution)
        cx, cy = self.shape.center
        inside = (x - cx) ** 2 + (y - cy) ** 2 <= self.annulus_radius**2
        return inside & ~self.shape.contains(x, y)


def build_unit_cell(
    shape: GrainShape, m: int, annulus_radius: float | None = None
) -> UnitCell:
    """Build the discrete unit cell at resolution m (cells per unit length).

    Rejects empty grains and grains that come closer than two grid cells
    to the cell boundary (periodic smoothness of the cell solutions needs
    a strictly interior grain).
    """
    if m < 4:
        raise ConfigError("unit cell resolution m must be at least 4")
    x, y = _center_grid(m)
    solid = shape.contains(x, y)
    if not solid.any():
        raise ConfigError("empty solid grain")
    if solid.all():
        raise ConfigError("grain fills the whole unit cell")

    # strict interiority: parametric bounding check plus the mask margin
    cx, cy = shape.center
    ex, ey = shape.half_extents
    rc = shape.circumradius
    margin = 2.0 / m
    if min(cx - ex, cy - ey, 1.0 - cx - ex, 1.0 - cy - ey) < margin - _TOL:
        raise ConfigError(
            "grain touches the unit-cell boundary (needs a two-cell margin)"
        )

    if annulus_radius is not None:
        r_r = annulus_radius
    else:
        r_r = min(rc + 0.15, 0.5 - 1.0 / m)
    if r_r <= rc:
        raise ConfigError("annulus radius must exceed the grain circumradius")
    if min(cx - r_r, cy - r_r, 1.0 - cx - r_r, 1.0 - cy - r_r) < -_TOL:
        raise ConfigError("annulus region must stay inside the unit cell")
    annulus = ((x - cx) ** 2 + (y - cy) ** 2 <= r_r**2) & ~solid

    area = float(solid.sum()) / m**2
    cell = UnitCell(
        resolution=m,
        shape=shape,
        annulus_radius=r_r,
        solid_mask=solid,
        annulus_mask=annulus,
        solid_area=area,
        porosity=1.0 - area,
    )
    return cell


def refine_unit_cell(cell: UnitCell, factor: int) -> UnitCell:
    """Refine the discrete cell by exact mask subdivision (each cell splits
    into factor^2 copies).  The staircase grain polygon is kept fixed, so
    solver results on refined cells measure pure discretization error."""
    if factor < 1:
        raise ConfigError("refinement factor must be a positive integer")
    if factor == 1:
        return cell
    one = np.ones((factor, factor), dtype=bool)
    return UnitCell(
        resolution=cell.resolution * factor,
        shape=cell.shape,
        annulus_radius=cell.annulus_radius,
        solid_mask=np.kron(cell.solid_mask, one),
        annulus_mask=np.kron(cell.annulus_mask, one),
        solid_area=cell.solid_area,
        porosity=cell.porosity,
    )


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned computational domain."""

    x0: float = 0.0
    y0: float = 0.0
    lx: float = 1.0
    ly: float = 1.0


@dataclass(frozen=True)
class DomainMask:
    """Perforated domain on a uniform grid.

    fluid:        True on fluid cells of the perforated domain.
    omega_k:      True on cells belonging to whole interior eps-cells.
    omega_k_eps:  omega_k minus the grains.
    """

    domain: Rectangle
    eps: float
    h: float
    cell: UnitCell
    fluid: np.ndarray = field(repr=False)
    omega_k: np.ndarray = field(repr=False)
    omega_k_eps: np.ndarray = field(repr=False)
    k_indices: tuple[tuple[int, int], ...]

    @property
    def shape(self) -> tuple[int, int]:
        return self.fluid.shape

    @property
    def cells_per_eps(self) -> int:
        return round(self.eps / self.h)

    def measured_porosity(self) -> float:
        """|Omega_{K,eps}| / |Omega_K| by cell counting (1.0 if no grains)."""
        nk = int(self.omega_k.sum())
        if nk == 0:
            return 1.0
        return float(self.omega_k_eps.sum()) / nk

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        nx, ny = self.fluid.shape
        x = self.domain.x0 + (np.arange(nx) + 0.5) * self.h
        y = self.domain.y0 + (np.arange(ny) + 0.5) * self.h
        return np.meshgrid(x, y, indexing="ij")


def interior_cell_indices(domain: Rectangle, eps: float) -> list[tuple[int, int]]:
    """Indices k with eps*(Y + k) strictly inside the rectangle.

    Cells whose closure touches the boundary are excluded (the
    conservative reading of the strict inclusion).
    """
    out = []
    kx_lo = int(np.floor(domain.x0 / eps)) - 1
    kx_hi = int(np.ceil((domain.x0 + domain.lx) / eps)) + 1
    ky_lo = int(np.floor(domain.y0 / eps)) - 1
    ky_hi = int(np.ceil((domain.y0 + domain.ly) / eps)) + 1
    tol = _TOL * max(1.0, domain.lx, domain.ly)
    for kx in range(kx_lo, kx_hi + 1):
        if not (eps * kx > domain.x0 + tol and eps * (kx + 1) < domain.x0 + domain.lx - tol):
            continue
        for ky in range(ky_lo, ky_hi + 1):
            if eps * ky > domain.y0 + tol and eps * (ky + 1) < domain.y0 + domain.ly - tol:
                out.append((kx, ky))
    return out


def build_perforated_domain(
    cell: UnitCell,
    eps: float,
    domain: Rectangle = Rectangle(),
    h: float | None = None,
) -> DomainMask:
    """Stamp the grain into every whole interior eps-cell of the rectangle.

    The grid spacing must divide both the domain extents and eps; the grain
    is re-stamped at resolution eps/h so masks at different eps built on a
    shared grid remain consistent with the same unit cell.
    """
    if eps <= 0:
        raise ConfigError("eps must be positive")
    if h is None:
        h = eps / cell.resolution
    for L, name in ((domain.lx, "lx"), (domain.ly, "ly")):
        n = L / h
        if abs(n - round(n)) > 1e-9:
            raise ConfigError(f"grid spacing h does not divide domain extent {name}")
    r = eps / h
    if abs(r - round(r)) > 1e-9:
        raise ConfigError("eps/h must be an integer (cells per eps-cell)")
    r = round(r)
    if r < 4:
        raise ConfigError("eps-cell is under-resolved (need eps/h >= 4)")

    nx = round(domain.lx / h)
    ny = round(domain.ly / h)
    fluid = np.ones((nx, ny), dtype=bool)
    omega_k = np.zeros((nx, ny), dtype=bool)

    ks = interior_cell_indices(domain, eps)
    stamp = cell.solid_mask_at(r)
    for kx, ky in ks:
        ix = round((eps * kx - domain.x0) / h)
        iy = round((eps * ky - domain.y0) / h)
        omega_k[ix : ix + r, iy : iy + r] = True
        fluid[ix : ix + r, iy : iy + r] = ~stamp

    return DomainMask(
        domain=domain,
        eps=eps,
        h=h,
        cell=cell,
        fluid=fluid,
        omega_k=omega_k,
        omega_k_eps=omega_k & fluid,
        k_indices=tuple(ks),
    )
