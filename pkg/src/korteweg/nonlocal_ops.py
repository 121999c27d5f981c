"""Interaction kernels and wall-aware convolutions.

The wall convolution treats everything outside the fluid region (grains,
and the exterior of the computational rectangle) as a constant wall
density.  Fast path: since the kernel integrates to one,

    phi *_X rho = rho_s + phi * [(rho - rho_s) 1_X],

with the right-hand convolution running over the whole plane and the
bracketed field zero-extended.  The identity is exact, not an
approximation, so the fast path must agree with the literal two-integral
definition to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import convolve

from .errors import ConfigError
from .geometry import DomainMask, Rectangle, UnitCell, build_perforated_domain

Array = np.ndarray

# direct summation keeps fast path vs brute force agreement at round-off
_DIRECT_SIZE_LIMIT = 96 * 96


def _conv2(f: Array, stencil: Array) -> Array:
    method = "direct" if f.size <= _DIRECT_SIZE_LIMIT else "fft"
    return convolve(f, stencil, mode="same", method=method)


@dataclass(frozen=True)
class Kernel:
    """Discrete compactly supported interaction kernel on a grid of spacing h.

    phi is renormalized so that h^2 * sum(phi) = 1 exactly; grad_phi is the
    analytic gradient sampled on the same patch (exactly antisymmetric).
    """

    delta: float
    h: float
    half_width: int
    phi: Array = field(repr=False)
    grad_phi_x: Array = field(repr=False)
    grad_phi_y: Array = field(repr=False)

    @property
    def grad_sup_norm(self) -> float:
        return float(np.max(np.hypot(self.grad_phi_x, self.grad_phi_y)))

    @property
    def grad_l1_norm(self) -> float:
        return float(self.h**2 * np.sum(np.hypot(self.grad_phi_x, self.grad_phi_y)))

    def convolve_wall(self, rho: Array, mask: DomainMask, rho_s: float) -> Array:
        """phi *_X rho on the whole grid (meaningful on fluid cells)."""
        shifted = np.where(mask.fluid, rho - rho_s, 0.0)
        return rho_s + self.h**2 * _conv2(shifted, self.phi)

    def capillarity(self, rho: Array, mask: DomainMask, rho_s: float) -> Array:
        """D_X[rho] = phi *_X rho - rho on fluid cells (zero elsewhere)."""
        out = self.convolve_wall(rho, mask, rho_s) - rho
        return np.where(mask.fluid, out, 0.0)

    def grad_convolution(
        self, rho: Array, mask: DomainMask, rho_s: float
    ) -> tuple[Array, Array]:
        """grad(phi *_X rho), via the gradient stencil on the shifted field."""
        shifted = np.where(mask.fluid, rho - rho_s, 0.0)
        gx = self.h**2 * _conv2(shifted, self.grad_phi_x)
        gy = self.h**2 * _conv2(shifted, self.grad_phi_y)
        return gx, gy

    def fluid_mass(self, mask: DomainMask) -> Array:
        """h^2 * sum of phi over fluid cells, per grid point."""
        return self.h**2 * _conv2(mask.fluid.astype(float), self.phi)

    def fluid_convolve(self, rho_fluid: Array, mask: DomainMask) -> Array:
        """h^2 * sum of phi * rho over fluid cells (rho zero off-fluid)."""
        return self.h**2 * _conv2(np.where(mask.fluid, rho_fluid, 0.0), self.phi)


def make_kernel(delta: float, h: float) -> Kernel:
    """Smooth bump kernel C exp(-1/(1 - |x/delta|^2)) for |x| < delta."""
    if delta < 2 * h:
        raise ConfigError("kernel support delta must be at least 2 grid cells")
    s = int(np.ceil(delta / h))
    off = np.arange(-s, s + 1) * h
    x, y = np.meshgrid(off, off, indexing="ij")
    t = (x**2 + y**2) / delta**2
    inside = t < 1.0
    phi = np.zeros_like(x)
    phi[inside] = np.exp(-1.0 / (1.0 - t[inside]))
    norm = h**2 * phi.sum()
    phi /= norm

    gx = np.zeros_like(x)
    gy = np.zeros_like(x)
    # d/dx of exp(-1/(1-t)) = phi * (-2 x / delta^2) / (1-t)^2
    fac = np.zeros_like(x)
    fac[inside] = 1.0 / (1.0 - t[inside]) ** 2
    gx = phi * (-2.0 * x / delta**2) * fac
    gy = phi * (-2.0 * y / delta**2) * fac

    return Kernel(
        delta=float(delta), h=float(h), half_width=s, phi=phi, grad_phi_x=gx, grad_phi_y=gy
    )


def convolve_wall_bruteforce(
    rho: Array, mask: DomainMask, kernel: Kernel, rho_s: float
) -> Array:
    """Literal two-integral wall convolution by double loop (test oracle).

    The exterior integral is evaluated as rho_s * (1 - h^2 sum of phi over
    fluid cells), which is exact because the discrete kernel is normalized.
    """
    nx, ny = mask.shape
    s = kernel.half_width
    out = np.zeros((nx, ny))
    h2 = kernel.h**2
    for i in range(nx):
        for j in range(ny):
            acc = 0.0
            wall = 1.0 / h2
            for di in range(-s, s + 1):
                ii = i + di
                if not (0 <= ii < nx):
                    continue
                for dj in range(-s, s + 1):
                    jj = j + dj
                    if 0 <= jj < ny and mask.fluid[ii, jj]:
                        w = kernel.phi[s - di, s - dj]
                        acc += w * rho[ii, jj]
                        wall -= w
            out[i, j] = h2 * (acc + rho_s * wall)
    return out


def l2_norm(field_x: Array, field_y: Array, h: float) -> float:
    return float(np.sqrt(h**2 * np.sum(field_x**2 + field_y**2)))


def homogenized_convergence_check(
    f: Array,
    cell: UnitCell,
    domain: Rectangle,
    eps_list: list[float],
    kernel: Kernel,
    rho_s: float,
) -> list[tuple[float, float]]:
    """Table of e(eps) = || grad(phi *_eps f) - theta grad(phi *_0 f) ||_L2.

    f lives on the full domain grid; for each eps the first integral of the
    wall convolution runs over the perforated domain built at that eps on
    the same grid.  The list must be decreasing in eps.
    """
    if len(eps_list) > 1 and any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ConfigError("eps_list must be strictly decreasing")

    nx = round(domain.lx / kernel.h)
    if f.shape[0] != nx:
        raise ConfigError("field grid does not match the kernel grid spacing")

    theta = cell.porosity
    full = build_unperforated(domain, kernel.h, cell)
    g0x, g0y = kernel.grad_convolution(f, full, rho_s)

    table = []
    for eps in eps_list:
        mask = build_perforated_domain(cell, eps, domain, h=kernel.h)
        gx, gy = kernel.grad_convolution(f, mask, rho_s)
        err = l2_norm(gx - theta * g0x, gy - theta * g0y, kernel.h)
        table.append((eps, err))
    return table


def build_unperforated(domain: Rectangle, h: float, cell: UnitCell) -> DomainMask:
    """All-fluid mask on the domain grid (the eps -> 0 convolution target)."""
    nx = round(domain.lx / h)
    ny = round(domain.ly / h)
    fluid = np.ones((nx, ny), dtype=bool)
    return DomainMask(
        domain=domain,
        eps=0.0,
        h=h,
        cell=cell,
        fluid=fluid,
        omega_k=np.zeros_like(fluid),
        omega_k_eps=np.zeros_like(fluid),
        k_indices=(),
    )
