"""Pressure laws, the generalized pressure, energy functions and the
discrete free-energy functional.

A pressure law carries the bare pressure p with analytic derivatives, the
capillarity constant gamma and the derived generalized pressure
P(r) = p(r) + gamma r^2 / 2.  Admissibility of P is checked numerically on
a sampled range; a pass is "verified on range", never a proof.

The energy function W is fixed by r W''(r) = p'(r) up to a linear gauge
a*r; both W identities (r W'' = p', r W' - W = p) hold for every gauge.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError
from .geometry import DomainMask

Array = np.ndarray


@dataclass(frozen=True)
class PressureLaw:
    kind: str
    gamma: float
    rho_s: float
    r_max: float
    p: Callable[[Array], Array] = field(repr=False)
    dp: Callable[[Array], Array] = field(repr=False)
    ddp: Callable[[Array], Array] = field(repr=False)
    # antiderivative of p(s)/s^2 with base point 1 (analytic per family)
    pressure_integral: Callable[[Array], Array] = field(repr=False)
    beta: float | None = None
    c_tail: float | None = None
    spinodal: tuple[float, float] | None = None

    def P(self, r):
        return self.p(r) + 0.5 * self.gamma * np.asarray(r) ** 2

    def dP(self, r):
        return self.dp(r) + self.gamma * np.asarray(r)

    def ddP(self, r):
        return self.ddp(r) + self.gamma

    def check_range(self, rho: Array) -> None:
        rho = np.asarray(rho)
        if rho.size and float(rho.max()) > self.r_max:
            raise ConfigError(
                f"density {float(rho.max()):.3g} exceeds the working range "
                f"r_max={self.r_max:.3g} of the {self.kind} law"
            )


def _locate_spinodal(dp, r_max: float) -> tuple[float, float] | None:
    """Endpoints of the interval where p' < 0, located by root finding."""
    r = np.linspace(1e-8, r_max, 4001)
    s = dp(r)
    neg = np.where(s < 0)[0]
    if neg.size == 0:
        return None
    i0, i1 = neg[0], neg[-1]
    a1 = brentq(dp, r[max(i0 - 1, 0)], r[i0]) if i0 > 0 else r[0]
    a2 = brentq(dp, r[i1], r[min(i1 + 1, r.size - 1)]) if i1 < r.size - 1 else r[-1]
    return (float(a1), float(a2))


def make_pressure(
    kind: str,
    params: dict | None = None,
    gamma: float = 0.0,
    rho_s: float = 1.0,
    r_max: float = 10.0,
) -> PressureLaw:
    """Construct a pressure law.

    kinds:
        polytropic: p(r) = coeff * r**exponent, exponent >= 1
        cubic:      p(r) = amp*(x^3 - well*x) shifted so p(0)=0,
                    x = (r - center)/width (two-well for well > 0)
        vdw:        p(r) = R*T*r/(b - r) - a*r^2, valid for r < b
    """
    params = dict(params or {})
    if gamma < 0:
        raise ConfigError("gamma must be nonnegative")
    if rho_s <= 0:
        raise ConfigError("wall density rho_s must be positive")
    if r_max <= 0:
        raise ConfigError("r_max must be positive")

    if kind == "polytropic":
        a = float(params.pop("coeff", 1.0))
        b = float(params.pop("exponent", 2.0))
        if a <= 0 or b < 1:
            raise ConfigError("polytropic needs coeff > 0 and exponent >= 1")

        def p(r):
            return a * np.asarray(r, dtype=float) ** b

        def dp(r):
            return a * b * np.asarray(r, dtype=float) ** (b - 1)

        def ddp(r):
            return a * b * (b - 1) * np.asarray(r, dtype=float) ** (b - 2)

        if b == 1.0:

            def integral(r):
                return a * np.log(np.asarray(r, dtype=float))

        else:

            def integral(r):
                r = np.asarray(r, dtype=float)
                return a * (r ** (b - 1) - 1.0) / (b - 1)

        if b > 2:
            beta, c_tail = b, a * b
        elif b == 2:
            beta, c_tail = 2.0, 2 * a + gamma
        else:
            beta, c_tail = (2.0, gamma) if gamma > 0 else (None, None)

    elif kind == "cubic":
        amp = float(params.pop("amp", 1.0))
        center = float(params.pop("center", 1.0))
        width = float(params.pop("width", 1.0))
        well = float(params.pop("well", 0.5))
        if amp <= 0 or width <= 0:
            raise ConfigError("cubic needs amp > 0 and width > 0")
        x0 = -center / width
        shift = amp * (x0**3 - well * x0)

        def p(r):
            x = (np.asarray(r, dtype=float) - center) / width
            return amp * (x**3 - well * x) - shift

        def dp(r):
            x = (np.asarray(r, dtype=float) - center) / width
            return amp * (3 * x**2 - well) / width

        def ddp(r):
            x = (np.asarray(r, dtype=float) - center) / width
            return amp * 6 * x / width**2

        # p(r) = c3 r^3 + c2 r^2 + c1 r with p(0)=0 by the shift
        c3 = amp / width**3
        c2 = -3 * amp * center / width**3
        c1 = amp * (3 * center**2 / width**3 - well / width)

        def integral(r):
            r = np.asarray(r, dtype=float)
            return c3 * (r**2 - 1.0) / 2 + c2 * (r - 1.0) + c1 * np.log(r)

        beta, c_tail = 3.0, 3 * c3  # leading p'(r) ~ 3 c3 r^2

    elif kind == "vdw":
        a = float(params.pop("a", 1.0))
        b = float(params.pop("b", 1.0))
        R = float(params.pop("R", 1.0))
        T = float(params.pop("T", 0.1))
        if min(a, b, R, T) <= 0:
            raise ConfigError("vdw needs positive a, b, R, T")
        if r_max >= b:
            raise ConfigError("vdw working range must stay strictly below b")

        def p(r):
            r = np.asarray(r, dtype=float)
            return R * T * r / (b - r) - a * r**2

        def dp(r):
            r = np.asarray(r, dtype=float)
            return R * T * b / (b - r) ** 2 - 2 * a * r

        def ddp(r):
            r = np.asarray(r, dtype=float)
            return 2 * R * T * b / (b - r) ** 3 - 2 * a

        def integral(r):
            # p(s)/s^2 = (R*T/b)(1/s + 1/(b-s)) - a
            r = np.asarray(r, dtype=float)
            return (R * T / b) * (np.log(r) - np.log(b - r) + np.log(b - 1.0)) - a * (
                r - 1.0
            )

        beta, c_tail = None, None  # pole at b, no polynomial tail

    else:
        raise ConfigError(f"unknown pressure kind {kind!r}")

    if params:
        raise ConfigError(f"unused {kind} parameters: {sorted(params)}")

    law = PressureLaw(
        kind=kind,
        gamma=gamma,
        rho_s=rho_s,
        r_max=r_max,
        p=p,
        dp=dp,
        ddp=ddp,
        pressure_integral=integral,
        beta=beta,
        c_tail=c_tail,
        spinodal=_locate_spinodal(dp, r_max),
    )
    return law


@dataclass(frozen=True)
class AdmissibilityItem:
    item: int
    name: str
    measured: float
    bound: float
    passed: bool


@dataclass(frozen=True)
class AdmissibilityReport:
    law_kind: str
    gamma: float
    r_max: float
    n_samples: int
    items: tuple[AdmissibilityItem, ...]
    alpha: float
    sup_convexity_ratio: float
    tail_dP: float
    tail_P: float

    @property
    def admissible(self) -> bool:
        return all(it.passed for it in self.items)


def check_admissibility(
    law: PressureLaw, r_max: float | None = None, n_samples: int = 1000
) -> AdmissibilityReport:
    """Sampled verification of the five generalized-pressure conditions.

    Report-only: every item carries the measured value, the bound and a
    pass flag.  The tail item compares both P'(r)/r^(beta-1) and
    beta*P(r)/r^beta against the law's tail constant at r_max.
    """
    if r_max is None:
        r_max = law.r_max
    if r_max <= 0:
        raise ConfigError("r_max must be positive")
    if n_samples < 100:
        raise ConfigError("need at least 100 samples")

    r = np.linspace(r_max / n_samples, r_max, n_samples)
    dP = law.dP(r)
    ddP = law.ddP(r)
    P = law.P(r)

    p0 = float(law.P(np.array([0.0]))[0] if np.ndim(law.P(0.0)) else law.P(0.0))
    alpha = float(min(dP.min(), ddP.min()))
    ratio = float(np.max(P * ddP / dP**2)) if np.all(dP > 0) else np.inf

    if law.beta is not None and law.c_tail is not None and law.c_tail > 0:
        tail_dP = float(law.dP(r_max) / r_max ** (law.beta - 1))
        tail_P = float(law.beta * law.P(r_max) / r_max**law.beta)
        tail_ok = (
            abs(tail_dP - law.c_tail) <= 0.1 * law.c_tail
            and abs(tail_P - law.c_tail) <= 0.1 * law.c_tail
        )
    else:
        tail_dP = float(law.dP(r_max) / r_max)
        tail_P = float(2 * law.P(r_max) / r_max**2)
        tail_ok = False

    items = (
        AdmissibilityItem(1, "P in C^2", 0.0, 0.0, True),
        AdmissibilityItem(2, "P(0) = 0", abs(p0), 1e-12, abs(p0) <= 1e-12),
        AdmissibilityItem(3, "P', P'' >= alpha > 0", alpha, 0.0, alpha > 1e-12),
        AdmissibilityItem(4, "P P'' / (P')^2 <= 2", ratio, 2.0, ratio <= 2.0 + 1e-9),
        AdmissibilityItem(
            5,
            "tail P'/r^(beta-1) -> c",
            tail_dP,
            law.c_tail if law.c_tail else float("nan"),
            tail_ok,
        ),
    )
    return AdmissibilityReport(
        law_kind=law.kind,
        gamma=law.gamma,
        r_max=float(r_max),
        n_samples=n_samples,
        items=items,
        alpha=alpha,
        sup_convexity_ratio=ratio,
        tail_dP=tail_dP,
        tail_P=tail_P,
    )


@dataclass(frozen=True)
class EnergyFunction:
    law: PressureLaw
    rho_ref: float
    c_lin: float
    rho_min: float

    def W(self, r):
        # r * integral -> 0 as r -> 0 whenever p(s)/s^2 is integrable at 0;
        # evaluate at a safe point and overwrite to keep vectorized calls NaN-free
        r = np.asarray(r, dtype=float)
        zero = r == 0.0
        safe = np.where(zero, 1.0, r)
        ints = self.law.pressure_integral
        w = safe * (ints(safe) - ints(self.rho_ref)) + self.c_lin * safe
        return np.where(zero, 0.0, w)

    def dW(self, r):
        r = np.asarray(r, dtype=float)
        ints = self.law.pressure_integral
        return ints(r) - ints(self.rho_ref) + self.law.p(r) / r + self.c_lin

    def ddW(self, r):
        r = np.asarray(r, dtype=float)
        return self.law.dp(r) / r


def energy_function(
    law: PressureLaw,
    rho_ref: float = 1.0,
    rho_min: float | None = None,
    gauge: str = "nonneg",
) -> EnergyFunction:
    """Energy function W(r) = r * int_{rho_ref}^r p(s)/s^2 ds + c_lin * r.

    gauge "nonneg" picks c_lin so that min W = 0 on [rho_min, r_max].
    gauge "double_well" (non-monotone p only) centers c_lin in the window
    for which W' changes sign three times, exposing the two-well shape of
    the bulk energy; W may then dip slightly below zero near rho_min.
    """
    if rho_ref <= 0:
        raise ConfigError("rho_ref must be positive")
    if rho_min is None:
        rho_min = min(rho_ref, law.r_max) * 1e-2
    if rho_min <= 0:
        raise ConfigError("rho_min must be positive (p(s)/s^2 may be singular at 0)")

    ints = law.pressure_integral
    if gauge == "nonneg":
        # ints is nondecreasing (p >= 0), so the minimum of W/r sits at rho_min
        c_lin = float(ints(rho_ref) - ints(rho_min))
    elif gauge == "double_well":
        if law.spinodal is None:
            raise ConfigError("double_well gauge needs a non-monotone pressure")
        a1, a2 = law.spinodal

        def slope(r):
            return float(ints(r) - ints(rho_ref) + law.p(r) / r)

        lo, hi = -slope(a1), -slope(a2)
        if lo > hi:
            lo, hi = hi, lo
        c_lin = 0.5 * (lo + hi)
    else:
        raise ConfigError(f"unknown gauge {gauge!r}")

    return EnergyFunction(law=law, rho_ref=rho_ref, c_lin=c_lin, rho_min=rho_min)


def tail_energy_pressure_ratio(
    law: PressureLaw, energy: EnergyFunction, r_max: float
) -> float:
    """W(r_max)/P(r_max); tends to 1/(beta - 1) for beta > 2 tails."""
    if law.beta is None or law.beta <= 2:
        raise ConfigError("tail ratio needs a pressure tail with beta > 2")
    return float(energy.W(r_max) / law.P(r_max))


@dataclass(frozen=True)
class FreeEnergy:
    fluid_fluid: float
    fluid_solid: float
    bulk: float

    @property
    def total(self) -> float:
        return self.fluid_fluid + self.fluid_solid + self.bulk


def free_energy(
    rho: Array,
    mask: DomainMask,
    kernel,
    law: PressureLaw,
    energy: EnergyFunction,
    omega: float = 1.0,
) -> FreeEnergy:
    """Three-part discrete free energy at time scaling omega.

    fluid_fluid = (gamma omega / 4) double-sum of phi (rho_x - rho_y)^2
    fluid_solid = (gamma omega / 2) sum over fluid x of (rho_x - rho_s)^2
                  times the kernel mass outside the fluid
    bulk        = omega * sum of W(rho) over fluid cells

    Uses the kernel's normalized stencil, so the pairwise weights match
    the wall convolution exactly.
    """
    if np.any(rho[mask.fluid] < 0):
        raise ConfigError("free energy needs rho >= 0 on fluid cells")
    h = mask.h
    g = law.gamma
    fluid = mask.fluid
    rho_f = np.where(fluid, rho, 0.0)

    s_field = kernel.fluid_mass(mask)  # h^2 sum of phi over fluid cells
    k_rho = kernel.fluid_convolve(rho_f, mask)  # h^2 sum of phi * rho over fluid

    e_ff = 0.5 * g * omega * h**2 * float(
        np.sum((rho_f**2 * s_field - rho_f * k_rho)[fluid])
    )
    e_fs = 0.5 * g * omega * h**2 * float(
        np.sum(((rho_f - law.rho_s) ** 2 * (1.0 - s_field))[fluid])
    )
    e_bulk = omega * h**2 * float(np.sum(energy.W(np.where(fluid, rho, 1.0))[fluid]))
    return FreeEnergy(fluid_fluid=e_ff, fluid_solid=e_fs, bulk=e_bulk)
