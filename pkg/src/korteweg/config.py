"""Run configuration: one YAML file with sections

    geometry:      grain kind/params, cell resolution m, eps list, domain extents
    constitutive:  law kind + params, gamma, rho_s, rho_ref, r_max, gauge
    kernel:        interaction radius delta
    pore:          mu, xi, t_end, cfl, record_times, initial condition
    effective:     theta/permeability overrides, t_end, cfl, record_times
    study:         eps_list, rho_floor, comparison settings

Unknown sections or keys are rejected so typos fail loudly.  All sections
except geometry and constitutive are optional.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .constitutive import EnergyFunction, PressureLaw, energy_function, make_pressure
from .errors import ConfigError
from .geometry import GrainShape, Rectangle, UnitCell, build_unit_cell


@dataclass(frozen=True)
class GeometryConfig:
    grain: str = "disc"
    grain_params: dict = field(default_factory=dict)
    m: int = 8
    annulus_radius: float | None = None
    eps: tuple[float, ...] = (0.25,)
    domain: Rectangle = Rectangle()

    def build_cell(self) -> UnitCell:
        shape = GrainShape(kind=self.grain, **self.grain_params)
        return build_unit_cell(shape, self.m, self.annulus_radius)


@dataclass(frozen=True)
class ConstitutiveConfig:
    law: str = "polytropic"
    params: dict = field(default_factory=lambda: {"coeff": 1.0, "exponent": 2.0})
    gamma: float = 1.0
    rho_s: float = 1.0
    rho_ref: float = 1.0
    r_max: float = 10.0
    gauge: str = "nonneg"

    def build(self) -> tuple[PressureLaw, EnergyFunction]:
        law = make_pressure(self.law, self.params, self.gamma, self.rho_s, self.r_max)
        return law, energy_function(law, rho_ref=self.rho_ref, gauge=self.gauge)


@dataclass(frozen=True)
class KernelConfig:
    delta: float = 0.2


@dataclass(frozen=True)
class InitialCondition:
    """rho0(x, y) = base + amp * sin(2 pi kx x / lx) * cos(2 pi ky y / ly)
    plus an optional centered Gaussian bump."""

    base: float = 1.0
    amp: float = 0.0
    kx: int = 1
    ky: int = 1
    bump_amp: float = 0.0
    bump_width: float = 0.15

    def evaluate(self, x: np.ndarray, y: np.ndarray, domain: Rectangle) -> np.ndarray:
        sx = 2.0 * np.pi * self.kx * (x - domain.x0) / domain.lx
        sy = 2.0 * np.pi * self.ky * (y - domain.y0) / domain.ly
        rho = self.base + self.amp * np.sin(sx) * np.cos(sy)
        if self.bump_amp != 0.0:
            cx = domain.x0 + 0.5 * domain.lx
            cy = domain.y0 + 0.5 * domain.ly
            rho = rho + self.bump_amp * np.exp(
                -((x - cx) ** 2 + (y - cy) ** 2) / (2.0 * self.bump_width**2)
            )
        if np.any(rho < 0):
            raise ConfigError("initial condition dips below zero")
        return rho


@dataclass(frozen=True)
class PoreSection:
    mu: float = 1.0
    xi: float = 0.0
    t_end: float = 0.01
    cfl: float = 0.45
    record_times: tuple[float, ...] = ()
    initial: InitialCondition = InitialCondition()


@dataclass(frozen=True)
class EffectiveSection:
    mu: float = 1.0
    t_end: float = 0.01
    cfl: float = 0.45
    record_times: tuple[float, ...] = ()
    initial: InitialCondition = InitialCondition()
    theta_override: float | None = None
    permeability: tuple[tuple[float, float], tuple[float, float]] | None = None
    permeability_csv: str | None = None


@dataclass(frozen=True)
class StudySection:
    eps_list: tuple[float, ...] = (0.25, 0.125)
    compare_times: tuple[float, ...] = ()
    rho_floor: float = 1e-3
    cell_method: str = "direct"


@dataclass(frozen=True)
class RunConfig:
    geometry: GeometryConfig
    constitutive: ConstitutiveConfig
    kernel: KernelConfig = KernelConfig()
    pore: PoreSection = PoreSection()
    effective: EffectiveSection = EffectiveSection()
    study: StudySection = StudySection()
    raw_text: str = ""


_SECTIONS = {"geometry", "constitutive", "kernel", "pore", "effective", "study"}


def _build(cls, data: dict, name: str):
    if not isinstance(data, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    fields = {f.name for f in cls.__dataclass_fields__.values()}
    unknown = set(data) - fields
    if unknown:
        raise ConfigError(f"unknown keys in section {name!r}: {sorted(unknown)}")
    kwargs = dict(data)
    for key in ("eps", "record_times", "eps_list", "compare_times"):
        if key in kwargs and kwargs[key] is not None:
            kwargs[key] = tuple(float(v) for v in kwargs[key])
    if "initial" in kwargs and kwargs["initial"] is not None:
        kwargs["initial"] = _build(InitialCondition, kwargs["initial"], f"{name}.initial")
    if "domain" in kwargs and kwargs["domain"] is not None:
        d = kwargs["domain"]
        if not isinstance(d, dict):
            raise ConfigError("geometry.domain must be a mapping")
        kwargs["domain"] = Rectangle(**{k: float(v) for k, v in d.items()})
    if "permeability" in kwargs and kwargs["permeability"] is not None:
        a = kwargs["permeability"]
        try:
            kwargs["permeability"] = (
                (float(a[0][0]), float(a[0][1])),
                (float(a[1][0]), float(a[1][1])),
            )
        except (TypeError, IndexError) as exc:
            raise ConfigError("effective.permeability must be a 2x2 nested list") from exc
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad section {name!r}: {exc}") from exc


def parse_config(text: str) -> RunConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping of sections")
    unknown = set(data) - _SECTIONS
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    for required in ("geometry", "constitutive"):
        if required not in data:
            raise ConfigError(f"missing required config section {required!r}")
    return RunConfig(
        geometry=_build(GeometryConfig, data["geometry"], "geometry"),
        constitutive=_build(ConstitutiveConfig, data["constitutive"], "constitutive"),
        kernel=_build(KernelConfig, data.get("kernel", {}) or {}, "kernel"),
        pore=_build(PoreSection, data.get("pore", {}) or {}, "pore"),
        effective=_build(EffectiveSection, data.get("effective", {}) or {}, "effective"),
        study=_build(StudySection, data.get("study", {}) or {}, "study"),
        raw_text=text,
    )


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text())
