"""Experiment configuration: a YAML file validated against a strict schema.

Physical parameters (the triplet, truncation ``eps``, screening, ``k``) have no
defaults.  Unknown keys are errors.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from pathlib import Path
from typing import Annotated, Literal, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .agmon import PotentialSpec, constant_potential, radial_power_potential
from .elliptic_solver import ClosedFormGreen, EllipticOperatorSpec
from .kernel_analysis import Kernel, laplace_kernel, power_kernel, yukawa_kernel
from .levy_core import LevyMeasure, LevyTriplet, ZERO_MEASURE, atoms, power_law, uniform_density
from .white_noise import GridSpec, TestFunction


class ConfigError(ValueError):
    pass


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# --- Lévy measures ---------------------------------------------------------------------------------

class ZeroNu(Strict):
    kind: Literal["zero"]


class AtomsNu(Strict):
    kind: Literal["atoms"]
    positions: list[float]
    masses: list[float]

    @model_validator(mode="after")
    def _same_length(self):
        if len(self.positions) != len(self.masses):
            raise ValueError("positions and masses must have the same length")
        return self


class PowerLawNu(Strict):
    kind: Literal["power_law"]
    alpha: float = Field(gt=0)
    c_pos: float = Field(ge=0)
    c_neg: float = Field(ge=0)
    r_min: float = Field(ge=0)
    r_max: float = math.inf


class UniformNu(Strict):
    kind: Literal["uniform"]
    c: float = Field(ge=0)
    r_max: float = Field(gt=0)
    r_min: float = Field(ge=0)


NuConfig = Annotated[Union[ZeroNu, AtomsNu, PowerLawNu, UniformNu], Field(discriminator="kind")]


class TripletConfig(Strict):
    a: float = Field(ge=0)
    gamma: float
    nu: NuConfig

    def build(self) -> LevyTriplet:
        nu = self.nu
        if isinstance(nu, ZeroNu):
            measure: LevyMeasure = ZERO_MEASURE
        elif isinstance(nu, AtomsNu):
            measure = atoms(nu.positions, nu.masses)
        elif isinstance(nu, PowerLawNu):
            measure = power_law(nu.alpha, nu.c_pos, nu.c_neg, nu.r_min, nu.r_max)
        else:
            measure = uniform_density(nu.c, nu.r_max, nu.r_min)
        return LevyTriplet(self.a, self.gamma, measure)


# --- geometry ----------------------------------------------------------------------------------------

class GridConfig(Strict):
    box: list[tuple[float, float]]
    resolution: list[int]

    def build(self) -> GridSpec:
        return GridSpec(tuple(self.box), tuple(self.resolution))


class BumpConfig(Strict):
    center: list[float]
    radius: float = Field(gt=0)
    amplitude: float = 1.0
    frequency: list[float] | None = None
    phase: float = 0.0

    def build(self) -> TestFunction:
        return TestFunction(tuple(self.center), self.radius, self.amplitude,
                            None if self.frequency is None else tuple(self.frequency), self.phase)


class KernelConfig(Strict):
    family: Literal["laplace", "yukawa", "power"]
    d: int = Field(ge=1, le=7)
    eps: float | None = Field(default=None, gt=0)
    p: float | None = Field(default=None, gt=0)
    constant: float | None = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _parameters(self):
        need = {"yukawa": ["eps"], "power": ["p", "constant"], "laplace": []}[self.family]
        missing = [k for k in need if getattr(self, k) is None]
        if missing:
            raise ValueError(f"kernel family {self.family} needs {', '.join(missing)}")
        extra = [k for k in ("eps", "p", "constant") if k not in need and getattr(self, k) is not None]
        if extra:
            raise ValueError(f"kernel family {self.family} does not take {', '.join(extra)}")
        return self

    def build(self) -> Kernel:
        if self.family == "laplace":
            return laplace_kernel(self.d)
        if self.family == "yukawa":
            return yukawa_kernel(self.eps, self.d)
        return power_kernel(self.d, self.p, self.constant)

    def green(self) -> ClosedFormGreen:
        if self.family == "power":
            raise ConfigError("power kernels are not Green functions of an elliptic operator")
        return ClosedFormGreen(self.d, self.eps or 0.0, self.family)


class PeriodicDiffusion(Strict):
    kind: Literal["periodic"]
    base: float = Field(gt=0)
    amplitude: float
    period: float = Field(gt=0)
    axis: int = Field(ge=0)

    @model_validator(mode="after")
    def _elliptic(self):
        if abs(self.amplitude) >= self.base:
            raise ValueError("base must exceed |amplitude| for ellipticity")
        return self


class OperatorConfig(Strict):
    diffusion: float | PeriodicDiffusion
    potential: float | None = Field(ge=0)
    drift: list[float] | None = None
    pad: int = Field(default=6, ge=0)
    growth: float = Field(default=1.3, ge=1.0)

    def build(self, d: int) -> EllipticOperatorSpec:
        dif = self.diffusion
        periodicity = None
        if isinstance(dif, PeriodicDiffusion):
            if dif.axis >= d:
                raise ConfigError("diffusion axis exceeds the dimension")
            base, amp, per, ax = dif.base, dif.amplitude, dif.period, dif.axis
            diffusion = lambda x: base + amp * np.sin(2 * np.pi * x[..., ax] / per)
            periodicity = tuple(per if i == ax else 0.0 for i in range(d))
            name = "periodic-diffusion"
        else:
            diffusion = float(dif)
            name = "laplacian" if not self.potential else "screened"
        drift = None
        if self.drift is not None:
            if len(self.drift) != d:
                raise ConfigError("drift must have d components")
            b = np.asarray(self.drift, float)
            drift = lambda x: np.broadcast_to(b, np.shape(x)).copy()
        return EllipticOperatorSpec(d, diffusion, drift, self.potential or None, periodicity, name)


class PotentialConfig(Strict):
    kind: Literal["constant", "radial_power"]
    value: float | None = Field(default=None, gt=0)
    c: float | None = Field(default=None, gt=0)
    power: float | None = Field(default=None, gt=0)

    def build(self, d: int) -> PotentialSpec:
        if self.kind == "constant":
            if self.value is None:
                raise ConfigError("constant potential needs value")
            return constant_potential(self.value, d)
        if self.c is None or self.power is None:
            raise ConfigError("radial_power potential needs c and power")
        return radial_power_potential(self.c, self.power, d)


# --- subcommand sections ----------------------------------------------------------------------------

CONDITIONS = ("integrable", "beta", "centered", "variance", "schrodinger")


class CheckConfig(Strict):
    conditions: list[Literal["integrable", "beta", "centered", "variance", "schrodinger"]]
    R_list: list[float] = [1.0, 2.0, 4.0]
    beta: float | None = Field(default=None, gt=1, lt=2)
    d: int | None = Field(default=None, ge=1)
    k: float | None = Field(default=None, gt=0)


class AgmonConfig(Strict):
    potential: PotentialConfig
    origin: list[int] | None = None
    stencil_radius: int = Field(default=3, ge=1)
    radii: list[float] = [0.5, 1.0, 1.5]


class VerifyConfig(Strict):
    shifts: list[list[float]]
    n_per_shift: int = Field(ge=1000)
    z_max: float = Field(gt=0)
    z_points: int = Field(default=21, ge=3)


class GammaConfig(Strict):
    d: int = Field(ge=1)
    r: float = Field(gt=1)


class ExperimentConfig(Strict):
    seed: int = Field(ge=0)
    output: str
    triplet: TripletConfig | None = None
    eps: float | None = Field(default=None, gt=0)
    grid: GridConfig | None = None
    n_realizations: int | None = Field(default=None, ge=1)
    kernel: KernelConfig | None = None
    operator: OperatorConfig | None = None
    phi: list[BumpConfig] | None = None
    check: CheckConfig | None = None
    agmon: AgmonConfig | None = None
    verify: VerifyConfig | None = None
    gamma_identity: GammaConfig | None = None

    def require(self, *names: str):
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise ConfigError(f"config is missing required section(s): {', '.join(missing)}")

    def experiment(self) -> dict:
        """Everything that determines the results; the output location does not."""
        return self.model_dump(mode="json", exclude={"output"})

    def digest(self) -> str:
        canon = json.dumps(self.experiment(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


# --- loading --------------------------------------------------------------------------------------

def _set_path(doc: dict, dotted: str, value):
    keys = dotted.split(".")
    cur = doc
    for k in keys[:-1]:
        if isinstance(cur, list):
            cur = cur[int(k)]
            continue
        if k not in cur or cur[k] is None:
            cur[k] = {}
        cur = cur[k]
    last = keys[-1]
    if isinstance(cur, list):
        cur[int(last)] = value
    else:
        cur[last] = value


def apply_overrides(doc: dict, overrides) -> dict:
    doc = copy.deepcopy(doc)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        _set_path(doc, key.strip(), yaml.safe_load(raw))
    return doc


def load_config(path, overrides=(), seed: int | None = None, output: str | None = None) -> ExperimentConfig:
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    doc = apply_overrides(doc, overrides)
    if seed is not None:
        doc["seed"] = seed
    if output is not None:
        doc["output"] = output
    try:
        return ExperimentConfig.model_validate(doc)
    except Exception as exc:  # pydantic.ValidationError and validator errors
        raise ConfigError(str(exc)) from exc
