"""Scenario files: a versioned YAML schema for experiments, plus realization drawing.

A scenario pins everything an experiment needs: the shared frame template,
the battery, the harvest and gain laws, the horizon, the trial count and the
seed.  Unknown keys are rejected so recipe files stay reviewable.  Field
defaults follow the standard simulation setup (1 s frames, 1e6 symbols,
1 MHz bandwidth, 1e-15 W/Hz noise density with the half prefactor, 1.5 V
cells).

Realizations are drawn from counter-based streams (see :mod:`ehtx.streams`),
so trial t of seed s is the same no matter which policies run or in what
order, and exponential gains come from the inverse CDF on the trial's own
stream.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .battery import (BatteryModel, FIXED_EFFICIENCY, INTERNAL_RESISTANCE,
                      STEP_DISCHARGE)
from .frame import FrameSpec, NoiseModel, SPECTRAL_DENSITY, UNIT_PSD
from .online import DiscreteDistribution, quantize_exponential_unit_mean
from .streams import (VAR_FIT_GAIN, VAR_FIT_HARVEST, VAR_GAIN, VAR_HARVEST,
                      exponential_unit_mean, stream)

SCHEMA_VERSION = 1

DETERMINISTIC = "deterministic"
UNIFORM_DISCRETE = "uniform_discrete"
CUSTOM = "custom"
EXPONENTIAL_UNIT_MEAN = "exponential_unit_mean"


class ScenarioError(ValueError):
    """Scenario file failed validation; the message carries the key path."""


@dataclass(frozen=True)
class RandomLaw:
    """Law of one exogenous per-frame quantity."""

    kind: str
    values: tuple[float, ...] = ()
    probs: tuple[float, ...] = ()

    def draw(self, gen: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == DETERMINISTIC:
            vals = np.asarray(self.values, dtype=float)
            if vals.size == 1:
                return np.full(n, vals[0])
            return vals[:n].copy()
        if self.kind == UNIFORM_DISCRETE:
            idx = gen.integers(0, len(self.values), n)
            return np.asarray(self.values, dtype=float)[idx]
        if self.kind == CUSTOM:
            idx = gen.choice(len(self.values), size=n, p=np.asarray(self.probs))
            return np.asarray(self.values, dtype=float)[idx]
        if self.kind == EXPONENTIAL_UNIT_MEAN:
            return exponential_unit_mean(gen, n)
        raise ScenarioError(f"unknown law kind {self.kind!r}")

    @property
    def mean(self) -> float:
        if self.kind == EXPONENTIAL_UNIT_MEAN:
            return 1.0
        if self.kind == DETERMINISTIC:
            return float(np.mean(self.values))
        if self.kind == UNIFORM_DISCRETE:
            return float(np.mean(self.values))
        return float(np.dot(self.values, self.probs))

    def discrete(self, gain_quantization: int = 8) -> DiscreteDistribution:
        """Finite-support view for the dynamic program."""
        if self.kind == EXPONENTIAL_UNIT_MEAN:
            return quantize_exponential_unit_mean(gain_quantization)
        if self.kind == UNIFORM_DISCRETE:
            return DiscreteDistribution.uniform(self.values)
        if self.kind == CUSTOM:
            return DiscreteDistribution(self.values, self.probs)
        uniq = sorted(set(self.values))
        if len(uniq) == 1:
            return DiscreteDistribution.point(uniq[0])
        raise ScenarioError(
            "deterministic laws with varying values have no i.i.d. view; "
            "the dynamic program needs uniform_discrete, custom or "
            "exponential_unit_mean")


@dataclass(frozen=True)
class Scenario:
    frame_template: FrameSpec
    battery: BatteryModel
    harvest_law: RandomLaw
    gain_law: RandomLaw
    n_frames: int = 1
    initial_energy_j: float = 0.0
    seed: int = 1
    trials: int = 1
    dp_grid_step_j: float | None = None
    dp_gain_quantization: int = 8

    def __post_init__(self) -> None:
        if self.n_frames < 1:
            raise ScenarioError("n_frames: must be >= 1")
        if self.trials < 1:
            raise ScenarioError("trials: must be >= 1")
        if not 0.0 <= self.initial_energy_j <= self.battery.capacity_j:
            raise ScenarioError("initial_energy_j: outside [0, battery capacity]")
        for name, law in (("harvest", self.harvest_law), ("gain", self.gain_law)):
            if law.kind == DETERMINISTIC and len(law.values) not in (1, self.n_frames):
                raise ScenarioError(
                    f"{name}.watts: deterministic list must have 1 or n_frames values")


def generate_realizations(s: Scenario) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-trial (harvested powers, channel gains), deterministic under the seed."""
    out = []
    for trial in range(s.trials):
        gc = stream(s.seed, trial, VAR_HARVEST)
        gh = stream(s.seed, trial, VAR_GAIN)
        c = s.harvest_law.draw(gc, s.n_frames)
        h = s.gain_law.draw(gh, s.n_frames)
        out.append((c, h))
    return out


def fit_realizations(s: Scenario, n: int) -> list[list[tuple[float, float]]]:
    """Separate realization set for fitting constant-ratio policies."""
    out = []
    for trial in range(n):
        gc = stream(s.seed, trial, VAR_FIT_HARVEST)
        gh = stream(s.seed, trial, VAR_FIT_GAIN)
        c = s.harvest_law.draw(gc, s.n_frames)
        h = s.gain_law.draw(gh, s.n_frames)
        out.append(list(zip(c, h)))
    return out


# ---------------------------------------------------------------------------
# parsing


def _expect_mapping(node: Any, path: str) -> dict:
    if node is None:
        return {}
    if not isinstance(node, dict):
        raise ScenarioError(f"{path}: expected a mapping")
    return node


def _take(node: dict, key: str, path: str, default=None, required=False):
    if key in node:
        return node.pop(key)
    if required:
        raise ScenarioError(f"{path}.{key}: missing required key")
    return default


def _check_empty(node: dict, path: str) -> None:
    if node:
        raise ScenarioError(f"{path}: unknown keys {sorted(node)}")


def _float(value: Any, path: str, minimum: float | None = None,
           strict: bool = False) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError) as err:
        raise ScenarioError(f"{path}: expected a number, got {value!r}") from err
    if minimum is not None:
        if strict and not out > minimum:
            raise ScenarioError(f"{path}: must be > {minimum}")
        if not strict and not out >= minimum:
            raise ScenarioError(f"{path}: must be >= {minimum}")
    return out


def _parse_noise(node: Any) -> NoiseModel:
    node = _expect_mapping(node, "frame.noise")
    mode = _take(node, "mode", "frame.noise", default=SPECTRAL_DENSITY)
    if mode not in (UNIT_PSD, SPECTRAL_DENSITY):
        raise ScenarioError(f"frame.noise.mode: unknown mode {mode!r}")
    n0 = _float(_take(node, "n0_w_per_hz", "frame.noise", default=1e-15),
                "frame.noise.n0_w_per_hz", minimum=0.0, strict=True)
    half = bool(_take(node, "half_factor", "frame.noise", default=True))
    _check_empty(node, "frame.noise")
    return NoiseModel(mode=mode, n0_w_per_hz=n0, half_factor=half)


def _parse_frame(node: Any) -> FrameSpec:
    node = _expect_mapping(node, "frame")
    spec = FrameSpec(
        harvested_power_w=0.0,
        channel_gain=1.0,
        duration_s=_float(_take(node, "duration_s", "frame", default=1.0),
                          "frame.duration_s", minimum=0.0, strict=True),
        symbols=int(_take(node, "symbols", "frame", default=10**6)),
        circuit_power_w=_float(_take(node, "circuit_power_w", "frame", default=0.05),
                               "frame.circuit_power_w", minimum=0.0),
        bandwidth_hz=_float(_take(node, "bandwidth_hz", "frame", default=1e6),
                            "frame.bandwidth_hz", minimum=0.0, strict=True),
        noise=_parse_noise(_take(node, "noise", "frame")),
    )
    _check_empty(node, "frame")
    return spec


def _parse_battery(node: Any) -> BatteryModel:
    node = _expect_mapping(node, "battery")
    variant = _take(node, "variant", "battery", default=INTERNAL_RESISTANCE)
    if variant not in (INTERNAL_RESISTANCE, STEP_DISCHARGE, FIXED_EFFICIENCY):
        raise ScenarioError(f"battery.variant: unknown variant {variant!r}")
    model = BatteryModel(
        capacity_j=_float(_take(node, "capacity_j", "battery", required=True),
                          "battery.capacity_j", minimum=0.0),
        resistance_ohm=_float(_take(node, "resistance_ohm", "battery", default=5.0),
                              "battery.resistance_ohm", minimum=0.0),
        nominal_voltage_v=_float(_take(node, "nominal_voltage_v", "battery", default=1.5),
                                 "battery.nominal_voltage_v", minimum=0.0, strict=True),
        variant=variant,
        eta_c=_float(_take(node, "eta_c", "battery", default=1.0), "battery.eta_c"),
        eta_d=_float(_take(node, "eta_d", "battery", default=1.0), "battery.eta_d"),
    )
    _check_empty(node, "battery")
    return model


def _parse_law(node: Any, path: str, gain: bool) -> RandomLaw:
    node = _expect_mapping(node, path)
    kinds = (DETERMINISTIC, UNIFORM_DISCRETE, CUSTOM)
    if gain:
        kinds += (EXPONENTIAL_UNIT_MEAN,)
    kind = _take(node, "law", path, required=True)
    if kind not in kinds:
        raise ScenarioError(f"{path}.law: unknown law {kind!r}")
    key = "watts" if not gain else "values"
    values = _take(node, key, path, default=())
    probs = _take(node, "probs", path, default=())
    _check_empty(node, path)
    if kind != EXPONENTIAL_UNIT_MEAN:
        if not values:
            raise ScenarioError(f"{path}.{key}: required for {kind} laws")
        values = tuple(_float(v, f"{path}.{key}[]", minimum=0.0) for v in values)
    if kind == CUSTOM:
        probs = tuple(_float(p, f"{path}.probs[]", minimum=0.0) for p in probs)
        if len(probs) != len(values):
            raise ScenarioError(f"{path}.probs: length must match {key}")
        if abs(sum(probs) - 1.0) > 1e-9:
            raise ScenarioError(f"{path}.probs: must sum to 1")
    else:
        probs = ()
    return RandomLaw(kind=kind, values=tuple(values), probs=tuple(probs))


def scenario_from_mapping(doc: dict) -> Scenario:
    doc = dict(doc)
    schema = _take(doc, "schema", "", required=True)
    if schema != SCHEMA_VERSION:
        raise ScenarioError(f"schema: unsupported version {schema!r}")
    dp_node = _expect_mapping(_take(doc, "dp", ""), "dp")
    dp_step = _take(dp_node, "grid_step_j", "dp")
    dp_quant = int(_take(dp_node, "gain_quantization", "dp", default=8))
    _check_empty(dp_node, "dp")
    sc = Scenario(
        frame_template=_parse_frame(_take(doc, "frame", "")),
        battery=_parse_battery(_take(doc, "battery", "", required=True)),
        harvest_law=_parse_law(_take(doc, "harvest", "", required=True),
                               "harvest", gain=False),
        gain_law=_parse_law(_take(doc, "gain", "", required=True), "gain", gain=True),
        n_frames=int(_take(doc, "n_frames", "", default=1)),
        initial_energy_j=_float(_take(doc, "initial_energy_j", "", default=0.0),
                                "initial_energy_j", minimum=0.0),
        seed=int(_take(doc, "seed", "", default=1)),
        trials=int(_take(doc, "trials", "", default=1)),
        dp_grid_step_j=None if dp_step is None else _float(dp_step, "dp.grid_step_j",
                                                           minimum=0.0, strict=True),
        dp_gain_quantization=dp_quant,
    )
    _check_empty(doc, "")
    return sc


def load_scenario(path: str | Path) -> Scenario:
    """Parse and fully validate a scenario file."""
    text = Path(path).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as err:
        raise ScenarioError(f"{path}: {err}") from err
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}: top level must be a mapping")
    try:
        return scenario_from_mapping(doc)
    except ScenarioError as err:
        raise ScenarioError(f"{path}: {err}") from err
