"""Preset experiment configurations and their CSV emitters.

Each recipe builds its scenarios in code (reviewable, no hidden state) and
writes one CSV per figure-style experiment.  Two constants deserve a note:
the recipes use a 10 MHz channel so that the bandwidth cap on the time split
is exactly 0.9 with 1e6 symbols per 1 s frame, and a noise density of
2e-10 W/Hz (2 mW noise power over the channel), which calibrates the
constant-power-split average to the 1.02 Mbps reference level.  Both are
documented in the README.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .battery import BatteryModel, INTERNAL_RESISTANCE, STEP_DISCHARGE
from .frame import FrameSpec, NoiseModel
from .offline import OfflineProblem, solve_p2
from .scenario import (EXPONENTIAL_UNIT_MEAN, RandomLaw, Scenario,
                       UNIFORM_DISCRETE)
from .experiment import run_experiment, _fmt
from .single_frame import solve_single_frame

RECIPES = ("fig3a", "fig3b", "fig4", "fig5", "fig6", "fig7", "table2")

#: channel bandwidth making the time-split cap exactly 0.9 (1e6 symbols, 1 s)
RECIPE_BANDWIDTH_HZ = 1e7
#: noise density calibrated so the constant-power-split mean lands at 1.02 Mbps
RECIPE_N0_W_PER_HZ = 2e-10

_NOISE = NoiseModel(mode="spectral_density", n0_w_per_hz=RECIPE_N0_W_PER_HZ,
                    half_factor=True)


def _template(circuit_power_w: float) -> FrameSpec:
    return FrameSpec(harvested_power_w=0.0, channel_gain=1.0, duration_s=1.0,
                     symbols=10**6, circuit_power_w=circuit_power_w,
                     bandwidth_hz=RECIPE_BANDWIDTH_HZ, noise=_NOISE)


def _write(path: Path, header: tuple[str, ...], rows: list[tuple]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([c if isinstance(c, str) else _fmt(c) for c in row])


def fig3a(out: Path, seed: int, trials: int | None, discharge_model: str) -> Path:
    """Optimal external/internal charge rates vs harvested power."""
    rows = []
    for r in (0.1, 50.0):
        m = BatteryModel(capacity_j=1.0, resistance_ohm=r)
        for c in np.linspace(0.0, 0.2, 81):
            cp = m.optimal_charge_power(float(c))
            rows.append((r, float(c), cp, m.internal_charge_power(cp)))
    path = out / "fig3a.csv"
    _write(path, ("resistance_ohm", "harvested_w", "external_w", "internal_w"), rows)
    return path


def fig3b(out: Path, seed: int, trials: int | None, discharge_model: str) -> Path:
    """Optimal charge rates vs nominal cell voltage at 100 mW harvest."""
    rows = []
    for r in (0.1, 5.0, 50.0):
        for v in np.linspace(0.5, 3.0, 51):
            m = BatteryModel(capacity_j=1.0, resistance_ohm=r,
                             nominal_voltage_v=float(v))
            cp = m.optimal_charge_power(0.1)
            rows.append((r, float(v), cp, m.internal_charge_power(cp)))
    path = out / "fig3b.csv"
    _write(path, ("resistance_ohm", "voltage_v", "external_w", "internal_w"), rows)
    return path


def fig4(out: Path, seed: int, trials: int | None, discharge_model: str) -> Path:
    """Single-frame optimal rate and time split vs internal resistance."""
    rows = []
    variant = STEP_DISCHARGE if discharge_model == "step" else INTERNAL_RESISTANCE
    for c, p in ((0.1, 0.05), (0.1, 0.01)):
        tmpl = _template(p).with_harvest(c, 1.0)
        for r in np.logspace(-1, 2, 25):
            m = BatteryModel(capacity_j=0.02, resistance_ohm=float(r),
                             variant=variant)
            sol = solve_single_frame(tmpl, m, 0.0, enforce_bandwidth=True)
            rows.append((c, p, float(r),
                         sol.rate_bits_per_symbol * tmpl.symbols / tmpl.duration_s,
                         sol.decision.rho))
    path = out / "fig4.csv"
    _write(path, ("harvested_w", "circuit_w", "resistance_ohm", "rate_bps", "rho"),
           rows)
    return path


FIG5_HARVEST_W = tuple(np.linspace(0.3, 0.005, 30))


def fig5(out: Path, seed: int, trials: int | None, discharge_model: str) -> Path:
    """Per-frame transmit power vs harvest under the two battery loss models.

    Zero circuit power, effectively unbounded capacity, constant gain;
    harvests decrease over the horizon so early frames can bank energy for
    later ones.
    """
    tmpl = _template(0.0)
    frames = tuple(tmpl.with_harvest(float(c), 1.0) for c in FIG5_HARVEST_W)
    rows = []
    models = (
        ("internal_resistance", BatteryModel(capacity_j=1e6, resistance_ohm=5.0)),
        ("fixed_round_trip", BatteryModel.fixed_round_trip(1e6, 0.75)),
    )
    for name, m in models:
        sol = solve_p2(OfflineProblem(frames=frames, battery=m))
        for i, (c, e) in enumerate(zip(FIG5_HARVEST_W, sol.transmit_energies_j)):
            rows.append((name, i, float(c), e / tmpl.duration_s))
    path = out / "fig5.csv"
    _write(path, ("model", "frame", "harvested_w", "transmit_power_w"), rows)
    return path


def _fig6_scenario(mean_harvest_w: float, seed: int, trials: int) -> Scenario:
    return Scenario(
        frame_template=_template(0.01),
        battery=BatteryModel(capacity_j=0.1, resistance_ohm=5.0),
        harvest_law=RandomLaw(UNIFORM_DISCRETE,
                              values=(2.0 * mean_harvest_w / 3.0,
                                      4.0 * mean_harvest_w / 3.0)),
        gain_law=RandomLaw(EXPONENTIAL_UNIT_MEAN),
        n_frames=20, seed=seed, trials=trials)


def fig6(out: Path, seed: int, trials: int | None, discharge_model: str) -> Path:
    """Offline policies vs mean harvested power (reduced horizon and trials)."""
    trials = trials or 100
    rows = []
    for mean_c in (0.01, 0.02, 0.05, 0.1, 0.2):
        sc = _fig6_scenario(mean_c, seed, trials)
        res = run_experiment(sc, ("offline", "ideal_battery", "no_battery"),
                             discharge_model=discharge_model)
        for p in res.policies:
            rows.append((mean_c, p.name, p.mean_rate_bps, p.std_rate_bps))
    path = out / "fig6.csv"
    _write(path, ("mean_harvest_w", "policy", "mean_rate_bps", "std_rate_bps"), rows)
    return path


FIG7_RESISTANCES = (1.0, 5.0, 20.0)
FIG7_POLICIES = ("offline", "dp", "statistical", "greedy", "ctsr", "cpsr")


def fig7_scenario(resistance_ohm: float, seed: int, trials: int) -> Scenario:
    return Scenario(
        frame_template=_template(0.05),
        battery=BatteryModel(capacity_j=0.1, resistance_ohm=resistance_ohm,
                             variant=STEP_DISCHARGE),
        harvest_law=RandomLaw(UNIFORM_DISCRETE, values=(0.05, 0.1)),
        gain_law=RandomLaw(EXPONENTIAL_UNIT_MEAN),
        n_frames=5, seed=seed, trials=trials,
        dp_grid_step_j=0.0005)


def fig7(out: Path, seed: int, trials: int | None, discharge_model: str) -> Path:
    """All policies vs internal resistance (step discharge model throughout)."""
    trials = trials or 1000
    rows = []
    for r in FIG7_RESISTANCES:
        sc = fig7_scenario(r, seed, trials)
        res = run_experiment(sc, FIG7_POLICIES, discharge_model=discharge_model)
        for p in res.policies:
            rows.append((r, p.name, p.mean_rate_bps, p.std_rate_bps))
    path = out / "fig7.csv"
    _write(path, ("resistance_ohm", "policy", "mean_rate_bps", "std_rate_bps"), rows)
    return path


def table2(out: Path, seed: int, trials: int | None, discharge_model: str) -> Path:
    """Normalized runtimes vs horizon (measured; inherently not byte-stable)."""
    trials = trials or 2
    rows = []
    for n in (25, 50, 75, 100):
        sc = Scenario(
            frame_template=_template(0.05),
            battery=BatteryModel(capacity_j=0.1, resistance_ohm=5.0,
                                 variant=STEP_DISCHARGE),
            harvest_law=RandomLaw(UNIFORM_DISCRETE, values=(0.05, 0.1)),
            gain_law=RandomLaw(EXPONENTIAL_UNIT_MEAN),
            n_frames=n, seed=seed, trials=trials)
        res = run_experiment(sc, ("offline", "statistical", "greedy", "ctsr", "cpsr"),
                             discharge_model=discharge_model, fit_trials=20)
        for p in res.policies:
            rows.append((n, p.name, p.runtime_norm_s))
    path = out / "table2.csv"
    _write(path, ("n_frames", "policy", "runtime_norm_s"), rows)
    return path


def run_recipe(name: str, out_dir: str | Path, seed: int = 1,
               trials: int | None = None, discharge_model: str = "step") -> Path:
    """Run one preset by name and return the path of its CSV."""
    if name not in RECIPES:
        raise ValueError(f"unknown recipe {name!r}; choose from {RECIPES}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fn = {"fig3a": fig3a, "fig3b": fig3b, "fig4": fig4, "fig5": fig5,
          "fig6": fig6, "fig7": fig7, "table2": table2}[name]
    return fn(out, seed, trials, discharge_model)
