"""Command-line entry point.

Exit codes: 0 success, 2 validation/usage error, 3 solver failure.
"""

from __future__ import annotations

import sys
import click

from .battery import BatteryModel, INTERNAL_RESISTANCE, STEP_DISCHARGE
from .frame import FrameSpec, NoiseModel, SPECTRAL_DENSITY, UNIT_PSD
from .experiment import (ALL_POLICIES, emit_csv, emit_frames_csv,
                         run_experiment)
from .recipes import RECIPES, run_recipe
from .scenario import Scenario, ScenarioError, load_scenario
from .solvers import SolverError

EXIT_VALIDATION = 2
EXIT_SOLVER = 3


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load(path: str) -> Scenario:
    try:
        return load_scenario(path)
    except ScenarioError as err:
        _fail(EXIT_VALIDATION, str(err))


@click.group()
def main() -> None:
    """Transmission policies for an energy-harvesting link with a lossy battery."""


@main.command("single-frame")
@click.option("--harvest-w", "-c", type=float, default=0.1, show_default=True,
              help="Harvested power (W).")
@click.option("--circuit-w", "-p", type=float, default=0.05, show_default=True,
              help="Circuit power while transmitting (W).")
@click.option("--gain", type=float, default=1.0, show_default=True)
@click.option("--resistance", "-r", type=float, default=5.0, show_default=True)
@click.option("--voltage", type=float, default=1.5, show_default=True)
@click.option("--capacity-j", "-B", type=float, default=0.02, show_default=True)
@click.option("--initial-j", type=float, default=0.0, show_default=True)
@click.option("--duration", type=float, default=1.0, show_default=True)
@click.option("--symbols", type=int, default=10**6, show_default=True)
@click.option("--bandwidth", type=float, default=1e7, show_default=True)
@click.option("--n0", type=float, default=1e-15, show_default=True,
              help="Noise spectral density (W/Hz).")
@click.option("--unit-psd", is_flag=True, help="Use the unit-PSD rate model.")
@click.option("--discharge-model", type=click.Choice(["true", "step"]),
              default="true", show_default=True)
@click.option("--enforce-bw/--no-enforce-bw", default=True, show_default=True)
def single_frame_cmd(harvest_w, circuit_w, gain, resistance, voltage, capacity_j,
                     initial_j, duration, symbols, bandwidth, n0, unit_psd,
                     discharge_model, enforce_bw) -> None:
    """Solve one frame and print the optimal split and rate."""
    from .single_frame import solve_single_frame

    noise = (NoiseModel(mode=UNIT_PSD) if unit_psd
             else NoiseModel(mode=SPECTRAL_DENSITY, n0_w_per_hz=n0))
    variant = STEP_DISCHARGE if discharge_model == "step" else INTERNAL_RESISTANCE
    try:
        spec = FrameSpec(harvested_power_w=harvest_w, channel_gain=gain,
                         duration_s=duration, symbols=symbols,
                         bandwidth_hz=bandwidth, circuit_power_w=circuit_w,
                         noise=noise)
        battery = BatteryModel(capacity_j=capacity_j, resistance_ohm=resistance,
                               nominal_voltage_v=voltage, variant=variant)
        sol = solve_single_frame(spec, battery, initial_j,
                                 enforce_bandwidth=enforce_bw)
    except ValueError as err:
        _fail(EXIT_VALIDATION, str(err))
    except SolverError as err:
        _fail(EXIT_SOLVER, str(err))
    d = sol.decision
    click.echo(f"rho_star        {d.rho:.9g}")
    click.echo(f"alpha_a_star    {d.alpha_a:.9g}")
    click.echo(f"alpha_b_star    {d.alpha_b:.9g}")
    click.echo(f"d_b_star_w      {d.d_b:.9g}")
    click.echo(f"transmit_j      {sol.transmit_energy_j:.9g}")
    click.echo(f"rate_bits_sym   {sol.rate_bits_per_symbol:.9g}")
    click.echo(f"rate_bps        {sol.rate_bits_per_symbol * symbols / duration:.9g}")
    click.echo(f"limiting        {sol.limiting}")
    if sol.no_transmission:
        click.echo("note            no feasible transmission (rate 0)")


def _run_to_csv(scenario, policies, discharge_model, out, frames_out, fit_trials=None):
    kwargs = {}
    if fit_trials is not None:
        kwargs["fit_trials"] = fit_trials
    try:
        res = run_experiment(scenario, policies, discharge_model=discharge_model,
                             collect_frames=frames_out is not None, **kwargs)
    except SolverError as err:
        _fail(EXIT_SOLVER, str(err))
    except ValueError as err:
        _fail(EXIT_VALIDATION, str(err))
    if out:
        emit_csv(res, out)
        click.echo(f"wrote {out}")
    if frames_out:
        emit_frames_csv(res, frames_out)
        click.echo(f"wrote {frames_out}")
    for p in res.policies:
        click.echo(f"{p.name:12s} mean {p.mean_rate_bps:.6g} bps  "
                   f"std {p.std_rate_bps:.4g}  runtime/frame {p.runtime_norm_s:.3g} s")
    return res


@main.command("offline")
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option("--out", type=click.Path(), default=None)
@click.option("--frames-out", type=click.Path(), default=None,
              help="Also emit per-frame decision tables.")
@click.option("--discharge-model", type=click.Choice(["true", "step"]),
              default="true", show_default=True)
@click.option("--baselines/--no-baselines", default=True, show_default=True,
              help="Include the no-battery and ideal-battery baselines.")
def offline_cmd(scenario_path, seed, out, frames_out, discharge_model, baselines):
    """Run the offline policy (and baselines) over a scenario."""
    sc = _load(scenario_path)
    if seed is not None:
        from dataclasses import replace
        sc = replace(sc, seed=seed)
    policies = ("offline", "ideal_battery", "no_battery") if baselines else ("offline",)
    _run_to_csv(sc, policies, discharge_model, out, frames_out)


@main.command("online")
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True))
@click.option("--policy", "policies", multiple=True,
              type=click.Choice(["dp", "greedy", "statistical", "ctsr", "cpsr"]),
              default=("dp", "greedy", "statistical", "ctsr", "cpsr"),
              show_default=True)
@click.option("--trials", type=int, default=None, help="Override the trial count.")
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
@click.option("--frames-out", type=click.Path(), default=None)
@click.option("--fit-trials", type=int, default=None,
              help="Realizations used to fit the constant-ratio policies.")
@click.option("--discharge-model", type=click.Choice(["true", "step"]),
              default="true", show_default=True)
def online_cmd(scenario_path, policies, trials, seed, out, frames_out,
               fit_trials, discharge_model):
    """Run causal policies over a scenario."""
    sc = _load(scenario_path)
    from dataclasses import replace
    if trials is not None:
        sc = replace(sc, trials=trials)
    if seed is not None:
        sc = replace(sc, seed=seed)
    _run_to_csv(sc, tuple(policies), discharge_model, out, frames_out, fit_trials)


@main.command("sweep")
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True))
@click.option("--param", type=click.Choice(["resistance_ohm", "harvest_scale"]),
              required=True)
@click.option("--values", required=True,
              help="Comma-separated parameter values, e.g. 1,5,20.")
@click.option("--policy", "policies", multiple=True,
              type=click.Choice(list(ALL_POLICIES)),
              default=("offline", "greedy"), show_default=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--discharge-model", type=click.Choice(["true", "step"]),
              default="true", show_default=True)
def sweep_cmd(scenario_path, param, values, policies, out, discharge_model):
    """Sweep one scenario knob and emit a long-format CSV."""
    import csv as _csv
    from dataclasses import replace

    sc = _load(scenario_path)
    try:
        vals = [float(v) for v in values.split(",") if v.strip()]
    except ValueError:
        _fail(EXIT_VALIDATION, f"--values: could not parse {values!r}")
    rows = []
    for v in vals:
        if param == "resistance_ohm":
            sc_v = replace(sc, battery=replace(sc.battery, resistance_ohm=v))
        else:
            law = sc.harvest_law
            sc_v = replace(sc, harvest_law=replace(
                law, values=tuple(x * v for x in law.values)))
        try:
            res = run_experiment(sc_v, tuple(policies), discharge_model=discharge_model)
        except SolverError as err:
            _fail(EXIT_SOLVER, str(err))
        for p in res.policies:
            rows.append((v, p.name, p.mean_rate_bps, p.std_rate_bps))
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = _csv.writer(fh, lineterminator="\n")
        w.writerow((param, "policy", "mean_rate_bps", "std_rate_bps"))
        w.writerows(rows)
    click.echo(f"wrote {out}")


@main.command("reproduce")
@click.argument("name", type=click.Choice(list(RECIPES)))
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(), default="results", show_default=True)
@click.option("--trials", type=int, default=None,
              help="Override the recipe's default trial count.")
@click.option("--discharge-model", type=click.Choice(["true", "step"]),
              default="step", show_default=True)
def reproduce_cmd(name, seed, out, trials, discharge_model):
    """Run a preset experiment and write its CSV."""
    try:
        path = run_recipe(name, out, seed=seed, trials=trials,
                          discharge_model=discharge_model)
    except SolverError as err:
        _fail(EXIT_SOLVER, str(err))
    except (ScenarioError, ValueError) as err:
        _fail(EXIT_VALIDATION, str(err))
    click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
