"""Monte Carlo policy evaluation over common random numbers, and CSV emission.

Every selected policy sees the identical realization set of a scenario, so
policy differences are paired.  Results are bit-for-bit reproducible under a
fixed (scenario, seed, policy set); measured runtimes of course are not,
which is why ``emit_csv`` can drop the runtime column for artifacts that
must be byte-stable.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .battery import STEP_DISCHARGE, INTERNAL_RESISTANCE
from .frame import FrameSpec
from .offline import (OfflineProblem, algorithm1, ideal_battery_baseline,
                      no_battery_baseline)
from .online import (GreedyPolicy, StatisticalPolicy, dp_build,
                     simulate_policy)
from .scenario import Scenario, fit_realizations, generate_realizations

OFFLINE_POLICIES = ("offline", "no_battery", "ideal_battery")
ONLINE_POLICIES = ("dp", "greedy", "statistical", "ctsr", "cpsr")
ALL_POLICIES = OFFLINE_POLICIES + ONLINE_POLICIES

DEFAULT_FIT_TRIALS = 200
_FMT = "%.12g"


@dataclass
class PolicySummary:
    name: str
    mean_rate_bps: float
    std_rate_bps: float
    runtime_norm_s: float


@dataclass
class ExperimentResult:
    policies: list[PolicySummary]
    n_frames: int
    trials: int
    seed: int
    frame_tables: dict[str, list[tuple]] = field(default_factory=dict)

    def summary(self, name: str) -> PolicySummary:
        for p in self.policies:
            if p.name == name:
                return p
        raise KeyError(name)


def _rate_scale_bps(f: FrameSpec) -> float:
    """bits/s per (bits/symbol): N_s / tau."""
    return f.symbols / f.duration_s


def _apply_discharge_model(s: Scenario, discharge_model: str) -> Scenario:
    if discharge_model == "step" and s.battery.variant == INTERNAL_RESISTANCE:
        return replace(s, battery=s.battery.with_variant(STEP_DISCHARGE))
    if discharge_model == "true" and s.battery.variant == STEP_DISCHARGE:
        return replace(s, battery=s.battery.with_variant(INTERNAL_RESISTANCE))
    return s


def run_experiment(s: Scenario, policies: Sequence[str],
                   discharge_model: str = "true",
                   fit_trials: int = DEFAULT_FIT_TRIALS,
                   collect_frames: bool = False,
                   gap_tol: float = 1e-8) -> ExperimentResult:
    """Evaluate the selected policies on a shared realization set.

    discharge_model switches the battery between its true curve and the
    step bound for *all* policies (planning and evaluation alike), matching
    the reproduction recipes.
    """
    if not policies:
        raise ValueError("select at least one policy")
    unknown = [p for p in policies if p not in ALL_POLICIES]
    if unknown:
        raise ValueError(f"unknown policies {unknown}; choose from {ALL_POLICIES}")
    s = _apply_discharge_model(s, discharge_model)
    m = s.battery
    tmpl = s.frame_template
    realizations = generate_realizations(s)
    scale = _rate_scale_bps(tmpl)

    result = ExperimentResult(policies=[], n_frames=s.n_frames, trials=s.trials,
                              seed=s.seed)

    for name in policies:
        start = time.perf_counter()
        per_trial = np.empty(s.trials)
        tables: list[tuple] = []
        runner = _make_runner(name, s, tmpl, m, fit_trials, gap_tol)
        for t, (c_arr, h_arr) in enumerate(realizations):
            rates, rows = runner(t, c_arr, h_arr, collect_frames)
            per_trial[t] = float(np.mean(rates)) * scale
            if collect_frames:
                tables.extend((t,) + row for row in rows)
        elapsed = time.perf_counter() - start
        std = float(np.std(per_trial, ddof=1)) if s.trials > 1 else 0.0
        result.policies.append(PolicySummary(
            name=name, mean_rate_bps=float(np.mean(per_trial)),
            std_rate_bps=std, runtime_norm_s=elapsed / (s.trials * s.n_frames)))
        if collect_frames:
            result.frame_tables[name] = tables
    return result


def _frame_rows(decisions, e_b, residuals, rates, scale):
    return [
        (i, d.rho, d.alpha_a, d.alpha_b, d.d_b, e, r, rate * scale)
        for i, (d, e, r, rate) in enumerate(zip(decisions, e_b, residuals, rates))
    ]


def _make_runner(name: str, s: Scenario, tmpl: FrameSpec, m, fit_trials: int,
                 gap_tol: float):
    """Per-policy closure mapping one realization to frame rates (+rows)."""
    scale = _rate_scale_bps(tmpl)

    if name in OFFLINE_POLICIES:
        solver = {"offline": algorithm1,
                  "no_battery": no_battery_baseline,
                  "ideal_battery": ideal_battery_baseline}[name]

        def run_offline(t, c_arr, h_arr, collect):
            frames = tuple(tmpl.with_harvest(c, h) for c, h in zip(c_arr, h_arr))
            prob = OfflineProblem(frames=frames, battery=m,
                                  initial_energy_j=s.initial_energy_j)
            if name == "offline":
                sol = solver(prob, gap_tol=gap_tol)
            else:
                sol = solver(prob)
            rows = _frame_rows(sol.decisions, sol.e_b, sol.residuals,
                               sol.rates, scale) if collect else []
            return sol.rates, rows

        return run_offline

    policy = _build_online_policy(name, s, tmpl, m, fit_trials, gap_tol)

    def run_online(t, c_arr, h_arr, collect):
        trace = simulate_policy(policy, list(zip(c_arr, h_arr)), tmpl, m,
                                s.initial_energy_j)
        e_b = [d.discharged_energy_j(tmpl.duration_s) for d in trace.decisions]
        rows = _frame_rows(trace.decisions, e_b, trace.residuals_j,
                           trace.rates, scale) if collect else []
        return trace.rates, rows

    return run_online


def _build_online_policy(name: str, s: Scenario, tmpl: FrameSpec, m,
                         fit_trials: int, gap_tol: float):
    if name == "greedy":
        return GreedyPolicy(tmpl, m)
    if name == "statistical":
        return StatisticalPolicy(tmpl, m, s.harvest_law.mean, s.gain_law.mean,
                                 gap_tol=gap_tol)
    if name == "dp":
        # default grid: 201 points, i.e. 0.0005 J steps on a 0.1 J battery
        step = s.dp_grid_step_j if s.dp_grid_step_j else 0.005 * m.capacity_j
        return dp_build(s.harvest_law.discrete(), s.gain_law.discrete(s.dp_gain_quantization),
                        tmpl, m, grid_step_j=step, horizon=s.n_frames)
    fits = fit_realizations(s, fit_trials)
    if name == "ctsr":
        from .online import fit_ctsr
        return fit_ctsr(fits, tmpl, m, s.harvest_law.mean, s.initial_energy_j)
    if name == "cpsr":
        from .online import fit_cpsr
        support = s.harvest_law.values or (s.harvest_law.mean,)
        return fit_cpsr(fits, tmpl, m, support, s.initial_energy_j)
    raise ValueError(name)


# ---------------------------------------------------------------------------
# CSV emission

SUMMARY_HEADER = ("policy", "mean_rate_bps", "std_rate_bps", "runtime_norm_s")
FRAME_HEADER = ("trial", "frame", "rho", "alpha_a", "alpha_b", "d_b_w",
                "e_b_j", "residual_j", "rate_bps")


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return _FMT % value


def emit_csv(result: ExperimentResult, path: str | Path,
             include_runtime: bool = True) -> None:
    """Write the per-policy summary (12 significant digits, UTF-8).

    Measured runtimes vary run to run, so artifacts that must be
    byte-reproducible are emitted with include_runtime=False.
    """
    header = SUMMARY_HEADER if include_runtime else SUMMARY_HEADER[:-1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for p in result.policies:
            row = [p.name, _fmt(p.mean_rate_bps), _fmt(p.std_rate_bps)]
            if include_runtime:
                row.append(_fmt(p.runtime_norm_s))
            w.writerow(row)


def emit_frames_csv(result: ExperimentResult, path: str | Path) -> list[Path]:
    """Optional per-frame decision tables.

    One file per policy so the header stays exactly FRAME_HEADER; with a
    single policy the table lands at ``path`` itself, otherwise the policy
    name is suffixed before the extension.
    """
    path = Path(path)
    written = []
    single = len(result.frame_tables) == 1
    for name, rows in result.frame_tables.items():
        target = path if single else path.with_name(
            f"{path.stem}.{name}{path.suffix}")
        with open(target, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(FRAME_HEADER)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        written.append(target)
    return written


def read_summary_csv(path: str | Path) -> list[dict]:
    """Parse a summary CSV back (used by round-trip checks)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return [
            {k: (v if k == "policy" else float(v)) for k, v in row.items()}
            for row in reader
        ]
