"""Multi-frame offline optimisation with non-causal harvest/gain knowledge.

Three layers:

* ``solve_p2``      -- zero-circuit-cost program over per-frame power splits
  and discharge powers, using the true efficiency curves.  Convex when the
  capacity constraint is inactive; with a finite battery the same barrier
  runs on the non-convex region and the result is flagged local-only.
* ``solve_p3_fixed_pattern`` -- the step-discharge reformulation in
  (rho_i or alpha_b_i, e_b_i) once each frame is committed to either a
  charge-phase split (rho free, alpha_b = 1) or a power split (rho = 0,
  alpha_b free).
* ``algorithm1``    -- the full approximation: solve the all-charge-phase
  pattern, mark frames that receive energy, test per-frame whether dropping
  the charge phase lowers total losses at matched transmit energy, re-solve
  the committed pattern, then map delivered energies back to discharge
  powers through the true efficiency curve.

Both programs are built for the log-barrier engine in
:mod:`ehtx.solvers`; the objective extends smoothly below zero transmit
energy so starved frames degrade gracefully instead of leaving the domain
(their reported rate is zero and their planned discharge is dropped).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .battery import BatteryModel, FIXED_EFFICIENCY, STEP_DISCHARGE
from .frame import FrameDecision, FrameSpec, energy_ledger, rho_bandwidth_limit
from .solvers import (BarrierProblem, BarrierStats, FlowTerm, SolverError,
                      FLOW_CHARGE_SPLIT, FLOW_DISCHARGE, FLOW_LINEAR,
                      barrier_minimize)

CHARGE_PHASE = "charge_phase"
SPLIT_POWER = "split_power"

_NET_TOL = 1e-12


@dataclass(frozen=True)
class OfflineProblem:
    """N frames with known harvests and gains, one battery, one initial charge."""

    frames: tuple[FrameSpec, ...]
    battery: BatteryModel
    initial_energy_j: float = 0.0

    def __post_init__(self) -> None:
        if len(self.frames) < 1:
            raise ValueError("need at least one frame")
        tau = self.frames[0].duration_s
        if any(abs(f.duration_s - tau) > 1e-12 * tau for f in self.frames):
            raise ValueError("all frames must share one duration")
        if not 0.0 <= self.initial_energy_j <= self.battery.capacity_j * (1 + 1e-12):
            raise ValueError("initial energy outside [0, capacity]")
        object.__setattr__(self, "frames", tuple(self.frames))

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    @property
    def circuit_zero(self) -> bool:
        return all(f.circuit_power_w == 0.0 for f in self.frames)


@dataclass(frozen=True)
class PhasePattern:
    """Per-frame commitment resolving the (1-alpha_b)*rho = 0 dichotomy."""

    tags: tuple[str, ...]

    def __post_init__(self) -> None:
        if any(t not in (CHARGE_PHASE, SPLIT_POWER) for t in self.tags):
            raise ValueError("pattern tags must be charge_phase or split_power")

    @classmethod
    def all_charge(cls, n: int) -> "PhasePattern":
        return cls(tags=(CHARGE_PHASE,) * n)

    def __len__(self) -> int:
        return len(self.tags)

    def __getitem__(self, i: int) -> str:
        return self.tags[i]


@dataclass
class OfflineSolution:
    decisions: list[FrameDecision]
    e_b: list[float]                 # delivered battery energy per frame (J)
    transmit_energies_j: list[float]
    rates: list[float]               # bits per symbol per frame
    rate_avg: float
    residuals: list[float]           # battery energy after each frame (J)
    solver_stats: BarrierStats | None = None
    notes: list[str] = field(default_factory=list)


class PatternInfeasibleError(SolverError):
    """The committed pattern admits no strictly feasible interior."""


# ---------------------------------------------------------------------------
# shared helpers


def _alpha_floor(f: FrameSpec, m: BatteryModel) -> float:
    c = f.harvested_power_w
    if c > 0.0 and math.isfinite(m.max_charge_power_w):
        return max(0.0, 1.0 - m.max_charge_power_w / c)
    return 0.0


def _optimal_charge_phase(prob: OfflineProblem):
    """Per-frame optimal external charge rate, its internal rate and alpha_a."""
    m = prob.battery
    cps, sigmas, alphas = [], [], []
    for f in prob.frames:
        cp = m.optimal_charge_power(f.harvested_power_w)
        cps.append(cp)
        sigmas.append(m.internal_charge_power(cp))
        alphas.append(1.0 - cp / f.harvested_power_w if f.harvested_power_w > 0 else 0.0)
    return np.array(cps), np.array(sigmas), np.array(alphas)


def _evaluate(prob: OfflineProblem, decisions: Sequence[FrameDecision],
              stats: BarrierStats | None, notes: list[str]) -> OfflineSolution:
    """Roll decisions through the battery and price every frame honestly.

    Frames whose transmit energy comes out non-positive cannot run the
    transmitter: their rate is zero and their planned discharge is dropped
    (the energy stays in the battery).
    """
    m = prob.battery
    level = prob.initial_energy_j
    out_dec: list[FrameDecision] = []
    e_b, energies, rates, residuals = [], [], [], []
    for f, d in zip(prob.frames, decisions):
        led = energy_ledger(d, f, m)
        if led.transmit_energy_j <= 0.0 and d.d_b > 0.0:
            d = replace(d, d_b=0.0)
            led = energy_ledger(d, f, m)
        stored = led.stored_in_phase1_j + led.internal_store_phase2_j
        level = level + stored - led.internal_drain_j
        if level < -1e-6 or level > m.capacity_j + 1e-6:
            notes.append(f"residual clipped from {level:.3e} J")
        level = min(max(level, 0.0), m.capacity_j)
        out_dec.append(d)
        e_b.append(d.discharged_energy_j(f.duration_s))
        energies.append(led.transmit_energy_j)
        rates.append(f.rate_from_transmit_energy(led.transmit_energy_j))
        residuals.append(level)
    return OfflineSolution(
        decisions=out_dec, e_b=e_b, transmit_energies_j=energies, rates=rates,
        rate_avg=float(np.mean(rates)), residuals=residuals,
        solver_stats=stats, notes=notes)


def _fixable_prefix(prob: OfflineProblem, max_store_per_frame: np.ndarray) -> np.ndarray:
    """True for frames that can never have drawn a joule by their own end."""
    cum = prob.initial_energy_j + np.cumsum(max_store_per_frame)
    return cum <= 0.0


# ---------------------------------------------------------------------------
# P2: zero circuit cost, true efficiency curves


def _p2_start(prob: OfflineProblem, fixed_d: np.ndarray,
              alpha_lo: np.ndarray) -> np.ndarray:
    """Strictly interior start: a sliver of charging, cautious draining."""
    m = prob.battery
    tau = prob.frames[0].duration_s
    n = prob.n_frames
    x = np.zeros(2 * n)
    level = prob.initial_energy_j
    cap = m.capacity_j
    d_hi = m.max_discharge_power_w
    for i, f in enumerate(prob.frames):
        c = f.harvested_power_w
        alpha_i = 0.5 * (alpha_lo[i] + 1.0)
        store = 0.0
        if c > 0.0:
            headroom = cap - level if math.isfinite(cap) else math.inf
            u_hi = min(c, m.max_charge_power_w)
            u = min(0.25 * u_hi, 0.45 * headroom / tau)
            u = max(u, 1e-12 * u_hi)
            alpha_i = 1.0 - u / c
            alpha_i = min(max(alpha_i, alpha_lo[i] + 1e-9 * (1 - alpha_lo[i])), 1.0 - 1e-9)
            store = m.internal_charge_power((1.0 - alpha_i) * c) * tau
        d_i = 0.0
        if not fixed_d[i]:
            avail = level + store
            d_i = m.invert_internal_discharge(0.2 * avail / tau)
            if math.isfinite(d_hi):
                d_i = min(d_i, 0.45 * d_hi)
        drain = m.internal_discharge_power(d_i) * tau if d_i > 0 else 0.0
        level = min(level + store - drain, cap)
        x[i] = alpha_i
        x[n + i] = d_i
    return x


def solve_p2(prob: OfflineProblem, gap_tol: float = 1e-8) -> OfflineSolution:
    """Zero-circuit-cost offline optimum over (alpha_b_i, d_b_i).

    Requires every frame's circuit power to be zero and a battery variant
    with a genuine discharge curve.  All frames keep rho = 0 and gamma = 0.
    Frames ending up both charging and discharging (the program drops the
    exclusivity constraint) are netted to one direction afterwards, which
    never lowers any transmit energy.
    """
    if not prob.circuit_zero:
        raise ValueError("solve_p2 requires zero circuit power in every frame")
    if prob.battery.variant == STEP_DISCHARGE:
        raise ValueError("solve_p2 uses the true discharge curve; "
                         "use the pattern solver for the step model")
    m = prob.battery
    n = prob.n_frames
    tau = prob.frames[0].duration_s

    alpha_lo = np.array([_alpha_floor(f, m) for f in prob.frames])
    u_peak = np.array([m.internal_charge_power(m.optimal_charge_power(f.harvested_power_w))
                       for f in prob.frames]) * tau
    fixed_d = _fixable_prefix(prob, u_peak)

    free_d = ~fixed_d
    n_d = int(np.sum(free_d))
    nvar = n + n_d
    d_cols = {i: n + k for k, i in enumerate(np.where(free_d)[0])}

    frame_of_var = np.concatenate([np.arange(n), np.where(free_d)[0]])
    A = np.zeros((n, nvar))
    off = np.zeros(n)
    terms: list[FlowTerm] = []
    lo = np.zeros(nvar)
    hi = np.ones(nvar)
    # keep the feasible set bounded even for cap-free variants: nothing can
    # drain faster than all energy ever harvested plus the initial charge
    d_cap = m.max_discharge_power_w
    if not math.isfinite(d_cap):
        total = prob.initial_energy_j + sum(f.harvested_power_w * tau
                                            for f in prob.frames)
        d_cap = m.invert_internal_discharge(total / tau) * (1.0 + 1e-9) + 1e-12
    for i, f in enumerate(prob.frames):
        A[i, i] = f.harvested_power_w * tau
        lo[i], hi[i] = alpha_lo[i], 1.0
        terms.append(FlowTerm(FLOW_CHARGE_SPLIT, scale=tau, crate=f.harvested_power_w))
    for i in np.where(free_d)[0]:
        j = d_cols[i]
        A[int(i), j] = tau
        lo[j], hi[j] = 0.0, d_cap
        terms.append(FlowTerm(FLOW_DISCHARGE, scale=tau))

    bp = BarrierProblem(
        n=nvar, frame_of_var=frame_of_var, n_frames=n,
        energy_matrix=A, energy_offset=off,
        snr_coef=np.array([f.snr_per_joule for f in prob.frames]),
        weights=np.array([f.noise.prefactor for f in prob.frames]) / (n * math.log(2.0)),
        flow_terms=terms, initial_energy_j=prob.initial_energy_j,
        capacity_j=m.capacity_j, box_lower=lo, box_upper=hi, battery=m)

    x0_full = _p2_start(prob, fixed_d, alpha_lo)
    x0 = np.concatenate([x0_full[:n], x0_full[n:][free_d]])
    x, stats = barrier_minimize(bp, x0, gap_tol=gap_tol)

    alphas = x[:n]
    d = np.zeros(n)
    d[free_d] = x[n:]

    decisions = []
    notes: list[str] = []
    for i, f in enumerate(prob.frames):
        a_i, d_i = float(alphas[i]), float(d[i])
        if a_i < 1.0 - _NET_TOL and d_i > _NET_TOL:
            a_i, d_i = _net_p2_frame(m, f, a_i, d_i, tau)
            notes.append(f"frame {i}: netted simultaneous charge/discharge")
        decisions.append(FrameDecision(rho=0.0, alpha_a=1.0, alpha_b=a_i,
                                       gamma=0.0, d_b=d_i))
    return _evaluate(prob, decisions, stats, notes)


def _net_p2_frame(m: BatteryModel, f: FrameSpec, alpha: float, d: float,
                  tau: float) -> tuple[float, float]:
    """Collapse simultaneous charge+discharge, preserving the net internal flow."""
    c = f.harvested_power_w
    store = m.internal_charge_power((1.0 - alpha) * c)
    drain = m.internal_discharge_power(d)
    net = store - drain
    if net >= 0.0:
        u = m.invert_internal_charge(net) if net > 0 else 0.0
        return 1.0 - u / c if c > 0 else 1.0, 0.0
    return 1.0, m.invert_internal_discharge(-net)


# ---------------------------------------------------------------------------
# P3 under the step discharge model, pattern fixed


def _p3_geometry(prob: OfflineProblem):
    m = prob.battery
    tau = prob.frames[0].duration_s
    nd0 = m.discharge_efficiency_at_rest
    rho_w = np.array([rho_bandwidth_limit(f) for f in prob.frames])
    _, sigmas, alpha_a = _optimal_charge_phase(prob)
    return tau, nd0, rho_w, sigmas, alpha_a


def solve_p3_fixed_pattern(prob: OfflineProblem, pattern: PhasePattern,
                           alpha_a_star: Sequence[float] | None = None,
                           gap_tol: float = 1e-8) -> OfflineSolution:
    """Convex pattern subproblem of the step-discharge reformulation.

    Charge-phase frames optimise (rho_i, e_b_i) with alpha_b = 1; split
    frames optimise (alpha_b_i, e_b_i) with rho = 0.  Discharge is priced at
    the rest efficiency (the step model); delivered energies are mapped back
    through the true curve at the end, so battery residuals follow the plan
    and transmit energies are re-priced honestly.
    """
    if len(pattern) != prob.n_frames:
        raise ValueError("pattern length must match the frame count")
    m = prob.battery
    n = prob.n_frames
    tau, nd0, rho_w, sigmas, alpha_a_default = _p3_geometry(prob)
    alpha_a = np.asarray(alpha_a_star if alpha_a_star is not None else alpha_a_default,
                         dtype=float)
    d_hi = m.max_discharge_power_w
    alpha_lo = np.array([_alpha_floor(f, m) for f in prob.frames])

    max_store = np.empty(n)
    for i, f in enumerate(prob.frames):
        if pattern[i] == CHARGE_PHASE:
            max_store[i] = sigmas[i] * rho_w[i] * tau
        else:
            max_store[i] = m.internal_charge_power(
                m.optimal_charge_power(f.harvested_power_w)) * tau
    fixed_e = _fixable_prefix(prob, max_store)
    fixed_rho = rho_w <= 1e-12

    cols: list[tuple[int, str]] = []   # (frame, role) per variable
    for i in range(n):
        if pattern[i] == CHARGE_PHASE:
            if not fixed_rho[i]:
                cols.append((i, "rho"))
        else:
            cols.append((i, "alpha"))
        if not fixed_e[i]:
            cols.append((i, "e"))
    nvar = len(cols)

    if nvar == 0:
        decisions = [FrameDecision(rho=0.0, alpha_a=1.0, alpha_b=1.0, gamma=0.0, d_b=0.0)
                     for _ in range(n)]
        return _evaluate(prob, decisions, None, ["degenerate: no free variables"])

    frame_of_var = np.array([c[0] for c in cols])
    A = np.zeros((n, nvar))
    off = np.zeros(n)
    terms: list[FlowTerm] = []
    lo = np.full(nvar, -np.inf)
    hi = np.full(nvar, np.inf)
    lin_rows: list[tuple[dict[int, float], float]] = []

    for i, f in enumerate(prob.frames):
        c, p = f.harvested_power_w, f.circuit_power_w
        if pattern[i] == CHARGE_PHASE:
            off[i] = (c - p) * tau
        else:
            off[i] = -p * tau

    for j, (i, role) in enumerate(cols):
        f = prob.frames[i]
        c = f.harvested_power_w
        if role == "rho":
            A[i, j] = -(c - f.circuit_power_w) * tau
            lo[j], hi[j] = 0.0, rho_w[i]
            terms.append(FlowTerm(FLOW_LINEAR, slope=-sigmas[i] * tau))
        elif role == "alpha":
            A[i, j] = c * tau
            lo[j], hi[j] = alpha_lo[i], 1.0
            terms.append(FlowTerm(FLOW_CHARGE_SPLIT, scale=tau, crate=c))
        else:  # e
            A[i, j] = 1.0
            lo[j] = 0.0
            terms.append(FlowTerm(FLOW_LINEAR, slope=1.0 / nd0))
            if math.isfinite(d_hi):
                if pattern[i] == CHARGE_PHASE and not fixed_rho[i]:
                    rho_col = next(k for k, cc in enumerate(cols) if cc == (i, "rho"))
                    lin_rows.append(({j: 1.0, rho_col: d_hi * tau}, d_hi * tau))
                else:
                    hi[j] = d_hi * tau
            else:
                # cap-free variant: bound by all energy conceivably available
                total = prob.initial_energy_j + sum(fr.harvested_power_w * tau
                                                    for fr in prob.frames)
                hi[j] = nd0 * total + 1e-9

    lin_G = lin_h = None
    if lin_rows:
        lin_G = np.zeros((len(lin_rows), nvar))
        lin_h = np.zeros(len(lin_rows))
        for r, (coeffs, rhs) in enumerate(lin_rows):
            for j, v in coeffs.items():
                lin_G[r, j] = v
            lin_h[r] = rhs

    # mid-frame peaks: the level after the charging phase may not exceed B
    peak_rows = None
    if math.isfinite(m.capacity_j):
        peak_rows = [(i, j, sigmas[i] * tau) for j, (i, role) in enumerate(cols)
                     if role == "rho" and sigmas[i] > 0.0]
        peak_rows = peak_rows or None

    bp = BarrierProblem(
        n=nvar, frame_of_var=frame_of_var, n_frames=n,
        energy_matrix=A, energy_offset=off,
        snr_coef=np.array([f.snr_per_joule for f in prob.frames]),
        weights=np.array([f.noise.prefactor for f in prob.frames]) / (n * math.log(2.0)),
        flow_terms=terms, initial_energy_j=prob.initial_energy_j,
        capacity_j=m.capacity_j, box_lower=lo, box_upper=hi,
        lin_G=lin_G, lin_h=lin_h, battery=m, peak_rows=peak_rows)

    x0 = _p3_start(prob, pattern, cols, sigmas, rho_w, alpha_lo, nd0, d_hi)
    try:
        x, stats = barrier_minimize(bp, x0, gap_tol=gap_tol)
    except SolverError as err:
        raise PatternInfeasibleError(f"pattern {pattern.tags}: {err}") from err

    rho = np.zeros(n)
    alpha_b = np.ones(n)
    e = np.zeros(n)
    for j, (i, role) in enumerate(cols):
        if role == "rho":
            rho[i] = x[j]
        elif role == "alpha":
            alpha_b[i] = x[j]
        else:
            e[i] = x[j]

    decisions, notes = _assemble_p3_decisions(prob, pattern, rho, alpha_b, e,
                                              alpha_a, nd0)
    return _evaluate(prob, decisions, stats, notes)


def _p3_start(prob, pattern, cols, sigmas, rho_w, alpha_lo, nd0, d_hi) -> np.ndarray:
    m = prob.battery
    tau = prob.frames[0].duration_s
    cap = m.capacity_j
    level = prob.initial_energy_j
    values: dict[tuple[int, str], float] = {}
    col_set = set(cols)
    for i, f in enumerate(prob.frames):
        c = f.harvested_power_w
        store = 0.0
        rho_i = 0.0
        alpha_i = 1.0
        if (i, "rho") in col_set:
            rho_i = 0.5 * rho_w[i]
            store = sigmas[i] * rho_i * tau
            headroom = cap - level if math.isfinite(cap) else math.inf
            while store >= 0.9 * headroom and rho_i > 1e-12:
                rho_i *= 0.5
                store = sigmas[i] * rho_i * tau
            rho_i = max(rho_i, 1e-9 * rho_w[i])
            store = sigmas[i] * rho_i * tau
            values[(i, "rho")] = rho_i
        elif (i, "alpha") in col_set:
            u_hi = min(c, m.max_charge_power_w) if c > 0 else 0.0
            u = 0.0
            if c > 0.0:
                headroom = cap - level if math.isfinite(cap) else math.inf
                u = min(0.25 * u_hi, 0.45 * headroom / tau)
                u = max(u, 1e-12 * u_hi)
            alpha_i = 1.0 - u / c if c > 0 else 0.5
            alpha_i = min(max(alpha_i, alpha_lo[i] + 1e-9), 1.0 - 1e-9)
            store = m.internal_charge_power((1.0 - alpha_i) * c) * tau if c > 0 else 0.0
            values[(i, "alpha")] = alpha_i
        e_i = 0.0
        if (i, "e") in col_set:
            avail = level + store
            if avail <= 0.0:
                raise PatternInfeasibleError(
                    f"frame {i}: no energy reachable, yet e was left free")
            cap_e = d_hi * (1.0 - rho_i) * tau if math.isfinite(d_hi) else math.inf
            e_i = min(0.25 * nd0 * avail, 0.45 * cap_e)
            values[(i, "e")] = e_i
        level = min(level + store - e_i / nd0, cap)
    return np.array([values[c] for c in cols])


def _assemble_p3_decisions(prob, pattern, rho, alpha_b, e, alpha_a, nd0):
    """Map plan variables to feasible frame decisions (true-curve discharge)."""
    m = prob.battery
    tau = prob.frames[0].duration_s
    decisions: list[FrameDecision] = []
    notes: list[str] = []
    for i, f in enumerate(prob.frames):
        r_i, a_i, e_i = float(rho[i]), float(alpha_b[i]), float(e[i])
        if r_i < 1e-10:
            r_i = 0.0
        if e_i < 1e-15:
            e_i = 0.0
        if a_i < 1.0 - _NET_TOL and e_i > _NET_TOL:
            # the relaxation allows charging while discharging; net it out
            store = m.internal_charge_power((1.0 - a_i) * f.harvested_power_w)
            net = store - e_i / (nd0 * tau)
            if net >= 0.0:
                u = m.invert_internal_charge(net) if net > 0 else 0.0
                a_i = 1.0 - u / f.harvested_power_w if f.harvested_power_w > 0 else 1.0
                e_i = 0.0
            else:
                a_i = 1.0
                e_i = -net * nd0 * tau
            notes.append(f"frame {i}: netted simultaneous charge/discharge")
        d_b = 0.0
        if e_i > 0.0:
            d_b = m.invert_internal_discharge(e_i / ((1.0 - r_i) * tau))
        aa = float(alpha_a[i]) if r_i > 0.0 else 1.0
        decisions.append(FrameDecision(rho=r_i, alpha_a=aa, alpha_b=a_i,
                                       gamma=0.0, d_b=d_b))
    return decisions, notes


# ---------------------------------------------------------------------------
# Algorithm: pattern selection by loss comparison


def frame_receives_energy(sol: OfflineSolution, prob: OfflineProblem, i: int,
                          tol: float = 1e-12) -> bool:
    """True when frame i draws strictly more from the battery than it stores."""
    f = prob.frames[i]
    led = energy_ledger(sol.decisions[i], f, prob.battery)
    stored = led.stored_in_phase1_j + led.internal_store_phase2_j
    return led.internal_drain_j > stored + tol


ALL_CHARGE = "all_charge"
ZERO_RHO = "zero_rho"


def loss_of_frame(prob: OfflineProblem, sol: OfflineSolution, i: int,
                  mode: str = ALL_CHARGE) -> float:
    """Charging plus circuit losses of frame i under one of the two modes.

    ALL_CHARGE prices the frame's own decision; ZERO_RHO prices the
    rho_i = 0 candidate that matches the frame's transmit energy with a
    clipped power split.
    """
    f = prob.frames[i]
    if mode == ALL_CHARGE:
        led = energy_ledger(sol.decisions[i], f, prob.battery)
        external = ((1.0 - sol.decisions[i].alpha_a) * f.harvested_power_w
                    * sol.decisions[i].rho * f.duration_s
                    + (1.0 - sol.decisions[i].alpha_b) * f.harvested_power_w
                    * (1.0 - sol.decisions[i].rho) * f.duration_s)
        stored = led.stored_in_phase1_j + led.internal_store_phase2_j
        return (external - stored) + led.circuit_energy_j
    if mode == ZERO_RHO:
        alpha, loss, feasible = _zero_rho_candidate(prob, i, sol.transmit_energies_j[i])
        return loss if feasible else math.inf
    raise ValueError(f"unknown loss mode {mode!r}")


def _zero_rho_candidate(prob: OfflineProblem, i: int,
                        transmit_energy_j: float) -> tuple[float, float, bool]:
    """alpha_b matching a target transmit energy at rho=0, with its loss."""
    f = prob.frames[i]
    m = prob.battery
    tau = f.duration_s
    c, p = f.harvested_power_w, f.circuit_power_w
    if c <= 0.0:
        return 1.0, math.inf, False
    if transmit_energy_j + p * tau > c * tau * (1.0 + 1e-12):
        return 1.0, math.inf, False  # cannot match the energy from the direct path
    alpha = (transmit_energy_j / tau + p) / c
    alpha = min(max(alpha, _alpha_floor(f, m)), 1.0)
    u = (1.0 - alpha) * c
    charge_loss = (u - m.internal_charge_power(u)) * tau
    transmits = (alpha * c - p) > 0.0
    return alpha, charge_loss + (p * tau if transmits else 0.0), True


def algorithm1(prob: OfflineProblem, gap_tol: float = 1e-8) -> OfflineSolution:
    """Approximate multi-frame optimum via pattern selection and two convex solves.

    1. alpha_a fixed per frame at the internal-charge-power argmax.
    2. Solve the all-charge-phase pattern (step discharge).
    3. Frames receiving net battery energy keep alpha_b = 1.
    4. Every other frame is tried at rho = 0 with a power split matching its
       transmit energy; whichever mode loses less energy wins.
    5. Re-solve the committed pattern and recover discharge powers through
       the true efficiency curve.

    The returned solution is never worse (in planned average rate) than the
    all-charge solution of step 2.
    """
    n = prob.n_frames
    _, sigmas, alpha_a = _optimal_charge_phase(prob)

    all_charge = PhasePattern.all_charge(n)
    sol_charge = solve_p3_fixed_pattern(prob, all_charge, alpha_a, gap_tol=gap_tol)

    tags = []
    for i in range(n):
        if frame_receives_energy(sol_charge, prob, i):
            tags.append(CHARGE_PHASE)  # pinned: receiving frames keep alpha_b = 1
            continue
        loss_charge = loss_of_frame(prob, sol_charge, i, ALL_CHARGE)
        loss_zero = loss_of_frame(prob, sol_charge, i, ZERO_RHO)
        tags.append(SPLIT_POWER if loss_zero <= loss_charge else CHARGE_PHASE)
    pattern = PhasePattern(tuple(tags))

    if pattern.tags == all_charge.tags:
        return sol_charge

    sol_final = solve_p3_fixed_pattern(prob, pattern, alpha_a, gap_tol=gap_tol)
    if sol_final.rate_avg >= sol_charge.rate_avg:
        sol_final.notes.append(f"pattern: {sum(t == SPLIT_POWER for t in tags)} split frames")
        return sol_final
    sol_charge.notes.append("pattern refinement regressed; kept all-charge solution")
    return sol_charge


# ---------------------------------------------------------------------------
# comparison baselines


def no_battery_baseline(prob: OfflineProblem) -> OfflineSolution:
    """Direct transmission only: rho = 0, alpha_b = 1, battery untouched."""
    decisions = [FrameDecision(rho=0.0, alpha_a=1.0, alpha_b=1.0, gamma=0.0, d_b=0.0)
                 for _ in prob.frames]
    return _evaluate(prob, decisions, None, ["no-battery baseline"])


def ideal_battery_baseline(prob: OfflineProblem) -> OfflineSolution:
    """Plan on a lossless battery, then replay the plan on the real one.

    The replay clips charge rates at the real maximum, caps stores at the
    remaining capacity, and scales discharge down to what the real causality
    allows.
    """
    ideal = BatteryModel(capacity_j=prob.battery.capacity_j, resistance_ohm=0.0,
                         nominal_voltage_v=prob.battery.nominal_voltage_v,
                         variant=FIXED_EFFICIENCY, eta_c=1.0, eta_d=1.0)
    plan = algorithm1(replace(prob, battery=ideal))

    m = prob.battery
    tau = prob.frames[0].duration_s
    level = prob.initial_energy_j
    repaired: list[FrameDecision] = []
    for f, d in zip(prob.frames, plan.decisions):
        c = f.harvested_power_w
        u1 = min((1.0 - d.alpha_a) * c, m.max_charge_power_w)
        alpha_a = 1.0 - u1 / c if c > 0 else d.alpha_a
        stored1 = m.internal_charge_power(u1) * d.rho * tau
        stored1 = min(stored1, m.capacity_j - level)   # overflow is wasted
        u2 = min((1.0 - d.alpha_b) * c, m.max_charge_power_w)
        alpha_b = 1.0 - u2 / c if c > 0 else d.alpha_b
        stored2 = m.internal_charge_power(u2) * (1.0 - d.rho) * tau
        stored2 = min(stored2, m.capacity_j - level - stored1)
        d_b = min(d.d_b, m.max_discharge_power_w)
        if d_b > 0.0:
            avail_rate = (level + stored1 + stored2) / ((1.0 - d.rho) * tau)
            d_b = min(d_b, m.invert_internal_discharge(avail_rate))
        drain = m.internal_discharge_power(d_b) * (1.0 - d.rho) * tau
        level = min(max(level + stored1 + stored2 - drain, 0.0), m.capacity_j)
        repaired.append(FrameDecision(rho=d.rho, alpha_a=alpha_a, alpha_b=alpha_b,
                                      gamma=0.0, d_b=d_b))
    sol = _evaluate(prob, repaired, plan.solver_stats,
                    ["ideal-battery plan replayed on the real battery"])
    return sol
