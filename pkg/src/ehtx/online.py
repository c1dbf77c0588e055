"""Causal transmission policies: exact finite-horizon DP and four heuristics.

The dynamic program works on a discretised battery axis.  An action is
summarised by the battery level it targets at the end of the frame; for a
transition from level b to grid target x the best achievable transmit energy
is

    E*(c, b, x) = max over the two admissible frame modes of the energy
                  left for the transmitter after the battery books balance,

where the modes mirror the offline dichotomy: a charge-phase split (rho in
[0, rho_W], alpha_b = 1, full-rate phase-1 charging at the internal-power
argmax) or a pure power split (rho = 0, either charging through alpha_b or
discharging).  E* is independent of the stage and the channel gain, so it is
precomputed once per harvest level and every Bellman backup is a dense
max over targets.

Policies are small objects exposing ``act(state) -> FrameDecision``;
``simulate_policy`` rolls any of them through a realization while keeping
the battery honest (capacity overflow is wasted, causality violations are
policy bugs and raise).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .battery import BatteryModel
from .frame import FrameDecision, FrameSpec, energy_ledger, rho_bandwidth_limit
from .offline import OfflineProblem, algorithm1
from .single_frame import solve_single_frame
from .solvers import scan_then_golden_max

_TOL = 1e-12


@dataclass(frozen=True)
class SystemState:
    """Causal information available at the start of a frame (0-based index)."""

    frame_index: int
    harvested_power_w: float
    channel_gain: float
    residual_j: float


@dataclass(frozen=True)
class DiscreteDistribution:
    values: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.values) != len(self.probs) or not self.values:
            raise ValueError("values and probs must be equal-length, non-empty")
        if any(p < 0 for p in self.probs):
            raise ValueError("probabilities must be nonnegative")
        if abs(sum(self.probs) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to one")
        if any(not math.isfinite(v) for v in self.values):
            raise ValueError("support must be finite")

    @classmethod
    def uniform(cls, values: Sequence[float]) -> "DiscreteDistribution":
        n = len(values)
        return cls(tuple(float(v) for v in values), tuple([1.0 / n] * n))

    @classmethod
    def point(cls, value: float) -> "DiscreteDistribution":
        return cls((float(value),), (1.0,))

    @property
    def mean(self) -> float:
        return float(sum(v * p for v, p in zip(self.values, self.probs)))

    def nearest_index(self, value: float) -> int:
        return int(np.argmin(np.abs(np.asarray(self.values) - value)))


def quantize_exponential_unit_mean(k: int = 8) -> DiscreteDistribution:
    """Equiprobable k-point quantisation of the unit-mean exponential law.

    Bin representatives are conditional means, so the quantised mean is
    exactly one.
    """
    edges = [-math.log(1.0 - i / k) for i in range(k)] + [math.inf]
    vals = []
    for a, b in zip(edges[:-1], edges[1:]):
        mass_a = (a + 1.0) * math.exp(-a)
        mass_b = 0.0 if math.isinf(b) else (b + 1.0) * math.exp(-b)
        vals.append((mass_a - mass_b) * k)
    return DiscreteDistribution(tuple(vals), tuple([1.0 / k] * k))


# ---------------------------------------------------------------------------
# battery transition energies


@dataclass(frozen=True)
class _TransitionGeometry:
    """Per-harvest-level constants of the transition-energy computation."""

    harvested_power_w: float
    circuit_power_w: float
    duration_s: float
    rho_w: float
    sigma_w: float            # internal charge power at the optimal rate
    alpha_a: float
    drain_rate_cap: float     # internal drain rate at the discharge cap
    capacity_j: float


def _geometry(c: float, template: FrameSpec, m: BatteryModel) -> _TransitionGeometry:
    cp = m.optimal_charge_power(c)
    sigma = m.internal_charge_power(cp)
    d_hi = m.max_discharge_power_w
    cap_rate = m.internal_discharge_power(d_hi) if math.isfinite(d_hi) else math.inf
    return _TransitionGeometry(
        harvested_power_w=c, circuit_power_w=template.circuit_power_w,
        duration_s=template.duration_s, rho_w=rho_bandwidth_limit(template),
        sigma_w=sigma, alpha_a=1.0 - cp / c if c > 0 else 0.0,
        drain_rate_cap=cap_rate, capacity_j=m.capacity_j)


def _tsr_energy(geo: _TransitionGeometry, m: BatteryModel, b, x, rho):
    """Transmit energy of the charge-phase mode at time split rho (vectorised).

    Phase-1 storage saturates at the capacity headroom; past that point a
    longer charging phase only concentrates the transmission burst.
    """
    tau = geo.duration_s
    rho = np.minimum(rho, 1.0 - 1e-12)
    stored = np.minimum(geo.sigma_w * rho * tau, geo.capacity_j - b)
    d_req = b - x + stored
    rate = d_req / ((1.0 - rho) * tau)
    d_b = m.invert_internal_discharge(np.maximum(rate, 0.0))
    return (geo.harvested_power_w - geo.circuit_power_w + d_b) * (1.0 - rho) * tau


def _tsr_window(geo: _TransitionGeometry, b, x):
    """Feasible rho interval [lo, hi] of the charge-phase mode (vectorised)."""
    tau = geo.duration_s
    sigma = geo.sigma_w
    if sigma > 0.0:
        lo = np.maximum((x - b) / (sigma * tau), 0.0)
        rho_sat = (geo.capacity_j - b) / (sigma * tau)
    else:
        lo = np.where(x <= b, 0.0, np.inf)
        rho_sat = np.inf
    hi = np.full(np.broadcast(b, x).shape, geo.rho_w, dtype=float)
    if math.isfinite(geo.drain_rate_cap):
        cap = geo.drain_rate_cap
        # before saturation the required drain grows with rho; after it the
        # drain is constant at (capacity - x), so the cap crossing shifts
        cross1 = (cap * tau - (b - x)) / ((sigma + cap) * tau)
        cross2 = 1.0 - (geo.capacity_j - x) / (cap * tau)
        crossing = np.where(cross1 <= rho_sat, cross1, cross2)
        hi = np.minimum(hi, crossing)
    return lo, hi


def _transition_energy_grid(geo: _TransitionGeometry, m: BatteryModel,
                            grid: np.ndarray, scan_points: int = 64,
                            golden_iters: int = 48) -> np.ndarray:
    """E*(b, x) for all grid pairs; -inf marks unreachable transitions.

    The charge-phase mode is maximised over rho by a coarse scan plus a
    vectorised golden-section polish (the energy is not provably unimodal in
    rho, the scan guards against that).  Targets below the current level
    must leave the transmitter strictly on.
    """
    tau = geo.duration_s
    b = grid[:, None]
    x = grid[None, :]
    best = np.full((grid.size, grid.size), -np.inf)

    # power-split mode, rho = 0
    drain_rate = (b - x) / tau
    ok_drain = (drain_rate >= 0.0) & (drain_rate <= geo.drain_rate_cap * (1 + 1e-12))
    d_b = m.invert_internal_discharge(np.where(ok_drain, np.maximum(drain_rate, 0.0), 0.0))
    e_psr = (geo.harvested_power_w - geo.circuit_power_w + d_b) * tau
    best = np.where(ok_drain, e_psr, best)

    charge_rate = (x - b) / tau
    ok_charge = (charge_rate > 0.0) & (charge_rate <= geo.sigma_w * (1 + 1e-12))
    if np.any(ok_charge):
        w = np.where(ok_charge, np.minimum(charge_rate, geo.sigma_w), 0.0)
        u = m.invert_internal_charge(w)
        e_chg = (geo.harvested_power_w - u - geo.circuit_power_w) * tau
        best = np.where(ok_charge, np.maximum(best, e_chg), best)

    # charge-phase mode, rho in [lo, hi]
    lo, hi = _tsr_window(geo, b, x)
    feas = lo <= hi * (1 + 1e-12)
    if np.any(feas):
        lo_f = np.where(feas, lo, 0.0)
        hi_f = np.where(feas, np.minimum(hi, 1.0 - 1e-9), 0.0)
        span = hi_f - lo_f
        e_best = _tsr_energy(geo, m, b, x, lo_f)
        arg = lo_f.copy()
        for k in range(1, scan_points):
            r = lo_f + span * (k / (scan_points - 1.0))
            e_k = _tsr_energy(geo, m, b, x, r)
            take = e_k > e_best
            e_best = np.where(take, e_k, e_best)
            arg = np.where(take, r, arg)
        # golden polish inside the bracketing cells (one vector eval per pass)
        cell = span / (scan_points - 1.0)
        a_g = np.maximum(arg - cell, lo_f)
        b_g = np.minimum(arg + cell, hi_f)
        inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
        x1 = b_g - inv_phi * (b_g - a_g)
        x2 = a_g + inv_phi * (b_g - a_g)
        f1 = _tsr_energy(geo, m, b, x, x1)
        f2 = _tsr_energy(geo, m, b, x, x2)
        for _ in range(golden_iters):
            pick1 = f1 >= f2          # maximum lies in [a, x2]
            b_g = np.where(pick1, x2, b_g)
            a_g = np.where(pick1, a_g, x1)
            new_x1 = np.where(pick1, b_g - inv_phi * (b_g - a_g), x2)
            new_x2 = np.where(pick1, x1, a_g + inv_phi * (b_g - a_g))
            f_new = _tsr_energy(geo, m, b, x, np.where(pick1, new_x1, new_x2))
            f1, f2 = np.where(pick1, f_new, f2), np.where(pick1, f1, f_new)
            x1, x2 = new_x1, new_x2
        e_gold = _tsr_energy(geo, m, b, x, 0.5 * (a_g + b_g))
        e_tsr = np.maximum(e_best, e_gold)
        best = np.where(feas, np.maximum(best, e_tsr), best)

    # draining targets must pay off: no transmission, no reason to drain
    starved = (x < b) & (best <= 0.0)
    best = np.where(starved, -np.inf, best)
    return best


def _reconstruct_action(geo: _TransitionGeometry, m: BatteryModel,
                        b: float, x: float) -> FrameDecision:
    """Best decision realising the transition b -> x (scalar twin of the grid)."""
    tau = geo.duration_s
    c, p = geo.harvested_power_w, geo.circuit_power_w
    candidates: list[tuple[float, FrameDecision]] = []

    drain_rate = (b - x) / tau
    if 0.0 <= drain_rate <= geo.drain_rate_cap * (1 + 1e-12):
        d_b = float(m.invert_internal_discharge(max(drain_rate, 0.0)))
        e = (c - p + d_b) * tau
        candidates.append((e, FrameDecision(0.0, 1.0, 1.0, 0.0, d_b)))
    charge_rate = (x - b) / tau
    if 0.0 < charge_rate <= geo.sigma_w * (1 + 1e-12):
        u = float(m.invert_internal_charge(min(charge_rate, geo.sigma_w)))
        e = (c - u - p) * tau
        alpha = 1.0 - u / c if c > 0 else 1.0
        candidates.append((e, FrameDecision(0.0, 1.0, alpha, 0.0, 0.0)))

    lo, hi = _tsr_window(geo, np.asarray(b), np.asarray(x))
    lo, hi = float(lo), float(min(hi, 1.0 - 1e-9))
    if lo <= hi * (1 + 1e-12):
        def e_at(r: float) -> float:
            return float(_tsr_energy(geo, m, b, x, r))
        rho, e = scan_then_golden_max(e_at, lo, max(hi, lo), n_grid=64)
        stored = min(geo.sigma_w * rho * tau, geo.capacity_j - b)
        d_req = b - x + stored
        d_b = float(m.invert_internal_discharge(max(d_req, 0.0) / ((1.0 - rho) * tau)))
        if e <= 0.0 and x >= b and geo.sigma_w > 0.0:
            # starved frame: charge without transmitting, drain nothing
            rho, d_b, e = lo, 0.0, e_at(lo)
            stored = min(geo.sigma_w * rho * tau, geo.capacity_j - b)
        if rho <= 0.0:
            alpha_a = 1.0
        elif geo.sigma_w > 0.0 and geo.sigma_w * rho * tau > stored + 1e-15:
            # saturated phase 1: reduce the charge rate to exactly fill up
            u = float(m.invert_internal_charge(min(stored / (rho * tau),
                                                   geo.sigma_w)))
            alpha_a = 1.0 - u / geo.harvested_power_w if geo.harvested_power_w > 0 else 0.0
        else:
            alpha_a = geo.alpha_a
        candidates.append((e, FrameDecision(rho, alpha_a, 1.0, 0.0, d_b)))

    if not candidates:
        raise ValueError(f"no admissible action moves the battery {b:.4g} -> {x:.4g}")
    e, d = max(candidates, key=lambda t: t[0])
    if e <= 0.0 and d.d_b > 0.0:
        d = replace(d, d_b=0.0)
    return d


# ---------------------------------------------------------------------------
# dynamic program


@dataclass
class DpPolicy:
    """Backward-induction tables over (harvest, gain, battery-grid) states."""

    battery_grid: np.ndarray
    c_dist: DiscreteDistribution
    h_dist: DiscreteDistribution
    template: FrameSpec
    battery: BatteryModel
    horizon: int
    value_tables: list[np.ndarray]        # per stage: (n_c, n_h, n_grid)
    action_tables: list[np.ndarray]       # per stage: target grid index
    expected_to_go: list[np.ndarray]      # per stage: (n_grid,)
    _geos: dict[int, _TransitionGeometry] = field(default_factory=dict)
    _action_cache: dict[tuple[int, int, int], FrameDecision] = field(default_factory=dict)

    def act(self, state: SystemState) -> FrameDecision:
        n = state.frame_index
        if not 0 <= n < self.horizon:
            raise ValueError("frame index outside the horizon")
        ci = self.c_dist.nearest_index(state.harvested_power_w)
        hi = self.h_dist.nearest_index(state.channel_gain)
        # round the battery level down to the grid: never fabricates energy
        bi = int(np.searchsorted(self.battery_grid, state.residual_j + 1e-15,
                                 side="right") - 1)
        bi = max(min(bi, self.battery_grid.size - 1), 0)
        xi = int(self.action_tables[n][ci, hi, bi])
        key = (ci, bi, xi)
        if key not in self._action_cache:
            geo = self._geos[ci]
            self._action_cache[key] = _reconstruct_action(
                geo, self.battery, float(self.battery_grid[bi]),
                float(self.battery_grid[xi]))
        return self._action_cache[key]

    def value(self, state: SystemState) -> float:
        ci = self.c_dist.nearest_index(state.harvested_power_w)
        hi = self.h_dist.nearest_index(state.channel_gain)
        bi = int(np.searchsorted(self.battery_grid, state.residual_j + 1e-15,
                                 side="right") - 1)
        bi = max(min(bi, self.battery_grid.size - 1), 0)
        return float(self.value_tables[state.frame_index][ci, hi, bi])


def dp_build(c_dist: DiscreteDistribution, h_dist: DiscreteDistribution,
             template: FrameSpec, m: BatteryModel, grid_step_j: float,
             horizon: int) -> DpPolicy:
    """Backward induction over the discretised battery axis.

    Stage values are sums of per-frame rates (bits/symbol); divide the
    initial expected value by the horizon for the average rate.  The
    terminal stage maximises the frame rate alone; earlier stages add the
    expectation of the next stage value over the independent harvest and
    gain laws.
    """
    if grid_step_j <= 0.0:
        raise ValueError("grid step must be positive")
    if grid_step_j > m.capacity_j:
        raise ValueError("grid step exceeds the battery capacity")
    n_pts = int(round(m.capacity_j / grid_step_j)) + 1
    grid = np.linspace(0.0, m.capacity_j, n_pts)

    kappa = replace(template, channel_gain=1.0).snr_per_joule
    pref = template.noise.prefactor

    geos: dict[int, _TransitionGeometry] = {}
    rate_tables: dict[tuple[int, int], np.ndarray] = {}
    reachable: dict[int, np.ndarray] = {}
    for ci, c in enumerate(c_dist.values):
        geo = _geometry(c, template, m)
        geos[ci] = geo
        e_star = _transition_energy_grid(geo, m, grid)
        reachable[ci] = np.isfinite(e_star)
        for hi, h in enumerate(h_dist.values):
            gain = np.where(reachable[ci],
                            pref * np.log2(1.0 + h * kappa * np.maximum(e_star, 0.0)),
                            -np.inf)
            rate_tables[(ci, hi)] = gain

    n_c, n_h = len(c_dist.values), len(h_dist.values)
    values: list[np.ndarray] = [None] * horizon  # type: ignore[list-item]
    actions: list[np.ndarray] = [None] * horizon  # type: ignore[list-item]
    to_go: list[np.ndarray] = [None] * horizon  # type: ignore[list-item]

    next_to_go = np.zeros(grid.size)
    for n in range(horizon - 1, -1, -1):
        val = np.empty((n_c, n_h, grid.size))
        act = np.empty((n_c, n_h, grid.size), dtype=np.int64)
        for ci in range(n_c):
            for hi in range(n_h):
                total = rate_tables[(ci, hi)] + next_to_go[None, :]
                total = np.where(reachable[ci], total, -np.inf)
                act[ci, hi] = np.argmax(total, axis=1)
                val[ci, hi] = total[np.arange(grid.size), act[ci, hi]]
        values[n] = val
        actions[n] = act
        pc = np.asarray(c_dist.probs)[:, None, None]
        ph = np.asarray(h_dist.probs)[None, :, None]
        to_go[n] = np.sum(val * pc * ph, axis=(0, 1))
        next_to_go = to_go[n]

    return DpPolicy(battery_grid=grid, c_dist=c_dist, h_dist=h_dist,
                    template=template, battery=m, horizon=horizon,
                    value_tables=values, action_tables=actions,
                    expected_to_go=to_go, _geos=geos)


def dp_act(policy: DpPolicy, state: SystemState) -> FrameDecision:
    return policy.act(state)


# ---------------------------------------------------------------------------
# heuristic policies


@dataclass
class GreedyPolicy:
    """Solve the current frame alone; whatever the caps leave over carries."""

    template: FrameSpec
    battery: BatteryModel
    enforce_bandwidth: bool = True

    def act(self, state: SystemState) -> FrameDecision:
        f = self.template.with_harvest(state.harvested_power_w, state.channel_gain)
        sol = solve_single_frame(f, self.battery, min(state.residual_j,
                                                      self.battery.capacity_j),
                                 enforce_bandwidth=self.enforce_bandwidth)
        return sol.decision


def greedy_act(state: SystemState, template: FrameSpec, m: BatteryModel) -> FrameDecision:
    return GreedyPolicy(template, m).act(state)


@dataclass
class StatisticalPolicy:
    """Two-frame lookahead: the real frame plus a mean-valued hypothetical one."""

    template: FrameSpec
    battery: BatteryModel
    mean_harvest_w: float
    mean_gain: float
    gap_tol: float = 1e-8

    def act(self, state: SystemState) -> FrameDecision:
        frames = (
            self.template.with_harvest(state.harvested_power_w, state.channel_gain),
            self.template.with_harvest(self.mean_harvest_w, self.mean_gain),
        )
        prob = OfflineProblem(frames=frames, battery=self.battery,
                              initial_energy_j=min(state.residual_j,
                                                   self.battery.capacity_j))
        return algorithm1(prob, gap_tol=self.gap_tol).decisions[0]


def statistical_act(state: SystemState, means: tuple[float, float],
                    template: FrameSpec, m: BatteryModel) -> FrameDecision:
    return StatisticalPolicy(template, m, means[0], means[1]).act(state)


@dataclass
class CtsrPolicy:
    """One fixed time split for every frame; drains everything it stored."""

    rho: float
    alpha_a: float
    template: FrameSpec
    battery: BatteryModel

    def act(self, state: SystemState) -> FrameDecision:
        m = self.battery
        tau = self.template.duration_s
        c = state.harvested_power_w
        u = min((1.0 - self.alpha_a) * c, m.max_charge_power_w)
        stored = m.internal_charge_power(u) * self.rho * tau
        level = min(state.residual_j, m.capacity_j)
        stored = min(stored, m.capacity_j - level)  # overflow is wasted
        d_b = 0.0
        if self.rho < 1.0:
            target = (stored + level) / ((1.0 - self.rho) * tau)
            d_b = float(m.invert_internal_discharge(target))
        alpha_a = 1.0 - u / c if (c > 0 and self.rho > 0) else 1.0
        return FrameDecision(rho=self.rho, alpha_a=alpha_a, alpha_b=1.0,
                             gamma=0.0, d_b=d_b)


@dataclass
class CpsrPolicy:
    """One fixed power split; never discharges (exclusivity pins d_b to zero)."""

    alpha_b: float
    template: FrameSpec
    battery: BatteryModel

    def act(self, state: SystemState) -> FrameDecision:
        return FrameDecision(rho=0.0, alpha_a=1.0, alpha_b=self.alpha_b,
                             gamma=0.0, d_b=0.0)


# ---------------------------------------------------------------------------
# rollout


@dataclass
class PolicyTrace:
    decisions: list[FrameDecision]
    transmit_energies_j: list[float]
    residuals_j: list[float]
    rates: list[float]
    rate_avg: float


class PolicyBugError(RuntimeError):
    """A policy emitted an action the battery cannot honour."""


def simulate_policy(policy, realization: Sequence[tuple[float, float]],
                    template: FrameSpec, m: BatteryModel,
                    initial_energy_j: float) -> PolicyTrace:
    """Roll a policy through one (harvest, gain) realization.

    Stores that would overflow the capacity are wasted; draining more than
    the battery holds is a policy bug and raises.
    """
    level = min(initial_energy_j, m.capacity_j)
    decisions, energies, residuals, rates = [], [], [], []
    for n, (c, h) in enumerate(realization):
        state = SystemState(frame_index=n, harvested_power_w=c,
                            channel_gain=h, residual_j=level)
        d = policy.act(state)
        f = template.with_harvest(c, h)
        led = energy_ledger(d, f, m)
        if led.transmit_energy_j <= 0.0 and d.d_b > 0.0:
            d = replace(d, d_b=0.0)  # starved frame: do not waste the drain
            led = energy_ledger(d, f, m)
        level1 = min(level + led.stored_in_phase1_j, m.capacity_j)
        avail = level1 + led.internal_store_phase2_j
        if led.internal_drain_j > avail + 1e-9:
            raise PolicyBugError(
                f"frame {n}: drain {led.internal_drain_j:.3e} J exceeds "
                f"available {avail:.3e} J")
        level = min(max(avail - led.internal_drain_j, 0.0), m.capacity_j)
        decisions.append(d)
        energies.append(led.transmit_energy_j)
        residuals.append(level)
        rates.append(f.rate_from_transmit_energy(led.transmit_energy_j))
    return PolicyTrace(decisions=decisions, transmit_energies_j=energies,
                       residuals_j=residuals, rates=rates,
                       rate_avg=float(np.mean(rates)) if rates else 0.0)


# ---------------------------------------------------------------------------
# constant-ratio fitting


def _mean_rate(policy, realizations, template, m, b0) -> float:
    total = 0.0
    for real in realizations:
        total += simulate_policy(policy, real, template, m, b0).rate_avg
    return total / len(realizations)


def fit_ctsr(realizations, template: FrameSpec, m: BatteryModel,
             mean_harvest_w: float, initial_energy_j: float = 0.0,
             n_grid: int = 33) -> CtsrPolicy:
    """Pick the constant time split maximising the Monte-Carlo average rate.

    alpha_a is pinned at the internal-charge-power argmax for the mean
    harvested power; the rho search is a grid scan plus golden polish on the
    common realization set, hence deterministic.
    """
    cp = m.optimal_charge_power(mean_harvest_w)
    alpha_a = 1.0 - cp / mean_harvest_w if mean_harvest_w > 0 else 0.0
    rho_hi = rho_bandwidth_limit(template)

    def objective(rho: float) -> float:
        pol = CtsrPolicy(rho=rho, alpha_a=alpha_a, template=template, battery=m)
        return _mean_rate(pol, realizations, template, m, initial_energy_j)

    rho, _ = scan_then_golden_max(objective, 0.0, rho_hi, n_grid=n_grid, tol=1e-6)
    return CtsrPolicy(rho=rho, alpha_a=alpha_a, template=template, battery=m)


def fit_cpsr(realizations, template: FrameSpec, m: BatteryModel,
             harvest_support: Sequence[float], initial_energy_j: float = 0.0,
             n_grid: int = 33) -> CpsrPolicy:
    """Pick the constant power split the same way (rho pinned to zero)."""
    floor = 0.0
    if math.isfinite(m.max_charge_power_w):
        floor = max((max(0.0, 1.0 - m.max_charge_power_w / c)
                     for c in harvest_support if c > 0), default=0.0)

    def objective(alpha: float) -> float:
        pol = CpsrPolicy(alpha_b=alpha, template=template, battery=m)
        return _mean_rate(pol, realizations, template, m, initial_energy_j)

    alpha, best = scan_then_golden_max(objective, floor, 1.0, n_grid=n_grid, tol=1e-6)
    if objective(1.0) >= best:
        alpha = 1.0
    return CpsrPolicy(alpha_b=alpha, template=template, battery=m)
