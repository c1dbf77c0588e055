"""Frame-level data model: specs, decisions, rates, energy accounting, feasibility.

A frame of tau seconds carries a fixed number of channel symbols and is split
at rho*tau into a charging phase and a transmitting phase.  During the first
phase the battery must charge ((1-alpha_a)*c into the cell, discharge zero);
during the second the transmitter runs from alpha_b*c plus the battery
discharge d_b, with charging and discharging mutually exclusive.  gamma is
the fraction of symbols sent in the first phase (zero in every optimal
policy here, but the accounting supports it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .battery import BatteryModel

UNIT_PSD = "unit_psd"
SPECTRAL_DENSITY = "spectral_density"

#: absolute slack (J or W) tolerated before an energy constraint counts as violated
FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class NoiseModel:
    """Receiver noise convention for the achievable-rate formula.

    unit_psd:         rate = log2(1 + gain * E_sym) with E_sym the energy per
                      symbol (unit noise spectral density).
    spectral_density: rate = pref * log2(1 + gain * P_t / (n0 * W)) with P_t
                      the transmit energy normalised per frame duration and
                      pref = 0.5 when half_factor is set.
    """

    mode: str = SPECTRAL_DENSITY
    n0_w_per_hz: float = 1e-15
    half_factor: bool = True

    def __post_init__(self) -> None:
        if self.mode not in (UNIT_PSD, SPECTRAL_DENSITY):
            raise ValueError(f"unknown noise mode {self.mode!r}")
        if self.mode == SPECTRAL_DENSITY and not self.n0_w_per_hz > 0.0:
            raise ValueError("n0_w_per_hz must be > 0")

    @property
    def prefactor(self) -> float:
        if self.mode == UNIT_PSD:
            return 1.0
        return 0.5 if self.half_factor else 1.0


def rate_bits_per_symbol(power, gain, noise: NoiseModel,
                         bandwidth_hz: float | None = None):
    """Achievable rate in bits per channel symbol.

    ``power`` is the energy per symbol (unit_psd mode) or the average
    transmit power in W (spectral_density mode, which also needs the channel
    bandwidth for the noise power n0*W).
    """
    p = np.asarray(power, dtype=float)
    if np.any(p < 0.0) or gain < 0.0:
        raise ValueError("power and gain must be >= 0")
    if noise.mode == UNIT_PSD:
        out = np.log2(1.0 + gain * p)
    else:
        if bandwidth_hz is None:
            raise ValueError("spectral_density mode needs bandwidth_hz")
        out = noise.prefactor * np.log2(1.0 + gain * p / (noise.n0_w_per_hz * bandwidth_hz))
    return float(out) if np.ndim(power) == 0 else out


@dataclass(frozen=True)
class FrameSpec:
    """Exogenous data of one frame."""

    harvested_power_w: float
    channel_gain: float
    duration_s: float = 1.0
    symbols: int = 10**6
    circuit_power_w: float = 0.05
    bandwidth_hz: float = 1e6
    noise: NoiseModel = NoiseModel()

    def __post_init__(self) -> None:
        if not self.harvested_power_w >= 0.0:
            raise ValueError("harvested_power_w must be >= 0")
        if not self.channel_gain >= 0.0:
            raise ValueError("channel_gain must be >= 0")
        if not self.duration_s > 0.0:
            raise ValueError("duration_s must be > 0")
        if not self.symbols > 0:
            raise ValueError("symbols must be > 0")
        if not self.circuit_power_w >= 0.0:
            raise ValueError("circuit_power_w must be >= 0")
        if not self.bandwidth_hz > 0.0:
            raise ValueError("bandwidth_hz must be > 0")
        if self.symbols > self.bandwidth_hz * self.duration_s * (1.0 + 1e-12):
            raise ValueError("symbols exceed bandwidth * duration (Nyquist)")

    def with_harvest(self, harvested_power_w: float, channel_gain: float) -> "FrameSpec":
        return replace(self, harvested_power_w=harvested_power_w,
                       channel_gain=channel_gain)

    @property
    def snr_per_joule(self) -> float:
        """Received SNR contributed per joule of transmit energy (gain included)."""
        if self.noise.mode == UNIT_PSD:
            return self.channel_gain / self.symbols
        return self.channel_gain / (self.duration_s * self.noise.n0_w_per_hz
                                    * self.bandwidth_hz)

    def rate_from_transmit_energy(self, energy_j: float) -> float:
        """Bits per symbol delivered by a frame spending energy_j on transmission.

        Zero when the energy is non-positive (nothing can be sent).
        """
        if energy_j <= 0.0:
            return 0.0
        return self.noise.prefactor * math.log2(1.0 + self.snr_per_joule * energy_j)


def rho_bandwidth_limit(f: FrameSpec) -> float:
    """Largest admissible time-splitting ratio, 1 - N_s/(W*tau).

    Sending all symbols in the remaining (1-rho)*tau seconds needs Nyquist
    bandwidth N_s/((1-rho)*tau) <= W.
    """
    return 1.0 - f.symbols / (f.bandwidth_hz * f.duration_s)


@dataclass(frozen=True)
class FrameDecision:
    """Decision variables of one frame.

    rho:     time-splitting ratio (charging-phase fraction).
    alpha_a: direct-path power fraction during the charging phase.
    alpha_b: direct-path power fraction during the transmitting phase.
    gamma:   fraction of symbols sent in the charging phase.
    d_b:     external battery discharge power during the transmitting phase.
    """

    rho: float = 0.0
    alpha_a: float = 1.0
    alpha_b: float = 1.0
    gamma: float = 0.0
    d_b: float = 0.0

    def discharged_energy_j(self, duration_s: float) -> float:
        """Energy delivered by the battery: e_b = d_b*(1-rho)*tau."""
        return self.d_b * (1.0 - self.rho) * duration_s


class Violation(NamedTuple):
    """A violated constraint with its signed slack (negative = violated by that much)."""

    code: str
    slack: float


@dataclass(frozen=True)
class EnergyLedger:
    """Per-frame energy accounting (all joules).

    loss_total is external-in minus internally-stored, plus internal drain
    minus delivered, plus circuit consumption.
    """

    stored_in_phase1_j: float
    internal_drain_j: float
    internal_store_phase2_j: float
    transmit_energy_j: float
    circuit_energy_j: float
    loss_total_j: float

    @property
    def net_battery_delta_j(self) -> float:
        return (self.stored_in_phase1_j + self.internal_store_phase2_j
                - self.internal_drain_j)


def energy_ledger(d: FrameDecision, f: FrameSpec, m: BatteryModel) -> EnergyLedger:
    """Account every energy flow implied by a decision on a frame."""
    tau = f.duration_s
    c = f.harvested_power_w
    p = f.circuit_power_w
    t1 = d.rho * tau
    t2 = (1.0 - d.rho) * tau

    charge_rate_1 = (1.0 - d.alpha_a) * c
    stored1 = m.internal_charge_power(charge_rate_1) * t1 if t1 > 0.0 else 0.0

    charge_rate_2 = (1.0 - d.alpha_b) * c
    stored2 = m.internal_charge_power(charge_rate_2) * t2 if t2 > 0.0 else 0.0

    drain = m.internal_discharge_power(d.d_b) * t2 if t2 > 0.0 else 0.0
    delivered = d.d_b * t2

    power_b = d.alpha_b * c - p + d.d_b
    transmit_b = max(power_b, 0.0) * t2
    transmits_b = power_b > 0.0

    power_a = d.alpha_a * c - p
    transmits_a = d.gamma > 0.0 and power_a > 0.0
    transmit_a = max(power_a, 0.0) * t1 if transmits_a else 0.0

    circuit = p * (t2 if transmits_b else 0.0) + p * (t1 if transmits_a else 0.0)

    external_in = charge_rate_1 * t1 + charge_rate_2 * t2
    loss = (external_in - stored1 - stored2) + (drain - delivered) + circuit
    return EnergyLedger(
        stored_in_phase1_j=stored1,
        internal_drain_j=drain,
        internal_store_phase2_j=stored2,
        transmit_energy_j=transmit_b + transmit_a,
        circuit_energy_j=circuit,
        loss_total_j=loss,
    )


def check_feasible(d: FrameDecision, f: FrameSpec, m: BatteryModel,
                   initial_energy_j: float,
                   enforce_bandwidth: bool = False) -> list[Violation]:
    """All constraint violations of a decision (empty list means feasible).

    Checks, in order: energy causality, battery capacity, rho bounds (plus
    the bandwidth cap when asked), power-split bounds with the maximum charge
    rate folded in, the discharge cap, and mutual exclusion of simultaneous
    charge and discharge.  Slacks are signed so optimisers can use them for
    restoration.
    """
    out: list[Violation] = []
    c = f.harvested_power_w
    tol = FEASIBILITY_TOL

    def check(code: str, slack: float, tolerance: float = tol) -> None:
        if slack < -tolerance:
            out.append(Violation(code, slack))

    # energy bookkeeping is priced at the decision clamped into the battery's
    # physical domain; range overshoots are reported as their own violations
    clamped = d
    d_cap = m.max_discharge_power_w
    if math.isfinite(d_cap) and d.d_b > d_cap:
        clamped = replace(clamped, d_b=d_cap)
    if c > 0.0 and math.isfinite(m.max_charge_power_w):
        floor = max(0.0, 1.0 - m.max_charge_power_w / c)
        if clamped.alpha_a < floor or clamped.alpha_b < floor:
            clamped = replace(clamped, alpha_a=max(clamped.alpha_a, floor),
                              alpha_b=max(clamped.alpha_b, floor))
    led = energy_ledger(clamped, f, m)
    stored = led.stored_in_phase1_j + led.internal_store_phase2_j
    check("causality", initial_energy_j + stored - led.internal_drain_j)
    check("capacity", m.capacity_j - (initial_energy_j + stored - led.internal_drain_j))

    check("rho_range", d.rho, 1e-12)
    check("rho_range", 1.0 - d.rho, 1e-12)
    if enforce_bandwidth:
        check("rho_bandwidth", rho_bandwidth_limit(f) - d.rho, 1e-12)

    alpha_floor = 0.0
    if c > 0.0 and math.isfinite(m.max_charge_power_w):
        alpha_floor = max(0.0, 1.0 - m.max_charge_power_w / c)
    check("alpha_a_range", d.alpha_a - alpha_floor, 1e-12)
    check("alpha_a_range", 1.0 - d.alpha_a, 1e-12)
    check("alpha_b_range", d.alpha_b - alpha_floor, 1e-12)
    check("alpha_b_range", 1.0 - d.alpha_b, 1e-12)

    check("discharge_range", d.d_b, 1e-12)
    if math.isfinite(m.max_discharge_power_w):
        check("discharge_range", m.max_discharge_power_w - d.d_b, 1e-12)

    check("simultaneous_charge_discharge", -abs((1.0 - d.alpha_b) * d.d_b), 1e-12)
    return out


class InfeasibleDecisionError(ValueError):
    """Raised when a rate is requested for an infeasible decision."""

    def __init__(self, violations: list[Violation]):
        self.violations = violations
        detail = ", ".join(f"{v.code} (slack {v.slack:.3e})" for v in violations)
        super().__init__(f"infeasible frame decision: {detail}")


def frame_rate(d: FrameDecision, f: FrameSpec, m: BatteryModel,
               initial_energy_j: float,
               enforce_bandwidth: bool = False) -> float:
    """Average bits per symbol of a feasible decision: gamma*R_a + (1-gamma)*R_b.

    Phase powers below the circuit floor contribute zero rate (the
    transmitter cannot run, so gamma is effectively zero for that phase).
    """
    violations = check_feasible(d, f, m, initial_energy_j, enforce_bandwidth)
    if violations:
        raise InfeasibleDecisionError(violations)
    tau = f.duration_s
    c = f.harvested_power_w
    p = f.circuit_power_w

    rate_a = 0.0
    if d.gamma > 0.0:
        energy_a = max(d.alpha_a * c - p, 0.0) * d.rho * tau
        if energy_a > 0.0:
            if f.noise.mode == UNIT_PSD:
                arg = energy_a / (d.gamma * f.symbols)
            else:
                arg = energy_a / tau
            rate_a = rate_bits_per_symbol(arg, f.channel_gain, f.noise, f.bandwidth_hz)

    rate_b = 0.0
    if d.gamma < 1.0:
        energy_b = (d.alpha_b * c - p + d.d_b) * (1.0 - d.rho) * tau
        if energy_b > 0.0:
            if f.noise.mode == UNIT_PSD:
                arg = energy_b / ((1.0 - d.gamma) * f.symbols)
            else:
                arg = energy_b / tau
            rate_b = rate_bits_per_symbol(arg, f.channel_gain, f.noise, f.bandwidth_hz)

    return d.gamma * rate_a + (1.0 - d.gamma) * rate_b
