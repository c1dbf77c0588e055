"""Closed-form single-frame optimiser and its exhaustive-grid oracle.

The optimal one-frame policy never transmits during the charging phase
(gamma* = 0), charges at the rate maximising the internal charge power
(alpha_a*), routes all harvested power to the transmitter in the second
phase (alpha_b* = 1), and drains the battery completely through d_b.  The
only scalar left is the time split rho, chosen to maximise the transmit
energy

    E(rho) = (c - p + d_hat(rho)) * (1 - rho) * tau

where d_hat(rho) is the discharge power that empties the stored energy
(initial plus phase-1 harvest) over the transmitting phase, capped at the
maximum discharge rate.  The search interval is clipped by the capacity
bound rho_B = (B - B0)/(internal charge rate * tau) and, when requested, the
bandwidth cap rho_W.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .battery import BatteryModel
from .frame import FrameDecision, FrameSpec, frame_rate, rho_bandwidth_limit
from .solvers import scan_then_golden_max

RATE_OPTIMAL = "rate_optimal"
CAPACITY_LIMITED = "capacity_limited"
BANDWIDTH_LIMITED = "bandwidth_limited"

_RHO_EPS = 1e-12  # keep (1 - rho) bounded away from zero in evaluations


@dataclass(frozen=True)
class SingleFrameSolution:
    decision: FrameDecision
    rate_bits_per_symbol: float
    transmit_energy_j: float
    rho_r: float              # unconstrained transmit-energy argmax
    rho_b: float              # capacity bound on rho (inf when none binds)
    limiting: str
    no_transmission: bool = False


def _transmit_energy(f: FrameSpec, m: BatteryModel, sigma_w: float,
                     initial_energy_j: float, headroom_j: float, rho):
    """E(rho) for the full-drain policy (vectorised over rho).

    Phase-1 storage saturates at the capacity headroom: once the battery is
    full, a longer charging phase only concentrates the transmission burst.
    """
    rho = np.minimum(np.asarray(rho, dtype=float), 1.0 - _RHO_EPS)
    tau = f.duration_s
    stored = np.minimum(sigma_w * rho * tau, headroom_j)
    target = (stored + initial_energy_j) / ((1.0 - rho) * tau)
    d_b = m.invert_internal_discharge(target)
    e = (f.harvested_power_w - f.circuit_power_w + d_b) * (1.0 - rho) * tau
    return e, d_b


def solve_single_frame(f: FrameSpec, m: BatteryModel, initial_energy_j: float,
                       enforce_bandwidth: bool = True,
                       n_grid: int = 256) -> SingleFrameSolution:
    """Rate-optimal single-frame decision.

    The rho search runs a coarse scan plus golden-section polish over the
    whole admissible interval.  Up to rho_B the battery charges at the
    internal-power argmax; past it the charge rate is reduced so phase 1
    exactly fills the remaining capacity (longer charging then only buys a
    shorter, harder transmission burst, which pays when the circuit power
    dominates the harvest).
    """
    if not 0.0 <= initial_energy_j <= m.capacity_j * (1.0 + 1e-12):
        raise ValueError("initial energy outside [0, capacity]")
    c = f.harvested_power_w
    tau = f.duration_s

    cp_star = m.optimal_charge_power(c)
    sigma = m.internal_charge_power(cp_star)
    headroom = max(m.capacity_j - initial_energy_j, 0.0)

    rho_w = rho_bandwidth_limit(f)
    rho_b = math.inf
    if sigma > 0.0:
        rho_b = headroom / (sigma * tau)
    upper = min(1.0 - _RHO_EPS, rho_w if enforce_bandwidth else 1.0 - _RHO_EPS)
    upper = max(upper, 0.0)

    def energy_at(rho: float) -> float:
        e, _ = _transmit_energy(f, m, sigma, initial_energy_j, headroom, rho)
        return float(e)

    def energy_vec(rho: np.ndarray) -> np.ndarray:
        e, _ = _transmit_energy(f, m, sigma, initial_energy_j, headroom, rho)
        return e

    rho_star, best_e = scan_then_golden_max(energy_at, 0.0, upper,
                                            n_grid=n_grid, vectorized=energy_vec)
    # unconstrained argmax; only differs when the constrained search hit its cap
    if rho_star >= upper - 1e-9 and upper < 1.0 - 2.0 * _RHO_EPS:
        rho_r, _ = scan_then_golden_max(energy_at, 0.0, 1.0 - _RHO_EPS,
                                        n_grid=n_grid, vectorized=energy_vec)
    else:
        rho_r = rho_star

    if best_e <= 0.0:
        decision = FrameDecision(rho=0.0, alpha_a=1.0, alpha_b=1.0, gamma=0.0, d_b=0.0)
        return SingleFrameSolution(decision, 0.0, 0.0, rho_r, rho_b,
                                   RATE_OPTIMAL, no_transmission=True)

    # snap to an exact boundary when the polish landed within tolerance of it
    if rho_star < 1e-10:
        rho_star = 0.0
    _, d_star = _transmit_energy(f, m, sigma, initial_energy_j, headroom, rho_star)
    d_star = float(d_star)
    saturated = sigma > 0.0 and rho_star > rho_b + 1e-12
    if rho_star <= 0.0:
        alpha_a = 1.0
    elif saturated:
        # reduce the charge rate so phase 1 exactly fills the headroom
        needed = headroom / (rho_star * tau)
        u = float(m.invert_internal_charge(min(needed, sigma)))
        alpha_a = 1.0 - u / c if c > 0.0 else 0.0
    else:
        alpha_a = 1.0 - cp_star / c if c > 0.0 else 0.0
    decision = FrameDecision(rho=rho_star, alpha_a=alpha_a, alpha_b=1.0,
                             gamma=0.0, d_b=d_star)
    rate = frame_rate(decision, f, m, initial_energy_j,
                      enforce_bandwidth=enforce_bandwidth)

    limiting = RATE_OPTIMAL
    if saturated:
        limiting = CAPACITY_LIMITED
    elif rho_star >= upper - 1e-9 and enforce_bandwidth and upper < rho_r - 1e-9:
        limiting = BANDWIDTH_LIMITED
    energy = float(_transmit_energy(f, m, sigma, initial_energy_j, headroom,
                                    rho_star)[0])
    return SingleFrameSolution(decision, rate, energy, rho_r, rho_b, limiting)


def brute_force_single_frame(f: FrameSpec, m: BatteryModel,
                             initial_energy_j: float,
                             rho_step: float = 1e-3,
                             alpha_points: int = 101,
                             enforce_bandwidth: bool = True) -> SingleFrameSolution:
    """Exhaustive grid search used as the validation oracle.

    Sweeps rho and alpha_a on dense grids, pinning d_b either to the full
    battery drain (optimal by exchange arguments) or to zero, with alpha_b
    fixed at one.  Entirely vectorised, so dense grids stay fast.
    """
    c = f.harvested_power_w
    tau = f.duration_s
    upper = 1.0 - _RHO_EPS
    if enforce_bandwidth:
        upper = min(upper, rho_bandwidth_limit(f))
    rhos = np.arange(0.0, upper + rho_step, rho_step)
    rhos = rhos[rhos <= upper]
    if rhos.size == 0:
        rhos = np.array([0.0])

    alpha_floor = 0.0
    if c > 0.0 and math.isfinite(m.max_charge_power_w):
        alpha_floor = max(0.0, 1.0 - m.max_charge_power_w / c)
    alphas = np.linspace(alpha_floor, 1.0, alpha_points)

    charge_rates = (1.0 - alphas) * c
    sigmas = np.asarray(m.internal_charge_power(charge_rates))  # (A,)

    R, S = np.meshgrid(rhos, sigmas, indexing="ij")  # (n_rho, n_alpha)
    stored1 = S * R * tau
    capacity_ok = initial_energy_j + stored1 <= m.capacity_j * (1.0 + 1e-12)

    target = (stored1 + initial_energy_j) / ((1.0 - R) * tau)
    d_full = m.invert_internal_discharge(target)
    e_full = (c - f.circuit_power_w + d_full) * (1.0 - R) * tau
    e_zero = (c - f.circuit_power_w) * (1.0 - R) * tau  # d_b = 0 branch

    e_full = np.where(capacity_ok, e_full, -np.inf)
    e_zero = np.where(capacity_ok, e_zero, -np.inf)

    best_full = np.unravel_index(np.argmax(e_full), e_full.shape)
    best_zero = np.unravel_index(np.argmax(e_zero), e_zero.shape)

    if e_full[best_full] >= e_zero[best_zero]:
        i, j = best_full
        d_b = float(d_full[i, j])
        energy = float(e_full[i, j])
    else:
        i, j = best_zero
        d_b = 0.0
        energy = float(e_zero[i, j])

    rho = float(rhos[i])
    if energy <= 0.0:
        decision = FrameDecision(rho=0.0, alpha_a=1.0, alpha_b=1.0, gamma=0.0, d_b=0.0)
        return SingleFrameSolution(decision, 0.0, 0.0, 0.0, math.inf,
                                   RATE_OPTIMAL, no_transmission=True)
    alpha_a = float(alphas[j]) if rho > 0.0 else 1.0
    decision = FrameDecision(rho=rho, alpha_a=alpha_a, alpha_b=1.0,
                             gamma=0.0, d_b=d_b)
    rate = f.rate_from_transmit_energy(energy)
    sigma_best = float(sigmas[j])
    rho_b = math.inf
    if sigma_best > 0.0:
        rho_b = (m.capacity_j - initial_energy_j) / (sigma_best * tau)
    return SingleFrameSolution(decision, rate, energy, rho, rho_b, RATE_OPTIMAL)
