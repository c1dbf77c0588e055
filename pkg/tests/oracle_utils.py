"""Independent brute-force oracles shared by the offline and acceptance tests.

These re-derive everything from the battery primitives with refining grids,
never touching the interior-point path they check.  Grids are parameterised
so that every point is feasible by construction (drain variables are
fractions of the energy actually available, and terminal frames drain in
closed form), which keeps refinement sound on these convex instances.
"""

import numpy as np

from ehtx.battery import BatteryModel
from ehtx.offline import OfflineProblem


def _alpha_floor(c: float, m: BatteryModel) -> float:
    if c > 0.0 and np.isfinite(m.max_charge_power_w):
        return max(0.0, 1.0 - m.max_charge_power_w / c)
    return 0.0


def _refine(lo, hi, arg, width_frac=1.5, floor=None, ceil=None):
    width = (hi - lo) * width_frac
    lo2 = arg - width
    hi2 = arg + width
    if floor is not None:
        lo2 = np.maximum(lo2, floor)
    if ceil is not None:
        hi2 = np.minimum(hi2, ceil)
    return lo2, hi2


def p2_grid_oracle(prob: OfflineProblem, points: int = 33, passes: int = 5) -> float:
    """Best mean rate of the zero-circuit two-frame program.

    Axes: (alpha_1, drain fraction of frame 1, alpha_2); the second frame
    drains everything left (optimal for the last frame when rates are
    monotone in energy).
    """
    assert prob.n_frames == 2
    m = prob.battery
    f1, f2 = prob.frames
    tau = f1.duration_s
    b0 = prob.initial_energy_j

    lo = np.array([_alpha_floor(f1.harvested_power_w, m), 0.0,
                   _alpha_floor(f2.harvested_power_w, m)])
    hi = np.array([1.0, 1.0, 1.0])
    floor, ceil = lo.copy(), hi.copy()
    best = -np.inf
    for _ in range(passes):
        axes = [np.linspace(lo[k], hi[k], points) for k in range(3)]
        A1, F1, A2 = np.meshgrid(*axes, indexing="ij")
        s1 = m.internal_charge_power((1.0 - A1) * f1.harvested_power_w) * tau
        avail1 = b0 + s1
        d1 = m.invert_internal_discharge(F1 * avail1 / tau)
        g1 = m.internal_discharge_power(d1) * tau
        s2 = m.internal_charge_power((1.0 - A2) * f2.harvested_power_w) * tau
        avail2 = np.maximum(avail1 - g1 + s2, 0.0)  # bisection noise floor
        d2 = m.invert_internal_discharge(avail2 / tau)
        e1 = (A1 * f1.harvested_power_w + d1) * tau
        e2 = (A2 * f2.harvested_power_w + d2) * tau
        r = 0.5 * (f1.noise.prefactor * np.log2(1 + f1.snr_per_joule * e1)
                   + f2.noise.prefactor * np.log2(1 + f2.snr_per_joule * e2))
        k = np.unravel_index(np.argmax(r), r.shape)
        if r[k] > best:
            best = float(r[k])
            arg = np.array([axes[0][k[0]], axes[1][k[1]], axes[2][k[2]]])
        lo, hi = _refine(lo, hi, arg, 1.5 / (points - 1), floor, ceil)
    return best


def p3_grid_oracle_all_charge(prob: OfflineProblem, points: int = 33,
                              passes: int = 5) -> float:
    """Best mean rate of the two-frame all-charge pattern (step discharge).

    Axes: (rho_1, fraction of frame-1 drain, rho_2 as a fraction of its
    capacity-respecting maximum); the second frame drains everything left.
    """
    assert prob.n_frames == 2
    m = prob.battery
    f1, f2 = prob.frames
    tau = f1.duration_s
    b0 = prob.initial_energy_j
    cap = m.capacity_j
    nd0 = m.discharge_efficiency_at_rest
    d_hi = m.max_discharge_power_w

    sig = [m.internal_charge_power(m.optimal_charge_power(f.harvested_power_w))
           for f in (f1, f2)]
    rho_w = 1.0 - f1.symbols / (f1.bandwidth_hz * tau)
    rho1_max = rho_w
    if sig[0] > 0 and np.isfinite(cap):
        rho1_max = min(rho_w, (cap - b0) / (sig[0] * tau))

    lo = np.zeros(3)
    hi = np.array([max(rho1_max, 0.0), 1.0, 1.0])
    floor, ceil = lo.copy(), hi.copy()
    best = -np.inf
    for _ in range(passes):
        axes = [np.linspace(lo[k], hi[k], points) for k in range(3)]
        R1, F1, G2 = np.meshgrid(*axes, indexing="ij")
        s1 = sig[0] * R1 * tau
        e1_max = np.minimum(nd0 * (b0 + s1), d_hi * (1 - R1) * tau)
        e1 = F1 * e1_max
        lvl1 = np.minimum(b0 + s1 - e1 / nd0, cap)
        rho2_cap = rho_w * np.ones_like(lvl1)
        if sig[1] > 0 and np.isfinite(cap):
            rho2_cap = np.minimum(rho2_cap, (cap - lvl1) / (sig[1] * tau))
        R2 = G2 * rho2_cap
        s2 = sig[1] * R2 * tau
        e2 = np.minimum(nd0 * (lvl1 + s2), d_hi * (1 - R2) * tau)
        t1 = (f1.harvested_power_w - f1.circuit_power_w) * (1 - R1) * tau + e1
        t2 = (f2.harvested_power_w - f2.circuit_power_w) * (1 - R2) * tau + e2
        r = 0.5 * (f1.noise.prefactor * np.log2(np.maximum(1 + f1.snr_per_joule * t1, 1e-300))
                   + f2.noise.prefactor * np.log2(np.maximum(1 + f2.snr_per_joule * t2, 1e-300)))
        k = np.unravel_index(np.argmax(r), r.shape)
        if r[k] > best:
            best = float(r[k])
            arg = np.array([axes[0][k[0]], axes[1][k[1]], axes[2][k[2]]])
        lo, hi = _refine(lo, hi, arg, 1.5 / (points - 1), floor, ceil)
    return best


def dp_enumeration_value(c_dist, h_dist, template, m: BatteryModel,
                         grid_step_j: float, horizon: int,
                         initial_energy_j: float) -> float:
    """Expected value of the best gridded policy by explicit enumeration.

    Plain nested loops over stages, states and grid targets, with transition
    energies rebuilt one pair at a time through the scalar action
    reconstruction.  No value tables, no vectorised backups.
    """
    import functools
    import math
    from dataclasses import replace as _replace

    from ehtx.online import _geometry, _tsr_energy, _tsr_window
    from ehtx.solvers import scan_then_golden_max

    n_pts = int(round(m.capacity_j / grid_step_j)) + 1
    grid = np.linspace(0.0, m.capacity_j, n_pts)
    kappa = _replace(template, channel_gain=1.0).snr_per_joule
    pref = template.noise.prefactor

    geos = {ci: _geometry(c, template, m) for ci, c in enumerate(c_dist.values)}

    def transition_energy(ci: int, b: float, x: float):
        geo = geos[ci]
        tau = geo.duration_s
        candidates = []
        drain_rate = (b - x) / tau
        if 0.0 <= drain_rate <= geo.drain_rate_cap * (1 + 1e-12):
            d_b = float(m.invert_internal_discharge(max(drain_rate, 0.0)))
            candidates.append((geo.harvested_power_w - geo.circuit_power_w + d_b) * tau)
        charge_rate = (x - b) / tau
        if 0.0 < charge_rate <= geo.sigma_w * (1 + 1e-12):
            u = float(m.invert_internal_charge(min(charge_rate, geo.sigma_w)))
            candidates.append((geo.harvested_power_w - u - geo.circuit_power_w) * tau)
        lo, hi = _tsr_window(geo, np.asarray(b), np.asarray(x))
        lo, hi = float(lo), float(min(hi, 1.0 - 1e-9))
        if lo <= hi * (1 + 1e-12):
            def e_at(r):
                return float(_tsr_energy(geo, m, b, x, r))

            _, e = scan_then_golden_max(e_at, lo, max(hi, lo), n_grid=64)
            candidates.append(e)
        if not candidates:
            return None
        best = max(candidates)
        if x < b and best <= 0.0:
            return None  # draining without transmitting is never admissible
        return best

    @functools.lru_cache(maxsize=None)
    def stage_value(n: int, b: float) -> float:
        total = 0.0
        for ci, pc in enumerate(c_dist.probs):
            for hi_i, ph in enumerate(h_dist.probs):
                h = h_dist.values[hi_i]
                best = -np.inf
                for x in grid:
                    e = transition_energy(ci, b, float(x))
                    if e is None:
                        continue
                    r = pref * math.log2(1.0 + h * kappa * max(e, 0.0))
                    cont = stage_value(n + 1, float(x)) if n + 1 < horizon else 0.0
                    best = max(best, r + cont)
                total += pc * ph * best
        return total

    start = float(grid[np.searchsorted(grid, initial_energy_j + 1e-15,
                                       side="right") - 1])
    return stage_value(0, start)


def classify_frame(decision, tol: float = 1e-9) -> str:
    """charge / discharge / neutral, from a frame decision at rho = 0."""
    if decision.d_b > tol:
        return "discharge"
    if decision.alpha_b < 1.0 - tol:
        return "charge"
    return "neutral"


def monotone_power_violations(prob: OfflineProblem, sol, power_tol: float = 1e-9,
                              level_tol: float = 1e-9) -> list[str]:
    """Within maximal runs of interior battery level and a shared
    charge/discharge mode, transmit power must strictly follow the harvest."""
    out = []
    cap = prob.battery.capacity_j
    n = prob.n_frames
    interior = [level_tol < r < cap - level_tol for r in sol.residuals]
    modes = [classify_frame(d) for d in sol.decisions]
    powers = [e / prob.frames[0].duration_s for e in sol.transmit_energies_j]
    harvests = [f.harvested_power_w for f in prob.frames]
    for j in range(n):
        for k in range(j + 1, n):
            # the level must stay interior strictly between j and k
            if not all(interior[i] for i in range(j, k)):
                continue
            if modes[j] != modes[k] or modes[j] == "neutral":
                continue
            cj, ck = harvests[j], harvests[k]
            pj, pk = powers[j], powers[k]
            if cj < ck - 1e-12 and not pj < pk + power_tol:
                out.append(f"frames {j},{k}: c {cj:.4g}<{ck:.4g} but P {pj:.6g}>={pk:.6g}")
            if ck < cj - 1e-12 and not pk < pj + power_tol:
                out.append(f"frames {j},{k}: c {ck:.4g}<{cj:.4g} but P {pk:.6g}>={pj:.6g}")
    return out


def assert_solution_invariants(prob: OfflineProblem, sol, slack: float = 1e-9):
    """Prefix causality, capacity, gamma = 0 and the split dichotomy."""
    from ehtx.frame import energy_ledger

    level = prob.initial_energy_j
    for i, (f, d) in enumerate(zip(prob.frames, sol.decisions)):
        led = energy_ledger(d, f, prob.battery)
        stored = led.stored_in_phase1_j + led.internal_store_phase2_j
        level = level + stored - led.internal_drain_j
        assert level >= -slack, f"frame {i}: causality violated ({level:.3e})"
        assert level <= prob.battery.capacity_j + slack, f"frame {i}: capacity violated"
        assert d.gamma == 0.0
        if d.rho > 1e-9:
            assert d.alpha_b == 1.0, f"frame {i}: rho>0 with alpha_b<1"
        assert abs((1.0 - d.alpha_b) * d.d_b) < 1e-9
