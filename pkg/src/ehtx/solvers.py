"""Scalar search and a log-barrier interior-point engine for the frame programs.

The multi-frame programs solved here share one shape: an objective
-sum w_i * ln(1 + a_i * E_i(x)) with each frame's transmit energy E_i affine
in the decision vector, prefix-sum battery constraints whose per-variable
terms are separable scalar maps (internal charge/discharge flows), plus box
and sparse linear constraints.  ``barrier_minimize`` exploits exactly that
structure: constraint Jacobians come from cumulative sums of per-variable
derivative stamps, so each Newton step is a dense solve in at most a few
hundred variables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def golden_max(fn: Callable[[float], float], lo: float, hi: float,
               tol: float = 1e-10, max_iter: int = 200) -> tuple[float, float]:
    """Golden-section maximisation of a unimodal function on [lo, hi]."""
    a, b = lo, hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = fn(x1), fn(x2)
    it = 0
    while (b - a) > tol and it < max_iter:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = fn(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = fn(x1)
        it += 1
    x = 0.5 * (a + b)
    return x, fn(x)


def scan_then_golden_max(fn: Callable[[float], float], lo: float, hi: float,
                         n_grid: int = 256, tol: float = 1e-10,
                         vectorized: Callable[[np.ndarray], np.ndarray] | None = None,
                         ) -> tuple[float, float]:
    """Coarse grid scan followed by a golden-section polish around the best cell.

    Robust when unimodality is not guaranteed: the returned point is never
    worse than the best grid sample.
    """
    if hi <= lo:
        return lo, fn(lo)
    xs = np.linspace(lo, hi, n_grid)
    vals = vectorized(xs) if vectorized is not None else np.array([fn(x) for x in xs])
    k = int(np.argmax(vals))
    a = xs[max(k - 1, 0)]
    b = xs[min(k + 1, n_grid - 1)]
    x_g, f_g = golden_max(fn, a, b, tol=tol)
    if f_g >= vals[k]:
        return x_g, f_g
    return float(xs[k]), float(vals[k])


class SolverError(RuntimeError):
    """Interior-point failure; carries the residuals at the point of failure."""


# ---------------------------------------------------------------------------
# Problem description fed to the barrier engine.

# Per-variable battery-flow term kinds.  Each variable contributes a scalar
# function T_j(x_j) (J, positive = drains the battery) to every prefix row of
# its frame and the frames after it.
FLOW_LINEAR = 0       # T = slope*x + const
FLOW_DISCHARGE = 1    # T = scale * internal_discharge(x)
FLOW_CHARGE_SPLIT = 2  # T = -scale * internal_charge((1-x)*crate)


@dataclass
class FlowTerm:
    kind: int
    slope: float = 0.0    # FLOW_LINEAR
    const: float = 0.0
    scale: float = 1.0    # duration multiplier for the nonlinear kinds
    crate: float = 0.0    # harvested power feeding FLOW_CHARGE_SPLIT


@dataclass
class BarrierProblem:
    """minimize -sum w_i*ln(1 + coef_i*(A x + e0)_i) s.t. flows, boxes, linear rows.

    Prefix constraints, for every frame i:
        sum_{frames k <= i} T(k-vars) - b0 <= 0          (causality)
        b0 - capacity + ... >= is encoded as its negation  (capacity, optional)
    """

    n: int
    frame_of_var: np.ndarray          # (n,) frame index of each variable
    n_frames: int
    energy_matrix: np.ndarray         # (n_frames, n) affine map to transmit energies
    energy_offset: np.ndarray         # (n_frames,)
    snr_coef: np.ndarray              # (n_frames,) SNR per joule (gain folded in)
    weights: np.ndarray               # (n_frames,) objective weights
    flow_terms: list[FlowTerm]        # one per variable
    initial_energy_j: float
    capacity_j: float                 # inf disables capacity rows
    box_lower: np.ndarray             # (n,) -inf allowed
    box_upper: np.ndarray             # (n,) +inf allowed
    lin_G: np.ndarray | None = None   # (m_lin, n): G x - h <= 0
    lin_h: np.ndarray | None = None
    battery: object = None            # BatteryModel supplying the flow curves
    # peak rows keep the mid-frame battery level under the capacity:
    # level before frame i plus coeff*x[var] <= capacity
    peak_rows: list[tuple[int, int, float]] | None = None  # (frame, var, coeff)

    def flow_values(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-variable (T, T', T'') evaluated at x, grouped by term kind."""
        v = np.zeros(self.n)
        d1 = np.zeros(self.n)
        d2 = np.zeros(self.n)
        kinds = np.array([t.kind for t in self.flow_terms])
        lin = kinds == FLOW_LINEAR
        if np.any(lin):
            slope = np.array([t.slope for t in self.flow_terms])[lin]
            const = np.array([t.const for t in self.flow_terms])[lin]
            v[lin] = slope * x[lin] + const
            d1[lin] = slope
        dis = kinds == FLOW_DISCHARGE
        if np.any(dis):
            scale = np.array([t.scale for t in self.flow_terms])[dis]
            val, g1, g2 = self.battery.discharge_flow_terms(x[dis])
            v[dis] = scale * val
            d1[dis] = scale * g1
            d2[dis] = scale * g2
        chg = kinds == FLOW_CHARGE_SPLIT
        if np.any(chg):
            scale = np.array([t.scale for t in self.flow_terms])[chg]
            crate = np.array([t.crate for t in self.flow_terms])[chg]
            u = (1.0 - x[chg]) * crate
            val, g1, g2 = self.battery.charge_flow_terms(u)
            v[chg] = -scale * val
            d1[chg] = scale * g1 * crate
            d2[chg] = -scale * g2 * crate**2
        return v, d1, d2


@dataclass
class BarrierStats:
    newton_iterations: int = 0
    outer_iterations: int = 0
    gap: float = math.inf
    kkt_residual: float = math.inf
    local_only: bool = False
    messages: list[str] = field(default_factory=list)


def _prefix_rows(prob: BarrierProblem, x: np.ndarray):
    """Values of causality (and capacity) prefix rows plus per-var flow data."""
    v, d1, d2 = prob.flow_values(x)
    per_frame = np.bincount(prob.frame_of_var, weights=v, minlength=prob.n_frames)
    cum = np.cumsum(per_frame)
    caus = cum - prob.initial_energy_j                      # <= 0
    cap = None
    if math.isfinite(prob.capacity_j):
        cap = prob.initial_energy_j - prob.capacity_j - cum  # <= 0
    peak = None
    if prob.peak_rows:
        head = prob.initial_energy_j - prob.capacity_j
        peak = np.array([head - (cum[i - 1] if i > 0 else 0.0) + coeff * x[var]
                         for i, var, coeff in prob.peak_rows])
    return caus, cap, peak, v, d1, d2


def _energies(prob: BarrierProblem, x: np.ndarray) -> np.ndarray:
    return prob.energy_matrix @ x + prob.energy_offset


def _objective_terms(prob: BarrierProblem, x: np.ndarray):
    """Per-frame (psi, psi', psi'') of the rate surrogate at the energies E(x).

    psi(E) = ln(1 + coef*E) for E >= 0, extended below zero by the C2
    quadratic coef*E - (coef*E)**2/2 so starved frames keep the objective
    smooth and concave instead of leaving the log domain.
    """
    E = _energies(prob, x)
    coef = prob.snr_coef
    pos = E >= 0.0
    z = 1.0 + coef * np.maximum(E, 0.0)
    val = np.where(pos, np.log(z), coef * E - 0.5 * (coef * E) ** 2)
    d1 = np.where(pos, coef / z, coef * (1.0 - coef * E))
    d2 = np.where(pos, -(coef / z) ** 2, -coef**2)
    return val, d1, d2


def _feasible(prob: BarrierProblem, x: np.ndarray, margin: float = 0.0) -> bool:
    if np.any(x <= prob.box_lower + margin) or np.any(x >= prob.box_upper - margin):
        return False
    caus, cap, peak, *_ = _prefix_rows(prob, x)
    if np.any(caus >= -margin):
        return False
    if cap is not None and np.any(cap >= -margin):
        return False
    if peak is not None and np.any(peak >= -margin):
        return False
    if prob.lin_G is not None and np.any(prob.lin_G @ x - prob.lin_h >= -margin):
        return False
    return True


def _barrier_value(prob: BarrierProblem, x: np.ndarray, t: float) -> float:
    val_terms, _, _ = _objective_terms(prob, x)
    val = -t * float(prob.weights @ val_terms)
    caus, cap, peak, *_ = _prefix_rows(prob, x)
    if np.any(caus >= 0.0) or (cap is not None and np.any(cap >= 0.0)):
        return math.inf
    if peak is not None and np.any(peak >= 0.0):
        return math.inf
    val -= float(np.sum(np.log(-caus)))
    if cap is not None:
        val -= float(np.sum(np.log(-cap)))
    if peak is not None:
        val -= float(np.sum(np.log(-peak)))
    lo = x - prob.box_lower
    hi = prob.box_upper - x
    fin_lo = np.isfinite(prob.box_lower)
    fin_hi = np.isfinite(prob.box_upper)
    if np.any(lo[fin_lo] <= 0.0) or np.any(hi[fin_hi] <= 0.0):
        return math.inf
    val -= float(np.sum(np.log(lo[fin_lo]))) + float(np.sum(np.log(hi[fin_hi])))
    if prob.lin_G is not None:
        s = prob.lin_h - prob.lin_G @ x
        if np.any(s <= 0.0):
            return math.inf
        val -= float(np.sum(np.log(s)))
    return val


def _barrier_grad_hess(prob: BarrierProblem, x: np.ndarray, t: float):
    n = prob.n
    g = np.zeros(n)
    H = np.zeros((n, n))

    # objective: f0 = -sum w*psi(E), gradient/Hessian through the affine map
    _, d1_obj, d2_obj = _objective_terms(prob, x)
    w = prob.weights
    g += prob.energy_matrix.T @ (-t * w * d1_obj)
    Aw = prob.energy_matrix * (-t * w * d2_obj)[:, None]
    H += prob.energy_matrix.T @ Aw

    # prefix rows
    caus, cap, peak, v, d1, d2 = _prefix_rows(prob, x)
    inv_caus = 1.0 / (-caus)                       # positive
    # gradient: var j appears in rows i >= frame(j) with derivative d1_j
    suffix_caus = np.cumsum(inv_caus[::-1])[::-1]  # sum_{i >= k} 1/(-f_i)
    g += d1 * suffix_caus[prob.frame_of_var]
    # Hessian: rank-one parts J^T diag(1/f^2) J with J = cumsum stamps
    D = np.zeros((prob.n_frames, n))
    D[prob.frame_of_var, np.arange(n)] = d1
    J = np.cumsum(D, axis=0)
    Js = J * inv_caus[:, None]
    H += Js.T @ Js
    # curvature of the flow terms
    H[np.arange(n), np.arange(n)] += d2 * suffix_caus[prob.frame_of_var]

    if cap is not None:
        inv_cap = 1.0 / (-cap)
        suffix_cap = np.cumsum(inv_cap[::-1])[::-1]
        g += -d1 * suffix_cap[prob.frame_of_var]
        Js = -J * inv_cap[:, None]
        H += Js.T @ Js
        H[np.arange(n), np.arange(n)] += -d2 * suffix_cap[prob.frame_of_var]

    if peak is not None:
        inv_peak = 1.0 / (-peak)
        frames = prob.frame_of_var
        diag = np.arange(n)
        for (i, var, coeff), inv in zip(prob.peak_rows, inv_peak):
            row = np.zeros(n)
            if i > 0:
                row = -J[i - 1].copy()
            row[var] += coeff
            g += row * inv
            H += np.outer(row * inv, row * inv)
            if i > 0:
                before = frames <= i - 1
                H[diag[before], diag[before]] += -d2[before] * inv

    # boxes
    lo = x - prob.box_lower
    hi = prob.box_upper - x
    fin_lo = np.isfinite(prob.box_lower)
    fin_hi = np.isfinite(prob.box_upper)
    g[fin_lo] += -1.0 / lo[fin_lo]
    g[fin_hi] += 1.0 / hi[fin_hi]
    H[np.where(fin_lo)[0], np.where(fin_lo)[0]] += 1.0 / lo[fin_lo]**2
    H[np.where(fin_hi)[0], np.where(fin_hi)[0]] += 1.0 / hi[fin_hi]**2

    # sparse linear rows
    if prob.lin_G is not None:
        s = prob.lin_h - prob.lin_G @ x
        Gs = prob.lin_G / s[:, None]
        g += Gs.sum(axis=0)
        H += Gs.T @ Gs
    return g, H


def _kkt_residual(decrement: float, t: float) -> float:
    """Certified stationarity residual: the Newton decrement of the final
    centering in the Hessian norm, scaled back by the barrier parameter.
    Bounds the optimality-gap excess beyond the m/t proxy."""
    return math.sqrt(max(2.0 * decrement, 0.0)) / max(t, 1.0)


def barrier_minimize(prob: BarrierProblem, x0: np.ndarray, *,
                     t0: float = 1.0, mu: float = 10.0, gap_tol: float = 1e-8,
                     newton_tol: float = 1e-10, max_newton: int = 80,
                     ) -> tuple[np.ndarray, BarrierStats]:
    """Feasible-start log-barrier method.

    Barrier parameter grows by ``mu`` per centering stage until the duality
    gap proxy m/t drops below ``gap_tol``.  Raises SolverError when a Newton
    stage fails to make progress.
    """
    x = np.asarray(x0, dtype=float).copy()
    stats = BarrierStats()
    if not _feasible(prob, x):
        raise SolverError("barrier start point is not strictly feasible")

    m = 2 * prob.n_frames if math.isfinite(prob.capacity_j) else prob.n_frames
    m += int(np.sum(np.isfinite(prob.box_lower))) + int(np.sum(np.isfinite(prob.box_upper)))
    if prob.lin_G is not None:
        m += prob.lin_G.shape[0]
    if prob.peak_rows:
        m += len(prob.peak_rows)
    stats.local_only = math.isfinite(prob.capacity_j)

    t = t0
    eye = np.eye(prob.n)
    while True:
        stage_tol = newton_tol * max(1.0, math.sqrt(t))
        decrement = math.inf
        for _ in range(max_newton):
            g, H = _barrier_grad_hess(prob, x, t)
            ridge = 0.0
            Hr = H
            while True:
                try:
                    np.linalg.cholesky(Hr)
                    step = -np.linalg.solve(Hr, g)
                    break
                except np.linalg.LinAlgError:
                    ridge = max(ridge * 10.0, 1e-10 * (1.0 + abs(np.trace(H)) / prob.n))
                    if ridge > 1e14:
                        raise SolverError(
                            f"Hessian factorisation failed (|g|={np.max(np.abs(g)):.2e})")
                    Hr = H + ridge * eye
            decrement = -float(g @ step)
            if decrement / 2.0 <= stage_tol:
                break
            # backtracking line search staying strictly feasible
            base = _barrier_value(prob, x, t)
            s = 1.0
            ok = False
            for _ in range(60):
                xn = x + s * step
                if _feasible(prob, xn):
                    val = _barrier_value(prob, xn, t)
                    if val <= base + 0.25 * s * float(g @ step):
                        x = xn
                        ok = True
                        break
                s *= 0.5
            stats.newton_iterations += 1
            if not ok:
                break  # no further progress possible at this scale
        if decrement / 2.0 > max(stage_tol, 1e-4 * max(1.0, t)):
            raise SolverError(
                f"Newton stalled at t={t:.1e}, decrement={decrement:.2e}")
        stats.outer_iterations += 1
        stats.gap = m / t
        if stats.gap <= gap_tol:
            break
        t *= mu
    stats.kkt_residual = _kkt_residual(decrement, t)
    return x, stats
