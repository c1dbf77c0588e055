"""Battery charge/discharge physics for a constant-voltage cell behind a series resistance.

The battery is an ideal energy store of capacity B joules behind a series
resistance of r ohms.  Losses across the resistance make both transactions
rate-dependent:

    charge efficiency     eta_c(c_p) = 1.5 - 0.5*sqrt(1 + 4*r*c_p/V**2)
    discharge efficiency  eta_d(d_p) = 0.5 + 0.5*sqrt(1 - 4*r*d_p/V**2)

valid on 0 <= c_p <= C_p = 2*V**2/r and 0 <= d_p <= D_p = V**2/(4*r); beyond
those rates the cell physically cannot be charged or discharged.  Energy
enters the store at eta_c(c_p)*c_p W ("internal charge power", concave in
c_p) and leaves it at d_p/eta_d(d_p) W ("internal discharge power", convex
increasing in d_p).

Three variants share one interface:

* ``internal_resistance`` -- both curves above.
* ``step_discharge``      -- same charge curve, but discharge efficiency is
  pinned at its zero-rate value (1.0) for all rates up to D_p.  An upper
  bound used by the multi-frame solvers to decouple the discharge rate from
  the time split.
* ``fixed_efficiency``    -- rate-independent eta_c/eta_d with no rate caps.
  Comparison model only (ideal or constant-round-trip batteries).

All operations are pure and accept scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

INTERNAL_RESISTANCE = "internal_resistance"
STEP_DISCHARGE = "step_discharge"
FIXED_EFFICIENCY = "fixed_efficiency"

_VARIANTS = (INTERNAL_RESISTANCE, STEP_DISCHARGE, FIXED_EFFICIENCY)

# Relative slack accepted on domain checks before raising, so that values a
# few ulp past a cap (from upstream arithmetic) are clamped instead.
_DOMAIN_RTOL = 1e-9

# Stationary point of eta_c(c_p)*c_p in s = sqrt(1 + 4*r*c_p/V**2):
# s**2 - 2*s - 1/3 = 0  =>  s = 1 + sqrt(4/3).
_S_STAR = 1.0 + math.sqrt(4.0 / 3.0)

_INVERT_ITERS = 64  # bisection steps; interval width / 2**64 << 1e-12 W


@dataclass(frozen=True)
class BatteryModel:
    """Battery parameters plus the loss-model variant.

    capacity_j:        usable store size B (J), >= 0 (may be inf).
    resistance_ohm:    series resistance r (ohm), >= 0.
    nominal_voltage_v: cell voltage V (V), > 0.
    variant:           one of the module-level variant constants.
    eta_c / eta_d:     constant efficiencies, fixed_efficiency variant only.
    """

    capacity_j: float
    resistance_ohm: float = 5.0
    nominal_voltage_v: float = 1.5
    variant: str = INTERNAL_RESISTANCE
    eta_c: float = 1.0
    eta_d: float = 1.0

    def __post_init__(self) -> None:
        if self.variant not in _VARIANTS:
            raise ValueError(f"unknown battery variant {self.variant!r}")
        if not self.capacity_j >= 0.0:
            raise ValueError("capacity_j must be >= 0")
        if not self.resistance_ohm >= 0.0:
            raise ValueError("resistance_ohm must be >= 0")
        if not self.nominal_voltage_v > 0.0:
            raise ValueError("nominal_voltage_v must be > 0")
        if self.variant == FIXED_EFFICIENCY:
            if not (0.0 < self.eta_c <= 1.0 and 0.0 < self.eta_d <= 1.0):
                raise ValueError("fixed efficiencies must lie in (0, 1]")

    @classmethod
    def fixed_round_trip(cls, capacity_j: float, round_trip: float,
                         nominal_voltage_v: float = 1.5) -> "BatteryModel":
        """Constant-efficiency model with eta_c*eta_d = round_trip.

        The product is split evenly (eta_c = eta_d = sqrt(round_trip));
        construct directly for an uneven split.
        """
        eta = math.sqrt(round_trip)
        return cls(capacity_j=capacity_j, resistance_ohm=0.0,
                   nominal_voltage_v=nominal_voltage_v,
                   variant=FIXED_EFFICIENCY, eta_c=eta, eta_d=eta)

    def with_variant(self, variant: str) -> "BatteryModel":
        return BatteryModel(self.capacity_j, self.resistance_ohm,
                            self.nominal_voltage_v, variant,
                            self.eta_c, self.eta_d)

    # ------------------------------------------------------------------
    # Rate limits

    @property
    def _loss_coeff(self) -> float:
        """4*r/V**2, the coefficient inside both square roots (1/W)."""
        return 4.0 * self.resistance_ohm / self.nominal_voltage_v**2

    @property
    def max_charge_power_w(self) -> float:
        """C_p = 2*V**2/r (inf for r=0 or the fixed-efficiency variant)."""
        if self.variant == FIXED_EFFICIENCY or self.resistance_ohm == 0.0:
            return math.inf
        return 2.0 * self.nominal_voltage_v**2 / self.resistance_ohm

    @property
    def max_discharge_power_w(self) -> float:
        """D_p = V**2/(4*r) (inf for r=0 or the fixed-efficiency variant)."""
        if self.variant == FIXED_EFFICIENCY or self.resistance_ohm == 0.0:
            return math.inf
        return self.nominal_voltage_v**2 / (4.0 * self.resistance_ohm)

    # ------------------------------------------------------------------
    # Efficiency curves

    def _check_range(self, value, cap: float, what: str):
        value = np.asarray(value, dtype=float)
        if np.any(np.isnan(value)) or np.any(value < 0.0):
            raise ValueError(f"{what} must be >= 0")
        if math.isfinite(cap):
            if np.any(value > cap * (1.0 + _DOMAIN_RTOL)):
                raise ValueError(f"{what} exceeds the physical limit {cap} W")
            value = np.minimum(value, cap)
        return value if value.ndim else float(value)

    def charge_efficiency(self, charge_power_w):
        """Fraction of external charge power that reaches the store.

        1.0 at rest, falling to 0.0 at C_p.  Constant for the
        fixed-efficiency variant.
        """
        c_p = self._check_range(charge_power_w, self.max_charge_power_w,
                                "charge power")
        if self.variant == FIXED_EFFICIENCY:
            return self.eta_c * np.ones_like(np.asarray(c_p)) if np.ndim(c_p) else self.eta_c
        if self.resistance_ohm == 0.0:
            return np.ones_like(np.asarray(c_p)) if np.ndim(c_p) else 1.0
        # 4*r*c_p/V**2 written as 8*c_p/C_p so the endpoints are float-exact
        eff = 1.5 - 0.5 * np.sqrt(1.0 + 8.0 * (c_p / self.max_charge_power_w))
        out = np.maximum(eff, 0.0)
        return out if np.ndim(out) else float(out)

    def discharge_efficiency(self, discharge_power_w):
        """Delivered power over internal drain rate.

        1.0 at rest, falling to 0.5 at D_p.  The step variant stays at the
        zero-rate value (1.0) over the whole admissible range; the fixed
        variant is constant.
        """
        d_p = self._check_range(discharge_power_w, self.max_discharge_power_w,
                                "discharge power")
        if self.variant == FIXED_EFFICIENCY:
            return self.eta_d * np.ones_like(np.asarray(d_p)) if np.ndim(d_p) else self.eta_d
        if self.variant == STEP_DISCHARGE or self.resistance_ohm == 0.0:
            return np.ones_like(np.asarray(d_p)) if np.ndim(d_p) else 1.0
        # 4*r*d_p/V**2 written as d_p/D_p so the endpoint is float-exact
        eff = 0.5 + 0.5 * np.sqrt(np.maximum(1.0 - d_p / self.max_discharge_power_w, 0.0))
        return eff if np.ndim(eff) else float(eff)

    @property
    def discharge_efficiency_at_rest(self) -> float:
        """eta_d in the zero-rate limit (the step model's constant)."""
        if self.variant == FIXED_EFFICIENCY:
            return self.eta_d
        return 1.0

    # ------------------------------------------------------------------
    # Internal power maps

    def internal_charge_power(self, charge_power_w):
        """Rate at which energy actually enters the store: eta_c(c_p)*c_p."""
        c_p = self._check_range(charge_power_w, self.max_charge_power_w,
                                "charge power")
        out = self.charge_efficiency(c_p) * c_p
        return out if np.ndim(out) else float(out)

    def internal_discharge_power(self, discharge_power_w):
        """Rate at which the store is drained: d_p/eta_d(d_p) (0 at d_p=0)."""
        d_p = self._check_range(discharge_power_w, self.max_discharge_power_w,
                                "discharge power")
        out = np.asarray(d_p) / self.discharge_efficiency(d_p)
        return out if np.ndim(d_p) else float(out)

    def invert_internal_discharge(self, target_internal_w):
        """External discharge power whose internal drain rate equals target.

        Unique because d_p/eta_d(d_p) is strictly increasing; capped at D_p
        when the target exceeds the drain rate at D_p.  Solved by bisection
        on [0, D_p] to 1e-12 W so the same code serves any monotone curve.
        """
        t = np.asarray(target_internal_w, dtype=float)
        scalar = t.ndim == 0
        if np.any(np.isnan(t)) or np.any(t < 0.0):
            raise ValueError("target internal drain rate must be >= 0")
        d_max = self.max_discharge_power_w
        if self.variant == FIXED_EFFICIENCY:
            out = t * self.eta_d
            return float(out) if scalar else out
        if self.variant == STEP_DISCHARGE or self.resistance_ohm == 0.0:
            out = np.minimum(t, d_max)
            return float(out) if scalar else out
        t = np.atleast_1d(t)
        lo = np.zeros_like(t)
        hi = np.full_like(t, d_max)
        cap_rate = self.internal_discharge_power(d_max)
        capped = t >= cap_rate
        for _ in range(_INVERT_ITERS):
            mid = 0.5 * (lo + hi)
            too_low = self.internal_discharge_power(mid) < t
            lo = np.where(too_low, mid, lo)
            hi = np.where(too_low, hi, mid)
        out = np.where(capped, d_max, 0.5 * (lo + hi))
        out = np.where(t == 0.0, 0.0, out)
        return float(out[0]) if scalar else out

    def invert_internal_charge(self, target_internal_w):
        """Smallest external charge rate storing energy at the target rate.

        Inverts eta_c(c_p)*c_p on its increasing branch [0, argmax], so of
        the two external rates achieving a given internal rate the cheaper
        one is returned.  Raises if the target exceeds the curve's peak.
        """
        t = np.asarray(target_internal_w, dtype=float)
        scalar = t.ndim == 0
        if np.any(np.isnan(t)) or np.any(t < 0.0):
            raise ValueError("target internal charge rate must be >= 0")
        if self.variant == FIXED_EFFICIENCY:
            out = t / self.eta_c
            return float(out) if scalar else out
        if self.resistance_ohm == 0.0:
            return float(t) if scalar else t
        u_star = (_S_STAR**2 - 1.0) / self._loss_coeff
        peak = self.internal_charge_power(min(u_star, self.max_charge_power_w))
        if np.any(t > peak * (1.0 + _DOMAIN_RTOL)):
            raise ValueError("target internal charge rate exceeds the curve peak")
        t = np.minimum(np.atleast_1d(t), peak)
        lo = np.zeros_like(t)
        hi = np.full_like(t, min(u_star, self.max_charge_power_w))
        for _ in range(_INVERT_ITERS):
            mid = 0.5 * (lo + hi)
            too_low = self.internal_charge_power(mid) < t
            lo = np.where(too_low, mid, lo)
            hi = np.where(too_low, hi, mid)
        out = 0.5 * (lo + hi)
        return float(out[0]) if scalar else out

    def optimal_charge_power(self, available_power_w: float) -> float:
        """External charge rate maximising the internal charge power.

        Maximises eta_c(c_p)*c_p over [0, min(available, C_p)].  For the
        resistive curve the unconstrained stationary point solves
        s**2 - 2*s - 1/3 = 0 with s = sqrt(1 + 4*r*c_p/V**2); the curve is
        unimodal, so the argmax is that point clipped to the interval.
        """
        if not available_power_w >= 0.0:
            raise ValueError("available power must be >= 0")
        upper = min(available_power_w, self.max_charge_power_w)
        if self.variant == FIXED_EFFICIENCY or self.resistance_ohm == 0.0:
            return upper
        stationary = (_S_STAR**2 - 1.0) / self._loss_coeff
        return min(stationary, upper)

    # ------------------------------------------------------------------
    # First/second derivatives used by the interior-point solvers.

    def charge_flow_terms(self, charge_power_w):
        """(eta_c*c_p, d/dc_p, d2/dc_p2) of the internal charge power."""
        u = np.asarray(charge_power_w, dtype=float)
        if self.variant == FIXED_EFFICIENCY:
            return self.eta_c * u, self.eta_c * np.ones_like(u), np.zeros_like(u)
        if self.resistance_ohm == 0.0:
            return u, np.ones_like(u), np.zeros_like(u)
        a = self._loss_coeff
        s = np.sqrt(1.0 + a * u)
        val = (1.5 - 0.5 * s) * u
        # d/du in terms of s: 1.5 - 0.75*s + 1/(4*s); chain via ds/du = a/(2 s)
        d1 = 1.5 - 0.75 * s + 0.25 / s
        d2 = (a / (2.0 * s)) * (-0.75 - 0.25 / s**2)
        return val, d1, d2

    def discharge_flow_terms(self, discharge_power_w):
        """(d_p/eta_d, d/dd_p, d2/dd_p2) of the internal discharge power."""
        d = np.asarray(discharge_power_w, dtype=float)
        if self.variant == FIXED_EFFICIENCY:
            inv = 1.0 / self.eta_d
            return d * inv, inv * np.ones_like(d), np.zeros_like(d)
        if self.variant == STEP_DISCHARGE or self.resistance_ohm == 0.0:
            return d, np.ones_like(d), np.zeros_like(d)
        a = self._loss_coeff
        w = np.sqrt(np.maximum(1.0 - a * d, 1e-300))
        val = 2.0 * (1.0 - w) / a  # identical to d/eta_d(d), stable at both ends
        d1 = 1.0 / w
        d2 = 0.5 * a / w**3
        return val, d1, d2
