"""Transmission policies for an energy-harvesting link with a resistive battery."""

from .battery import (BatteryModel, FIXED_EFFICIENCY, INTERNAL_RESISTANCE,
                      STEP_DISCHARGE)
from .frame import (EnergyLedger, FrameDecision, FrameSpec,
                    InfeasibleDecisionError, NoiseModel, Violation,
                    check_feasible, energy_ledger, frame_rate,
                    rate_bits_per_symbol, rho_bandwidth_limit)
from .offline import (CHARGE_PHASE, OfflineProblem, OfflineSolution,
                      PhasePattern, SPLIT_POWER, algorithm1,
                      frame_receives_energy, ideal_battery_baseline,
                      loss_of_frame, no_battery_baseline, solve_p2,
                      solve_p3_fixed_pattern)
from .online import (CpsrPolicy, CtsrPolicy, DiscreteDistribution, DpPolicy,
                     GreedyPolicy, PolicyTrace, StatisticalPolicy, SystemState,
                     dp_act, dp_build, fit_cpsr, fit_ctsr, greedy_act,
                     quantize_exponential_unit_mean, simulate_policy,
                     statistical_act)
from .scenario import (RandomLaw, Scenario, ScenarioError,
                       generate_realizations, load_scenario)
from .single_frame import (SingleFrameSolution, brute_force_single_frame,
                           solve_single_frame)
from .solvers import SolverError
from .experiment import (ExperimentResult, PolicySummary, emit_csv,
                         emit_frames_csv, read_summary_csv, run_experiment)

__version__ = "0.1.0"
