"""Interacting random walks with creation-annihilation on the discrete torus.

Exact event-driven simulation of N^2-sped-up walkers with density-dependent
births and deaths, the semidiscrete reaction-diffusion limit, the dominating
birth-death chain and its explosion-time analytics, plus experiment presets
that tie them together.
"""
from .bdchain import (BirthDeathSpec, HittingTimes, expected_explosion_time,
                      expected_hitting_times, mc_first_passage, simulate_bd)
from .errors import (DivergentTail, EventBudgetExceeded, Extinct, GridMismatch,
                     NonSummable, NotExploded, StepUnderflow, TorusRdError,
                     ZeroBirthRate)
from .harness import ExperimentConfig, ell_of, run_preset
from .metrics import DensityField, field_from_config, l1_norm, sup_distance
from .model import (ModelParams, RateFunction, initial_config, make_rate,
                    rate_difference, site_rates, truncate_birth)
from .pde import (blowup_time, blowup_upper_bound, check_supersolution,
                  integrate, rhs, tail_integral)
from .report import ExperimentReport, emit_report
from .rng import stream
from .simulate import (ParticleConfig, SimOutcome, coupled_domination_run,
                       coupled_truncation_run, estimate_explosion_time,
                       simulate, step)

__version__ = "0.1.0"

__all__ = [
    "BirthDeathSpec", "DensityField", "DivergentTail", "EventBudgetExceeded",
    "ExperimentConfig", "ExperimentReport", "Extinct", "GridMismatch",
    "HittingTimes", "ModelParams", "NonSummable", "NotExploded",
    "ParticleConfig", "RateFunction", "SimOutcome", "StepUnderflow",
    "TorusRdError", "ZeroBirthRate", "blowup_time", "blowup_upper_bound",
    "check_supersolution", "coupled_domination_run", "coupled_truncation_run",
    "ell_of", "emit_report", "estimate_explosion_time",
    "expected_explosion_time", "expected_hitting_times", "field_from_config",
    "initial_config", "integrate", "l1_norm", "make_rate", "mc_first_passage",
    "rate_difference", "rhs", "run_preset", "simulate", "simulate_bd",
    "site_rates", "step", "stream", "sup_distance", "tail_integral",
    "truncate_birth",
]
