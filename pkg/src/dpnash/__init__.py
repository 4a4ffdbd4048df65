"""Differentially private Nash-equilibrium seeking over time-varying digraphs.

Players in an aggregative game exchange Laplace-perturbed aggregate
estimates with push-sum mixing, attenuated by a decaying weakening factor,
and update their actions by projected pseudo-gradient steps with momentum.
"""

from .game import (GameSpec, QuadraticAggCost, CallableCost, aggregate, partial_gradient,
                   pseudo_gradient, project, solve_ne_oracle, linear_ne,
                   verify_strong_monotonicity_sample, load_game, game_from_dict)
from .graphs import (Digraph, GraphSchedule, build_weight_matrix, is_strongly_connected,
                     check_d_strong_connectivity, backward_product, estimate_mixing,
                     read_topology, parse_topology)
from .harness import RunConfig, load_config, write_config, run_experiment, summarize, \
    density_report
from .noise import NoiseStream, sample_laplace, noise_vector, make_streams
from .privacy import Convention, PrivacyLedger, sensitivity, accumulate, \
    check_budget_summable, ledger_for_run
from .schedules import Schedule, ScheduleSet, eval_schedules, summation_oracle, \
    validate_assumptions, remark5_preset, section6_preset
from .seeker import SeekerState, RunRecord, init_state, step, run, compact_form_check, \
    conservation_residuals

__version__ = "0.1.0"
