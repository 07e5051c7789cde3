"""Bell test between a qubit and spacetime-geometry degrees of freedom.

Exact and Monte Carlo simulation of the experiment, its causal timetable in
the reduction frame, CHSH statistics, and the local hidden-variable baseline.
"""

from .distribution import JointDistribution
from .protocol import (
    SMHypothesis,
    TrialInputs,
    TrialRecord,
    closed_form_pas,
    exact_distribution,
    run_trial,
    run_trials,
)
from .spacetime import TimingBudget, build_schedule, reference_budget, validate_budget
from .stats import chsh, chsh_slice, estimate, no_signalling_audit

__all__ = [
    "JointDistribution",
    "SMHypothesis",
    "TimingBudget",
    "TrialInputs",
    "TrialRecord",
    "build_schedule",
    "chsh",
    "chsh_slice",
    "closed_form_pas",
    "estimate",
    "exact_distribution",
    "no_signalling_audit",
    "reference_budget",
    "run_trial",
    "run_trials",
    "validate_budget",
]
