"""Entanglement certification from partial state information.

The outer sequence searches for PPT symmetric extensions of every state
compatible with a set of linear constraints; infeasibility yields an
entanglement witness valid for the whole family.  The inner sequence certifies
that some compatible state is separable.
"""

from .constraints import ConstraintSet, build_family, make_constraint_set, parse_constraints
from .driver import RunConfig, Verdict, run_detection
from .hierarchy import pptse_test
from .inner import epsilon_N, family_inner_test, inner_membership_test
from .observables import builtin_observable
from .report import emit_report, verify_command
from .witness import build_witness, witness_margin

__all__ = [
    "ConstraintSet",
    "RunConfig",
    "Verdict",
    "build_family",
    "build_witness",
    "builtin_observable",
    "emit_report",
    "epsilon_N",
    "family_inner_test",
    "inner_membership_test",
    "make_constraint_set",
    "parse_constraints",
    "pptse_test",
    "run_detection",
    "verify_command",
    "witness_margin",
]
