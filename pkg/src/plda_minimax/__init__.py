"""Smoothed proximal linear descent ascent for nonsmooth composite minimax problems."""

from .problem_model import CompositeMinimaxProblem, DerivedConstants, ProblemConstants, derive_parameters
from .smoothed_plda import IterateTrace, SolverState, initial_state, run

__version__ = "0.1.0"

__all__ = [
    "CompositeMinimaxProblem",
    "DerivedConstants",
    "IterateTrace",
    "ProblemConstants",
    "SolverState",
    "__version__",
    "derive_parameters",
    "initial_state",
    "run",
]
