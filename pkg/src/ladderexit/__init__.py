"""Exact and asymptotic exit probabilities for integer random walks."""
from .asymptotics import classify, kappa, rogozin_Q, rogozin_overshoot
from .errors import LadderExitError
from .exit_exact import check_upper_bound, martingale_functional, overshoot_law, solve_exit
from .increments import PRESETS, FamilySpec, IncrementLaw, build_law
from .ladder import LadderLaw, wiener_hopf_iterate
from .renewal import RenewalTable, build_tables

__all__ = [
    "PRESETS", "FamilySpec", "IncrementLaw", "LadderExitError", "LadderLaw", "RenewalTable",
    "build_law", "build_tables", "check_upper_bound", "classify", "kappa",
    "martingale_functional", "overshoot_law", "rogozin_Q", "rogozin_overshoot",
    "solve_exit", "wiener_hopf_iterate",
]
