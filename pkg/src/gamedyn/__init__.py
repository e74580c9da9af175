"""Evolutionary game dynamics with exact Nash enumeration."""

from .game import (
    RPSSpec,
    SymmetricGame,
    build_game_66,
    build_game_77,
    build_rps,
)
from .equilibria import EquilibriumCertificate, enumerate_nash, is_nash
from .replicator import integrate_rep, rep_rhs
from .best_reply import integrate_br, shapley_triangle

__all__ = [
    "RPSSpec",
    "SymmetricGame",
    "build_game_66",
    "build_game_77",
    "build_rps",
    "EquilibriumCertificate",
    "enumerate_nash",
    "is_nash",
    "integrate_rep",
    "rep_rhs",
    "integrate_br",
    "shapley_triangle",
]
