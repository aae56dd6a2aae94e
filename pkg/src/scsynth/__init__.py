"""Stochastic commutator synthesis for single-qubit gates over Clifford+T."""

from .group import IDENTITY, Unitary2, op_distance, rz
from .net import EpsilonNet, build_net, default_net, load_net, nearest, save_net
from .scs import ScsConfig, ensemble_synthesize, scs_synthesize
from .sk import SkParams, sk_synthesize, synthesize_to
from .words import GateSet, GateWord, clifford_t, clifford_t_paulis

__all__ = [
    "IDENTITY",
    "Unitary2",
    "op_distance",
    "rz",
    "EpsilonNet",
    "build_net",
    "default_net",
    "load_net",
    "nearest",
    "save_net",
    "ScsConfig",
    "ensemble_synthesize",
    "scs_synthesize",
    "SkParams",
    "sk_synthesize",
    "synthesize_to",
    "GateSet",
    "GateWord",
    "clifford_t",
    "clifford_t_paulis",
]
