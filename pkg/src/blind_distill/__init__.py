"""Simulator for double-server blind quantum computation with Alice-mediated hashing distillation."""
from .algebra import Angle8, BellLabel, Gf2Vec, reflect
from .bellsim import PairRegister, WernerParams, werner_dist
from .distill import HashingConfig, entropy, expected_yield, hashing_threshold, run_hashing
from .mbqc import Pattern, chain_pattern, run_reference
from .protocol import run_double_server, run_double_server_distilled, run_single_server

__all__ = [
    "Angle8", "BellLabel", "Gf2Vec", "reflect",
    "PairRegister", "WernerParams", "werner_dist",
    "HashingConfig", "entropy", "expected_yield", "hashing_threshold", "run_hashing",
    "Pattern", "chain_pattern", "run_reference",
    "run_single_server", "run_double_server", "run_double_server_distilled",
]
