"""Belief propagation on the decoding graph of the unrotated surface code.

The package builds the code, samples depolarizing noise, turns a syndrome into
a complete decoding graph, runs BP on its perfect-matching factor graph and
reads a matching off the marginals. An exact minimum-weight perfect matching
decoder serves as the baseline.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .code import CodeSpec, Syndrome, build_surface_code, logical_failure, syndrome
from .decoders import (
    VARIANTS,
    DecodeOutcome,
    DecoderConfig,
    decode,
    decode_bp4m,
    decode_bp4m_plus_m,
    decode_bp4mf,
    decode_mwpm,
    decode_variants,
    iteration_count,
)
from .factor_graph import FactorGraph, bp_iteration, build_factor_graph, exact_distribution, init_messages, marginals
from .graph import Candidate, DecodingGraph, MetricTable, build_decoding_graph, graph_from_weights, precompute_metric
from .harness import SweepResult, ThresholdEstimate, estimate_threshold, run_trial, sweep
from .inference import check_convergence, forced_convergence, marginal_assignment, partition_edges
from .matching import MatchingInstance, brute_force_mwpm, mwpm
from .noise import PauliSample, marginal_flip_rate, sample_depolarizing, trial_rng

__all__ = [
    "CodeSpec", "Syndrome", "build_surface_code", "logical_failure", "syndrome",
    "VARIANTS", "DecodeOutcome", "DecoderConfig", "decode", "decode_bp4m", "decode_bp4m_plus_m",
    "decode_bp4mf", "decode_mwpm", "decode_variants", "iteration_count",
    "FactorGraph", "bp_iteration", "build_factor_graph", "exact_distribution", "init_messages", "marginals",
    "Candidate", "DecodingGraph", "MetricTable", "build_decoding_graph", "graph_from_weights", "precompute_metric",
    "SweepResult", "ThresholdEstimate", "estimate_threshold", "run_trial", "sweep",
    "check_convergence", "forced_convergence", "marginal_assignment", "partition_edges",
    "MatchingInstance", "brute_force_mwpm", "mwpm",
    "PauliSample", "marginal_flip_rate", "sample_depolarizing", "trial_rng",
]
