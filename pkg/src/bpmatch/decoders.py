"""BP4M, BP4MF and BP4M+M decoders plus the plain MWPM baseline.

All three BP decoders drive the same message-passing loop and differ only in
how candidates are collected, so a single :class:`BPRun` can feed several
variants at once (see :func:`decode_variants`).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .code import Syndrome
from .factor_graph import EPS, FactorGraph, bp_iteration, build_factor_graph, init_messages, marginal_p1
from .graph import (
    Candidate,
    DecodingGraph,
    MetricTable,
    build_decoding_graph,
    candidate_from_selection,
    correction,
)
from .inference import check_convergence, forced_convergence, marginal_assignment, partition_edges
from .matching import MatchingInstance, mwpm
from .noise import marginal_flip_rate

VARIANTS = ("BP4M", "BP4MF", "BP4M+M", "MWPM")
_VARIANT_ALIASES = {"BP4M_PLUS_M": "BP4M+M", "BP4MM": "BP4M+M"}


def parse_variant(name: str) -> str:
    key = name.strip().upper()
    key = _VARIANT_ALIASES.get(key, key)
    if key not in VARIANTS:
        raise ValueError(f"unknown decoder {name!r}; choose from {', '.join(VARIANTS)}")
    return key


def parse_schedule(schedule) -> str:
    """Normalize a schedule: ``log_n``, ``sqrt_n`` or ``fixed:T``."""
    if isinstance(schedule, (int, np.integer)):
        schedule = f"fixed:{int(schedule)}"
    text = str(schedule).strip().lower()
    if text in ("log_n", "logn", "log"):
        return "log_n"
    if text in ("sqrt_n", "sqrtn", "sqrt"):
        return "sqrt_n"
    if text.startswith("fixed:"):
        try:
            t = int(text.split(":", 1)[1])
        except ValueError:
            t = 0
        if t >= 1:
            return f"fixed:{t}"
    raise ValueError(f"invalid schedule {schedule!r}; use log_n, sqrt_n or fixed:T with T >= 1")


def iteration_count(n_qubits: int, schedule) -> int:
    """Number of BP iterations: ``ceil(log2 n)``, ``ceil(sqrt n)`` or fixed, at least 1."""
    if n_qubits < 1:
        raise ValueError("n_qubits must be positive")
    schedule = parse_schedule(schedule)
    if schedule == "log_n":
        t = math.ceil(math.log2(n_qubits))
    elif schedule == "sqrt_n":
        t = math.isqrt(n_qubits)
        if t * t < n_qubits:
            t += 1
    else:
        t = int(schedule.split(":")[1])
    return max(1, t)


@dataclass(frozen=True)
class DecoderConfig:
    variant: str = "BP4M"
    schedule: str = "log_n"
    prior_mode: str = "marginal"
    literal_prior_freeze: bool = False
    eps: float = EPS
    weight_metric: str = "matching"

    def __post_init__(self):
        object.__setattr__(self, "variant", parse_variant(self.variant))
        object.__setattr__(self, "schedule", parse_schedule(self.schedule))
        if self.prior_mode not in ("marginal", "literal"):
            raise ValueError(f"prior_mode must be 'marginal' or 'literal', got {self.prior_mode!r}")
        if self.weight_metric not in ("matching", "qubits"):
            raise ValueError(f"weight_metric must be 'matching' or 'qubits', got {self.weight_metric!r}")
        if not 0 < self.eps < 0.5:
            raise ValueError("eps must lie in (0, 0.5)")

    @property
    def name(self) -> str:
        if self.variant == "MWPM":
            return "MWPM"
        return f"{self.variant}-{self.schedule}"

    def bp_key(self) -> tuple:
        return (self.schedule, self.prior_mode, self.literal_prior_freeze, self.eps)


@dataclass(frozen=True)
class DecodeOutcome:
    candidate: Candidate
    converged_via_marginalization: bool
    iterations_run: int
    mwpm_invoked: bool
    trace: tuple = field(default=(), repr=False)
    decode_ns: int = 0


@dataclass
class BPRun:
    """Marginals and marginalization results of every iteration of one BP run."""

    graph: DecodingGraph
    fg: FactorGraph
    p1: list
    selections: list
    converged: list

    @property
    def iterations(self) -> int:
        return len(self.p1)


def run_bp(graph: DecodingGraph, iterations: int, literal_prior_freeze: bool = False, eps: float = EPS) -> BPRun:
    fg = build_factor_graph(graph)
    st = init_messages(fg, graph, literal_prior_freeze)
    run = BPRun(graph, fg, [], [], [])
    for _ in range(iterations):
        st = bp_iteration(fg, st, eps)
        p1 = marginal_p1(fg, st)
        sel = marginal_assignment(p1)
        run.p1.append(p1)
        run.selections.append(sel)
        run.converged.append(check_convergence(fg, sel))
    return run


class _Scorer:
    """Candidate weight under the configured metric, with a lazy correction."""

    def __init__(self, graph: DecodingGraph, metric: MetricTable, weight_metric: str):
        self.graph = graph
        self.metric = metric
        self.by_qubits = weight_metric == "qubits"
        self.var_w = graph.var_weights()

    def __call__(self, selected) -> int:
        if self.by_qubits:
            return int(correction(self.graph, self.metric, selected).sum())
        if not selected:
            return 0
        return int(self.var_w[np.fromiter(selected, dtype=np.int64)].sum())


def _empty_outcome(metric: MetricTable) -> DecodeOutcome:
    cand = Candidate(frozenset(), np.zeros(metric.n_qubits, dtype=np.uint8), 0, "marginalization", 0)
    return DecodeOutcome(cand, True, 0, False, ())


def _finish(graph, metric, selected, source, iteration, converged, iterations, mwpm_invoked, trace):
    cand = candidate_from_selection(graph, metric, selected, source, iteration)
    return DecodeOutcome(cand, converged, iterations, mwpm_invoked, tuple(trace))


def _best_converged(run: BPRun, score):
    best = None
    trace = []
    for t, (sel, conv) in enumerate(zip(run.selections, run.converged), start=1):
        w = score(sel) if conv else None
        trace.append((t, conv, w))
        if conv and (best is None or w < best[0]):
            best = (w, sel, t)
    return best, trace


def bp4m_from_run(run: BPRun, metric: MetricTable, cfg: DecoderConfig) -> DecodeOutcome:
    score = _Scorer(run.graph, metric, cfg.weight_metric)
    best, trace = _best_converged(run, score)
    forced = forced_convergence(run.graph, run.fg, run.p1[-1], partition_edges(run.graph))
    fw = score(forced)
    trace.append(("forced", True, fw))
    if best is not None and best[0] <= fw:
        w, sel, t = best
        return _finish(run.graph, metric, sel, "marginalization", t, True, run.iterations, False, trace)
    return _finish(run.graph, metric, forced, "forced", run.iterations, best is not None,
                   run.iterations, False, trace)


def bp4mf_from_run(run: BPRun, metric: MetricTable, cfg: DecoderConfig) -> DecodeOutcome:
    score = _Scorer(run.graph, metric, cfg.weight_metric)
    part = partition_edges(run.graph)
    best = None
    trace = []
    for t, (p1, sel, conv) in enumerate(zip(run.p1, run.selections, run.converged), start=1):
        if conv:
            source = "marginalization"
        else:
            sel = forced_convergence(run.graph, run.fg, p1, part)
            source = "forced"
        w = score(sel)
        trace.append((t, conv, w))
        if best is None or w < best[0]:
            best = (w, sel, t, source)
    w, sel, t, source = best
    return _finish(run.graph, metric, sel, source, t, any(run.converged), run.iterations, False, trace)


def bp4m_plus_m_from_run(run: BPRun, metric: MetricTable, cfg: DecoderConfig, matched=None) -> DecodeOutcome:
    score = _Scorer(run.graph, metric, cfg.weight_metric)
    best, trace = _best_converged(run, score)
    if best is not None:
        w, sel, t = best
        return _finish(run.graph, metric, sel, "marginalization", t, True, run.iterations, False, trace)
    if matched is None:
        matched = mwpm(MatchingInstance.from_graph(run.graph))
    trace.append(("mwpm", True, score(matched)))
    return _finish(run.graph, metric, matched, "mwpm", run.iterations, False, run.iterations, True, trace)


def _iterations_for(metric: MetricTable, cfg: DecoderConfig) -> int:
    return iteration_count(metric.n_qubits, cfg.schedule)


def decode_bp4m(graph: DecodingGraph, metric: MetricTable, cfg: DecoderConfig) -> DecodeOutcome:
    """T rounds of BP with marginalization, then forced convergence on the last round.

    Returns the lightest of the converged candidates and the forced one; ties
    go to the earliest converged candidate.
    """
    if graph.s == 0:
        return _empty_outcome(metric)
    run = run_bp(graph, _iterations_for(metric, cfg), cfg.literal_prior_freeze, cfg.eps)
    return bp4m_from_run(run, metric, cfg)


def decode_bp4mf(graph: DecodingGraph, metric: MetricTable, cfg: DecoderConfig) -> DecodeOutcome:
    """A candidate every round (marginal if it converges, else forced); keep the lightest."""
    if graph.s == 0:
        return _empty_outcome(metric)
    run = run_bp(graph, _iterations_for(metric, cfg), cfg.literal_prior_freeze, cfg.eps)
    return bp4mf_from_run(run, metric, cfg)


def decode_bp4m_plus_m(graph: DecodingGraph, metric: MetricTable, cfg: DecoderConfig) -> DecodeOutcome:
    """BP4M's converged candidates if any exist, otherwise exact matching."""
    if graph.s == 0:
        return _empty_outcome(metric)
    run = run_bp(graph, _iterations_for(metric, cfg), cfg.literal_prior_freeze, cfg.eps)
    return bp4m_plus_m_from_run(run, metric, cfg)


def decode_mwpm(graph: DecodingGraph, metric: MetricTable, cfg: DecoderConfig | None = None) -> DecodeOutcome:
    if graph.s == 0:
        return _empty_outcome(metric)
    sel = mwpm(MatchingInstance.from_graph(graph))
    return _finish(graph, metric, sel, "mwpm", 0, False, 0, True, ())


_DISPATCH = {
    "BP4M": decode_bp4m,
    "BP4MF": decode_bp4mf,
    "BP4M+M": decode_bp4m_plus_m,
    "MWPM": decode_mwpm,
}


def decode(syn: Syndrome, metric: MetricTable, p: float, cfg: DecoderConfig) -> DecodeOutcome:
    """Decode one syndrome at physical error rate ``p``."""
    t0 = time.perf_counter_ns()
    graph = build_decoding_graph(syn, metric, marginal_flip_rate(p, cfg.prior_mode) if syn.s else 0.0)
    out = _DISPATCH[cfg.variant](graph, metric, cfg)
    return replace(out, decode_ns=time.perf_counter_ns() - t0)


def decode_variants(syn: Syndrome, metric: MetricTable, p: float, cfgs) -> list[DecodeOutcome]:
    """Decode one syndrome with several configs, sharing graphs, BP runs and matchings.

    Results equal calling :func:`decode` per config. Each outcome's
    ``decode_ns`` charges the shared stages it used in full, so it estimates
    the cost of running that decoder alone.
    """
    if syn.s == 0:
        return [_empty_outcome(metric) for _ in cfgs]
    clock = time.perf_counter_ns
    graphs: dict = {}
    runs: dict = {}
    matched = None
    mwpm_ns = 0
    out = []
    for cfg in cfgs:
        t0 = clock()
        entry = graphs.get(cfg.prior_mode)
        if entry is None:
            graph = build_decoding_graph(syn, metric, marginal_flip_rate(p, cfg.prior_mode))
            entry = graphs[cfg.prior_mode] = (graph, clock() - t0)
        graph, graph_ns = entry
        shared_ns = graph_ns
        if cfg.variant == "MWPM":
            if matched is None:
                t1 = clock()
                matched = mwpm(MatchingInstance.from_graph(graph))
                mwpm_ns = clock() - t1
            t1 = clock()
            res = _finish(graph, metric, matched, "mwpm", 0, False, 0, True, ())
            out.append(replace(res, decode_ns=shared_ns + mwpm_ns + clock() - t1))
            continue
        key = cfg.bp_key()
        if key not in runs:
            t1 = clock()
            run = run_bp(graph, _iterations_for(metric, cfg), cfg.literal_prior_freeze, cfg.eps)
            runs[key] = (run, clock() - t1)
        run, bp_ns = runs[key]
        shared_ns += bp_ns
        if cfg.variant == "BP4M+M" and not any(run.converged):
            if matched is None:
                t1 = clock()
                matched = mwpm(MatchingInstance.from_graph(graph))
                mwpm_ns = clock() - t1
            shared_ns += mwpm_ns
        t1 = clock()
        if cfg.variant == "BP4M":
            res = bp4m_from_run(run, metric, cfg)
        elif cfg.variant == "BP4MF":
            res = bp4mf_from_run(run, metric, cfg)
        else:
            res = bp4m_plus_m_from_run(run, metric, cfg, matched)
        out.append(replace(res, decode_ns=shared_ns + clock() - t1))
    return out
