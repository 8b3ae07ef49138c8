"""Acceptance gate: every criterion at its stated scale and tolerance.

Each test prints one ``[PASS]`` or ``[FAIL]`` line, visible with ``pytest -v``.
The threshold sweep is shared by criteria 5 and 6 and takes most of the
runtime (tens of minutes on one core); set ``BPMATCH_WORKERS`` to use more.
"""

from __future__ import annotations

import math
import os

import numpy as np
import pytest

from bpmatch.code import syndrome
from bpmatch.decoders import (
    DecoderConfig,
    bp4m_from_run,
    bp4m_plus_m_from_run,
    bp4mf_from_run,
    decode_mwpm,
    iteration_count,
    run_bp,
)
from bpmatch.factor_graph import bp_iteration, build_factor_graph, exact_distribution, init_messages, marginals
from bpmatch.graph import DecodingGraph, build_decoding_graph, edge_prior, graph_from_weights
from bpmatch.harness import code_context, estimate_threshold, run_trials, sweep
from bpmatch.inference import forced_convergence, partition_edges
from bpmatch.matching import MatchingInstance, brute_force_mwpm, mwpm
from bpmatch.noise import marginal_flip_rate, sample_depolarizing, trial_rng

WORKERS = int(os.environ.get("BPMATCH_WORKERS", os.cpu_count() or 1))
SEED = 20260101

SWEEP_DISTANCES = [3, 5, 7]
THRESHOLD_GRID = [round(0.08 + 0.01 * k, 2) for k in range(11)]
LOW_GRID = [0.02, 0.04, 0.06]
SWEEP_TRIALS = 20_000
LOG_N = "log_n"


def report(criterion: str, ok: bool, detail: str) -> None:
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}", flush=True)


@pytest.fixture
def say(capsys):
    def emit(criterion, ok, detail):
        with capsys.disabled():
            report(criterion, ok, detail)
    return emit


# -- 1. matching oracle ------------------------------------------------------


def test_criterion_1_mwpm_matches_brute_force(say):
    rng = np.random.default_rng(SEED)
    mismatches = 0
    for s in range(1, 9):
        for _ in range(500):
            w = rng.integers(1, 10, size=(s, s))
            w = np.triu(w) + np.triu(w, 1).T
            inst = MatchingInstance(w)
            if inst.selection_weight(mwpm(inst)) != brute_force_mwpm(inst)[1]:
                mismatches += 1
    ok = mismatches == 0
    say("1", ok, f"mwpm vs brute force, 500 instances x s=1..8, weights 1..9: {mismatches} mismatches")
    assert ok


# -- 2. BP oracle ------------------------------------------------------------


def _prior_configs(rng, s, count):
    """Half from the edge-weight prior with a random flip rate, half with free per-edge priors.

    Every prior stays above the 1e-12 message clamp, so BP is exact on these trees.
    """
    for k in range(count):
        if k % 2 == 0:
            w = rng.integers(1, 10, size=(s, s))
            w = np.triu(w) + np.triu(w, 1).T
            yield graph_from_weights(w, float(rng.uniform(0.1, 0.45)))
        else:
            pri = np.exp(rng.uniform(math.log(1e-8), math.log(0.5), size=(s, s)))
            pri = np.triu(pri) + np.triu(pri, 1).T
            yield DecodingGraph(tuple(range(s)), 0.1, np.ones((s, s), dtype=np.int64), pri)


def test_criterion_2_bp_exact_on_trees(say):
    rng = np.random.default_rng(SEED + 2)
    worst = 0.0
    worst_iters = 0
    for s in (1, 2):
        for g in _prior_configs(rng, s, 200):
            fg = build_factor_graph(g)
            exact = exact_distribution(fg, g).marginals
            st = init_messages(fg, g)
            needed = None
            for t in range(1, 5):
                st = bp_iteration(fg, st)
                err = float(np.max(np.abs(marginals(fg, st) - exact)))
                if err <= 1e-9 and needed is None:
                    needed = t
            worst = max(worst, err)
            worst_iters = max(worst_iters, needed or 99)
    ok = worst <= 1e-9 and worst_iters <= 4
    say("2", ok, f"BP vs exact marginals, s in {{1,2}}, 200 prior configs each: max |diff| after 4 "
                 f"iterations = {worst:.2e}, exact from iteration {worst_iters}")
    assert ok


# -- 3. totality and agreement ---------------------------------------------


def test_criterion_3_totality_and_agreement(say):
    cfg = DecoderConfig("BP4M", LOG_N)
    combos = [(d, p) for d in (3, 5, 7) for p in (0.05, 0.15)]
    per_combo = math.ceil(100_000 / (2 * len(combos)))
    n_syn = invalid = disagree = dominance = 0
    for d, p in combos:
        code, m_z, m_x = code_context(d)
        q = marginal_flip_rate(p)
        T = iteration_count(code.n_qubits, LOG_N)
        for idx in range(per_combo):
            err = sample_depolarizing(code.n_qubits, p, trial_rng(SEED + 3, d, round(p * 1e9), idx))
            for e, ptype, metric in ((err.z_part, "Z", m_z), (err.x_part, "X", m_x)):
                n_syn += 1
                syn = syndrome(code, e, ptype)
                if syn.s == 0:
                    continue
                g = build_decoding_graph(syn, metric, q)
                run = run_bp(g, T)
                part = partition_edges(g)
                for p1, sel, conv in zip(run.p1, run.selections, run.converged):
                    if conv and forced_convergence(g, run.fg, p1, part) != sel:
                        disagree += 1
                outs = [bp4m_from_run(run, metric, cfg), bp4mf_from_run(run, metric, cfg),
                        bp4m_plus_m_from_run(run, metric, cfg), decode_mwpm(g, metric)]
                for out in outs:
                    if syndrome(code, out.candidate.e_hat, ptype).unsatisfied != syn.unsatisfied:
                        invalid += 1
                if outs[1].candidate.weight > outs[0].candidate.weight:
                    dominance += 1
    ok = n_syn >= 100_000 and invalid == disagree == dominance == 0
    say("3", ok, f"{n_syn} fuzzed syndromes: {invalid} invalid outputs, {disagree} forced/marginal "
                 f"disagreements, {dominance} BP4MF > BP4M weight violations")
    assert ok


# -- 4. non-convergence ratio -----------------------------------------------


def test_criterion_4_non_convergence_ratio(say):
    cfg = DecoderConfig("BP4M", LOG_N)
    res = sweep([3, 5, 7, 9, 11], [0.02], [cfg], 10_000, master_seed=SEED + 4, workers=WORKERS)
    ratios = {c.d: c.r_nc for c in res.cells}
    ok = all(r <= 0.1 + 0.02 for r in ratios.values())
    detail = ", ".join(f"d={d}: {r:.4f}" for d, r in ratios.items())
    say("4", ok, f"BP4M-log_n r_nc at p=0.02, 10^4 trials per d (limit 0.12): {detail}")
    assert ok


# -- 5 and 6. threshold sweep ------------------------------------------------

SWEEP_CFGS = [
    DecoderConfig("MWPM"),
    DecoderConfig("BP4M+M", LOG_N),
    DecoderConfig("BP4MF", LOG_N),
    DecoderConfig("BP4M", LOG_N),
]


@pytest.fixture(scope="module")
def threshold_sweep():
    return sweep(SWEEP_DISTANCES, LOW_GRID + THRESHOLD_GRID, SWEEP_CFGS, SWEEP_TRIALS,
                 master_seed=SEED + 5, workers=WORKERS)


def _bracket(result, decoder, lo, hi, label, say):
    est = estimate_threshold(result, decoder, SWEEP_DISTANCES, p_min=THRESHOLD_GRID[0],
                             p_max=THRESHOLD_GRID[-1], n_boot=200, seed=SEED)
    ok = est.estimate is not None and lo <= est.estimate <= hi
    crossings = ", ".join(f"{a}/{b}: {v:.4f}" if v is not None else f"{a}/{b}: none"
                          for (a, b), v in est.crossings.items())
    value = "none" if est.estimate is None else f"{est.estimate:.4f}"
    ci = "" if est.ci is None else f" (95% CI {est.ci[0]:.4f}-{est.ci[1]:.4f})"
    say(label, ok, f"{decoder} crossing {value}{ci} in [{lo}, {hi}]; pairwise {crossings}")
    return ok


def test_criterion_5a_mwpm_threshold(threshold_sweep, say):
    assert _bracket(threshold_sweep, "MWPM", 0.13, 0.17, "5a", say)


def test_criterion_5b_bp4m_plus_m_threshold(threshold_sweep, say):
    in_bracket = _bracket(threshold_sweep, "BP4M+M", 0.13, 0.18, "5b", say)
    worst = 0.0
    outside = []
    for d in SWEEP_DISTANCES:
        for p in THRESHOLD_GRID:
            a = threshold_sweep.cell("BP4M+M", d, p)
            b = threshold_sweep.cell("MWPM", d, p)
            sigma = math.hypot(a.ler_stderr, b.ler_stderr)
            z = abs(a.ler - b.ler) / sigma if sigma > 0 else (0.0 if a.ler == b.ler else math.inf)
            worst = max(worst, z)
            if z > 2:
                outside.append(f"d={d} p={p}")
    close = not outside
    say("5b", close, f"BP4M+M-log_n LER within 2 sigma of MWPM at all {len(SWEEP_DISTANCES) * len(THRESHOLD_GRID)} "
                     f"points: max |diff|/sigma = {worst:.2f}" + (f"; outside: {', '.join(outside)}" if outside else ""))
    assert in_bracket and close


def test_criterion_5c_bp4mf_threshold(threshold_sweep, say):
    assert _bracket(threshold_sweep, "BP4MF", 0.10, 0.16, "5c", say)


def test_criterion_5d_bp4m_threshold(threshold_sweep, say):
    assert _bracket(threshold_sweep, "BP4M", 0.09, 0.16, "5d", say)


def _converged_vs_mwpm_matched(d, p, trials):
    """Failure rates of BP4M and MWPM restricted to the trials where BP4M converged."""
    code, m_z, m_x = code_context(d)
    cfgs = [DecoderConfig("MWPM"), DecoderConfig("BP4M", LOG_N)]
    conv = bp_fail = mw_fail = 0
    for idx in range(trials):
        mw, bp = run_trials(code, (m_z, m_x), p, cfgs, SEED + 6, idx)
        if bp.converged:
            conv += 1
            bp_fail += bp.logical_fail
            mw_fail += mw.logical_fail
    return conv, bp_fail, mw_fail


def test_criterion_6_converged_ler(threshold_sweep, say):
    upper_ok = True
    worst_upper = -math.inf
    for d in SWEEP_DISTANCES:
        for p in LOW_GRID + THRESHOLD_GRID:
            c = threshold_sweep.cell("BP4M", d, p)
            sigma = math.hypot(c.ler_stderr, c.converged_ler_stderr)
            excess = (c.converged_ler - c.ler) / sigma if sigma > 0 else 0.0
            worst_upper = max(worst_upper, excess)
            upper_ok &= c.converged_ler <= c.ler + 2 * sigma
    say("6a", upper_ok, f"BP4M-log_n converged_ler <= ler + 2 sigma at every point; "
                        f"max (converged_ler - ler)/sigma = {worst_upper:.2f}")

    lines = []
    close_ok = True
    for d in SWEEP_DISTANCES:
        for p in LOW_GRID:
            c = threshold_sweep.cell("BP4M", d, p)
            m = threshold_sweep.cell("MWPM", d, p)
            sigma = math.hypot(c.converged_ler_stderr, m.ler_stderr)
            z = abs(c.converged_ler - m.ler) / sigma if sigma > 0 else 0.0
            close_ok &= z <= 3
            lines.append(f"d={d} p={p}: {c.converged_ler:.5f} vs {m.ler:.5f} ({z:.1f} sigma)")
    say("6b", close_ok, "BP4M-log_n converged_ler within 3 sigma of MWPM ler at p <= 0.06: " + "; ".join(lines))

    # Diagnostic only: on the very trials where BP4M converged, MWPM fails
    # at the same rate, so any gap above is a selection effect of conditioning
    # on convergence rather than a decoding difference.
    diag = []
    for d in SWEEP_DISTANCES:
        conv, bp_fail, mw_fail = _converged_vs_mwpm_matched(d, 0.06, 4000)
        diag.append(f"d={d}: BP4M {bp_fail}/{conv}, MWPM {mw_fail}/{conv}")
    print("\n    matched diagnostic at p=0.06 (failures on BP4M-converged trials): " + "; ".join(diag))
    assert upper_ok and close_ok


# -- 7. determinism ----------------------------------------------------------


def test_criterion_7_determinism_across_workers(say):
    args = ([3, 5], [0.06, 0.12, 0.16], SWEEP_CFGS, 600)
    one = sweep(*args, master_seed=SEED + 7, workers=1, chunk=75)
    eight = sweep(*args, master_seed=SEED + 7, workers=8, chunk=75)
    a = repr(one.numeric_fields()).encode()
    b = repr(eight.numeric_fields()).encode()
    ok = a == b
    say("7", ok, f"numeric fields byte-identical with 1 vs 8 workers ({len(one.cells)} cells, {len(a)} bytes)")
    assert ok


# -- prior-mode record -------------------------------------------------------

REFERENCE_THRESHOLDS = {"BP4M": 0.124, "BP4MF": 0.125, "BP4M+M": 0.157}


def test_prior_mode_record(threshold_sweep, capsys):
    """Which prior parameter (2p/3 or p) lands closer to the reference thresholds.

    Informational: the literal-mode sweep uses fewer trials, so this only
    records the comparison and never fails on it.
    """
    literal = [DecoderConfig(v, LOG_N, prior_mode="literal") for v in ("BP4M+M", "BP4MF", "BP4M")]
    lit = sweep(SWEEP_DISTANCES, THRESHOLD_GRID, literal, 4000, master_seed=SEED + 8, workers=WORKERS)
    parts = []
    score = {"marginal": 0.0, "literal": 0.0}
    for v, ref in REFERENCE_THRESHOLDS.items():
        m = estimate_threshold(threshold_sweep, v, SWEEP_DISTANCES, p_min=0.08, n_boot=0).estimate
        lt = estimate_threshold(lit, f"{v}[prior=literal]", SWEEP_DISTANCES, n_boot=0).estimate
        for mode, val in (("marginal", m), ("literal", lt)):
            score[mode] += abs(val - ref) if val is not None else 1.0
        fmt = lambda x: "none" if x is None else f"{x:.4f}"
        parts.append(f"{v}: 2p/3 -> {fmt(m)}, p -> {fmt(lt)} (reference {ref})")
    closer = min(score, key=score.get)
    with capsys.disabled():
        print(f"\n[INFO] prior mode: {'; '.join(parts)}; closer overall: {closer}", flush=True)
