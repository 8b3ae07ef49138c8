"""Monte Carlo trials, sweeps over (decoder, distance, p) and threshold estimates."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .code import CodeSpec, build_surface_code, logical_failure, syndrome
from .decoders import DecoderConfig, decode_variants
from .graph import MetricTable, precompute_metric
from .noise import sample_depolarizing, trial_rng

CHUNK = 500


@lru_cache(maxsize=None)
def code_context(d: int) -> tuple[CodeSpec, MetricTable, MetricTable]:
    """Code plus metric tables for the Z sector (X checks) and X sector (Z checks)."""
    code = build_surface_code(d)
    return code, precompute_metric(code, "Z"), precompute_metric(code, "X")


def p_key(p: float) -> int:
    return int(round(p * 1e9))


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of one trial for one decoder, both Pauli sectors combined.

    ``converged`` needs marginalization to converge in both sectors; the
    per-sector flags are kept as well.
    """

    trial_index: int
    logical_fail: bool
    fail_z: bool
    fail_x: bool
    converged: bool
    converged_z: bool
    converged_x: bool
    mwpm_invoked: bool
    weight_z: int
    weight_x: int
    iterations: int
    decode_ns: int


def run_trials(code: CodeSpec, metrics, p: float, cfgs, master_seed: int, trial_index: int) -> list[TrialRecord]:
    """One sampled error decoded by every config (common random numbers)."""
    rng = trial_rng(master_seed, code.distance, p_key(p), trial_index)
    err = sample_depolarizing(code.n_qubits, p, rng)
    m_z, m_x = metrics
    per_sector = []
    for part, ptype, metric in ((err.z_part, "Z", m_z), (err.x_part, "X", m_x)):
        syn = syndrome(code, part, ptype)
        outs = decode_variants(syn, metric, p, cfgs)
        fails = [logical_failure(code, part, o.candidate.e_hat, ptype) for o in outs]
        per_sector.append((outs, fails))

    (outs_z, fails_z), (outs_x, fails_x) = per_sector
    records = []
    for k, cfg in enumerate(cfgs):
        oz, ox = outs_z[k], outs_x[k]
        always = cfg.variant == "MWPM"
        cz = always or oz.converged_via_marginalization
        cx = always or ox.converged_via_marginalization
        records.append(TrialRecord(
            trial_index=trial_index,
            logical_fail=fails_z[k] or fails_x[k],
            fail_z=fails_z[k],
            fail_x=fails_x[k],
            converged=cz and cx,
            converged_z=cz,
            converged_x=cx,
            mwpm_invoked=oz.mwpm_invoked or ox.mwpm_invoked,
            weight_z=oz.candidate.weight,
            weight_x=ox.candidate.weight,
            iterations=oz.iterations_run + ox.iterations_run,
            decode_ns=oz.decode_ns + ox.decode_ns,
        ))
    return records


def run_trial(code: CodeSpec, p: float, cfg: DecoderConfig, master_seed: int, trial_index: int) -> TrialRecord:
    """Sample, decode both sectors and judge one trial; deterministic in the seed pair."""
    _, m_z, m_x = code_context(code.distance)
    return run_trials(code, (m_z, m_x), p, [cfg], master_seed, trial_index)[0]


_COUNTERS = (
    "trials", "failures", "converged_trials", "converged_failures",
    "nonconverged_z", "nonconverged_x", "mwpm_calls", "iterations", "decode_ns",
)


def _tally(d: int, p: float, cfgs, master_seed: int, start: int, stop: int) -> dict:
    code, m_z, m_x = code_context(d)
    acc = {cfg: dict.fromkeys(_COUNTERS, 0) for cfg in cfgs}
    for idx in range(start, stop):
        for cfg, rec in zip(cfgs, run_trials(code, (m_z, m_x), p, cfgs, master_seed, idx)):
            a = acc[cfg]
            a["trials"] += 1
            a["failures"] += rec.logical_fail
            a["converged_trials"] += rec.converged
            a["converged_failures"] += rec.converged and rec.logical_fail
            a["nonconverged_z"] += not rec.converged_z
            a["nonconverged_x"] += not rec.converged_x
            a["mwpm_calls"] += rec.mwpm_invoked
            a["iterations"] += rec.iterations
            a["decode_ns"] += rec.decode_ns
    return {"d": d, "p": p, "counts": [acc[cfg] for cfg in cfgs]}


def _tally_task(args):
    return _tally(*args)


@dataclass(frozen=True)
class SweepCell:
    decoder: str
    schedule: str
    d: int
    p: float
    trials: int
    failures: int
    converged_trials: int
    converged_failures: int
    nonconverged_z: int
    nonconverged_x: int
    mwpm_calls: int
    iterations: int
    decode_ns: int

    @property
    def ler(self) -> float:
        return self.failures / self.trials

    @property
    def ler_stderr(self) -> float:
        return math.sqrt(self.ler * (1.0 - self.ler) / self.trials)

    @property
    def converged_ler(self) -> float:
        if self.converged_trials == 0:
            return float("nan")
        return self.converged_failures / self.converged_trials

    @property
    def converged_ler_stderr(self) -> float:
        if self.converged_trials == 0:
            return float("nan")
        q = self.converged_ler
        return math.sqrt(q * (1.0 - q) / self.converged_trials)

    @property
    def r_nc(self) -> float:
        return (self.trials - self.converged_trials) / self.trials

    @property
    def r_nc_sector(self) -> float:
        """Non-converged sector decodes over all sector decodes."""
        return (self.nonconverged_z + self.nonconverged_x) / (2 * self.trials)

    @property
    def mean_iters(self) -> float:
        """Mean BP iterations per sector decode."""
        return self.iterations / (2 * self.trials)

    @property
    def mean_decode_ns(self) -> float:
        return self.decode_ns / self.trials

    def row(self) -> dict:
        return {
            "decoder": self.decoder,
            "schedule": self.schedule,
            "d": self.d,
            "p": self.p,
            "trials": self.trials,
            "failures": self.failures,
            "ler": self.ler,
            "ler_stderr": self.ler_stderr,
            "converged_trials": self.converged_trials,
            "converged_failures": self.converged_failures,
            "converged_ler": self.converged_ler,
            "r_nc": self.r_nc,
            "mean_iters": self.mean_iters,
            "mean_decode_ns": self.mean_decode_ns,
        }

    def numeric_fields(self) -> tuple:
        """Every statistic that must be reproducible from the seed (timing excluded)."""
        return (
            self.trials, self.failures, self.converged_trials, self.converged_failures,
            self.nonconverged_z, self.nonconverged_x, self.mwpm_calls, self.iterations,
            repr(self.ler), repr(self.ler_stderr), repr(self.converged_ler),
            repr(self.r_nc), repr(self.mean_iters),
        )


def decoder_label(cfg: DecoderConfig) -> str:
    """Decoder column: the variant plus any non-default options."""
    label = cfg.variant
    extras = []
    if cfg.prior_mode != "marginal":
        extras.append(f"prior={cfg.prior_mode}")
    if cfg.literal_prior_freeze:
        extras.append("freeze")
    if cfg.weight_metric != "matching":
        extras.append(f"weight={cfg.weight_metric}")
    if extras:
        label += "[" + ",".join(extras) + "]"
    return label


def schedule_label(cfg: DecoderConfig) -> str:
    return "none" if cfg.variant == "MWPM" else cfg.schedule


@dataclass
class SweepResult:
    cells: list
    master_seed: int
    config: dict = field(default_factory=dict)

    def cell(self, decoder: str, d: int, p: float, schedule: str | None = None) -> SweepCell:
        for c in self.cells:
            if c.decoder == decoder and c.d == d and math.isclose(c.p, p, abs_tol=1e-12):
                if schedule is None or c.schedule == schedule:
                    return c
        raise KeyError((decoder, schedule, d, p))

    def curve(self, decoder: str, d: int, schedule: str | None = None) -> list:
        out = [c for c in self.cells if c.decoder == decoder and c.d == d
               and (schedule is None or c.schedule == schedule)]
        return sorted(out, key=lambda c: c.p)

    def distances(self, decoder: str, schedule: str | None = None) -> list[int]:
        return sorted({c.d for c in self.cells if c.decoder == decoder
                       and (schedule is None or c.schedule == schedule)})

    def rows(self) -> list[dict]:
        return [c.row() for c in self.cells]

    def numeric_fields(self) -> list:
        return [(c.decoder, c.schedule, c.d, repr(c.p)) + c.numeric_fields() for c in self.cells]


def sweep(distances, p_grid, cfgs, trials: int, master_seed: int = 0, workers: int = 1,
          chunk: int = CHUNK) -> SweepResult:
    """Run ``trials`` trials per (d, p) for every config and aggregate them.

    All configs see the same sampled errors. Trials are split into chunks of
    consecutive indices; since every trial draws from its own counter-keyed
    stream and the tallies are integer sums, the result does not depend on
    ``workers`` or scheduling order.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cfgs = list(cfgs)
    if not cfgs:
        raise ValueError("need at least one decoder config")
    distances = [int(d) for d in distances]
    p_grid = [float(p) for p in p_grid]
    if not distances or not p_grid:
        raise ValueError("distances and p grid must be non-empty")
    tasks = [
        (d, p, cfgs, master_seed, start, min(start + chunk, trials))
        for d in distances for p in p_grid for start in range(0, trials, chunk)
    ]
    if workers <= 1:
        parts = [_tally_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_tally_task, tasks))

    totals: dict = {}
    for part in parts:
        for cfg, counts in zip(cfgs, part["counts"]):
            key = (cfg, part["d"], part["p"])
            acc = totals.setdefault(key, dict.fromkeys(_COUNTERS, 0))
            for name in _COUNTERS:
                acc[name] += counts[name]
    cells = [
        SweepCell(decoder=decoder_label(cfg), schedule=schedule_label(cfg), d=d, p=p, **totals[(cfg, d, p)])
        for cfg in cfgs for d in distances for p in p_grid
    ]
    config = {
        "distances": distances,
        "p_grid": p_grid,
        "trials": trials,
        "master_seed": master_seed,
        "decoders": [asdict(cfg) for cfg in cfgs],
    }
    return SweepResult(cells=cells, master_seed=master_seed, config=config)


# -- threshold estimation ---------------------------------------------------


def _log_rate(failures, trials):
    failures = np.asarray(failures, dtype=float)
    trials = np.asarray(trials, dtype=float)
    # Zero counts get half an event so the logarithm stays finite.
    return np.log(np.maximum(failures, 0.5) / trials)


def crossing_point(p, y_small, y_large) -> float | None:
    """First p where ``y_large - y_small`` turns from negative to non-negative.

    The difference is interpolated linearly between grid points. Returns
    ``None`` when there is no such sign change on the grid.
    """
    p = np.asarray(p, dtype=float)
    diff = np.asarray(y_large, dtype=float) - np.asarray(y_small, dtype=float)
    for k in range(len(p) - 1):
        a, b = diff[k], diff[k + 1]
        if a < 0 <= b:
            if b == 0:
                return float(p[k + 1])
            return float(p[k] + (p[k + 1] - p[k]) * (-a) / (b - a))
    return None


@dataclass(frozen=True)
class ThresholdEstimate:
    decoder: str
    distances: tuple
    crossings: dict
    estimate: float | None
    ci: tuple | None
    pseudo_thresholds: dict
    p_range: tuple

    @property
    def out_of_range(self) -> bool:
        return self.estimate is None

    def to_dict(self) -> dict:
        return {
            "decoder": self.decoder,
            "distances": list(self.distances),
            "crossings": {f"{a}-{b}": v for (a, b), v in self.crossings.items()},
            "estimate": self.estimate,
            "ci": list(self.ci) if self.ci is not None else None,
            "out_of_range": self.out_of_range,
            "pseudo_thresholds": {str(d): v for d, v in self.pseudo_thresholds.items()},
            "p_range": list(self.p_range),
        }


def _curves_from_counts(p, failures, trials, dists):
    logs = {d: _log_rate(failures[d], trials[d]) for d in dists}
    crossings = {}
    for a, b in zip(dists, dists[1:]):
        crossings[(a, b)] = crossing_point(p, logs[a], logs[b])
    return crossings


def estimate_threshold(result: SweepResult, decoder: str, distances=None, schedule: str | None = None,
                       p_min: float | None = None, p_max: float | None = None,
                       n_boot: int = 200, seed: int = 0, confidence: float = 0.95) -> ThresholdEstimate:
    """Threshold from crossings of consecutive-distance LER curves.

    The aggregate is the mean of the pairwise crossings; the confidence
    interval comes from a parametric bootstrap that redraws every failure
    count from its binomial. Pseudo-thresholds are where LER equals p.
    """
    dists = sorted(distances) if distances is not None else result.distances(decoder, schedule)
    if len(dists) < 2:
        raise ValueError("threshold estimation needs at least two distances")
    curves = {}
    for d in dists:
        cells = [c for c in result.curve(decoder, d, schedule)
                 if (p_min is None or c.p >= p_min - 1e-12) and (p_max is None or c.p <= p_max + 1e-12)]
        if len(cells) < 2:
            raise ValueError(f"decoder {decoder!r} d={d}: need at least two grid points")
        curves[d] = cells
    p = np.array([c.p for c in curves[dists[0]]])
    for d in dists[1:]:
        if not np.allclose([c.p for c in curves[d]], p):
            raise ValueError("distances do not share a common p grid")
    failures = {d: np.array([c.failures for c in curves[d]]) for d in dists}
    trials = {d: np.array([c.trials for c in curves[d]]) for d in dists}

    crossings = _curves_from_counts(p, failures, trials, dists)
    found = [v for v in crossings.values() if v is not None]
    estimate = float(np.mean(found)) if found and len(found) == len(crossings) else None

    ci = None
    if estimate is not None and n_boot > 0:
        rng = np.random.default_rng(seed)
        rates = {d: failures[d] / trials[d] for d in dists}
        samples = []
        for _ in range(n_boot):
            redrawn = {d: rng.binomial(trials[d], rates[d]) for d in dists}
            boot = _curves_from_counts(p, redrawn, trials, dists)
            vals = [v for v in boot.values() if v is not None]
            if len(vals) == len(boot):
                samples.append(float(np.mean(vals)))
        if samples:
            alpha = (1.0 - confidence) / 2.0
            ci = (float(np.quantile(samples, alpha)), float(np.quantile(samples, 1.0 - alpha)))

    pseudo = {}
    for d in dists:
        pseudo[d] = crossing_point(p, np.log(p), _log_rate(failures[d], trials[d]))
    return ThresholdEstimate(
        decoder=decoder,
        distances=tuple(dists),
        crossings=crossings,
        estimate=estimate,
        ci=ci,
        pseudo_thresholds=pseudo,
        p_range=(float(p[0]), float(p[-1])),
    )
