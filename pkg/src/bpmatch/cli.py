"""Command line front end: ``bpmatch sweep | threshold | decode-one``.

Exit codes: 0 success, 2 invalid configuration, 3 I/O failure, 4 CSV schema error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from pathlib import Path

from . import __version__
from .code import logical_failure, syndrome
from .decoders import DecoderConfig, decode
from .graph import build_decoding_graph
from .harness import SweepCell, SweepResult, code_context, estimate_threshold, p_key, sweep
from .noise import marginal_flip_rate, sample_depolarizing, trial_rng

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_SCHEMA = 4

WORKERS_ENV = "BPMATCH_WORKERS"

CSV_COLUMNS = (
    "decoder", "schedule", "d", "p", "trials", "failures", "ler", "ler_stderr",
    "converged_trials", "converged_failures", "converged_ler", "r_nc", "mean_iters", "mean_decode_ns",
)

SWEEP_KEYS = {
    "decoders": str,
    "schedule": str,
    "distances": str,
    "p_start": float,
    "p_stop": float,
    "p_step": float,
    "p_grid": str,
    "trials": int,
    "prior_mode": str,
    "literal_prior_freeze": str,
    "weight_metric": str,
    "seed": int,
    "workers": int,
    "out": str,
    "json": str,
}


class ConfigError(Exception):
    pass


class SchemaError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    return [int(x) for x in str(text).replace(" ", "").split(",") if x]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in str(text).replace(" ", "").split(",") if x]


def _as_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def read_config_file(path) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in SWEEP_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = SWEEP_KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return values


def p_grid_from(start: float, stop: float, step: float) -> list[float]:
    if step <= 0:
        raise ConfigError("p_step must be positive")
    if stop < start:
        raise ConfigError("p_stop must not be below p_start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 12) for k in range(count)]


def build_id() -> str:
    """Git-style content hash of the package sources."""
    root = Path(__file__).resolve().parent
    digest = hashlib.sha1()
    for path in sorted(root.glob("*.py")):
        data = path.read_bytes()
        blob = hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()
        digest.update(f"{path.name} {blob}\n".encode())
    return digest.hexdigest()[:12]


def _resolve_sweep(args) -> dict:
    cfg = {
        "decoders": "BP4M",
        "schedule": "log_n",
        "distances": "3,5,7",
        "p_start": 0.02,
        "p_stop": 0.18,
        "p_step": 0.02,
        "p_grid": None,
        "trials": 1000,
        "prior_mode": "marginal",
        "literal_prior_freeze": False,
        "weight_metric": "matching",
        "seed": 0,
        "workers": int(os.environ.get(WORKERS_ENV, "1") or 1),
        "out": "sweep.csv",
        "json": None,
    }
    if args.config:
        cfg.update(read_config_file(args.config))
    for key in SWEEP_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg


def _sweep_plan(cfg: dict):
    try:
        names = [x for x in str(cfg["decoders"]).replace(" ", "").split(",") if x]
        if not names:
            raise ConfigError("no decoders given")
        freeze = _as_bool(cfg["literal_prior_freeze"])
        decoders = [
            DecoderConfig(variant=name, schedule=cfg["schedule"], prior_mode=cfg["prior_mode"],
                          literal_prior_freeze=freeze, weight_metric=cfg["weight_metric"])
            for name in names
        ]
        distances = _int_list(cfg["distances"])
        if cfg.get("p_grid"):
            grid = _float_list(cfg["p_grid"])
        else:
            grid = p_grid_from(float(cfg["p_start"]), float(cfg["p_stop"]), float(cfg["p_step"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if not distances or any(d < 3 or d % 2 == 0 for d in distances):
        raise ConfigError("distances must be odd integers >= 3")
    if not grid or any(not 0 <= p < 1 for p in grid):
        raise ConfigError("p grid must be non-empty with values in [0, 1)")
    if int(cfg["trials"]) < 1:
        raise ConfigError("trials must be >= 1")
    if cfg["prior_mode"] == "literal" and any(p >= 0.5 for p in grid):
        raise ConfigError("literal prior mode needs p < 0.5")
    return decoders, distances, grid


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(result: SweepResult, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in result.rows():
            writer.writerow([_fmt(row[k]) for k in CSV_COLUMNS])


def summary(result: SweepResult, cfg: dict) -> dict:
    rows = []
    for cell in result.cells:
        row = cell.row()
        row.update(
            r_nc_sector=cell.r_nc_sector,
            nonconverged_z=cell.nonconverged_z,
            nonconverged_x=cell.nonconverged_x,
            mwpm_calls=cell.mwpm_calls,
        )
        rows.append({k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in row.items()})
    return {
        "build_id": build_id(),
        "version": __version__,
        "config": {k: v for k, v in cfg.items()},
        "sweep": result.config,
        "rows": rows,
    }


def cmd_sweep(args) -> int:
    cfg = _resolve_sweep(args)
    decoders, distances, grid = _sweep_plan(cfg)
    out = Path(cfg["out"])
    json_path = Path(cfg["json"]) if cfg.get("json") else out.with_suffix(".json")
    for target in (out, json_path):
        if target.parent and not target.parent.exists():
            raise OSError(f"directory does not exist: {target.parent}")
    result = sweep(distances, grid, decoders, int(cfg["trials"]), int(cfg["seed"]), int(cfg["workers"]))
    write_csv(result, out)
    json_path.write_text(json.dumps(summary(result, cfg), indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(result.cells)} rows to {out} and summary to {json_path}")
    return EXIT_OK


def read_sweep_csv(path) -> SweepResult:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError:
        raise
    with fh:
        reader = csv.DictReader(fh)
        missing = [c for c in CSV_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise SchemaError(f"{path}: missing columns {', '.join(missing)}")
        cells = []
        for lineno, row in enumerate(reader, start=2):
            try:
                trials = int(row["trials"])
                cells.append(SweepCell(
                    decoder=row["decoder"], schedule=row["schedule"], d=int(row["d"]), p=float(row["p"]),
                    trials=trials, failures=int(row["failures"]),
                    converged_trials=int(row["converged_trials"]),
                    converged_failures=int(row["converged_failures"]),
                    nonconverged_z=0, nonconverged_x=0, mwpm_calls=0,
                    iterations=int(round(float(row["mean_iters"]) * 2 * trials)),
                    decode_ns=int(round(float(row["mean_decode_ns"]) * trials)),
                ))
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from exc
    return SweepResult(cells=cells, master_seed=-1)


def cmd_threshold(args) -> int:
    result = read_sweep_csv(args.csv)
    schedule = args.schedule
    decoders = [args.decoder] if args.decoder else sorted({c.decoder for c in result.cells})
    reports = []
    for name in decoders:
        dists = _int_list(args.distances) if args.distances else result.distances(name, schedule)
        if not dists:
            raise ConfigError(f"no rows for decoder {name!r}")
        if len(dists) < 2:
            raise ConfigError(f"decoder {name!r}: threshold needs at least two distances, got {dists}")
        try:
            est = estimate_threshold(result, name, dists, schedule=schedule, p_min=args.p_min,
                                     p_max=args.p_max, n_boot=args.bootstrap, seed=args.seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        report = est.to_dict()
        report["schedule"] = schedule
        reports.append(report)
    text = json.dumps({"build_id": build_id(), "thresholds": reports}, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _support(bits) -> list[int]:
    return [int(k) for k, b in enumerate(bits) if b]


def cmd_decode_one(args) -> int:
    if args.d < 3 or args.d % 2 == 0:
        raise ConfigError("d must be an odd integer >= 3")
    if not 0 <= args.p < 1:
        raise ConfigError("p must lie in [0, 1)")
    cfg = DecoderConfig(variant=args.decoder, schedule=args.schedule, prior_mode=args.prior_mode)
    code, m_z, m_x = code_context(args.d)
    rng = trial_rng(args.seed, args.d, p_key(args.p), args.trial)
    err = sample_depolarizing(code.n_qubits, args.p, rng)
    out = sys.stdout
    out.write(f"# decode-one d={args.d} p={args.p!r} decoder={cfg.name} seed={args.seed} trial={args.trial}\n")
    out.write(f"error x_part: {_support(err.x_part)}\n")
    out.write(f"error z_part: {_support(err.z_part)}\n")
    any_fail = False
    for part, ptype, metric in ((err.z_part, "Z", m_z), (err.x_part, "X", m_x)):
        syn = syndrome(code, part, ptype)
        out.write(f"\n[{ptype} errors] syndrome (unsatisfied checks): {list(syn.unsatisfied)}\n")
        if syn.s:
            graph = build_decoding_graph(syn, metric, marginal_flip_rate(args.p, cfg.prior_mode))
            out.write("decoding graph edges (var, i, j|b_i, w, prior):\n")
            out.write(graph.dump())
        outcome = decode(syn, metric, args.p, cfg)
        for step, conv, weight in outcome.trace:
            label = f"t={step}" if isinstance(step, int) else str(step)
            out.write(f"  {label}: converged={conv} weight={weight}\n")
        cand = outcome.candidate
        failed = logical_failure(code, part, cand.e_hat, ptype)
        any_fail = any_fail or failed
        if syn.s:
            edges = []
            for k in sorted(cand.selected):
                i, j, w, _ = graph.edge(k)
                edges.append(f"{i}-b{i}" if j is None else f"{i}-{j}")
        else:
            edges = []
        out.write(f"candidate: source={cand.source} iteration={cand.iteration} weight={cand.weight} "
                  f"edges={edges}\n")
        out.write(f"correction support: {_support(cand.e_hat)}\n")
        out.write(f"converged_via_marginalization={outcome.converged_via_marginalization} "
                  f"mwpm_invoked={outcome.mwpm_invoked} logical_failure={failed}\n")
    out.write(f"\nverdict: {'LOGICAL FAILURE' if any_fail else 'success'}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bpmatch", description="BP-on-decoding-graph decoders for the surface code")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sweep", help="Monte Carlo sweep over decoders, distances and error rates")
    sp.add_argument("--config", help="flat key = value file; flags override it")
    sp.add_argument("--decoders", help="comma list of BP4M, BP4MF, BP4M+M, MWPM")
    sp.add_argument("--schedule", help="log_n, sqrt_n or fixed:T")
    sp.add_argument("--distances", help="comma list of odd distances")
    sp.add_argument("--p-start", dest="p_start", type=float)
    sp.add_argument("--p-stop", dest="p_stop", type=float)
    sp.add_argument("--p-step", dest="p_step", type=float)
    sp.add_argument("--p-grid", dest="p_grid", help="explicit comma list of p values")
    sp.add_argument("--trials", type=int)
    sp.add_argument("--prior-mode", dest="prior_mode", choices=("marginal", "literal"))
    sp.add_argument("--literal-prior-freeze", dest="literal_prior_freeze", action="store_const", const=True)
    sp.add_argument("--weight-metric", dest="weight_metric", choices=("matching", "qubits"))
    sp.add_argument("--seed", type=int)
    sp.add_argument("--workers", type=int, help=f"worker processes (default ${WORKERS_ENV} or 1)")
    sp.add_argument("--out", help="CSV output path")
    sp.add_argument("--json", help="JSON summary path (default: CSV path with .json)")
    sp.set_defaults(func=cmd_sweep)

    tp = sub.add_parser("threshold", help="estimate thresholds from a sweep CSV")
    tp.add_argument("csv")
    tp.add_argument("--decoder", help="decoder column value (default: every decoder)")
    tp.add_argument("--schedule", default=None)
    tp.add_argument("--distances", help="comma list; default all in the CSV")
    tp.add_argument("--p-min", dest="p_min", type=float)
    tp.add_argument("--p-max", dest="p_max", type=float)
    tp.add_argument("--bootstrap", type=int, default=200)
    tp.add_argument("--seed", type=int, default=0)
    tp.add_argument("--out")
    tp.set_defaults(func=cmd_threshold)

    dp = sub.add_parser("decode-one", help="decode one sampled error and print a trace")
    dp.add_argument("--d", type=int, default=5)
    dp.add_argument("--p", type=float, default=0.1)
    dp.add_argument("--decoder", default="BP4M")
    dp.add_argument("--schedule", default="log_n")
    dp.add_argument("--prior-mode", dest="prior_mode", default="marginal", choices=("marginal", "literal"))
    dp.add_argument("--seed", type=int, default=0)
    dp.add_argument("--trial", type=int, default=0)
    dp.set_defaults(func=cmd_decode_one)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"bpmatch: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SchemaError as exc:
        print(f"bpmatch: schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"bpmatch: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"bpmatch: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
