"""Command-line entry point: demo run, threshold/yield table, Monte Carlo, security report."""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import statevec as sv
from .bellsim import WernerParams
from .distill import HashingConfig, entropy, hashing_threshold, run_hashing
from .errors import BlindDistillError, DecodeAmbiguous, FidelityOutOfRange
from .mbqc import Pattern, chain_pattern, run_reference
from .protocol import run_double_server_distilled
from .security import run_security_suite

EXIT_OK, EXIT_PROTOCOL, EXIT_USAGE = 0, 1, 2

DEFAULTS = {
    "seed": 0,
    "fidelity": 1.0,
    "pairs": 8,
    "margin": 0.125,
    "pattern": None,
    "out": None,
    "broken_variant": False,
    "trials": 200,
}

THRESHOLD_HEADER = ["kind", "F", "entropy_bits", "yield_fraction"]
DISTILL_HEADER = ["F", "n", "epsilon", "rounds", "yield", "success_rate"]


class UsageError(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{round(x, 6) + 0.0:.6f}"


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str | None, name: str):
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    (path / name).write_text(text)


def default_pattern() -> Pattern:
    """Two-vertex chain, first vertex measured at pi/4."""
    return chain_pattern([1])


# --- commands ------------------------------------------------------------------

def cmd_demo(cfg: dict) -> int:
    pattern = Pattern.load(cfg["pattern"]) if cfg["pattern"] else default_pattern()
    hcfg = HashingConfig(int(cfg["pairs"]), float(cfg["margin"]))
    out = cfg["out"] or "."
    try:
        result = run_double_server_distilled(pattern, hcfg, WernerParams(cfg["fidelity"]), cfg["seed"])
    except DecodeAmbiguous as err:
        _emit(err.transcript.to_jsonl(), out, "transcript.jsonl")
        raise
    reference = run_reference(pattern, outcomes=result.outcomes)
    fid = sv.fidelity_mod_phase(result.output, reference.output)
    stats = result.stats
    report = {
        "schema_version": 1,
        "seed": cfg["seed"],
        "fidelity": _fmt(stats.fidelity),
        "pairs": stats.pairs,
        "margin": _fmt(hcfg.margin),
        "entropy_bits": _fmt(stats.entropy),
        "hashing_rounds": stats.rounds,
        "yield_pairs": stats.yield_pairs,
        "decode": "unique",
        "labels_match_ground_truth": result.hashing["labels"] == result.hashing["true_labels"],
        "outcomes": {str(v): b for v, b in sorted(result.outcomes.items())},
        "output_fidelity_vs_reference": _fmt(fid),
        "bob_to_bob_records": len(result.transcript.bob_to_bob()),
    }
    _emit(result.transcript.to_jsonl(), out, "transcript.jsonl")
    _emit(_dump_json(report), out, "report.json")
    return EXIT_OK


def threshold_table(grid=None) -> str:
    grid = grid if grid is not None else [round(0.70 + 0.01 * i, 2) for i in range(31)]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(THRESHOLD_HEADER)
    for f in grid:
        s = entropy(f)
        writer.writerow(["grid", _fmt(f), _fmt(s), _fmt(max(0.0, 1.0 - s))])
    f_star = hashing_threshold()
    writer.writerow(["threshold", _fmt(f_star), _fmt(entropy(f_star)), _fmt(0.0)])
    return buf.getvalue()


def cmd_threshold(cfg: dict) -> int:
    _emit(threshold_table(), cfg["out"], "threshold.csv")
    return EXIT_OK


def distill_row(fidelity: float, n: int, margin: float, trials: int, seed: int) -> list[str]:
    cfg = HashingConfig(n, margin)
    w = WernerParams(fidelity)
    rounds = cfg.rounds(w)
    ok = 0
    for child in np.random.SeedSequence(seed).spawn(trials):
        ok += run_hashing(cfg, w, np.random.default_rng(child)).recovered
    return [_fmt(fidelity), str(n), _fmt(margin), str(rounds), str(n - rounds), _fmt(ok / trials)]


def cmd_distill(cfg: dict) -> int:
    row = distill_row(cfg["fidelity"], int(cfg["pairs"]), cfg["margin"], int(cfg["trials"]), cfg["seed"])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(DISTILL_HEADER)
    writer.writerow(row)
    _emit(buf.getvalue(), cfg["out"], "distill.csv")
    return EXIT_OK


def cmd_blindness(cfg: dict) -> int:
    audit = None
    try:
        audit = run_double_server_distilled(default_pattern(), HashingConfig(8), WernerParams(1.0),
                                            cfg["seed"]).transcript
    except BlindDistillError:
        pass
    report = run_security_suite(cfg["broken_variant"], audit, cfg["seed"])
    _emit(_dump_json(report.to_dict()), cfg["out"], "blindness_report.json")
    return EXIT_OK if report.passed else EXIT_PROTOCOL


COMMANDS = {"demo": cmd_demo, "threshold": cmd_threshold, "distill": cmd_distill, "blindness": cmd_blindness}


# --- argument handling -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blind-distill",
                                     description="Double-server blind computation with hashing distillation")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON file with the same keys as the flags")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--fidelity", type=float)
    parser.add_argument("--pairs", type=int)
    parser.add_argument("--margin", type=float)
    parser.add_argument("--trials", type=int)
    parser.add_argument("--pattern")
    parser.add_argument("--out")
    parser.add_argument("--broken-variant", action="store_true", default=None)
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as err:
            raise UsageError(f"cannot read config file: {err}") from err
        loaded = {k.replace("-", "_"): v for k, v in loaded.items()}
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in DEFAULTS:
        value = getattr(args, key)
        if value is not None:
            cfg[key] = value
    if not 0 <= int(cfg["seed"]) < 2**64:
        raise UsageError("seed must be a 64-bit unsigned integer")
    try:
        WernerParams(float(cfg["fidelity"]))
    except FidelityOutOfRange as err:
        raise UsageError(str(err)) from err
    if int(cfg["trials"]) < 1:
        raise UsageError("trials must be positive")
    return cfg


def _error_json(code: str, message: str) -> str:
    return json.dumps({"error": code, "message": message}, sort_keys=True) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args)
    except UsageError as err:
        sys.stderr.write(_error_json("UsageError", str(err)))
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](cfg)
    except BlindDistillError as err:
        sys.stderr.write(_error_json(err.code, str(err)))
        return EXIT_PROTOCOL
    except OSError as err:
        sys.stderr.write(_error_json("IOError", str(err)))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
