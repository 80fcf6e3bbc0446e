"""Batch command line front end.

Exit codes: 0 success, 1 usage or I/O error, 2 a checked invariant failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .chsh import (
    canonical_settings,
    first_violating,
    fmt,
    sweep_to_csv,
    sweep_to_records,
    violation_sweep,
)
from .lhv_model import (
    enumerate_deterministic_chsh,
    loophole_demo_model,
    loophole_report,
    marginal_consistency_demo,
    max_deterministic_chsh,
)
from .measurement import (
    BRANCH_LABELS,
    CSV_COLUMNS,
    ProtocolRecords,
    branch_frequencies,
    empirical_chsh,
    filter_projectors,
    run_protocol_exact,
    sample_protocol,
)
from .quantum_core import QuantumError, eig_hermitian, frobenius_distance, hermiticity_deviation, trace
from .werner_states import check_d, flip_from_singlets, flip_operator, werner

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT = 0, 1, 2
COMMANDS = ("werner-check", "sweep", "simulate", "lhv-bound", "lhv-loophole", "lhv-marginals")
SAMPLE_CHUNK = 250_000


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    d: int = 5
    d_min: int = 2
    d_max: int = 10
    trials: int = 100_000
    seed: int = 0
    output_path: str | None = None
    format: str = "csv"

    def validate(self) -> RunConfig:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        try:
            if self.command in ("werner-check", "simulate"):
                check_d(self.d)
            if self.command == "sweep":
                check_d(self.d_min)
                check_d(self.d_max)
                if self.d_min > self.d_max:
                    raise UsageError(f"--d-min {self.d_min} exceeds --d-max {self.d_max}")
        except QuantumError as exc:
            raise UsageError(str(exc)) from None
        if self.trials < 1:
            raise UsageError("--trials must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise UsageError("--seed must fit in 64 unsigned bits")
        return self


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nonlocality", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_, *flags):
        p = sub.add_parser(name, help=help_)
        for flag in flags:
            flag(p)
        return p

    def out(p):
        p.add_argument("--out", dest="output_path", default=None, help="output file")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    add("werner-check", "validate the Werner matrix and the flip identity",
        lambda p: p.add_argument("--d", type=int, required=True), out)
    add("sweep", "CHSH value of the filtered Werner state over a range of d",
        lambda p: p.add_argument("--d-min", type=int, default=2),
        lambda p: p.add_argument("--d-max", type=int, default=10), out)
    add("simulate", "Monte Carlo sampling of the two-stage protocol",
        lambda p: p.add_argument("--d", type=int, default=5),
        lambda p: p.add_argument("--trials", type=int, default=100_000),
        lambda p: p.add_argument("--seed", type=int, default=0), out)
    for name, help_ in (("lhv-bound", "deterministic CHSH bound"),
                        ("lhv-loophole", "post-selection witness model"),
                        ("lhv-marginals", "averaged vs per-component marginals")):
        add(name, help_, out)
    return parser


def _write(path: str | None, text: str) -> None:
    if path is None:
        return
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None


def _json_doc(cfg: RunConfig, data, indent: int | None = 2, **meta) -> str:
    head = {"command": cfg.command, "version": __version__, **meta}
    return json.dumps({"meta": head, "data": data}, indent=indent) + "\n"


def _kv_csv(items: dict) -> str:
    lines = ["key,value"] + [f"{k},{fmt(v) if isinstance(v, float) else v}" for k, v in items.items()]
    return "\r\n".join(lines) + "\r\n"


def cmd_werner_check(cfg: RunConfig) -> int:
    d = cfg.d
    rho = werner(d, validate=False).rho
    v = flip_operator(d)
    w, _ = eig_hermitian(rho)
    report = {
        "trace": float(trace(rho).real),
        "hermiticity_deviation": hermiticity_deviation(rho),
        "min_eigenvalue": float(w[0]),
        "flip_identity_residual": frobenius_distance(v, flip_from_singlets(d)),
        "flip_involution_residual": frobenius_distance(v @ v, np.eye(d * d)),
    }
    checks = {
        "trace": abs(report["trace"] - 1) <= 1e-9,
        "hermitian": report["hermiticity_deviation"] <= 1e-9,
        "psd": report["min_eigenvalue"] >= -1e-9,
        "flip_identity": report["flip_identity_residual"] <= 1e-10,
        "flip_involution": report["flip_involution_residual"] <= 1e-12,
    }
    p_local, _ = filter_projectors(d)
    filters_trivial = bool(np.allclose(p_local, np.eye(d)))
    for key, val in report.items():
        print(f"{key}: {val:.3e}")
    for key, ok in checks.items():
        print(f"{key}: {'pass' if ok else 'FAIL'}")
    if filters_trivial:
        print("note: at d=2 the filters P and Q are the identity, so filtering is trivial")
    passed = all(checks.values())
    data = {**report, "checks": checks, "passed": passed, "filters_trivial": filters_trivial}
    if cfg.format == "json":
        _write(cfg.output_path, _json_doc(cfg, data, d=d))
    else:
        _write(cfg.output_path, _kv_csv({**report, **checks, "passed": passed}))
    return EXIT_OK if passed else EXIT_INVARIANT


def cmd_sweep(cfg: RunConfig) -> int:
    rows = violation_sweep(cfg.d_min, cfg.d_max)
    if cfg.format == "json":
        text = _json_doc(cfg, sweep_to_records(rows), d_min=cfg.d_min, d_max=cfg.d_max)
    else:
        text = sweep_to_csv(rows)
    _write(cfg.output_path, text)
    if cfg.output_path is None:
        sys.stdout.write(text)
    first = first_violating(rows)
    print(f"first violating d: {first if first is not None else 'none'}")
    return EXIT_OK


def simulate(d: int, trials: int, seed: int):
    """Sample in fixed-size chunks; the result does not depend on the chunking."""
    stats = run_protocol_exact(d, canonical_settings(d))
    chunks = [
        sample_protocol(seed, d, trials=min(SAMPLE_CHUNK, trials - s), start=s, stats=stats)
        for s in range(0, trials, SAMPLE_CHUNK)
    ]
    cols = {c: np.concatenate([getattr(ch, c) for ch in chunks]) for c in CSV_COLUMNS}
    records = ProtocolRecords(**cols, meta={"seed": seed, "d": d, "trials": trials})
    return stats, records


def cmd_simulate(cfg: RunConfig) -> int:
    stats, records = simulate(cfg.d, cfg.trials, cfg.seed)
    exact = stats.chsh((1, 1))
    try:
        value, se = empirical_chsh(records)
    except QuantumError:
        value, se = float("nan"), float("nan")
    z = (value - exact) / se if se and np.isfinite(se) and se > 0 else float("nan")
    freqs = branch_frequencies(records)
    summary = {
        "empirical_chsh_11": value,
        "standard_error": se,
        "exact_chsh_11": exact,
        "z_score": z,
        "branch_frequencies": {f"{p}{q}": freqs[p, q] for p, q in BRANCH_LABELS},
        "branch_probabilities": {f"{p}{q}": stats.branch_probabilities[p, q] for p, q in BRANCH_LABELS},
    }
    if cfg.output_path is not None:
        try:
            if cfg.format == "json":
                data = {
                    "summary": summary,
                    "columns": list(CSV_COLUMNS),
                    "records": records.columns().tolist(),
                }
                _write(cfg.output_path, _json_doc(
                    cfg, data, indent=None, d=cfg.d, seed=cfg.seed, trials=cfg.trials
                ))
            else:
                records.to_csv(cfg.output_path)
        except OSError as exc:
            raise UsageError(f"cannot write {cfg.output_path}: {exc}") from None
    print(f"empirical CHSH in subensemble 11: {fmt(value)} +- {fmt(se)}")
    print(f"exact CHSH in subensemble 11: {fmt(exact)}")
    print(f"z-score: {z:.3f}")
    for (p, q) in BRANCH_LABELS:
        print(f"branch {p}{q}: frequency {fmt(freqs[p, q])}, exact {fmt(stats.branch_probabilities[p, q])}")
    return EXIT_OK


def cmd_lhv_bound(cfg: RunConfig) -> int:
    table = enumerate_deterministic_chsh()
    bound = max_deterministic_chsh()
    data = {
        "max_chsh": bound,
        "min_chsh": min(table.values()),
        "pairs": len(table),
        "maximizers": sum(v == bound for v in table.values()),
    }
    print(bound)
    if cfg.format == "json":
        _write(cfg.output_path, _json_doc(cfg, data))
    else:
        _write(cfg.output_path, _kv_csv(data))
    return EXIT_OK if bound == 2 else EXIT_INVARIANT


def cmd_lhv_loophole(cfg: RunConfig) -> int:
    report = loophole_report(loophole_demo_model())
    print(f"postselected CHSH: {fmt(report['postselected_chsh'])}")
    print(f"full-ensemble CHSH: {fmt(report['full_ensemble_chsh'])}")
    doc = _json_doc(cfg, report)
    print(doc, end="")
    if cfg.format == "json":
        _write(cfg.output_path, doc)
    else:
        flat = {"postselected_chsh": report["postselected_chsh"],
                "full_ensemble_chsh": report["full_ensemble_chsh"]}
        flat.update({f"selected_weight_{k}": v for k, v in report["selected_weight"].items()})
        _write(cfg.output_path, _kv_csv(flat))
    return EXIT_OK if report["postselected_chsh"] == 4 else EXIT_INVARIANT


def cmd_lhv_marginals(cfg: RunConfig) -> int:
    model, report = marginal_consistency_demo()
    data = {"components": model.to_dict(), **report.to_dict()}
    print(f"averaged P(A=0), P(A'=0): {report.averaged_zero[0]}, {report.averaged_zero[1]}")
    print(f"averaged equality holds: {report.averaged_equal}")
    print(f"per-component 0-outcome gap: {list(report.per_component_zero_gap)}")
    print(f"per-component +-1 mass gap: {list(report.per_component_pm_gap)}")
    if cfg.format == "json":
        _write(cfg.output_path, _json_doc(cfg, data))
    else:
        _write(cfg.output_path, _kv_csv({
            "averaged_p_zero_A": report.averaged_zero[0],
            "averaged_p_zero_A_prime": report.averaged_zero[1],
            "averaged_equal": report.averaged_equal,
            "pointwise_equal": report.pointwise_equal,
        }))
    ok = report.averaged_equal and not report.pointwise_equal
    return EXIT_OK if ok else EXIT_INVARIANT


HANDLERS = {
    "werner-check": cmd_werner_check,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
    "lhv-bound": cmd_lhv_bound,
    "lhv-loophole": cmd_lhv_loophole,
    "lhv-marginals": cmd_lhv_marginals,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    cfg = RunConfig(**{k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__})
    try:
        cfg.validate()
        return HANDLERS[cfg.command](cfg)
    except UsageError as exc:
        print(f"nonlocality: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QuantumError as exc:
        print(f"nonlocality: invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
