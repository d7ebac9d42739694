"""Command-line entry point: ``qrewind <subcommand> [--config] [--seed] [--out]``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import classical, harness
from .gateset import input_states
from .protocol import identity_suite
from .tomography import ReconstructionError, monte_carlo_fidelity, read_records_csv

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
IDENTITY_TOL = 1e-9


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _config(args) -> harness.CampaignConfig:
    cfg = harness.load_config(args.config) if args.config else harness.CampaignConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["output_dir"] = str(args.out)
    return dataclasses.replace(cfg, **changes) if changes else cfg


def cmd_campaign(args) -> int:
    cfg = _config(args)
    records, summary = harness.run_campaign(cfg)
    for n, (m, u) in sorted(summary.per_n.items()):
        print(f"n={n}  F={m:.6f} +/- {u:.6f}  classical={summary.classical_bound[n]:.6f}")
    print(f"{len(records)} runs written to {cfg.output_dir}")
    return EXIT_OK


def cmd_verify(args) -> int:
    rows = harness.verify_paper_numbers(_config(args))
    print(harness.format_report(rows))
    return EXIT_OK if harness.report_passed(rows) else EXIT_FAIL


def cmd_baseline(args) -> int:
    cfg = _config(args)
    pairs = harness.campaign_pairs(cfg)
    states = input_states(cfg.states)
    results = []
    for n in cfg.n_values:
        res = classical.optimize_baseline(pairs, states, n, k_max=n, seed=cfg.seed)
        results.append(res)
        for k, (strategy, f) in sorted(res.per_k.items()):
            times = ", ".join(f"{t:.5f}" for t in strategy.times)
            print(f"n={n} k={k}  F={f:.6f}  times=[{times}]")
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        classical.write_baseline_csv(results, out / "baseline.csv")
    return EXIT_OK


def cmd_identities(args) -> int:
    seed = 0 if args.seed is None else args.seed
    worst = identity_suite(seed)
    ok = True
    for key, val in worst.items():
        status = "PASS" if val < IDENTITY_TOL else "FAIL"
        ok &= val < IDENTITY_TOL
        print(f"{key:<20s} {val:.3e}  {status}")
    return EXIT_OK if ok else EXIT_FAIL


def _parse_target(text: str) -> np.ndarray:
    try:
        vals = json.loads(text)
        return np.array([complex(*v) if isinstance(v, list) else complex(v) for v in vals])
    except (ValueError, TypeError):
        from .gateset import input_state

        return input_state(text).vector


def cmd_tomo(args) -> int:
    if args.records is None or args.target is None:
        print("tomo needs --records and --target", file=sys.stderr)
        return EXIT_USAGE
    records = read_records_csv(args.records)
    try:
        res = monte_carlo_fidelity(records, args.background, _parse_target(args.target), seed=0 if args.seed is None else args.seed)
    except ReconstructionError as exc:
        print(f"reconstruction failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(f"fidelity {res.fidelity_mean:.6f} +/- {res.fidelity_std:.6f} ({res.mc_samples} samples, half-width {res.half_width:.2e})")
    print("rho =")
    print(np.array2string(res.rho, precision=6))
    return EXIT_FAIL if res.capped else EXIT_OK


COMMANDS = {
    "campaign": cmd_campaign,
    "verify": cmd_verify,
    "baseline": cmd_baseline,
    "identities": cmd_identities,
    "tomo": cmd_tomo,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qrewind", description="Simulated rewinding of unknown qubit evolutions.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="flat JSON campaign config")
        p.add_argument("--seed", type=_u64)
        p.add_argument("--out", type=Path)
        if name == "tomo":
            p.add_argument("--records", type=Path, help="CSV with setting,count_t,count_r")
            p.add_argument("--target", help="state label (H, +, -, R) or JSON amplitudes")
            p.add_argument("--background", type=float, default=0.0, help="mean dark counts per detector")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (harness.ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
