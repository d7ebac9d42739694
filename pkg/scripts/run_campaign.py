"""Run the simulated campaign and write runs.csv, summary.csv and SVG figures.

Usage: python scripts/run_campaign.py [config.json] [--noisy] [--workers N]
"""
import argparse
import dataclasses
import logging

from qrewind.harness import CampaignConfig, load_config, run_campaign
from qrewind.tomography import NoiseModel


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("config", nargs="?")
    ap.add_argument("--noisy", action="store_true", help="use the calibrated noise model")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO)

    cfg = load_config(args.config) if args.config else CampaignConfig()
    changes = {"workers": args.workers}
    if args.noisy:
        changes["noise"] = NoiseModel.calibrated()
    if args.out:
        changes["output_dir"] = args.out
    cfg = dataclasses.replace(cfg, **changes)

    records, summary = run_campaign(cfg)
    for n, (m, u) in sorted(summary.per_n.items()):
        print(f"n={n}: F = {m:.5f} +/- {u:.5f}   classical {summary.classical_bound[n]:.6f}")
    print(f"{len(records)} runs -> {cfg.output_dir}")


if __name__ == "__main__":
    main()
