"""Deterministic SVG renditions of the campaign results."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RATE_CURVE_POINTS = 200

_RC = {
    "svg.hashsalt": "qrewind",
    "svg.fonttype": "none",
    "font.family": "DejaVu Sans",
    "figure.figsize": (4.5, 3.2),
}


def ideal_rate_curve(nc_min: float = 0.0, nc_max: float = 1.0, points: int = RATE_CURVE_POINTS):
    """``(N_c, (1 - N_c)^2)`` sampled on a uniform grid, normalized to its maximum."""
    x = np.linspace(nc_min, nc_max, points)
    y = (1.0 - x) ** 2
    top = y.max()
    return x, (y / top if top > 0 else y)


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def fidelity_bars(summary, path: Path) -> Path:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ns = sorted(summary.per_n)
        means = [summary.per_n[n][0] for n in ns]
        errs = [summary.per_n[n][1] for n in ns]
        ax.bar(ns, means, yerr=errs, color="#4878a8", width=0.6)
        if ns:
            bound = float(np.mean([summary.classical_bound[n] for n in ns]))
            ax.axhline(bound, color="#c04040", ls="--", label="classical")
            ax.legend(loc="lower right")
        ax.set_xticks(ns)
        ax.set_xlabel("n")
        ax.set_ylabel("fidelity")
        ax.set_ylim(0.0, 1.05)
        fig.tight_layout()
        return _save(fig, path)


def fidelity_vs_nc(summary, path: Path) -> Path:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        if summary.nc_groups:
            nc, m, s, _ = map(np.array, zip(*summary.nc_groups))
            ax.errorbar(nc, m, yerr=s, fmt="o", ms=3, color="#4878a8")
        ax.set_xlabel("$N_c$")
        ax.set_ylabel("fidelity")
        fig.tight_layout()
        return _save(fig, path)


def rate_vs_nc(summary, path: Path) -> Path:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        pts = summary.rate_points
        lo = min((p[3] for p in pts), default=0.0)
        hi = max((p[3] for p in pts), default=1.0)
        x, y = ideal_rate_curve(lo, hi)
        ax.plot(x, y, color="0.4", lw=1, label="$(1-N_c)^2$")
        for n in sorted({p[0] for p in pts}):
            sel = [p for p in pts if p[0] == n]
            ax.plot([p[3] for p in sel], [p[4] for p in sel], "o", ms=3, label=f"n={n}")
        ax.set_xlabel("$N_c$")
        ax.set_ylabel("normalized rate")
        ax.legend(fontsize=7)
        fig.tight_layout()
        return _save(fig, path)


def mixed_state_panel(summary, path: Path) -> Path:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for n in sorted(summary.mixed):
            rows = summary.mixed[n]
            a = [r[0] for r in rows]
            m = [float(np.mean(r[1])) for r in rows]
            s = [float(np.std(r[1])) for r in rows]
            ax.errorbar(a, m, yerr=s, fmt="o-", ms=3, lw=0.8, label=f"n={n}")
        ax.set_xlabel(r"$\alpha$")
        ax.set_ylabel("fidelity")
        if summary.mixed:
            ax.legend(fontsize=7)
        fig.tight_layout()
        return _save(fig, path)


def render_all(summary, output_dir: Path) -> list[Path]:
    output_dir.mkdir(parents=True, exist_ok=True)
    return [
        fidelity_bars(summary, output_dir / "fidelity_bars.svg"),
        fidelity_vs_nc(summary, output_dir / "fidelity_vs_nc.svg"),
        rate_vs_nc(summary, output_dir / "rate_vs_nc.svg"),
        mixed_state_panel(summary, output_dir / "mixed_states.svg"),
    ]
