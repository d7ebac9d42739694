"""Simulated reproduction of the rewinding campaign: grid runner, summaries, figures."""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import classical
from .gateset import ExperimentPair, STATE_LABELS, input_state, input_states, select_pairs
from .protocol import (
    MaxDepthExceeded,
    error_corrected_commutator,
    full_rewind_with_correction,
    identity_suite,
    single_shot_rewind,
)
from .qalg import anticommutator, commutator, matrix_power, normalize, projector, state_fidelity
from .tomography import (
    MeasurementRecord,
    NoiseModel,
    default_alphas,
    expected_counts,
    leaky_switch,
    mix_noise,
    mixed_state_analysis,
    monte_carlo_fidelity,
    simulate_counts,
)

log = logging.getLogger(__name__)

MODES = ("postselected", "error_corrected")
REFERENCE_FIDELITIES = {1: (0.94234, 0.00023), 2: (0.93803, 0.00041), 3: (0.97336, 0.00043)}
REFERENCE_CLASSICAL = 0.733713
REFERENCE_CLASSICAL_TIME = 5.91507
REFERENCE_PAIR_COUNT = 50
MAX_ATTEMPTS = 10_000


class ConfigError(ValueError):
    pass


@dataclass
class CampaignConfig:
    n_values: list[int] = field(default_factory=lambda: [1, 2, 3])
    nc_threshold: float = 0.9
    nc_min: float = 0.0
    states: list[str] = field(default_factory=lambda: list(STATE_LABELS))
    runs: int = 3
    shots_per_setting: int = 100_000
    noise: NoiseModel = field(default_factory=NoiseModel)
    seed: int = 0
    output_dir: str = "campaign_out"
    mode: str = "postselected"
    max_depth: int = 4
    mixed_alphas: int = 23
    classical_k_max: int = 0
    workers: int = 1

    def __post_init__(self):
        if isinstance(self.noise, dict):
            self.noise = _noise_from_dict(self.noise)
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if not self.n_values or any(int(n) != n or n < 1 for n in self.n_values):
            raise ConfigError("n_values must be positive integers")
        if self.runs < 1 or self.shots_per_setting < 1 or self.max_depth < 1:
            raise ConfigError("runs, shots_per_setting and max_depth must be positive")
        if not 0.0 < self.nc_threshold <= 1.0:
            raise ConfigError("nc_threshold must lie in (0, 1]")
        if not 0.0 <= self.nc_min <= self.nc_threshold:
            raise ConfigError("nc_min must lie in [0, nc_threshold]")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        for lab in self.states:
            input_state(lab)

    @property
    def effective_noise(self) -> NoiseModel:
        return dataclasses.replace(self.noise, shots_per_setting=self.shots_per_setting)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["noise"] = dataclasses.asdict(self.noise)
        return out


def _noise_from_dict(d: dict) -> NoiseModel:
    known = {f.name for f in dataclasses.fields(NoiseModel)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown noise keys: {sorted(unknown)}")
    return NoiseModel(**d)


def load_config(path) -> CampaignConfig:
    """Read a flat JSON config; unknown keys are rejected."""
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in dataclasses.fields(CampaignConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        return CampaignConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass
class RunRecord:
    p: int
    q: int
    state_label: str
    n: int
    run_index: int
    nc: float
    fidelity_mean: float
    fidelity_std: float
    success_rate: float
    elapsed_time_units: int


RUN_COLUMNS = ["p", "q", "state", "n", "run", "nc", "fidelity_mean", "fidelity_std", "success_rate", "elapsed_time"]


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def cell_seed(seed: int, p: int, q: int, state_index: int, n: int, run: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, p, q, state_index, n, run])


# ---------------------------------------------------------------- per-cell simulation


def noisy_output_state(pair: ExperimentPair, psi: np.ndarray, n: int, noise: NoiseModel) -> tuple[np.ndarray, float]:
    """Expected commutator-port state after both SWITCH passes, with its heralding weight.

    Each pass leaks the anticommutator port in with weight ``(1 - V)/2``;
    contrast and dark counts are mixed in at the end.
    """
    c, a = commutator(pair.U, pair.V), anticommutator(pair.U, pair.V)
    un = matrix_power(pair.U, n)
    rho = projector(psi)
    rho = leaky_switch(rho, c, a, noise.visibility)
    rho = un @ rho @ un.conj().T
    rho = leaky_switch(rho, c, a, noise.visibility)
    weight = float(np.trace(rho).real)
    signal = noise.shots_per_setting * weight * noise.transmission(n + 4)
    # leakage already folded into rho; pass visibility 1 so it is not applied twice
    clean = dataclasses.replace(noise, visibility=1.0)
    return mix_noise(rho, np.zeros((2, 2)), clean, expected_signal=signal), weight


def _optical_state(pair, psi, n, noise) -> tuple[np.ndarray, float]:
    # noisy state without dark counts (those are added at the count level)
    no_dark = dataclasses.replace(noise, dark_count_mean=0.0)
    return noisy_output_state(pair, psi, n, no_dark)


def _success_probability(pair: ExperimentPair, psi: np.ndarray, n: int, mode: str, max_depth: int) -> float:
    if mode == "postselected":
        return single_shot_rewind(pair.U, pair.V, psi, n).success_probability
    first = error_corrected_commutator(pair.U, pair.V, psi, max_depth)
    mid = normalize(matrix_power(pair.U, n) @ commutator(pair.U, pair.V) @ psi)
    second = error_corrected_commutator(pair.U, pair.V, mid, max_depth)
    return first.success_probability * second.success_probability


def _sample_success(rng, shots: int, pair, psi, n, mode, max_depth) -> float:
    """Frequency of heralded successes over ``shots`` independent trials."""
    if mode == "postselected":
        c = commutator(pair.U, pair.V)
        p1 = float(np.linalg.norm(c @ psi / 2) ** 2)
        mid = normalize(matrix_power(pair.U, n) @ c @ psi)
        p2 = float(np.linalg.norm(c @ mid / 2) ** 2)
        # the second pass only runs on shots heralded by the first
        k1 = rng.binomial(shots, min(p1, 1.0))
        k2 = rng.binomial(k1, min(p2, 1.0))
        return k2 / shots
    p = _success_probability(pair, psi, n, mode, max_depth)
    return rng.binomial(shots, min(p, 1.0)) / shots


def run_cell(config: CampaignConfig, pair: ExperimentPair, state_label: str, n: int, run: int) -> RunRecord:
    state_index = STATE_LABELS.index(input_state(state_label).label)
    rng = np.random.default_rng(cell_seed(config.seed, pair.p, pair.q, state_index, n, run))
    psi = input_state(state_label).vector
    target = normalize(matrix_power(pair.U, -n) @ psi)
    noise = config.effective_noise

    if config.mode == "postselected":
        result = single_shot_rewind(pair.U, pair.V, psi, n)
        elapsed = result.elapsed_time
        out = result.output_state
    else:
        # a block that runs past max_depth is discarded and the run repeated
        out, elapsed = None, n + 4 * config.max_depth
        for _ in range(MAX_ATTEMPTS):
            try:
                result = full_rewind_with_correction(pair.U, pair.V, psi, n, config.max_depth, rng)
            except MaxDepthExceeded:
                continue
            out, elapsed = result.output_state, result.elapsed_time
            break

    success_rate = _sample_success(rng, config.shots_per_setting, pair, psi, n, config.mode, config.max_depth)

    if noise.is_ideal:
        fid = state_fidelity(projector(out), target) if out is not None else float("nan")
        std = 0.0
    else:
        if config.mode == "postselected":
            rho, weight = _optical_state(pair, psi, n, noise)
        else:
            weight = _success_probability(pair, psi, n, config.mode, config.max_depth)
            sig = weight * projector(out if out is not None else target)
            clean = dataclasses.replace(noise, dark_count_mean=0.0)
            rho = mix_noise(sig, np.zeros((2, 2)), clean)
        intensity = noise.shots_per_setting * weight * noise.transmission(n + 4)
        records = simulate_counts(rho, noise, rng, intensity=intensity)
        tomo = monte_carlo_fidelity(records, noise.dark_count_mean, target, seed=rng)
        fid, std = tomo.fidelity_mean, tomo.fidelity_std

    return RunRecord(pair.p, pair.q, state_label, n, run, pair.nc, fid, std, success_rate, int(elapsed))


def _run_cells(args):
    config, cells = args
    return [run_cell(config, *cell) for cell in cells]


def grid_cells(config: CampaignConfig, pairs: list[ExperimentPair]):
    for pair in pairs:
        for lab in config.states:
            for n in config.n_values:
                for run in range(config.runs):
                    yield (pair, lab, n, run)


# ---------------------------------------------------------------- summary


@dataclass
class SummaryTable:
    per_n: dict[int, tuple[float, float]]
    classical_bound: dict[int, float]
    classical_bound_with_v: dict[int, float]
    nc_groups: list[tuple[float, float, float, int]]
    rate_points: list[tuple[int, int, int, float, float]]
    mixed: dict[int, list[tuple[float, list[float]]]] = field(default_factory=dict)


def group_by_nc(records: list[RunRecord]) -> list[tuple[float, float, float, int]]:
    """``(nc, mean fidelity, std, count)`` over records sharing a commutativity value."""
    groups: dict[float, list[float]] = defaultdict(list)
    for r in records:
        groups[round(r.nc, 9)].append(r.fidelity_mean)
    out = []
    for nc in sorted(groups):
        vals = np.array(groups[nc])
        out.append((nc, float(vals.mean()), float(vals.std()), len(vals)))
    return out


def rate_points(records: list[RunRecord]) -> list[tuple[int, int, int, float, float]]:
    """``(n, p, q, nc, normalized rate)``; rates averaged over states and runs, normalized per ``n``."""
    acc: dict[tuple[int, int, int], list[float]] = defaultdict(list)
    ncs = {}
    for r in records:
        acc[(r.n, r.p, r.q)].append(r.success_rate)
        ncs[(r.p, r.q)] = r.nc
    means = {key: float(np.mean(v)) for key, v in acc.items()}
    top = defaultdict(float)
    for (n, _, _), m in means.items():
        top[n] = max(top[n], m)
    return [
        (n, p, q, ncs[(p, q)], (m / top[n]) if top[n] > 0 else 0.0)
        for (n, p, q), m in sorted(means.items())
    ]


def summarize(records: list[RunRecord], config: CampaignConfig, pairs=None) -> SummaryTable:
    pairs = campaign_pairs(config) if pairs is None else pairs
    states = input_states(config.states)
    per_n = {}
    for n in config.n_values:
        rows = [r for r in records if r.n == n]
        fids = np.array([r.fidelity_mean for r in rows])
        stds = np.array([r.fidelity_std for r in rows])
        # root-square-sum of per-run Monte-Carlo spreads, propagated to the mean
        per_n[n] = (float(fids.mean()), float(np.sqrt(np.sum(stds**2)) / len(rows)))
    bound, bound_v = {}, {}
    for n in config.n_values:
        res = classical.optimize_baseline(pairs, states, n, k_max=config.classical_k_max)
        bound[n] = res.per_k[0][1]
        bound_v[n] = res.F
    return SummaryTable(per_n, bound, bound_v, group_by_nc(records), rate_points(records))


def mixed_state_table(config: CampaignConfig, pairs: list[ExperimentPair]) -> dict[int, list[tuple[float, list[float]]]]:
    """Fidelities of count-level |+>/|-> mixtures for every pair, run and ``n``."""
    alphas = default_alphas(config.mixed_alphas)
    noise = config.effective_noise
    out: dict[int, list[tuple[float, list[float]]]] = {}
    plus, minus = input_state("+").vector, input_state("-").vector
    runs = 1 if noise.is_ideal else config.runs
    for n in config.n_values:
        per_alpha: dict[float, list[float]] = defaultdict(list)
        for pair in pairs:
            for run in range(runs):
                recs = []
                for idx, psi in ((1, plus), (2, minus)):
                    if noise.is_ideal:
                        recs.append(expected_counts(projector(single_shot_rewind(pair.U, pair.V, psi, n).output_state), noise.shots_per_setting))
                    else:
                        rng = np.random.default_rng(cell_seed(config.seed, pair.p, pair.q, idx, n, run).spawn(1)[0])
                        rho, weight = _optical_state(pair, psi, n, noise)
                        recs.append(simulate_counts(rho, noise, rng, intensity=noise.shots_per_setting * weight))
                if not noise.is_ideal and noise.dark_count_mean > 0:
                    recs = [
                        [MeasurementRecord(r.setting, tuple(max(c - noise.dark_count_mean, 0.0) for c in r.counts)) for r in rs]
                        for rs in recs
                    ]
                for a, f in mixed_state_analysis(recs[0], recs[1], alphas, pair.U, n):
                    per_alpha[a].append(f)
        out[n] = [(a, per_alpha[a]) for a in sorted(per_alpha)]
    return out


# ---------------------------------------------------------------- output


def write_runs_csv(records: list[RunRecord], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RUN_COLUMNS)
        for r in records:
            writer.writerow(
                [r.p, r.q, r.state_label, r.n, r.run_index, _fmt(r.nc), _fmt(r.fidelity_mean), _fmt(r.fidelity_std), _fmt(r.success_rate), r.elapsed_time_units]
            )
    return path


def write_summary_csv(summary: SummaryTable, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "fidelity_mean", "fidelity_uncertainty", "classical_bound", "classical_bound_with_v"])
        for n, (m, u) in sorted(summary.per_n.items()):
            writer.writerow([n, _fmt(m), _fmt(u), _fmt(summary.classical_bound[n]), _fmt(summary.classical_bound_with_v[n])])
    return path


def write_groups_csv(summary: SummaryTable, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["nc", "fidelity_mean", "fidelity_std", "count"])
        for nc, m, s, c in summary.nc_groups:
            writer.writerow([_fmt(nc), _fmt(m), _fmt(s), c])
    return path


def emit_figures(summary: SummaryTable, output_dir) -> list[Path]:
    """Write deterministic SVG renditions of the result figures."""
    from .figures import render_all

    return render_all(summary, Path(output_dir))


def campaign_pairs(config: CampaignConfig) -> list[ExperimentPair]:
    return [p for p in select_pairs(config.nc_threshold) if p.nc >= config.nc_min - 1e-12]


def run_campaign(config: CampaignConfig, write: bool = True) -> tuple[list[RunRecord], SummaryTable]:
    """Execute the whole grid for ``config``; results do not depend on ``workers``."""
    pairs = campaign_pairs(config)
    cells = list(grid_cells(config, pairs))
    log.info("running %d cells", len(cells))
    if config.workers > 1:
        chunks = [cells[i :: config.workers] for i in range(config.workers)]
        with ProcessPoolExecutor(config.workers) as pool:
            parts = list(pool.map(_run_cells, [(config, c) for c in chunks]))
        order = {(c[0].p, c[0].q, c[1], c[2], c[3]): i for i, c in enumerate(cells)}
        records = sorted((r for part in parts for r in part), key=lambda r: order[(r.p, r.q, r.state_label, r.n, r.run_index)])
    else:
        records = [run_cell(config, *cell) for cell in cells]
    summary = summarize(records, config, pairs)
    if config.mixed_alphas > 0 and "+" in config.states and "-" in config.states:
        summary.mixed = mixed_state_table(config, pairs)
    if write:
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_runs_csv(records, out / "runs.csv")
        write_summary_csv(summary, out / "summary.csv")
        write_groups_csv(summary, out / "fidelity_vs_nc.csv")
        (out / "config.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")
        emit_figures(summary, out)
    return records, summary


# ---------------------------------------------------------------- reference values


@dataclass
class ReportRow:
    quantity: str
    expected: str
    computed: str
    status: str


def expected_noisy_fidelity(pairs, states, n: int, noise: NoiseModel) -> float:
    """Grid-averaged fidelity of the expected noisy output state (no sampling)."""
    vals = []
    for pair in pairs:
        for s in states:
            rho, _ = noisy_output_state(pair, s.vector, n, noise)
            vals.append(state_fidelity(rho, normalize(matrix_power(pair.U, -n) @ s.vector)))
    return float(np.mean(vals))


def verify_paper_numbers(config: CampaignConfig | None = None, identity_pairs: int = 1000) -> list[ReportRow]:
    config = CampaignConfig() if config is None else config
    pairs = select_pairs(config.nc_threshold)
    states = input_states(config.states)
    rows = []
    count = len(select_pairs(0.9))
    rows.append(ReportRow("selected pairs (N_c <= 0.9)", str(REFERENCE_PAIR_COUNT), str(count), "PASS" if count == REFERENCE_PAIR_COUNT else "FAIL"))
    for n in config.n_values:
        f = classical.average_fidelity(classical.ClassicalStrategy(0, (REFERENCE_CLASSICAL_TIME - n,)), pairs, states, n)
        ok = abs(f - REFERENCE_CLASSICAL) <= 1e-3
        rows.append(ReportRow(f"classical F_c, n={n}, t0=5.91507-n", f"{REFERENCE_CLASSICAL}", f"{f:.6f}", "PASS" if ok else "FAIL"))
        res = classical.optimize_baseline(pairs, states, n, k_max=n)
        f0 = res.per_k[0][1]
        rows.append(ReportRow(f"classical optimum without V, n={n}", f"{REFERENCE_CLASSICAL}", f"{f0:.6f}", "PASS" if abs(f0 - REFERENCE_CLASSICAL) <= 1e-4 else "FAIL"))
        best = res.best_strategy
        rows.append(
            ReportRow(
                f"classical optimum with up to {n} V, n={n}",
                f"{REFERENCE_CLASSICAL}",
                f"{res.F:.6f} (k={best.k})",
                "PASS" if abs(res.F - REFERENCE_CLASSICAL) <= 1e-4 else "DIFFERS",
            )
        )
    worst = identity_suite(config.seed, n_pairs=identity_pairs)
    for key, val in worst.items():
        rows.append(ReportRow(f"identity residual: {key}", "< 1e-9", f"{val:.2e}", "PASS" if val < 1e-9 else "FAIL"))
    noise = NoiseModel.calibrated(shots_per_setting=config.shots_per_setting) if config.noise.is_ideal else config.effective_noise
    for n, (val, err) in REFERENCE_FIDELITIES.items():
        modeled = expected_noisy_fidelity(pairs, states, n, noise)
        rows.append(
            ReportRow(
                f"experimental fidelity F_{n}",
                f"{val} +/- {err}",
                f"noiseless 1.0; noise model {modeled:.5f}",
                "NOT REPRODUCIBLE",
            )
        )
    return rows


def format_report(rows: list[ReportRow]) -> str:
    widths = [max(len(getattr(r, f)) for r in rows + [ReportRow("quantity", "expected", "computed", "status")]) for f in ("quantity", "expected", "computed", "status")]
    header = ReportRow("quantity", "expected", "computed", "status")
    lines = []
    for r in [header] + rows:
        lines.append("  ".join(getattr(r, f).ljust(w) for f, w in zip(("quantity", "expected", "computed", "status"), widths)))
    return "\n".join(lines)


def report_passed(rows: list[ReportRow]) -> bool:
    return all(r.status != "FAIL" for r in rows)
