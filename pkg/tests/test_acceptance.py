"""Acceptance checks.  Each test prints one PASS/FAIL line and asserts the criterion."""
import itertools
import time

import numpy as np
import pytest

from qrewind.classical import ClassicalStrategy, average_fidelity, optimize_baseline, strategy_operator
from qrewind.gateset import (
    GRID,
    counterpropagation_reverse,
    decompose_qwp_hwp_qwp,
    input_states,
    make_u,
    make_v,
    phase_residual,
    qwp_hwp_qwp,
    select_pairs,
)
from qrewind.harness import (
    REFERENCE_FIDELITIES,
    CampaignConfig,
    campaign_pairs,
    group_by_nc,
    grid_cells,
    mixed_state_table,
    run_campaign,
    run_cell,
)
from qrewind.probe import random_model, run_probe_switch
from qrewind.protocol import (
    ReducedWord,
    error_corrected_commutator,
    identity_suite,
    reduce_word,
    success_probability_by_depth,
    switch_apply,
)
from qrewind.qalg import (
    I2,
    anticommutator,
    commutator,
    projector,
    proportionality,
    random_state,
    random_unitary,
    state_fidelity,
)
from qrewind.tomography import NoiseModel, mle_reconstruct, monte_carlo_fidelity, simulate_counts

F_CLASSICAL = 0.733713


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail, elapsed):
        with capsys.disabled():
            print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'}  {detail}  ({elapsed:.2f} s)")

    return emit


def test_criterion_01_identity_suite(report):
    t0 = time.perf_counter()
    worst = identity_suite(seed=0, n_pairs=1000, n_values=range(1, 6), m_values=range(1, 5), n_nonunitary=100)
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) < 1e-9 and elapsed < 5
    report(1, ok, "worst residuals " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items()), elapsed)
    assert ok


def test_criterion_02_gate_set(report):
    t0 = time.perf_counter()
    pairs = select_pairs(0.9)
    chosen = {(x.p, x.q) for x in pairs}
    agree = all(
        ((p, q) in chosen) == ((p / 10) ** 2 * np.sin(q * np.pi / 11) ** 2 >= 1 - 0.9) for p in GRID for q in GRID
    )
    elapsed = time.perf_counter() - t0
    ok = len(pairs) == 50 and agree and elapsed < 1
    report(2, ok, f"{len(pairs)} pairs, closed-form membership {'agrees' if agree else 'differs'}", elapsed)
    assert ok


def test_criterion_03_classical_baseline(report):
    t0 = time.perf_counter()
    pairs, states = select_pairs(0.9), input_states()
    stated, v_free, full = {}, {}, {}
    for n in (1, 2, 3):
        stated[n] = average_fidelity(ClassicalStrategy(0, (5.91507 - n,)), pairs, states, n)
        res = optimize_baseline(pairs, states, n)
        v_free[n] = res.per_k[0][1]
        full[n] = (res.F, res.best_strategy)
    elapsed = time.perf_counter() - t0
    ok_stated = all(abs(f - F_CLASSICAL) <= 1e-3 for f in stated.values())
    ok_free = all(abs(f - F_CLASSICAL) <= 1e-4 for f in v_free.values())
    ok_full = all(abs(f - F_CLASSICAL) <= 1e-4 for f, _ in full.values())
    detail = (
        "stated strategy " + "/".join(f"{stated[n]:.6f}" for n in stated)
        + "; V-free optimum " + "/".join(f"{v_free[n]:.6f}" for n in v_free)
        + "; optimum over k<=n " + "/".join(f"{f:.6f}(k={s.k})" for f, s in full.values())
    )
    ok = ok_stated and ok_free and ok_full and elapsed < 120
    report(3, ok, detail, elapsed)
    # the strategies beating the V-free value must be genuine: re-evaluate them independently
    for n, (f, s) in full.items():
        s.check_budget(n)
        loop = []
        for pair in pairs:
            op = np.linalg.matrix_power(pair.U, n) @ strategy_operator(s, pair.hamiltonian, pair.V)
            loop += [abs(np.vdot(x.vector, op @ x.vector)) ** 2 for x in states]
        assert np.mean(loop) == pytest.approx(f, abs=1e-12)
    assert ok_stated and ok_free
    assert ok_full, "strategies with V insertions exceed the V-free optimum for n=2,3"


def test_criterion_04_noiseless_campaign(report, tmp_path):
    t0 = time.perf_counter()
    cfg = CampaignConfig(output_dir=str(tmp_path), mixed_alphas=0)
    records, summary = run_campaign(cfg)
    elapsed = time.perf_counter() - t0
    worst = max(abs(r.fidelity_mean - 1) for r in records)
    times_ok = all(r.elapsed_time_units == r.n + 4 for r in records)
    ok = len(records) == 1800 and worst <= 1e-9 and times_ok and elapsed < 60
    report(4, ok, f"{len(records)} cells, worst |F-1| = {worst:.1e}, elapsed n+4: {times_ok}", elapsed)
    assert ok


def test_criterion_05_rate_scaling(report):
    t0 = time.perf_counter()
    cfg = CampaignConfig(n_values=[1], states=["H"], runs=1, shots_per_setting=100_000)
    shots = cfg.shots_per_setting
    worst = 0.0
    for cell in grid_cells(cfg, campaign_pairs(cfg)):
        rec = run_cell(cfg, *cell)
        p = (1 - rec.nc) ** 2
        sigma = np.sqrt(shots * p) / shots
        worst = max(worst, abs(rec.success_rate - p) / sigma)
    elapsed = time.perf_counter() - t0
    ok = worst < 3 and elapsed < 120
    report(5, ok, f"worst deviation {worst:.2f} Poisson sigma over 50 pairs", elapsed)
    assert ok


def _phase_dev(a, b):
    nb = np.vdot(b, b).real
    if nb < 1e-300:
        return float(np.linalg.norm(a))
    phase = np.vdot(b, a) / nb
    phase = phase / abs(phase) if abs(phase) > 0 else 1.0
    return float(np.linalg.norm(a - phase * b))


def test_criterion_06_probe_equivalence(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        model = random_model(rng)
        psi = random_state(rng)
        res = run_probe_switch(model, psi)
        ref = switch_apply(model.U, res.V, psi, renormalize=False)
        worst = max(worst, _phase_dev(res.plus_branch, ref.anticommutator_branch), _phase_dev(res.minus_branch, ref.commutator_branch))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-10 and elapsed < 30
    report(6, ok, f"worst branch deviation {worst:.1e} over 100 models", elapsed)
    assert ok


def test_criterion_07_error_correction(report):
    t0 = time.perf_counter()
    monotone, proportional = True, True
    for pair in select_pairs(0.9):
        c = commutator(pair.U, pair.V)
        for s in input_states():
            by_depth = success_probability_by_depth(pair.U, pair.V, s.vector, 6)
            monotone &= bool(np.all(np.diff(by_depth) >= -1e-12))
            for leaf in error_corrected_commutator(pair.U, pair.V, s.vector, 6).success_leaves:
                proportional &= proportionality(leaf.net_operator, c, tol=1e-9) is not None
    rng = np.random.default_rng(5)
    mats = []
    for _ in range(3):
        u, v = random_unitary(rng), random_unitary(rng)
        mats.append((anticommutator(u, v), commutator(u, v)))
    sound, words = True, 0
    for length in range(1, 9):
        for letters in itertools.product("AC", repeat=length):
            word = ReducedWord()
            for label in letters:
                word = word.prepend(label)
            reduced = reduce_word(word)
            words += 1
            for a, c in mats:
                literal = I2
                for label in letters:
                    literal = (a if label == "A" else c) @ literal
                sound &= proportionality(literal, reduced.matrix(a, c), tol=1e-9) is not None
                if reduced.is_commutator:
                    sound &= proportionality(literal, c, tol=1e-9) is not None
    elapsed = time.perf_counter() - t0
    ok = monotone and proportional and sound and elapsed < 120
    report(7, ok, f"monotone={monotone}, success leaves proportional={proportional}, {words} words sound={sound}", elapsed)
    assert ok


def test_criterion_08_tomography(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    fids = []
    for _ in range(100):
        psi = random_state(rng)
        recs = simulate_counts(projector(psi), NoiseModel(shots_per_setting=10_000), rng)
        fids.append(state_fidelity(mle_reconstruct(recs), psi))
    psi = random_state(rng)
    recs = simulate_counts(projector(psi), NoiseModel(shots_per_setting=10_000), rng)
    mc = monte_carlo_fidelity(recs, 0.0, psi, seed=3)
    elapsed = time.perf_counter() - t0
    med = float(np.median(fids))
    ok = med >= 0.995 and mc.half_width < 2e-3 and not mc.capped and elapsed < 120
    report(8, ok, f"median fidelity {med:.5f}; MC stop after {mc.mc_samples} samples, half-width {mc.half_width:.1e}", elapsed)
    assert ok


def test_criterion_09_mixed_states(report):
    t0 = time.perf_counter()
    cfg = CampaignConfig(mixed_alphas=23)
    table = mixed_state_table(cfg, campaign_pairs(cfg))
    worst = max(abs(f - 1) for rows in table.values() for _, fs in rows for f in fs)
    count = sum(len(fs) for rows in table.values() for _, fs in rows)
    elapsed = time.perf_counter() - t0
    ok = count == 23 * 50 * 3 and worst <= 1e-6 and elapsed < 120
    report(9, ok, f"{count} reconstructions, worst |F-1| = {worst:.1e}", elapsed)
    assert ok


def test_criterion_10_noise_trend(report):
    t0 = time.perf_counter()
    # the four N_c groups closest to the 0.9 threshold
    cfg = CampaignConfig(noise=NoiseModel.calibrated(dark_count_mean=2.0), nc_min=0.85, mixed_alphas=0)
    pairs = campaign_pairs(cfg)
    records = [run_cell(cfg, *cell) for cell in grid_cells(cfg, pairs)]
    groups = group_by_nc(records)
    means = [g[1] for g in groups]
    decreasing = all(b < a for a, b in zip(means, means[1:]))
    elapsed = time.perf_counter() - t0
    sim = {n: np.mean([r.fidelity_mean for r in records if r.n == n]) for n in REFERENCE_FIDELITIES}
    note = ", ".join(f"F_{n} measured {v[0]} NOT REPRODUCIBLE (simulated {sim[n]:.4f})" for n, v in REFERENCE_FIDELITIES.items())
    ok = decreasing and len(groups) == 4 and all(g[3] == 72 for g in groups)
    trend = " > ".join(f"{m:.4f}@{g[0]:.3f}" for m, g in zip(means, groups))
    report(10, ok, f"group means {trend}; {note}", elapsed)
    assert ok


def test_criterion_11_wave_plates(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(100):
        target = random_unitary(rng)
        worst = max(worst, phase_residual(qwp_hwp_qwp(*decompose_qwp_hwp_qwp(target)), target))
    gates = [make_u(p) for p in GRID] + [make_v(q) for q in GRID]
    fixed = all(np.allclose(counterpropagation_reverse(g), g, atol=1e-12) for g in gates)
    involution = all(
        np.allclose(counterpropagation_reverse(counterpropagation_reverse(u)), u)
        for u in (random_unitary(rng) for _ in range(100))
    )
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-8 and fixed and involution and elapsed < 30
    report(11, ok, f"worst residual {worst:.1e}, grid gates fixed={fixed}, involution={involution}", elapsed)
    assert ok
