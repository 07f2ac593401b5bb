"""Acceptance suite: one test per shipped guarantee, one PASS/FAIL line each.

The two shipped configs under configs/ are exercised as-is; the heavy
runs are shared across criteria through module-scoped fixtures.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest
import scipy.stats

from pcskit import (
    NoiseSpec,
    allocate_threads,
    auto_edge_checks,
    build_ghz_mirror,
    build_input_prep,
    build_calibration_curve,
    build_toffoli,
    thread_capacity,
    estimate_noise_map,
    exact_distribution,
    load_config,
    make_linear_sweep_qpu,
    prepend,
    process_threads,
    run_experiment,
    run_multiprogram,
    run_trajectories,
    sandwich,
    transpile_to_basis,
    validate_check_pair,
)
from pcskit.pauli import PauliString

from _oracle import noisy_distribution, total_variation as oracle_tv

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def _report(name: str, ok: bool, detail: str = "") -> None:
    tag = "PASS" if ok else "FAIL"
    line = f"[acceptance] {name}: {tag}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


def sandwiched(payload, prep=None):
    s = sandwich(payload, auto_edge_checks(payload))
    return s.with_circuit(transpile_to_basis(prepend(prep, s.circuit)))


@pytest.fixture(scope="module")
def ghz_run(tmp_path_factory):
    config = load_config(CONFIG_DIR / "ghz_sweep60.json")
    out = tmp_path_factory.mktemp("ghz_run")
    t0 = time.monotonic()
    art = run_experiment(config, out=str(out), overwrite=True)
    return {"config": config, "art": art, "elapsed": time.monotonic() - t0}


@pytest.fixture(scope="module")
def toffoli_run(tmp_path_factory):
    config = load_config(CONFIG_DIR / "toffoli_sweep60.json")
    out = tmp_path_factory.mktemp("toffoli_run")
    t0 = time.monotonic()
    art = run_experiment(config, out=str(out), overwrite=True)
    return {"config": config, "art": art, "elapsed": time.monotonic() - t0}


def test_criterion_1_check_pair_validation():
    t0 = time.monotonic()
    ghz = build_ghz_mirror(8).without_measurements()
    x_low = PauliString.from_label("X" + "I" * 7)
    x_high = PauliString.from_label("I" * 7 + "X")
    ok = validate_check_pair(x_low, x_low, ghz, tol=1e-9)
    ok &= validate_check_pair(x_high, x_high, ghz, tol=1e-9)

    toff = build_toffoli().without_measurements()
    for pair in auto_edge_checks(build_toffoli()):
        ok &= validate_check_pair(pair.left, pair.right, toff, tol=1e-9)

    z_target = PauliString.from_label("IIZ")
    ok &= not validate_check_pair(z_target, z_target, toff, tol=1e-9)
    elapsed = time.monotonic() - t0
    _report(
        "1 check-pair validation",
        ok and elapsed < 1.0,
        f"{elapsed:.3f}s",
    )


def test_criterion_2_noiseless_transparency():
    t0 = time.monotonic()
    ok = True
    for payload, prep in (
        (build_ghz_mirror(8), None),
        (build_toffoli(), build_input_prep("110")),
    ):
        s = sandwiched(payload, prep)
        ideal = exact_distribution(prepend(prep, payload))
        observed = exact_distribution(s.circuit)
        projected: dict[str, float] = {}
        fired = 0.0
        for key, p in observed.items():
            if any(key[b] == "1" for b in s.check_bits):
                fired += p
            else:
                pk = "".join(key[i] for i in s.payload_bits)
                projected[pk] = projected.get(pk, 0.0) + p
        ok &= fired < 1e-12
        ok &= set(projected) == set(ideal)
        ok &= all(abs(projected[k] - ideal[k]) < 1e-12 for k in ideal)

        counts = run_trajectories(s.circuit, NoiseSpec(0.0, 0.0), 100000, seed=99)
        ok &= all(
            all(key[b] == "0" for b in s.check_bits) for key in counts.counts
        )
    elapsed = time.monotonic() - t0
    _report("2 noiseless transparency", ok and elapsed < 60.0, f"{elapsed:.1f}s")


def test_criterion_3_sampler_matches_density_reference():
    t0 = time.monotonic()
    ok = True
    details = []
    for payload, prep in (
        (build_toffoli(), build_input_prep("110")),
        (build_ghz_mirror(4), None),
    ):
        s = sandwiched(payload, prep)
        reference = noisy_distribution(s.circuit, 0.01, 0.02)
        counts = run_trajectories(s.circuit, NoiseSpec(0.01, 0.02), 100000, seed=7)
        sampled = {k: v / counts.total_shots for k, v in counts.counts.items()}
        tv = oracle_tv(sampled, reference)
        details.append(f"tv={tv:.4f}")
        ok &= tv <= 0.01
    elapsed = time.monotonic() - t0
    _report(
        "3 sampler vs density reference",
        ok and elapsed < 300.0,
        ", ".join(details) + f", {elapsed:.1f}s",
    )


def test_criterion_4_discard_rate_monotone_in_noise(ghz_run):
    curve = ghz_run["art"].curve
    assert curve is not None
    ok = len(curve.points) == 60 and curve.shots == 10000
    ok &= all(b >= a for a, b in zip(curve.discards, curve.discards[1:]))
    rho, _ = scipy.stats.spearmanr(curve.rates, curve.raw_discards)
    ok &= rho >= 0.99
    ok &= ghz_run["elapsed"] < 600.0
    _report(
        "4 discard rate monotone over 60-point sweep",
        ok,
        f"spearman={rho:.4f}, run={ghz_run['elapsed']:.0f}s",
    )


def test_criterion_5_fidelity_improvement(ghz_run, toffoli_run):
    fid_g = ghz_run["art"].results["fidelity"]
    fid_t = toffoli_run["art"].results["fidelity"]
    ok = fid_g["improvement_rel"] >= 0.10
    ok &= fid_t["improvement_rel"] >= 0.07
    ok &= fid_g["pcs"] > fid_g["base"]
    ok &= fid_t["pcs"] > fid_t["base"]
    elapsed = ghz_run["elapsed"] + toffoli_run["elapsed"]
    ok &= elapsed < 900.0
    _report(
        "5 ensemble fidelity improvement",
        ok,
        f"ghz +{100 * fid_g['improvement_rel']:.1f}%, "
        f"toffoli +{100 * fid_t['improvement_rel']:.1f}%, {elapsed:.0f}s",
    )


def test_criterion_6_noise_profile_recovery(ghz_run):
    t0 = time.monotonic()
    config = ghz_run["config"]
    qpu = config.qpu.build(Path(config.base_dir))
    estimates = ghz_run["art"].estimates
    assert estimates is not None and len(estimates) == 60
    p_true = [r.noise.p1 for r in qpu.regions]
    p_est = [e.p_estimated for e in estimates]
    rho, _ = scipy.stats.spearmanr(p_est, p_true)
    ok = rho >= 0.95

    # tighter pointwise accuracy at 100k shots on a small device
    payload = build_ghz_mirror(8)
    s = sandwiched(payload)
    small = make_linear_sweep_qpu(10, 10, 0.0005, 0.03)
    grid = [0.0004] + list(np.linspace(0.0005, 0.03, 10)) + [0.032]
    curve = build_calibration_curve(s, grid, 100000, seed=41)
    threads = process_threads(
        run_multiprogram(small, s, 100000, seed=43), s.check_bits
    )
    small_estimates = estimate_noise_map(threads, curve)
    rel_errors = [
        abs(e.p_estimated - r.noise.p1) / r.noise.p1
        for e, r in zip(small_estimates, small.regions)
    ]
    median_err = float(np.median(rel_errors))
    ok &= median_err <= 0.20
    elapsed = time.monotonic() - t0
    ok &= elapsed < 900.0
    _report(
        "6 noise profile recovery",
        ok,
        f"spearman={rho:.4f}, median rel err={median_err:.3f}, {elapsed:.0f}s",
    )


def test_criterion_7_thread_capacity_formula():
    t0 = time.monotonic()
    rng = np.random.default_rng(12345)
    ok = True
    for _ in range(1000):
        q_alg = int(rng.integers(1, 13))
        q_anc = int(rng.integers(0, 5))
        regions = int(rng.integers(1, 80))
        qpu = make_linear_sweep_qpu(regions, q_alg + q_anc, 0.001, 0.01)
        allocs = allocate_threads(qpu, q_alg, q_anc)
        ok &= len(allocs) == thread_capacity(qpu.total_qubits, q_alg, q_anc)
    elapsed = time.monotonic() - t0
    _report("7 thread capacity formula", ok and elapsed < 1.0, f"{elapsed:.3f}s")


def test_criterion_8_reproducible_artifacts(ghz_run, tmp_path_factory):
    t0 = time.monotonic()
    config = ghz_run["config"]
    out = tmp_path_factory.mktemp("ghz_rerun")
    art = run_experiment(config, out=str(out), overwrite=True, workers=2)
    ok = True
    for name in ("results.json", "calibration_curve.json", "noise_estimates.json", "summary.txt"):
        first = (ghz_run["art"].out_dir / name).read_bytes()
        second = (art.out_dir / name).read_bytes()
        ok &= first == second
    reread = json.loads((art.out_dir / "results.json").read_text())
    ok &= len(reread["threads"]) == 60
    elapsed = time.monotonic() - t0
    ok &= elapsed + ghz_run["elapsed"] < 1800.0
    _report("8 byte-stable artifacts across runs", ok, f"rerun={elapsed:.0f}s")
