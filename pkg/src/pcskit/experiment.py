"""End-to-end runs: build, sandwich, execute, post-select, characterize.

One experiment run resolves a config into concrete circuits and a device
model, executes the requested mode, and writes a self-contained artifact
directory.  Result files carry no timestamps or absolute paths, so a rerun
with the same config and seed reproduces them byte for byte.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .characterize import (
    CalibrationCurve,
    NoiseEstimate,
    build_calibration_curve,
    estimate_noise_map,
    export_heatmap,
)
from .checks import CheckPair, SandwichedCircuit, auto_edge_checks, sandwich
from .circuits import Circuit, prepend, transpile_to_basis
from .config import AUTO_EDGE, ExperimentConfig
from .errors import CalibrationError
from .pauli import PauliString
from .postprocess import EnsembleResult, ensemble, process_threads
from .qpu import QpuModel, thread_capacity, run_multiprogram, skipped_regions
from .report import plot_calibration_curve, plot_fidelity_comparison, plot_heatmap
from .sim import exact_distribution

OUTPUT_ROOT_ENV = "PCSKIT_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT = "pcskit_runs"


@dataclass
class RunArtifacts:
    out_dir: Path
    results: dict[str, Any] | None = None
    curve: CalibrationCurve | None = None
    estimates: list[NoiseEstimate] | None = None
    pcs_ensemble: EnsembleResult | None = None
    base_ensemble: EnsembleResult | None = None
    paths: dict[str, Path] | None = None


def resolve_output_dir(
    config_dir: str | None, override: str | None, *, overwrite: bool
) -> Path:
    """Pick the run directory: flag > config > environment > default root.

    Without --overwrite each run lands in a fresh timestamped subdirectory;
    with it, files go straight into the resolved directory.
    """
    root = Path(override or config_dir or os.environ.get(OUTPUT_ROOT_ENV) or DEFAULT_OUTPUT_ROOT)
    if overwrite:
        root.mkdir(parents=True, exist_ok=True)
        return root
    stamp = time.strftime("%Y%m%d-%H%M%S")
    candidate = root / f"run-{stamp}"
    suffix = 0
    while candidate.exists():
        suffix += 1
        candidate = root / f"run-{stamp}-{suffix}"
    candidate.mkdir(parents=True)
    return candidate


def resolve_checks(config: ExperimentConfig, payload: Circuit) -> list[CheckPair]:
    if config.checks == AUTO_EDGE:
        return auto_edge_checks(payload)
    assert not isinstance(config.checks, str)
    return [
        CheckPair(PauliString.from_label(c.left), PauliString.from_label(c.right))
        for c in config.checks
    ]


def _prepare_exec(sand: SandwichedCircuit, prep: Circuit | None) -> SandwichedCircuit:
    # prep goes in front of the whole sandwich; check transparency holds for
    # any input state, so the pair stays valid against the bare payload
    return sand.with_circuit(transpile_to_basis(prepend(prep, sand.circuit)))


def _thread_record(t) -> dict[str, Any]:
    return {
        "thread_id": t.thread_id,
        "region_id": t.region_id,
        "shots": t.raw.total_shots,
        "discarded": t.discarded,
        "d": t.discard_fraction,
        "counts": dict(sorted(t.raw.counts.items())),
        "scaled": dict(sorted(t.scaled.items())),
    }


def _results_payload(
    pcs: EnsembleResult, base: EnsembleResult, ideal: dict[str, float], ideal_key: str | None
) -> dict[str, Any]:
    from .postprocess import fidelity, ideal_outcome_probability

    f_pcs = fidelity(pcs.cumulative, ideal)
    f_base = fidelity(base.cumulative, ideal)
    out: dict[str, Any] = {
        "threads": [_thread_record(t) for t in pcs.per_thread],
        "ensemble": dict(sorted(pcs.cumulative.items())),
        "fidelity": {
            "pcs": f_pcs,
            "base": f_base,
            "improvement_abs": f_pcs - f_base,
            "improvement_rel": (f_pcs - f_base) / f_base if f_base > 0 else None,
        },
    }
    if ideal_key is not None:
        out["success"] = {
            "pcs": ideal_outcome_probability(pcs.cumulative, ideal_key),
            "base": ideal_outcome_probability(base.cumulative, ideal_key),
            "outcome": ideal_key,
        }
    return out


def _summary_lines(
    config: ExperimentConfig,
    qpu: QpuModel,
    sand: SandwichedCircuit,
    results: dict[str, Any] | None,
    curve: CalibrationCurve | None,
    estimates: Sequence[NoiseEstimate] | None,
) -> list[str]:
    payload = sand.payload
    q_alg, q_anc = payload.num_qubits, len(sand.ancilla_indices)
    lines = [
        f"benchmark: {payload.label or config.benchmark.kind} "
        f"({q_alg} payload qubits, {q_anc} check ancillas)",
        "checks: "
        + (
            ", ".join(f"L={c.left.to_label()} R={c.right.to_label()}" for c in sand.checks)
            or "none"
        ),
        f"device: {len(qpu.regions)} regions x {qpu.regions[0].qubit_count} qubits, "
        f"grid {qpu.grid_shape[0]}x{qpu.grid_shape[1]}",
        f"thread capacity: {thread_capacity(qpu.total_qubits, q_alg, q_anc)} "
        f"(= {qpu.total_qubits} // {q_alg + q_anc})",
        f"shots per thread: {config.shots}",
    ]
    skipped = skipped_regions(qpu, q_alg, q_anc)
    lines.append(
        "skipped regions: " + (", ".join(str(r) for r in skipped) if skipped else "none")
    )
    if results is not None:
        lines.append("")
        lines.append("thread  region  p1_true    discarded  d")
        by_region = {r.id: r.noise.p1 for r in qpu.regions}
        for t in results["threads"]:
            lines.append(
                f"{t['thread_id']:>6}  {t['region_id']:>6}  {by_region[t['region_id']]:<9.6g}"
                f"  {t['discarded']:>9}  {t['d']:.6f}"
            )
        fid = results["fidelity"]
        lines.append("")
        lines.append(f"fidelity (bhattacharyya): checked={fid['pcs']:.6f} plain={fid['base']:.6f}")
        if "success" in results:
            s = results["success"]
            lines.append(
                f"ideal-outcome probability [{s['outcome']}]: "
                f"checked={s['pcs']:.6f} plain={s['base']:.6f}"
            )
        rel = fid["improvement_rel"]
        lines.append(
            f"improvement: {fid['improvement_abs']:+.6f} absolute"
            + (f", {100 * rel:+.2f}% relative" if rel is not None else "")
        )
    if curve is not None:
        lines.append("")
        lines.append(
            f"calibration: {len(curve.points)} grid points, {curve.shots} shots each, "
            f"discard span [{curve.discards[0]:.6f}, {curve.discards[-1]:.6f}]"
        )
    if estimates:
        sat = sum(1 for e in estimates if e.saturated)
        p_vals = [e.p_estimated for e in estimates]
        lines.append(
            f"noise estimates: {len(estimates)} regions, p_est span "
            f"[{min(p_vals):.6g}, {max(p_vals):.6g}], saturated: {sat}"
        )
    return lines


def run_experiment(
    config: ExperimentConfig,
    *,
    mode: str | None = None,
    seed: int | None = None,
    out: str | None = None,
    workers: int = 1,
    overwrite: bool = False,
) -> RunArtifacts:
    """Execute one experiment and write its artifact directory.

    Modes: mitigate (checked + plain ensembles, results.json), calibrate
    (discard-vs-rate curve only), characterize (run + curve + per-region
    noise estimates and heatmaps), all (everything).
    """
    eff_mode = mode or config.mode
    eff_seed = config.seed if seed is None else seed
    eff = replace(config, mode=eff_mode, seed=eff_seed)
    base_dir = Path(config.base_dir)

    payload, prep = config.benchmark.build(base_dir)
    checks = resolve_checks(config, payload)
    qpu = config.qpu.build(base_dir)
    sand_exec = _prepare_exec(sandwich(payload, checks), prep)

    out_dir = resolve_output_dir(config.output_dir, out, overwrite=overwrite)
    paths: dict[str, Path] = {}
    art = RunArtifacts(out_dir=out_dir, paths=paths)

    (out_dir / "run_config.json").write_text(eff.to_json() + "\n")
    paths["run_config"] = out_dir / "run_config.json"

    want_run = eff_mode in ("mitigate", "characterize", "all")
    want_curve = eff_mode in ("calibrate", "characterize", "all")
    want_mitigate = eff_mode in ("mitigate", "all")
    want_characterize = eff_mode in ("characterize", "all")

    pcs_threads = None
    if want_run:
        raw = run_multiprogram(qpu, sand_exec, eff.shots, eff_seed, workers=workers, seed_tag="pcs")
        pcs_threads = process_threads(raw, sand_exec.check_bits)

    if want_curve:
        grid = eff.calibration.p_grid or tuple(sorted(set(qpu.p1_rates)))
        if len(grid) < 2:
            raise CalibrationError(
                "calibration needs at least two distinct rates; give calibration.p_grid"
            )
        curve = build_calibration_curve(
            sand_exec,
            grid,
            eff.calibration.shots or eff.shots,
            eff_seed,
            workers=workers,
            label=payload.label or config.benchmark.kind,
        )
        art.curve = curve
        (out_dir / "calibration_curve.json").write_text(curve.to_json() + "\n")
        paths["calibration_curve"] = out_dir / "calibration_curve.json"
        paths["calibration_curve_png"] = plot_calibration_curve(
            curve, out_dir / "calibration_curve.png"
        )

    results = None
    if want_mitigate:
        assert pcs_threads is not None
        ideal = exact_distribution(prepend(prep, payload))
        ideal_key = max(ideal, key=ideal.get) if len(ideal) == 1 else None
        base_sand = _prepare_exec(sandwich(payload, []), prep)
        base_raw = run_multiprogram(
            qpu, base_sand, eff.shots, eff_seed, workers=workers, seed_tag="base"
        )
        base_threads = process_threads(base_raw, base_sand.check_bits)
        art.pcs_ensemble = ensemble(pcs_threads, ideal)
        art.base_ensemble = ensemble(base_threads, ideal)
        results = _results_payload(art.pcs_ensemble, art.base_ensemble, ideal, ideal_key)
        art.results = results
        (out_dir / "results.json").write_text(json.dumps(results, sort_keys=True, indent=2) + "\n")
        paths["results"] = out_dir / "results.json"
        fid = results["fidelity"]
        labels = ["fidelity"]
        pcs_vals = [fid["pcs"]]
        base_vals = [fid["base"]]
        if "success" in results:
            labels.append("success")
            pcs_vals.append(results["success"]["pcs"])
            base_vals.append(results["success"]["base"])
        paths["fidelity_png"] = plot_fidelity_comparison(
            labels, pcs_vals, base_vals, out_dir / "fidelity_comparison.png"
        )

    if want_characterize:
        assert pcs_threads is not None and art.curve is not None
        estimates = estimate_noise_map(pcs_threads, art.curve)
        art.estimates = estimates
        heat_paths = export_heatmap(estimates, qpu, out_dir)
        paths.update(heat_paths)
        rows, cols = qpu.grid_shape
        d_grid = np.loadtxt(paths["discard_rates"], delimiter=",").reshape(rows, cols)
        p_grid_est = np.loadtxt(paths["p_estimated"], delimiter=",").reshape(rows, cols)
        p_grid_true = np.loadtxt(paths["p_true"], delimiter=",").reshape(rows, cols)
        paths["heatmap_discard_png"] = plot_heatmap(
            d_grid, "Observed discard fraction", "d", out_dir / "heatmap_discard.png"
        )
        paths["heatmap_p_estimated_png"] = plot_heatmap(
            p_grid_est, "Estimated rate", "p1", out_dir / "heatmap_p_estimated.png"
        )
        paths["heatmap_p_true_png"] = plot_heatmap(
            p_grid_true, "True rate", "p1", out_dir / "heatmap_p_true.png"
        )

    lines = _summary_lines(eff, qpu, sand_exec, results, art.curve, art.estimates)
    (out_dir / "summary.txt").write_text("\n".join(lines) + "\n")
    paths["summary"] = out_dir / "summary.txt"
    return art
