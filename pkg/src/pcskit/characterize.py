"""Noise-profile inference from per-region discard fractions.

The discard fraction of a check-sandwiched circuit grows monotonically with
the underlying depolarizing rate, so a calibration sweep of the same circuit
across known rates yields an invertible curve d(p).  Observed per-region
discard fractions are then mapped back through the inverse to estimate each
region's rate, with binomial uncertainty propagated through the same inverse.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .checks import SandwichedCircuit
from .errors import CalibrationError
from .postprocess import ThreadResult, discard_fraction, filter_counts
from .qpu import QpuModel, parallel_map_jobs
from .seeding import derive_seed
from .sim import NoiseSpec

WILSON_Z = 1.96  # two-sided 95%


@dataclass(frozen=True)
class CalibrationCurve:
    """Monotone map from depolarizing rate p1 to expected discard fraction.

    points hold the isotonic-fitted values; raw_discards keep the pre-fit
    observations for diagnostics.  Rates must be strictly increasing and the
    fitted discards non-decreasing.
    """

    points: tuple[tuple[float, float], ...]
    benchmark_label: str
    raw_discards: tuple[float, ...] = ()
    shots: int = 0

    def __post_init__(self) -> None:
        if not self.points:
            raise CalibrationError("calibration curve needs at least one point")
        ps = [p for p, _ in self.points]
        ds = [d for _, d in self.points]
        if any(b <= a for a, b in zip(ps, ps[1:])):
            raise CalibrationError(f"rates must be strictly increasing, got {ps}")
        if any(b < a for a, b in zip(ds, ds[1:])):
            raise CalibrationError(f"fitted discards must be non-decreasing, got {ds}")
        if any(not 0.0 <= d <= 1.0 for d in ds):
            raise CalibrationError("discard fractions must lie in [0, 1]")
        if self.raw_discards and len(self.raw_discards) != len(self.points):
            raise CalibrationError("raw_discards length must match points")

    @property
    def rates(self) -> tuple[float, ...]:
        return tuple(p for p, _ in self.points)

    @property
    def discards(self) -> tuple[float, ...]:
        return tuple(d for _, d in self.points)

    def expected_discard(self, p: float) -> float:
        """Forward piecewise-linear interpolation, clamped at the ends."""
        ps, ds = self.rates, self.discards
        if p <= ps[0]:
            return ds[0]
        if p >= ps[-1]:
            return ds[-1]
        i = bisect_left(ps, p)
        if ps[i] == p:
            return ds[i]
        frac = (p - ps[i - 1]) / (ps[i] - ps[i - 1])
        return ds[i - 1] + frac * (ds[i] - ds[i - 1])

    def invert(self, d: float) -> tuple[float, bool]:
        """Map a discard fraction back to a rate.

        Returns (p, saturated).  Values outside the fitted range clamp to the
        corresponding end rate and are flagged; ties on flat segments resolve
        to the lowest rate producing that discard.
        """
        ps, ds = self.rates, self.discards
        if d < ds[0]:
            return ps[0], True
        if d > ds[-1]:
            return ps[-1], True
        i = bisect_left(ds, d)
        if ds[i] == d:
            return ps[i], False
        # ds[i-1] < d < ds[i]; strict gap, safe to divide
        frac = (d - ds[i - 1]) / (ds[i] - ds[i - 1])
        return ps[i - 1] + frac * (ps[i] - ps[i - 1]), False

    def to_json(self) -> str:
        return json.dumps(
            {
                "benchmark_label": self.benchmark_label,
                "shots": self.shots,
                "points": [[p, d] for p, d in self.points],
                "raw_discards": list(self.raw_discards),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "CalibrationCurve":
        obj = json.loads(text)
        return cls(
            points=tuple((float(p), float(d)) for p, d in obj["points"]),
            benchmark_label=str(obj.get("benchmark_label", "")),
            raw_discards=tuple(float(d) for d in obj.get("raw_discards", [])),
            shots=int(obj.get("shots", 0)),
        )


@dataclass(frozen=True)
class NoiseEstimate:
    region_id: int
    d_observed: float
    p_estimated: float
    ci_low: float
    ci_high: float
    saturated: bool

    def __post_init__(self) -> None:
        if not self.ci_low <= self.p_estimated <= self.ci_high:
            raise CalibrationError(
                f"region {self.region_id}: interval [{self.ci_low}, {self.ci_high}] "
                f"does not bracket {self.p_estimated}"
            )


def fit_isotonic(values: Sequence[float]) -> list[float]:
    """Non-decreasing least-squares fit by pool-adjacent-violators."""
    # blocks of (sum, count); merge backwards while means decrease
    sums: list[float] = []
    counts: list[int] = []
    for v in values:
        sums.append(float(v))
        counts.append(1)
        while len(sums) > 1 and sums[-2] * counts[-1] > sums[-1] * counts[-2]:
            sums[-2] += sums[-1]
            counts[-2] += counts[-1]
            del sums[-1], counts[-1]
    out: list[float] = []
    for s, c in zip(sums, counts):
        out.extend([s / c] * c)
    return out


def build_calibration_curve(
    benchmark: SandwichedCircuit,
    p_grid: Sequence[float],
    shots: int,
    seed: int,
    *,
    workers: int = 1,
    label: str = "",
) -> CalibrationCurve:
    """Simulate the sandwiched benchmark at each grid rate and fit d(p).

    Each grid point runs under NoiseSpec(p, 2p) with its own derived seed, so
    the sweep parallelizes without changing results.
    """
    if not p_grid:
        raise CalibrationError("empty calibration grid")
    if any(b <= a for a, b in zip(p_grid, p_grid[1:])):
        raise CalibrationError(f"calibration grid must be strictly increasing, got {list(p_grid)}")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    jobs = [
        (i, benchmark.circuit, NoiseSpec.from_single_rate(p), shots, derive_seed(seed, "calib", i))
        for i, p in enumerate(p_grid)
    ]
    by_point = parallel_map_jobs(jobs, workers)
    raw: list[float] = []
    for i in range(len(p_grid)):
        _, discarded = filter_counts(by_point[i], benchmark.check_bits)
        raw.append(discard_fraction(discarded, shots))
    fitted = fit_isotonic(raw)
    return CalibrationCurve(
        points=tuple(zip((float(p) for p in p_grid), fitted)),
        benchmark_label=label or (benchmark.payload.label or "benchmark"),
        raw_discards=tuple(raw),
        shots=shots,
    )


def wilson_interval(successes: int, trials: int, z: float = WILSON_Z) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion; stable near 0 and 1."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise ValueError(f"successes {successes} outside [0, {trials}]")
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials))
    # roundoff at the endpoints can land a bound on the wrong side of phat
    return min(max(0.0, center - half), phat), max(min(1.0, center + half), phat)


def estimate_noise_map(
    results: Sequence[ThreadResult], curve: CalibrationCurve
) -> list[NoiseEstimate]:
    """Invert each thread's discard fraction through the calibration curve.

    The Wilson 95% interval on the discard fraction maps through the same
    monotone inverse, so the rate interval brackets the point estimate by
    construction.
    """
    if len(set(curve.discards)) < 2:
        raise CalibrationError(
            "degenerate calibration curve: needs at least two distinct discard values"
        )
    out = []
    for t in sorted(results, key=lambda r: r.region_id):
        p_est, saturated = curve.invert(t.discard_fraction)
        lo_d, hi_d = wilson_interval(t.discarded, t.raw.total_shots)
        lo_p, _ = curve.invert(lo_d)
        hi_p, _ = curve.invert(hi_d)
        out.append(
            NoiseEstimate(
                region_id=t.region_id,
                d_observed=t.discard_fraction,
                p_estimated=p_est,
                ci_low=min(lo_p, p_est),
                ci_high=max(hi_p, p_est),
                saturated=saturated,
            )
        )
    return out


def _grid_of(values: dict[int, float], qpu: QpuModel) -> np.ndarray:
    rows, cols = qpu.grid_shape
    grid = np.full(rows * cols, np.nan)
    for rid, v in values.items():
        grid[rid] = v
    return grid.reshape(rows, cols)


def export_heatmap(
    estimates: Sequence[NoiseEstimate], qpu: QpuModel, out_dir: str | Path
) -> dict[str, Path]:
    """Write row-major heatmap CSVs and the full-record JSON sidecar.

    Emits discard_rates.csv, p_estimated.csv, p_true.csv (ground truth from
    the model), and noise_estimates.json.  Regions with no estimate (skipped
    at allocation) appear as nan cells.  Returns {name: path} for the files
    written.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for e in estimates:
        if not 0 <= e.region_id < len(qpu.regions):
            raise ValueError(f"estimate for unknown region {e.region_id}")
    d_map = {e.region_id: e.d_observed for e in estimates}
    p_map = {e.region_id: e.p_estimated for e in estimates}
    true_map = {r.id: r.noise.p1 for r in qpu.regions}
    paths: dict[str, Path] = {}
    try:
        for name, data in (
            ("discard_rates", d_map),
            ("p_estimated", p_map),
            ("p_true", true_map),
        ):
            path = out / f"{name}.csv"
            np.savetxt(path, _grid_of(data, qpu), delimiter=",", fmt="%.10g")
            paths[name] = path
        sidecar = out / "noise_estimates.json"
        records = [
            {
                "region_id": e.region_id,
                "d": e.d_observed,
                "p_est": e.p_estimated,
                "ci": [e.ci_low, e.ci_high],
                "saturated": e.saturated,
            }
            for e in estimates
        ]
        sidecar.write_text(json.dumps(records, sort_keys=True, indent=2) + "\n")
        paths["noise_estimates"] = sidecar
    except OSError as exc:
        raise CalibrationError(f"failed writing heatmap files under {out}: {exc}") from exc
    return paths
