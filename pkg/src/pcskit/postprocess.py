"""Post-selection and ensemble construction.

Per thread: drop every shot whose check bits are not all zero, project the
surviving keys onto the payload bits, and record the discard fraction
d = discarded / shots.  Threads are then combined into a single ensemble
with per-thread weights min(d) / d_i, so the least-discarding (cleanest)
region sets the scale and noisier regions contribute proportionally less.

A thread with d == 0 keeps weight 1; if any thread discards nothing, every
thread with d > 0 collapses to weight 0 (the limit of min(d)/d_i).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt
from typing import Mapping, Sequence

from .qpu import Allocation
from .sim import CountsMap


@dataclass(frozen=True)
class ThreadResult:
    thread_id: int
    region_id: int
    raw: CountsMap
    filtered: CountsMap
    discarded: int
    discard_fraction: float
    scaled: dict[str, float]
    payload_bits: tuple[int, ...]


@dataclass(frozen=True)
class EnsembleResult:
    """Weighted ensemble plus the unfiltered/unweighted ensemble of the same
    threads for comparison."""

    cumulative: dict[str, float]
    baseline_cumulative: dict[str, float]
    per_thread: tuple[ThreadResult, ...]
    fidelity_pcs: float | None
    fidelity_base: float | None


def project_key(key: str, keep_bits: Sequence[int]) -> str:
    return "".join(key[i] for i in keep_bits)


def filter_counts(raw: CountsMap, check_bits: Sequence[int]) -> tuple[CountsMap, int]:
    """Split raw counts into (kept payload-projected counts, discarded shots).

    A shot is kept iff every check bit reads 0; kept keys retain only the
    non-check bits, in ascending position order.
    """
    width = raw.num_bits
    if width is None:
        return CountsMap({}, 0), 0
    check_set = set(check_bits)
    for b in check_set:
        if not 0 <= b < width:
            raise ValueError(f"check bit {b} out of range for {width}-bit keys")
    payload_bits = [i for i in range(width) if i not in check_set]
    kept: dict[str, int] = {}
    discarded = 0
    for key, cnt in raw.counts.items():
        if any(key[b] == "1" for b in check_set):
            discarded += cnt
        else:
            pk = project_key(key, payload_bits)
            kept[pk] = kept.get(pk, 0) + cnt
    return CountsMap(kept, raw.total_shots - discarded), discarded


def discard_fraction(discarded: int, shots: int) -> float:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if not 0 <= discarded <= shots:
        raise ValueError(f"discarded {discarded} outside [0, {shots}]")
    return discarded / shots


def scale_counts(counts: CountsMap | Mapping[str, int], d: float, d_min: float) -> dict[str, float]:
    """Scale counts by min(d)/d; a zero-discard thread keeps factor 1."""
    if d < 0 or d_min < 0 or d_min > d + 1e-15:
        raise ValueError(f"invalid discard pair d={d}, d_min={d_min}")
    factor = 1.0 if d == 0.0 else d_min / d
    items = counts.counts.items() if isinstance(counts, CountsMap) else counts.items()
    return {k: v * factor for k, v in items}


def process_threads(
    results: Sequence[tuple[Allocation, CountsMap]], check_bits: Sequence[int]
) -> list[ThreadResult]:
    """Filter every thread, then scale against the global minimum discard."""
    check_set = set(check_bits)
    staged = []
    for alloc, raw in results:
        filtered, discarded = filter_counts(raw, check_bits)
        d = discard_fraction(discarded, raw.total_shots)
        staged.append((alloc, raw, filtered, discarded, d))
    if not staged:
        return []
    d_min = min(s[4] for s in staged)
    out = []
    for alloc, raw, filtered, discarded, d in staged:
        width = raw.num_bits or 0
        payload_bits = tuple(i for i in range(width) if i not in check_set)
        out.append(
            ThreadResult(
                thread_id=alloc.thread_id,
                region_id=alloc.region_id,
                raw=raw,
                filtered=filtered,
                discarded=discarded,
                discard_fraction=d,
                scaled=scale_counts(filtered, d, d_min),
                payload_bits=payload_bits,
            )
        )
    return out


def _accumulate(into: dict[str, float], items: Mapping[str, float]) -> None:
    for k, v in items.items():
        into[k] = into.get(k, 0.0) + v


def ensemble(
    threads: Sequence[ThreadResult], ideal: Mapping[str, float] | None = None
) -> EnsembleResult:
    """Key-wise sum of scaled counts, plus the unscaled no-filter ensemble
    (raw counts projected onto payload bits, nothing dropped).

    When the ideal distribution is supplied, Bhattacharyya fidelities of
    both ensembles are attached.
    """
    if not threads:
        raise ValueError("no threads to combine")
    widths = {t.filtered.num_bits for t in threads if t.filtered.num_bits is not None}
    if len(widths) > 1:
        raise ValueError(f"threads disagree on payload width: {sorted(widths)}")
    cumulative: dict[str, float] = {}
    baseline: dict[str, float] = {}
    for t in threads:
        _accumulate(cumulative, t.scaled)
        for key, cnt in t.raw.counts.items():
            pk = project_key(key, t.payload_bits)
            baseline[pk] = baseline.get(pk, 0.0) + float(cnt)
    f_pcs = fidelity(cumulative, ideal) if ideal is not None and cumulative else None
    f_base = fidelity(baseline, ideal) if ideal is not None and baseline else None
    return EnsembleResult(cumulative, baseline, tuple(threads), f_pcs, f_base)


def fidelity(dist: Mapping[str, float], ideal: Mapping[str, float]) -> float:
    """Bhattacharyya fidelity (sum of sqrt(q * p))^2 between the normalized
    distribution and the ideal one.  For a deterministic ideal outcome this
    reduces to the probability mass on that outcome."""
    total = sum(dist.values())
    if total <= 0:
        raise ValueError("cannot normalize an empty or zero distribution")
    if any(v < 0 for v in dist.values()):
        raise ValueError("negative mass in distribution")
    acc = 0.0
    for key, p in ideal.items():
        q = dist.get(key, 0.0) / total
        acc += sqrt(q * p)
    return acc * acc


def ideal_outcome_probability(dist: Mapping[str, float], outcome: str) -> float:
    total = sum(dist.values())
    if total <= 0:
        raise ValueError("cannot normalize an empty or zero distribution")
    return dist.get(outcome, 0.0) / total


def total_variation(a: Mapping[str, float], b: Mapping[str, float]) -> float:
    """Total variation distance between two (auto-normalized) distributions."""
    ta, tb = sum(a.values()), sum(b.values())
    if ta <= 0 or tb <= 0:
        raise ValueError("cannot compare empty distributions")
    keys = set(a) | set(b)
    return 0.5 * sum(abs(a.get(k, 0.0) / ta - b.get(k, 0.0) / tb) for k in keys)
