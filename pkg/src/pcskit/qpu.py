"""Emulated multi-region QPU and multi-programmed execution.

A device is a grid of isolated regions, each with its own qubit budget and
depolarizing rates.  Multi-programming packs one circuit copy ("thread")
per region that has room for payload plus ancillas; the device-level thread
bound floor(n_total / (q_algorithm + q_ancilla)) is computed alongside and
reported, but placement is one thread per fitting region.

Each thread simulates under its region's noise with a seed derived from
(root seed, "thread", thread_id), so results are independent of execution
order and worker count.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .checks import SandwichedCircuit
from .errors import ExecutionError
from .seeding import derive_seed
from .sim import CountsMap, NoiseSpec, run_trajectories

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Region:
    id: int
    qubit_count: int
    noise: NoiseSpec

    def __post_init__(self):
        if self.qubit_count < 1:
            raise ValueError(f"region {self.id} has no qubits")


@dataclass(frozen=True)
class QpuModel:
    regions: tuple[Region, ...]
    grid_shape: tuple[int, int]

    def __post_init__(self):
        rows, cols = self.grid_shape
        if rows * cols != len(self.regions):
            raise ValueError(
                f"grid {rows}x{cols} does not cover {len(self.regions)} regions"
            )
        if [r.id for r in self.regions] != list(range(len(self.regions))):
            raise ValueError("region ids must be 0..n-1 in order")

    @property
    def total_qubits(self) -> int:
        return sum(r.qubit_count for r in self.regions)

    @property
    def p1_rates(self) -> list[float]:
        return [r.noise.p1 for r in self.regions]

    def region(self, region_id: int) -> Region:
        return self.regions[region_id]

    def permuted(self, seed: int) -> "QpuModel":
        """Shuffle the noise profile across region slots (layout unchanged).

        Used to emulate devices whose noise is not spatially ordered; the
        permutation is reproducible from the seed.
        """
        rng = np.random.default_rng(seed)
        order = rng.permutation(len(self.regions))
        regions = tuple(
            Region(i, self.regions[src].qubit_count, self.regions[src].noise)
            for i, src in enumerate(order)
        )
        return QpuModel(regions, self.grid_shape)


@dataclass(frozen=True)
class Allocation:
    thread_id: int
    region_id: int
    shots: int


def _near_square_grid(count: int) -> tuple[int, int]:
    best = (1, count)
    for rows in range(1, int(count**0.5) + 1):
        if count % rows == 0:
            best = (rows, count // rows)
    return best


def make_linear_sweep_qpu(
    regions: int,
    qubits_per_region: int,
    p_min: float,
    p_max: float,
    grid_shape: tuple[int, int] | None = None,
) -> QpuModel:
    """Regions whose 1-qubit rate sweeps linearly from p_min to p_max, with
    the 2-qubit rate fixed at twice the 1-qubit rate."""
    if regions < 1:
        raise ValueError("need at least one region")
    if p_min > p_max:
        raise ValueError(f"p_min {p_min} exceeds p_max {p_max}")
    if grid_shape is None:
        grid_shape = _near_square_grid(regions)
    rates = (
        [p_min]
        if regions == 1
        else [p_min + i * (p_max - p_min) / (regions - 1) for i in range(regions)]
    )
    return QpuModel(
        tuple(
            Region(i, qubits_per_region, NoiseSpec.from_single_rate(p)) for i, p in enumerate(rates)
        ),
        grid_shape,
    )


def thread_capacity(total_qubits: int, q_algorithm: int, q_ancilla: int) -> int:
    """Device-level parallel thread bound: floor(n / (q_algorithm + q_ancilla))."""
    need = q_algorithm + q_ancilla
    if need < 1:
        raise ValueError("thread needs at least one qubit")
    return total_qubits // need


def allocate_threads(
    qpu: QpuModel, q_algorithm: int, q_ancilla: int, shots: int = 0
) -> list[Allocation]:
    """One thread per region with capacity for payload + ancillas.

    Regions too small for a single thread are skipped with a warning.  An
    empty list (nothing fits) is a signal for the caller, not an exception.
    """
    need = q_algorithm + q_ancilla
    if need < 1:
        raise ValueError("thread needs at least one qubit")
    allocations: list[Allocation] = []
    for region in qpu.regions:
        if region.qubit_count < need:
            log.warning(
                "region %d skipped: %d qubits < %d needed per thread",
                region.id,
                region.qubit_count,
                need,
            )
            continue
        allocations.append(Allocation(len(allocations), region.id, shots))
    return allocations


def skipped_regions(qpu: QpuModel, q_algorithm: int, q_ancilla: int) -> list[int]:
    need = q_algorithm + q_ancilla
    return [r.id for r in qpu.regions if r.qubit_count < need]


def _simulate_job(job: tuple) -> tuple[int, CountsMap]:
    thread_id, circuit, noise, shots, seed = job
    try:
        return thread_id, run_trajectories(circuit, noise, shots, seed)
    except Exception as exc:
        raise ExecutionError(f"thread {thread_id} failed: {exc}") from exc


def parallel_map_jobs(jobs: list[tuple], workers: int) -> dict[int, CountsMap]:
    """Run (thread_id, circuit, noise, shots, seed) jobs, serially or across
    processes; the result keying makes scheduling order irrelevant."""
    if workers <= 1 or len(jobs) <= 1:
        return dict(_simulate_job(j) for j in jobs)
    out: dict[int, CountsMap] = {}
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for tid, counts in pool.map(_simulate_job, jobs):
            out[tid] = counts
    return out


def run_multiprogram(
    qpu: QpuModel,
    sandwiched: SandwichedCircuit,
    shots: int,
    seed: int,
    *,
    workers: int = 1,
    seed_tag: str = "thread",
) -> list[tuple[Allocation, CountsMap]]:
    """Execute one copy of the sandwiched circuit per fitting region.

    Returns (allocation, counts) ordered by thread id.  Per-thread seeds are
    derived as (seed, seed_tag, thread_id); two QPUs that agree on a region
    produce bit-identical counts for the thread mapped there.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    q_anc = len(sandwiched.ancilla_indices)
    q_alg = sandwiched.circuit.num_qubits - q_anc
    allocations = allocate_threads(qpu, q_alg, q_anc, shots)
    if not allocations:
        raise ValueError(
            f"no region can host a {q_alg}+{q_anc} qubit thread on this device"
        )
    jobs = [
        (
            a.thread_id,
            sandwiched.circuit,
            qpu.region(a.region_id).noise,
            shots,
            derive_seed(seed, seed_tag, a.thread_id),
        )
        for a in allocations
    ]
    results = parallel_map_jobs(jobs, workers)
    return [(a, results[a.thread_id]) for a in allocations]


def qpu_from_spec(
    regions: int | None = None,
    qubits_per_region: int | None = None,
    p_min: float | None = None,
    p_max: float | None = None,
    rates: Sequence[float] | None = None,
    grid: tuple[int, int] | None = None,
    permute_seed: int | None = None,
) -> QpuModel:
    """Build a device from config fields: either a linear sweep
    (regions/p_min/p_max) or an explicit per-region rate list."""
    if rates is not None:
        if qubits_per_region is None:
            raise ValueError("rates form needs qubits_per_region")
        shape = tuple(grid) if grid else _near_square_grid(len(rates))
        qpu = QpuModel(
            tuple(
                Region(i, qubits_per_region, NoiseSpec.from_single_rate(float(p)))
                for i, p in enumerate(rates)
            ),
            shape,
        )
    else:
        if None in (regions, qubits_per_region, p_min, p_max):
            raise ValueError("sweep form needs regions, qubits_per_region, p_min, p_max")
        qpu = make_linear_sweep_qpu(
            regions, qubits_per_region, p_min, p_max, tuple(grid) if grid else None
        )
    if permute_seed is not None:
        qpu = qpu.permuted(permute_seed)
    return qpu
