"""Device model, thread allocation, and multi-programmed execution."""

import logging

import numpy as np
import pytest

from pcskit import (
    Allocation,
    NoiseSpec,
    QpuModel,
    Region,
    allocate_threads,
    auto_edge_checks,
    build_ghz_mirror,
    build_toffoli,
    thread_capacity,
    make_linear_sweep_qpu,
    run_multiprogram,
    sandwich,
    transpile_to_basis,
)
from pcskit.errors import ExecutionError
from pcskit.qpu import qpu_from_spec, skipped_regions


def small_sandwich(width: int = 3):
    payload = build_ghz_mirror(width)
    s = sandwich(payload, auto_edge_checks(payload))
    return s.with_circuit(transpile_to_basis(s.circuit))


class TestLinearSweep:
    def test_sweep_endpoints(self):
        qpu = make_linear_sweep_qpu(60, 10, 0.0005, 0.03)
        assert qpu.regions[0].noise.p1 == pytest.approx(0.0005)
        assert qpu.regions[59].noise.p1 == pytest.approx(0.03)
        assert qpu.total_qubits == 600
        for r in qpu.regions:
            assert r.noise.p2 == pytest.approx(2 * r.noise.p1)

    def test_twenty_region_configuration(self):
        qpu = make_linear_sweep_qpu(20, 10, 0.0005, 0.01)
        assert qpu.regions[19].noise.p1 == pytest.approx(0.01)
        assert len(qpu.regions) == 20

    def test_single_region_uses_p_min(self):
        qpu = make_linear_sweep_qpu(1, 10, 0.01, 0.03)
        assert qpu.regions[0].noise.p1 == 0.01

    def test_rates_strictly_increase(self):
        qpu = make_linear_sweep_qpu(60, 10, 0.0005, 0.03)
        rates = qpu.p1_rates
        assert all(b > a for a, b in zip(rates, rates[1:]))

    def test_invalid_range_rejected(self):
        with pytest.raises(ValueError):
            make_linear_sweep_qpu(5, 10, 0.03, 0.0005)


class TestQpuModel:
    def test_grid_must_cover_regions(self):
        regions = tuple(Region(i, 10, NoiseSpec(0.01, 0.02)) for i in range(6))
        with pytest.raises(ValueError):
            QpuModel(regions, (2, 2))

    def test_region_ids_must_be_dense(self):
        regions = (Region(1, 10, NoiseSpec(0.01, 0.02)),)
        with pytest.raises(ValueError):
            QpuModel(regions, (1, 1))

    def test_permuted_preserves_rate_multiset(self):
        qpu = make_linear_sweep_qpu(12, 10, 0.001, 0.02, grid_shape=(3, 4))
        shuffled = qpu.permuted(9)
        assert sorted(shuffled.p1_rates) == sorted(qpu.p1_rates)
        assert shuffled.p1_rates != qpu.p1_rates
        assert shuffled.grid_shape == qpu.grid_shape
        assert shuffled.p1_rates == qpu.permuted(9).p1_rates  # seed-stable


class TestAllocation:
    def test_sixty_region_sixty_threads(self):
        qpu = make_linear_sweep_qpu(60, 10, 0.0005, 0.03)
        allocs = allocate_threads(qpu, 8, 2)
        assert len(allocs) == 60
        assert [a.region_id for a in allocs] == list(range(60))
        assert [a.thread_id for a in allocs] == list(range(60))
        assert thread_capacity(qpu.total_qubits, 8, 2) == 60

    def test_floor_formula_examples(self):
        assert thread_capacity(600, 8, 2) == 60
        assert thread_capacity(10, 8, 2) == 1
        assert thread_capacity(9, 8, 2) == 0
        with pytest.raises(ValueError):
            thread_capacity(10, 0, 0)

    def test_too_small_region_skipped_with_warning(self, caplog):
        qpu = make_linear_sweep_qpu(1, 9, 0.01, 0.01)
        with caplog.at_level(logging.WARNING):
            allocs = allocate_threads(qpu, 8, 2)
        assert allocs == []
        assert skipped_regions(qpu, 8, 2) == [0]
        assert any("region" in rec.message for rec in caplog.records)

    def test_capacity_property_matches_formula(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            q_alg = int(rng.integers(1, 12))
            q_anc = int(rng.integers(0, 4))
            need = q_alg + q_anc
            regions = int(rng.integers(1, 30))
            qpu = make_linear_sweep_qpu(regions, need, 0.001, 0.01)
            allocs = allocate_threads(qpu, q_alg, q_anc)
            assert len(allocs) == thread_capacity(qpu.total_qubits, q_alg, q_anc) == regions


class TestQpuFromSpec:
    def test_rates_form(self):
        qpu = qpu_from_spec(rates=[0.001, 0.02, 0.005], qubits_per_region=10, grid=(1, 3))
        assert qpu.p1_rates == [0.001, 0.02, 0.005]
        assert qpu.grid_shape == (1, 3)

    def test_sweep_form_with_permutation(self):
        plain = qpu_from_spec(regions=8, qubits_per_region=10, p_min=0.001, p_max=0.02, grid=(2, 4))
        perm = qpu_from_spec(
            regions=8, qubits_per_region=10, p_min=0.001, p_max=0.02, grid=(2, 4), permute_seed=3
        )
        assert sorted(perm.p1_rates) == sorted(plain.p1_rates)
        assert perm.p1_rates != plain.p1_rates

    def test_missing_fields_rejected(self):
        with pytest.raises(ValueError):
            qpu_from_spec(rates=[0.01, 0.02])


class TestRunMultiprogram:
    def test_thread_results_ordered_and_complete(self):
        qpu = make_linear_sweep_qpu(4, 5, 0.001, 0.02)
        s = small_sandwich(3)
        results = run_multiprogram(qpu, s, 500, 21)
        assert len(results) == 4
        for i, (alloc, counts) in enumerate(results):
            assert isinstance(alloc, Allocation)
            assert alloc.thread_id == i
            assert alloc.shots == 500
            assert counts.total_shots == 500

    def test_discard_grows_with_region_noise(self):
        qpu = make_linear_sweep_qpu(2, 5, 0.0005, 0.03)
        s = small_sandwich(3)
        results = run_multiprogram(qpu, s, 4000, 33)

        def discard(counts):
            return sum(v for k, v in counts.counts.items() if any(k[b] == "1" for b in s.check_bits))

        assert discard(results[1][1]) > discard(results[0][1])

    def test_zero_noise_region_never_fires(self):
        qpu = make_linear_sweep_qpu(1, 5, 0.0, 0.0)
        s = small_sandwich(3)
        (_, counts), = run_multiprogram(qpu, s, 2000, 4)
        assert set(counts.counts) == {"00000"}

    def test_serial_and_parallel_bit_identical(self):
        qpu = make_linear_sweep_qpu(3, 5, 0.001, 0.01)
        s = small_sandwich(3)
        serial = run_multiprogram(qpu, s, 300, 77, workers=1)
        parallel = run_multiprogram(qpu, s, 300, 77, workers=2)
        assert serial == parallel

    def test_noise_isolation(self):
        s = small_sandwich(3)
        a = qpu_from_spec(rates=[0.004, 0.001, 0.02], qubits_per_region=5)
        b = qpu_from_spec(rates=[0.004, 0.02, 0.001], qubits_per_region=5)  # others swapped
        ra = run_multiprogram(a, s, 1000, 13)
        rb = run_multiprogram(b, s, 1000, 13)
        assert ra[0][1] == rb[0][1]

    def test_identical_regions_distinct_but_consistent(self):
        scipy_stats = pytest.importorskip("scipy.stats")
        qpu = qpu_from_spec(rates=[0.01, 0.01], qubits_per_region=5)
        s = small_sandwich(3)
        (_, c0), (_, c1) = run_multiprogram(qpu, s, 8000, 55)
        assert c0 != c1  # distinct thread seeds
        keys = sorted(set(c0.counts) | set(c1.counts))
        table = np.array([[c.counts.get(k, 0) for k in keys] for c in (c0, c1)])
        keep = table.sum(axis=0) >= 10  # pool rare outcomes for a valid test
        pooled = np.column_stack([table[:, keep], table[:, ~keep].sum(axis=1)])
        _, pval, _, _ = scipy_stats.chi2_contingency(pooled)
        assert pval > 0.001

    def test_nothing_fits_raises(self):
        qpu = make_linear_sweep_qpu(1, 4, 0.01, 0.01)
        s = small_sandwich(3)  # needs 5 qubits
        with pytest.raises(ValueError, match="no region can host"):
            run_multiprogram(qpu, s, 100, 1)

    def test_thread_failure_tagged(self):
        qpu = make_linear_sweep_qpu(1, 5, 0.01, 0.01)
        s = sandwich(build_toffoli(), [])  # raw ccx cannot run under noise
        with pytest.raises(ExecutionError, match="thread 0"):
            run_multiprogram(qpu, s, 100, 1)
