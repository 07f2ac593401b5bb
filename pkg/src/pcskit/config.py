"""Experiment configuration: JSON schema, aggregated validation, round-trip.

A config names a benchmark, the checks to wrap it with, the device model,
and run parameters.  validate_config collects every violation it can find
instead of stopping at the first, so a bad file is fixable in one pass.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from .checks import CheckPair, synthesize_right_check, validate_check_pair
from .circuits import Circuit, build_ghz_mirror, build_input_prep, build_toffoli
from .errors import CapacityError, ConfigError, UnsupportedGateError
from .pauli import PauliString
from .qpu import QpuModel, qpu_from_spec

MODES = ("mitigate", "characterize", "calibrate", "all")
BENCHMARK_KINDS = ("ghz_mirror", "toffoli", "custom")
AUTO_EDGE = "auto-edge"

_TOP_KEYS = {"benchmark", "checks", "qpu", "shots", "seed", "output_dir", "mode", "calibration"}
_QPU_KEYS = {"path", "regions", "qubits_per_region", "p_min", "p_max", "rates", "grid", "permute_seed"}


@dataclass(frozen=True)
class BenchmarkSpec:
    kind: str
    width: int | None = None
    input_bits: str | None = None
    path: str | None = None

    def build(self, base_dir: Path) -> tuple[Circuit, Circuit | None]:
        """Return (payload, state-prep circuit or None).

        Preparation stays outside the payload so checks validate against the
        bare unitary; the runner prepends it ahead of the whole sandwich.
        """
        if self.kind == "ghz_mirror":
            return build_ghz_mirror(self.width or 0), None
        if self.kind == "toffoli":
            bits = self.input_bits if self.input_bits is not None else "110"
            prep = build_input_prep(bits) if "1" in bits else None
            return build_toffoli(), prep
        if self.kind == "custom":
            text = (base_dir / str(self.path)).read_text()
            return Circuit.from_json(text), None
        raise ConfigError([f"unknown benchmark kind {self.kind!r}"])


@dataclass(frozen=True)
class CheckSpec:
    left: str
    right: str


@dataclass(frozen=True)
class QpuSpec:
    path: str | None = None
    regions: int | None = None
    qubits_per_region: int | None = None
    p_min: float | None = None
    p_max: float | None = None
    rates: tuple[float, ...] | None = None
    grid: tuple[int, int] | None = None
    permute_seed: int | None = None

    def build(self, base_dir: Path) -> QpuModel:
        if self.path is not None:
            obj = json.loads((base_dir / self.path).read_text())
            spec = _parse_qpu_dict(obj, [])
            return spec.build(base_dir)
        return qpu_from_spec(
            regions=self.regions,
            qubits_per_region=self.qubits_per_region,
            p_min=self.p_min,
            p_max=self.p_max,
            rates=self.rates,
            grid=self.grid,
            permute_seed=self.permute_seed,
        )


@dataclass(frozen=True)
class CalibrationSpec:
    p_grid: tuple[float, ...] | None = None
    shots: int | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    benchmark: BenchmarkSpec
    checks: tuple[CheckSpec, ...] | str
    qpu: QpuSpec
    shots: int
    seed: int
    mode: str = "mitigate"
    output_dir: str | None = None
    calibration: CalibrationSpec = field(default_factory=CalibrationSpec)
    base_dir: str = "."

    def to_dict(self) -> dict[str, Any]:
        bench: dict[str, Any] = {"kind": self.benchmark.kind}
        if self.benchmark.width is not None:
            bench["width"] = self.benchmark.width
        if self.benchmark.input_bits is not None:
            bench["input_bits"] = self.benchmark.input_bits
        if self.benchmark.path is not None:
            bench["path"] = self.benchmark.path
        checks: Any
        if isinstance(self.checks, str):
            checks = self.checks
        else:
            checks = [{"left": c.left, "right": c.right} for c in self.checks]
        qpu = {k: v for k, v in vars(self.qpu).items() if v is not None}
        if "rates" in qpu:
            qpu["rates"] = list(qpu["rates"])
        if "grid" in qpu:
            qpu["grid"] = list(qpu["grid"])
        out: dict[str, Any] = {
            "benchmark": bench,
            "checks": checks,
            "qpu": qpu,
            "shots": self.shots,
            "seed": self.seed,
            "mode": self.mode,
        }
        if self.output_dir is not None:
            out["output_dir"] = self.output_dir
        calib: dict[str, Any] = {}
        if self.calibration.p_grid is not None:
            calib["p_grid"] = list(self.calibration.p_grid)
        if self.calibration.shots is not None:
            calib["shots"] = self.calibration.shots
        if calib:
            out["calibration"] = calib
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _err(violations: list[str], msg: str) -> None:
    violations.append(msg)


def _parse_benchmark(obj: Any, violations: list[str]) -> BenchmarkSpec:
    if not isinstance(obj, dict):
        _err(violations, "benchmark: expected an object")
        return BenchmarkSpec(kind="invalid")
    kind = obj.get("kind")
    if kind not in BENCHMARK_KINDS:
        _err(violations, f"benchmark.kind: expected one of {BENCHMARK_KINDS}, got {kind!r}")
        return BenchmarkSpec(kind=str(kind))
    width = obj.get("width")
    input_bits = obj.get("input_bits")
    path = obj.get("path")
    if kind == "ghz_mirror":
        if not isinstance(width, int) or width < 2:
            _err(violations, f"benchmark.width: ghz_mirror needs an integer >= 2, got {width!r}")
    elif kind == "toffoli":
        if input_bits is not None and (
            not isinstance(input_bits, str)
            or len(input_bits) != 3
            or any(c not in "01" for c in input_bits)
        ):
            _err(violations, f"benchmark.input_bits: expected a 3-bit string, got {input_bits!r}")
    elif kind == "custom":
        if not isinstance(path, str) or not path:
            _err(violations, "benchmark.path: custom benchmark needs a circuit file path")
    return BenchmarkSpec(
        kind=str(kind),
        width=width if isinstance(width, int) else None,
        input_bits=input_bits if isinstance(input_bits, str) else None,
        path=path if isinstance(path, str) else None,
    )


def _parse_checks(obj: Any, violations: list[str]) -> tuple[CheckSpec, ...] | str:
    if obj == AUTO_EDGE:
        return AUTO_EDGE
    if not isinstance(obj, list):
        _err(violations, f'checks: expected "{AUTO_EDGE}" or a list of pairs, got {obj!r}')
        return ()
    out = []
    for i, item in enumerate(obj):
        if not isinstance(item, dict) or "left" not in item or "right" not in item:
            _err(violations, f"checks[{i}]: expected an object with left/right labels")
            continue
        out.append(CheckSpec(left=str(item["left"]), right=str(item["right"])))
    return tuple(out)


def _parse_qpu_dict(obj: Any, violations: list[str]) -> QpuSpec:
    if not isinstance(obj, dict):
        _err(violations, "qpu: expected an object")
        return QpuSpec()
    for key in set(obj) - _QPU_KEYS:
        _err(violations, f"qpu.{key}: unknown field")
    if "path" in obj:
        return QpuSpec(path=str(obj["path"]))
    rates = obj.get("rates")
    if rates is not None and (
        not isinstance(rates, list) or not all(isinstance(r, (int, float)) for r in rates)
    ):
        _err(violations, "qpu.rates: expected a list of numbers")
        rates = None
    grid = obj.get("grid")
    if grid is not None and (
        not isinstance(grid, list) or len(grid) != 2 or not all(isinstance(g, int) for g in grid)
    ):
        _err(violations, f"qpu.grid: expected [rows, cols], got {grid!r}")
        grid = None
    spec = QpuSpec(
        regions=obj.get("regions"),
        qubits_per_region=obj.get("qubits_per_region"),
        p_min=obj.get("p_min"),
        p_max=obj.get("p_max"),
        rates=tuple(float(r) for r in rates) if rates is not None else None,
        grid=tuple(grid) if grid is not None else None,
        permute_seed=obj.get("permute_seed"),
    )
    if spec.rates is None and (spec.regions is None or spec.p_min is None or spec.p_max is None):
        _err(violations, "qpu: needs either rates[] or regions + p_min + p_max")
    if spec.qubits_per_region is None:
        _err(violations, "qpu.qubits_per_region: required")
    return spec


def _parse_calibration(obj: Any, violations: list[str]) -> CalibrationSpec:
    if obj is None:
        return CalibrationSpec()
    if not isinstance(obj, dict):
        _err(violations, "calibration: expected an object")
        return CalibrationSpec()
    grid = obj.get("p_grid")
    if grid is not None:
        if not isinstance(grid, list) or not all(isinstance(g, (int, float)) for g in grid):
            _err(violations, "calibration.p_grid: expected a list of rates")
            grid = None
        elif any(b <= a for a, b in zip(grid, grid[1:])):
            _err(violations, "calibration.p_grid: must be strictly increasing")
    shots = obj.get("shots")
    if shots is not None and (not isinstance(shots, int) or shots < 1):
        _err(violations, f"calibration.shots: expected an integer >= 1, got {shots!r}")
    return CalibrationSpec(
        p_grid=tuple(float(g) for g in grid) if grid is not None else None,
        shots=shots if isinstance(shots, int) else None,
    )


def _check_pairs_against_payload(
    specs: Sequence[CheckSpec], payload: Circuit, violations: list[str]
) -> None:
    bare = payload.without_measurements()
    for i, cs in enumerate(specs):
        try:
            left = PauliString.from_label(cs.left)
            right = PauliString.from_label(cs.right)
        except ValueError as exc:
            _err(violations, f"checks[{i}]: bad Pauli label: {exc}")
            continue
        if left.num_qubits != payload.num_qubits or right.num_qubits != payload.num_qubits:
            _err(
                violations,
                f"checks[{i}]: labels must cover all {payload.num_qubits} payload qubits",
            )
            continue
        try:
            pair = CheckPair(left, right)
        except ValueError as exc:
            _err(violations, f"checks[{i}]: {exc}")
            continue
        try:
            ok = validate_check_pair(pair.left, pair.right, bare)
        except (ValueError, CapacityError):
            # payload too wide for the dense check; fall back to Clifford synthesis
            try:
                synth = synthesize_right_check(pair.left, bare)
                ok = synth.ops == pair.right.ops and (synth.label_exp - pair.right.label_exp) % 2 == 0
            except UnsupportedGateError as exc:
                _err(violations, f"checks[{i}]: cannot be validated against this payload: {exc}")
                continue
        if not ok:
            _err(
                violations,
                f"checks[{i}]: pair ({cs.left}, {cs.right}) does not commute through the payload",
            )


def validate_config(raw: str, base_dir: str | Path = ".") -> ExperimentConfig:
    """Parse and semantically check a config, reporting every violation.

    Raises ConfigError carrying the full violation list; otherwise returns
    the parsed config with base_dir recorded for later file resolution.
    """
    base = Path(base_dir)
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"])
    violations: list[str] = []
    if not isinstance(obj, dict):
        raise ConfigError(["top level: expected a JSON object"])
    for key in set(obj) - _TOP_KEYS:
        _err(violations, f"{key}: unknown field")
    for key in ("benchmark", "checks", "qpu", "shots", "seed"):
        if key not in obj:
            _err(violations, f"{key}: required field missing")

    bench = _parse_benchmark(obj.get("benchmark"), violations)
    checks = _parse_checks(obj.get("checks", ()), violations)
    qspec = _parse_qpu_dict(obj.get("qpu"), violations) if "qpu" in obj else QpuSpec()
    calib = _parse_calibration(obj.get("calibration"), violations)

    shots = obj.get("shots")
    if not isinstance(shots, int) or shots < 1:
        _err(violations, f"shots: must be an integer >= 1, got {shots!r}")
        shots = 1
    seed = obj.get("seed")
    if not isinstance(seed, int) or seed < 0:
        _err(violations, f"seed: must be a non-negative integer, got {seed!r}")
        seed = 0
    mode = obj.get("mode", "mitigate")
    if mode not in MODES:
        _err(violations, f"mode: expected one of {MODES}, got {mode!r}")
        mode = "mitigate"
    output_dir = obj.get("output_dir")
    if output_dir is not None and not isinstance(output_dir, str):
        _err(violations, f"output_dir: expected a string path, got {output_dir!r}")
        output_dir = None

    # referenced files must exist up front, before anything is simulated
    if bench.kind == "custom" and bench.path:
        if not (base / bench.path).is_file():
            _err(violations, f"benchmark.path: file not found: {bench.path}")
    if qspec.path is not None and not (base / qspec.path).is_file():
        _err(violations, f"qpu.path: file not found: {qspec.path}")

    # deeper checks only make sense once the shallow ones pass
    payload: Circuit | None = None
    if not violations:
        try:
            payload, _ = bench.build(base)
        except Exception as exc:
            _err(violations, f"benchmark: failed to build: {exc}")
    if payload is not None and not isinstance(checks, str):
        _check_pairs_against_payload(checks, payload, violations)
    if not violations:
        try:
            qspec.build(base)
        except Exception as exc:
            _err(violations, f"qpu: failed to build: {exc}")

    if violations:
        raise ConfigError(violations)
    return ExperimentConfig(
        benchmark=bench,
        checks=checks,
        qpu=qspec,
        shots=shots,
        seed=seed,
        mode=str(mode),
        output_dir=output_dir,
        calibration=calib,
        base_dir=str(base),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    return validate_config(p.read_text(), base_dir=p.parent)
