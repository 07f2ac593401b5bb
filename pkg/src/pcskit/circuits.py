"""Circuit intermediate representation, benchmark builders, and transpilation.

The gate set is deliberately small: the Cliffords needed for check handling,
``rz``/``sx`` because they form the hardware basis together with ``x`` and
``cx``, plus ``ccx``, controlled single-qubit Paulis for check injection, and
terminal measurement.  ``transpile_to_basis`` lowers everything to
{cx, x, sx, rz, measure}; noise models are applied to the lowered form.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .errors import CapacityError, UnsupportedGateError

ONE_QUBIT_KINDS = frozenset({"h", "x", "sx", "y", "z", "s", "sdg", "rz"})
TWO_QUBIT_KINDS = frozenset({"cx", "cpauli"})
THREE_QUBIT_KINDS = frozenset({"ccx"})
BASIS_KINDS = frozenset({"cx", "x", "sx", "rz", "measure"})
ALL_KINDS = ONE_QUBIT_KINDS | TWO_QUBIT_KINDS | THREE_QUBIT_KINDS | {"measure"}

UNITARY_CAP = 12  # dense unitaries above this are refused


@dataclass(frozen=True)
class Gate:
    """One operation. ``theta`` is rz-only, ``pauli`` is cpauli-only,
    ``clbit`` is measure-only."""

    kind: str
    qubits: tuple[int, ...]
    theta: float | None = None
    pauli: str | None = None
    clbit: int | None = None


@dataclass
class Circuit:
    """A gate list over ``num_qubits`` qubits and ``num_clbits`` classical bits.

    Built imperatively (``c.h(0).cx(0, 1).measure(1, 0)``) and treated as
    immutable once handed to a simulator.  Measurements are terminal: adding
    a unitary gate on an already-measured qubit raises.
    """

    num_qubits: int
    num_clbits: int = 0
    gates: list[Gate] = field(default_factory=list)
    label: str = ""

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("circuit needs at least one qubit")
        if self.num_clbits < 0:
            raise ValueError("negative classical bit count")

    # -- construction ------------------------------------------------------

    def _check_qubits(self, qubits: tuple[int, ...]):
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"repeated qubit in {qubits}")
        for q in qubits:
            if not 0 <= q < self.num_qubits:
                raise ValueError(f"qubit {q} out of range for {self.num_qubits}-qubit circuit")
        measured = self._measured_qubits()
        for q in qubits:
            if q in measured:
                raise ValueError(f"qubit {q} already measured; measurements are terminal")

    def _measured_qubits(self) -> set[int]:
        return {g.qubits[0] for g in self.gates if g.kind == "measure"}

    def add(self, gate: Gate) -> "Circuit":
        kind = gate.kind
        if kind not in ALL_KINDS:
            raise UnsupportedGateError(f"unknown gate kind {kind!r}")
        arity = 1 if kind in ONE_QUBIT_KINDS or kind == "measure" else (2 if kind in TWO_QUBIT_KINDS else 3)
        if len(gate.qubits) != arity:
            raise ValueError(f"{kind} expects {arity} qubit(s), got {gate.qubits}")
        if kind == "rz" and gate.theta is None:
            raise ValueError("rz needs a rotation angle")
        if kind == "cpauli":
            if gate.pauli not in ("X", "Y", "Z"):
                raise ValueError(f"cpauli needs pauli in X/Y/Z, got {gate.pauli!r}")
        if kind == "measure":
            if gate.clbit is None or not 0 <= gate.clbit < self.num_clbits:
                raise ValueError(f"measure target clbit {gate.clbit} out of range")
            if any(g.kind == "measure" and g.clbit == gate.clbit for g in self.gates):
                raise ValueError(f"clbit {gate.clbit} written twice")
            if gate.qubits[0] in self._measured_qubits():
                raise ValueError(f"qubit {gate.qubits[0]} measured twice")
            if not 0 <= gate.qubits[0] < self.num_qubits:
                raise ValueError(f"qubit {gate.qubits[0]} out of range")
        else:
            self._check_qubits(gate.qubits)
        self.gates.append(gate)
        return self

    def h(self, q: int) -> "Circuit":
        return self.add(Gate("h", (q,)))

    def x(self, q: int) -> "Circuit":
        return self.add(Gate("x", (q,)))

    def sx(self, q: int) -> "Circuit":
        return self.add(Gate("sx", (q,)))

    def y(self, q: int) -> "Circuit":
        return self.add(Gate("y", (q,)))

    def z(self, q: int) -> "Circuit":
        return self.add(Gate("z", (q,)))

    def s(self, q: int) -> "Circuit":
        return self.add(Gate("s", (q,)))

    def sdg(self, q: int) -> "Circuit":
        return self.add(Gate("sdg", (q,)))

    def rz(self, theta: float, q: int) -> "Circuit":
        return self.add(Gate("rz", (q,), theta=float(theta)))

    def cx(self, control: int, target: int) -> "Circuit":
        return self.add(Gate("cx", (control, target)))

    def ccx(self, a: int, b: int, target: int) -> "Circuit":
        return self.add(Gate("ccx", (a, b, target)))

    def cpauli(self, pauli: str, control: int, target: int) -> "Circuit":
        return self.add(Gate("cpauli", (control, target), pauli=pauli))

    def measure(self, q: int, clbit: int) -> "Circuit":
        return self.add(Gate("measure", (q,), clbit=clbit))

    def measure_all(self) -> "Circuit":
        for q in range(self.num_qubits):
            self.measure(q, q)
        return self

    # -- views -------------------------------------------------------------

    @property
    def unitary_gates(self) -> list[Gate]:
        return [g for g in self.gates if g.kind != "measure"]

    def measured_pairs(self) -> list[tuple[int, int]]:
        """(qubit, clbit) pairs in clbit order."""
        return sorted(
            ((g.qubits[0], g.clbit) for g in self.gates if g.kind == "measure"),
            key=lambda p: p[1],
        )

    def count_kind(self, kind: str) -> int:
        return sum(1 for g in self.gates if g.kind == kind)

    def copy(self) -> "Circuit":
        return Circuit(self.num_qubits, self.num_clbits, list(self.gates), self.label)

    def without_measurements(self) -> "Circuit":
        return Circuit(self.num_qubits, self.num_clbits, [g for g in self.gates if g.kind != "measure"], self.label)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        gates = []
        for g in self.gates:
            entry: dict = {"kind": g.kind, "qubits": list(g.qubits)}
            if g.theta is not None:
                entry["theta"] = g.theta
            if g.pauli is not None:
                entry["pauli"] = g.pauli
            if g.clbit is not None:
                entry["clbit"] = g.clbit
            gates.append(entry)
        out = {"num_qubits": self.num_qubits, "gates": gates}
        if self.num_clbits:
            out["num_clbits"] = self.num_clbits
        if self.label:
            out["label"] = self.label
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Circuit":
        try:
            n = int(data["num_qubits"])
            raw_gates = data["gates"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"circuit JSON needs num_qubits and gates: {exc}")
        explicit_clbits = data.get("num_clbits")
        # Measures without an explicit clbit default to clbit == qubit.
        n_cl = int(explicit_clbits) if explicit_clbits is not None else n
        c = cls(n, n_cl, label=str(data.get("label", "")))
        for entry in raw_gates:
            kind = entry["kind"]
            qubits = tuple(int(q) for q in entry["qubits"])
            if kind == "measure":
                clbit = entry.get("clbit", qubits[0])
                c.measure(qubits[0], int(clbit))
            else:
                c.add(
                    Gate(
                        kind,
                        qubits,
                        theta=float(entry["theta"]) if "theta" in entry else None,
                        pauli=entry.get("pauli"),
                    )
                )
        return c

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        return cls.from_dict(json.loads(text))


# -- benchmark builders ----------------------------------------------------


def build_ghz_mirror(width: int) -> Circuit:
    """GHZ preparation followed by its inverse, then measurement of all qubits.

    H on qubit 0, a CX chain down the register, the reversed chain, H again:
    exactly 2 H and 2*(width-1) CX gates.  Ideal output is all zeros.
    """
    if width < 2:
        raise ValueError("ghz mirror needs width >= 2")
    c = Circuit(width, width, label=f"ghz_mirror_{width}")
    c.h(0)
    for q in range(width - 1):
        c.cx(q, q + 1)
    for q in reversed(range(width - 1)):
        c.cx(q, q + 1)
    c.h(0)
    c.measure_all()
    return c


def build_toffoli() -> Circuit:
    """Bare 3-qubit Toffoli benchmark: one ccx, all qubits measured.

    Input-state preparation (e.g. |110>) is deliberately not part of this
    circuit; prepend `build_input_prep` so that check operators are chosen
    against the protected operation alone.
    """
    c = Circuit(3, 3, label="toffoli")
    c.ccx(0, 1, 2)
    c.measure_all()
    return c


def build_input_prep(bits: str, num_qubits: int | None = None) -> Circuit:
    """X gates that prepare the computational-basis state ``bits``
    (qubit 0 = leftmost character)."""
    if num_qubits is None:
        num_qubits = len(bits)
    if len(bits) != num_qubits or any(b not in "01" for b in bits):
        raise ValueError(f"input bits {bits!r} must be {num_qubits} binary digits")
    c = Circuit(num_qubits, 0, label=f"prep_{bits}")
    for q, b in enumerate(bits):
        if b == "1":
            c.x(q)
    return c


def prepend(prep: Circuit | None, circuit: Circuit) -> Circuit:
    """Place ``prep``'s gates (state preparation) before ``circuit``'s.

    ``prep`` may act on fewer qubits; indices carry over unchanged.
    """
    if prep is None:
        return circuit.copy()
    if prep.num_qubits > circuit.num_qubits:
        raise ValueError("preparation circuit is wider than the target circuit")
    if any(g.kind == "measure" for g in prep.gates):
        raise ValueError("preparation circuit must be unitary")
    out = Circuit(circuit.num_qubits, circuit.num_clbits, label=circuit.label)
    for g in prep.gates:
        out.add(g)
    for g in circuit.gates:
        out.add(g)
    return out


# -- transpilation ---------------------------------------------------------

_QUARTER = math.pi / 2


def _expand_composite(g: Gate) -> list[Gate]:
    """Lower ccx and cpauli to {h, s, sdg, rz, cx}; pass everything else through."""
    if g.kind == "ccx":
        a, b, t = g.qubits
        tq = math.pi / 4
        seq: list[Gate] = [
            Gate("h", (t,)),
            Gate("cx", (b, t)),
            Gate("rz", (t,), theta=-tq),
            Gate("cx", (a, t)),
            Gate("rz", (t,), theta=tq),
            Gate("cx", (b, t)),
            Gate("rz", (t,), theta=-tq),
            Gate("cx", (a, t)),
            Gate("rz", (b,), theta=tq),
            Gate("rz", (t,), theta=tq),
            Gate("h", (t,)),
            Gate("cx", (a, b)),
            Gate("rz", (a,), theta=tq),
            Gate("rz", (b,), theta=-tq),
            Gate("cx", (a, b)),
        ]
        return seq
    if g.kind == "cpauli":
        c, t = g.qubits
        if g.pauli == "X":
            return [Gate("cx", (c, t))]
        if g.pauli == "Z":
            return [Gate("h", (t,)), Gate("cx", (c, t)), Gate("h", (t,))]
        return [Gate("sdg", (t,)), Gate("cx", (c, t)), Gate("s", (t,))]
    return [g]


def _lower_1q(g: Gate) -> list[Gate]:
    q = g.qubits[0]
    if g.kind in ("x", "sx", "rz"):
        return [g]
    if g.kind == "h":
        return [Gate("rz", (q,), theta=_QUARTER), Gate("sx", (q,)), Gate("rz", (q,), theta=_QUARTER)]
    if g.kind == "s":
        return [Gate("rz", (q,), theta=_QUARTER)]
    if g.kind == "sdg":
        return [Gate("rz", (q,), theta=-_QUARTER)]
    if g.kind == "z":
        return [Gate("rz", (q,), theta=math.pi)]
    if g.kind == "y":
        return [Gate("rz", (q,), theta=math.pi), Gate("x", (q,))]
    raise UnsupportedGateError(f"cannot lower gate kind {g.kind!r}")


def transpile_to_basis(c: Circuit) -> Circuit:
    """Rewrite onto the {cx, x, sx, rz} basis, preserving the unitary up to
    global phase and keeping measurements in place."""
    out = Circuit(c.num_qubits, c.num_clbits, label=c.label)
    for g in c.gates:
        if g.kind == "measure":
            out.add(g)
            continue
        for stage1 in _expand_composite(g):
            if stage1.kind == "cx":
                out.add(stage1)
            else:
                for lowered in _lower_1q(stage1):
                    out.add(lowered)
    return out


# -- dense matrices --------------------------------------------------------

_SQRT_X = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]])
_FIXED_1Q = {
    "h": np.array([[1, 1], [1, -1]]) / math.sqrt(2),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "sx": _SQRT_X,
    "y": np.array([[0, -1j], [1j, 0]]),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "s": np.array([[1, 0], [0, 1j]]),
    "sdg": np.array([[1, 0], [0, -1j]]),
}
_P0 = np.array([[1, 0], [0, 0]], dtype=complex)
_P1 = np.array([[0, 0], [0, 1]], dtype=complex)


def gate_matrix(gate: Gate) -> np.ndarray:
    """Dense matrix of one gate in the order of its qubit tuple."""
    kind = gate.kind
    if kind in _FIXED_1Q:
        return _FIXED_1Q[kind].copy()
    if kind == "rz":
        half = gate.theta / 2.0
        return np.array([[np.exp(-1j * half), 0], [0, np.exp(1j * half)]])
    if kind == "cx":
        return np.kron(_P0, np.eye(2)) + np.kron(_P1, _FIXED_1Q["x"])
    if kind == "cpauli":
        return np.kron(_P0, np.eye(2)) + np.kron(_P1, _FIXED_1Q[gate.pauli.lower()])
    if kind == "ccx":
        m = np.eye(8, dtype=complex)
        m[[6, 7], :] = m[[7, 6], :]
        return m
    raise UnsupportedGateError(f"no matrix for gate kind {kind!r}")


def apply_matrix_to_tensor(tensor: np.ndarray, mat: np.ndarray, axes: Iterable[int]) -> np.ndarray:
    """Contract ``mat`` (2^k x 2^k) into the given tensor axes."""
    axes = list(axes)
    k = len(axes)
    mt = mat.reshape((2,) * (2 * k))
    out = np.tensordot(mt, tensor, axes=(tuple(range(k, 2 * k)), tuple(axes)))
    return np.moveaxis(out, tuple(range(k)), tuple(axes))


def unitary_of(c: Circuit) -> np.ndarray:
    """Dense unitary with qubit 0 as the most significant index bit.

    Refuses circuits containing measurements and anything above 12 qubits.
    """
    if any(g.kind == "measure" for g in c.gates):
        raise ValueError("circuit contains measurements; strip them before unitary_of")
    n = c.num_qubits
    if n > UNITARY_CAP:
        raise CapacityError(f"dense unitary capped at {UNITARY_CAP} qubits, got {n}")
    u = np.eye(1 << n, dtype=complex).reshape((2,) * (2 * n))
    for g in c.gates:
        u = apply_matrix_to_tensor(u, gate_matrix(g), g.qubits)
    return u.reshape(1 << n, 1 << n)


def unitaries_equal_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    """Phase-insensitive equality for same-shape unitaries via |tr(a^dag b)| / dim."""
    if a.shape != b.shape:
        return False
    dim = a.shape[0]
    return abs(abs(np.trace(a.conj().T @ b)) / dim - 1.0) <= tol
