"""Pauli check sandwiching.

A check pair (L, R) protects a payload U when R U L = U: the left check is
applied before the payload and the right check after, each controlled on a
fresh ancilla prepared in |+>.  A Pauli error E striking inside the payload
reaches the right check as some propagated Pauli; whenever that operator
anti-commutes with R, phase kickback drives the ancilla to |-> and the final
Hadamard plus measurement reads 1, flagging the shot for discard.  On a
noiseless run the interference is exact and every ancilla reads 0.

Right checks for Clifford payloads are synthesized by conjugation; anything
non-Clifford falls back to validating candidate Paulis against the dense
unitary (capped at 12 qubits).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .circuits import Circuit, UNITARY_CAP, unitary_of
from .errors import UnsupportedGateError
from .pauli import PauliString, commutes, conjugate_through_clifford

VALIDATE_TOL = 1e-9


@dataclass(frozen=True)
class CheckPair:
    """Left and right check operators; both must be Hermitian and equal width."""

    left: PauliString
    right: PauliString

    def __post_init__(self):
        if self.left.num_qubits != self.right.num_qubits:
            raise ValueError("left/right check width mismatch")
        for name, p in (("left", self.left), ("right", self.right)):
            if not p.is_hermitian:
                raise ValueError(f"{name} check {p.to_label()} is not Hermitian")
        if not self.left.support and not self.right.support:
            raise ValueError("identity check pair protects nothing")

    @property
    def num_qubits(self) -> int:
        return self.left.num_qubits

    @property
    def protected_qubits(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.left.support) | set(self.right.support)))


@dataclass(frozen=True)
class SandwichedCircuit:
    """Payload wrapped in controlled checks, with the bit bookkeeping needed
    downstream: which classical bits carry payload outcomes and which carry
    check (ancilla) outcomes."""

    circuit: Circuit
    ancilla_indices: tuple[int, ...]
    payload_bits: tuple[int, ...]
    check_bits: tuple[int, ...]
    payload: Circuit
    checks: tuple[CheckPair, ...]

    def with_circuit(self, circuit: Circuit) -> "SandwichedCircuit":
        """Same bookkeeping over a rewritten circuit (e.g. after transpile)."""
        if circuit.num_qubits != self.circuit.num_qubits or circuit.num_clbits != self.circuit.num_clbits:
            raise ValueError("rewritten circuit changed register sizes")
        return replace(self, circuit=circuit)


def validate_check_pair(left: PauliString, right: PauliString, u: Circuit, tol: float = VALIDATE_TOL) -> bool:
    """True iff right * U * left == c * U for some unit scalar c (dense check)."""
    n = u.num_qubits
    if left.num_qubits != n or right.num_qubits != n:
        raise ValueError(
            f"check width {left.num_qubits}/{right.num_qubits} does not match {n}-qubit payload"
        )
    mat_u = unitary_of(u.without_measurements())
    a = right.to_matrix() @ mat_u @ left.to_matrix()
    c = np.trace(mat_u.conj().T @ a) / (1 << n)
    if abs(abs(c) - 1.0) > tol:
        return False
    return bool(np.allclose(a, c * mat_u, atol=tol))


def synthesize_right_check(left: PauliString, u: Circuit) -> PauliString:
    """Right check R = U L U^dagger for a Clifford payload.

    Raises UnsupportedGateError when the payload contains non-Clifford
    gates; callers can fall back to candidate search via validation.
    """
    return conjugate_through_clifford(left, u.without_measurements())


def _pair_sign(left: PauliString, right: PauliString, u: Circuit) -> int:
    """Sign c = +-1 in right * U * left = c * U; raises if the pair is invalid."""
    n = u.num_qubits
    bare = u.without_measurements()
    if n <= UNITARY_CAP:
        mat_u = unitary_of(bare)
        a = right.to_matrix() @ mat_u @ left.to_matrix()
        c = np.trace(mat_u.conj().T @ a) / (1 << n)
        for sign in (1, -1):
            if abs(c - sign) <= VALIDATE_TOL and np.allclose(a, sign * mat_u, atol=VALIDATE_TOL):
                return sign
        raise ValueError(
            f"({left.to_label()}, {right.to_label()}) is not a valid check pair for this payload"
        )
    # Too wide for dense validation: usable only for Clifford payloads.
    synth = conjugate_through_clifford(left, bare)
    if synth.ops != right.ops:
        raise ValueError(
            f"({left.to_label()}, {right.to_label()}) is not a valid check pair for this payload"
        )
    delta = (right.label_exp - synth.label_exp) % 4
    if delta == 0:
        return 1
    if delta == 2:
        return -1
    raise ValueError("check pair differs from the synthesized check by a non-real phase")


def detect_rate_theoretical(check: CheckPair, error: PauliString) -> bool:
    """Whether a Pauli error arriving at the right check is flagged: true iff
    it anti-commutes with R."""
    return not commutes(error, check.right)


def sandwich(payload: Circuit, checks: Sequence[CheckPair]) -> SandwichedCircuit:
    """Wrap the payload in controlled checks, one fresh ancilla per pair.

    Per check k (ancilla a_k, classical check bit after the payload bits):
    H(a_k) - controlled-L_k - payload - controlled-R_k - H(a_k) - measure.
    Left blocks are nested outside-in and right blocks inside-out.  A pair
    whose letter-level sign works out to R U L = -U gets a Z on its ancilla
    so that clean runs still read 0.

    Checks must pairwise commute (left with left, right with right); the
    nested interference argument needs it.  An empty check list returns the
    payload untouched.
    """
    checks = tuple(checks)
    if not checks:
        return SandwichedCircuit(
            circuit=payload.copy(),
            ancilla_indices=(),
            payload_bits=tuple(cb for _, cb in payload.measured_pairs()),
            check_bits=(),
            payload=payload,
            checks=(),
        )
    n = payload.num_qubits
    for ck in checks:
        if ck.num_qubits != n:
            raise ValueError("check width does not match payload")
    for i in range(len(checks)):
        for j in range(i + 1, len(checks)):
            if not commutes(checks[i].left, checks[j].left) or not commutes(checks[i].right, checks[j].right):
                raise ValueError(
                    f"check pairs {i} and {j} do not commute; nested sandwiching is only "
                    "transparent for mutually commuting checks"
                )
    signs = [_pair_sign(ck.left.strip_phase(), ck.right.strip_phase(), payload) for ck in checks]

    k = len(checks)
    m = payload.num_clbits
    out = Circuit(n + k, m + k, label=(payload.label + f"+pcs{k}") if payload.label else f"pcs{k}")
    ancillas = tuple(n + j for j in range(k))

    for a in ancillas:
        out.h(a)
    for j in reversed(range(k)):
        left = checks[j].left
        for q in left.support:
            out.cpauli(left.ops[q], ancillas[j], q)
    for g in payload.unitary_gates:
        out.add(g)
    for j in range(k):
        right = checks[j].right
        for q in right.support:
            out.cpauli(right.ops[q], ancillas[j], q)
    for j, a in enumerate(ancillas):
        if signs[j] < 0:
            out.z(a)
        out.h(a)
    for q, cb in payload.measured_pairs():
        out.measure(q, cb)
    for j, a in enumerate(ancillas):
        out.measure(a, m + j)

    return SandwichedCircuit(
        circuit=out,
        ancilla_indices=ancillas,
        payload_bits=tuple(cb for _, cb in payload.measured_pairs()),
        check_bits=tuple(range(m, m + k)),
        payload=payload,
        checks=checks,
    )


def auto_edge_checks(payload: Circuit) -> list[CheckPair]:
    """Single-qubit checks on the first and last payload qubit.

    Per qubit, X is tried first and then Z, with L = R; the first candidate
    passing validation against the payload wins.  Raises if neither letter
    works on some edge.
    """
    n = payload.num_qubits
    bare = payload.without_measurements()
    edges = [0, n - 1] if n > 1 else [0]
    pairs: list[CheckPair] = []
    for q in edges:
        for letter in ("X", "Z"):
            cand = PauliString.single(letter, q, n)
            if validate_check_pair(cand, cand, bare):
                pairs.append(CheckPair(cand, cand))
                break
        else:
            raise UnsupportedGateError(
                f"no single-qubit X or Z check passes validation on edge qubit {q}"
            )
    return pairs
