"""Pauli string algebra with exact phase tracking.

A Pauli string is stored in symplectic form: per-qubit x/z bits plus a power
of i, so the represented operator is ::

    i**phase_exp  *  prod_q  X_q**x[q] Z_q**z[q]

with the X factor written to the left of the Z factor on each qubit.  A ``Y``
letter is ``i * X Z``, so converting between letters and bits shifts the
phase exponent by one per ``Y``.  All products and Clifford conjugations are
computed exactly over the phase group {+1, +i, -1, -i}; nothing is ever
rounded through floating point.

Qubit 0 is the leftmost character of a label string, matching the bit-string
convention used for measurement outcomes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

import numpy as np

from .errors import UnsupportedGateError

if TYPE_CHECKING:  # pragma: no cover
    from .circuits import Circuit

_LETTER_TO_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_TO_LETTER = {v: k for k, v in _LETTER_TO_BITS.items()}
_PHASE_LABEL = {0: "+", 1: "i", 2: "-", 3: "-i"}
_PHASE_VALUE = {0: 1 + 0j, 1: 1j, 2: -1 + 0j, 3: -1j}

_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Gate kinds conjugate_through_clifford knows how to push a Pauli through.
CLIFFORD_KINDS = frozenset({"h", "s", "sdg", "x", "y", "z", "cx"})


@dataclass(frozen=True)
class PauliString:
    """Immutable n-qubit Pauli operator with an exact phase.

    Attributes:
        x: per-qubit X bits, qubit 0 first.
        z: per-qubit Z bits.
        phase_exp: power of i in the ordered-product form above.
    """

    x: tuple[int, ...]
    z: tuple[int, ...]
    phase_exp: int = 0

    def __post_init__(self):
        if len(self.x) != len(self.z):
            raise ValueError("x and z bit vectors differ in length")
        if not self.x:
            raise ValueError("empty Pauli string")
        if any(b not in (0, 1) for b in self.x + self.z):
            raise ValueError("x/z entries must be 0 or 1")
        object.__setattr__(self, "phase_exp", self.phase_exp % 4)

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse ``"+XIZ"`` style text; ``.`` is accepted for identity.

        The phase prefix is one of ``+``, ``i``, ``-``, ``-i`` and may be
        omitted (meaning +1).
        """
        s = label.strip()
        exp = 0
        for prefix, e in (("-i", 3), ("+i", 1), ("i", 1), ("-", 2), ("+", 0)):
            if s.startswith(prefix):
                exp = e
                s = s[len(prefix):]
                break
        if not s:
            raise ValueError(f"no Pauli letters in {label!r}")
        xs, zs = [], []
        for ch in s:
            # body letters are strict uppercase so the "i" phase prefix
            # can never collide with an identity letter
            letter = "I" if ch == "." else ch
            if letter not in _LETTER_TO_BITS:
                raise ValueError(f"invalid Pauli letter {ch!r} in {label!r}")
            bx, bz = _LETTER_TO_BITS[letter]
            xs.append(bx)
            zs.append(bz)
            if letter == "Y":
                exp += 1
        return cls(tuple(xs), tuple(zs), exp % 4)

    @classmethod
    def identity(cls, num_qubits: int) -> "PauliString":
        return cls((0,) * num_qubits, (0,) * num_qubits, 0)

    @classmethod
    def single(cls, letter: str, qubit: int, num_qubits: int) -> "PauliString":
        """One non-identity letter at ``qubit``, identity elsewhere."""
        ops = ["I"] * num_qubits
        ops[qubit] = letter
        return cls.from_label("+" + "".join(ops))

    # -- views -------------------------------------------------------------

    @property
    def num_qubits(self) -> int:
        return len(self.x)

    @property
    def ops(self) -> str:
        """Letter string without the phase prefix."""
        return "".join(_BITS_TO_LETTER[(bx, bz)] for bx, bz in zip(self.x, self.z))

    @property
    def label_exp(self) -> int:
        """Phase exponent of the labelled form (Y letters absorbed)."""
        y_count = sum(bx & bz for bx, bz in zip(self.x, self.z))
        return (self.phase_exp - y_count) % 4

    @property
    def phase(self) -> complex:
        """Phase multiplying the letter string, one of 1, i, -1, -i."""
        return _PHASE_VALUE[self.label_exp]

    @property
    def is_hermitian(self) -> bool:
        return self.label_exp in (0, 2)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q in range(self.num_qubits) if self.x[q] or self.z[q])

    @property
    def weight(self) -> int:
        return len(self.support)

    def to_label(self) -> str:
        return _PHASE_LABEL[self.label_exp] + self.ops

    def to_matrix(self) -> np.ndarray:
        """Dense 2**n x 2**n matrix (n capped at 12)."""
        if self.num_qubits > 12:
            from .errors import CapacityError

            raise CapacityError(f"dense Pauli matrix capped at 12 qubits, got {self.num_qubits}")
        m = np.array([[self.phase]], dtype=complex)
        for letter in self.ops:
            m = np.kron(m, _MATS[letter])
        return m

    def strip_phase(self) -> "PauliString":
        """Same letters with phase +1."""
        y_count = sum(bx & bz for bx, bz in zip(self.x, self.z))
        return PauliString(self.x, self.z, y_count % 4)

    def __mul__(self, other: "PauliString") -> "PauliString":
        return pauli_mul(self, other)

    def __str__(self) -> str:
        return self.to_label()


def pauli_mul(a: PauliString, b: PauliString) -> PauliString:
    """Exact product a*b.

    Reordering the Z block of ``a`` past the X block of ``b`` contributes
    (-1) for every qubit where both bits are set; everything else is xor.
    """
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"length mismatch: {a.num_qubits} vs {b.num_qubits}")
    swaps = sum(az & bx for az, bx in zip(a.z, b.x))
    exp = (a.phase_exp + b.phase_exp + 2 * swaps) % 4
    x = tuple(ax ^ bx for ax, bx in zip(a.x, b.x))
    z = tuple(az ^ bz for az, bz in zip(a.z, b.z))
    return PauliString(x, z, exp)


def commutes(a: PauliString, b: PauliString) -> bool:
    """True iff the symplectic form of (a, b) is even."""
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"length mismatch: {a.num_qubits} vs {b.num_qubits}")
    parity = sum((ax & bz) ^ (az & bx) for ax, az, bx, bz in zip(a.x, a.z, b.x, b.z))
    return parity % 2 == 0


def conjugate_through_clifford(p: PauliString, c: "Circuit") -> PauliString:
    """Return U p U^dagger for the Clifford circuit c, exact phase included.

    Gates are folded in circuit order (the first gate applied to states is
    conjugated first).  Only {h, s, sdg, x, y, z, cx} are accepted; anything
    else raises UnsupportedGateError rather than being decomposed silently.
    """
    if p.num_qubits != c.num_qubits:
        raise ValueError(f"Pauli is {p.num_qubits}-qubit but circuit has {c.num_qubits}")
    x = list(p.x)
    z = list(p.z)
    exp = p.phase_exp
    for gate in c.gates:
        kind = gate.kind
        if kind not in CLIFFORD_KINDS:
            raise UnsupportedGateError(f"cannot conjugate through gate kind {kind!r}")
        if kind == "cx":
            qc, qt = gate.qubits
            x[qt] ^= x[qc]
            z[qc] ^= z[qt]
            continue
        (q,) = gate.qubits
        if kind == "h":
            exp += 2 * (x[q] & z[q])
            x[q], z[q] = z[q], x[q]
        elif kind == "s":
            exp += x[q]
            z[q] ^= x[q]
        elif kind == "sdg":
            exp += 3 * x[q]
            z[q] ^= x[q]
        elif kind == "x":
            exp += 2 * z[q]
        elif kind == "z":
            exp += 2 * x[q]
        elif kind == "y":
            exp += 2 * (x[q] ^ z[q])
    return PauliString(tuple(x), tuple(z), exp % 4)


def parse_check_operator(label: str, num_qubits: int) -> PauliString:
    """Parse a check operator label and enforce the expected width."""
    p = PauliString.from_label(label)
    if p.num_qubits != num_qubits:
        raise ValueError(
            f"check operator {label!r} acts on {p.num_qubits} qubits, expected {num_qubits}"
        )
    return p


def random_pauli(rng: np.random.Generator, num_qubits: int, allow_phase: bool = True) -> PauliString:
    """Uniformly random Pauli string, mainly for tests and search fallbacks."""
    x = tuple(int(b) for b in rng.integers(0, 2, num_qubits))
    z = tuple(int(b) for b in rng.integers(0, 2, num_qubits))
    exp = int(rng.integers(0, 4)) if allow_phase else sum(a & b for a, b in zip(x, z)) % 4
    return PauliString(x, z, exp)


def paulis_on(qubits: Iterable[int], letters: str, num_qubits: int) -> PauliString:
    """Build a string from parallel (qubit, letter) sequences."""
    ops = ["I"] * num_qubits
    for q, letter in zip(qubits, letters):
        ops[q] = letter
    return PauliString.from_label("+" + "".join(ops))
