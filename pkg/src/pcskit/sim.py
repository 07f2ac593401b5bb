"""Noisy circuit simulation.

Two engines share one noise model:

``run_trajectories``
    Stochastic Pauli-trajectory sampling over statevectors.  After every
    noisy gate a trajectory applies, with the gate-class probability, one
    uniformly random non-identity Pauli on the gate's qubits.  Averaged over
    trajectories this reproduces the depolarizing channel exactly, so the
    sampler is unbiased with respect to the density-matrix oracle.

``density_matrix_reference``
    Exact evolution of the density matrix through the same per-gate
    channels.  Exponential in qubit count, capped at 6 qubits; it exists to
    pin down ground truth for the sampler.

Noise placement: every 1-qubit gate except ``rz`` carries probability
``p1``, every 2-qubit gate carries ``p2``; ``rz`` and measurement are
noiseless.  Idle qubits take no noise.  Circuits are expected to be
transpiled to the hardware basis before noisy execution; a ``ccx`` under
nonzero noise is rejected rather than silently treated as a clean gate.

Determinism: for a fixed (circuit, noise, shots, seed) the full randomness
plan - noise event mask, Pauli choices, measurement draws - is generated
up front in a fixed order, so results are bit-identical regardless of
batch size, worker count, or scheduling.

Trajectories with no noise event are identical, so they are sampled from a
single noiseless statevector; only event-carrying trajectories step through
the circuit, batched, with per-row Pauli insertions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .circuits import Circuit, Gate, apply_matrix_to_tensor, gate_matrix
from .errors import CapacityError, UnsupportedGateError

ORACLE_QUBIT_CAP = 6
EXACT_DIST_CAP = 20
_CLBIT_CAP = 24


@dataclass(frozen=True)
class NoiseSpec:
    """Depolarizing rates: ``p1`` after 1-qubit gates, ``p2`` after 2-qubit."""

    p1: float
    p2: float

    def __post_init__(self):
        for name, p in (("p1", self.p1), ("p2", self.p2)):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name}={p} outside [0, 1]")

    @classmethod
    def from_single_rate(cls, p: float) -> "NoiseSpec":
        """Convention used throughout: two-qubit rate is twice the one-qubit rate."""
        return cls(p, 2.0 * p)

    @property
    def is_noiseless(self) -> bool:
        return self.p1 == 0.0 and self.p2 == 0.0


@dataclass(frozen=True)
class CountsMap:
    """Bit-string counts; keys all share one length, qubit/clbit 0 leftmost."""

    counts: dict[str, int]
    total_shots: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.total_shots:
            raise ValueError("counts do not sum to total_shots")
        lengths = {len(k) for k in self.counts}
        if len(lengths) > 1:
            raise ValueError(f"inconsistent key lengths {sorted(lengths)}")
        for k, v in self.counts.items():
            if v < 0 or set(k) - {"0", "1"}:
                raise ValueError(f"bad counts entry {k!r}: {v}")

    @property
    def num_bits(self) -> int | None:
        return len(next(iter(self.counts))) if self.counts else None

    def to_json(self) -> str:
        return json.dumps({"shots": self.total_shots, "counts": self.counts}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CountsMap":
        data = json.loads(text)
        return cls({str(k): int(v) for k, v in data["counts"].items()}, int(data["shots"]))


# -- compiled execution plan ----------------------------------------------


@dataclass
class _Plan:
    n: int
    num_clbits: int
    ops: list[Gate]
    site_of_op: dict[int, int]          # op index -> noise site index
    site_arity: np.ndarray              # per site: 1 or 2
    measured: list[tuple[int, int]]     # (qubit, clbit), clbit ascending
    sum_axes: tuple[int, ...]           # unmeasured qubit axes (offset by batch axis)
    perm: tuple[int, ...]               # measured-axis order by clbit
    spread: np.ndarray                  # measured-subspace index -> full clbit integer


def _compile(circuit: Circuit) -> _Plan:
    n = circuit.num_qubits
    ops: list[Gate] = []
    site_of_op: dict[int, int] = {}
    arities: list[int] = []
    for g in circuit.gates:
        if g.kind == "measure":
            continue
        idx = len(ops)
        ops.append(g)
        if g.kind == "rz":
            continue
        if len(g.qubits) == 1:
            site_of_op[idx] = len(arities)
            arities.append(1)
        elif len(g.qubits) == 2:
            site_of_op[idx] = len(arities)
            arities.append(2)
        # ccx carries no site; run_trajectories refuses it under nonzero noise

    measured = circuit.measured_pairs()
    if circuit.num_clbits > _CLBIT_CAP:
        raise CapacityError(f"more than {_CLBIT_CAP} classical bits")
    measured_qubits = sorted(q for q, _ in measured)
    qubit_rank = {q: i for i, q in enumerate(measured_qubits)}
    sum_axes = tuple(1 + q for q in range(n) if q not in qubit_rank)
    perm = tuple(1 + qubit_rank[q] for q, _ in measured)

    m = len(measured)
    spread = np.zeros(1 << m, dtype=np.int64)
    cl_positions = [circuit.num_clbits - 1 - cb for _, cb in measured]
    for i in range(1 << m):
        full = 0
        for bitpos, clpos in enumerate(cl_positions):
            if (i >> (m - 1 - bitpos)) & 1:
                full |= 1 << clpos
        spread[i] = full
    return _Plan(n, circuit.num_clbits, ops, site_of_op, np.array(arities, dtype=np.int64), measured, sum_axes, perm, spread)


# -- batched statevector kernel -------------------------------------------


def _dense1(psi: np.ndarray, m: np.ndarray, q: int, n: int) -> None:
    v = psi.reshape(psi.shape[0], 1 << q, 2, -1)
    a = v[:, :, 0, :]
    b = v[:, :, 1, :]
    na = m[0, 0] * a + m[0, 1] * b
    nb = m[1, 0] * a + m[1, 1] * b
    v[:, :, 0, :] = na
    v[:, :, 1, :] = nb


def _rz(psi: np.ndarray, theta: float, q: int, n: int) -> None:
    v = psi.reshape(psi.shape[0], 1 << q, 2, -1)
    half = theta / 2.0
    v[:, :, 0, :] *= np.exp(-1j * half)
    v[:, :, 1, :] *= np.exp(1j * half)


def _xgate(psi: np.ndarray, q: int, n: int) -> None:
    v = psi.reshape(psi.shape[0], 1 << q, 2, -1)
    tmp = v[:, :, 0, :].copy()
    v[:, :, 0, :] = v[:, :, 1, :]
    v[:, :, 1, :] = tmp


def _zgate(psi: np.ndarray, q: int, n: int) -> None:
    v = psi.reshape(psi.shape[0], 1 << q, 2, -1)
    v[:, :, 1, :] *= -1.0


def _cx(psi: np.ndarray, c: int, t: int, n: int) -> None:
    b = psi.shape[0]
    if c < t:
        v = psi.reshape(b, 1 << c, 2, 1 << (t - c - 1), 2, -1)
        tmp = v[:, :, 1, :, 0, :].copy()
        v[:, :, 1, :, 0, :] = v[:, :, 1, :, 1, :]
        v[:, :, 1, :, 1, :] = tmp
    else:
        v = psi.reshape(b, 1 << t, 2, 1 << (c - t - 1), 2, -1)
        tmp = v[:, :, 0, :, 1, :].copy()
        v[:, :, 0, :, 1, :] = v[:, :, 1, :, 1, :]
        v[:, :, 1, :, 1, :] = tmp


def _cpauli(psi: np.ndarray, pauli: str, c: int, t: int, n: int) -> None:
    b = psi.shape[0]
    if c < t:
        v = psi.reshape(b, 1 << c, 2, 1 << (t - c - 1), 2, -1)
        sub = v[:, :, 1]                      # (b, pre, mid, 2, post): control bit = 1
        s0 = sub[:, :, :, 0, :]
        s1 = sub[:, :, :, 1, :]
    else:
        v = psi.reshape(b, 1 << t, 2, 1 << (c - t - 1), 2, -1)
        sub = v[:, :, :, :, 1, :]             # (b, pre, 2, mid, post)
        s0 = sub[:, :, 0, :, :]
        s1 = sub[:, :, 1, :, :]
    if pauli == "X":
        tmp = s0.copy()
        s0[...] = s1
        s1[...] = tmp
    elif pauli == "Z":
        s1 *= -1.0
    else:  # Y: relative phase matters here, use the true matrix
        tmp = s0.copy()
        s0[...] = -1j * s1
        s1[...] = 1j * tmp


def _ccx(psi: np.ndarray, a: int, b_: int, t: int, n: int) -> None:
    order = sorted((a, b_, t))
    q0, q1, q2 = order
    v = psi.reshape(
        psi.shape[0], 1 << q0, 2, 1 << (q1 - q0 - 1), 2, 1 << (q2 - q1 - 1), 2, -1
    )
    axis_of = {q0: 2, q1: 4, q2: 6}
    i0: list = [slice(None)] * 8
    for q in (a, b_):
        i0[axis_of[q]] = 1
    i1 = list(i0)
    i0[axis_of[t]] = 0
    i1[axis_of[t]] = 1
    tmp = v[tuple(i0)].copy()
    v[tuple(i0)] = v[tuple(i1)]
    v[tuple(i1)] = tmp


_DENSE_1Q = {"h", "sx", "y", "s", "sdg"}


def _apply_gate(psi: np.ndarray, g: Gate, n: int) -> None:
    kind = g.kind
    if kind == "cx":
        _cx(psi, g.qubits[0], g.qubits[1], n)
    elif kind == "rz":
        _rz(psi, g.theta, g.qubits[0], n)
    elif kind == "x":
        _xgate(psi, g.qubits[0], n)
    elif kind == "z":
        _zgate(psi, g.qubits[0], n)
    elif kind in _DENSE_1Q:
        _dense1(psi, gate_matrix(g), g.qubits[0], n)
    elif kind == "cpauli":
        _cpauli(psi, g.pauli, g.qubits[0], g.qubits[1], n)
    elif kind == "ccx":
        _ccx(psi, g.qubits[0], g.qubits[1], g.qubits[2], n)
    else:  # pragma: no cover - Circuit.add already rejects unknown kinds
        raise UnsupportedGateError(f"cannot simulate gate kind {kind!r}")


def _pauli_rows(psi: np.ndarray, rows: np.ndarray, which: int, q: int, n: int) -> None:
    """Apply X (1), Y (2) or Z (3) on qubit q to a subset of batch rows.

    Global phases are per-trajectory and never observable, so Y is applied
    without its i factor.
    """
    v = psi.reshape(psi.shape[0], 1 << q, 2, -1)
    sub = v[rows]  # fancy index: copy
    if which == 1:
        sub = sub[:, :, ::-1, :]
    elif which == 2:
        sub = np.stack((sub[:, :, 1, :], -sub[:, :, 0, :]), axis=2)
    else:
        sub[:, :, 1, :] = -sub[:, :, 1, :]
    v[rows] = sub


def _run_states(plan: _Plan, batch: int, events: np.ndarray | None, choices: np.ndarray | None) -> np.ndarray:
    """Evolve ``batch`` trajectories; ``events``/``choices`` rows align with the batch."""
    psi = np.zeros((batch, 1 << plan.n), dtype=np.complex128)
    psi[:, 0] = 1.0
    for idx, g in enumerate(plan.ops):
        _apply_gate(psi, g, plan.n)
        if events is None:
            continue
        site = plan.site_of_op.get(idx)
        if site is None:
            continue
        col = events[:, site]
        if not col.any():
            continue
        rows = np.nonzero(col)[0]
        ch = choices[rows, site]
        if plan.site_arity[site] == 1:
            q = g.qubits[0]
            for w in np.unique(ch):
                _pauli_rows(psi, rows[ch == w], int(w) + 1, q, plan.n)
        else:
            qa, qb = g.qubits[0], g.qubits[1]
            for w in np.unique(ch):
                pair = int(w) + 1
                pa, pb = pair >> 2, pair & 3
                sel = rows[ch == w]
                if pa:
                    _pauli_rows(psi, sel, pa, qa, plan.n)
                if pb:
                    _pauli_rows(psi, sel, pb, qb, plan.n)
    return psi


def _marginalize(prob_rows: np.ndarray, plan: _Plan) -> np.ndarray:
    """(B, 2^n) probabilities -> (B, 2^m) over measured qubits in clbit order."""
    b = prob_rows.shape[0]
    pr = prob_rows.reshape((b,) + (2,) * plan.n)
    if plan.sum_axes:
        pr = pr.sum(axis=plan.sum_axes)
    pr = pr.transpose((0,) + plan.perm)
    return pr.reshape(b, -1)


def _measured_probs(psi: np.ndarray, plan: _Plan) -> np.ndarray:
    return _marginalize(psi.real**2 + psi.imag**2, plan)


def _counts_dict(full_keys: np.ndarray, num_clbits: int) -> dict[str, int]:
    binc = np.bincount(full_keys, minlength=1 << num_clbits)
    return {format(i, f"0{num_clbits}b"): int(v) for i, v in enumerate(binc) if v}


def _check_noise_support(plan: _Plan, noise: NoiseSpec) -> None:
    if noise.is_noiseless:
        return
    if any(g.kind == "ccx" for g in plan.ops):
        raise UnsupportedGateError(
            "ccx has no depolarizing model; transpile to the basis before noisy runs"
        )


def run_trajectories(
    circuit: Circuit,
    noise: NoiseSpec,
    shots: int,
    seed: int,
    *,
    batch_size: int = 4096,
) -> CountsMap:
    """Sample measurement outcomes from the noisy circuit.

    The circuit must end in measurements (they are terminal by construction,
    so the full Born distribution is sampled once per trajectory).
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    plan = _compile(circuit)
    if not plan.measured:
        raise ValueError("circuit has no measurements")
    _check_noise_support(plan, noise)

    rng = np.random.default_rng(seed)
    n_sites = len(plan.site_arity)
    site_p = np.where(plan.site_arity == 1, noise.p1, noise.p2)
    n_opts = np.where(plan.site_arity == 1, 3, 15)
    if n_sites:
        events = rng.random((shots, n_sites)) < site_p
        choices = (rng.random((shots, n_sites)) * n_opts).astype(np.int64)
        np.minimum(choices, n_opts - 1, out=choices)
    else:
        events = np.zeros((shots, 0), dtype=bool)
        choices = np.zeros((shots, 0), dtype=np.int64)
    draws = rng.random(shots)

    outcomes = np.empty(shots, dtype=np.int64)
    quiet = ~events.any(axis=1)

    base = _measured_probs(_run_states(plan, 1, None, None), plan)[0]
    cdf = np.cumsum(base)
    cdf /= cdf[-1]
    qi = np.nonzero(quiet)[0]
    if qi.size:
        outcomes[qi] = np.minimum(np.searchsorted(cdf, draws[qi], side="left"), cdf.size - 1)

    noisy = np.nonzero(~quiet)[0]
    for start in range(0, noisy.size, batch_size):
        rows = noisy[start : start + batch_size]
        psi = _run_states(plan, rows.size, events[rows], choices[rows])
        probs = _measured_probs(psi, plan)
        np.cumsum(probs, axis=1, out=probs)
        probs /= probs[:, -1:]
        idx = (probs < draws[rows, None]).sum(axis=1)
        outcomes[rows] = np.minimum(idx, probs.shape[1] - 1)

    full = plan.spread[outcomes]
    return CountsMap(_counts_dict(full, plan.num_clbits), shots)


def exact_distribution(circuit: Circuit, *, tol: float = 1e-15) -> dict[str, float]:
    """Noiseless Born distribution over classical bits, computed exactly from
    one statevector pass.  Entries below ``tol`` are dropped."""
    if circuit.num_qubits > EXACT_DIST_CAP:
        raise CapacityError(f"exact distribution capped at {EXACT_DIST_CAP} qubits")
    plan = _compile(circuit)
    if not plan.measured:
        raise ValueError("circuit has no measurements")
    probs = _measured_probs(_run_states(plan, 1, None, None), plan)[0]
    out: dict[str, float] = {}
    c = circuit.num_clbits
    for i, p in enumerate(probs):
        if p > tol:
            out[format(int(plan.spread[i]), f"0{c}b")] = float(p)
    return out


# -- exact density-matrix oracle ------------------------------------------

_PAULI_1Q = [
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]


def _conjugate_rho(rho: np.ndarray, mat: np.ndarray, qubits: tuple[int, ...], n: int) -> np.ndarray:
    rho = apply_matrix_to_tensor(rho, mat, qubits)
    col_axes = tuple(n + q for q in qubits)
    return apply_matrix_to_tensor(rho, mat.conj(), col_axes)


def density_matrix_reference(circuit: Circuit, noise: NoiseSpec, *, tol: float = 0.0) -> dict[str, float]:
    """Exact outcome distribution under per-gate depolarizing channels.

    Each noisy gate G becomes the channel
    rho -> (1-p) G rho G^dag + p/(4^k - 1) * sum_{P != I} (P G) rho (P G)^dag
    with k the gate arity.  Capped at 6 qubits.
    """
    n = circuit.num_qubits
    if n > ORACLE_QUBIT_CAP:
        raise CapacityError(f"density-matrix oracle capped at {ORACLE_QUBIT_CAP} qubits, got {n}")
    plan = _compile(circuit)
    if not plan.measured:
        raise ValueError("circuit has no measurements")
    _check_noise_support(plan, noise)

    rho = np.zeros((1 << n, 1 << n), dtype=complex)
    rho[0, 0] = 1.0
    rho = rho.reshape((2,) * (2 * n))

    for idx, g in enumerate(plan.ops):
        rho = _conjugate_rho(rho, gate_matrix(g), g.qubits, n)
        site = plan.site_of_op.get(idx)
        if site is None:
            continue
        k = int(plan.site_arity[site])
        p = noise.p1 if k == 1 else noise.p2
        if p == 0.0:
            continue
        if k == 1:
            q = g.qubits[0]
            mixed = sum(_conjugate_rho(rho, pm, (q,), n) for pm in _PAULI_1Q)
            rho = (1.0 - p) * rho + (p / 3.0) * mixed
        else:
            qa, qb = g.qubits
            mixed = np.zeros_like(rho)
            for pa in range(4):
                for pb in range(4):
                    if pa == 0 and pb == 0:
                        continue
                    t = rho
                    if pa:
                        t = _conjugate_rho(t, _PAULI_1Q[pa - 1], (qa,), n)
                    if pb:
                        t = _conjugate_rho(t, _PAULI_1Q[pb - 1], (qb,), n)
                    mixed = mixed + t
            rho = (1.0 - p) * rho + (p / 15.0) * mixed

    diag = rho.reshape(1 << n, 1 << n).diagonal().real.copy()
    probs = _marginalize(diag[None, :], plan)[0]
    out: dict[str, float] = {}
    c = circuit.num_clbits
    for i, pv in enumerate(probs):
        if tol == 0.0 or pv > tol:
            out[format(int(plan.spread[i]), f"0{c}b")] = float(pv)
    return out
