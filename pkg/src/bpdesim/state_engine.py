"""Dense state-vector simulation.

Every gate is a compiled single-pass kernel of the paired-amplitude form

    out[i] = a(i) * psi[i] + b(i) * psi[i ^ mask(i)]

Because each output element depends only on its own inputs, the amplitude
array can be cut into contiguous row chunks handled by different workers and
the result is bitwise identical for any worker count. PAULI_ROT applies
exp(-i theta/2 P) = cos(theta/2) I - i sin(theta/2) P for an arbitrary Pauli
string in one pass, with the sign of P computed on the fly.

Amplitude arrays may carry a trailing batch axis, shape (2^n, k); the update is
applied to every column.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from .errors import IndexOutOfRange, LengthMismatch
from .qubit_map import Determinant, PauliString, as_determinant

NORM_TOL = 1e-10
# below this many rows threading costs more than it saves
PARALLEL_MIN_ROWS = 1 << 14

_SQRT1_2 = 1.0 / math.sqrt(2.0)


class GateKind(str, Enum):
    HAD = "HAD"
    X = "X"
    CNOT = "CNOT"
    PHASE = "PHASE"
    PAULI_ROT = "PAULI_ROT"
    CTRL_X = "CTRL_X"


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: tuple[int, ...]
    theta: float = 0.0
    pauli: PauliString | None = None

    @classmethod
    def had(cls, q: int) -> "Gate":
        return cls(GateKind.HAD, (q,))

    @classmethod
    def x(cls, q: int) -> "Gate":
        return cls(GateKind.X, (q,))

    @classmethod
    def cnot(cls, control: int, target: int) -> "Gate":
        return cls(GateKind.CNOT, (control, target))

    @classmethod
    def ctrl_x(cls, control: int, target: int) -> "Gate":
        return cls(GateKind.CTRL_X, (control, target))

    @classmethod
    def phase(cls, q: int, theta: float) -> "Gate":
        """diag(1, e^{i theta}) on qubit q."""
        return cls(GateKind.PHASE, (q,), float(theta))

    @classmethod
    def pauli_rot(cls, pauli: PauliString, theta: float) -> "Gate":
        """exp(-i theta/2 P). The identity string gives the global phase e^{-i theta/2}."""
        return cls(GateKind.PAULI_ROT, pauli.support, float(theta), pauli)

    def inverse(self) -> "Gate":
        if self.kind in (GateKind.PHASE, GateKind.PAULI_ROT):
            return Gate(self.kind, self.qubits, -self.theta, self.pauli)
        return self

    def check(self, n_qubits: int) -> None:
        if len(set(self.qubits)) != len(self.qubits):
            raise IndexOutOfRange(f"{self.kind.value} acts twice on the same qubit: {self.qubits}")
        for q in self.qubits:
            if not 0 <= q < n_qubits:
                raise IndexOutOfRange(f"{self.kind.value} qubit {q} outside register of {n_qubits}")


@dataclass
class Circuit:
    n_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def __post_init__(self) -> None:
        for g in self.gates:
            g.check(self.n_qubits)

    def append(self, g: Gate) -> None:
        g.check(self.n_qubits)
        self.gates.append(g)

    def extend(self, gates: Iterable[Gate]) -> None:
        for g in gates:
            self.append(g)

    def __len__(self) -> int:
        return len(self.gates)

    def inverse(self) -> "Circuit":
        return Circuit(self.n_qubits, [g.inverse() for g in reversed(self.gates)])


@dataclass
class StateVector:
    n_qubits: int
    amps: np.ndarray

    def __post_init__(self) -> None:
        self.amps = np.asarray(self.amps, dtype=complex)
        if self.amps.shape != (1 << self.n_qubits,):
            raise LengthMismatch(
                f"{self.n_qubits} qubits need {1 << self.n_qubits} amplitudes, got {self.amps.shape}")

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amps.copy())


def basis_state(n_qubits: int, d) -> StateVector:
    d = as_determinant(d)
    if len(d) != n_qubits:
        raise LengthMismatch(f"determinant of length {len(d)} for {n_qubits} qubits")
    amps = np.zeros(1 << n_qubits, dtype=complex)
    amps[d.index] = 1.0
    return StateVector(n_qubits, amps)


# --------------------------------------------------------------------------
# kernels
# --------------------------------------------------------------------------
# Each kernel fills rows [lo, hi) of the 1-D array ``out`` from ``psi``.
# Rows are independent, so any partition of the row range gives the same bits.

@njit(nogil=True, cache=True)
def _k_pauli(psi, out, lo, hi, x, z, f0, c):
    # out[i] = c psi[i] + f0 (-1)^{parity((i^x) & z)} psi[i^x]
    for i in range(lo, hi):
        j = i ^ x
        v = j & z
        v ^= v >> 32
        v ^= v >> 16
        v ^= v >> 8
        v ^= v >> 4
        v ^= v >> 2
        v ^= v >> 1
        f = -f0 if v & 1 else f0
        out[i] = c * psi[i] + f * psi[j]


@njit(nogil=True, cache=True)
def _k_had(psi, out, lo, hi, bit, r):
    for i in range(lo, hi):
        j = i ^ bit
        if i & bit:
            out[i] = r * (psi[j] - psi[i])
        else:
            out[i] = r * (psi[i] + psi[j])


@njit(nogil=True, cache=True)
def _k_cx(psi, out, lo, hi, cbit, tbit):
    # cbit == 0 makes this an unconditional X on tbit
    for i in range(lo, hi):
        out[i] = psi[i ^ tbit] if (i & cbit) == cbit else psi[i]


@njit(nogil=True, cache=True)
def _k_phase(psi, out, lo, hi, bit, e):
    for i in range(lo, hi):
        out[i] = e * psi[i] if i & bit else psi[i]


@njit(nogil=True)
def _batched(kernel, psi, out, lo, hi, args):
    # psi, out have shape (k, 2^n): one state per row
    for col in range(psi.shape[0]):
        kernel(psi[col], out[col], lo, hi, *args)


_executors: dict[int, ThreadPoolExecutor] = {}


def _executor(workers: int) -> ThreadPoolExecutor:
    ex = _executors.get(workers)
    if ex is None:
        ex = _executors[workers] = ThreadPoolExecutor(max_workers=workers)
    return ex


def _chunks(rows: int, workers: int):
    step = -(-rows // workers)
    return [(lo, min(lo + step, rows)) for lo in range(0, rows, step)]


def _launch(kernel, psi: np.ndarray, workers: int, *args) -> np.ndarray:
    rows = psi.shape[0]
    if psi.ndim == 1:
        src = np.ascontiguousarray(psi, dtype=complex)
        run = lambda lo, hi: kernel(src, out, lo, hi, *args)  # noqa: E731
    else:
        src = np.ascontiguousarray(psi.T, dtype=complex)
        run = lambda lo, hi: _batched(kernel, src, out, lo, hi, args)  # noqa: E731
    out = np.empty_like(src)
    if workers <= 1 or rows < PARALLEL_MIN_ROWS:
        run(0, rows)
    else:
        for f in [_executor(workers).submit(run, lo, hi) for lo, hi in _chunks(rows, workers)]:
            f.result()
    return out if psi.ndim == 1 else out.T


def _y_phase(p: PauliString) -> complex:
    # P|i> = i^{#Y} (-1)^{|i & z|} |i ^ x>
    return (1, 1j, -1, -1j)[(p.x & p.z).bit_count() % 4]


def apply_gate_array(psi: np.ndarray, g: Gate, n_qubits: int, workers: int = 1) -> np.ndarray:
    """Apply ``g`` to a raw amplitude array (optionally batched) and return a new array."""
    # kernels index without bounds checks, so validate up front
    if psi.shape[0] != 1 << n_qubits:
        raise LengthMismatch(f"{n_qubits} qubits need {1 << n_qubits} rows, got {psi.shape[0]}")
    g.check(n_qubits)
    kind = g.kind
    if kind is GateKind.HAD:
        return _launch(_k_had, psi, workers, 1 << g.qubits[0], _SQRT1_2)
    if kind is GateKind.X:
        return _launch(_k_cx, psi, workers, 0, 1 << g.qubits[0])
    if kind is GateKind.CNOT or kind is GateKind.CTRL_X:
        c, t = g.qubits
        return _launch(_k_cx, psi, workers, 1 << c, 1 << t)
    if kind is GateKind.PHASE:
        return _launch(_k_phase, psi, workers, 1 << g.qubits[0],
                       complex(math.cos(g.theta), math.sin(g.theta)))
    if kind is GateKind.PAULI_ROT:
        half = 0.5 * g.theta
        p = g.pauli
        f0 = -1j * math.sin(half) * _y_phase(p)
        return _launch(_k_pauli, psi, workers, p.x, p.z, complex(f0), math.cos(half))
    raise ValueError(f"unknown gate kind {kind!r}")


def apply_gate(s: StateVector, g: Gate, workers: int = 1) -> StateVector:
    g.check(s.n_qubits)
    return StateVector(s.n_qubits, apply_gate_array(s.amps, g, s.n_qubits, workers))


def run_gates_array(psi: np.ndarray, gates: Sequence[Gate], n_qubits: int, workers: int = 1) -> np.ndarray:
    for g in gates:
        psi = apply_gate_array(psi, g, n_qubits, workers)
    return psi


def run_circuit(s: StateVector, circuit: Circuit, workers: int = 1) -> StateVector:
    if circuit.n_qubits != s.n_qubits:
        raise LengthMismatch(f"circuit on {circuit.n_qubits} qubits, state has {s.n_qubits}")
    return StateVector(s.n_qubits, run_gates_array(s.amps, circuit.gates, s.n_qubits, workers))


def ancilla_prob0(s: StateVector, ancilla: int) -> float:
    """Exact probability of reading 0 on qubit ``ancilla``."""
    if not 0 <= ancilla < s.n_qubits:
        raise IndexOutOfRange(f"ancilla {ancilla} outside register of {s.n_qubits}")
    # bit `ancilla` is axis 1 of a (high, 2, low) reshape
    view = s.amps.reshape(-1, 2, 1 << ancilla)
    p = float(np.sum(np.abs(view[:, 0, :]) ** 2))
    return min(max(p, 0.0), 1.0)


def sample_shots(p: float, shots: int, rng: np.random.Generator) -> int:
    """Number of 0-outcomes in ``shots`` independent ancilla measurements."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    if shots < 1:
        raise ValueError(f"shots must be positive, got {shots}")
    return int(rng.binomial(shots, p))


def stream_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the stream addressed by ``key`` under ``seed``.

    Streams for distinct keys are statistically independent, so results do not
    depend on the order in which streams are consumed.
    """
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
