"""Second-order Trotter-Suzuki evolution exp(-iHt) with two backends.

FUSED emits one PAULI_ROT per Hamiltonian factor. GATE expands every factor
into basis changes, a CNOT parity ladder and a single-qubit Z rotation, which is
what a gate-level device would run. Both produce the same unitary, including
the global phase of the identity term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import BackendMismatch, NonPositiveTime
from .qubit_map import PauliString, QubitHamiltonian
from .state_engine import Circuit, Gate, StateVector, run_gates_array

DEFAULT_TAU_CAP = 0.2
# the dense per-slice propagator is used only up to this many system qubits
DENSE_SLICE_MAX_QUBITS = 10


class Backend(str, Enum):
    GATE = "gate"
    FUSED = "fused"


class TrotterRule(str, Enum):
    # tau = min(0.2, 1/|h00|): finer slices for deeper core potentials
    INVERTED = "inverted"
    # tau = max(0.2, |h00|), read verbatim
    LITERAL = "literal"


def tau_target(h00: float, rule: TrotterRule | str = TrotterRule.INVERTED) -> float:
    rule = TrotterRule(rule)
    a = abs(float(h00))
    if rule is TrotterRule.LITERAL:
        return max(DEFAULT_TAU_CAP, a)
    if a == 0.0:
        return DEFAULT_TAU_CAP
    return min(DEFAULT_TAU_CAP, 1.0 / a)


def slice_count(t: float, h00: float, rule: TrotterRule | str = TrotterRule.INVERTED) -> int:
    """Number of slices M = ceil(t / tau_target), at least 1."""
    if not t > 0:
        raise NonPositiveTime(f"evolution time must be positive, got {t}")
    ratio = t / tau_target(h00, rule)
    # absorb representation error such as 18/0.1 = 180.00000000000003
    m = math.ceil(ratio - 1e-9 * max(1.0, ratio))
    return max(1, m)


def hamiltonian_key(h: QubitHamiltonian) -> int:
    return hash((h.n_qubits, tuple((w, p.x, p.z) for w, p in h.terms)))


def canonical_term_order(h: QubitHamiltonian) -> tuple[int, ...]:
    """Terms sorted by support, then by Pauli letters."""
    return tuple(sorted(range(len(h.terms)), key=lambda i: h.terms[i][1].sort_key()))


@dataclass(frozen=True)
class TrotterPlan:
    t: float
    m_slices: int
    tau: float
    term_order: tuple[int, ...]
    h_key: int

    def __post_init__(self) -> None:
        if self.m_slices < 1:
            raise ValueError("m_slices must be >= 1")
        if sorted(self.term_order) != list(range(len(self.term_order))):
            raise ValueError("term_order is not a permutation")


def make_plan(h: QubitHamiltonian, t: float, m_slices: int) -> TrotterPlan:
    return TrotterPlan(float(t), int(m_slices), float(t) / int(m_slices),
                       canonical_term_order(h), hamiltonian_key(h))


def plan_for(h: QubitHamiltonian, t: float, h00: float,
             rule: TrotterRule | str = TrotterRule.INVERTED) -> TrotterPlan:
    return make_plan(h, t, slice_count(t, h00, rule))


def check_plan(h: QubitHamiltonian, plan: TrotterPlan) -> None:
    if len(plan.term_order) != len(h.terms) or plan.h_key != hamiltonian_key(h):
        raise BackendMismatch("Trotter plan was built for a different Hamiltonian / term order")


def rotation_gates(p: PauliString, theta: float, backend: Backend | str) -> list[Gate]:
    """Gates realizing exp(-i theta/2 P)."""
    backend = Backend(backend)
    if backend is Backend.FUSED:
        return [Gate.pauli_rot(p, theta)]
    if p.is_identity:
        # global phase e^{-i theta/2} = PHASE . X . PHASE . X on qubit 0
        half = -0.5 * theta
        return [Gate.phase(0, half), Gate.x(0), Gate.phase(0, half), Gate.x(0)]
    ops = p.ops
    qubits = list(ops)
    pre: list[Gate] = []
    post: list[Gate] = []
    for q, letter in ops.items():
        if letter == "X":
            pre.append(Gate.had(q))
            post.append(Gate.had(q))
        elif letter == "Y":
            pre += [Gate.phase(q, -math.pi / 2), Gate.had(q)]
            post += [Gate.had(q), Gate.phase(q, math.pi / 2)]
    ladder = [Gate.cnot(a, b) for a, b in zip(qubits, qubits[1:])]
    last = qubits[-1]
    return (pre + ladder + [Gate.pauli_rot(PauliString(0, 1 << last), theta)]
            + ladder[::-1] + post)


def step_gates(h: QubitHamiltonian, tau: float, backend: Backend | str = Backend.FUSED,
               term_order: Sequence[int] | None = None) -> list[Gate]:
    order = canonical_term_order(h) if term_order is None else tuple(term_order)
    half: list[Gate] = []
    for i in order:
        w, p = h.terms[i]
        # exp(-i w P tau/2) == exp(-i theta/2 P) with theta = w tau
        half.extend(rotation_gates(p, w * tau, backend))
    back: list[Gate] = []
    for i in reversed(order):
        w, p = h.terms[i]
        back.extend(rotation_gates(p, w * tau, backend))
    return half + back


def build_second_order_step(h: QubitHamiltonian, tau: float, backend: Backend | str = Backend.FUSED,
                            term_order: Sequence[int] | None = None) -> Circuit:
    """One symmetric slice: prod_j exp(-i w_j P_j tau/2), then the same factors reversed."""
    return Circuit(h.n_qubits, step_gates(h, tau, backend, term_order))


def slice_propagator(h: QubitHamiltonian, tau: float, backend: Backend | str = Backend.FUSED,
                     term_order: Sequence[int] | None = None, workers: int = 1) -> np.ndarray:
    """Dense matrix of one slice, obtained by running the slice on every basis column."""
    n = h.n_qubits
    eye = np.eye(1 << n, dtype=complex)
    return run_gates_array(eye, step_gates(h, tau, backend, term_order), n, workers)


def evolve_array(psi: np.ndarray, n_total: int, h: QubitHamiltonian, plan: TrotterPlan,
                 backend: Backend | str = Backend.FUSED, workers: int = 1,
                 dense: bool = False) -> np.ndarray:
    """Trotterized evolution of qubits 0..h.n_qubits-1 inside an ``n_total``-qubit register.

    With ``dense=True`` the slice is first compiled to a matrix by the chosen
    backend and then applied ``m_slices`` times; otherwise every gate of every
    slice is executed on the state.
    """
    check_plan(h, plan)
    if plan.t == 0:
        return psi.copy()
    n = h.n_qubits
    if dense:
        U = slice_propagator(h, plan.tau, backend, plan.term_order, workers)
        block = psi.reshape(-1, 1 << n)
        Ut = U.T
        for _ in range(plan.m_slices):
            block = block @ Ut
        return block.reshape(psi.shape)
    gates = step_gates(h, plan.tau, backend, plan.term_order)
    for _ in range(plan.m_slices):
        psi = run_gates_array(psi, gates, n_total, workers)
    return psi


def apply_evolution(s: StateVector, h: QubitHamiltonian, plan: TrotterPlan,
                    backend: Backend | str = Backend.FUSED, workers: int = 1,
                    dense: bool = False) -> StateVector:
    if s.n_qubits < h.n_qubits:
        raise ValueError(f"state has {s.n_qubits} qubits, Hamiltonian needs {h.n_qubits}")
    return StateVector(s.n_qubits, evolve_array(s.amps, s.n_qubits, h, plan, backend, workers, dense))
