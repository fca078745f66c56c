"""Backend / worker-count timing of a fixed interference-circuit workload.

The workload for a size of n system qubits is one full execution of the
interference circuit (n + 1 qubits with the ancilla) for a truncated synthetic
Hamiltonian, a fixed evolution time and a fixed slice count. The truncation
keeps a fixed number of terms drawn uniformly (seeded) from the full qubit
Hamiltonian, so the Pauli-weight profile of the workload follows that of the
full operator, which grows with the number of orbitals. Only gate execution is
timed.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .bpde import build_bpde_circuit, initial_state
from .errors import OutOfMemory
from .evolution import Backend, make_plan
from .hamiltonian_io import synth_random_hamiltonian
from .qubit_map import Determinant, QubitHamiltonian, jordan_wigner
from .state_engine import ancilla_prob0, run_circuit

DEFAULT_MEMORY_BUDGET = 2 * 1024**3
# live complex arrays per gate application (state, output, gathered copy, factors)
_ARRAYS_PER_GATE = 6


@dataclass(frozen=True)
class BenchRow:
    n_qubits: int
    backend: str
    workers: int
    mean_s: float
    median_s: float
    reps: int
    speedup: float
    n_gates: int


@dataclass
class BenchReport:
    rows: list[BenchRow]

    def to_dict(self) -> dict:
        return {"rows": [asdict(r) for r in self.rows]}

    def to_text(self) -> str:
        head = f"{'qubits':>6} {'backend':>7} {'workers':>7} {'gates':>8} {'mean[s]':>10} {'median[s]':>10} {'speedup':>8}"
        lines = [head, "-" * len(head)]
        for r in self.rows:
            lines.append(f"{r.n_qubits:>6d} {r.backend:>7} {r.workers:>7d} {r.n_gates:>8d} "
                         f"{r.mean_s:>10.4f} {r.median_s:>10.4f} {r.speedup:>8.2f}")
        return "\n".join(lines)


def check_memory(n_qubits: int, budget: int = DEFAULT_MEMORY_BUDGET) -> None:
    need = _ARRAYS_PER_GATE * 16 * (1 << (n_qubits + 1))
    if need > budget:
        raise OutOfMemory(f"{n_qubits}-qubit workload needs ~{need / 2**20:.0f} MiB, "
                          f"budget is {budget / 2**20:.0f} MiB")


def workload_hamiltonian(n_qubits: int, n_terms: int = 64, seed: int = 2024) -> QubitHamiltonian:
    h = jordan_wigner(synth_random_hamiltonian(n_qubits, seed, 10.0))
    rng = np.random.default_rng(seed)
    keep = rng.choice(len(h.terms), size=min(n_terms, len(h.terms)), replace=False)
    return QubitHamiltonian(n_qubits, [h.terms[i] for i in sorted(keep)])


def workload_references(n_qubits: int) -> tuple[Determinant, Determinant]:
    """Lower half occupied; d1 promotes the highest occupied orbital by one."""
    n_occ = max(1, n_qubits // 2)
    d0 = Determinant.from_occupied(n_qubits, range(n_occ))
    d1 = Determinant.from_occupied(n_qubits, list(range(n_occ - 1)) + [n_occ % n_qubits])
    return d0, d1


def time_workload(h: QubitHamiltonian, backend: Backend | str, workers: int, reps: int,
                  m_slices: int, t: float = 1.0) -> tuple[list[float], int]:
    d0, d1 = workload_references(h.n_qubits)
    plan = make_plan(h, t, m_slices)
    circuit = build_bpde_circuit(h, d0, d1, 0.1, plan, backend)
    start = initial_state(h, d0)
    # untimed warm-up: kernel compilation and allocator first-touch
    run_circuit(start, circuit, workers)
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        out = run_circuit(start, circuit, workers)
        ancilla_prob0(out, h.n_qubits)
        times.append(time.perf_counter() - t0)
    return times, len(circuit)


def run_bench(sizes: Sequence[int], backends: Iterable[Backend | str] = (Backend.GATE, Backend.FUSED),
              workers: Sequence[int] = (1,), reps: int = 3, m_slices: int = 1, n_terms: int = 64,
              memory_budget: int = DEFAULT_MEMORY_BUDGET) -> BenchReport:
    """One row per (size, backend, workers); speedups are relative to the
    single-worker GATE median at the same size."""
    if reps < 3:
        raise ValueError("at least 3 timing repetitions are required")
    backends = [Backend(b) for b in backends]
    for n in sizes:
        check_memory(n, memory_budget)
    rows = []
    for n in sizes:
        h = workload_hamiltonian(n, n_terms)
        measured = {}
        combos = [(Backend.GATE, 1)] + [(b, w) for b in backends for w in workers]
        for b, w in combos:
            if (b, w) in measured:
                continue
            measured[(b, w)] = time_workload(h, b, w, reps, m_slices)
        base = statistics.median(measured[(Backend.GATE, 1)][0])
        for b in backends:
            for w in workers:
                times, n_gates = measured[(b, w)]
                med = statistics.median(times)
                rows.append(BenchRow(n, b.value, w, statistics.fmean(times), med, reps,
                                     base / med, n_gates))
    return BenchReport(rows)
