"""Brute-force ground truth: dense fermionic matrices, exact diagonalization,
exact time evolution and a direct evaluator of the two-reference interference
probability.

Nothing here goes through the Pauli-string path; the dense matrix is built
from creation/annihilation action on occupation bitstrings.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    AmbiguousAssignment,
    ConvergenceFailure,
    DegenerateAssignmentWarning,
    DimensionMismatch,
    LengthMismatch,
    TooLarge,
)
from .hamiltonian_io import SpinOrbitalIntegrals
from .qubit_map import Determinant, as_determinant
from .state_engine import StateVector

MAX_ORACLE_ORBITALS = 14
RESIDUAL_TOL = 1e-9


def _apply_ladder(states: np.ndarray, amp: np.ndarray, k: int, dagger: bool):
    """Apply a+_k (dagger) or a_k to every basis state; amp=0 marks annihilated states."""
    bit = 1 << k
    occupied = (states & bit) != 0
    ok = ~occupied if dagger else occupied
    parity = np.bitwise_count(states & (bit - 1)).astype(np.int64) & 1
    amp = np.where(ok, amp * (1 - 2 * parity), 0.0)
    return states ^ bit, amp


def fermionic_dense(ints: SpinOrbitalIntegrals) -> np.ndarray:
    """Dense matrix of the second-quantized Hamiltonian in the occupation basis.

    Basis index bit q is the occupation of spin orbital q; determinants are
    ordered as a+_0^{n_0} a+_1^{n_1} ... |vac>, so a+_q picks up
    (-1)^(number of occupied orbitals below q).
    """
    n = ints.n_orb
    if n > MAX_ORACLE_ORBITALS:
        raise TooLarge(f"dense oracle limited to {MAX_ORACLE_ORBITALS} orbitals, got {n}")
    dim = 1 << n
    basis = np.arange(dim, dtype=np.int64)
    ones = np.ones(dim)
    H = ints.core_energy * np.eye(dim, dtype=complex)

    for p, q in zip(*np.nonzero(ints.h1)):
        s, a = _apply_ladder(basis, ones, int(q), False)
        s, a = _apply_ladder(s, a, int(p), True)
        nz = a != 0
        H[s[nz], basis[nz]] += ints.h1[p, q] * a[nz]

    for p, q, r, s_ in zip(*np.nonzero(ints.h2)):
        if p == q or r == s_:
            continue
        s, a = _apply_ladder(basis, ones, int(r), False)
        s, a = _apply_ladder(s, a, int(s_), False)
        s, a = _apply_ladder(s, a, int(q), True)
        s, a = _apply_ladder(s, a, int(p), True)
        nz = a != 0
        H[s[nz], basis[nz]] += 0.5 * ints.h2[p, q, r, s_] * a[nz]
    return H


def sector_indices(n_orb: int, n_particles: int) -> np.ndarray:
    """Basis indices of all determinants with the given particle number."""
    basis = np.arange(1 << n_orb, dtype=np.int64)
    return basis[np.bitwise_count(basis) == n_particles]


def restrict_to_occupied(H: np.ndarray, n_orb: int, occupied) -> np.ndarray:
    """Block of H on the determinants in which every orbital in ``occupied`` is filled."""
    mask = 0
    for i in occupied:
        mask |= 1 << int(i)
    basis = np.arange(1 << n_orb, dtype=np.int64)
    keep = basis[(basis & mask) == mask]
    return H[np.ix_(keep, keep)]


@dataclass
class EigenSystem:
    energies: np.ndarray      # ascending, Hartree
    states: np.ndarray        # columns are eigenvectors in the full basis
    overlaps0: np.ndarray     # c_j = <Psi_j|Phi_0>
    overlaps1: np.ndarray     # d_k = <Psi_k|Phi_1>


def diagonalize(H: np.ndarray, d0, d1, sector: bool = False) -> EigenSystem:
    """Exact eigendecomposition plus reference-determinant overlaps.

    With ``sector=True`` only the particle-number block shared by d0 and d1 is
    diagonalized (eigenvectors are still returned in the full basis).
    """
    H = np.asarray(H)
    dim = H.shape[0]
    if H.ndim != 2 or H.shape[1] != dim:
        raise DimensionMismatch(f"expected a square matrix, got shape {H.shape}")
    if dim > 1 << MAX_ORACLE_ORBITALS:
        raise TooLarge(f"matrix dimension {dim} exceeds 2^{MAX_ORACLE_ORBITALS}")
    d0, d1 = as_determinant(d0), as_determinant(d1)
    for d in (d0, d1):
        if (1 << len(d)) != dim:
            raise LengthMismatch(f"determinant {d} does not match matrix dimension {dim}")

    if sector:
        if d0.n_particles != d1.n_particles:
            raise ValueError("sector diagonalization needs equal particle numbers")
        keep = sector_indices(len(d0), d0.n_particles)
        block = H[np.ix_(keep, keep)]
    else:
        keep = None
        block = H
    try:
        energies, vecs = np.linalg.eigh(block)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    residual = np.linalg.norm(block @ vecs - vecs * energies, axis=0)
    if residual.size and residual.max() > RESIDUAL_TOL:
        raise ConvergenceFailure(f"eigenpair residual {residual.max():.3e} exceeds {RESIDUAL_TOL}")
    if keep is not None:
        full = np.zeros((dim, len(keep)), dtype=complex)
        full[keep] = vecs
        vecs = full
    return EigenSystem(energies, vecs, vecs[d0.index].conj(), vecs[d1.index].conj())


def exact_gap(sys: EigenSystem) -> float:
    """E_k* - E_j* where j*, k* are the eigenstates dominating d0 and d1."""
    w0 = np.abs(sys.overlaps0) ** 2
    w1 = np.abs(sys.overlaps1) ** 2
    j, k = int(np.argmax(w0)), int(np.argmax(w1))
    if w0[j] <= 0.5 or w1[k] <= 0.5:
        raise AmbiguousAssignment(
            f"reference overlaps too small for assignment (max |c|^2={w0[j]:.3f}, "
            f"max |d|^2={w1[k]:.3f})")
    if j == k:
        warnings.warn("both references are dominated by the same eigenstate; gap is 0",
                      DegenerateAssignmentWarning, stacklevel=2)
        return 0.0
    return float(sys.energies[k] - sys.energies[j])


def interference_prob0(sys: EigenSystem, delta_eps, t: float):
    """1/2 [1 + sum_jk |c_j|^2 |d_k|^2 cos((E_k - E_j - delta_eps) t)].

    Accepts a scalar or an array of delta_eps values.
    """
    w0 = np.abs(sys.overlaps0) ** 2
    w1 = np.abs(sys.overlaps1) ** 2
    # the double sum factorizes into two single sums of phases
    amp = np.sum(w1 * np.exp(1j * sys.energies * t)) * np.sum(w0 * np.exp(-1j * sys.energies * t))
    de = np.asarray(delta_eps, dtype=float)
    p = 0.5 * (1.0 + np.real(amp * np.exp(-1j * de * t)))
    p = np.clip(p, 0.0, 1.0)
    return float(p) if p.ndim == 0 else p


def exact_evolve(s: StateVector, H: np.ndarray, t: float) -> StateVector:
    """exp(-iHt)|s> through the eigendecomposition of H."""
    H = np.asarray(H)
    if H.shape != (s.dim, s.dim):
        raise DimensionMismatch(f"state dimension {s.dim} vs matrix shape {H.shape}")
    if t == 0:
        return s.copy()
    energies, vecs = np.linalg.eigh(H)
    coeffs = vecs.conj().T @ s.amps
    return StateVector(s.n_qubits, vecs @ (np.exp(-1j * energies * t) * coeffs))
