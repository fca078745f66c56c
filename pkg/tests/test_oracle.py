import itertools
import warnings

import numpy as np
import pytest
from scipy.linalg import expm, ldl

from bpdesim import oracle
from bpdesim.errors import (
    AmbiguousAssignment,
    ConvergenceFailure,
    DegenerateAssignmentWarning,
    DimensionMismatch,
    LengthMismatch,
    TooLarge,
)
from bpdesim.evolution import apply_evolution, make_plan
from bpdesim.hamiltonian_io import synth_random_hamiltonian
from bpdesim.oracle import (
    EigenSystem,
    diagonalize,
    interference_prob0,
    exact_evolve,
    exact_gap,
    fermionic_dense,
    sector_indices,
)
from bpdesim.qubit_map import Determinant, jordan_wigner
from bpdesim.state_engine import StateVector, basis_state

from conftest import diagonal_ints, random_state, zero_ints


def count_below(H, x):
    """Number of eigenvalues of H below x, from the inertia of an LDL^T factorization."""
    _, d, _ = ldl(H - x * np.eye(len(H)), hermitian=True)
    return int(np.sum(np.linalg.eigvalsh(d) < 0))


def bisect_eigenvalue(H, k, lo, hi, tol=1e-13):
    """k-th smallest eigenvalue (0-based) by inertia bisection on [lo, hi]."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if count_below(H, mid) > k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------- dense matrix

def test_single_orbital_matrix():
    H = fermionic_dense(diagonal_ints(1, [0.8], ecore=0.3))
    np.testing.assert_array_equal(H, np.diag([0.3, 1.1]))


def test_hand_built_hopping():
    ints = zero_ints(2)
    ints.h1[0, 1] = ints.h1[1, 0] = 1.0
    expect = np.zeros((4, 4))
    # a+_1 a_0 |occ 0> = |occ 1> with no sign: nothing occupied below orbital 1 afterwards
    expect[2, 1] = expect[1, 2] = 1.0
    np.testing.assert_array_equal(fermionic_dense(ints), expect)
    np.testing.assert_allclose(jordan_wigner(ints).to_dense(), expect, atol=1e-15)


def test_two_body_sign():
    # n_0 n_1 interaction: 1/2 (h2[0101] a+0 a+1 a1 a0 + h2[1010] a+1 a+0 a0 a1) = g n0 n1
    ints = zero_ints(2)
    ints.h2[0, 1, 0, 1] = ints.h2[1, 0, 1, 0] = 0.6
    np.testing.assert_allclose(fermionic_dense(ints), np.diag([0, 0, 0, 0.6]), atol=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_particle_number_blocks(seed):
    n = 4
    H = fermionic_dense(synth_random_hamiltonian(n, seed, 1.0))
    counts = np.array([bin(i).count("1") for i in range(1 << n)])
    assert np.all(H[counts[:, None] != counts[None, :]] == 0)


def test_too_large():
    with pytest.raises(TooLarge):
        fermionic_dense(zero_ints(15))


def test_sector_indices():
    assert list(sector_indices(4, 2)) == [3, 5, 6, 9, 10, 12]


# ---------------------------------------------------------------- diagonalize

def test_diagonal_matrix():
    H = np.diag([0.5, -1.0, 2.0, 0.1])
    sys_ = diagonalize(H, "10", "01")
    np.testing.assert_array_equal(sys_.energies, [-1.0, 0.1, 0.5, 2.0])
    np.testing.assert_allclose(np.abs(sys_.overlaps0), [1, 0, 0, 0])
    # "01" is basis index 2, the largest diagonal entry
    np.testing.assert_allclose(np.abs(sys_.overlaps1), [0, 0, 0, 1])
    assert exact_gap(sys_) == pytest.approx(2.0 - (-1.0))


def test_two_by_two_closed_form():
    a, b = 0.3, -0.45
    sys_ = diagonalize(np.array([[a, b], [b, a]]), "0", "1")
    assert sys_.energies[1] - sys_.energies[0] == pytest.approx(2 * abs(b), abs=1e-14)


def test_random_hermitian_64():
    rng = np.random.default_rng(64)
    A = rng.normal(size=(64, 64)) + 1j * rng.normal(size=(64, 64))
    H = 0.5 * (A + A.conj().T)
    sys_ = diagonalize(H, "110000", "101000")
    res = np.linalg.norm(H @ sys_.states - sys_.states * sys_.energies, axis=0)
    assert res.max() < 1e-9
    assert np.sum(sys_.energies) == pytest.approx(np.trace(H).real, abs=1e-8)
    assert np.sum(np.abs(sys_.overlaps0) ** 2) == pytest.approx(1, abs=1e-10)
    assert np.sum(np.abs(sys_.overlaps1) ** 2) == pytest.approx(1, abs=1e-10)
    assert np.all(np.diff(sys_.energies) >= 0)


def test_sector_diagonalization_matches_full():
    ints = synth_random_hamiltonian(4, 7, 10)
    H = fermionic_dense(ints)
    full = diagonalize(H, "1100", "1010")
    sec = diagonalize(H, "1100", "1010", sector=True)
    assert len(sec.energies) == 6
    assert exact_gap(sec) == pytest.approx(exact_gap(full), abs=1e-12)
    res = np.linalg.norm(H @ sec.states - sec.states * sec.energies, axis=0)
    assert res.max() < 1e-9


def test_diagonalize_errors(monkeypatch):
    with pytest.raises(DimensionMismatch):
        diagonalize(np.zeros((4, 3)), "10", "01")
    with pytest.raises(LengthMismatch):
        diagonalize(np.eye(4), "100", "010")
    huge = np.broadcast_to(np.zeros(1), (1 << 15, 1 << 15))
    with pytest.raises(TooLarge):
        diagonalize(huge, "0" * 15, "1" + "0" * 14)
    with pytest.raises(ValueError):
        diagonalize(np.eye(4), "10", "11", sector=True)

    real_eigh = np.linalg.eigh

    def bad_eigh(a):
        w, v = real_eigh(a)
        return w + 1e-3, v
    monkeypatch.setattr(oracle.np.linalg, "eigh", bad_eigh)
    with pytest.raises(ConvergenceFailure):
        diagonalize(np.diag([1.0, 2.0, 3.0, 4.0]), "10", "01")


# ---------------------------------------------------------------- exact gap

def test_gap_of_diagonal_instance():
    ints = diagonal_ints(4, [-1.0, -0.4, 0.3, 1.1], ecore=0.2)
    sys_ = diagonalize(fermionic_dense(ints), "1100", "1010")
    assert exact_gap(sys_) == pytest.approx(0.3 - (-0.4), abs=1e-14)


def test_same_dominant_state_warns():
    H = np.array([[0.0, 0.1], [0.1, 1.0]])
    sys_ = diagonalize(H, "0", "1")
    # force both references onto the same eigenvector
    fake = EigenSystem(sys_.energies, sys_.states, sys_.overlaps0, sys_.overlaps0)
    with pytest.warns(DegenerateAssignmentWarning):
        assert exact_gap(fake) == 0.0


def test_ambiguous_assignment():
    # every eigenvector has |overlap|^2 = 1/4 with every determinant
    Q = 0.5 * np.array([[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]])
    H = Q @ np.diag([1.0, 2.0, 3.0, 4.0]) @ Q.T
    with pytest.raises(AmbiguousAssignment):
        exact_gap(diagonalize(H, "10", "01"))


@pytest.mark.parametrize("seed", [7, 19, 23])
def test_gap_against_inertia_bisection(seed):
    ints = synth_random_hamiltonian(4, seed, 10)
    H = fermionic_dense(ints)
    sys_ = diagonalize(H, "1100", "1010", sector=True)
    keep = sector_indices(4, 2)
    block = H[np.ix_(keep, keep)]
    j = int(np.argmax(np.abs(sys_.overlaps0)))
    k = int(np.argmax(np.abs(sys_.overlaps1)))
    bound = np.abs(block).sum()
    ej = bisect_eigenvalue(block, j, -bound, bound)
    ek = bisect_eigenvalue(block, k, -bound, bound)
    assert exact_gap(sys_) == pytest.approx(ek - ej, abs=1e-8)


# ---------------------------------------------------------------- interference formula

def _single_term(delta_e):
    H = np.diag([0.0, 0.0, delta_e, 0.0])
    return diagonalize(H, "00", "01")


def test_interference_peak_and_trough():
    sys_ = _single_term(0.35)
    assert interference_prob0(sys_, 0.35, 7.0) == pytest.approx(1.0, abs=1e-15)
    t = 2.0
    assert interference_prob0(sys_, 0.35 - np.pi / t, t) == pytest.approx(0.0, abs=1e-15)


def test_interference_double_sum_definition():
    ints = synth_random_hamiltonian(3, 4, 2.0)
    sys_ = diagonalize(fermionic_dense(ints), "110", "101")
    w0, w1 = np.abs(sys_.overlaps0) ** 2, np.abs(sys_.overlaps1) ** 2
    E = sys_.energies
    for de, t in [(0.1, 1.0), (-0.3, 4.5), (0.77, 0.2)]:
        direct = 0.5 * (1 + sum(w0[j] * w1[k] * np.cos((E[k] - E[j] - de) * t)
                                for j, k in itertools.product(range(len(E)), repeat=2)))
        assert interference_prob0(sys_, de, t) == pytest.approx(direct, abs=1e-12)
    grid = np.linspace(-1, 1, 9)
    vec = interference_prob0(sys_, grid, 1.3)
    assert vec.shape == (9,) and np.all((vec >= 0) & (vec <= 1))


# ---------------------------------------------------------------- exact evolution

def test_exact_evolve_examples():
    ints = synth_random_hamiltonian(3, 2, 5)
    H = fermionic_dense(ints)
    s = StateVector(3, random_state(3, 1))
    assert np.array_equal(exact_evolve(s, H, 0.0).amps, s.amps)
    out = exact_evolve(s, H, 1.7)
    np.testing.assert_allclose(out.amps, expm(-1.7j * H) @ s.amps, atol=1e-12)
    assert abs(out.norm() - 1) < 1e-12
    _, vecs = np.linalg.eigh(H)
    eig = StateVector(3, vecs[:, 2].astype(complex))
    np.testing.assert_allclose(np.abs(exact_evolve(eig, H, 3.1).amps), np.abs(eig.amps), atol=1e-12)
    with pytest.raises(DimensionMismatch):
        exact_evolve(s, np.eye(4), 1.0)


def test_trotter_converges_to_exact():
    ints = synth_random_hamiltonian(4, 6, 10)
    h = jordan_wigner(ints)
    s = basis_state(4, "1100")
    exact = exact_evolve(s, fermionic_dense(ints), 1.0)
    out = apply_evolution(s, h, make_plan(h, 1.0, 10_000), dense=True)
    assert np.max(np.abs(out.amps - exact.amps)) < 1e-6


def test_determinant_basis_alignment():
    # reference determinants index the same basis in the oracle and the simulator
    d = Determinant.from_string("0110")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        sys_ = diagonalize(np.diag(np.arange(16.0)), d, "1100")
    assert sys_.energies[int(np.argmax(np.abs(sys_.overlaps0)))] == d.index
