"""Bayesian phase difference estimation on a simulated state-vector device."""

__version__ = "0.1.0"

from .bpde import (  # noqa: E402
    BpdeConfig,
    BpdeResult,
    Gaussian,
    LikelihoodFit,
    Mode,
    ScanPoint,
    bayes_update,
    build_bpde_circuit,
    fit_gaussian,
    run_bpde,
    scan_likelihood,
)
from .evolution import Backend, TrotterRule, apply_evolution, build_second_order_step, slice_count  # noqa: E402
from .hamiltonian_io import (  # noqa: E402
    SpinOrbitalIntegrals,
    freeze_orbitals,
    parse_integral_file,
    read_integral_file,
    synth_random_hamiltonian,
    write_integral_file,
)
from .oracle import diagonalize, interference_prob0, exact_evolve, exact_gap, fermionic_dense  # noqa: E402
from .qubit_map import Determinant, PauliString, QubitHamiltonian, jordan_wigner  # noqa: E402
from .state_engine import Circuit, Gate, GateKind, StateVector, apply_gate, basis_state, run_circuit  # noqa: E402
