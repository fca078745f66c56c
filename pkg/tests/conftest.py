import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bpdesim.hamiltonian_io import SpinOrbitalIntegrals

settings.register_profile("default", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def zero_ints(n, ecore=0.0):
    return SpinOrbitalIntegrals(n, ecore, np.zeros((n, n), complex), np.zeros((n,) * 4, complex))


def diagonal_ints(n, eps, ecore=0.0):
    ints = zero_ints(n, ecore)
    ints.h1[np.diag_indices(n)] = eps
    return ints


def random_state(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


@pytest.fixture
def tmp_ints(tmp_path):
    from bpdesim.hamiltonian_io import synth_random_hamiltonian, write_integral_file

    def make(n=4, seed=3, dd=10.0, name="h.ints"):
        path = tmp_path / name
        write_integral_file(synth_random_hamiltonian(n, seed, dd), path)
        return path
    return make


_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def record():
    def _record(criterion: int, ok: bool, detail: str) -> None:
        _ACCEPTANCE[criterion] = (bool(ok), detail)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[k]
        first, *rest = detail.split("\n")
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {first}")
        for line in rest:
            terminalreporter.write_line(f"    {line}")
