"""Spin-orbital integral records: the BPDE-INTS text format, frozen-core
folding and a seeded generator of synthetic test Hamiltonians.

The Hamiltonian housed by a record is

    H = ecore + sum_pq h1[p,q] a+_p a_q + 1/2 sum_pqrs h2[p,q,r,s] a+_p a+_q a_s a_r

with 0-based spin-orbital indices.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO

import numpy as np

from .errors import (
    EmptyActiveSpace,
    HermiticityViolation,
    IndexOutOfRange,
    MalformedLine,
    MissingHeader,
)

HERMITICITY_TOL = 1e-10

FORMAT_BANNER = (
    "# BPDE-INTS spin-orbital integrals (Hartree)\n"
    "# H = ecore + sum h1[p,q] a+_p a_q + 1/2 sum h2[p,q,r,s] a+_p a+_q a_s a_r\n"
    "# body lines: 'h1 p q re im' | 'h2 p q r s re im' (0-based indices)\n"
)


@dataclass(eq=False)
class SpinOrbitalIntegrals:
    """Core energy plus complex one- and two-electron integrals over spin orbitals."""

    n_orb: int
    core_energy: float
    h1: np.ndarray
    h2: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        self.n_orb = int(self.n_orb)
        self.core_energy = float(self.core_energy)
        self.h1 = np.asarray(self.h1, dtype=complex)
        self.h2 = np.asarray(self.h2, dtype=complex)
        self.label = str(self.label).strip()
        self.validate()

    def validate(self) -> None:
        n = self.n_orb
        if n < 1:
            raise ValueError(f"n_orb must be >= 1, got {n}")
        if self.h1.shape != (n, n):
            raise ValueError(f"h1 has shape {self.h1.shape}, expected {(n, n)}")
        if self.h2.shape != (n,) * 4:
            raise ValueError(f"h2 has shape {self.h2.shape}, expected {(n,) * 4}")
        if not (math.isfinite(self.core_energy) and np.all(np.isfinite(self.h1))
                and np.all(np.isfinite(self.h2))):
            raise ValueError("integral record contains non-finite entries")
        if "\n" in self.label or "\r" in self.label:
            raise ValueError("label must be a single line")
        if "#" in self.label:
            raise ValueError("label must not contain '#' (comment marker in the file format)")
        dev1 = np.max(np.abs(self.h1 - self.h1.conj().T))
        if dev1 > HERMITICITY_TOL:
            raise HermiticityViolation(f"h1 is not Hermitian (max deviation {dev1:.3e})")
        dev2 = np.max(np.abs(self.h2 - self.h2.transpose(2, 3, 0, 1).conj()))
        if dev2 > HERMITICITY_TOL:
            raise HermiticityViolation(
                f"h2[p,q,r,s] != conj(h2[r,s,p,q]) (max deviation {dev2:.3e})")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpinOrbitalIntegrals):
            return NotImplemented
        return (self.n_orb == other.n_orb
                and self.core_energy == other.core_energy
                and self.label == other.label
                and np.array_equal(self.h1, other.h1)
                and np.array_equal(self.h2, other.h2))

    def copy(self) -> "SpinOrbitalIntegrals":
        return SpinOrbitalIntegrals(self.n_orb, self.core_energy, self.h1.copy(),
                                    self.h2.copy(), self.label)


# --------------------------------------------------------------------------
# BPDE-INTS reader / writer
# --------------------------------------------------------------------------

def _fmt(x: float) -> str:
    # 17 significant digits round-trips every double exactly
    return f"{x:.16e}"


def format_integrals(ints: SpinOrbitalIntegrals) -> str:
    """Serialize a record to BPDE-INTS text. Every nonzero entry is written."""
    out = io.StringIO()
    out.write(FORMAT_BANNER)
    if ints.label:
        out.write(f"label {ints.label}\n")
    out.write(f"norb {ints.n_orb}\n")
    out.write(f"ecore {_fmt(ints.core_energy)}\n")
    for p, q in zip(*np.nonzero(ints.h1)):
        v = ints.h1[p, q]
        out.write(f"h1 {p} {q} {_fmt(v.real)} {_fmt(v.imag)}\n")
    for p, q, r, s in zip(*np.nonzero(ints.h2)):
        v = ints.h2[p, q, r, s]
        out.write(f"h2 {p} {q} {r} {s} {_fmt(v.real)} {_fmt(v.imag)}\n")
    return out.getvalue()


def write_integral_file(ints: SpinOrbitalIntegrals, path: str | Path) -> None:
    Path(path).write_text(format_integrals(ints), encoding="utf-8")


def _parse_float(tok: str, lineno: int) -> float:
    try:
        val = float(tok)
    except ValueError:
        raise MalformedLine(lineno, f"non-numeric field {tok!r}") from None
    if not math.isfinite(val):
        raise MalformedLine(lineno, f"non-finite value {tok!r}")
    return val


def _parse_index(tok: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise MalformedLine(lineno, f"non-integer index {tok!r}") from None


def _fill_partners(entries: dict, partner, tensor: np.ndarray, what: str) -> None:
    for key, (val, lineno) in entries.items():
        pkey = partner(key)
        if pkey in entries:
            pval, plineno = entries[pkey]
            if abs(val - pval.conjugate()) > HERMITICITY_TOL:
                raise HermiticityViolation(
                    f"{what}{list(key)} (line {lineno}) and {what}{list(pkey)} "
                    f"(line {plineno}) are not complex conjugates")
        else:
            if pkey == key and abs(val.imag) > HERMITICITY_TOL:
                raise HermiticityViolation(
                    f"{what}{list(key)} (line {lineno}) is self-adjoint but has "
                    f"imaginary part {val.imag:.3e}")
            tensor[pkey] = val.conjugate()
        tensor[key] = val


def parse_integral_file(source: str | IO[str]) -> SpinOrbitalIntegrals:
    """Parse BPDE-INTS text (a string or a readable text stream).

    Unlisted entries are zero. A Hermitian partner that is not listed is filled
    by conjugation; a listed partner must agree to within 1e-10.
    """
    text = source if isinstance(source, str) else source.read()
    n_orb = None
    ecore = None
    label = ""
    body: list[tuple[int, list[str]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        key = toks[0]
        if key == "label":
            label = line[len("label"):].strip()
        elif key == "norb":
            if len(toks) != 2:
                raise MalformedLine(lineno, "expected 'norb <int>'")
            n_orb = _parse_index(toks[1], lineno)
            if n_orb < 1:
                raise MalformedLine(lineno, f"norb must be positive, got {n_orb}")
        elif key == "ecore":
            if len(toks) != 2:
                raise MalformedLine(lineno, "expected 'ecore <float>'")
            ecore = _parse_float(toks[1], lineno)
        elif key in ("h1", "h2"):
            body.append((lineno, toks))
        else:
            raise MalformedLine(lineno, f"unknown record type {key!r}")
    if n_orb is None:
        raise MissingHeader("missing 'norb' header line")
    if ecore is None:
        raise MissingHeader("missing 'ecore' header line")

    e1: dict[tuple[int, ...], tuple[complex, int]] = {}
    e2: dict[tuple[int, ...], tuple[complex, int]] = {}
    for lineno, toks in body:
        nidx = 2 if toks[0] == "h1" else 4
        if len(toks) != 1 + nidx + 2:
            raise MalformedLine(
                lineno, f"'{toks[0]}' expects {nidx} indices and 2 values, got {len(toks) - 1} fields")
        idx = tuple(_parse_index(t, lineno) for t in toks[1:1 + nidx])
        for i in idx:
            if not 0 <= i < n_orb:
                raise IndexOutOfRange(f"line {lineno}: orbital index {i} not in [0, {n_orb})")
        val = complex(_parse_float(toks[-2], lineno), _parse_float(toks[-1], lineno))
        store = e1 if nidx == 2 else e2
        if idx in store:
            raise MalformedLine(lineno, f"duplicate entry {toks[0]}{list(idx)} "
                                        f"(first on line {store[idx][1]})")
        store[idx] = (val, lineno)

    h1 = np.zeros((n_orb, n_orb), dtype=complex)
    h2 = np.zeros((n_orb,) * 4, dtype=complex)
    _fill_partners(e1, lambda k: (k[1], k[0]), h1, "h1")
    _fill_partners(e2, lambda k: (k[2], k[3], k[0], k[1]), h2, "h2")
    return SpinOrbitalIntegrals(n_orb, ecore, h1, h2, label)


def read_integral_file(path: str | Path) -> SpinOrbitalIntegrals:
    with open(path, encoding="utf-8") as fh:
        return parse_integral_file(fh)


# --------------------------------------------------------------------------
# Frozen-core folding
# --------------------------------------------------------------------------

def freeze_orbitals(ints: SpinOrbitalIntegrals, frozen) -> SpinOrbitalIntegrals:
    """Fold permanently occupied orbitals into the core energy and h1.

    The result acts on the remaining orbitals (indices compacted in ascending
    order). Its spectrum equals that of the full Hamiltonian projected onto the
    determinants in which every frozen orbital is occupied.
    """
    frozen = sorted({int(i) for i in frozen})
    if not frozen:
        return ints
    n = ints.n_orb
    for i in frozen:
        if not 0 <= i < n:
            raise IndexOutOfRange(f"frozen orbital {i} not in [0, {n})")
    active = [p for p in range(n) if p not in set(frozen)]
    if not active:
        raise EmptyActiveSpace("every orbital is frozen")

    h1, h2 = ints.h1, ints.h2
    F = np.array(frozen)
    A = np.array(active)
    # <c d || c d> over occupied pairs; c == d terms cancel identically
    hff = h2[np.ix_(F, F, F, F)]
    coulomb = np.einsum("cdcd->", hff)
    exchange = np.einsum("cddc->", hff)
    ecore = ints.core_energy + float(np.sum(np.diag(h1)[F]).real) + 0.5 * float((coulomb - exchange).real)

    # mean field of the frozen shell on the active block
    h2_pcqc = np.einsum("pcqc->pq", h2[np.ix_(A, F, A, F)])
    h2_cpcq = np.einsum("cpcq->pq", h2[np.ix_(F, A, F, A)])
    h2_cpqc = np.einsum("cpqc->pq", h2[np.ix_(F, A, A, F)])
    h2_pccq = np.einsum("pccq->pq", h2[np.ix_(A, F, F, A)])
    h1_new = h1[np.ix_(A, A)] + 0.5 * (h2_pcqc + h2_cpcq - h2_cpqc - h2_pccq)
    h2_new = h2[np.ix_(A, A, A, A)].copy()

    mapping = ",".join(f"{old}->{new}" for new, old in enumerate(active))
    note = f"frozen={frozen} map={mapping}"
    label = f"{ints.label} | {note}" if ints.label else note
    # the folded h1 is Hermitian up to rounding; symmetrize so validation is exact
    h1_new = 0.5 * (h1_new + h1_new.conj().T)
    return SpinOrbitalIntegrals(len(active), ecore, h1_new, h2_new, label)


# --------------------------------------------------------------------------
# Synthetic instances
# --------------------------------------------------------------------------

def synth_random_hamiltonian(n_orb: int, seed: int, diag_dominance: float = 10.0) -> SpinOrbitalIntegrals:
    """Deterministic random integrals with a controllable off-diagonal strength.

    Orbital energies are spread quadratically so that determinant energies are
    well separated. Off-diagonal h1 entries and all of h2 carry magnitudes of
    order 1/diag_dominance; ``diag_dominance == 0`` switches them off entirely
    and yields a Hamiltonian diagonal in the determinant basis.
    """
    if n_orb < 1:
        raise ValueError(f"n_orb must be >= 1, got {n_orb}")
    if diag_dominance < 0 or not math.isfinite(diag_dominance):
        raise ValueError(f"diag_dominance must be finite and >= 0, got {diag_dominance}")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed) & (2**64 - 1)))
    n = n_orb
    p = np.arange(n)
    eps = -1.5 + 0.6 * p + 0.15 * p**2 + rng.uniform(-0.05, 0.05, size=n)
    ecore = float(rng.uniform(-1.0, 1.0))

    h1 = np.diag(eps).astype(complex)
    h2 = np.zeros((n,) * 4, dtype=complex)
    if diag_dominance > 0:
        scale = 1.0 / diag_dominance
        off = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        off = 0.5 * (off + off.conj().T)
        np.fill_diagonal(off, 0.0)
        h1 = h1 + 0.5 * scale * off
        g = rng.normal(size=(n,) * 4) + 1j * rng.normal(size=(n,) * 4)
        # average over the particle-exchange and adjoint symmetries
        g = 0.5 * (g + g.transpose(1, 0, 3, 2))
        g = 0.5 * (g + g.transpose(2, 3, 0, 1).conj())
        h2 = 0.5 * scale * g
    return SpinOrbitalIntegrals(n, ecore, h1, h2,
                                f"synthetic n_orb={n} seed={seed} diag_dominance={diag_dominance}")
