"""Jordan-Wigner mapping of spin-orbital integrals onto Pauli strings.

Conventions: qubit q is spin orbital q, |1> means occupied, and the parity
string of a_q runs over qubits 0..q-1, so

    a_q = Z_0 ... Z_{q-1} (X_q + i Y_q) / 2.

Internally operators are kept in symplectic form c * X^x Z^z (x, z bitmasks,
X-part to the left on every qubit). Products of such monomials only need a
popcount for the sign, which keeps the transformation vectorizable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import LengthMismatch, NonHermitianResult
from .hamiltonian_io import SpinOrbitalIntegrals

DEFAULT_PRUNE_CUTOFF = 1e-12
IMAG_TOL = 1e-10

_LETTERS = {(1, 0): "X", (1, 1): "Y", (0, 1): "Z"}


def _popcount(a: np.ndarray) -> np.ndarray:
    # bitwise_count returns uint8; widen before any signed arithmetic
    return np.bitwise_count(a).astype(np.int64)


@dataclass(frozen=True, order=True)
class PauliString:
    """Tensor product of X/Y/Z on a set of qubits (identity elsewhere).

    Stored as bitmasks: qubit q carries X if only x-bit q is set, Z if only
    z-bit q is set and Y if both are set.
    """

    x: int = 0
    z: int = 0

    @classmethod
    def from_ops(cls, ops: Mapping[int, str] | Iterable[tuple[int, str]]) -> "PauliString":
        items = ops.items() if isinstance(ops, Mapping) else ops
        x = z = 0
        seen = set()
        for q, letter in items:
            q = int(q)
            if q < 0:
                raise ValueError(f"negative qubit index {q}")
            if q in seen:
                raise ValueError(f"qubit {q} appears twice in Pauli string")
            seen.add(q)
            letter = letter.upper()
            if letter in ("X", "Y"):
                x |= 1 << q
            if letter in ("Z", "Y"):
                z |= 1 << q
            if letter not in ("X", "Y", "Z"):
                raise ValueError(f"unknown Pauli letter {letter!r}")
        return cls(x, z)

    @classmethod
    def parse(cls, text: str) -> "PauliString":
        """Parse labels such as ``"X0 Y1 Z3"``; ``"I"`` or ``""`` is the identity."""
        text = text.strip()
        if text in ("", "I"):
            return cls()
        return cls.from_ops((int(tok[1:]), tok[0]) for tok in text.split())

    @property
    def ops(self) -> dict[int, str]:
        out = {}
        m = self.x | self.z
        q = 0
        while m >> q:
            if (m >> q) & 1:
                out[q] = _LETTERS[((self.x >> q) & 1, (self.z >> q) & 1)]
            q += 1
        return out

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(self.ops)

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def is_diagonal(self) -> bool:
        return self.x == 0

    def max_qubit(self) -> int:
        return (self.x | self.z).bit_length() - 1

    def sort_key(self) -> tuple:
        ops = self.ops
        return (tuple(ops), "".join(ops.values()))

    def __str__(self) -> str:
        if self.is_identity:
            return "I"
        return " ".join(f"{p}{q}" for q, p in self.ops.items())


@dataclass
class QubitHamiltonian:
    """Real-weighted sum of Pauli strings on ``n_qubits`` qubits."""

    n_qubits: int
    terms: list[tuple[float, PauliString]] = field(default_factory=list)

    def __post_init__(self) -> None:
        keys = [p for _, p in self.terms]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate Pauli strings in QubitHamiltonian")
        for _, p in self.terms:
            if p.max_qubit() >= self.n_qubits:
                raise ValueError(f"term {p} exceeds n_qubits={self.n_qubits}")

    def __len__(self) -> int:
        return len(self.terms)

    def as_dict(self) -> dict[PauliString, float]:
        return {p: w for w, p in self.terms}

    def identity_weight(self) -> float:
        return sum(w for w, p in self.terms if p.is_identity)

    def to_dense(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix (basis index bit q = qubit q)."""
        dim = 1 << self.n_qubits
        idx = np.arange(dim, dtype=np.int64)
        mat = np.zeros((dim, dim), dtype=complex)
        for w, p in self.terms:
            # P|i> = i^{#Y} (-1)^{popcount(i & z)} |i ^ x>
            ny = _popcount(np.int64(p.x & p.z))
            coef = (1j) ** int(ny) * (1 - 2 * (_popcount(idx & p.z) & 1))
            mat[idx ^ p.x, idx] += w * coef
        return mat


@dataclass(frozen=True)
class Determinant:
    """Occupation bitstring; ``occ[q] == 1`` means spin orbital q is occupied."""

    occ: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(b not in (0, 1) for b in self.occ):
            raise ValueError(f"occupations must be 0/1, got {self.occ}")

    @classmethod
    def from_string(cls, bits: str) -> "Determinant":
        """``"110"`` means qubits 0 and 1 occupied, qubit 2 empty."""
        bits = bits.strip()
        if not bits or any(c not in "01" for c in bits):
            raise ValueError(f"invalid occupation string {bits!r}")
        return cls(tuple(int(c) for c in bits))

    @classmethod
    def from_occupied(cls, n: int, occupied: Iterable[int]) -> "Determinant":
        occ = [0] * n
        for q in occupied:
            occ[q] = 1
        return cls(tuple(occ))

    def __len__(self) -> int:
        return len(self.occ)

    def __str__(self) -> str:
        return "".join(map(str, self.occ))

    @property
    def index(self) -> int:
        return sum(b << q for q, b in enumerate(self.occ))

    @property
    def n_particles(self) -> int:
        return sum(self.occ)

    def flips(self, other: "Determinant") -> list[int]:
        """Qubits on which the two determinants differ, ascending."""
        if len(other) != len(self):
            raise LengthMismatch(f"determinant lengths differ: {len(self)} vs {len(other)}")
        return [q for q, (a, b) in enumerate(zip(self.occ, other.occ)) if a != b]


def as_determinant(d) -> Determinant:
    if isinstance(d, Determinant):
        return d
    if isinstance(d, str):
        return Determinant.from_string(d)
    return Determinant(tuple(int(b) for b in d))


# --------------------------------------------------------------------------
# Jordan-Wigner
# --------------------------------------------------------------------------

def _ladder_components(idx: np.ndarray, dagger: bool):
    """Two symplectic monomials whose sum is a_p (or a+_p) for every p in idx.

    a_p  = 1/2 (X_p Z_<p - X_p Z_p Z_<p)
    a+_p = 1/2 (X_p Z_<p + X_p Z_p Z_<p)
    """
    one = np.int64(1)
    bit = np.left_shift(one, idx)
    low = bit - 1
    sign = 1.0 if dagger else -1.0
    return [(bit, low, 0.5), (bit, low | bit, 0.5 * sign)]


def _multiply(x1, z1, c1, x2, z2, c2):
    # (X^x1 Z^z1)(X^x2 Z^z2) = (-1)^{|z1 & x2|} X^{x1^x2} Z^{z1^z2}
    sign = 1 - 2 * (_popcount(z1 & x2) & 1)
    return x1 ^ x2, z1 ^ z2, c1 * c2 * sign


def _accumulate(xs: list, zs: list, cs: list, n: int) -> dict[tuple[int, int], complex]:
    if not xs:
        return {}
    x = np.concatenate(xs)
    z = np.concatenate(zs)
    c = np.concatenate(cs)
    keys = (x << n) | z
    uniq, inv = np.unique(keys, return_inverse=True)
    total = np.zeros(len(uniq), dtype=complex)
    np.add.at(total, inv, c)
    mask = (1 << n) - 1
    return {(int(k >> n), int(k & mask)): complex(v) for k, v in zip(uniq, total)}


def jordan_wigner(ints: SpinOrbitalIntegrals, prune_cutoff: float = DEFAULT_PRUNE_CUTOFF) -> QubitHamiltonian:
    """Map integrals to a Pauli-sum Hamiltonian, one qubit per spin orbital.

    Imaginary parts of the merged coefficients must vanish (|Im| < 1e-10);
    anything larger means the integrals do not describe a Hermitian operator.
    Terms with |weight| < prune_cutoff are dropped.
    """
    if prune_cutoff < 0:
        raise ValueError("prune_cutoff must be non-negative")
    n = ints.n_orb
    xs, zs, cs = [], [], []

    # one-body: h1[p,q] a+_p a_q
    pq = np.argwhere(ints.h1 != 0)
    if len(pq):
        p, q = pq[:, 0].astype(np.int64), pq[:, 1].astype(np.int64)
        coef = ints.h1[p, q]
        for xa, za, ca in _ladder_components(p, True):
            for xb, zb, cb in _ladder_components(q, False):
                x, z, c = _multiply(xa, za, ca, xb, zb, cb)
                xs.append(x); zs.append(z); cs.append(c * coef)

    # two-body: 1/2 h2[p,q,r,s] a+_p a+_q a_s a_r
    pqrs = np.argwhere(ints.h2 != 0)
    if len(pqrs):
        p, q, r, s = (pqrs[:, i].astype(np.int64) for i in range(4))
        coef = 0.5 * ints.h2[p, q, r, s]
        for x1, z1, c1 in _ladder_components(p, True):
            for x2, z2, c2 in _ladder_components(q, True):
                xa, za, ca = _multiply(x1, z1, c1, x2, z2, c2)
                for x3, z3, c3 in _ladder_components(s, False):
                    xb, zb, cb = _multiply(xa, za, ca, x3, z3, c3)
                    for x4, z4, c4 in _ladder_components(r, False):
                        x, z, c = _multiply(xb, zb, cb, x4, z4, c4)
                        xs.append(x); zs.append(z); cs.append(c * coef)

    merged = _accumulate(xs, zs, cs, n)
    merged[(0, 0)] = merged.get((0, 0), 0.0) + ints.core_energy

    terms = []
    for (x, z), c in merged.items():
        # X^x Z^z = (-i)^{#Y} * sigma-string, since XZ = -iY
        w = c * (-1j) ** int(_popcount(np.int64(x & z)))
        if abs(w.imag) > IMAG_TOL:
            raise NonHermitianResult(
                f"Pauli coefficient of {PauliString(x, z)} has imaginary part {w.imag:.3e}")
        if abs(w.real) < prune_cutoff or w.real == 0.0:
            continue
        terms.append((float(w.real), PauliString(x, z)))
    terms.sort(key=lambda t: t[1].sort_key())
    return QubitHamiltonian(n, terms)


def determinant_expectation(h: QubitHamiltonian, d) -> float:
    """<d|H|d>: only strings made of Z and identity contribute."""
    d = as_determinant(d)
    if len(d) != h.n_qubits:
        raise LengthMismatch(f"determinant has {len(d)} sites, Hamiltonian has {h.n_qubits} qubits")
    occ = d.index
    total = 0.0
    for w, p in h.terms:
        if p.x:
            continue
        total += -w if bin(p.z & occ).count("1") & 1 else w
    return total
