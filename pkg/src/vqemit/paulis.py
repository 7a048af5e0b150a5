"""Exact algebra of Pauli strings and real-weighted Pauli sums on a few qubits.

Dense matrix realizations are provided for oracle checks; everything here is
immutable and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

_LABELS = "IXYZ"

_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# (phase, label) for single-qubit products: _MUL[a][b] = a*b
_MUL = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}

MAX_DENSE_QUBITS = 4


class PauliError(ValueError):
    pass


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Pauli factors, e.g. "XZ" for X0 Z1."""

    factors: str

    def __post_init__(self):
        if not self.factors:
            raise PauliError("empty Pauli string")
        bad = set(self.factors) - set(_LABELS)
        if bad:
            raise PauliError(f"unknown Pauli labels {sorted(bad)}")

    @property
    def qubit_count(self) -> int:
        return len(self.factors)

    @property
    def is_identity(self) -> bool:
        return set(self.factors) == {"I"}

    def support(self) -> tuple[int, ...]:
        """Qubits on which the string acts non-trivially."""
        return tuple(q for q, f in enumerate(self.factors) if f != "I")

    def matrix(self) -> np.ndarray:
        if self.qubit_count > MAX_DENSE_QUBITS:
            raise PauliError(f"dense matrix limited to {MAX_DENSE_QUBITS} qubits")
        return reduce(np.kron, (_MATS[f] for f in self.factors))

    def __str__(self):
        return self.factors


def multiply(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Product a*b, returned as (unit phase, Pauli string)."""
    if a.qubit_count != b.qubit_count:
        raise PauliError(f"qubit_count mismatch: {a.qubit_count} vs {b.qubit_count}")
    phase = 1 + 0j
    out = []
    for fa, fb in zip(a.factors, b.factors):
        ph, f = _MUL[(fa, fb)]
        phase *= ph
        out.append(f)
    return phase, PauliString("".join(out))


class PauliSum:
    """Hermitian operator sum_h w_h P_h with real weights w_h.

    Terms are normalized on construction: duplicates merged, near-zero
    weights dropped, remaining terms sorted lexicographically so equal
    operators compare equal.
    """

    def __init__(self, terms, *, tol: float = 1e-14):
        merged: dict[str, float] = {}
        n = None
        for coeff, string in terms:
            if isinstance(string, str):
                string = PauliString(string)
            if n is None:
                n = string.qubit_count
            elif string.qubit_count != n:
                raise PauliError("all terms must share one qubit_count")
            c = complex(coeff)
            if abs(c.imag) > 1e-12 * max(1.0, abs(c.real)):
                raise PauliError(f"non-real coefficient {coeff} for {string}")
            merged[string.factors] = merged.get(string.factors, 0.0) + c.real
        if n is None:
            raise PauliError("PauliSum needs at least one term")
        self._n = n
        self._terms = tuple(
            (w, PauliString(f)) for f, w in sorted(merged.items()) if abs(w) > tol
        )

    @property
    def qubit_count(self) -> int:
        return self._n

    @property
    def terms(self) -> tuple[tuple[float, PauliString], ...]:
        return self._terms

    def weight(self, factors: str) -> float:
        for w, s in self._terms:
            if s.factors == factors:
                return w
        return 0.0

    def one_norm(self) -> float:
        """sum_h |w_h|; bounds any expectation value of the operator."""
        return float(sum(abs(w) for w, _ in self._terms))

    def identity_weight(self) -> float:
        return self.weight("I" * self._n)

    def non_identity_terms(self) -> list[tuple[float, PauliString]]:
        return [(w, s) for w, s in self._terms if not s.is_identity]

    def matrix(self) -> np.ndarray:
        if self._n > MAX_DENSE_QUBITS:
            raise PauliError(f"dense matrix limited to {MAX_DENSE_QUBITS} qubits")
        out = np.zeros((2 ** self._n, 2 ** self._n), dtype=complex)
        for w, s in self._terms:
            out += w * s.matrix()
        return out

    def __eq__(self, other):
        return isinstance(other, PauliSum) and self._terms == other._terms

    def __hash__(self):
        return hash(self._terms)

    def __repr__(self):
        return f"PauliSum({self.to_text()!r})"

    # -- text round-trip, one "c * P0P1..." term per line --------------------

    def to_text(self) -> str:
        return "\n".join(f"{w:.17g} * {s.factors}" for w, s in self._terms)

    @classmethod
    def from_text(cls, text: str) -> "PauliSum":
        terms = []
        for line in text.strip().splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            coeff, _, factors = line.partition("*")
            terms.append((float(coeff), PauliString(factors.strip())))
        return cls(terms)


def matrix(op: PauliString | PauliSum) -> np.ndarray:
    """Dense complex matrix of a string or sum (qubit_count <= 4)."""
    return op.matrix()


def expectation_product_state(op: PauliSum | PauliString, state) -> float:
    """<psi| op |psi> for a product state given as per-qubit 2-vectors.

    Cost is O(terms * qubits); the full 2^n vector is never formed.
    """
    if isinstance(op, PauliString):
        op = PauliSum([(1.0, op)])
    factors = [np.asarray(v, dtype=complex).reshape(2) for v in state]
    if len(factors) != op.qubit_count:
        raise PauliError(f"need {op.qubit_count} single-qubit states, got {len(factors)}")
    for v in factors:
        norm = np.linalg.norm(v)
        if abs(norm - 1.0) > 1e-10:
            raise PauliError(f"unnormalized factor state (norm {norm})")
    # per-qubit expectations of each local Pauli, computed once
    local = np.empty((len(factors), 4), dtype=complex)
    for q, v in enumerate(factors):
        for k, lab in enumerate(_LABELS):
            local[q, k] = v.conj() @ _MATS[lab] @ v
    total = 0.0
    for w, s in op.terms:
        prod = 1.0 + 0j
        for q, f in enumerate(s.factors):
            prod *= local[q, _LABELS.index(f)]
        total += w * prod.real
    return float(total)
