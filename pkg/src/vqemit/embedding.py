"""Single-impurity embedding model on 4 spin-orbitals and its 2-qubit form.

The model couples one interacting orbital (c) to one bath orbital (d):

    H = U/2 (n_c - 1)^2 + D sum_s (c+_s d_s + d+_s c_s) + lc sum_s d_s d+_s

Spin-orbital ordering is fixed as (c_up, d_up, c_dn, d_dn). The 2-qubit
representation is obtained by rotating to the restricted mean-field orbital
basis and keeping the half-filled Sz=0 sector, so the mean-field reference
becomes the computational-basis state |10>. Qubit 0 stores the occupation of
the bonding orbital in the up channel, qubit 1 the hole of the bonding
orbital in the down channel.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
import math

import numpy as np

from .paulis import PauliString, PauliSum

__all__ = [
    "EmbeddingParams",
    "QubitHamiltonian",
    "EhSolution",
    "MappingError",
    "build_fermionic_hamiltonian",
    "hartree_fock",
    "map_to_qubits",
    "qubit_observables",
    "exact_ground_state",
    "HF_STATE_INDEX",
]

# index of the mean-field reference |10> in the 2-qubit computational basis
HF_STATE_INDEX = 2

_SM = np.array([[0.0, 1.0], [0.0, 0.0]])
_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
_I2 = np.eye(2)


def _ann(k: int, n: int = 4) -> np.ndarray:
    """Annihilation operator for mode k with Jordan-Wigner sign strings."""
    ops = [_Z] * k + [_SM] + [_I2] * (n - k - 1)
    return reduce(np.kron, ops)


_C = [_ann(k) for k in range(4)]            # c_up, d_up, c_dn, d_dn
_CD = [c.T for c in _C]
NUMBER_OP = sum(cd @ c for cd, c in zip(_CD, _C))
SZ_OP = 0.5 * (_CD[0] @ _C[0] + _CD[1] @ _C[1] - _CD[2] @ _C[2] - _CD[3] @ _C[3])

# S^2 = Sz^2 + (S+ S- + S- S+)/2  with S+ = c+_up c_dn + d+_up d_dn
_SP = _CD[0] @ _C[2] + _CD[1] @ _C[3]
S2_OP = SZ_OP @ SZ_OP + 0.5 * (_SP @ _SP.T + _SP.T @ _SP)

DOCC_OP = _CD[0] @ _C[0] @ _CD[2] @ _C[2]
# Hermitian realizations of the density-matrix components
# f1 = <(1/2) sum_s c+_s d_s>, f2 = <(1/2) sum_s d_s d+_s>
F1_OP = 0.25 * ((_CD[0] @ _C[1] + _CD[1] @ _C[0]) + (_CD[2] @ _C[3] + _CD[3] @ _C[2]))
F2_OP = 0.5 * (_C[1] @ _CD[1] + _C[3] @ _CD[3])


class MappingError(RuntimeError):
    """Fermion-to-qubit reduction failed an internal consistency check."""


@dataclass(frozen=True)
class EmbeddingParams:
    """Couplings (U, D, lc); the default unit system sets 2D = 1."""

    u: float
    d_hyb: float = 0.5
    lambda_c: float = 0.0

    def __post_init__(self):
        for name in ("u", "d_hyb", "lambda_c"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
        if self.d_hyb == 0.0:
            raise ValueError("d_hyb must be nonzero")


@dataclass(frozen=True)
class EhSolution:
    """Ground-state energy and observables of the half-filled sector."""

    energy: float
    docc: float
    f1: float
    f2: float

    def __post_init__(self):
        if not (-1e-9 <= self.docc <= 1.0 + 1e-9):
            raise ValueError(f"docc out of range: {self.docc}")
        if not (-1e-9 <= self.f2 <= 1.0 + 1e-9):
            raise ValueError(f"f2 out of range: {self.f2}")
        if abs(self.f1) > 0.5 + 1e-9:
            raise ValueError(f"|f1| exceeds 1/2: {self.f1}")


@dataclass(frozen=True)
class QubitHamiltonian:
    """2-qubit image of the embedding Hamiltonian.

    zeta = (z0..z5) are the weights of the fixed operator pattern
    z0*I + z1*(Z0-Z1) + z2*(X0+X1) + z3*Z0Z1 + z4*(X0Z1-Z0X1) + z5*X0X1.
    """

    zeta: tuple[float, float, float, float, float, float]
    sum: PauliSum
    params: EmbeddingParams

    def matrix(self) -> np.ndarray:
        return self.sum.matrix()


def build_fermionic_hamiltonian(p: EmbeddingParams) -> np.ndarray:
    """Dense Fock-space (16x16) matrix of the embedding Hamiltonian."""
    nc = _CD[0] @ _C[0] + _CD[2] @ _C[2]
    shifted = nc - np.eye(16)
    h = 0.5 * p.u * shifted @ shifted
    for ci, di in ((0, 1), (2, 3)):
        h = h + p.d_hyb * (_CD[ci] @ _C[di] + _CD[di] @ _C[ci])
        h = h + p.lambda_c * (_C[di] @ _CD[di])
    return h


def hartree_fock(p: EmbeddingParams, tol: float = 1e-14, max_iter: int = 1000):
    """Spin-restricted mean-field solution at half filling.

    The quadratic problem [[U(<n_c>-1), D], [D, -lc]] is iterated to
    self-consistency in <n_c>. Returns (rotation, energy) where rotation
    columns are the occupied and virtual orbitals (impurity amplitude of the
    occupied orbital fixed positive) and energy is <det|H|det>.
    """
    nc = 1.0
    for _ in range(max_iter):
        h1 = np.array([[p.u * (nc - 1.0), p.d_hyb], [p.d_hyb, -p.lambda_c]])
        _, v = np.linalg.eigh(h1)
        nc_new = 2.0 * v[0, 0] ** 2
        if abs(nc_new - nc) < tol:
            nc = nc_new
            break
        nc = 0.5 * (nc + nc_new)
    else:
        raise RuntimeError("mean-field occupation did not converge")
    h1 = np.array([[p.u * (nc - 1.0), p.d_hyb], [p.d_hyb, -p.lambda_c]])
    _, v = np.linalg.eigh(h1)
    occ, virt = v[:, 0].copy(), v[:, 1].copy()
    if occ[0] < 0:
        occ = -occ
    if virt[1] < 0:
        virt = -virt
    uu, vv = occ
    energy = (0.5 * p.u * (2 * uu**4 - 2 * uu**2 + 1)
              + 4 * p.d_hyb * uu * vv + 2 * p.lambda_c * (1 - vv**2))
    rotation = np.column_stack([occ, virt])
    return rotation, float(energy)


def _sector_basis(p: EmbeddingParams) -> np.ndarray:
    """16x4 isometry onto the half-filled Sz=0 sector in the rotated basis.

    Column order follows the 2-qubit computational basis |q0 q1> =
    |00>, |01>, |10>, |11> with q0 = n(occ, up) and q1 = 1 - n(occ, dn).
    """
    rotation, _ = hartree_fock(p)
    uu, vv = rotation[:, 0]
    ad_up = uu * _CD[0] + vv * _CD[1]
    bd_up = -vv * _CD[0] + uu * _CD[1]
    ad_dn = uu * _CD[2] + vv * _CD[3]
    bd_dn = -vv * _CD[2] + uu * _CD[3]
    vac = np.zeros(16)
    vac[0] = 1.0
    occupations = {
        (0, 0): (0, 1, 1, 0),
        (0, 1): (0, 1, 0, 1),
        (1, 0): (1, 0, 1, 0),   # mean-field reference
        (1, 1): (1, 0, 0, 1),
    }
    basis = np.zeros((16, 4))
    for col, q in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
        s = vac
        # creation operators applied in fixed mode order keeps signs consistent
        for op, n in zip((ad_up, bd_up, ad_dn, bd_dn), occupations[q]):
            if n:
                s = op @ s
        basis[:, col] = s
    return basis


_PAULI_LABELS_2Q = [a + b for a in "IXYZ" for b in "IXYZ"]


def _decompose_two_qubit(m: np.ndarray, tol: float = 1e-11) -> dict[str, float]:
    out = {}
    for lab in _PAULI_LABELS_2Q:
        pm = PauliString(lab).matrix()
        c = np.trace(pm.conj().T @ m) / 4.0
        if abs(c.imag) > tol:
            raise MappingError(f"complex weight for {lab}: {c}")
        if abs(c.real) > tol:
            out[lab] = float(c.real)
    return out


def _project(op16: np.ndarray, basis: np.ndarray) -> np.ndarray:
    return basis.T @ op16 @ basis


def map_to_qubits(p: EmbeddingParams, check_tol: float = 1e-10) -> QubitHamiltonian:
    """2-qubit Hamiltonian whose spectrum equals the half-filled Sz=0 sector.

    Raises MappingError if the reduced operator fails the fixed zeta pattern
    or its spectrum drifts from the fermionic sector beyond check_tol.
    """
    h16 = build_fermionic_hamiltonian(p)
    basis = _sector_basis(p)
    h4 = _project(h16, basis)
    dec = _decompose_two_qubit(h4.astype(complex))

    def w(lab):
        return dec.pop(lab, 0.0)

    z0 = w("II")
    z1, z1b = w("ZI"), w("IZ")
    z2, z2b = w("XI"), w("IX")
    z3 = w("ZZ")
    z4, z4b = w("XZ"), w("ZX")
    z5 = w("XX")
    if dec:
        raise MappingError(f"unexpected Pauli content: {sorted(dec)}")
    if abs(z1 + z1b) > 1e-10 or abs(z2 - z2b) > 1e-10 or abs(z4 + z4b) > 1e-10:
        raise MappingError("reduced operator violates the zeta symmetry pattern")
    zeta = (z0, z1, z2, z3, z4, z5)
    terms = [(z0, "II"), (z1, "ZI"), (-z1, "IZ"), (z2, "XI"), (z2, "IX"),
             (z3, "ZZ"), (z4, "XZ"), (-z4, "ZX"), (z5, "XX")]
    qh = QubitHamiltonian(zeta=zeta, sum=PauliSum(terms), params=p)

    got = np.sort(np.linalg.eigvalsh(qh.matrix()))
    want = np.sort(np.linalg.eigvalsh(h4))
    if np.abs(got - want).max() > check_tol:
        raise MappingError("qubit spectrum mismatch against sector diagonalization")
    return qh


def qubit_observables(p: EmbeddingParams) -> dict[str, PauliSum]:
    """2-qubit images of docc, f1 and f2, consistent with map_to_qubits."""
    basis = _sector_basis(p)
    out = {}
    for name, op in (("docc", DOCC_OP), ("f1", F1_OP), ("f2", F2_OP)):
        dec = _decompose_two_qubit(_project(op, basis).astype(complex))
        out[name] = PauliSum([(wt, lab) for lab, wt in dec.items()])
    return out


def exact_ground_state(p: EmbeddingParams, degeneracy_tol: float = 1e-10) -> EhSolution:
    """Diagonalize the half-filled Sz=0 sector and report the singlet ground state.

    A degenerate ground level is resolved by diagonalizing S^2 inside the
    level and picking the smallest spin eigenvalue.
    """
    basis = _sector_basis(p)
    h4 = _project(build_fermionic_hamiltonian(p), basis)
    w, v = np.linalg.eigh(h4)
    level = np.flatnonzero(w - w[0] <= degeneracy_tol)
    if level.size > 1:
        s2 = _project(S2_OP, basis)
        inside = v[:, level].T @ s2 @ v[:, level]
        s2_eigs, s2_vecs = np.linalg.eigh(inside)
        gs = v[:, level] @ s2_vecs[:, 0]
    else:
        gs = v[:, 0]
    obs = {}
    for name, op in (("docc", DOCC_OP), ("f1", F1_OP), ("f2", F2_OP)):
        obs[name] = float(gs @ _project(op, basis) @ gs)
    return EhSolution(energy=float(w[0]), **obs)
