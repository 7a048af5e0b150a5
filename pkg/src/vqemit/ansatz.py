"""Two-parameter coupled-cluster circuit and the trigonometric landscape basis.

The circuit applies four Pauli-exponential factors to the mean-field state
|10> (rightmost factor first):

    exp(+i t1 Y1/2) exp(-i t1 Y0/2) exp(-i t2 Y0X1/2) exp(+i t2 X0Y1/2)

Both single-qubit angles are tied to t1 (spin rotation symmetry), so the
circuit exposes exactly two free parameters. Along t2 = 0 the state stays a
product state and any observable is evaluated classically at zero cost.

The energy landscape of this circuit is an exact linear combination of the
25 functions T_(i,j) = cos^i(t1/2) sin^(4-i)(t1/2) cos^j(t2/2) sin^(4-j)(t2/2),
flattened here as index s = 5*i + j.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding import HF_STATE_INDEX
from .paulis import PauliString, PauliSum, expectation_product_state
from .simulator import Gate, compile_pauli_rotation, rotation_gate

__all__ = [
    "ThetaPoint",
    "N_BASIS",
    "build_circuit",
    "statevector",
    "basis_functions",
    "basis_matrix",
    "basis_gradient",
    "exact_boundary_value",
    "exact_boundary_energy",
    "boundary_state_factors",
    "wrap_angle",
]

N_BASIS = 25


@dataclass(frozen=True)
class ThetaPoint:
    theta1: float
    theta2: float

    def __post_init__(self):
        for v in (self.theta1, self.theta2):
            if not -np.pi <= v <= np.pi:
                raise ValueError(f"angle {v} outside [-pi, pi]")

    def as_array(self) -> np.ndarray:
        return np.array([self.theta1, self.theta2])


def wrap_angle(t: float) -> float:
    """Map an angle into [-pi, pi)."""
    return float((t + np.pi) % (2 * np.pi) - np.pi)


def _coerce(theta) -> tuple[float, float]:
    if isinstance(theta, ThetaPoint):
        return theta.theta1, theta.theta2
    t1, t2 = float(theta[0]), float(theta[1])
    ThetaPoint(t1, t2)  # range check
    return t1, t2


def build_circuit(theta) -> list[Gate]:
    """Gate list preparing |phi(theta)> from |00>.

    The reference |10> is prepared by an x gate; the two-qubit exponentials
    are compiled to a fixed basis-change/cnot/rotation pattern so every
    evaluation sees an identical noise dose (21 gates total).
    """
    t1, t2 = _coerce(theta)
    gates: list[Gate] = [Gate("x", (0,))]
    # rightmost factor of the ansatz acts first
    gates += compile_pauli_rotation(PauliString("XY"), -t2)
    gates += compile_pauli_rotation(PauliString("YX"), +t2)
    gates.append(rotation_gate("Y", 0, +t1))
    gates.append(rotation_gate("Y", 1, -t1))
    return gates


_Y0 = PauliString("YI").matrix()
_Y1 = PauliString("IY").matrix()
_YX = PauliString("YX").matrix()
_XY = PauliString("XY").matrix()


def _expi(p: np.ndarray, phi: float) -> np.ndarray:
    # exp(i phi P) for P with P^2 = I
    return np.cos(phi) * np.eye(4) + 1j * np.sin(phi) * p


def statevector(theta) -> np.ndarray:
    """Noiseless state, computed from dense Pauli exponentials.

    Intentionally independent of the gate compilation in build_circuit so
    the two can cross-check each other.
    """
    t1, t2 = _coerce(theta)
    psi = np.zeros(4, dtype=complex)
    psi[HF_STATE_INDEX] = 1.0
    psi = _expi(_XY, +t2 / 2) @ psi
    psi = _expi(_YX, -t2 / 2) @ psi
    psi = _expi(_Y0, -t1 / 2) @ psi
    psi = _expi(_Y1, +t1 / 2) @ psi
    return psi


def statevector_expectation(theta, op: PauliSum) -> float:
    psi = statevector(theta)
    return float(np.real(psi.conj() @ op.matrix() @ psi))


def basis_functions(theta) -> np.ndarray:
    """The 25 landscape basis values at one point, flat index s = 5*i + j."""
    t1, t2 = _coerce(theta)
    return basis_matrix(np.array([[t1, t2]]))[0]


def basis_matrix(thetas: np.ndarray) -> np.ndarray:
    """(n, 25) basis values for an (n, 2) array of angle pairs.

    Inputs are trusted to be wrapped; the basis itself is 2pi-periodic.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    c1, s1 = np.cos(thetas[:, 0] / 2), np.sin(thetas[:, 0] / 2)
    c2, s2 = np.cos(thetas[:, 1] / 2), np.sin(thetas[:, 1] / 2)
    pow1 = np.stack([c1**i * s1 ** (4 - i) for i in range(5)], axis=1)
    pow2 = np.stack([c2**j * s2 ** (4 - j) for j in range(5)], axis=1)
    return (pow1[:, :, None] * pow2[:, None, :]).reshape(len(thetas), N_BASIS)


def _pow_and_deriv(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    c, s = np.cos(t / 2), np.sin(t / 2)
    p = np.stack([c**i * s ** (4 - i) for i in range(5)], axis=-1)
    d = np.empty_like(p)
    for i in range(5):
        term1 = -0.5 * i * (c ** (i - 1) if i >= 1 else np.zeros_like(c)) * s ** (5 - i)
        term2 = 0.5 * (4 - i) * c ** (i + 1) * (s ** (3 - i) if i <= 3 else np.zeros_like(s))
        d[..., i] = term1 + term2
    return p, d


def basis_gradient(thetas: np.ndarray) -> np.ndarray:
    """(n, 25, 2) partial derivatives of every basis function."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    p1, d1 = _pow_and_deriv(thetas[:, 0])
    p2, d2 = _pow_and_deriv(thetas[:, 1])
    g1 = (d1[:, :, None] * p2[:, None, :]).reshape(len(thetas), N_BASIS)
    g2 = (p1[:, :, None] * d2[:, None, :]).reshape(len(thetas), N_BASIS)
    return np.stack([g1, g2], axis=-1)


def boundary_state_factors(theta1: float) -> list[np.ndarray]:
    """Per-qubit state vectors of |phi(theta1, 0)>."""
    c, s = np.cos(theta1 / 2), np.sin(theta1 / 2)
    return [np.array([-s, c], dtype=complex), np.array([c, -s], dtype=complex)]


def exact_boundary_value(theta1: float, op: PauliSum) -> float:
    """<phi(theta1, 0)| op |phi(theta1, 0)> via single-qubit factors."""
    return expectation_product_state(op, boundary_state_factors(theta1))


def exact_boundary_energy(theta1: float, h) -> float:
    """Energy on the classically exact line theta2 = 0."""
    hsum = h.sum if hasattr(h, "sum") else h
    return exact_boundary_value(theta1, hsum)
