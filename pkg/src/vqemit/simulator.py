"""Density-matrix simulation of small circuits with synthetic noise.

The noise model is parametric: depolarizing error after every gate (p1 for
single-qubit gates, p2 for cnot), optional amplitude damping per gate layer,
and an independent per-qubit readout confusion applied to measurement
probabilities. Measurement basis rotations are treated as ideal so that a
readout-mitigated estimate converges to tr(rho P) in the infinite-shot limit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from scipy.optimize import nnls

from .paulis import PauliString, PauliSum

__all__ = [
    "Gate",
    "NoiseModel",
    "DensityMatrix",
    "MeasurementRecord",
    "rotation_gate",
    "compile_pauli_rotation",
    "circuit_to_text",
    "evolve",
    "measure_pauli",
    "estimate_energy",
    "calibrate_readout",
    "mitigate_counts",
    "confusion_matrix",
    "derived_rng",
]

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S = np.diag([1, 1j]).astype(complex)
_SDG = _S.conj().T
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_CLIFFORD = {"h": _H, "s": _S, "sdg": _SDG, "x": _X}


def derived_rng(*key: int) -> np.random.Generator:
    """Independent generator for a hierarchical integer key.

    Streams for distinct keys are statistically independent, so parallel
    evaluation with per-task keys reproduces the sequential results.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=key[0], spawn_key=key[1:]))


@dataclass(frozen=True)
class Gate:
    """One circuit element: kind in {rot, h, s, sdg, x, cnot}."""

    kind: str
    qubits: tuple[int, ...]
    pauli: str | None = None      # single-qubit rotation axis for kind == "rot"
    angle: float | None = None

    def to_text(self) -> str:
        if self.kind == "rot":
            return f"rot {self.pauli} q{self.qubits[0]} {self.angle:.12g}"
        return f"{self.kind} " + " ".join(f"q{q}" for q in self.qubits)


def rotation_gate(pauli: str, qubit: int, angle: float) -> Gate:
    """exp(-i angle/2 P) on one qubit."""
    if pauli not in "XYZ":
        raise ValueError(f"rotation axis must be X, Y or Z, got {pauli}")
    return Gate("rot", (qubit,), pauli=pauli, angle=float(angle))


# basis changes mapping a local Pauli to Z (applied before a Z-rotation or
# a computational-basis measurement) and their inverses
_TO_Z = {"X": ("h",), "Y": ("sdg", "h"), "Z": ()}
_FROM_Z = {"X": ("h",), "Y": ("h", "s"), "Z": ()}


def compile_pauli_rotation(string: PauliString, angle: float) -> list[Gate]:
    """exp(-i angle/2 P) for a one- or two-qubit Pauli string P.

    Multi-qubit rotations become basis changes plus a cnot-conjugated Z
    rotation, so their gate count (and noise dose) is fixed.
    """
    support = string.support()
    if not support:
        raise ValueError("cannot rotate about the identity")
    if len(support) == 1:
        q = support[0]
        return [rotation_gate(string.factors[q], q, angle)]
    if len(support) != 2:
        raise ValueError("only one- and two-qubit rotations are compiled")
    qa, qb = support
    gates: list[Gate] = []
    for q in (qa, qb):
        gates += [Gate(k, (q,)) for k in _TO_Z[string.factors[q]]]
    gates.append(Gate("cnot", (qa, qb)))
    gates.append(rotation_gate("Z", qb, angle))
    gates.append(Gate("cnot", (qa, qb)))
    for q in (qa, qb):
        gates += [Gate(k, (q,)) for k in _FROM_Z[string.factors[q]]]
    return gates


def circuit_to_text(circuit: list[Gate]) -> str:
    return "\n".join(g.to_text() for g in circuit)


@dataclass(frozen=True)
class NoiseModel:
    """Synthetic gate and readout noise strengths.

    readout is a per-qubit pair (p(read 1 | true 0), p(read 0 | true 1)); a
    single pair is broadcast to all qubits.
    """

    p1: float = 0.0
    p2: float = 0.0
    gamma: float = 0.0
    readout: tuple[float, float] = (0.0, 0.0)
    shots: int | None = 4096

    def __post_init__(self):
        for name in ("p1", "p2", "gamma"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if not (0.0 <= self.readout[0] <= 1.0 and 0.0 <= self.readout[1] <= 1.0):
            raise ValueError("readout probabilities must be in [0, 1]")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be >= 1")

    @classmethod
    def ideal(cls) -> "NoiseModel":
        return cls(shots=None)

    @classmethod
    def default(cls) -> "NoiseModel":
        return cls(p1=0.001, p2=0.01, readout=(0.02, 0.02), shots=4096)

    @property
    def has_gate_noise(self) -> bool:
        return self.p1 > 0 or self.p2 > 0 or self.gamma > 0

    @property
    def has_readout_noise(self) -> bool:
        return self.readout != (0.0, 0.0)


@dataclass
class DensityMatrix:
    mat: np.ndarray

    @classmethod
    def basis_state(cls, index: int, n_qubits: int) -> "DensityMatrix":
        dim = 2 ** n_qubits
        m = np.zeros((dim, dim), dtype=complex)
        m[index, index] = 1.0
        return cls(m)

    @classmethod
    def from_statevector(cls, psi: np.ndarray) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        return cls(np.outer(psi, psi.conj()))

    @property
    def n_qubits(self) -> int:
        return int(np.log2(self.mat.shape[0]))

    def validate(self, tol: float = 1e-10) -> None:
        tr = np.trace(self.mat)
        if abs(tr - 1.0) > 1e-12:
            raise ValueError(f"trace {tr} != 1")
        if np.abs(self.mat - self.mat.conj().T).max() > 1e-12:
            raise ValueError("density matrix not Hermitian")
        if np.linalg.eigvalsh(self.mat).min() < -tol:
            raise ValueError("density matrix not positive")

    def probabilities(self) -> np.ndarray:
        return np.real(np.diag(self.mat)).clip(min=0.0)

    def expectation(self, op: PauliSum | PauliString) -> float:
        return float(np.real(np.trace(op.matrix() @ self.mat)))


def _embed_1q(u: np.ndarray, qubit: int, n: int) -> np.ndarray:
    mats = [np.eye(2, dtype=complex)] * n
    mats[qubit] = u
    return reduce(np.kron, mats)


def _cnot(control: int, target: int, n: int) -> np.ndarray:
    dim = 2 ** n
    u = np.zeros((dim, dim), dtype=complex)
    for i in range(dim):
        bits = [(i >> (n - 1 - q)) & 1 for q in range(n)]
        if bits[control]:
            bits[target] ^= 1
        j = 0
        for b in bits:
            j = (j << 1) | b
        u[j, i] = 1.0
    return u


_ROT_AXES = {"X": _X, "Y": np.array([[0, -1j], [1j, 0]]), "Z": np.diag([1, -1]).astype(complex)}


def gate_unitary(g: Gate, n_qubits: int) -> np.ndarray:
    if g.kind == "rot":
        p = _ROT_AXES[g.pauli]
        u = np.cos(g.angle / 2) * np.eye(2) - 1j * np.sin(g.angle / 2) * p
        return _embed_1q(u, g.qubits[0], n_qubits)
    if g.kind == "cnot":
        return _cnot(g.qubits[0], g.qubits[1], n_qubits)
    if g.kind in _CLIFFORD:
        return _embed_1q(_CLIFFORD[g.kind], g.qubits[0], n_qubits)
    raise ValueError(f"unknown gate kind {g.kind!r}")


def _depolarize(mat: np.ndarray, qubits: tuple[int, ...], p: float, n: int) -> np.ndarray:
    """rho -> (1-p) rho + p * (I/2^k  tensor  tr_qubits rho)."""
    if p == 0.0:
        return mat
    mixed = mat
    for q in qubits:
        t = mixed.reshape([2] * (2 * n))
        # trace out qubit q, re-insert I/2
        traced = np.trace(t, axis1=q, axis2=n + q)
        traced = traced.reshape([2] * (2 * (n - 1)))
        eye = 0.5 * np.eye(2)
        expanded = np.tensordot(eye, traced, axes=0)  # [2,2, rest...]
        # move the qubit axes back into place
        order = list(range(2, 2 + (n - 1)))
        order.insert(q, 0)
        rest = list(range(2 + (n - 1), 2 * n))
        rest.insert(q, 1)
        expanded = expanded.transpose(order + rest)
        mixed = expanded.reshape(mat.shape)
    return (1.0 - p) * mat + p * mixed


_AD_K0 = lambda g: np.array([[1, 0], [0, np.sqrt(1 - g)]], dtype=complex)
_AD_K1 = lambda g: np.array([[0, np.sqrt(g)], [0, 0]], dtype=complex)


def _amplitude_damp(mat: np.ndarray, gamma: float, n: int) -> np.ndarray:
    if gamma == 0.0:
        return mat
    for q in range(n):
        k0 = _embed_1q(_AD_K0(gamma), q, n)
        k1 = _embed_1q(_AD_K1(gamma), q, n)
        mat = k0 @ mat @ k0.conj().T + k1 @ mat @ k1.conj().T
    return mat


def evolve(state: DensityMatrix, circuit: list[Gate], noise: NoiseModel | None = None) -> DensityMatrix:
    """Apply a gate sequence with per-gate depolarizing and damping noise."""
    n = state.n_qubits
    mat = state.mat
    noise = noise or NoiseModel.ideal()
    for g in circuit:
        u = gate_unitary(g, n)
        if u.shape[0] != mat.shape[0]:
            raise ValueError("gate dimension does not match state")
        mat = u @ mat @ u.conj().T
        p = noise.p2 if g.kind == "cnot" else noise.p1
        mat = _depolarize(mat, g.qubits, p, n)
        mat = _amplitude_damp(mat, noise.gamma, n)
    return DensityMatrix(mat)


def confusion_matrix(noise: NoiseModel, n_qubits: int) -> np.ndarray:
    """Exact column-stochastic readout map (Kronecker of per-qubit flips)."""
    p10, p01 = noise.readout
    single = np.array([[1 - p10, p01], [p10, 1 - p01]])
    return reduce(np.kron, [single] * n_qubits)


@dataclass(frozen=True)
class MeasurementRecord:
    estimate: float
    stderr: float
    shots_used: int
    raw_counts: dict[str, int] = field(default_factory=dict)


def _measurement_probs(state: DensityMatrix, term: PauliString) -> tuple[np.ndarray, np.ndarray]:
    """(readout-free probabilities after basis rotation, parity signs)."""
    n = state.n_qubits
    basis_gates: list[Gate] = []
    for q, f in enumerate(term.factors):
        if f != "I":
            basis_gates += [Gate(k, (q,)) for k in _TO_Z[f]]
    rotated = evolve(state, basis_gates, NoiseModel.ideal())
    probs = rotated.probabilities()
    probs = probs / probs.sum()
    signs = np.empty(2 ** n)
    support = term.support()
    for idx in range(2 ** n):
        parity = sum((idx >> (n - 1 - q)) & 1 for q in support) & 1
        signs[idx] = -1.0 if parity else 1.0
    return probs, signs


def _bits(idx: int, n: int) -> str:
    return format(idx, f"0{n}b")


def measure_pauli(
    state: DensityMatrix,
    term: PauliString,
    noise: NoiseModel,
    rng_key: tuple[int, ...] = (0,),
    mitigate: bool = True,
    calibration: np.ndarray | None = None,
) -> MeasurementRecord:
    """Estimate <P> by eigenbasis rotation, readout confusion and sampling.

    shots=None in the noise model selects the infinite-shot limit: the
    confused probability vector is used directly without sampling. With
    mitigation enabled the estimate converges to tr(rho P) as shots grow.
    """
    if term.is_identity:
        raise ValueError("measure a non-identity Pauli term")
    n = state.n_qubits
    probs, signs = _measurement_probs(state, term)
    conf = confusion_matrix(noise, n)
    read_probs = conf @ probs
    if noise.shots is None:
        observed = read_probs
        shots_used = 0
        counts = {}
    else:
        rng = derived_rng(*rng_key)
        sampled = rng.multinomial(noise.shots, read_probs)
        observed = sampled / noise.shots
        shots_used = noise.shots
        counts = {_bits(i, n): int(c) for i, c in enumerate(sampled) if c}
    if mitigate and noise.has_readout_noise:
        cal = conf if calibration is None else calibration
        observed = mitigate_counts(observed, cal)
    estimate = float(signs @ observed)
    estimate = float(np.clip(estimate, -1.0, 1.0))
    if shots_used:
        stderr = float(np.sqrt(max(0.0, 1.0 - estimate**2) / shots_used))
    else:
        stderr = 0.0
    return MeasurementRecord(estimate=estimate, stderr=stderr,
                             shots_used=shots_used, raw_counts=counts)


def mitigate_counts(raw, calibration: np.ndarray) -> np.ndarray:
    """Nonnegative normalized distribution q minimizing ||A q - raw/sum||.

    raw may be a counts mapping {bitstring: count} or a probability vector.
    """
    a = np.asarray(calibration, dtype=float)
    if np.linalg.matrix_rank(a) < a.shape[1]:
        raise np.linalg.LinAlgError("singular calibration matrix")
    if isinstance(raw, dict):
        n = a.shape[0].bit_length() - 1
        vec = np.zeros(a.shape[0])
        for bits, c in raw.items():
            vec[int(bits, 2)] = c
    else:
        vec = np.asarray(raw, dtype=float)
    total = vec.sum()
    if total <= 0:
        raise ValueError("empty counts")
    q, _ = nnls(a, vec / total)
    s = q.sum()
    if s <= 0:
        raise ValueError("mitigation produced an empty distribution")
    return q / s


def calibrate_readout(
    n_qubits: int,
    noise: NoiseModel,
    shots: int | None = None,
    rng_key: tuple[int, ...] = (0,),
) -> np.ndarray:
    """Estimate the confusion matrix by preparing every basis state.

    Column j holds the read-bitstring distribution for prepared state j.
    shots=None returns the exact matrix.
    """
    conf = confusion_matrix(noise, n_qubits)
    dim = 2 ** n_qubits
    if shots is None:
        return conf
    if shots < 1:
        raise ValueError("shots must be >= 1")
    out = np.zeros((dim, dim))
    for j in range(dim):
        rng = derived_rng(*rng_key, j)
        out[:, j] = rng.multinomial(shots, conf[:, j]) / shots
    return out


def estimate_energy(
    theta,
    h,
    circuit_builder,
    noise: NoiseModel,
    rng_key: tuple[int, ...] = (0,),
    mitigate: bool = True,
) -> MeasurementRecord:
    """Noisy estimate of <H> for the circuit at theta.

    Every non-identity Pauli term is measured independently with its own
    derived random stream (rng_key + term index); the identity weight is
    added exactly and term errors combine in quadrature.
    """
    hsum = h.sum if hasattr(h, "sum") else h
    circuit = circuit_builder(theta)
    state = DensityMatrix.basis_state(0, hsum.qubit_count)
    state = evolve(state, circuit, noise)
    total = hsum.identity_weight()
    var = 0.0
    for k, (w, term) in enumerate(hsum.non_identity_terms()):
        rec = measure_pauli(state, term, noise, rng_key=(*rng_key, k), mitigate=mitigate)
        total += w * rec.estimate
        var += (w * rec.stderr) ** 2
    return MeasurementRecord(estimate=float(total), stderr=float(np.sqrt(var)),
                             shots_used=noise.shots or 0, raw_counts={})
