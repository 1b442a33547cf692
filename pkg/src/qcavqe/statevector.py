"""Statevector simulation: gates, exact expectations, shot sampling and noise.

Qubit 0 is the least significant bit of a basis index, and bitstrings are
rendered with qubit 0 rightmost.

Two storage backends share one interface. :class:`StateVector` keeps all
2^N amplitudes. :class:`SparseStateVector` stores only nonzero amplitudes and
suits the wire circuits, where a handful of R_y gates followed by a CNOT
ladder touch few basis states even on 30 qubits.

Noise is simulated with stochastic Pauli trajectories: after every gate a
random Pauli error is inserted with the gate's error probability, and each
measured bit is flipped with the readout error probability. Shots that draw
the same error pattern share one simulated trajectory.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .foundation import DomainError, QcaError
from .hamiltonian import PauliSum

DEFAULT_MAX_DENSE_QUBITS = 26
DEFAULT_MAX_SPARSE_SUPPORT = 1 << 22
_PRUNE = 1e-14


class SizeError(QcaError, ValueError):
    pass


# ---------------------------------------------------------------------------
# gates

@dataclass(frozen=True)
class RotY:
    qubit: int
    angle: float

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


@dataclass(frozen=True)
class CNot:
    control: int
    target: int

    def __post_init__(self) -> None:
        if self.control == self.target:
            raise ValueError("CNOT control and target must differ")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.control, self.target)


@dataclass(frozen=True)
class BasisChangeToX:
    """Hadamard: maps the X eigenbasis onto the computational basis."""

    qubit: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


@dataclass(frozen=True)
class PauliGate:
    qubit: int
    axis: str  # "X", "Y" or "Z"

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


GateOp = Union[RotY, CNot, BasisChangeToX, PauliGate]

_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)
_PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _ry(angle: float) -> np.ndarray:
    c, s = math.cos(angle / 2.0), math.sin(angle / 2.0)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _single_qubit_matrix(gate: GateOp) -> np.ndarray:
    if isinstance(gate, RotY):
        return _ry(gate.angle)
    if isinstance(gate, BasisChangeToX):
        return _H
    if isinstance(gate, PauliGate):
        return _PAULI[gate.axis]
    raise TypeError(f"not a single-qubit gate: {gate!r}")


def _check_indices(gate: GateOp, n_qubits: int) -> None:
    for q in gate.qubits:
        if not 0 <= q < n_qubits:
            raise IndexError(f"{gate!r} addresses qubit {q} outside 0..{n_qubits - 1}")


# ---------------------------------------------------------------------------
# dense backend

class StateVector:
    """Dense 2^N complex amplitudes."""

    def __init__(self, amplitudes: np.ndarray, n_qubits: int | None = None):
        amplitudes = np.asarray(amplitudes, dtype=complex)
        if n_qubits is None:
            n_qubits = int(amplitudes.shape[0]).bit_length() - 1
        if amplitudes.shape != (1 << n_qubits,):
            raise ValueError(f"expected {1 << n_qubits} amplitudes, got {amplitudes.shape}")
        self.amplitudes = amplitudes
        self.n_qubits = n_qubits

    @classmethod
    def zero(cls, n_qubits: int, max_qubits: int = DEFAULT_MAX_DENSE_QUBITS) -> StateVector:
        if n_qubits > max_qubits:
            raise SizeError(
                f"{n_qubits} qubits exceeds the dense limit of {max_qubits}; "
                "raise max_qubits explicitly or use the sparse backend"
            )
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(amps, n_qubits)

    @classmethod
    def basis(cls, index: int, n_qubits: int) -> StateVector:
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(amps, n_qubits)

    def copy(self) -> StateVector:
        return StateVector(self.amplitudes.copy(), self.n_qubits)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def to_dense(self) -> np.ndarray:
        return self.amplitudes

    def apply_(self, gate: GateOp) -> StateVector:
        """Apply ``gate`` in place and return self."""
        _check_indices(gate, self.n_qubits)
        n = self.n_qubits
        if isinstance(gate, CNot):
            v = self.amplitudes.reshape([2] * n)
            ac, at = n - 1 - gate.control, n - 1 - gate.target
            sel = [slice(None)] * n
            sel[ac] = 1
            sub = v[tuple(sel)]
            sub_at = at if at < ac else at - 1
            v[tuple(sel)] = np.flip(sub, axis=sub_at).copy()
            return self
        u = _single_qubit_matrix(gate)
        q = gate.qubits[0]
        v = self.amplitudes.reshape(1 << (n - 1 - q), 2, 1 << q)
        a0, a1 = v[:, 0, :].copy(), v[:, 1, :].copy()
        v[:, 0, :] = u[0, 0] * a0 + u[0, 1] * a1
        v[:, 1, :] = u[1, 0] * a0 + u[1, 1] * a1
        return self

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        """Basis indices and their probabilities (all 2^N entries)."""
        probs = np.abs(self.amplitudes) ** 2
        return np.arange(probs.shape[0], dtype=np.int64), probs / probs.sum()

    def expectation(self, h: PauliSum) -> float:
        if h.n_qubits != self.n_qubits:
            raise ValueError(f"Hamiltonian on {h.n_qubits} qubits, state on {self.n_qubits}")
        return float(np.vdot(self.amplitudes, h.apply(self.amplitudes)).real)

    def z_expectations(self) -> np.ndarray:
        """<Z_k> for every qubit."""
        idx, probs = self.support()
        return _z_from_distribution(idx, probs, self.n_qubits)


# ---------------------------------------------------------------------------
# sparse backend

class SparseStateVector:
    """Nonzero amplitudes only, keyed by sorted basis index."""

    def __init__(
        self,
        indices: np.ndarray,
        amplitudes: np.ndarray,
        n_qubits: int,
        max_support: int = DEFAULT_MAX_SPARSE_SUPPORT,
    ):
        self.indices = np.asarray(indices, dtype=np.int64)
        self.amps = np.asarray(amplitudes, dtype=complex)
        self.n_qubits = n_qubits
        self.max_support = max_support

    @classmethod
    def zero(cls, n_qubits: int, max_support: int = DEFAULT_MAX_SPARSE_SUPPORT) -> SparseStateVector:
        if n_qubits > 62:
            raise SizeError("sparse backend supports at most 62 qubits")
        return cls(np.array([0]), np.array([1.0 + 0j]), n_qubits, max_support)

    def copy(self) -> SparseStateVector:
        return SparseStateVector(self.indices.copy(), self.amps.copy(), self.n_qubits, self.max_support)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def to_dense(self) -> np.ndarray:
        if self.n_qubits > DEFAULT_MAX_DENSE_QUBITS:
            raise SizeError("state too large to densify")
        out = np.zeros(1 << self.n_qubits, dtype=complex)
        out[self.indices] = self.amps
        return out

    def _merge(self, idx: np.ndarray, amps: np.ndarray) -> None:
        uniq, inv = np.unique(idx, return_inverse=True)
        acc = np.zeros(uniq.shape[0], dtype=complex)
        np.add.at(acc, inv, amps)
        keep = np.abs(acc) > _PRUNE
        self.indices, self.amps = uniq[keep], acc[keep]
        if self.indices.shape[0] > self.max_support:
            raise SizeError(
                f"sparse support grew to {self.indices.shape[0]} entries "
                f"(limit {self.max_support}); use the dense backend"
            )

    def apply_(self, gate: GateOp) -> SparseStateVector:
        _check_indices(gate, self.n_qubits)
        idx = self.indices
        if isinstance(gate, CNot):
            flip = ((idx >> gate.control) & 1) << gate.target
            new = idx ^ flip
            order = np.argsort(new, kind="stable")
            self.indices, self.amps = new[order], self.amps[order]
            return self
        q = gate.qubits[0]
        m = np.int64(1 << q)
        bit = (idx >> q) & 1
        if isinstance(gate, PauliGate):
            if gate.axis == "Z":
                self.amps = self.amps * (1 - 2 * bit)
                return self
            phase = 1.0 if gate.axis == "X" else 1j * (1 - 2 * bit)
            new = idx ^ m
            order = np.argsort(new, kind="stable")
            self.indices, self.amps = new[order], (self.amps * phase)[order]
            return self
        u = _single_qubit_matrix(gate)
        base = idx & ~m
        # output amplitude on bit value b is u[b, input bit] * amp
        a_to0 = u[0, bit] * self.amps
        a_to1 = u[1, bit] * self.amps
        self._merge(np.concatenate([base, base | m]), np.concatenate([a_to0, a_to1]))
        return self

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        probs = np.abs(self.amps) ** 2
        return self.indices, probs / probs.sum()

    def expectation(self, h: PauliSum) -> float:
        if h.n_qubits != self.n_qubits:
            raise ValueError(f"Hamiltonian on {h.n_qubits} qubits, state on {self.n_qubits}")
        idx, amps = self.indices, self.amps
        probs = np.abs(amps) ** 2
        total = 0.0
        for t in h.terms:
            sign = 1.0 - 2.0 * (np.bitwise_count(idx & t.z_mask) & 1)
            if t.x_mask == 0:
                total += t.coefficient * float(np.sum(probs * sign))
                continue
            partner = idx ^ t.x_mask
            pos = np.searchsorted(idx, partner)
            pos = np.minimum(pos, idx.shape[0] - 1)
            hit = idx[pos] == partner
            # <psi|P|psi> = sum_i conj(psi[i ^ x]) * sign(i) * psi[i]
            val = np.sum(np.conj(amps[pos[hit]]) * sign[hit] * amps[hit])
            total += t.coefficient * float(val.real)
        return total

    def z_expectations(self) -> np.ndarray:
        idx, probs = self.support()
        return _z_from_distribution(idx, probs, self.n_qubits)


AnyState = Union[StateVector, SparseStateVector]


def _z_from_distribution(idx: np.ndarray, probs: np.ndarray, n_qubits: int) -> np.ndarray:
    out = np.empty(n_qubits)
    for k in range(n_qubits):
        bit = (idx >> k) & 1
        out[k] = float(np.sum(probs * (1 - 2 * bit)))
    return out


def zero_state(
    n_qubits: int,
    backend: str = "auto",
    max_dense_qubits: int = DEFAULT_MAX_DENSE_QUBITS,
) -> AnyState:
    """|0...0> on the requested backend; ``auto`` goes sparse beyond the dense cap."""
    if backend == "auto":
        backend = "dense" if n_qubits <= max_dense_qubits else "sparse"
    if backend == "dense":
        return StateVector.zero(n_qubits, max_qubits=max_dense_qubits)
    if backend == "sparse":
        return SparseStateVector.zero(n_qubits)
    raise ValueError(f"unknown backend {backend!r}")


def apply(state: AnyState, gate: GateOp) -> AnyState:
    """Functional gate application; the input state is left untouched."""
    return state.copy().apply_(gate)


def run_circuit(gates: Iterable[GateOp], n_qubits: int, backend: str = "auto",
                max_dense_qubits: int = DEFAULT_MAX_DENSE_QUBITS) -> AnyState:
    state = zero_state(n_qubits, backend, max_dense_qubits)
    for g in gates:
        state.apply_(g)
    return state


def expectation(state: AnyState, h: PauliSum) -> float:
    return state.expectation(h)


# ---------------------------------------------------------------------------
# sampling

class MeasurementBasis(str, enum.Enum):
    COMPUTATIONAL = "computational"
    ALL_X = "all_x"


@dataclass(frozen=True)
class NoiseModel:
    p1: float = 0.001
    p2: float = 0.01
    p_readout: float = 0.02
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("p1", "p2", "p_readout"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {v}")

    @property
    def is_noiseless(self) -> bool:
        return self.p1 == 0.0 and self.p2 == 0.0 and self.p_readout == 0.0


@dataclass
class ShotCounts:
    """Measured outcomes as (basis index, count) pairs, sorted by index."""

    n_qubits: int
    values: np.ndarray
    counts: np.ndarray
    shots: int = field(init=False)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.int64)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        self.shots = int(self.counts.sum())

    @classmethod
    def from_outcomes(cls, outcomes: np.ndarray, n_qubits: int) -> ShotCounts:
        values, counts = np.unique(outcomes, return_counts=True)
        return cls(n_qubits, values, counts)

    def bitstring(self, value: int) -> str:
        return format(int(value), f"0{self.n_qubits}b")

    def to_dict(self) -> dict[str, int]:
        return {self.bitstring(v): int(c) for v, c in zip(self.values, self.counts)}

    def __getitem__(self, bits: str) -> int:
        hit = np.nonzero(self.values == int(bits, 2))[0]
        return int(self.counts[hit[0]]) if hit.size else 0

    def parity_mean(self, mask: int) -> float:
        """Sample mean of (-1)^(popcount(outcome & mask))."""
        sign = 1.0 - 2.0 * (np.bitwise_count(self.values & mask) & 1)
        return float(np.sum(sign * self.counts)) / self.shots

    def polarizations(self) -> np.ndarray:
        """P_k = (#bit_k=1 - #bit_k=0) / shots."""
        out = np.empty(self.n_qubits)
        for k in range(self.n_qubits):
            ones = int(np.sum(self.counts[((self.values >> k) & 1) == 1]))
            out[k] = (2 * ones - self.shots) / self.shots
        return out


def _streams(seed: int, noise_seed: int = 0) -> tuple[np.random.Generator, ...]:
    # the outcome stream ignores noise_seed so zero-strength noise matches noiseless sampling
    outcome = np.random.SeedSequence(seed).spawn(1)[0]
    gate_noise, readout = np.random.SeedSequence([seed, noise_seed]).spawn(2)
    return (np.random.default_rng(outcome), np.random.default_rng(gate_noise),
            np.random.default_rng(readout))


def _draw(rng: np.random.Generator, idx: np.ndarray, probs: np.ndarray, size: int) -> np.ndarray:
    if idx.shape[0] == 1:
        return np.full(size, idx[0], dtype=np.int64)
    return idx[rng.choice(idx.shape[0], size=size, p=probs)]


def _sample_x_sparse(state: SparseStateVector, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Joint all-qubit X-basis outcomes of a sparse state.

    Qubits are rotated and measured one at a time, collapsing each shot
    branch as it goes. Every branch shares the same (shrinking) support, so
    the branches are rows of one amplitude matrix and the support never
    spreads the way a full Hadamard layer would spread it.
    """
    idx = state.indices
    amps = (state.amps / np.linalg.norm(state.amps))[None, :]
    counts = np.array([shots], dtype=np.int64)
    values = np.zeros(1, dtype=np.int64)
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    for q in range(state.n_qubits):
        m = np.int64(1 << q)
        bit = (idx >> q) & 1
        reduced, inv = np.unique(idx & ~m, return_inverse=True)
        inv = inv.reshape(-1)
        fold = np.zeros((idx.shape[0], reduced.shape[0]))
        fold[np.arange(idx.shape[0]), inv] = inv_sqrt2
        plus = amps @ fold
        minus = (amps * (1 - 2 * bit)) @ fold
        w0 = np.sum(np.abs(plus) ** 2, axis=1)
        w1 = np.sum(np.abs(minus) ** 2, axis=1)
        k0 = rng.binomial(counts, np.clip(w0 / (w0 + w1), 0.0, 1.0))
        k1 = counts - k0
        keep0, keep1 = k0 > 0, k1 > 0
        amps = np.concatenate([plus[keep0] / np.sqrt(w0[keep0])[:, None],
                               minus[keep1] / np.sqrt(w1[keep1])[:, None]])
        counts = np.concatenate([k0[keep0], k1[keep1]])
        values = np.concatenate([values[keep0], values[keep1] | m])
        idx = reduced
    return np.repeat(values, counts)


def _measure(
    state: AnyState,
    basis: MeasurementBasis,
    shots: int,
    rng: np.random.Generator,
    layer_codes: np.ndarray | None = None,
) -> np.ndarray:
    """Draw ``shots`` outcomes; ``layer_codes`` are Pauli errors after each basis-change gate."""
    if basis is MeasurementBasis.COMPUTATIONAL:
        idx, probs = state.support()
        return _draw(rng, idx, probs, shots)
    n = state.n_qubits
    if isinstance(state, StateVector):
        state = state.copy()
        for q in range(n):
            state.apply_(BasisChangeToX(q))
            if layer_codes is not None and layer_codes[q]:
                state.apply_(PauliGate(q, _AXIS[int(layer_codes[q])]))
        idx, probs = state.support()
        return _draw(rng, idx, probs, shots)
    outcomes = _sample_x_sparse(state, shots, rng)
    if layer_codes is not None:
        # X or Y right before a Z measurement flips the bit, Z leaves it alone
        flips = sum(1 << q for q in range(n) if layer_codes[q] in (1, 2))
        outcomes = outcomes ^ flips
    return outcomes


def sample_circuit(
    gates: Sequence[GateOp],
    n_qubits: int,
    shots: int,
    basis: MeasurementBasis | str = MeasurementBasis.COMPUTATIONAL,
    seed: int = 0,
    noise: NoiseModel | None = None,
    backend: str = "auto",
    initial: AnyState | None = None,
) -> ShotCounts:
    """Prepare ``gates`` from |0...0> (or ``initial``) and measure ``shots`` times.

    ``ALL_X`` measures every qubit after a Hadamard; the Hadamards count as
    single-qubit gates for the noise model.
    """
    if shots < 1:
        raise DomainError("shots must be at least 1")
    basis = MeasurementBasis(basis)
    gates = list(gates)
    start = initial if initial is not None else zero_state(n_qubits, backend)
    outcome_rng, gate_rng, readout_rng = _streams(seed, noise.seed if noise else 0)

    p1 = noise.p1 if noise else 0.0
    p2 = noise.p2 if noise else 0.0
    n_layer = n_qubits if basis is MeasurementBasis.ALL_X else 0
    if (p1 == 0.0 and p2 == 0.0) or not (gates or n_layer):
        state = start.copy()
        for g in gates:
            state.apply_(g)
        outcomes = _measure(state, basis, shots, outcome_rng)
    else:
        outcomes = _sample_trajectories(gates, n_layer, start, basis, shots, p1, p2,
                                        outcome_rng, gate_rng)

    if noise is not None and noise.p_readout > 0.0:
        flips = readout_rng.random((shots, n_qubits)) < noise.p_readout
        weights = np.int64(1) << np.arange(n_qubits, dtype=np.int64)
        outcomes = outcomes ^ (flips.astype(np.int64) @ weights)
    return ShotCounts.from_outcomes(outcomes, n_qubits)


def _sample_trajectories(
    gates: list[GateOp],
    n_layer: int,
    start: AnyState,
    basis: MeasurementBasis,
    shots: int,
    p1: float,
    p2: float,
    outcome_rng: np.random.Generator,
    gate_rng: np.random.Generator,
) -> np.ndarray:
    n_gates = len(gates)
    width = n_gates + n_layer
    two_q = np.array([isinstance(g, CNot) for g in gates] + [False] * n_layer)
    hit = gate_rng.random((shots, width)) < np.where(two_q, p2, p1)
    # codes 1..3 pick X/Y/Z on one qubit; 1..15 pick a non-identity pair (a, b) = divmod(code, 4)
    codes = np.where(two_q, gate_rng.integers(1, 16, (shots, width)),
                     gate_rng.integers(1, 4, (shots, width)))
    codes = np.where(hit, codes, 0).astype(np.int8)
    patterns, inverse, counts = np.unique(codes, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)

    # noiseless prefix states, so each trajectory only replays from its first error
    prefix = [start.copy()]
    for g in gates:
        prefix.append(prefix[-1].copy().apply_(g))

    outcomes = np.empty(shots, dtype=np.int64)
    for row, (pattern, count) in enumerate(zip(patterns, counts)):
        errs = np.nonzero(pattern[:n_gates])[0]
        if errs.size == 0:
            state = prefix[-1]
        else:
            first = int(errs[0])
            state = prefix[first + 1].copy()
            for i in range(first, n_gates):
                if i > first:
                    state.apply_(gates[i])
                if pattern[i]:
                    for pg in _error_gates(gates[i], int(pattern[i])):
                        state.apply_(pg)
        layer = pattern[n_gates:] if n_layer else None
        outcomes[inverse == row] = _measure(state, basis, int(count), outcome_rng, layer)
    return outcomes


_AXIS = {1: "X", 2: "Y", 3: "Z"}


def _error_gates(gate: GateOp, code: int) -> list[PauliGate]:
    if isinstance(gate, CNot):
        a, b = divmod(code, 4)
        out = []
        if a:
            out.append(PauliGate(gate.control, _AXIS[a]))
        if b:
            out.append(PauliGate(gate.target, _AXIS[b]))
        return out
    return [PauliGate(gate.qubits[0], _AXIS[code])]


def sample(
    state: AnyState,
    shots: int,
    basis: MeasurementBasis | str = MeasurementBasis.COMPUTATIONAL,
    seed: int = 0,
    noise: NoiseModel | None = None,
) -> ShotCounts:
    """Measure a prepared state; noise acts on the basis change and the readout."""
    return sample_circuit([], state.n_qubits, shots, basis, seed, noise, initial=state)
