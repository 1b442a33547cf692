"""Circuit Hamiltonians as sums of weighted X/Z Pauli strings.

Sign convention: basis state |0> is polarization -1 and |1> is +1, so a cell's
polarization is ``-<Z>`` and a driver of polarization P enters the couplings
as a frozen Z value of ``-P``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .foundation import CircuitLayout, LayoutError, ModelConfig, NeighborClass, QcaError, classify_pair


class UnsupportedHamiltonianError(QcaError, ValueError):
    pass


_AXES = ("X", "Z")


@dataclass(frozen=True)
class PauliTerm:
    coefficient: float
    factors: tuple[tuple[int, str], ...]

    def __post_init__(self) -> None:
        factors = tuple(sorted((int(q), str(ax)) for q, ax in self.factors))
        qubits = [q for q, _ in factors]
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"more than one factor on a qubit: {factors}")
        for q, ax in factors:
            if ax not in _AXES:
                raise ValueError(f"unsupported Pauli axis {ax!r}")
            if q < 0:
                raise ValueError(f"negative qubit index {q}")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "coefficient", float(self.coefficient))

    @property
    def x_mask(self) -> int:
        return sum(1 << q for q, ax in self.factors if ax == "X")

    @property
    def z_mask(self) -> int:
        return sum(1 << q for q, ax in self.factors if ax == "Z")

    @property
    def axes(self) -> set[str]:
        return {ax for _, ax in self.factors}

    def label(self) -> str:
        return "".join(f"{ax}{q}" for q, ax in self.factors) or "I"


def _term_order(t: PauliTerm) -> tuple:
    return (len(t.factors), tuple(ax for _, ax in t.factors), tuple(q for q, _ in t.factors))


class PauliSum:
    """Real-weighted sum of Pauli strings on ``n_qubits`` qubits.

    Terms with identical strings are merged on construction and exact zeros
    dropped, so two sums built from the same contributions in any order
    compare equal.
    """

    def __init__(self, terms: Iterable[PauliTerm], n_qubits: int):
        acc: dict[tuple, list[float]] = defaultdict(list)
        for t in terms:
            if any(q >= n_qubits for q, _ in t.factors):
                raise ValueError(f"term {t.label()} acts outside {n_qubits} qubits")
            acc[t.factors].append(t.coefficient)
        merged = [PauliTerm(math.fsum(cs), f) for f, cs in acc.items()]
        self.terms: tuple[PauliTerm, ...] = tuple(
            sorted((t for t in merged if t.coefficient != 0.0), key=_term_order)
        )
        self.n_qubits = int(n_qubits)
        self._diag: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self.terms == other.terms

    def __repr__(self) -> str:
        body = " + ".join(f"{t.coefficient:g}*{t.label()}" for t in self.terms)
        return f"PauliSum({body or '0'}; n_qubits={self.n_qubits})"

    def as_dict(self) -> dict[str, float]:
        return {t.label(): t.coefficient for t in self.terms}

    def coefficient(self, *factors: tuple[int, str]) -> float:
        key = tuple(sorted(factors))
        for t in self.terms:
            if t.factors == key:
                return t.coefficient
        return 0.0

    @property
    def max_abs_coefficient(self) -> float:
        return max((abs(t.coefficient) for t in self.terms), default=0.0)

    # -- matrix-free action ---------------------------------------------------

    def diagonal(self) -> np.ndarray:
        """Diagonal of the pure-Z part in the computational basis."""
        if self._diag is None:
            idx = np.arange(1 << self.n_qubits, dtype=np.int64)
            diag = np.zeros(1 << self.n_qubits)
            for t in self.terms:
                if t.x_mask == 0:
                    diag += t.coefficient * _parity_sign(idx, t.z_mask)
            self._diag = diag
        return self._diag

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Return H @ vec without forming the matrix (qubit 0 = least significant bit)."""
        if vec.shape[0] != 1 << self.n_qubits:
            raise ValueError(f"vector length {vec.shape[0]} does not match {self.n_qubits} qubits")
        out = self.diagonal() * vec
        idx = None
        for t in self.terms:
            xm = t.x_mask
            if xm == 0:
                continue
            if idx is None:
                idx = np.arange(vec.shape[0], dtype=np.int64)
            flipped = vec[idx ^ xm]
            if t.z_mask:
                flipped = flipped * _parity_sign(idx, t.z_mask)
            out += t.coefficient * flipped
        return out

    def to_matrix(self) -> np.ndarray:
        dim = 1 << self.n_qubits
        mat = np.zeros((dim, dim))
        eye = np.eye(dim)
        for j in range(dim):
            mat[:, j] = self.apply(eye[:, j])
        return mat

    # -- serialization --------------------------------------------------------

    def to_json(self) -> list[dict]:
        return [
            {"coeff_meV": t.coefficient, "paulis": [[q, ax] for q, ax in t.factors]}
            for t in self.terms
        ]

    @classmethod
    def from_json(cls, data: list[dict], n_qubits: int | None = None) -> PauliSum:
        terms = [
            PauliTerm(float(d["coeff_meV"]), tuple((int(q), str(ax)) for q, ax in d["paulis"]))
            for d in data
        ]
        if n_qubits is None:
            n_qubits = 1 + max((q for t in terms for q, _ in t.factors), default=-1)
        return cls(terms, n_qubits)


def _parity_sign(idx: np.ndarray, mask: int) -> np.ndarray:
    return 1.0 - 2.0 * (np.bitwise_count(idx & mask) & 1)


def build_hamiltonian(layout: CircuitLayout, config: ModelConfig | None = None) -> PauliSum:
    config = config or ModelConfig()
    devices = layout.devices
    if not devices:
        raise LayoutError(f"layout {layout.name!r} has no device cells")
    coupling = {NeighborClass.NEAREST: config.e_k, NeighborClass.DIAGONAL: config.e_k_diag}

    terms = [PauliTerm(-config.constants.gamma, ((n, "X"),)) for n in range(len(devices))]
    for m in range(len(devices)):
        for n in range(m + 1, len(devices)):
            cls = classify_pair(devices[m].position, devices[n].position)
            if cls in coupling:
                terms.append(PauliTerm(coupling[cls], ((m, "Z"), (n, "Z"))))
    for d in layout.drivers:
        z_d = -d.driver_polarization  # type: ignore[operator]
        for n, dev in enumerate(devices):
            cls = classify_pair(d.position, dev.position)
            if cls is NeighborClass.DIAGONAL and not config.include_driver_diagonals:
                continue
            if cls in coupling:
                terms.append(PauliTerm(config.driver_bias_scale * coupling[cls] * z_d, ((n, "Z"),)))
    return PauliSum(terms, len(devices))


def group_by_basis(h: PauliSum) -> tuple[PauliSum, PauliSum]:
    """Split into (Z-diagonal terms, X terms); each group is measurable in one basis."""
    z_terms, x_terms = [], []
    for t in h.terms:
        axes = t.axes
        if axes <= {"Z"}:
            z_terms.append(t)
        elif axes == {"X"}:
            x_terms.append(t)
        else:
            raise UnsupportedHamiltonianError(f"term {t.label()} mixes X and Z factors")
    return PauliSum(z_terms, h.n_qubits), PauliSum(x_terms, h.n_qubits)
