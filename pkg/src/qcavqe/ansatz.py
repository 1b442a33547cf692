"""Parametric circuit templates for the QCA circuits and parameter binding."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .statevector import CNot, GateOp, RotY


@dataclass(frozen=True)
class RotSlot:
    qubit: int
    param_index: int


AnsatzGate = Union[RotSlot, CNot]


@dataclass(frozen=True)
class AnsatzSpec:
    n_qubits: int
    gates: tuple[AnsatzGate, ...]
    name: str = "custom"

    def __post_init__(self) -> None:
        object.__setattr__(self, "gates", tuple(self.gates))
        used = sorted({g.param_index for g in self.gates if isinstance(g, RotSlot)})
        if used != list(range(len(used))):
            raise ValueError(f"parameter indices must be 0..k-1 without gaps, got {used}")
        for g in self.gates:
            qubits = (g.qubit,) if isinstance(g, RotSlot) else (g.control, g.target)
            if any(not 0 <= q < self.n_qubits for q in qubits):
                raise ValueError(f"{g!r} outside {self.n_qubits} qubits")
            if isinstance(g, CNot) and g.target != g.control + 1:
                raise ValueError(f"entanglers must couple qubit k to k+1, got {g!r}")

    @property
    def n_params(self) -> int:
        return len({g.param_index for g in self.gates if isinstance(g, RotSlot)})

    @property
    def n_cnots(self) -> int:
        return sum(isinstance(g, CNot) for g in self.gates)

    def to_dict(self) -> dict:
        gates = []
        for g in self.gates:
            if isinstance(g, RotSlot):
                gates.append({"ry": g.qubit, "param": g.param_index})
            else:
                gates.append({"cx": [g.control, g.target]})
        return {"name": self.name, "n_qubits": self.n_qubits, "n_params": self.n_params, "gates": gates}

    @classmethod
    def from_dict(cls, data: dict) -> AnsatzSpec:
        gates: list[AnsatzGate] = []
        for g in data["gates"]:
            if "ry" in g:
                gates.append(RotSlot(int(g["ry"]), int(g["param"])))
            else:
                c, t = g["cx"]
                gates.append(CNot(int(c), int(t)))
        return cls(int(data["n_qubits"]), tuple(gates), data.get("name", "custom"))


def wire_ansatz(n: int, ry_qubits: Sequence[int] = (0,)) -> AnsatzSpec:
    """R_y on qubit 0 followed by a CNOT ladder down the wire.

    Each extra rotation in ``ry_qubits`` sits right after the CNOT that first
    entangles its qubit, which lets it introduce a local kink downstream.
    """
    ry = list(ry_qubits)
    if not ry:
        raise ValueError("ry_qubits must not be empty")
    if ry != sorted(set(ry)):
        raise ValueError(f"ry_qubits must be sorted and unique, got {ry}")
    if ry[0] != 0:
        raise ValueError("ry_qubits must include qubit 0")
    if ry[-1] >= n:
        raise ValueError(f"ry qubit {ry[-1]} outside a {n}-cell wire")
    slot = {q: j for j, q in enumerate(ry)}
    gates: list[AnsatzGate] = [RotSlot(0, 0)]
    for k in range(n - 1):
        gates.append(CNot(k, k + 1))
        if k + 1 in slot:
            gates.append(RotSlot(k + 1, slot[k + 1]))
    return AnsatzSpec(n, tuple(gates), f"wire{n}-ry{'-'.join(map(str, ry))}")


def evenly_spaced_ry(n: int, count: int) -> list[int]:
    """``count`` rotation sites spread over an n-cell wire, starting at 0."""
    count = max(1, min(count, n))
    step = n // count
    return [j * step for j in range(count)]


def inverter_ansatz() -> AnsatzSpec:
    gates: list[AnsatzGate] = [RotSlot(0, 0)]
    gates += [CNot(k, k + 1) for k in range(5)]
    gates.append(RotSlot(5, 1))
    return AnsatzSpec(6, tuple(gates), "inverter")


def majority6_ansatz() -> AnsatzSpec:
    gates: list[AnsatzGate] = [RotSlot(k, k) for k in range(6)]
    gates += [CNot(k, k + 1) for k in range(5)]
    return AnsatzSpec(6, tuple(gates), "majority6")


def majority2_ansatz() -> AnsatzSpec:
    return AnsatzSpec(2, (RotSlot(0, 0), CNot(0, 1), RotSlot(1, 1)), "majority2")


def bind(spec: AnsatzSpec, theta: Sequence[float]) -> list[GateOp]:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != spec.n_params:
        raise ValueError(f"{spec.name} takes {spec.n_params} parameters, got {theta.shape[0]}")
    return [RotY(g.qubit, float(theta[g.param_index])) if isinstance(g, RotSlot) else g
            for g in spec.gates]
