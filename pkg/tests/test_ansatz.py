import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcavqe.ansatz import (
    AnsatzSpec,
    RotSlot,
    bind,
    evenly_spaced_ry,
    inverter_ansatz,
    majority2_ansatz,
    majority6_ansatz,
    wire_ansatz,
)
from qcavqe.statevector import CNot, RotY, run_circuit

angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)


def test_wire3_single_param():
    spec = wire_ansatz(3, [0])
    assert spec.gates == (RotSlot(0, 0), CNot(0, 1), CNot(1, 2))
    assert spec.n_params == 1


def test_wire1():
    assert wire_ansatz(1).gates == (RotSlot(0, 0),)


def test_wire15_three_rotations():
    spec = wire_ansatz(15, [0, 5, 10])
    assert spec.n_qubits == 15 and spec.n_params == 3 and spec.n_cnots == 14
    gates = list(spec.gates)
    assert gates[gates.index(CNot(4, 5)) + 1] == RotSlot(5, 1)
    assert gates[gates.index(CNot(9, 10)) + 1] == RotSlot(10, 2)


@pytest.mark.parametrize("ry", [[], [1, 2], [0, 3, 2], [0, 0], [0, 9]])
def test_wire_ansatz_rejects(ry):
    with pytest.raises(ValueError):
        wire_ansatz(5, ry)


def test_spec_validation():
    with pytest.raises(ValueError):
        AnsatzSpec(2, (RotSlot(0, 1),))
    with pytest.raises(ValueError):
        AnsatzSpec(3, (RotSlot(0, 0), CNot(0, 2)))
    with pytest.raises(ValueError):
        AnsatzSpec(2, (RotSlot(2, 0),))


def test_inverter_ansatz():
    spec = inverter_ansatz()
    assert spec.n_params == 2 and spec.n_qubits == 6
    assert spec.gates == (RotSlot(0, 0), *(CNot(k, k + 1) for k in range(5)), RotSlot(5, 1))


def test_inverter_zero_angles_prepare_vacuum():
    s = run_circuit(bind(inverter_ansatz(), [0, 0]), 6)
    assert abs(s.amplitudes[0]) == pytest.approx(1.0)


def test_inverter_pi_pi():
    s = run_circuit(bind(inverter_ansatz(), [math.pi, math.pi]), 6)
    # q0..q4 copy the 1, the last rotation takes q5 back to 0
    assert abs(s.amplitudes[0b011111]) == pytest.approx(1.0)
    assert s.to_dense().real.round(12).tolist().count(0.0) == 63


def test_majority_specs():
    m6 = majority6_ansatz()
    assert len(m6.gates) == 11 and m6.n_params == 6 and m6.n_cnots == 5
    assert all(isinstance(g, RotSlot) for g in m6.gates[:6])
    m2 = majority2_ansatz()
    assert m2.n_params == 2 and m2.n_cnots == 1
    s = run_circuit(bind(m6, np.zeros(6)), 6)
    assert abs(s.amplitudes[0]) == pytest.approx(1.0)


def test_bind():
    spec = wire_ansatz(3)
    gates = bind(spec, [math.pi / 2])
    assert gates == [RotY(0, math.pi / 2), CNot(0, 1), CNot(1, 2)]
    assert bind(spec, [math.pi / 2]) == gates
    with pytest.raises(ValueError):
        bind(inverter_ansatz(), [0.1])


def test_spec_json_round_trip():
    for spec in (wire_ansatz(15, [0, 5, 10]), inverter_ansatz(), majority6_ansatz(), majority2_ansatz()):
        assert AnsatzSpec.from_dict(spec.to_dict()) == spec


def test_evenly_spaced():
    assert evenly_spaced_ry(15, 3) == [0, 5, 10]
    assert evenly_spaced_ry(4, 10) == [0, 1, 2, 3]


@given(angles)
def test_single_cell_stays_in_xz_plane(theta):
    s = run_circuit(bind(wire_ansatz(1), [theta]), 1)
    a0, a1 = s.amplitudes
    y = 2 * (np.conj(a0) * a1).imag
    assert abs(y) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.data())
def test_wire_amplitudes_real(n, data):
    ry = sorted({0} | set(data.draw(st.lists(st.integers(0, n - 1), max_size=3))))
    spec = wire_ansatz(n, ry)
    theta = [data.draw(angles) for _ in range(spec.n_params)]
    s = run_circuit(bind(spec, theta), n)
    assert np.max(np.abs(s.amplitudes.imag)) < 1e-12


@given(st.integers(1, 8), angles)
def test_single_param_wire_is_ghz_copy(n, theta):
    s = run_circuit(bind(wire_ansatz(n), [theta]), n)
    probs = np.abs(s.amplitudes) ** 2
    assert probs[0] == pytest.approx(math.cos(theta / 2) ** 2, abs=1e-12)
    assert probs[-1] == pytest.approx(math.sin(theta / 2) ** 2, abs=1e-12)
    assert probs[0] + probs[-1] == pytest.approx(1.0, abs=1e-12)
