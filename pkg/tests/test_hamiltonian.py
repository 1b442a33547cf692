import json
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcavqe.foundation import (
    Cell,
    CircuitLayout,
    GridPosition,
    LayoutError,
    ModelConfig,
    Role,
    inverter,
    majority2,
    majority6,
    wire,
)
from qcavqe.electrostatics import driver_delta
from qcavqe.exact import ground_state_dense
from qcavqe.hamiltonian import PauliSum, PauliTerm, UnsupportedHamiltonianError, build_hamiltonian, group_by_basis

X = np.array([[0, 1], [1, 0]], dtype=float)
Z = np.diag([1.0, -1.0])
I2 = np.eye(2)


def kron_matrix(h: PauliSum) -> np.ndarray:
    """Oracle: explicit Kronecker products, qubit 0 rightmost."""
    n = h.n_qubits
    out = np.zeros((1 << n, 1 << n))
    for t in h.terms:
        ops = [I2] * n
        for q, ax in t.factors:
            ops[q] = X if ax == "X" else Z
        out += t.coefficient * reduce(np.kron, ops[::-1])
    return out


def T(c, *factors):
    return PauliTerm(c, tuple(factors))


def test_term_factors_sorted_and_validated():
    t = T(1.0, (2, "Z"), (0, "X"))
    assert t.factors == ((0, "X"), (2, "Z"))
    assert t.x_mask == 0b001 and t.z_mask == 0b100
    with pytest.raises(ValueError):
        T(1.0, (0, "X"), (0, "Z"))
    with pytest.raises(ValueError):
        T(1.0, (0, "Y"))


def test_sum_merges_duplicates_and_drops_zeros():
    h = PauliSum([T(1.0, (0, "Z")), T(2.0, (0, "Z")), T(3.0, (1, "X")), T(-3.0, (1, "X"))], 2)
    assert h.as_dict() == {"Z0": 3.0}


def test_sum_rejects_out_of_range_qubit():
    with pytest.raises(ValueError):
        PauliSum([T(1.0, (2, "Z"))], 2)


def test_sum_order_independent():
    terms = [T(1.0, (0, "Z")), T(-2.0, (0, "Z"), (1, "Z")), T(0.5, (1, "X"))]
    assert PauliSum(terms, 2) == PauliSum(terms[::-1], 2)


def test_wire1_scale1():
    h = build_hamiltonian(wire(1, 1.0))
    assert h.as_dict() == {"X0": -50.0, "Z0": pytest.approx(294.3)}


def test_wire1_scale_half_matches_bias():
    h = build_hamiltonian(wire(1, 1.0), ModelConfig(driver_bias_scale=0.5))
    assert h.coefficient((0, "Z")) == pytest.approx(147.15)
    # equals -Delta/2 with Delta the nearest-neighbour kink energy -294.3
    assert h.coefficient((0, "Z")) == pytest.approx(-(-294.3) / 2)
    # and agrees with the closed-form driver bias to within the oracle's 0.1 meV
    assert h.coefficient((0, "Z")) == pytest.approx(-driver_delta(1.0) / 2, abs=0.1)


def test_two_devices_no_driver():
    lay = CircuitLayout((Cell("a", GridPosition(0, 0)), Cell("b", GridPosition(2, 0))))
    assert build_hamiltonian(lay).as_dict() == {"X0": -50.0, "X1": -50.0, "Z0Z1": -294.3}


def test_majority2_all_ones():
    h = build_hamiltonian(majority2(1, 1, 1))
    assert h.coefficient((0, "Z")) == pytest.approx(882.9)
    assert h.coefficient((1, "Z")) == pytest.approx(-171.4)
    assert h.coefficient((0, "Z"), (1, "Z")) == pytest.approx(-294.3)


def test_majority2_without_driver_diagonals():
    h = build_hamiltonian(majority2(1, 1, 1), ModelConfig(include_driver_diagonals=False))
    assert h.coefficient((1, "Z")) == 0.0


@pytest.mark.parametrize("n", [1, 2, 5, 12])
def test_wire_term_counts(n):
    h = build_hamiltonian(wire(n, 0.7))
    labels = [t.label() for t in h.terms]
    assert sum(lab.startswith("X") for lab in labels) == n
    assert sum(lab.count("Z") == 2 for lab in labels) == n - 1
    assert sum(lab.count("Z") == 1 for lab in labels) == 1


@pytest.mark.parametrize("lay", [wire(4, 0.0), majority6(0, 0, 0), inverter(0.0)])
def test_zero_drivers_remove_bias_terms(lay):
    h = build_hamiltonian(lay)
    assert not any(len(t.factors) == 1 and t.axes == {"Z"} for t in h.terms)


def test_no_devices_rejected():
    lay = CircuitLayout((Cell("d", GridPosition(0, 0), Role.DRIVER, 1.0),))
    with pytest.raises(LayoutError):
        build_hamiltonian(lay)


def test_driver_order_irrelevant():
    lay = majority6(1, -1, 0.5)
    reordered = CircuitLayout(tuple(reversed(lay.drivers)) + lay.devices, lay.name)
    assert build_hamiltonian(reordered) == build_hamiltonian(lay)


@pytest.mark.parametrize("lay", [wire(3, 0.4), inverter(-0.6), majority6(1, -1, 1), majority2(-1, 1, 1)])
def test_matrix_free_apply_matches_kron(lay):
    h = build_hamiltonian(lay)
    ref = kron_matrix(h)
    assert np.allclose(h.to_matrix(), ref)
    v = np.random.default_rng(1).standard_normal(1 << h.n_qubits)
    assert np.allclose(h.apply(v), ref @ v)


@pytest.mark.parametrize("make", [lambda p: wire(4, p), lambda p: majority2(p, -p, p), lambda p: inverter(p)])
def test_driver_flip_is_global_spin_flip(make):
    h_plus = build_hamiltonian(make(0.8))
    h_minus = build_hamiltonian(make(-0.8))
    n = h_plus.n_qubits
    flip = reduce(np.kron, [X] * n)
    assert np.allclose(flip @ kron_matrix(h_plus) @ flip, kron_matrix(h_minus))
    assert np.allclose(np.linalg.eigvalsh(kron_matrix(h_plus)), np.linalg.eigvalsh(kron_matrix(h_minus)))
    g_plus, g_minus = ground_state_dense(h_plus), ground_state_dense(h_minus)
    assert np.allclose(g_plus.polarizations, -g_minus.polarizations, atol=1e-9)


def test_group_by_basis_single_cell():
    z, x = group_by_basis(PauliSum([T(-50, (0, "X")), T(294.3, (0, "Z"))], 1))
    assert len(z) == 1 and len(x) == 1


def test_group_by_basis_wire3():
    h = build_hamiltonian(wire(3))
    z, x = group_by_basis(h)
    assert len(x) == 3 and len(z) == 3
    assert PauliSum(z.terms + x.terms, 3) == h


def test_group_by_basis_empty():
    z, x = group_by_basis(PauliSum([], 2))
    assert len(z) == 0 and len(x) == 0


def test_group_by_basis_rejects_mixed():
    with pytest.raises(UnsupportedHamiltonianError):
        group_by_basis(PauliSum([T(1.0, (0, "X"), (1, "Z"))], 2))


def test_json_round_trip_and_format():
    h = build_hamiltonian(majority6(1, -1, 1))
    data = json.loads(json.dumps(h.to_json()))
    assert set(data[0]) == {"coeff_meV", "paulis"}
    assert PauliSum.from_json(data, h.n_qubits) == h
    assert PauliSum.from_json(data) == h


term_st = st.builds(
    lambda c, q1, q2, ax: T(c, (q1, ax), (q2, ax)) if q1 != q2 else T(c, (q1, ax)),
    st.floats(-500, 500, allow_nan=False),
    st.integers(0, 3),
    st.integers(0, 3),
    st.sampled_from(["X", "Z"]),
)


@settings(max_examples=50, deadline=None)
@given(st.lists(term_st, max_size=8))
def test_random_sums_hermitian_and_consistent(terms):
    h = PauliSum(terms, 4)
    m = h.to_matrix()
    assert np.allclose(m, m.T)
    assert np.allclose(m, kron_matrix(h))
    assert PauliSum.from_json(h.to_json(), 4) == h
