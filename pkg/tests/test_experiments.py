import json

import numpy as np
import pytest

from qcavqe import experiments as ex
from qcavqe.vqe import EstimatorMode


@pytest.fixture(scope="module")
def response_runs():
    return {scale: ex.response_curve(21, ex.RunSettings(scale=scale, oracle=True)) for scale in (1.0, 0.5)}


def _p0(study):
    return {o.task.layout.driver_polarizations[0]: float(o.result.polarizations[0]) for o in study.outcomes}


def test_sweep_grid():
    g = ex.sweep(-1, 1, 21)
    assert len(g) == 21 and g[10] == 0.0 and g[0] == -1.0 and g[-1] == 1.0
    assert all(a == -b for a, b in zip(g, g[::-1]))
    with pytest.raises(ValueError):
        ex.sweep(-1, 1, 1)


def test_shots_study_grid_skips_zero():
    assert 0.0 not in ex.sweep(-1, 1, ex.DEFAULT_SHOTS_STUDY_POINTS)


def test_default_wire_rotations():
    assert ex.default_wire_rotations(7) == [0]
    assert ex.default_wire_rotations(15) == [0, 5, 10]
    assert ex.default_wire_rotations(30) == [0, 5, 10, 15, 20, 25]


@pytest.mark.parametrize("scale", [1.0, 0.5])
def test_response_curve_shape(response_runs, scale):
    p0 = _p0(response_runs[scale])
    assert abs(p0[0.0]) <= 0.02
    assert p0[1.0] >= 0.9 and p0[-1.0] <= -0.9
    for p, v in p0.items():
        assert v == pytest.approx(-p0[-p], abs=0.05)


def test_response_records_carry_oracle(response_runs):
    recs = response_runs[1.0].records
    assert len(recs) == 21
    assert all(r.oracle_energy_meV is not None for r in recs)
    assert all(r.energy_meV >= r.oracle_energy_meV - 1e-3 for r in recs)


def test_response_rejects_single_point():
    with pytest.raises(ValueError):
        ex.response_curve(1)


def test_rmse_examples():
    assert ex.rmse([0.3, -0.2], [0.3, -0.2]) == 0.0
    assert ex.rmse([1, -1], [0, 0]) == 1.0
    with pytest.raises(ValueError):
        ex.rmse([1, 2], [1])


def test_csv_format_and_round_trip(tmp_path):
    out = ex.wire_study(3, [-1.0, 0.5], ex.RunSettings())
    text = ex.records_to_csv(out.records)
    header = text.splitlines()[0].split(",")
    assert header == ex.FIELDS
    assert text.splitlines()[1].split(",")[10] == ""  # oracle column empty when disabled
    assert ex.records_from_csv(text) == out.records
    path = tmp_path / "run.json"
    ex.write_json(out.records, out.to_json_meta(), path)
    from_json = ex.read_json_records(path)
    assert ex.records_to_csv(from_json) == text


def test_six_significant_digits():
    rec = ex.ExperimentRecord("r", "e", "l", "1", "exact", 0, 0, 0, 0.123456789, -1234.56789, None, 3)
    row = ex.records_to_csv([rec]).splitlines()[1].split(",")
    assert row[8] == "0.123457" and row[9] == "-1234.57"


def test_rerun_byte_identical():
    s = ex.RunSettings(mode=EstimatorMode.SAMPLED, shots=512, seed=5)
    a = ex.records_to_csv(ex.wire_study(3, [0.2, -0.6], s).records)
    b = ex.records_to_csv(ex.wire_study(3, [0.2, -0.6], s).records)
    assert a == b


def test_workers_do_not_change_output():
    s1 = ex.RunSettings(mode=EstimatorMode.SAMPLED, shots=256, seed=1)
    s2 = ex.RunSettings(mode=EstimatorMode.SAMPLED, shots=256, seed=1, workers=2)
    pts = [-1.0, -0.5, 0.5, 1.0]
    assert ex.records_to_csv(ex.wire_study(2, pts, s1).records) == ex.records_to_csv(ex.wire_study(2, pts, s2).records)


def test_inverter_truth_table():
    out = ex.truth_table("inverter")
    rows = {tuple(r["inputs"]): r for r in out.meta["truth_table"]}
    assert rows[(1,)]["correct"] and rows[(-1,)]["correct"]
    plus = next(o for o in out.outcomes if o.task.layout.driver_polarizations == (1.0,))
    assert np.sign(plus.result.polarizations[5]) == -1
    assert np.all(np.sign(plus.result.polarizations[:5]) == 1)
    assert all(r.oracle_energy_meV is not None for r in out.records)


def test_majority2_truth_table_all_correct():
    out = ex.truth_table("majority2")
    assert out.meta["correct"] == 8 and out.meta["total"] == 8
    assert not any(r["hard_case"] for r in out.meta["truth_table"])


def test_majority6_flags_hard_cases():
    out = ex.truth_table("majority6")
    flagged = {tuple(r["inputs"]) for r in out.meta["truth_table"] if r["hard_case"]}
    assert (1, -1, 1) in flagged and (-1, 1, -1) in flagged
    assert len(flagged) == 2
    assert all(len(o.result.restart_energies) == 3 for o in out.outcomes)


def test_unknown_variant():
    with pytest.raises(ValueError):
        ex.truth_table("adder")


def test_params_study_small_deterministic():
    a = ex.params_study(3, 3)
    b = ex.params_study(3, 3)
    assert a.meta["table"] == b.meta["table"]
    assert a.meta["table"][0]["mean_iterations"] < a.meta["table"][-1]["mean_iterations"]
    assert set(a.meta["fit"]) == {"slope", "intercept", "r"}
    with pytest.raises(ValueError):
        ex.params_study(1, 3)


def test_linear_fit():
    slope, intercept, r = ex.linear_fit([1, 2, 3, 4], [3, 5, 7, 9])
    assert slope == pytest.approx(2) and intercept == pytest.approx(1) and r == pytest.approx(1)


def test_shots_study_small():
    out = ex.shots_study([256, 2048], repeats=2, n_points=4)
    table = out.meta["table"]
    assert [row["shots"] for row in table] == [256, 2048]
    assert all(len(row["rmse"]) == 2 for row in table)
    assert all(r.oracle_energy_meV is not None and r.shots in (256, 2048) for r in out.records)
    with pytest.raises(ValueError):
        ex.shots_study([], 2)


def test_json_meta_serializable():
    out = ex.truth_table("majority2")
    json.dumps(out.to_json_meta())
