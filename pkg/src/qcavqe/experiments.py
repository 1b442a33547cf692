"""End-to-end studies: wires, inverter, majority truth tables, response curves,
shot-budget and parameter-count scans.

Every study expands into independent VQE runs ("tasks"), executes them
serially or in a process pool, and flattens the results into one
:class:`ExperimentRecord` per (run, cell). Run seeds derive from the base
seed and the run index only, so pool size never changes the output.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .ansatz import (
    AnsatzSpec,
    inverter_ansatz,
    majority2_ansatz,
    majority6_ansatz,
    wire_ansatz,
)
from .exact import GroundStateResult, ground_state
from .foundation import CircuitLayout, ModelConfig, inverter, majority2, majority6, wire
from .hamiltonian import build_hamiltonian
from .statevector import NoiseModel
from .vqe import EstimatorConfig, EstimatorMode, OptimizerConfig, VqeResult, _child_seed, run_vqe

DEFAULT_SWEEP_POINTS = 21
DEFAULT_SHOT_LIST = (1024, 4096, 16384, 65536)
# even count: the grid then skips P_drv = 0, where the sampled landscape is flat noise
DEFAULT_SHOTS_STUDY_POINTS = 20
MAJORITY_HARD_CASES = ((1, -1, 1), (-1, 1, -1))
SINGLE_PARAMETER_WIRE_MAX = 7
WIRE_ROTATION_SPACING = 5


def default_wire_rotations(n: int) -> list[int]:
    """One rotation for short wires, then one every five cells."""
    if n <= SINGLE_PARAMETER_WIRE_MAX:
        return [0]
    return list(range(0, n, WIRE_ROTATION_SPACING))


def sweep(lo: float, hi: float, steps: int) -> list[float]:
    if steps < 2:
        raise ValueError("a sweep needs at least two points")
    # snap to 12 decimals so symmetric grids hit exact +-x pairs and 0
    return [round(float(v), 12) + 0.0 for v in np.linspace(lo, hi, steps)]


def _sig(x: float | None) -> float | None:
    return None if x is None else float(f"{x:.6g}")


# ---------------------------------------------------------------------------
# records and output

@dataclass
class ExperimentRecord:
    run_id: str
    experiment: str
    layout: str
    driver_polarizations: str
    mode: str
    shots: int
    seed: int
    cell_index: int
    polarization: float
    energy_meV: float
    oracle_energy_meV: float | None
    iterations: int


FIELDS = [f.name for f in fields(ExperimentRecord)]
_INT_FIELDS = {"shots", "seed", "cell_index", "iterations"}
_FLOAT_FIELDS = {"polarization", "energy_meV", "oracle_energy_meV"}


def _fmt_drivers(values: Sequence[float]) -> str:
    return ";".join(f"{v:.6g}" for v in values)


def records_to_csv(records: Iterable[ExperimentRecord]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in records:
        row = asdict(r)
        for k in _FLOAT_FIELDS:
            row[k] = "" if row[k] is None else f"{row[k]:.6g}"
        writer.writerow(row)
    return buf.getvalue()


def records_from_csv(text: str) -> list[ExperimentRecord]:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        kw: dict = dict(row)
        for k in _INT_FIELDS:
            kw[k] = int(kw[k])
        for k in _FLOAT_FIELDS:
            kw[k] = None if kw[k] == "" else float(kw[k])
        out.append(ExperimentRecord(**kw))
    return out


def write_csv(records: Sequence[ExperimentRecord], path: str | Path) -> None:
    Path(path).write_text(records_to_csv(records))


def write_json(records: Sequence[ExperimentRecord], meta: dict, path: str | Path) -> None:
    payload = {"meta": meta, "records": [asdict(r) for r in records]}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_json_records(path: str | Path) -> list[ExperimentRecord]:
    data = json.loads(Path(path).read_text())
    return [ExperimentRecord(**r) for r in data["records"]]


# ---------------------------------------------------------------------------
# run execution

@dataclass(frozen=True)
class RunSettings:
    mode: EstimatorMode = EstimatorMode.EXACT
    shots: int = 4096
    seed: int = 0
    scale: float = 1.0
    oracle: bool = False
    workers: int = 1
    noise: NoiseModel | None = None
    restarts: int = 1
    max_iter: int = 500
    jitter: float = 0.0

    def model(self) -> ModelConfig:
        return ModelConfig(driver_bias_scale=self.scale)


@dataclass(frozen=True)
class Task:
    run_id: str
    experiment: str
    layout: CircuitLayout
    spec: AnsatzSpec
    model: ModelConfig
    estimator: EstimatorConfig
    optimizer: OptimizerConfig
    oracle: bool


@dataclass
class RunOutcome:
    task: Task
    result: VqeResult
    oracle: GroundStateResult | None = None

    @property
    def oracle_polarizations(self) -> np.ndarray | None:
        return None if self.oracle is None else self.oracle.polarizations

    def records(self) -> list[ExperimentRecord]:
        t, r = self.task, self.result
        rows = []
        for k, p in enumerate(r.polarizations):
            rows.append(ExperimentRecord(
                run_id=t.run_id,
                experiment=t.experiment,
                layout=t.layout.name,
                driver_polarizations=_fmt_drivers(t.layout.driver_polarizations),
                mode=t.estimator.mode.value,
                shots=0 if t.estimator.mode is EstimatorMode.EXACT else t.estimator.shots,
                seed=t.estimator.seed,
                cell_index=k,
                polarization=_sig(float(p)),
                energy_meV=_sig(r.energy),
                oracle_energy_meV=_sig(self.oracle.energy) if self.oracle else None,
                iterations=r.iterations,
            ))
        return rows

    def summary(self) -> dict:
        out = {
            "run_id": self.task.run_id,
            "layout": self.task.layout.name,
            "driver_polarizations": list(self.task.layout.driver_polarizations),
            "converged": self.result.converged,
            "unphysical": self.result.unphysical,
            "result": self.result.to_dict(),
        }
        if self.oracle is not None:
            out["oracle"] = {
                "energy_meV": self.oracle.energy,
                "polarizations": [float(p) for p in self.oracle.polarizations],
                "degenerate": self.oracle.degenerate,
            }
        return out


def make_task(
    experiment: str,
    index: int,
    layout: CircuitLayout,
    spec: AnsatzSpec,
    settings: RunSettings,
    shots: int | None = None,
    seed: int | None = None,
) -> Task:
    run_seed = seed if seed is not None else _child_seed(settings.seed, index) % (2**31)
    est = EstimatorConfig(
        mode=settings.mode,
        shots=shots if shots is not None else settings.shots,
        seed=run_seed,
        noise=settings.noise,
    )
    opt = OptimizerConfig(restarts=settings.restarts, max_iter=settings.max_iter, jitter=settings.jitter)
    return Task(f"{experiment}-{index:04d}", experiment, layout, spec, settings.model(), est, opt,
                settings.oracle)


def execute(task: Task) -> RunOutcome:
    result = run_vqe(task.layout, task.model, task.spec, task.estimator, task.optimizer)
    oracle = ground_state(build_hamiltonian(task.layout, task.model)) if task.oracle else None
    return RunOutcome(task, result, oracle)


def execute_all(tasks: Sequence[Task], workers: int = 1) -> list[RunOutcome]:
    if workers <= 1 or len(tasks) <= 1:
        outcomes = [execute(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(execute, tasks))
    return sorted(outcomes, key=lambda o: o.task.run_id)


@dataclass
class StudyOutput:
    experiment: str
    outcomes: list[RunOutcome]
    meta: dict = field(default_factory=dict)

    @property
    def records(self) -> list[ExperimentRecord]:
        rows = [r for o in self.outcomes for r in o.records()]
        return sorted(rows, key=lambda r: (r.run_id, r.cell_index))

    @property
    def all_converged(self) -> bool:
        return all(o.result.converged for o in self.outcomes)

    def to_json_meta(self) -> dict:
        return {"experiment": self.experiment, **self.meta,
                "runs": [o.summary() for o in self.outcomes]}


def rmse(estimate: Sequence[float], reference: Sequence[float]) -> float:
    a, b = np.asarray(estimate, dtype=float), np.asarray(reference, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


# ---------------------------------------------------------------------------
# studies

def wire_study(n: int, p_drvs: Sequence[float], settings: RunSettings,
               ry_qubits: Sequence[int] | None = None, experiment: str = "wire") -> StudyOutput:
    spec = wire_ansatz(n, ry_qubits if ry_qubits is not None else default_wire_rotations(n))
    tasks = [make_task(experiment, i, wire(n, p), spec, settings) for i, p in enumerate(p_drvs)]
    return StudyOutput(experiment, execute_all(tasks, settings.workers),
                       {"n": n, "ansatz": spec.to_dict()})


def response_curve(n_points: int = DEFAULT_SWEEP_POINTS, settings: RunSettings | None = None,
                   n: int = 1, lo: float = -1.0, hi: float = 1.0) -> StudyOutput:
    """Polarization and energy of an n-cell wire versus driver polarization."""
    settings = settings or RunSettings()
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    return wire_study(n, sweep(lo, hi, n_points), settings, experiment="response")


def inverter_study(p_drvs: Sequence[float], settings: RunSettings) -> StudyOutput:
    spec = inverter_ansatz()
    tasks = [make_task("inverter", i, inverter(p), spec, settings) for i, p in enumerate(p_drvs)]
    return StudyOutput("inverter", execute_all(tasks, settings.workers), {"ansatz": spec.to_dict()})


def majority_value(bits: Sequence[int]) -> int:
    return 1 if sum(np.sign(bits)) > 0 else -1


def truth_table(variant: str, settings: RunSettings | None = None) -> StudyOutput:
    """All fully-polarized inputs of the inverter or a majority gate, with verdicts."""
    settings = replace(settings or RunSettings(), oracle=True)
    if variant == "inverter":
        inputs = [(1,), (-1,)]
        layouts = [inverter(p[0]) for p in inputs]
        spec = inverter_ansatz()
        expected = [-p[0] for p in inputs]
    elif variant in ("majority6", "majority2"):
        inputs = list(itertools.product((1, -1), repeat=3))
        factory = majority6 if variant == "majority6" else majority2
        layouts = [factory(*p) for p in inputs]
        spec = majority6_ansatz() if variant == "majority6" else majority2_ansatz()
        expected = [majority_value(p) for p in inputs]
        if variant == "majority6" and settings.restarts == 1:
            settings = replace(settings, restarts=3)
    else:
        raise ValueError(f"unknown truth-table variant {variant!r}")

    tasks = [make_task(variant, i, lay, spec, settings) for i, lay in enumerate(layouts)]
    outcomes = execute_all(tasks, settings.workers)
    rows = []
    for inp, want, o in zip(inputs, expected, outcomes):
        out_p = float(o.result.polarizations[-1])
        row = {
            "run_id": o.task.run_id,
            "inputs": list(inp),
            "expected_output": want,
            "output_polarization": out_p,
            "correct": bool(np.sign(out_p) == want),
            "converged": o.result.converged,
            "hard_case": variant == "majority6" and tuple(inp) in MAJORITY_HARD_CASES,
        }
        if o.oracle is not None:
            oracle_out = float(o.oracle.polarizations[-1])
            row["oracle_output_polarization"] = oracle_out
            row["agrees_with_oracle"] = bool(np.sign(oracle_out) == np.sign(out_p))
        rows.append(row)
    meta = {
        "variant": variant,
        "ansatz": spec.to_dict(),
        "truth_table": rows,
        "correct": sum(r["correct"] for r in rows),
        "total": len(rows),
    }
    return StudyOutput("truth_table", outcomes, meta)


def shots_study(
    shot_list: Sequence[int] = DEFAULT_SHOT_LIST,
    repeats: int = 10,
    settings: RunSettings | None = None,
    n_points: int = DEFAULT_SHOTS_STUDY_POINTS,
    n_cells: int = 3,
) -> StudyOutput:
    """RMSE of sampled-VQE wire polarizations against the exact ground state, per shot budget."""
    settings = settings or RunSettings(mode=EstimatorMode.SAMPLED)
    if not shot_list:
        raise ValueError("shot_list must not be empty")
    if settings.mode is EstimatorMode.EXACT:
        settings = replace(settings, mode=EstimatorMode.SAMPLED)
    grid = sweep(-1.0, 1.0, n_points)
    model = settings.model()
    oracle = {p: ground_state(build_hamiltonian(wire(n_cells, p), model)) for p in grid}
    spec = wire_ansatz(n_cells, default_wire_rotations(n_cells))

    tasks = []
    index = 0
    for shots in shot_list:
        for rep in range(repeats):
            for p in grid:
                seed = _child_seed(settings.seed, shots, rep, index) % (2**31)
                tasks.append(make_task("shots", index, wire(n_cells, p), spec, settings, shots, seed))
                index += 1
    outcomes = execute_all(tasks, settings.workers)
    for o in outcomes:
        o.oracle = oracle[o.task.layout.driver_polarizations[0]]

    table = []
    per_budget: dict[int, list[float]] = {}
    by_id = {o.task.run_id: o for o in outcomes}
    index = 0
    for shots in shot_list:
        for rep in range(repeats):
            est, ref = [], []
            for p in grid:
                o = by_id[f"shots-{index:04d}"]
                est.append(o.result.polarizations)
                ref.append(oracle[p].polarizations)
                index += 1
            per_budget.setdefault(shots, []).append(rmse(est, ref))
        vals = per_budget[shots]
        table.append({"shots": shots, "mean_rmse": float(np.mean(vals)),
                      "std_rmse": float(np.std(vals)), "rmse": vals})
    meta = {"n_cells": n_cells, "grid": grid, "repeats": repeats, "table": table}
    return StudyOutput("shots_study", outcomes, meta)


def linear_fit(x: Sequence[float], y: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares (slope, intercept, Pearson r)."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    r = float(np.corrcoef(x, y)[0, 1]) if np.std(y) > 0 else float("nan")
    return float(slope), float(intercept), r


def params_study(max_params: int = 8, repeats: int = 10, settings: RunSettings | None = None,
                 p_drv: float = 1.0) -> StudyOutput:
    """Optimizer iterations for k-cell wires with one rotation per cell, k = 1..max_params."""
    settings = settings or RunSettings(jitter=0.3)
    if max_params < 2:
        raise ValueError("max_params must be at least 2")
    if settings.jitter == 0.0:
        # without a perturbed start every repeat is the same deterministic run
        settings = replace(settings, jitter=0.3)
    tasks = []
    index = 0
    for k in range(1, max_params + 1):
        spec = wire_ansatz(k, list(range(k)))
        for rep in range(repeats):
            seed = _child_seed(settings.seed, k, rep) % (2**31)
            tasks.append(make_task("params", index, wire(k, p_drv), spec, settings, seed=seed))
            index += 1
    outcomes = execute_all(tasks, settings.workers)
    ks, its, rows = [], [], []
    for k in range(1, max_params + 1):
        vals = [o.result.iterations for o in outcomes if o.task.spec.n_params == k]
        rows.append({"n_params": k, "mean_iterations": float(np.mean(vals)),
                     "std_iterations": float(np.std(vals)), "iterations": vals})
        ks += [k] * len(vals)
        its += vals
    slope, intercept, r = linear_fit(ks, its)
    meta = {"table": rows, "fit": {"slope": slope, "intercept": intercept, "r": r},
            "repeats": repeats, "p_drv": p_drv}
    return StudyOutput("params_study", outcomes, meta)


def noise_comparison_rmse(outcomes: Sequence[RunOutcome]) -> float:
    est = [o.result.polarizations for o in outcomes]
    ref = [o.oracle.polarizations for o in outcomes if o.oracle is not None]
    if len(ref) != len(est):
        raise ValueError("every run needs an oracle result")
    return rmse(est, ref)
