"""Variational ground-state search and polarization readout."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .ansatz import AnsatzSpec, bind
from .foundation import CircuitLayout, DomainError, ModelConfig
from .hamiltonian import PauliSum, build_hamiltonian, group_by_basis
from .statevector import (
    MeasurementBasis,
    NoiseModel,
    run_circuit,
    sample,
    sample_circuit,
)

log = logging.getLogger(__name__)


class EstimatorMode(str, enum.Enum):
    EXACT = "exact"
    SAMPLED = "sampled"
    NOISY = "noisy"


@dataclass(frozen=True)
class EstimatorConfig:
    mode: EstimatorMode = EstimatorMode.EXACT
    shots: int = 4096
    seed: int = 0
    noise: NoiseModel | None = None
    backend: str = "auto"

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", EstimatorMode(self.mode))
        if self.mode is not EstimatorMode.EXACT and self.shots < 1:
            raise DomainError("sampling needs at least one shot")
        if self.mode is EstimatorMode.NOISY and self.noise is None:
            object.__setattr__(self, "noise", NoiseModel(seed=self.seed))

    @property
    def effective_noise(self) -> NoiseModel | None:
        return self.noise if self.mode is EstimatorMode.NOISY else None


@dataclass(frozen=True)
class OptimizerConfig:
    """Derivative-free optimizer settings.

    ``restarts`` > 1 adds seeded random starts in [0, 2pi) after the first;
    ``jitter`` perturbs the first start uniformly by +-jitter radians.
    """

    method: str = "cobyla"
    initial_theta: tuple[float, ...] | None = None
    f_tol: float = 1e-3
    max_iter: int = 500
    step: float = 0.5
    x_tol: float = 1e-4
    restarts: int = 1
    jitter: float = 0.0

    def __post_init__(self) -> None:
        if self.method not in ("cobyla", "nelder-mead"):
            raise ValueError(f"unknown optimizer {self.method!r}")
        if not self.f_tol > 0:
            raise ValueError("f_tol must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.initial_theta is not None:
            object.__setattr__(self, "initial_theta", tuple(float(t) for t in self.initial_theta))


@dataclass
class VqeResult:
    theta_star: np.ndarray
    energy: float
    stderr: float
    energy_trace: list[tuple[int, float]]
    iterations: int
    polarizations: np.ndarray
    shots_used: int
    converged: bool
    restart_energies: list[float] = field(default_factory=list)
    unphysical: bool = False
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "theta_star": [float(t) for t in self.theta_star],
            "energy_meV": self.energy,
            "stderr_meV": self.stderr,
            "energy_trace": [[i, e] for i, e in self.energy_trace],
            "iterations": self.iterations,
            "polarizations": [float(p) for p in self.polarizations],
            "shots_used": self.shots_used,
            "converged": self.converged,
            "restart_energies": list(self.restart_energies),
            "unphysical": self.unphysical,
            "config": self.config,
        }


def _child_seed(*key: int) -> int:
    return int(np.random.SeedSequence([k & 0xFFFFFFFF for k in key]).generate_state(1)[0])


def estimate_energy(
    spec: AnsatzSpec,
    theta: Sequence[float],
    h: PauliSum,
    cfg: EstimatorConfig,
    eval_index: int = 0,
) -> tuple[float, float]:
    """Energy estimate (meV) and its standard error at ``theta``.

    Sampled modes measure the Z-diagonal terms in the computational basis and
    the X terms after a Hadamard layer, ``cfg.shots`` shots each. Each
    ``eval_index`` draws fresh, reproducible randomness.
    """
    if h.n_qubits != spec.n_qubits:
        raise ValueError(f"Hamiltonian has {h.n_qubits} qubits, ansatz {spec.n_qubits}")
    gates = bind(spec, theta)
    if cfg.mode is EstimatorMode.EXACT:
        return run_circuit(gates, spec.n_qubits, cfg.backend).expectation(h), 0.0

    z_group, x_group = group_by_basis(h)
    noise = cfg.effective_noise
    prepared = None if noise is not None else run_circuit(gates, spec.n_qubits, cfg.backend)
    energy = 0.0
    var = 0.0
    for basis_id, (group, basis) in enumerate(
        ((z_group, MeasurementBasis.COMPUTATIONAL), (x_group, MeasurementBasis.ALL_X))
    ):
        if not group.terms:
            continue
        seed = _child_seed(cfg.seed, eval_index, basis_id)
        if prepared is not None:
            counts = sample(prepared, cfg.shots, basis, seed)
        else:
            counts = sample_circuit(gates, spec.n_qubits, cfg.shots, basis, seed, noise, cfg.backend)
        for t in group.terms:
            # X factors read as Z after the Hadamard layer, so one parity mask serves both
            m = counts.parity_mean(t.z_mask | t.x_mask)
            energy += t.coefficient * m
            var += t.coefficient**2 * max(0.0, 1.0 - m * m) / cfg.shots
    return energy, math.sqrt(var)


def read_polarizations(
    spec: AnsatzSpec,
    theta_star: Sequence[float],
    est_cfg: EstimatorConfig,
    eval_index: int = -1,
) -> np.ndarray:
    """Per-cell polarizations of the optimized circuit (P = -<Z>)."""
    gates = bind(spec, theta_star)
    if est_cfg.mode is EstimatorMode.EXACT:
        return -run_circuit(gates, spec.n_qubits, est_cfg.backend).z_expectations()
    seed = _child_seed(est_cfg.seed, eval_index, 7)
    counts = sample_circuit(gates, spec.n_qubits, est_cfg.shots, MeasurementBasis.COMPUTATIONAL,
                            seed, est_cfg.effective_noise, est_cfg.backend)
    return counts.polarizations()


class _Objective:
    """Counts evaluations, keeps the trace and applies the stopping rules.

    Once the best value has improved by less than ``f_tol`` over a full
    polling cycle (or the evaluation budget is spent) the objective freezes:
    further calls return the best value without touching the estimator, so
    the optimizer winds down on its own.
    """

    def __init__(self, spec, h, est_cfg, opt_cfg, start_index: int):
        self.spec, self.h, self.est_cfg, self.opt_cfg = spec, h, est_cfg, opt_cfg
        self.index = start_index
        self.trace: list[tuple[int, float]] = []
        self.best_x: np.ndarray | None = None
        self.best_f = math.inf
        self.best_history: list[float] = []
        self.cycle = 2 * (spec.n_params + 1)
        self.stalled = False
        self.exhausted = False

    @property
    def frozen(self) -> bool:
        return self.stalled or self.exhausted

    def __call__(self, x: np.ndarray) -> float:
        if self.frozen:
            return self.best_f
        e, _ = estimate_energy(self.spec, x, self.h, self.est_cfg, self.index)
        self.index += 1
        self.trace.append((self.index, e))
        if e < self.best_f:
            self.best_f, self.best_x = e, np.array(x, dtype=float)
        self.best_history.append(self.best_f)
        n = len(self.best_history)
        if n > 2 * self.cycle and self.best_history[-1 - self.cycle] - self.best_f < self.opt_cfg.f_tol:
            self.stalled = True
        elif n >= self.opt_cfg.max_iter:
            self.exhausted = True
        return e


def _minimize(obj: _Objective, x0: np.ndarray, opt_cfg: OptimizerConfig) -> bool:
    """Run the optimizer; True when it stopped on a convergence criterion."""
    budget = opt_cfg.max_iter + 200 * (x0.shape[0] + 1)
    if opt_cfg.method == "cobyla":
        res = minimize(obj, x0, method="COBYLA",
                       options={"rhobeg": opt_cfg.step, "tol": opt_cfg.x_tol, "maxiter": budget})
    else:
        simplex = [x0] + [x0 + opt_cfg.step * e for e in np.eye(x0.shape[0])]
        res = minimize(obj, x0, method="Nelder-Mead",
                       options={"initial_simplex": np.array(simplex), "xatol": opt_cfg.x_tol,
                                "fatol": opt_cfg.f_tol, "maxfev": budget})
    if obj.exhausted:
        return False
    return obj.stalled or bool(res.success)


def initial_points(spec: AnsatzSpec, opt_cfg: OptimizerConfig, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(_child_seed(seed, 0x5EED))
    if opt_cfg.initial_theta is not None:
        if len(opt_cfg.initial_theta) != spec.n_params:
            raise ValueError(f"initial_theta has {len(opt_cfg.initial_theta)} entries, "
                             f"ansatz takes {spec.n_params}")
        first = np.array(opt_cfg.initial_theta)
    else:
        first = np.full(spec.n_params, math.pi / 2)
    if opt_cfg.jitter:
        first = first + rng.uniform(-opt_cfg.jitter, opt_cfg.jitter, spec.n_params)
    points = [first]
    for _ in range(opt_cfg.restarts - 1):
        points.append(rng.uniform(0.0, 2 * math.pi, spec.n_params))
    return points


def run_vqe(
    layout: CircuitLayout,
    model_cfg: ModelConfig | None,
    spec: AnsatzSpec,
    est_cfg: EstimatorConfig | None = None,
    opt_cfg: OptimizerConfig | None = None,
    hamiltonian: PauliSum | None = None,
) -> VqeResult:
    model_cfg = model_cfg or ModelConfig()
    est_cfg = est_cfg or EstimatorConfig()
    opt_cfg = opt_cfg or OptimizerConfig()
    if spec.n_qubits != layout.n_devices:
        raise ValueError(f"ansatz has {spec.n_qubits} qubits, layout {layout.name!r} "
                         f"has {layout.n_devices} device cells")
    h = hamiltonian if hamiltonian is not None else build_hamiltonian(layout, model_cfg)

    trace: list[tuple[int, float]] = []
    best: tuple[float, np.ndarray, bool] | None = None
    restart_energies = []
    converged_all = True
    next_index = 0
    for x0 in initial_points(spec, opt_cfg, est_cfg.seed):
        obj = _Objective(spec, h, est_cfg, opt_cfg, next_index)
        ok = _minimize(obj, np.asarray(x0, dtype=float), opt_cfg)
        next_index = obj.index
        trace.extend(obj.trace)
        restart_energies.append(obj.best_f)
        if best is None or obj.best_f < best[0]:
            best = (obj.best_f, obj.best_x, ok)
        converged_all = converged_all and ok
    assert best is not None
    _, theta_star, converged = best

    energy, stderr = estimate_energy(spec, theta_star, h, est_cfg, next_index)
    trace.append((next_index + 1, energy))
    pols = read_polarizations(spec, theta_star, est_cfg)
    shots_per_eval = 0 if est_cfg.mode is EstimatorMode.EXACT else est_cfg.shots * sum(
        1 for g in group_by_basis(h) if g.terms
    )
    shots_used = shots_per_eval * len(trace) + (0 if est_cfg.mode is EstimatorMode.EXACT else est_cfg.shots)
    if not converged:
        log.warning("VQE on %s did not converge within %d evaluations", layout.name, opt_cfg.max_iter)
    return VqeResult(
        theta_star=theta_star,
        energy=energy,
        stderr=stderr,
        energy_trace=trace,
        iterations=len(trace) - 1,
        polarizations=pols,
        shots_used=shots_used,
        converged=converged,
        restart_energies=restart_energies,
        unphysical=bool(np.any(np.abs(pols) > 1.0 + 1e-12)),
        config={
            "layout": layout.name,
            "driver_polarizations": list(layout.driver_polarizations),
            "model": _jsonable(asdict(model_cfg)),
            "ansatz": spec.to_dict(),
            "estimator": _jsonable(asdict(est_cfg)),
            "optimizer": _jsonable(asdict(opt_cfg)),
        },
    )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, np.generic):
        return obj.item()
    return obj
