"""Exact ground states: dense diagonalization and matrix-free Lanczos."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .hamiltonian import PauliSum
from .statevector import SizeError, StateVector

log = logging.getLogger(__name__)

MAX_DENSE_QUBITS = 12
MAX_LANCZOS_QUBITS = 26
_KRYLOV_MEMORY_BYTES = 1_500_000_000


@dataclass
class GroundStateResult:
    energy: float
    state: StateVector
    polarizations: np.ndarray
    degenerate: bool
    converged: bool = True
    iterations: int = 0


def polarizations_of(state: StateVector) -> np.ndarray:
    return -state.z_expectations()


def _degeneracy_threshold(h: PauliSum) -> float:
    return 1e-9 * max(h.max_abs_coefficient, 1.0)


def ground_state_dense(h: PauliSum) -> GroundStateResult:
    if h.n_qubits > MAX_DENSE_QUBITS:
        raise SizeError(f"dense diagonalization limited to {MAX_DENSE_QUBITS} qubits, got {h.n_qubits}")
    evals, evecs = np.linalg.eigh(h.to_matrix())
    state = StateVector(evecs[:, 0].astype(complex), h.n_qubits)
    gap = evals[1] - evals[0] if evals.shape[0] > 1 else np.inf
    return GroundStateResult(
        energy=float(evals[0]),
        state=state,
        polarizations=polarizations_of(state),
        degenerate=bool(gap < _degeneracy_threshold(h)),
    )


def _start_vector(dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = np.ones(dim) / np.sqrt(dim)
    v = v + 1e-3 * rng.standard_normal(dim) / np.sqrt(dim)
    return v / np.linalg.norm(v)


def ground_state_lanczos(
    h: PauliSum,
    tol: float = 1e-9,
    max_iter: int = 3000,
    krylov_dim: int = 80,
    seed: int = 0,
) -> GroundStateResult:
    """Lowest eigenpair by explicitly restarted Lanczos with full reorthogonalization.

    Converged once the lowest Ritz value moves by less than ``tol`` (meV)
    between steps and its residual is below ``sqrt(tol)``. ``max_iter`` bounds
    the number of Hamiltonian applications; on exhaustion the best estimate
    is returned with ``converged=False``.
    """
    n = h.n_qubits
    if n > MAX_LANCZOS_QUBITS:
        raise SizeError(f"Lanczos limited to {MAX_LANCZOS_QUBITS} qubits, got {n}")
    dim = 1 << n
    if not h.terms:
        state = StateVector.zero(n)
        return GroundStateResult(0.0, state, polarizations_of(state), degenerate=dim > 1, iterations=0)

    krylov_dim = max(4, min(krylov_dim, dim, _KRYLOV_MEMORY_BYTES // (8 * dim)))
    res_tol = np.sqrt(tol)
    v = _start_vector(dim, seed)
    matvecs = 0
    theta_prev = np.inf
    converged = False
    second = np.inf

    while matvecs < max_iter and not converged:
        basis = np.empty((krylov_dim + 1, dim))
        basis[0] = v
        alphas: list[float] = []
        betas: list[float] = []
        y = np.array([1.0])
        m = 0
        for j in range(krylov_dim):
            w = h.apply(basis[j])
            matvecs += 1
            alpha = float(basis[j] @ w)
            alphas.append(alpha)
            # two passes of classical Gram-Schmidt against the whole basis
            for _ in range(2):
                w -= basis[: j + 1].T @ (basis[: j + 1] @ w)
            beta = float(np.linalg.norm(w))
            m = j + 1
            if m == 1:
                theta, y = np.array([alpha]), np.array([[1.0]])
            else:
                theta, y = eigh_tridiagonal(np.array(alphas), np.array(betas))
            residual = beta * abs(y[-1, 0])
            if abs(theta[0] - theta_prev) < tol and residual < res_tol:
                converged = True
            theta_prev = theta[0]
            second = theta[1] if theta.shape[0] > 1 else np.inf
            if beta < 1e-12 * max(1.0, abs(alpha)):
                converged = True  # invariant subspace found
            if converged or matvecs >= max_iter:
                break
            betas.append(beta)
            basis[j + 1] = w / beta
        v = basis[:m].T @ y[:, 0]
        v /= np.linalg.norm(v)

    hv = h.apply(v)
    energy = float(v @ hv)
    if not converged:
        log.warning("Lanczos did not converge after %d applications (E=%.9g meV)", matvecs, energy)
    state = StateVector(v.astype(complex), n)
    return GroundStateResult(
        energy=energy,
        state=state,
        polarizations=polarizations_of(state),
        degenerate=bool(second - theta_prev < _degeneracy_threshold(h)),
        converged=converged,
        iterations=matvecs,
    )


def ground_state(h: PauliSum, **lanczos_kwargs) -> GroundStateResult:
    """Dense solve when small enough, Lanczos otherwise."""
    if h.n_qubits <= 10:
        return ground_state_dense(h)
    return ground_state_lanczos(h, **lanczos_kwargs)
