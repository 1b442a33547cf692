"""Point-charge electrostatics for four-dot cells.

Dots are numbered counter-clockwise from the top-right corner. Logical state 1
(polarization +1) puts the two electrons on dots 1 and 3, state 0 on dots 2
and 4. In the neutralized charge model every dot additionally carries +q/2,
which makes each cell net neutral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .foundation import DomainError, GridPosition, ModelConfig, PhysicalConstants

# dot offsets from the cell center, units of a
_DOT_OFFSETS = np.array([[0.5, 0.5], [-0.5, 0.5], [-0.5, -0.5], [0.5, -0.5]])

_DRIVER_BIAS_FACTOR = -1.0 / 3.0 - (2.0 * math.sqrt(2.0) - math.sqrt(5.0) - 1.0) / math.sqrt(10.0)


@dataclass(frozen=True)
class CellChargeConfiguration:
    state: int
    neutralized: bool = True

    def __post_init__(self) -> None:
        if self.state not in (0, 1):
            raise DomainError(f"cell state must be 0 or 1, got {self.state!r}")

    @property
    def dot_charges(self) -> np.ndarray:
        """Charges on dots 1..4 in units of q."""
        occupied = np.array([1, 0, 1, 0] if self.state == 1 else [0, 1, 0, 1], dtype=float)
        charges = -occupied
        if self.neutralized:
            charges = charges + 0.5
        return charges

    def dot_positions(self, a: float = 1.0) -> np.ndarray:
        return _DOT_OFFSETS * a

    @property
    def polarization(self) -> float:
        occ = -(self.dot_charges - (0.5 if self.neutralized else 0.0))
        return float((occ[0] + occ[2] - occ[1] - occ[3]) / occ.sum())


@dataclass(frozen=True)
class InteractionEnergies:
    """Interaction energies in meV; ``e_ba`` has cell A in state a and B in state b."""

    e00: float
    e01: float
    e10: float
    e11: float

    def as_rows(self) -> list[tuple[int, int, float]]:
        """(state_a, state_b, energy) rows."""
        return [(0, 0, self.e00), (1, 0, self.e01), (0, 1, self.e10), (1, 1, self.e11)]


def pairwise_interaction(
    cell_a: CellChargeConfiguration,
    cell_b: CellChargeConfiguration,
    offset: GridPosition,
    constants: PhysicalConstants | None = None,
) -> float:
    """Coulomb energy (meV) between two cells, B displaced by ``offset`` grid units."""
    constants = constants or PhysicalConstants()
    a = constants.a
    pos_a = cell_a.dot_positions(a)
    pos_b = cell_b.dot_positions(a) + np.array([offset.x, offset.y], dtype=float) * a
    r = np.linalg.norm(pos_a[:, None, :] - pos_b[None, :, :], axis=-1)
    if np.any(r == 0.0):
        raise DomainError("two point charges coincide; cells overlap")
    qq = np.outer(cell_a.dot_charges, cell_b.dot_charges)
    return float(constants.coulomb_scale * np.sum(qq / r))


def interaction_table(
    offset: GridPosition,
    neutralized: bool = True,
    constants: PhysicalConstants | None = None,
) -> InteractionEnergies:
    def e(sa: int, sb: int) -> float:
        return pairwise_interaction(
            CellChargeConfiguration(sa, neutralized),
            CellChargeConfiguration(sb, neutralized),
            offset,
            constants,
        )

    return InteractionEnergies(e00=e(0, 0), e01=e(1, 0), e10=e(0, 1), e11=e(1, 1))


@dataclass(frozen=True)
class KinkEnergies:
    e_k: float
    e_k_diag: float


def oracle_kink_energies(
    constants: PhysicalConstants | None = None, neutralized: bool = True
) -> KinkEnergies:
    """ZZ coefficients (E11 - E01) computed from point charges at pitch 2a."""
    near = interaction_table(GridPosition(2, 0), neutralized, constants)
    diag = interaction_table(GridPosition(2, 2), neutralized, constants)
    return KinkEnergies(e_k=near.e11 - near.e01, e_k_diag=diag.e11 - diag.e01)


def kink_energies(config: ModelConfig | None = None) -> KinkEnergies:
    """Hamiltonian coupling constants actually used by the model."""
    config = config or ModelConfig()
    return KinkEnergies(e_k=config.e_k, e_k_diag=config.e_k_diag)


def driver_delta(p_drv: float, constants: PhysicalConstants | None = None) -> float:
    """Single-cell bias (meV) induced by a neighbouring driver of polarization ``p_drv``."""
    if not -1.0 <= p_drv <= 1.0:
        raise DomainError(f"driver polarization must lie in [-1, 1], got {p_drv}")
    constants = constants or PhysicalConstants()
    return constants.coulomb_scale * p_drv / constants.a * _DRIVER_BIAS_FACTOR
