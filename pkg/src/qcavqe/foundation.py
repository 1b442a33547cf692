"""Physical constants, grid geometry, model configuration and built-in QCA layouts.

Cells sit on an integer grid in units of the cell length ``a``. Adjacent
cells are two units apart (center to center), so a cell's four dots occupy
the corners of a unit square around its center.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence


class QcaError(Exception):
    """Base class for every error raised by this package."""


class LayoutError(QcaError, ValueError):
    pass


class DomainError(QcaError, ValueError):
    pass


@dataclass(frozen=True)
class PhysicalConstants:
    coulomb_scale: float = 1439.964  # e^2 / (4 pi eps0) in meV nm
    gamma: float = 50.0  # tunneling energy, meV
    a: float = 1.0  # cell length parameter, nm
    kT_room: float = 25.85  # k_B * 300 K, meV

    def __post_init__(self) -> None:
        for name in ("coulomb_scale", "gamma", "a"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)!r}")


@dataclass(frozen=True, order=True)
class GridPosition:
    x: int
    y: int

    def __sub__(self, other: GridPosition) -> GridPosition:
        return GridPosition(self.x - other.x, self.y - other.y)


class Role(str, enum.Enum):
    DEVICE = "device"
    DRIVER = "driver"


@dataclass(frozen=True)
class Cell:
    id: str
    position: GridPosition
    role: Role = Role.DEVICE
    driver_polarization: float | None = None

    def __post_init__(self) -> None:
        if self.role is Role.DRIVER:
            if self.driver_polarization is None:
                raise LayoutError(f"driver cell {self.id!r} needs a polarization")
            if not -1.0 <= self.driver_polarization <= 1.0:
                raise DomainError(
                    f"driver polarization of {self.id!r} must lie in [-1, 1], "
                    f"got {self.driver_polarization}"
                )
        elif self.driver_polarization is not None:
            raise LayoutError(f"device cell {self.id!r} cannot carry a driver polarization")

    @property
    def is_driver(self) -> bool:
        return self.role is Role.DRIVER


@dataclass(frozen=True)
class CircuitLayout:
    """An ordered set of cells.

    Device cells keep their relative order; device ``k`` in that order is
    simulated by qubit ``k``.
    """

    cells: tuple[Cell, ...]
    name: str = "custom"

    def __post_init__(self) -> None:
        object.__setattr__(self, "cells", tuple(self.cells))
        seen: dict[GridPosition, str] = {}
        ids: set[str] = set()
        for cell in self.cells:
            if cell.position in seen:
                raise LayoutError(
                    f"cells {seen[cell.position]!r} and {cell.id!r} share position "
                    f"({cell.position.x}, {cell.position.y})"
                )
            if cell.id in ids:
                raise LayoutError(f"duplicate cell id {cell.id!r}")
            seen[cell.position] = cell.id
            ids.add(cell.id)

    @property
    def devices(self) -> tuple[Cell, ...]:
        return tuple(c for c in self.cells if not c.is_driver)

    @property
    def drivers(self) -> tuple[Cell, ...]:
        return tuple(c for c in self.cells if c.is_driver)

    @property
    def n_devices(self) -> int:
        return len(self.devices)

    @property
    def driver_polarizations(self) -> tuple[float, ...]:
        return tuple(c.driver_polarization for c in self.drivers)  # type: ignore[misc]

    def with_driver_polarizations(self, values: Sequence[float]) -> CircuitLayout:
        """Return a copy with the drivers (in layout order) set to ``values``."""
        drivers = self.drivers
        if len(values) != len(drivers):
            raise LayoutError(f"{self.name} has {len(drivers)} drivers, got {len(values)} values")
        it = iter(values)
        cells = []
        for c in self.cells:
            if c.is_driver:
                cells.append(Cell(c.id, c.position, Role.DRIVER, float(next(it))))
            else:
                cells.append(c)
        return CircuitLayout(tuple(cells), self.name)


@dataclass(frozen=True)
class ModelConfig:
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    e_k: float = -294.3  # nearest-neighbour kink energy, meV
    e_k_diag: float = 85.7  # simplified diagonal kink energy, meV
    driver_bias_scale: float = 1.0
    include_driver_diagonals: bool = True


class NeighborClass(enum.Enum):
    NEAREST = "nearest"
    DIAGONAL = "diagonal"
    NONE = "none"


def classify_pair(p1: GridPosition, p2: GridPosition) -> NeighborClass:
    d = p2 - p1
    dx, dy = abs(d.x), abs(d.y)
    if dx == 0 and dy == 0:
        raise LayoutError(f"cells overlap at ({p1.x}, {p1.y})")
    if (dx, dy) in ((2, 0), (0, 2)):
        return NeighborClass.NEAREST
    if (dx, dy) == (2, 2):
        return NeighborClass.DIAGONAL
    return NeighborClass.NONE


# ---------------------------------------------------------------------------
# built-in layouts

def _dev(name: str, x: int, y: int) -> Cell:
    return Cell(name, GridPosition(x, y))


def _drv(name: str, x: int, y: int, p: float) -> Cell:
    return Cell(name, GridPosition(x, y), Role.DRIVER, float(p))


def wire(n: int, p_drv: float = 1.0) -> CircuitLayout:
    if n < 1:
        raise LayoutError("a wire needs at least one device cell")
    cells = [_drv("D", 0, 0, p_drv)] + [_dev(f"c{k}", 2 * k + 2, 0) for k in range(n)]
    return CircuitLayout(tuple(cells), f"wire{n}")


def inverter(p_drv: float = 1.0) -> CircuitLayout:
    cells = (
        _drv("D", 0, 0, p_drv),
        _dev("c0", 2, 0),
        _dev("c1", 2, 2),
        _dev("c2", 2, -2),
        _dev("c3", 4, 2),
        _dev("c4", 4, -2),
        _dev("c5", 6, 0),
    )
    return CircuitLayout(cells, "inverter")


def majority6(pa: float = 1.0, pb: float = 1.0, pc: float = 1.0) -> CircuitLayout:
    cells = (
        _drv("A", 0, 4, pa),
        _drv("B", -4, 0, pb),
        _drv("C", 0, -4, pc),
        _dev("c0", 0, 2),
        _dev("c1", -2, 0),
        _dev("c2", 0, -2),
        _dev("c3", 0, 0),
        _dev("c4", 2, 0),
        _dev("c5", 4, 0),
    )
    return CircuitLayout(cells, "majority6")


def majority2(pa: float = 1.0, pb: float = 1.0, pc: float = 1.0) -> CircuitLayout:
    cells = (
        _drv("A", 0, 2, pa),
        _drv("B", -2, 0, pb),
        _drv("C", 0, -2, pc),
        _dev("c0", 0, 0),
        _dev("c1", 2, 0),
    )
    return CircuitLayout(cells, "majority2")


BUILTIN_NAMES = ("wire", "inverter", "majority6", "majority2")


def builtin_layout(name: str, params: Iterable[int] = ()) -> CircuitLayout:
    """Look up a built-in layout; ``wire`` takes its device count as ``params[0]``.

    Drivers start fully polarized at +1; use
    :meth:`CircuitLayout.with_driver_polarizations` to change them.
    """
    params = list(params)
    if name == "wire":
        if len(params) != 1:
            raise LayoutError("wire layout takes exactly one parameter (device count)")
        return wire(int(params[0]))
    factories = {"inverter": inverter, "majority6": majority6, "majority2": majority2}
    if name not in factories:
        raise LayoutError(f"unknown layout {name!r}; expected one of {BUILTIN_NAMES}")
    if params:
        raise LayoutError(f"layout {name!r} takes no parameters")
    return factories[name]()


# ---------------------------------------------------------------------------
# layout files

_CELL_KEYS = {"id", "x", "y", "role", "p"}
_TOP_KEYS = {"name", "cells"}


def layout_from_dict(data: dict) -> CircuitLayout:
    if not isinstance(data, dict):
        raise LayoutError("layout must be a JSON object")
    extra = set(data) - _TOP_KEYS
    if extra:
        raise LayoutError(f"unknown layout fields: {sorted(extra)}")
    if "cells" not in data or not isinstance(data["cells"], list):
        raise LayoutError("layout needs a 'cells' list")
    name = data.get("name", "custom")
    if not isinstance(name, str):
        raise LayoutError("layout name must be a string")

    cells = []
    for i, raw in enumerate(data["cells"]):
        if not isinstance(raw, dict):
            raise LayoutError(f"cell #{i} is not an object")
        extra = set(raw) - _CELL_KEYS
        if extra:
            raise LayoutError(f"cell #{i}: unknown fields {sorted(extra)}")
        missing = {"id", "x", "y", "role"} - set(raw)
        if missing:
            raise LayoutError(f"cell #{i}: missing fields {sorted(missing)}")
        x, y = raw["x"], raw["y"]
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in (x, y)):
            raise LayoutError(f"cell #{i}: x and y must be integers")
        try:
            role = Role(raw["role"])
        except ValueError:
            raise LayoutError(f"cell #{i}: role must be 'device' or 'driver'") from None
        p = raw.get("p")
        if role is Role.DRIVER:
            if not isinstance(p, (int, float)) or isinstance(p, bool):
                raise LayoutError(f"cell #{i}: driver needs a numeric 'p'")
            p = float(p)
        elif p is not None:
            raise LayoutError(f"cell #{i}: only drivers may set 'p'")
        cells.append(Cell(str(raw["id"]), GridPosition(x, y), role, p))
    return CircuitLayout(tuple(cells), name)


def layout_to_dict(layout: CircuitLayout) -> dict:
    cells = []
    for c in layout.cells:
        entry: dict = {"id": c.id, "x": c.position.x, "y": c.position.y, "role": c.role.value}
        if c.is_driver:
            entry["p"] = c.driver_polarization
        cells.append(entry)
    return {"name": layout.name, "cells": cells}


def load_layout(path: str | Path) -> CircuitLayout:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise LayoutError(f"{path}: invalid JSON ({exc})") from None
    return layout_from_dict(data)


def save_layout(layout: CircuitLayout, path: str | Path) -> None:
    Path(path).write_text(json.dumps(layout_to_dict(layout), indent=2) + "\n")
