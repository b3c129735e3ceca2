"""Grid and facies domain types, petrophysical mapping, ensemble summary maps.

The working canvas is a 2D vertical cross section discretized into cells.
Row index 0 is the top of the section and depth increases with the row
index; column index 0 is the kickoff column.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

PROB_SUM_TOL = 1e-6


class Facies(IntEnum):
    """Facies codes, also used in the grid file format."""

    CHANNEL = 0
    CREVASSE = 1
    SHALE = 2


@dataclass(frozen=True)
class GridGeometry:
    """Regular 2D section grid. Defaults give the 640 m x 32 m benchmark section."""

    n_cols: int = 64
    n_rows: int = 64
    dx: float = 10.0
    dz: float = 0.5
    x_origin: float = 0.0
    z_origin: float = 0.0

    def __post_init__(self):
        if self.n_cols <= 0 or self.n_rows <= 0:
            raise ValueError("grid must have positive dimensions")
        if self.dx <= 0 or self.dz <= 0:
            raise ValueError("cell sizes must be positive")

    @property
    def width(self) -> float:
        return self.n_cols * self.dx

    @property
    def height(self) -> float:
        return self.n_rows * self.dz

    def x_centers(self) -> np.ndarray:
        """Lateral cell-center coordinates, relative to the section origin."""
        return (np.arange(self.n_cols) + 0.5) * self.dx

    def z_centers(self) -> np.ndarray:
        """Depth cell-center coordinates below the section top."""
        return (np.arange(self.n_rows) + 0.5) * self.dz


@dataclass(frozen=True)
class ToolPosition:
    """Cell-indexed position of the bit / measurement tool."""

    col: int
    row: int

    def in_bounds(self, geometry: GridGeometry) -> bool:
        return 0 <= self.col < geometry.n_cols and 0 <= self.row < geometry.n_rows


def _check_position(pos: ToolPosition, geometry: GridGeometry):
    if not pos.in_bounds(geometry):
        raise ValueError(f"position {pos} outside {geometry.n_cols}x{geometry.n_rows} grid")


@dataclass(frozen=True)
class PetrophysicsTable:
    """Per-facies resistivity (ohm-m) and reach-reward density (per meter drilled through)."""

    resistivity: dict[Facies, float] = field(
        default_factory=lambda: {Facies.CHANNEL: 171.0, Facies.CREVASSE: 55.0, Facies.SHALE: 4.0}
    )
    weight: dict[Facies, float] = field(
        default_factory=lambda: {Facies.CHANNEL: 1.0, Facies.CREVASSE: 0.5, Facies.SHALE: 0.0}
    )

    def __post_init__(self):
        for f in Facies:
            if self.resistivity.get(f, 0.0) <= 0.0:
                raise ValueError(f"resistivity for {f.name} must be positive")
            if f not in self.weight:
                raise ValueError(f"missing weight for {f.name}")

    def log_resistivity_array(self) -> np.ndarray:
        """ln(resistivity) per facies, indexed by facies code."""
        return np.array([math.log(self.resistivity[f]) for f in Facies])

    def weight_array(self) -> np.ndarray:
        return np.array([self.weight[f] for f in Facies])


@dataclass(frozen=True)
class FaciesImage:
    """Per-cell facies probabilities, shape (n_rows, n_cols, 3).

    Channel order matches the Facies enum: (channel, crevasse, shale).
    Probabilities lie in [0, 1] and sum to 1 per cell within PROB_SUM_TOL.
    """

    geometry: GridGeometry
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs)
        expected = (self.geometry.n_rows, self.geometry.n_cols, 3)
        if p.shape != expected:
            raise ValueError(f"probs shape {p.shape}, expected {expected}")
        if not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite")
        if p.min() < 0.0 or p.max() > 1.0:
            raise ValueError("probabilities must lie in [0, 1]")
        sums = p.sum(axis=2)
        err = np.abs(sums - 1.0).max()
        if err > PROB_SUM_TOL:
            raise ValueError(f"per-cell probabilities sum to 1 +/- {err:.2e}")

    def sand_probability(self) -> np.ndarray:
        """p(channel) + p(crevasse) per cell."""
        return np.asarray(self.probs[:, :, Facies.CHANNEL] + self.probs[:, :, Facies.CREVASSE], dtype=float)


@dataclass(frozen=True)
class FaciesGrid:
    """Crisp facies labels, shape (n_rows, n_cols), values are Facies codes."""

    geometry: GridGeometry
    cells: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.cells)
        expected = (self.geometry.n_rows, self.geometry.n_cols)
        if c.shape != expected:
            raise ValueError(f"cells shape {c.shape}, expected {expected}")
        if not np.isin(c, [int(f) for f in Facies]).all():
            raise ValueError("cells must hold facies codes 0, 1, 2")


@dataclass(frozen=True)
class LogResistivityField:
    """Per-cell natural-log resistivity ln(ohm-m), shape (n_rows, n_cols)."""

    geometry: GridGeometry
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        expected = (self.geometry.n_rows, self.geometry.n_cols)
        if v.shape != expected:
            raise ValueError(f"values shape {v.shape}, expected {expected}")
        if not np.all(np.isfinite(v)):
            raise ValueError("log-resistivity values must be finite")


@dataclass(frozen=True)
class ProbabilityMap:
    """Per-cell sand probability in [0, 1], shape (n_rows, n_cols)."""

    geometry: GridGeometry
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        expected = (self.geometry.n_rows, self.geometry.n_cols)
        if v.shape != expected:
            raise ValueError(f"values shape {v.shape}, expected {expected}")
        if v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("probabilities must lie in [0, 1]")


def facies_argmax(image: FaciesImage) -> FaciesGrid:
    """Label each cell with its most probable facies.

    Ties break toward the lower facies code, i.e. channel over crevasse over
    shale, which keeps the discretization deterministic.
    """
    cells = np.argmax(image.probs, axis=2).astype(np.int8)
    return FaciesGrid(image.geometry, cells)


def resistivity_log_field(image: FaciesImage, table: PetrophysicsTable | None = None) -> LogResistivityField:
    """Probability-weighted mix of per-facies log-resistivities.

    Mixing in the log domain (a weighted geometric mean of resistivities)
    keeps the field smooth in the probabilities, which the ensemble update
    relies on; crisp cells reproduce the table values exactly.
    """
    table = table or PetrophysicsTable()
    logs = table.log_resistivity_array()
    values = np.asarray(image.probs, dtype=np.float64) @ logs
    return LogResistivityField(image.geometry, values)


def sand_probability_map(images: list[FaciesImage]) -> ProbabilityMap:
    """Ensemble-average probability of sand (channel or crevasse) per cell."""
    if not images:
        raise ValueError("need at least one image")
    geometry = images[0].geometry
    acc = np.zeros((geometry.n_rows, geometry.n_cols))
    for img in images:
        if img.geometry != geometry:
            raise ValueError("images must share one geometry")
        acc += img.sand_probability()
    return ProbabilityMap(geometry, np.clip(acc / len(images), 0.0, 1.0))


def save_facies_grid(grid: FaciesGrid, path: str | Path):
    """Write the plain-text grid format: 'cols rows dx dz' header, then one
    line of facies codes per row, top row first."""
    g = grid.geometry
    lines = [f"{g.n_cols} {g.n_rows} {g.dx} {g.dz}"]
    for r in range(g.n_rows):
        lines.append(" ".join(str(int(v)) for v in grid.cells[r]))
    Path(path).write_text("\n".join(lines) + "\n")


def load_facies_grid(path: str | Path) -> FaciesGrid:
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty grid file")
    header = lines[0].split()
    if len(header) != 4:
        raise ValueError(f"{path}: header must be 'cols rows dx dz'")
    try:
        n_cols, n_rows = int(header[0]), int(header[1])
        dx, dz = float(header[2]), float(header[3])
    except ValueError as exc:
        raise ValueError(f"{path}: bad header: {exc}") from None
    if len(lines) - 1 != n_rows:
        raise ValueError(f"{path}: expected {n_rows} rows, found {len(lines) - 1}")
    try:
        cells = np.array([[int(v) for v in ln.split()] for ln in lines[1:]], dtype=np.int8)
    except ValueError:
        raise ValueError(f"{path}: non-integer cell value") from None
    if cells.shape != (n_rows, n_cols):
        raise ValueError(f"{path}: ragged rows")
    return FaciesGrid(GridGeometry(n_cols=n_cols, n_rows=n_rows, dx=dx, dz=dz), cells)


def export_facies_image_csv(image: FaciesImage, path: str | Path):
    """CSV export with columns col,row,p_channel,p_crevasse,p_shale."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["col", "row", "p_channel", "p_crevasse", "p_shale"])
        for r in range(image.geometry.n_rows):
            for c in range(image.geometry.n_cols):
                p = image.probs[r, c]
                writer.writerow([c, r, repr(float(p[0])), repr(float(p[1])), repr(float(p[2]))])


def export_probability_map_csv(pmap: ProbabilityMap, path: str | Path):
    """CSV export with columns col,row,p_sand."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["col", "row", "p_sand"])
        for r in range(pmap.geometry.n_rows):
            for c in range(pmap.geometry.n_cols):
                writer.writerow([c, r, repr(float(pmap.values[r, c]))])
