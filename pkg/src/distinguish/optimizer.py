"""Reward images, per-realization dynamic programming, robust one-step decisions.

The planning scheme is naive-optimistic: each realization gets its own
full backward DP (admissible moves: one column ahead, row offset -1, 0,
or +1, or stop), and robustness enters only for the immediate next
segment, where candidate scores are averaged across realizations before
the argmax. Stopping carries value 0, so no value entry is ever
negative.

Ties break Hold > Up > Down > Stop everywhere, biasing toward straight,
cheaper drilling and keeping every argmax deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geomodel import Facies, FaciesGrid, GridGeometry, PetrophysicsTable, ToolPosition, _check_position

STOP = 2  # move-field sentinel; real moves are row offsets -1, 0, +1

ACTION_OFFSETS = {"up": -1, "hold": 0, "down": 1}
OFFSET_ACTIONS = {-1: "up", 0: "hold", 1: "down", STOP: "stop"}
# candidate ordering encodes the tie-break: first maximum wins
_TIE_ORDER = ("hold", "up", "down")
_TIE_OFFSETS = (0, -1, 1)


@dataclass(frozen=True)
class CostModel:
    """Drilling cost proportional to drilled length."""

    cost_per_meter: float = 0.02
    dx: float = 10.0
    dz: float = 0.5

    def __post_init__(self):
        if self.cost_per_meter < 0:
            raise ValueError("cost_per_meter must be nonnegative")
        if self.dx <= 0 or self.dz <= 0:
            raise ValueError("segment dimensions must be positive")

    @classmethod
    def for_geometry(cls, geometry: GridGeometry, cost_per_meter: float = 0.02) -> "CostModel":
        return cls(cost_per_meter=cost_per_meter, dx=geometry.dx, dz=geometry.dz)

    @property
    def hold_cost(self) -> float:
        return self.cost_per_meter * self.dx

    @property
    def diagonal_cost(self) -> float:
        return self.cost_per_meter * math.sqrt(self.dx * self.dx + self.dz * self.dz)


def segment_cost(from_row: int, to_row: int, cost: CostModel) -> float:
    """Cost of drilling one column ahead with the given row change."""
    offset = abs(to_row - from_row)
    if offset == 0:
        return cost.hold_cost
    if offset == 1:
        return cost.diagonal_cost
    raise ValueError(f"row offset {to_row - from_row} not admissible")


@dataclass(frozen=True)
class RewardImage:
    """Per-cell value of reaching a cell, from the contiguous-sand integral."""

    geometry: GridGeometry
    R: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.R)
        expected = (self.geometry.n_rows, self.geometry.n_cols)
        if r.shape != expected:
            raise ValueError(f"R shape {r.shape}, expected {expected}")
        if not np.all(np.isfinite(r)) or r.min() < 0:
            raise ValueError("rewards must be finite and nonnegative")


@dataclass(frozen=True)
class ValueMatrix:
    """Backward-DP optimal remaining value and best next move per cell."""

    geometry: GridGeometry
    V: np.ndarray
    move: np.ndarray

    def __post_init__(self):
        expected = (self.geometry.n_rows, self.geometry.n_cols)
        if np.asarray(self.V).shape != expected or np.asarray(self.move).shape != expected:
            raise ValueError("V and move must match the geometry")
        if np.asarray(self.V).min() < 0:
            raise ValueError("stopping floors every value at 0")


@dataclass(frozen=True)
class Decision:
    """Robust one-step recommendation with per-action expected values."""

    action: str
    scores: dict[str, float]
    chosen_value: float

    def __post_init__(self):
        if self.action not in ("up", "hold", "down", "stop"):
            raise ValueError(f"unknown action {self.action!r}")
        if self.action not in self.scores:
            raise ValueError("chosen action must be scored")


def reward_batch(cells: np.ndarray, table: PetrophysicsTable, dz: float) -> np.ndarray:
    """Reward images for a stack of label grids, (n, rows, cols) float64.

    Per cell: 0 on shale, else the sum of w(facies)*dz over the maximal
    vertically contiguous sand run containing the cell.
    """
    cells = np.asarray(cells)
    if cells.ndim != 3:
        raise ValueError("expected (n, rows, cols) labels")
    n, n_rows, _ = cells.shape
    sand = cells != int(Facies.SHALE)
    wdz = table.weight_array()[cells] * dz
    wdz[~sand] = 0.0

    csum = np.cumsum(wdz, axis=1)
    idx = np.arange(n_rows)[None, :, None]
    starts = sand & np.concatenate([np.ones_like(sand[:, :1]), ~sand[:, :-1]], axis=1)
    ends = sand & np.concatenate([~sand[:, 1:], np.ones_like(sand[:, :1])], axis=1)
    start_idx = np.maximum.accumulate(np.where(starts, idx, -1), axis=1)
    end_idx = np.minimum.accumulate(np.where(ends, idx, n_rows)[:, ::-1], axis=1)[:, ::-1]

    safe_start = np.clip(start_idx, 0, n_rows - 1)
    safe_end = np.clip(end_idx, 0, n_rows - 1)
    upper = np.take_along_axis(csum, safe_end, axis=1)
    lower = np.where(safe_start > 0,
                     np.take_along_axis(csum, np.maximum(safe_start - 1, 0), axis=1), 0.0)
    return np.where(sand, upper - lower, 0.0)


def reward_image(grid: FaciesGrid, table: PetrophysicsTable | None = None) -> RewardImage:
    table = table or PetrophysicsTable()
    R = reward_batch(grid.cells[None], table, grid.geometry.dz)[0]
    return RewardImage(grid.geometry, R)


def value_batch(R: np.ndarray, cost: CostModel) -> tuple[np.ndarray, np.ndarray]:
    """Backward DP over a stack of reward images.

    Returns (V, move), each (n, rows, cols); move holds row offsets or
    STOP. Single pass per column, vectorized across realizations and
    rows; the candidate stacking order implements the tie-break.
    """
    R = np.asarray(R, dtype=np.float64)
    n, n_rows, n_cols = R.shape
    V = np.zeros((n, n_rows, n_cols))
    move = np.full((n, n_rows, n_cols), STOP, dtype=np.int8)
    offsets = np.array(_TIE_OFFSETS, dtype=np.int8)
    step_costs = np.array([cost.hold_cost, cost.diagonal_cost, cost.diagonal_cost])

    for c in range(n_cols - 2, -1, -1):
        gain = R[:, :, c + 1] + V[:, :, c + 1]
        cand = np.full((3, n, n_rows), -np.inf)
        cand[0] = gain - step_costs[0]
        cand[1, :, 1:] = gain[:, :-1] - step_costs[1]
        cand[2, :, :-1] = gain[:, 1:] - step_costs[2]
        best = np.argmax(cand, axis=0)
        best_val = np.take_along_axis(cand, best[None], axis=0)[0]
        stop = best_val < 0.0
        V[:, :, c] = np.where(stop, 0.0, best_val)
        move[:, :, c] = np.where(stop, STOP, offsets[best])

    return V, move


def value_matrix(R: RewardImage, cost: CostModel) -> ValueMatrix:
    V, move = value_batch(R.R[None], cost)
    return ValueMatrix(R.geometry, V[0], move[0])


def trace_path(vm: ValueMatrix, start: ToolPosition) -> list[ToolPosition]:
    """Follow move pointers from start until STOP or the last column."""
    _check_position(start, vm.geometry)
    path = [start]
    col, row = start.col, start.row
    while col < vm.geometry.n_cols - 1:
        mv = int(vm.move[row, col])
        if mv == STOP:
            break
        col += 1
        row += mv
        path.append(ToolPosition(col, row))
    return path


def _trace_on(move: np.ndarray, start: ToolPosition, n_cols: int) -> list[ToolPosition]:
    path = [start]
    col, row = start.col, start.row
    while col < n_cols - 1:
        mv = int(move[row, col])
        if mv == STOP:
            break
        col += 1
        row += mv
        path.append(ToolPosition(col, row))
    return path


def admissible_actions(pos: ToolPosition, geometry: GridGeometry) -> list[str]:
    """Actions available at a position; stop is always allowed."""
    acts = []
    if pos.col < geometry.n_cols - 1:
        if pos.row > 0:
            acts.append("up")
        acts.append("hold")
        if pos.row < geometry.n_rows - 1:
            acts.append("down")
    acts.append("stop")
    return acts


def _stack_cells(grids: list[FaciesGrid]) -> tuple[GridGeometry, np.ndarray]:
    if not grids:
        raise ValueError("need at least one realization")
    geometry = grids[0].geometry
    for g in grids:
        if g.geometry != geometry:
            raise ValueError("realizations must share one geometry")
    return geometry, np.stack([g.cells for g in grids])


def _decide(pos: ToolPosition, geometry: GridGeometry, R3: np.ndarray, V3: np.ndarray,
            cost: CostModel) -> Decision:
    scores: dict[str, float] = {}
    for name, off in zip(_TIE_ORDER, _TIE_OFFSETS):
        row = pos.row + off
        if not 0 <= row < geometry.n_rows:
            continue
        seg = segment_cost(pos.row, row, cost)
        # mean(R + V) - seg: with one realization this reproduces the DP's own
        # candidate value bit for bit, so decision and move field cannot disagree
        scores[name] = float(np.mean(R3[:, row, pos.col + 1] + V3[:, row, pos.col + 1]) - seg)
    scores["stop"] = 0.0

    best = max(scores.values())
    for name in _TIE_ORDER + ("stop",):
        if name in scores and scores[name] == best:
            return Decision(action=name, scores=scores, chosen_value=best)
    raise AssertionError("unreachable")


def robust_decision(pos: ToolPosition, grids: list[FaciesGrid], cost: CostModel,
                    table: PetrophysicsTable | None = None) -> Decision:
    """Ensemble-averaged one-step decision at pos (Hold > Up > Down > Stop ties)."""
    table = table or PetrophysicsTable()
    geometry, cells = _stack_cells(grids)
    _check_position(pos, geometry)
    if pos.col >= geometry.n_cols - 1:
        raise ValueError("position is in the last column; only stop remains")
    R3 = reward_batch(cells, table, geometry.dz)
    V3, _ = value_batch(R3, cost)
    return _decide(pos, geometry, R3, V3, cost)


def compute_fan(grids: list[FaciesGrid], next_pos: ToolPosition, cost: CostModel,
                table: PetrophysicsTable | None = None) -> list[list[ToolPosition]]:
    """Per-realization optimal continuation from the recommended next cell."""
    table = table or PetrophysicsTable()
    geometry, cells = _stack_cells(grids)
    _check_position(next_pos, geometry)
    R3 = reward_batch(cells, table, geometry.dz)
    _, move3 = value_batch(R3, cost)
    return [_trace_on(move3[i], next_pos, geometry.n_cols) for i in range(len(grids))]


def decide_with_fan(pos: ToolPosition, grids: list[FaciesGrid], cost: CostModel,
                    table: PetrophysicsTable | None = None
                    ) -> tuple[Decision, list[list[ToolPosition]]]:
    """robust_decision plus the trajectory fan, sharing one batched DP pass.

    The fan starts from the recommended next cell; a stop recommendation
    has an empty fan.
    """
    table = table or PetrophysicsTable()
    geometry, cells = _stack_cells(grids)
    _check_position(pos, geometry)
    if pos.col >= geometry.n_cols - 1:
        raise ValueError("position is in the last column; only stop remains")
    R3 = reward_batch(cells, table, geometry.dz)
    V3, move3 = value_batch(R3, cost)
    decision = _decide(pos, geometry, R3, V3, cost)
    if decision.action == "stop":
        return decision, []
    next_pos = ToolPosition(pos.col + 1, pos.row + ACTION_OFFSETS[decision.action])
    fan = [_trace_on(move3[i], next_pos, geometry.n_cols) for i in range(len(grids))]
    return decision, fan
