"""Windowed-moment proxy for a deep-EM logging tool.

Maps the log-resistivity column at the tool position to a 13-component
log. The components cover three depths of investigation (symmetric
Gaussian means), directional sensitivity (one-sided means up and down),
the local value, a vertical derivative, and two windowed variances that
react to nearby boundaries.

All moments are computed on deviations from the tool cell's value, with
cells paired by distance from the tool. That arrangement keeps three
properties of the proxy exact in floating point, not just approximate:
a constant column reproduces the constant, mirroring the column about
the tool swaps the up/down components, and adding a constant shifts the
mean-like components while leaving derivative and variances untouched.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .geomodel import FaciesGrid, LogResistivityField, ToolPosition, _check_position

N_COMPONENTS = 13

SYMMETRIC_SIGMAS = (0.5, 2.0, 8.0)   # m, c1..c3
ONE_SIDED_SIGMAS = (1.0, 4.0, 16.0)  # m, c4..c6 up and c7..c9 down
DERIVATIVE_SIGMA = 1.0               # m, c11 differentiates this window's mean
VARIANCE_SIGMAS = (4.0, 16.0)        # m, c12..c13

MAX_BOUNDARIES = 3


@dataclass(frozen=True)
class EMLog:
    """One simulated tool response: 13 components at one position."""

    components: np.ndarray
    position: ToolPosition

    def __post_init__(self):
        c = np.asarray(self.components)
        if c.shape != (N_COMPONENTS,):
            raise ValueError(f"expected {N_COMPONENTS} components, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("components must be finite")


@dataclass(frozen=True)
class BoundaryProfile:
    """Distances to the nearest facies boundaries along the tool column.

    up/down hold at most three (distance m, mean log-resistivity of the
    layer beyond) pairs, nearest first. Diagnostic only; assimilation
    consumes the smooth field, never this.
    """

    up: tuple[tuple[float, float], ...]
    down: tuple[tuple[float, float], ...]
    local: float

    def __post_init__(self):
        for name, pairs in (("up", self.up), ("down", self.down)):
            if len(pairs) > MAX_BOUNDARIES:
                raise ValueError(f"at most {MAX_BOUNDARIES} {name} boundaries")
            dists = [d for d, _ in pairs]
            if any(d <= 0 for d in dists):
                raise ValueError("boundary distances must be positive")
            if sorted(dists) != dists or len(set(dists)) != len(dists):
                raise ValueError("boundary distances must increase strictly")


@lru_cache(maxsize=32)
def _distance_weights(n_rows: int, dz: float, sigma: float) -> np.ndarray:
    """Gaussian weight per cell-offset 0..n_rows-1, unnormalized (w[0] = 1)."""
    d = np.arange(n_rows) * dz
    w = np.exp(-0.5 * (d / sigma) ** 2)
    w.flags.writeable = False
    return w


def _fold(dev: np.ndarray, row: int) -> tuple[np.ndarray, np.ndarray]:
    """Reindex a (n, rows) deviation block by distance from `row`.

    Returns (up, down), each (n, rows): up[:, k] = dev[:, row-k] when that
    cell exists else 0, down[:, k] = dev[:, row+k] likewise. Summing the
    two before weighting makes symmetric windows invariant, bit for bit,
    under a vertical mirror of the column.
    """
    n, n_rows = dev.shape
    up = np.zeros((n, n_rows))
    down = np.zeros((n, n_rows))
    up[:, :row + 1] = dev[:, row::-1]
    down[:, :n_rows - row] = dev[:, row:]
    return up, down


def _presence(n_rows: int, row: int) -> tuple[np.ndarray, np.ndarray]:
    pu = np.zeros(n_rows)
    pd = np.zeros(n_rows)
    pu[:row + 1] = 1.0
    pd[:n_rows - row] = 1.0
    return pu, pd


def _sym_mean_dev(dev: np.ndarray, row: int, w: np.ndarray) -> np.ndarray:
    """Symmetric-window mean of deviations about `row`, (n,).

    The deviations are anchored elsewhere (at the tool row), so the
    window's own center cell contributes too.
    """
    up, down = _fold(dev, row)
    pu, pd = _presence(dev.shape[1], row)
    pair = up[:, 1:] + down[:, 1:]
    norm = w[0] + (w[1:] * (pu[1:] + pd[1:])).sum()
    return (w[0] * up[:, 0] + (w[1:] * pair).sum(axis=-1)) / norm


def simulate_columns(columns: np.ndarray, row: int, dz: float) -> np.ndarray:
    """Core kernel: 13 components for a batch of log-resistivity columns.

    columns has shape (n, n_rows); returns (n, 13) float64. Every caller
    funnels through here, so a single column and a batch member agree
    bit for bit.
    """
    columns = np.asarray(columns, dtype=np.float64)
    n, n_rows = columns.shape
    if not 0 <= row < n_rows:
        raise ValueError(f"row {row} outside column of {n_rows} cells")

    anchor = columns[:, row]
    dev = columns - anchor[:, None]
    up, down = _fold(dev, row)
    pu, pd = _presence(n_rows, row)
    pair = up[:, 1:] + down[:, 1:]

    out = np.empty((n, N_COMPONENTS))

    for i, sigma in enumerate(SYMMETRIC_SIGMAS):
        w = _distance_weights(n_rows, dz, sigma)
        norm = w[0] + (w[1:] * (pu[1:] + pd[1:])).sum()
        out[:, i] = anchor + (w[1:] * pair).sum(axis=-1) / norm

    for i, sigma in enumerate(ONE_SIDED_SIGMAS):
        w = _distance_weights(n_rows, dz, sigma)
        out[:, 3 + i] = anchor + (w * up).sum(axis=-1) / (w * pu).sum()
        out[:, 6 + i] = anchor + (w * down).sum(axis=-1) / (w * pd).sum()

    out[:, 9] = anchor

    w1 = _distance_weights(n_rows, dz, DERIVATIVE_SIGMA)
    if n_rows == 1:
        out[:, 10] = 0.0
    elif row == 0:
        out[:, 10] = (_sym_mean_dev(dev, 1, w1) - _sym_mean_dev(dev, 0, w1)) / dz
    elif row == n_rows - 1:
        out[:, 10] = (_sym_mean_dev(dev, row, w1) - _sym_mean_dev(dev, row - 1, w1)) / dz
    else:
        out[:, 10] = (_sym_mean_dev(dev, row + 1, w1) - _sym_mean_dev(dev, row - 1, w1)) / (2.0 * dz)

    for i, sigma in enumerate(VARIANCE_SIGMAS):
        w = _distance_weights(n_rows, dz, sigma)
        norm = w[0] + (w[1:] * (pu[1:] + pd[1:])).sum()
        mean = (w[1:] * pair).sum(axis=-1) / norm
        eup, edown = _fold(dev - mean[:, None], row)
        eup *= eup
        edown *= edown
        epair = eup[:, 1:] + edown[:, 1:]
        out[:, 11 + i] = (w[0] * eup[:, 0] + (w[1:] * epair).sum(axis=-1)) / norm

    return out


def simulate_em(field: LogResistivityField, pos: ToolPosition) -> EMLog:
    """Simulate the 13-component tool response at one position."""
    _check_position(pos, field.geometry)
    column = field.values[:, pos.col][None, :]
    comps = simulate_columns(column, pos.row, field.geometry.dz)[0]
    return EMLog(comps, pos)


def simulate_ensemble(fields: list[LogResistivityField], pos: ToolPosition) -> list[EMLog]:
    """Element-wise simulate_em, order preserving, batched over the column stack."""
    if not fields:
        return []
    geometry = fields[0].geometry
    _check_position(pos, geometry)
    for f in fields:
        if f.geometry != geometry:
            raise ValueError("fields must share one geometry")
    columns = np.stack([f.values[:, pos.col] for f in fields])
    comps = simulate_columns(columns, pos.row, geometry.dz)
    return [EMLog(comps[i], pos) for i in range(len(fields))]


def em_gradient(field: LogResistivityField, pos: ToolPosition) -> np.ndarray:
    """Analytic d(component)/d(column cell), shape (13, n_rows).

    The mean-like components are linear in the column, the variances
    quadratic; this is the exact Jacobian at the given field, used to
    validate the proxy's smoothness by finite differences.
    """
    _check_position(pos, field.geometry)
    g = field.geometry
    n_rows, dz, row = g.n_rows, g.dz, pos.row
    v = np.asarray(field.values[:, pos.col], dtype=np.float64)
    idx = np.arange(n_rows)
    offset = np.abs(idx - row)

    grad = np.zeros((N_COMPONENTS, n_rows))

    def sym_weights(sigma):
        w = _distance_weights(n_rows, dz, sigma)[offset]
        return w / w.sum()

    for i, sigma in enumerate(SYMMETRIC_SIGMAS):
        grad[i] = sym_weights(sigma)

    for i, sigma in enumerate(ONE_SIDED_SIGMAS):
        w = _distance_weights(n_rows, dz, sigma)[offset]
        wu = np.where(idx <= row, w, 0.0)
        wd = np.where(idx >= row, w, 0.0)
        grad[3 + i] = wu / wu.sum()
        grad[6 + i] = wd / wd.sum()

    grad[9, row] = 1.0

    def sym_weights_about(j, sigma):
        w = _distance_weights(n_rows, dz, sigma)[np.abs(idx - j)]
        return w / w.sum()

    if n_rows > 1:
        if row == 0:
            grad[10] = (sym_weights_about(1, DERIVATIVE_SIGMA) - sym_weights_about(0, DERIVATIVE_SIGMA)) / dz
        elif row == n_rows - 1:
            grad[10] = (sym_weights_about(row, DERIVATIVE_SIGMA) - sym_weights_about(row - 1, DERIVATIVE_SIGMA)) / dz
        else:
            grad[10] = (sym_weights_about(row + 1, DERIVATIVE_SIGMA)
                        - sym_weights_about(row - 1, DERIVATIVE_SIGMA)) / (2.0 * dz)

    for i, sigma in enumerate(VARIANCE_SIGMAS):
        w = sym_weights(sigma)
        mean = w @ v
        grad[11 + i] = 2.0 * w * (v - mean)

    return grad


def boundary_profile(field: LogResistivityField, labels: FaciesGrid, pos: ToolPosition) -> BoundaryProfile:
    """Distances to the nearest label changes up and down the tool column.

    Each entry pairs the distance to the first cell of the next layer
    (cell centers, so one cell of offset is dz meters) with that layer's
    mean log-resistivity; at most three boundaries are kept per side.
    """
    _check_position(pos, field.geometry)
    if labels.geometry != field.geometry:
        raise ValueError("labels and field must share one geometry")
    col_labels = labels.cells[:, pos.col]
    col_values = field.values[:, pos.col]
    dz = field.geometry.dz

    def scan(order):
        pairs = []
        run_start = None
        current = col_labels[pos.row]
        for j in order:
            if col_labels[j] != current:
                if run_start is not None:
                    pairs[-1] = (pairs[-1][0], float(np.mean(col_values[run_start])))
                if len(pairs) == MAX_BOUNDARIES:
                    run_start = None
                    break
                current = col_labels[j]
                run_start = [j]
                pairs.append((abs(j - pos.row) * dz, 0.0))
            elif run_start is not None:
                run_start.append(j)
        if run_start is not None:
            pairs[-1] = (pairs[-1][0], float(np.mean(col_values[run_start])))
        return tuple(pairs)

    up = scan(range(pos.row - 1, -1, -1))
    down = scan(range(pos.row + 1, field.geometry.n_rows))
    return BoundaryProfile(up=up, down=down, local=float(col_values[pos.row]))


def write_em_log_csv(path: str | Path, records) -> None:
    """CSV with columns step,col,row,c1..c13; records = iterable of (step, EMLog)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "col", "row"] + [f"c{i}" for i in range(1, N_COMPONENTS + 1)])
        for step, log in records:
            writer.writerow([step, log.position.col, log.position.row]
                            + [repr(float(c)) for c in log.components])
