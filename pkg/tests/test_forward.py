"""Tests for the windowed-moment EM proxy."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distinguish.forward import (
    BoundaryProfile,
    EMLog,
    boundary_profile,
    em_gradient,
    simulate_columns,
    simulate_em,
    simulate_ensemble,
    write_em_log_csv,
)
from distinguish.geomodel import (
    Facies,
    FaciesGrid,
    GridGeometry,
    LogResistivityField,
    PetrophysicsTable,
    ToolPosition,
)

GEOM = GridGeometry()
LN = PetrophysicsTable().log_resistivity_array()  # [channel, crevasse, shale]


def field_from_column(column, geometry=GEOM, col=0):
    values = np.zeros((geometry.n_rows, geometry.n_cols))
    values[:, col] = column
    return LogResistivityField(geometry, values)


def random_column(seed, n_rows=64, scale=2.0):
    return scale * np.random.default_rng(seed).standard_normal(n_rows)


# ---------------------------------------------------------------- exact invariants

@pytest.mark.parametrize("row", [0, 1, 17, 32, 62, 63])
@pytest.mark.parametrize("const", [math.log(4.0), -1.25, 0.0])
def test_constant_column_reproduces_the_constant_exactly(row, const):
    comps = simulate_columns(np.full((1, 64), const), row, GEOM.dz)[0]
    assert comps[:10].tolist() == [const] * 10
    assert comps[10] == 0.0
    assert comps[11] == 0.0 and comps[12] == 0.0


@pytest.mark.parametrize("row", [0, 1, 13, 31, 32, 50, 63])
def test_vertical_mirror_swaps_up_and_down_exactly(row):
    v = random_column(row + 100)
    a = simulate_columns(v[None, :], row, GEOM.dz)[0]
    b = simulate_columns(v[::-1][None, :], 63 - row, GEOM.dz)[0]
    assert np.array_equal(b[0:3], a[0:3])
    assert np.array_equal(b[3:6], a[6:9])
    assert np.array_equal(b[6:9], a[3:6])
    assert b[9] == a[9]
    assert b[10] == -a[10]
    assert np.array_equal(b[11:13], a[11:13])


@pytest.mark.parametrize("row", [0, 5, 32, 63])
def test_adding_a_constant_shifts_means_and_fixes_the_rest_exactly(row):
    # dyadic cell values with a zero at the tool cell keep every sum exact,
    # so the shift property can be asserted bit for bit
    rng = np.random.default_rng(row + 7)
    v = rng.integers(-32, 33, size=64) / 16.0
    v[row] = 0.0
    a = 13.0 / 16.0
    base = simulate_columns(v[None, :], row, GEOM.dz)[0]
    shifted = simulate_columns((v + a)[None, :], row, GEOM.dz)[0]
    assert np.array_equal(shifted[:10], base[:10] + a)
    assert np.array_equal(shifted[10:], base[10:])


def test_two_layer_column_separates_up_from_down():
    # channel above the tool, shale from the tool down
    v = np.where(np.arange(64) < 32, LN[Facies.CHANNEL], LN[Facies.SHALE])
    comps = simulate_columns(v[None, :], 32, GEOM.dz)[0]
    c4, c5, c6 = comps[3:6]
    c7, c8, c9 = comps[6:9]
    assert c5 > c8
    assert c4 > c7 and c6 > c9
    assert comps[9] == LN[Facies.SHALE]
    assert comps[10] < 0.0  # resistivity falls with depth here
    assert comps[11] > 0.0 and comps[12] > 0.0


def test_finite_differences_match_the_analytic_jacobian():
    v = random_column(42)
    field = field_from_column(v)
    pos = ToolPosition(0, 20)
    grad = em_gradient(field, pos)

    eps = 1e-6
    fd = np.empty_like(grad)
    for j in range(64):
        vp, vm = v.copy(), v.copy()
        vp[j] += eps
        vm[j] -= eps
        cp = simulate_columns(vp[None, :], pos.row, GEOM.dz)[0]
        cm = simulate_columns(vm[None, :], pos.row, GEOM.dz)[0]
        fd[:, j] = (cp - cm) / (2.0 * eps)

    for i in range(13):
        err = np.linalg.norm(fd[i] - grad[i])
        assert err < 1e-3 * np.linalg.norm(grad[i]), f"component {i + 1}"


@pytest.mark.parametrize("row", [0, 63])
def test_jacobian_at_edge_rows(row):
    v = random_column(row)
    field = field_from_column(v)
    grad = em_gradient(field, ToolPosition(0, row))
    eps = 1e-6
    for j in (0, 1, 62, 63):
        vp, vm = v.copy(), v.copy()
        vp[j] += eps
        vm[j] -= eps
        fd = (simulate_columns(vp[None, :], row, GEOM.dz)[0]
              - simulate_columns(vm[None, :], row, GEOM.dz)[0]) / (2.0 * eps)
        assert np.allclose(fd, grad[:, j], atol=1e-7)


# ---------------------------------------------------------------- structure

def test_simulate_em_reads_the_right_column():
    rng = np.random.default_rng(1)
    values = rng.standard_normal((64, 64))
    field = LogResistivityField(GEOM, values)
    pos = ToolPosition(17, 40)
    log = simulate_em(field, pos)
    direct = simulate_columns(values[:, 17][None, :], 40, GEOM.dz)[0]
    assert np.array_equal(log.components, direct)
    assert log.position == pos


def test_simulate_em_rejects_out_of_bounds():
    field = field_from_column(np.zeros(64))
    with pytest.raises(ValueError):
        simulate_em(field, ToolPosition(64, 0))
    with pytest.raises(ValueError):
        simulate_em(field, ToolPosition(0, -1))


def test_ensemble_simulation_matches_member_wise_calls():
    rng = np.random.default_rng(8)
    fields = [LogResistivityField(GEOM, rng.standard_normal((64, 64))) for _ in range(5)]
    pos = ToolPosition(3, 12)
    batch = simulate_ensemble(fields, pos)
    assert len(batch) == 5
    for f, log in zip(fields, batch):
        assert np.array_equal(log.components, simulate_em(f, pos).components)


def test_batch_kernel_is_batch_size_invariant():
    cols = np.random.default_rng(2).standard_normal((7, 64))
    full = simulate_columns(cols, 30, GEOM.dz)
    for i in range(7):
        single = simulate_columns(cols[i][None, :], 30, GEOM.dz)[0]
        assert np.array_equal(single, full[i])


def test_em_log_validation():
    with pytest.raises(ValueError):
        EMLog(np.zeros(12), ToolPosition(0, 0))
    bad = np.zeros(13)
    bad[4] = np.inf
    with pytest.raises(ValueError):
        EMLog(bad, ToolPosition(0, 0))


@given(data=st.data())
@settings(max_examples=40, deadline=None)
def test_mean_components_stay_inside_the_column_range(data):
    n_rows = data.draw(st.integers(2, 32))
    row = data.draw(st.integers(0, n_rows - 1))
    column = np.array(data.draw(st.lists(
        st.floats(-6.0, 6.0, allow_nan=False), min_size=n_rows, max_size=n_rows)))
    comps = simulate_columns(column[None, :], row, 0.5)[0]
    assert np.all(np.isfinite(comps))
    lo, hi = column.min(), column.max()
    assert np.all(comps[:10] >= lo - 1e-9)
    assert np.all(comps[:10] <= hi + 1e-9)
    assert comps[11] >= 0.0 and comps[12] >= 0.0


# ---------------------------------------------------------------- boundary profile

def shale_channel_column(channel_rows):
    cells = np.full((64, 64), int(Facies.SHALE), dtype=np.int8)
    for r in channel_rows:
        cells[r, :] = int(Facies.CHANNEL)
    labels = FaciesGrid(GEOM, cells)
    values = np.where(cells == int(Facies.CHANNEL), LN[Facies.CHANNEL], LN[Facies.SHALE])
    return LogResistivityField(GEOM, values.astype(float)), labels


def test_uniform_column_has_no_boundaries():
    field, labels = shale_channel_column([])
    prof = boundary_profile(field, labels, ToolPosition(0, 31))
    assert prof.up == ()
    assert prof.down == ()
    assert prof.local == pytest.approx(math.log(4.0), abs=1e-15)


def test_boundary_two_cells_above_the_tool():
    # channel occupies rows 0..18, tool sits 2 cells below the contact
    field, labels = shale_channel_column(range(0, 19))
    prof = boundary_profile(field, labels, ToolPosition(0, 20))
    assert prof.up == ((1.0, pytest.approx(math.log(171.0))),)
    assert prof.down == ()


def test_boundary_below_and_layer_mean():
    field, labels = shale_channel_column(range(30, 34))
    prof = boundary_profile(field, labels, ToolPosition(5, 27))
    assert len(prof.down) == 2
    d0, v0 = prof.down[0]
    assert d0 == pytest.approx(1.5)          # rows 27 -> 30
    assert v0 == pytest.approx(math.log(171.0))
    d1, v1 = prof.down[1]
    assert d1 == pytest.approx(3.5)          # first shale cell below the body, row 34
    assert v1 == pytest.approx(math.log(4.0))


def test_alternating_column_caps_at_three_per_side():
    cells = np.tile(np.array([0, 2] * 32, dtype=np.int8)[:, None], (1, 64))
    labels = FaciesGrid(GEOM, cells)
    values = np.where(cells == 0, LN[Facies.CHANNEL], LN[Facies.SHALE]).astype(float)
    field = LogResistivityField(GEOM, values)
    prof = boundary_profile(field, labels, ToolPosition(0, 31))
    assert len(prof.up) == 3
    assert len(prof.down) == 3
    assert [d for d, _ in prof.up] == [0.5, 1.0, 1.5]
    assert [d for d, _ in prof.down] == [0.5, 1.0, 1.5]


def test_boundary_distances_strictly_increase():
    field, labels = shale_channel_column(list(range(10, 14)) + list(range(40, 44)))
    prof = boundary_profile(field, labels, ToolPosition(0, 25))
    for pairs in (prof.up, prof.down):
        dists = [d for d, _ in pairs]
        assert dists == sorted(dists)
        assert len(set(dists)) == len(dists)
        assert all(0 < d <= 32.0 for d in dists)


def test_boundary_profile_validation():
    with pytest.raises(ValueError):
        BoundaryProfile(up=((1.0, 0.0), (1.0, 0.0)), down=(), local=0.0)
    with pytest.raises(ValueError):
        BoundaryProfile(up=((-0.5, 0.0),), down=(), local=0.0)
    with pytest.raises(ValueError):
        BoundaryProfile(up=tuple((float(i), 0.0) for i in range(1, 5)), down=(), local=0.0)


# ---------------------------------------------------------------- export

def test_em_log_csv_layout(tmp_path):
    log1 = EMLog(np.arange(13, dtype=float), ToolPosition(0, 32))
    log2 = EMLog(np.arange(13, dtype=float) / 8.0, ToolPosition(1, 33))
    path = tmp_path / "logs.csv"
    write_em_log_csv(path, [(1, log1), (2, log2)])
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "step,col,row," + ",".join(f"c{i}" for i in range(1, 14))
    assert len(lines) == 3
    row2 = lines[2].split(",")
    assert row2[:3] == ["2", "1", "33"]
    assert float(row2[5]) == 0.25
