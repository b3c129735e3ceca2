"""Closed-loop drilling engine.

Owns the synthetic truth, the drill-bit state, noisy measurement
simulation, ensemble assimilation, steering decisions, termination,
scoring, and a replayable newline-delimited JSON history format.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .assimilation import Observation, enkf_analysis, observation_noise_std
from .forward import N_COMPONENTS, simulate_columns, simulate_em
from .generator import (
    LATENT_DIM,
    GeneratorConfig,
    LatentEnsemble,
    generate,
    generate_probs_batch,
    sample_prior,
)
from .geomodel import (
    FaciesGrid,
    GridGeometry,
    LogResistivityField,
    PetrophysicsTable,
    ProbabilityMap,
    ToolPosition,
    facies_argmax,
    load_facies_grid,
)
from .optimizer import (
    ACTION_OFFSETS,
    CostModel,
    Decision,
    admissible_actions,
    decide_with_fan,
    reward_image,
    segment_cost,
    value_matrix,
)

FORMAT_VERSION = "distinguish-run v1"

REASON_STOPPED = "stopped"
REASON_TARGET = "reached target depth"

# Named sub-stream keys hanging off config.seed. Observation noise and the
# analysis perturbations additionally fold in the step index, so every step
# is a pure function of (config, history) and replay is exact.
STREAM_TRUTH = 0
STREAM_PRIOR = 1
STREAM_OBS_NOISE = 2
STREAM_ENKF = 3


def stream_seed(seed: int, key: int, step: int | None = None) -> np.random.SeedSequence:
    """Seed for one named sub-stream of a run."""
    spawn = (key,) if step is None else (key, step)
    return np.random.SeedSequence(seed, spawn_key=spawn)


@dataclass(frozen=True)
class RunConfig:
    """Full specification of one closed-loop run."""

    seed: int = 0
    ensemble_size: int = 250
    noise_relative: float = 0.10
    noise_floor_fraction: float = 0.01
    cost_per_meter: float = 0.02
    inflation: float = 1.0
    max_steps: int | None = None
    start: ToolPosition | None = None
    truth_path: str | None = None
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    geometry: GridGeometry = field(default_factory=GridGeometry)

    def __post_init__(self):
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        if self.ensemble_size < 2:
            raise ValueError("ensemble_size must be at least 2")
        if self.noise_relative <= 0:
            raise ValueError("noise_relative must be positive")
        if self.noise_floor_fraction < 0:
            raise ValueError("noise_floor_fraction must be nonnegative")
        if self.cost_per_meter < 0:
            raise ValueError("cost_per_meter must be nonnegative")
        if self.inflation <= 0:
            raise ValueError("inflation must be positive")
        if self.max_steps is not None and self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.start is not None:
            if not self.start.in_bounds(self.geometry):
                raise ValueError("start position is outside the grid")
            if self.start.col >= self.geometry.n_cols - 1:
                raise ValueError("start must lie left of the last column")

    @property
    def resolved_start(self) -> ToolPosition:
        if self.start is not None:
            return self.start
        return ToolPosition(0, self.geometry.n_rows // 2)

    @property
    def resolved_max_steps(self) -> int:
        if self.max_steps is not None:
            return self.max_steps
        return self.geometry.n_cols - 1

    def cost_model(self) -> CostModel:
        return CostModel.for_geometry(self.geometry, self.cost_per_meter)


def config_to_dict(cfg: RunConfig) -> dict:
    start = cfg.resolved_start
    return {
        "seed": cfg.seed,
        "ensemble_size": cfg.ensemble_size,
        "noise_relative": cfg.noise_relative,
        "noise_floor_fraction": cfg.noise_floor_fraction,
        "cost_per_meter": cfg.cost_per_meter,
        "inflation": cfg.inflation,
        "max_steps": cfg.resolved_max_steps,
        "start": [start.col, start.row],
        "truth_path": cfg.truth_path,
        "generator": dataclasses.asdict(cfg.generator),
        "geometry": dataclasses.asdict(cfg.geometry),
    }


def _fields_from_dict(cls, d: dict, what: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(d) - names
    if unknown:
        raise ValueError(f"unknown {what} keys: {sorted(unknown)}")
    kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
    return cls(**kwargs)


def config_from_dict(d: dict) -> RunConfig:
    if not isinstance(d, dict):
        raise ValueError("config must be a JSON object")
    d = {k: v for k, v in d.items() if k not in ("format", "meta")}
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kwargs = dict(d)
    if isinstance(kwargs.get("generator"), dict):
        kwargs["generator"] = _fields_from_dict(GeneratorConfig, kwargs["generator"], "generator")
    if isinstance(kwargs.get("geometry"), dict):
        kwargs["geometry"] = _fields_from_dict(GridGeometry, kwargs["geometry"], "geometry")
    start = kwargs.get("start")
    if start is not None and not isinstance(start, ToolPosition):
        if not (isinstance(start, (list, tuple)) and len(start) == 2):
            raise ValueError("start must be a [col, row] pair")
        kwargs["start"] = ToolPosition(int(start[0]), int(start[1]))
    try:
        return RunConfig(**kwargs)
    except TypeError as e:
        raise ValueError(f"invalid config: {e}") from None


@dataclass(frozen=True)
class StepRecord:
    """Everything one loop iteration produced."""

    step_index: int
    observation: Observation
    report: AnalysisReport
    decision: Decision
    applied: str
    map_digest: str
    fan_digest: str
    elapsed_s: float


@dataclass(eq=False)
class RunState:
    """Mutable state of one run; step() is the only writer."""

    config: RunConfig
    truth: FaciesGrid
    truth_field: LogResistivityField
    ensemble: LatentEnsemble
    bit: ToolPosition
    drilled_path: list[ToolPosition]
    step_index: int = 0
    terminated: bool = False
    termination_reason: str | None = None
    history: list[StepRecord] = field(default_factory=list)
    # maps[k] is the mean sand-probability map after k steps; maps[0] is the
    # prior. fans[k] holds the per-member (length, 2) [col, row] paths of the
    # step-k trajectory fan.
    maps: list[ProbabilityMap] = field(default_factory=list)
    fans: list[list[np.ndarray]] = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    member_probs: np.ndarray | None = None


def _truth_grid(cfg: RunConfig) -> FaciesGrid:
    if cfg.truth_path is not None:
        grid = load_facies_grid(cfg.truth_path)
        if grid.geometry != cfg.geometry:
            raise ValueError("truth grid geometry does not match the run geometry")
        return grid
    rng = np.random.default_rng(stream_seed(cfg.seed, STREAM_TRUTH))
    z = rng.standard_normal(LATENT_DIM)
    return facies_argmax(generate(z, cfg.generator, cfg.geometry))


def _field_from_grid(grid: FaciesGrid, table: PetrophysicsTable) -> LogResistivityField:
    values = table.log_resistivity_array()[grid.cells]
    return LogResistivityField(grid.geometry, values)


def _sand_map(geometry: GridGeometry, probs: np.ndarray) -> ProbabilityMap:
    sand = probs[..., 0] + probs[..., 1]
    mean = np.clip(sand.mean(axis=0), 0.0, 1.0).astype(np.float32)
    return ProbabilityMap(geometry, mean)


def _predicted_logs(probs: np.ndarray, bit: ToolPosition, dz: float,
                    logres: np.ndarray) -> np.ndarray:
    columns = probs[:, :, bit.col, :].astype(np.float64) @ logres
    return simulate_columns(columns, bit.row, dz)


def _map_digest(pm: ProbabilityMap) -> str:
    data = np.ascontiguousarray(pm.values, dtype=np.float32)
    return hashlib.sha256(data.tobytes()).hexdigest()


def _fan_digest(fan_arrays: list[np.ndarray]) -> str:
    payload = json.dumps([a.tolist() for a in fan_arrays], separators=(",", ":"))
    return hashlib.sha256(payload.encode("ascii")).hexdigest()


def init_run(cfg: RunConfig) -> RunState:
    """Materialize truth, sample the prior, and park the bit at the start."""
    table = PetrophysicsTable()
    truth = _truth_grid(cfg)
    truth_field = _field_from_grid(truth, table)
    ensemble = sample_prior(cfg.ensemble_size, stream_seed(cfg.seed, STREAM_PRIOR))
    probs = generate_probs_batch(ensemble.members, cfg.generator, cfg.geometry)
    start = cfg.resolved_start
    state = RunState(cfg, truth, truth_field, ensemble, start, [start])
    state.member_probs = probs
    state.maps.append(_sand_map(cfg.geometry, probs))
    return state


def step(state: RunState, override: str | None = None) -> StepRecord:
    """One loop iteration: measure, assimilate, decide, advance.

    override, when given, replaces the recommendation with the operator's
    action. An inadmissible override raises without touching the state.
    """
    if state.terminated:
        raise ValueError("run is terminated")
    cfg = state.config
    geo = cfg.geometry
    bit = state.bit
    if override is not None and override not in admissible_actions(bit, geo):
        raise ValueError(f"override {override!r} is not admissible at ({bit.col}, {bit.row})")
    t0 = time.perf_counter()
    table = PetrophysicsTable()
    logres = table.log_resistivity_array()
    k = state.step_index

    # measure the truth at the bit, corrupt multiplicatively
    g = simulate_em(state.truth_field, bit).components
    rng = np.random.default_rng(stream_seed(cfg.seed, STREAM_OBS_NOISE, k))
    d = g * (1.0 + cfg.noise_relative * rng.standard_normal(N_COMPONENTS))
    noise_std = observation_noise_std(d, cfg.noise_relative, cfg.noise_floor_fraction)
    obs = Observation(d, noise_std, bit)

    # predicted logs from the current member images
    probs = state.member_probs
    if probs is None:
        probs = generate_probs_batch(state.ensemble.members, cfg.generator, geo)
    G = _predicted_logs(probs, bit, geo.dz, logres)

    posterior, report = enkf_analysis(state.ensemble, G, obs,
                                      stream_seed(cfg.seed, STREAM_ENKF, k), cfg.inflation)

    # regenerate member images from the updated latent vectors; their fit
    # to the data shows up as the next step's prior misfit
    probs_post = generate_probs_batch(posterior.members, cfg.generator, geo)

    cells = np.argmax(probs_post, axis=-1).astype(np.int8)
    grids = [FaciesGrid(geo, cells[i]) for i in range(cells.shape[0])]
    decision, fan = decide_with_fan(bit, grids, cfg.cost_model(), table)

    applied = override if override is not None else decision.action
    if applied == "stop":
        state.terminated = True
        state.termination_reason = REASON_STOPPED
    else:
        new_bit = ToolPosition(bit.col + 1, bit.row + ACTION_OFFSETS[applied])
        state.drilled_path.append(new_bit)
        state.bit = new_bit
        if new_bit.col == geo.n_cols - 1 or k + 1 >= cfg.resolved_max_steps:
            state.terminated = True
            state.termination_reason = REASON_TARGET

    pm = _sand_map(geo, probs_post)
    fan_arrays = [np.array([[p.col, p.row] for p in path], dtype=np.int32).reshape(-1, 2)
                  for path in fan]
    record = StepRecord(k, obs, report, decision, applied,
                        _map_digest(pm), _fan_digest(fan_arrays),
                        time.perf_counter() - t0)
    state.ensemble = posterior
    state.member_probs = probs_post
    state.maps.append(pm)
    state.fans.append(fan_arrays)
    state.history.append(record)
    state.step_index = k + 1
    return record


def run_to_completion(state: RunState) -> RunState:
    """Accept every recommendation until the run terminates."""
    while not state.terminated:
        step(state)
    return state


def score(state: RunState) -> dict:
    """Benchmark scores of a terminated run, all in reward units.

    achieved sums -segment_cost + truth reward over the drilled segments;
    oracle is the DP optimum on the truth from the start cell; the straight
    baseline holds the start row to the last column.
    """
    if not state.terminated:
        raise ValueError("run must be terminated before scoring")
    cfg = state.config
    cost = cfg.cost_model()
    R = reward_image(state.truth)
    achieved = 0.0
    for a, b in zip(state.drilled_path, state.drilled_path[1:]):
        achieved += -segment_cost(a.row, b.row, cost) + R.R[b.row, b.col]
    start = cfg.resolved_start
    oracle = float(value_matrix(R, cost).V[start.row, start.col])
    straight = 0.0
    for c in range(start.col + 1, cfg.geometry.n_cols):
        straight += -cost.hold_cost + R.R[start.row, c]
    return {"achieved": float(achieved), "oracle": oracle,
            "straight_baseline": float(straight)}


def misfit_series(state: RunState) -> list[dict]:
    return [{"step": r.step_index,
             "prior": float(r.report.prior_misfit),
             "posterior": float(r.report.posterior_misfit)}
            for r in state.history]


def drilled_path_at(state: RunState, upto: int) -> list[ToolPosition]:
    """Bit positions after the first upto steps; upto=0 gives just the start."""
    pos = state.drilled_path[0]
    path = [pos]
    for rec in state.history[:upto]:
        if rec.applied == "stop":
            break
        pos = ToolPosition(pos.col + 1, pos.row + ACTION_OFFSETS[rec.applied])
        path.append(pos)
    return path


def record_to_dict(rec: StepRecord) -> dict:
    obs = rec.observation
    return {
        "step": rec.step_index,
        "bit": [obs.position.col, obs.position.row],
        "observation": {
            "d": [float(v) for v in np.asarray(obs.d)],
            "noise_std": [float(v) for v in np.asarray(obs.noise_std)],
        },
        "report": rec.report.as_dict(),
        "decision": {
            "action": rec.decision.action,
            "scores": {name: float(v) for name, v in rec.decision.scores.items()},
            "chosen_value": float(rec.decision.chosen_value),
        },
        "applied": rec.applied,
        "map_digest": rec.map_digest,
        "fan_digest": rec.fan_digest,
        "meta": {"elapsed_s": rec.elapsed_s},
    }


def history_text(state: RunState) -> str:
    """The run as newline-delimited JSON: config line, then one record per step."""
    header = {"format": FORMAT_VERSION, **config_to_dict(state.config)}
    if state.meta:
        header["meta"] = dict(state.meta)
    lines = [json.dumps(header, separators=(",", ":"))]
    for rec in state.history:
        lines.append(json.dumps(record_to_dict(rec), separators=(",", ":")))
    return "\n".join(lines) + "\n"


def save_run(state: RunState, path: str | Path) -> None:
    Path(path).write_text(history_text(state), encoding="utf-8")


def canonical_history(text: str) -> str:
    """History text with every meta block dropped, for determinism checks."""
    lines = []
    for line in text.splitlines():
        if not line:
            continue
        obj = json.loads(line)
        obj.pop("meta", None)
        lines.append(json.dumps(obj, separators=(",", ":")))
    return "\n".join(lines) + "\n"


def _without_meta(d: dict) -> dict:
    return {k: v for k, v in d.items() if k != "meta"}


def load_run(path: str | Path) -> RunState:
    """Rebuild a RunState by replaying a saved history against the engine.

    Every replayed record must match the stored one bit for bit (meta
    timing aside); any divergence or malformed line raises ValueError.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln]
    if not lines:
        raise ValueError("empty run file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise ValueError(f"corrupt run file: {e}") from None
    if not isinstance(header, dict) or header.get("format") != FORMAT_VERSION:
        raise ValueError("unsupported run file format")
    cfg = config_from_dict(header)
    state = init_run(cfg)
    state.meta = dict(header.get("meta", {}))
    for line in lines[1:]:
        try:
            stored = json.loads(line)
        except json.JSONDecodeError as e:
            raise ValueError(f"corrupt run file: {e}") from None
        if not isinstance(stored, dict) or "applied" not in stored:
            raise ValueError("corrupt run file: malformed step record")
        if state.terminated:
            raise ValueError("history continues past termination")
        rec = step(state, override=stored["applied"])
        if _without_meta(record_to_dict(rec)) != _without_meta(stored):
            raise ValueError(f"step {rec.step_index} does not replay")
        elapsed = stored.get("meta", {}).get("elapsed_s")
        if elapsed is not None:
            state.history[-1] = replace(rec, elapsed_s=elapsed)
    return state
