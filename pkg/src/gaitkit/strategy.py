"""Full multi-gait strategy execution and the baseline comparison harness.

Three strategy flavors: a fixed gait, a per-velocity fixed gait chosen from a
map at trial start (no in-run switching), and the full multi-gait strategy
that re-selects at stride boundaries from the terrain segment under the body
and fires FSM events to transition while moving.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .gaits import GaitName, standard_gait
from .mapping import (
    HysteresisState,
    VelocityGaitMap,
    select_gait,
    select_gait_hysteretic,
)
from .metrics import COT_BOUND, STB_BOUND, StbWeights, stride_metrics
from .robot import RobotParams, Terrain
from .simulation import SimConfig, TrialResult, run_trial
from .transitions import GaitFsm


class StrategyError(ValueError):
    pass


@dataclass(frozen=True)
class FixedGait:
    """Always the same gait, never switching."""

    gait: GaitName

    @property
    def label(self) -> str:
        return f"fixed:{self.gait.label}"


@dataclass(frozen=True)
class PerVelocityFixed:
    """Gait chosen once per trial from the map at the commanded velocity."""

    map: VelocityGaitMap
    c: float

    @property
    def label(self) -> str:
        return f"per-velocity:c={self.c:g}"


@dataclass(frozen=True)
class MultiGait:
    """Terrain-triggered selection with FSM transitions while moving."""

    map: VelocityGaitMap
    c: float
    hysteresis_band: float = 0.1

    @property
    def label(self) -> str:
        return f"multi:c={self.c:g}"


Strategy = FixedGait | PerVelocityFixed | MultiGait


def _check_coverage(strategy: Strategy, terrain: Terrain) -> None:
    if isinstance(strategy, FixedGait):
        return
    if isinstance(strategy, PerVelocityFixed):
        start_kind = terrain.segment_at(0.0).kind
        if not strategy.map.covers(start_kind):
            raise StrategyError(f"map does not cover starting terrain {start_kind!r}")
        return
    missing = [k for k in terrain.kinds if not strategy.map.covers(k)]
    if missing:
        raise StrategyError(f"map does not cover terrain segment kinds {missing}")


def _standing_state(terrain: Terrain, start_x: float, sim_cfg: SimConfig,
                    rng: np.random.Generator):
    from .simulation import BodyState

    jitter = rng.uniform(-1.0, 1.0, size=2) * sim_cfg.attitude_jitter
    samp = terrain.query(start_x)
    return BodyState(
        position=np.array([start_x, 0.0, samp.height + sim_cfg.nominal_height]),
        velocity=np.zeros(3),
        euler=np.array([jitter[0], samp.incline + jitter[1], 0.0]),
        omega=np.zeros(3),
    )


def run_strategy(
    strategy: Strategy,
    terrain: Terrain,
    v_cmd: float,
    sim_cfg: SimConfig | None = None,
    params: RobotParams | None = None,
    *,
    duration: float = 30.0,
    seed: int = 0,
    rng: np.random.Generator | None = None,
    start_x: float = 0.0,
    finish_x: float | None = None,
    switch_time: float = 0.5,
    dwell_strides: int = 1,
    standing_start: bool = True,
) -> TrialResult:
    """Run one full test under a strategy; returns strides plus the event trace.

    Trials begin from rest by default (the speed command then forces the
    robot forward); the multi-gait strategy re-selects at stride boundaries
    from the measured stride speed and the terrain segment under the body,
    so it walks the gait graph as the robot accelerates and the terrain
    changes.
    """
    sim_cfg = sim_cfg or SimConfig()
    params = params or RobotParams()
    _check_coverage(strategy, terrain)
    if finish_x is None:
        finish_x = terrain.course_end
    rng = rng if rng is not None else np.random.default_rng(seed)
    period = standard_gait(GaitName.TROT).period
    initial_state = (
        _standing_state(terrain, start_x, sim_cfg, rng) if standing_start else None
    )

    if isinstance(strategy, FixedGait):
        source = standard_gait(strategy.gait, period)
        return run_trial(
            source, v_cmd, terrain, duration, sim_cfg, params,
            rng=rng, start_x=start_x, finish_x=finish_x,
            initial_state=initial_state,
        )

    if isinstance(strategy, PerVelocityFixed):
        start_kind = terrain.segment_at(start_x).kind
        gait = select_gait(strategy.map, start_kind, v_cmd, strategy.c)
        source = standard_gait(gait, period)
        return run_trial(
            source, v_cmd, terrain, duration, sim_cfg, params,
            rng=rng, start_x=start_x, finish_x=finish_x,
            initial_state=initial_state,
        )

    start_kind = terrain.segment_at(start_x).kind
    v0 = 0.0 if standing_start else v_cmd
    initial = select_gait(strategy.map, start_kind, v0, strategy.c)
    fsm = GaitFsm(initial, period=period, switch_time=switch_time,
                  dwell_strides=dwell_strides)
    hyst = HysteresisState(initial, v0, start_kind)
    prev_mark = [0.0, np.array([start_x, 0.0, 0.0])]

    def on_stride(supplier, stride_idx, body, t):
        nonlocal hyst
        dt = t - prev_mark[0]
        v_meas = float(np.linalg.norm(body.position - prev_mark[1]) / dt) if dt > 0 else 0.0
        prev_mark[0] = t
        prev_mark[1] = body.position.copy()
        kind = terrain.segment_at(
            min(max(body.position[0], terrain.start_x), terrain.end_x)
        ).kind
        desired, hyst = select_gait_hysteretic(
            strategy.map, kind, min(v_meas, v_cmd), strategy.c, hyst,
            strategy.hysteresis_band,
        )
        if desired != supplier.fsm.current and not supplier.fsm.busy:
            supplier.fsm.request(desired)

    prev_mark[1] = np.array([start_x, 0.0, terrain.query(start_x).height
                             + sim_cfg.nominal_height])

    return run_trial(
        fsm, v_cmd, terrain, duration, sim_cfg, params,
        rng=rng, start_x=start_x, finish_x=finish_x, on_stride=on_stride,
        initial_state=initial_state,
    )


@dataclass
class ComparisonRow:
    """Aggregated outcome of one strategy across paired trials."""

    label: str
    cot: float
    stb: float
    successes: int
    trials: int

    @property
    def success_ratio(self) -> float:
        return self.successes / self.trials if self.trials else 0.0


def trial_outcome(
    result: TrialResult,
    terrain: Terrain,
    params: RobotParams,
    weights: StbWeights | None = None,
    warmup_strides: int = 3,
) -> tuple[float, float, bool]:
    """Per-trial (mean CoT, mean STB, failed) with failure clamping."""
    weights = weights or StbWeights()
    failed = result.failed or not result.finished_course
    usable = [
        s for s in result.strides[warmup_strides:] if s.complete and not s.failed
    ]
    if failed or not usable:
        return COT_BOUND, STB_BOUND, True
    cots, stbs = [], []
    for log in usable:
        m = stride_metrics(log, terrain, params.mass, (), weights, params.gravity)
        cots.append(m.cot)
        stbs.append(m.stb)
    return float(np.mean(cots)), float(np.mean(stbs)), False


def compare(
    strategies: list[Strategy],
    terrain: Terrain,
    trials: int,
    velocity_range: tuple[float, float] = (0.3, 2.7),
    seed: int = 0,
    sim_cfg: SimConfig | None = None,
    params: RobotParams | None = None,
    *,
    duration: float = 30.0,
    trial_hook=None,
) -> list[ComparisonRow]:
    """Paired-trial comparison: same velocity and initial-state randomness per
    trial index across all strategies; per-trial metrics clamped on failure.

    ``trial_hook(strategy, velocity, trial_idx) -> (cot, stb, failed)`` can be
    injected for synthetic harnesses.
    """
    if trials < 1:
        raise ValueError("at least one trial is required")
    sim_cfg = sim_cfg or SimConfig()
    params = params or RobotParams()
    v_lo, v_hi = velocity_range
    velocities = [
        float(np.random.default_rng((seed, i, 7)).uniform(v_lo, v_hi))
        for i in range(trials)
    ]

    rows = []
    for strategy in strategies:
        cots, stbs, successes = [], [], 0
        for i, velocity in enumerate(velocities):
            if trial_hook is not None:
                c_val, s_val, failed = trial_hook(strategy, velocity, i)
            else:
                try:
                    rng = np.random.default_rng((seed, i, 11))
                    result = run_strategy(
                        strategy, terrain, velocity, sim_cfg, params,
                        duration=duration, rng=rng,
                    )
                    c_val, s_val, failed = trial_outcome(result, terrain, params)
                except StrategyError:
                    raise  # misconfiguration, not a trial outcome
                except ValueError:
                    c_val, s_val, failed = COT_BOUND, STB_BOUND, True
            cots.append(c_val)
            stbs.append(s_val)
            successes += 0 if failed else 1
        rows.append(
            ComparisonRow(
                label=strategy.label,
                cot=float(np.mean(cots)),
                stb=float(np.mean(stbs)),
                successes=successes,
                trials=trials,
            )
        )
    return rows


def rows_to_csv(rows: list[ComparisonRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", "cot", "stb", "success", "trials"])
        for row in rows:
            writer.writerow(
                [row.label, repr(row.cot), repr(row.stb), row.successes, row.trials]
            )
