"""Velocity-gait map construction and selection queries.

For every (gait, velocity) cell the builder runs a batch of independent
trials, averages per-trial mean CoT/STB with failure clamping, and records
the blend-minimizing gait per stability ratio c. Because the blend is affine
in c, per-trial CoT/STB are computed once and reused across all c values.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .gaits import GaitName, standard_gait
from .metrics import COT_BOUND, STB_BOUND, StbWeights, stride_metrics
from .robot import RobotParams, Terrain
from .simulation import SimConfig, run_trial

ALL_GAITS = tuple(GaitName)


@dataclass(frozen=True)
class MapConfig:
    """Sweep grid and batch sizes for map construction."""

    v_min: float = 0.3
    v_max: float = 2.7
    v_step: float = 0.2
    c_values: tuple[float, ...] = (0.1, 0.5, 0.9)
    trials: int = 5
    strides: int = 10  # metered strides per trial (after warm-up)
    warmup_strides: int = 3
    gaits: tuple[GaitName, ...] = ALL_GAITS

    def velocity_grid(self) -> tuple[float, ...]:
        if self.v_max < self.v_min or self.v_step <= 0.0:
            raise ValueError("malformed velocity grid")
        count = int(round((self.v_max - self.v_min) / self.v_step)) + 1
        return tuple(self.v_min + i * self.v_step for i in range(count))

    def validate(self) -> None:
        if not self.gaits:
            raise ValueError("candidate gait set must not be empty")
        if self.trials < 1 or self.strides < 1:
            raise ValueError("trials and strides must be at least 1")
        if any(not 0.0 <= c <= 1.0 for c in self.c_values):
            raise ValueError("c values must lie in [0, 1]")
        self.velocity_grid()


@dataclass
class GaitCellStats:
    """Across-trial means for one (gait, velocity) cell."""

    cot: float
    stb: float
    successes: int
    trials: int

    def j_e(self, c: float) -> float:
        return c * self.stb + (1.0 - c) * self.cot


@dataclass
class MapCell:
    """Winning gait and its statistics for one (terrain, c, velocity) bin."""

    gait: GaitName
    j_e: float
    cot: float
    stb: float
    successes: int
    trials: int


def _tie_break_key(gait: GaitName, stats: GaitCellStats) -> tuple:
    beta = standard_gait(gait).beta
    return (-stats.successes, abs(beta - 0.5), int(gait))


@dataclass
class VelocityGaitMap:
    """Lookup from (terrain id, c, velocity bin) to the selected gait."""

    c_values: tuple[float, ...]
    v_grids: dict[str, tuple[float, ...]] = field(default_factory=dict)
    cells: dict[tuple[str, float, int], MapCell] = field(default_factory=dict)
    gait_table: dict[tuple[str, int, int], GaitCellStats] = field(default_factory=dict)
    # raw per-trial metric records keyed by (terrain, gait, velocity, trial);
    # not persisted in the map file, exported separately on request
    trial_records: list[dict] = field(default_factory=list)

    @property
    def terrain_ids(self) -> tuple[str, ...]:
        return tuple(self.v_grids.keys())

    def covers(self, terrain_id: str) -> bool:
        return terrain_id in self.v_grids

    def merge(self, other: "VelocityGaitMap") -> "VelocityGaitMap":
        if tuple(other.c_values) != tuple(self.c_values):
            raise ValueError("cannot merge maps with different c grids")
        merged = VelocityGaitMap(
            c_values=self.c_values,
            v_grids={**self.v_grids, **other.v_grids},
            cells={**self.cells, **other.cells},
            gait_table={**self.gait_table, **other.gait_table},
            trial_records=self.trial_records + other.trial_records,
        )
        return merged

    def bin_index(self, terrain_id: str, velocity: float) -> tuple[int, bool]:
        """Nearest bin (round half up); flags when the query was clamped."""
        if terrain_id not in self.v_grids:
            raise ValueError(f"map does not cover terrain {terrain_id!r}")
        grid = self.v_grids[terrain_id]
        if len(grid) == 1:
            idx = 0
        else:
            step = grid[1] - grid[0]
            idx = int(np.floor((velocity - grid[0]) / step + 0.5))
        clamped = idx < 0 or idx >= len(grid)
        return min(max(idx, 0), len(grid) - 1), clamped

    def cell(self, terrain_id: str, velocity: float, c: float) -> tuple[MapCell, bool]:
        if c not in self.c_values:
            raise ValueError(f"c={c} not present in the map (has {self.c_values})")
        idx, clamped = self.bin_index(terrain_id, velocity)
        return self.cells[(terrain_id, c, idx)], clamped

    def to_json_dict(self) -> dict:
        terrains = []
        for tid in self.terrain_ids:
            grid = self.v_grids[tid]
            cells = []
            for c in self.c_values:
                for i, v in enumerate(grid):
                    cell = self.cells[(tid, c, i)]
                    cells.append(
                        {
                            "v": v,
                            "c": c,
                            "gait": cell.gait.label,
                            "j_e": cell.j_e,
                            "cot": cell.cot,
                            "stb": cell.stb,
                            "success": cell.successes,
                            "trials": cell.trials,
                        }
                    )
            table = []
            for gait in GaitName:
                for i, v in enumerate(grid):
                    key = (tid, int(gait), i)
                    if key not in self.gait_table:
                        continue
                    stats = self.gait_table[key]
                    table.append(
                        {
                            "gait": gait.label,
                            "v": v,
                            "cot": stats.cot,
                            "stb": stats.stb,
                            "success": stats.successes,
                            "trials": stats.trials,
                        }
                    )
            terrains.append(
                {"terrain": tid, "c": list(self.c_values), "v_grid": list(grid),
                 "cells": cells, "gait_table": table}
            )
        return {"terrains": terrains}

    @classmethod
    def from_json_dict(cls, data: dict) -> "VelocityGaitMap":
        terrains = data["terrains"]
        c_values = tuple(terrains[0]["c"]) if terrains else ()
        out = cls(c_values=c_values)
        for block in terrains:
            tid = block["terrain"]
            grid = tuple(float(v) for v in block["v_grid"])
            out.v_grids[tid] = grid
            index = {v: i for i, v in enumerate(grid)}
            for cell in block["cells"]:
                out.cells[(tid, float(cell["c"]), index[float(cell["v"])])] = MapCell(
                    gait=GaitName.parse(cell["gait"]),
                    j_e=float(cell["j_e"]),
                    cot=float(cell["cot"]),
                    stb=float(cell["stb"]),
                    successes=int(cell["success"]),
                    trials=int(cell["trials"]),
                )
            for row in block.get("gait_table", []):
                gait = GaitName.parse(row["gait"])
                out.gait_table[(tid, int(gait), index[float(row["v"])])] = GaitCellStats(
                    cot=float(row["cot"]),
                    stb=float(row["stb"]),
                    successes=int(row["success"]),
                    trials=int(row["trials"]),
                )
        return out

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1, sort_keys=True)

    @classmethod
    def load(cls, path) -> "VelocityGaitMap":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["terrain", "c", "v", "gait", "j_e", "cot", "stb",
                             "success", "trials"])
            for tid in self.terrain_ids:
                for c in self.c_values:
                    for i, v in enumerate(self.v_grids[tid]):
                        cell = self.cells[(tid, c, i)]
                        writer.writerow(
                            [tid, repr(c), repr(v), cell.gait.label, repr(cell.j_e),
                             repr(cell.cot), repr(cell.stb), cell.successes,
                             cell.trials]
                        )


def simulation_trial_runner(
    terrain: Terrain,
    map_cfg: MapConfig,
    sim_cfg: SimConfig,
    params: RobotParams,
    seed: int,
    weights: StbWeights | None = None,
):
    """Default per-trial metric source: run the simulator and average strides."""
    weights = weights or StbWeights()
    period = standard_gait(GaitName.TROT).period
    duration = (map_cfg.warmup_strides + map_cfg.strides + 1) * period

    def runner(gait: GaitName, velocity: float, trial_idx: int):
        rng = np.random.default_rng((seed, int(gait), int(round(velocity * 1000)), trial_idx))
        pattern = standard_gait(gait, period)
        result = run_trial(
            pattern, velocity, terrain, duration, sim_cfg, params, rng=rng
        )
        usable = [
            s
            for s in result.strides[map_cfg.warmup_strides:]
            if s.complete and not s.failed
        ]
        usable = usable[: map_cfg.strides]
        if result.failed or not usable:
            return COT_BOUND, STB_BOUND, True
        cots, stbs = [], []
        for log in usable:
            m = stride_metrics(log, terrain, params.mass, (), weights,
                               params.gravity)
            cots.append(m.cot)
            stbs.append(m.stb)
        return float(np.mean(cots)), float(np.mean(stbs)), False

    return runner


def _cell_stats(
    trial_runner, gait: GaitName, velocity: float, trials: int
) -> tuple[GaitCellStats, list[tuple[float, float, bool]]]:
    records = [trial_runner(gait, velocity, trial) for trial in range(trials)]
    cots = [r[0] for r in records]
    stbs = [r[1] for r in records]
    successes = sum(0 if r[2] else 1 for r in records)
    stats = GaitCellStats(
        cot=float(np.mean(cots)),
        stb=float(np.mean(stbs)),
        successes=successes,
        trials=trials,
    )
    return stats, records


def _cell_worker(payload):
    terrain, map_cfg, sim_cfg, params, seed, gait, velocity = payload
    runner = simulation_trial_runner(terrain, map_cfg, sim_cfg, params, seed)
    stats, records = _cell_stats(runner, gait, velocity, map_cfg.trials)
    return int(gait), velocity, stats, records


def build_map(
    terrain: Terrain,
    map_cfg: MapConfig,
    sim_cfg: SimConfig | None = None,
    params: RobotParams | None = None,
    *,
    seed: int = 0,
    terrain_id: str | None = None,
    trial_runner=None,
    jobs: int = 1,
) -> VelocityGaitMap:
    """Sweep (gait, velocity) cells and select the blend-minimizing gait per c.

    ``trial_runner(gait, velocity, trial_idx) -> (cot, stb, failed)`` may be
    injected for testing; the default runs the simulator. ``jobs`` > 1 fans
    the independent cells out to worker processes; per-trial seeding depends
    only on the cell key, so the result is identical either way.
    """
    map_cfg.validate()
    sim_cfg = sim_cfg or SimConfig()
    params = params or RobotParams()
    tid = terrain_id or terrain.name
    grid = map_cfg.velocity_grid()

    all_stats: dict[tuple[GaitName, int], GaitCellStats] = {}
    trial_records: list[dict] = []

    def _record(gait, velocity, records):
        for trial, (c_val, s_val, failed) in enumerate(records):
            trial_records.append(
                {"terrain": tid, "gait": gait.label, "v": velocity,
                 "trial": trial, "cot": c_val, "stb": s_val,
                 "failed": bool(failed)}
            )

    if trial_runner is None and jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        payloads = [
            (terrain, map_cfg, sim_cfg, params, seed, gait, velocity)
            for gait in map_cfg.gaits
            for velocity in grid
        ]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_cell_worker, payloads))
        v_index = {v: i for i, v in enumerate(grid)}
        for gait_code, velocity, stats, records in results:
            all_stats[(GaitName(gait_code), v_index[velocity])] = stats
            _record(GaitName(gait_code), velocity, records)
    else:
        if trial_runner is None:
            trial_runner = simulation_trial_runner(
                terrain, map_cfg, sim_cfg, params, seed
            )
        for gait in map_cfg.gaits:
            for i, velocity in enumerate(grid):
                stats, records = _cell_stats(
                    trial_runner, gait, velocity, map_cfg.trials
                )
                all_stats[(gait, i)] = stats
                _record(gait, velocity, records)

    out = VelocityGaitMap(c_values=tuple(map_cfg.c_values))
    out.trial_records = trial_records
    out.v_grids[tid] = grid
    for i, _velocity in enumerate(grid):
        stats = {gait: all_stats[(gait, i)] for gait in map_cfg.gaits}
        for gait in map_cfg.gaits:
            out.gait_table[(tid, int(gait), i)] = stats[gait]
        for c in map_cfg.c_values:
            best = min(
                stats, key=lambda g: (stats[g].j_e(c), _tie_break_key(g, stats[g]))
            )
            cell_stats = stats[best]
            out.cells[(tid, c, i)] = MapCell(
                gait=best,
                j_e=cell_stats.j_e(c),
                cot=cell_stats.cot,
                stb=cell_stats.stb,
                successes=cell_stats.successes,
                trials=cell_stats.trials,
            )
    return out


def select_gait(
    map_: VelocityGaitMap, terrain_id: str, velocity: float, c: float
) -> GaitName:
    """Gait of the nearest velocity bin; clamped queries resolve to the edge."""
    cell, _ = map_.cell(terrain_id, velocity, c)
    return cell.gait


@dataclass(frozen=True)
class HysteresisState:
    """Memory for hysteretic selection: last gait, switch velocity, terrain."""

    previous: GaitName
    anchor_velocity: float
    terrain_id: str | None = None


def select_gait_hysteretic(
    map_: VelocityGaitMap,
    terrain_id: str,
    velocity: float,
    c: float,
    state: HysteresisState,
    band: float = 0.1,
) -> tuple[GaitName, HysteresisState]:
    """Selection with a velocity hysteresis band to suppress chattering.

    Within one terrain the selection only changes when the query velocity
    differs from the velocity of the last switch by more than ``band``; a
    terrain change is a discrete trigger that bypasses the band.
    """
    candidate = select_gait(map_, terrain_id, velocity, c)
    if state.terrain_id is not None and terrain_id != state.terrain_id:
        return candidate, HysteresisState(candidate, velocity, terrain_id)
    if candidate == state.previous:
        return state.previous, replace(state, terrain_id=terrain_id)
    if abs(velocity - state.anchor_velocity) > band:
        return candidate, HysteresisState(candidate, velocity, terrain_id)
    return state.previous, replace(state, terrain_id=terrain_id)
