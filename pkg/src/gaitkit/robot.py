"""Quadruped morphology, 3-DoF leg kinematics, and piecewise-planar terrain.

Conventions: body frame x forward, y left, z up; world frame shares the axes
with z against gravity. Each leg is an abduction joint rotating the leg plane
about the body x-axis at the hip, followed by thigh and shank pitch joints.
Joint angles (0, 0, 0) put the foot straight below the hip at full extension.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .gaits import LegId

GRAVITY = 9.81


@dataclass(frozen=True, eq=False)
class RobotParams:
    """Morphology and mass properties of the simulated quadruped."""

    mass: float = 12.0
    inertia_diag: tuple[float, float, float] = (0.05, 0.15, 0.18)
    hip_length: float = 0.38  # fore-aft hip spacing [m]
    hip_width: float = 0.30  # lateral hip spacing [m]
    link_hip: float = 0.0  # abduction link lateral offset [m]
    link_thigh: float = 0.22
    link_shank: float = 0.22
    foot_mass: float = 0.3  # effective swing foot mass [m]
    gravity: float = GRAVITY
    n_motors: int = 12

    def __post_init__(self) -> None:
        if self.mass <= 0.0:
            raise ValueError("mass must be positive")
        if any(i <= 0.0 for i in self.inertia_diag):
            raise ValueError("inertia must be positive definite")
        if self.link_thigh <= 0.0 or self.link_shank <= 0.0 or self.link_hip < 0.0:
            raise ValueError("link lengths must be positive (hip offset >= 0)")
        if self.n_motors != 12:
            raise ValueError("the toolkit models 12 motors, 3 per leg")

    @property
    def inertia(self) -> np.ndarray:
        return np.diag(self.inertia_diag)

    @property
    def leg_reach(self) -> float:
        return self.link_thigh + self.link_shank

    def side_sign(self, leg: LegId) -> float:
        """+1 for left legs (+y side), -1 for right legs."""
        return 1.0 if leg in (LegId.LF, LegId.LH) else -1.0

    def hip_position(self, leg: LegId) -> np.ndarray:
        x = 0.5 * self.hip_length if leg in (LegId.RF, LegId.LF) else -0.5 * self.hip_length
        y = 0.5 * self.hip_width * self.side_sign(leg)
        return np.array([x, y, 0.0])

    def hips(self) -> np.ndarray:
        return np.stack([self.hip_position(leg) for leg in LegId])


class OutOfWorkspaceError(ValueError):
    """IK target outside the leg workspace; carries the nearest reachable point."""

    def __init__(self, target, clamped_point, clamped_angles):
        super().__init__(
            f"foot target {np.asarray(target).round(4).tolist()} outside workspace"
        )
        self.target = np.asarray(target, dtype=float)
        self.clamped_point = np.asarray(clamped_point, dtype=float)
        self.clamped_angles = np.asarray(clamped_angles, dtype=float)


def leg_fk(q_leg, leg: LegId, params: RobotParams) -> np.ndarray:
    """Body-frame foot position for (abduction, hip pitch, knee) angles."""
    q1, q2, q3 = float(q_leg[0]), float(q_leg[1]), float(q_leg[2])
    d = params.link_hip * params.side_sign(leg)
    xp = -params.link_thigh * math.sin(q2) - params.link_shank * math.sin(q2 + q3)
    zp = -params.link_thigh * math.cos(q2) - params.link_shank * math.cos(q2 + q3)
    c1, s1 = math.cos(q1), math.sin(q1)
    hip = params.hip_position(leg)
    return np.array(
        [hip[0] + xp, hip[1] + c1 * d - s1 * zp, hip[2] + s1 * d + c1 * zp]
    )


def leg_ik(foot, leg: LegId, params: RobotParams) -> np.ndarray:
    """Knee-backward joint angles reaching a body-frame foot position.

    Raises :class:`OutOfWorkspaceError` for unreachable targets; the error
    carries the angles and position of the nearest reachable point (radial
    clamp onto the workspace annulus).
    """
    hip = params.hip_position(leg)
    rel = np.asarray(foot, dtype=float) - hip
    px, py, pz = rel
    d = params.link_hip * params.side_sign(leg)
    l1, l2 = params.link_thigh, params.link_shank

    clamped = False
    planar_sq = py * py + pz * pz - d * d
    if planar_sq < 0.0:
        planar_sq = 0.0
        clamped = True
    w = math.sqrt(planar_sq)  # in-plane drop below the hip axis

    length = math.hypot(px, w)
    lo, hi = abs(l1 - l2), l1 + l2
    if length < lo or length > hi:
        target_len = min(max(length, lo), hi)
        if length > 1e-12:
            scale = target_len / length
            px, w = px * scale, w * scale
        else:
            px, w = 0.0, target_len
        length = target_len
        clamped = True

    cos_knee = (length * length - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)
    q3 = -math.acos(min(1.0, max(-1.0, cos_knee)))
    q2 = math.atan2(-px, w) - math.atan2(
        l2 * math.sin(q3), l1 + l2 * math.cos(q3)
    )
    q1 = math.atan2(pz, py) - math.atan2(-w, d)
    q = np.array([q1, q2, q3])

    if clamped:
        raise OutOfWorkspaceError(foot, leg_fk(q, leg, params), q)
    return q


def leg_jacobian(q_leg, leg: LegId, params: RobotParams) -> np.ndarray:
    """3x3 Jacobian of :func:`leg_fk` with respect to the joint angles."""
    q1, q2, q3 = float(q_leg[0]), float(q_leg[1]), float(q_leg[2])
    d = params.link_hip * params.side_sign(leg)
    l1, l2 = params.link_thigh, params.link_shank
    s2, c2 = math.sin(q2), math.cos(q2)
    s23, c23 = math.sin(q2 + q3), math.cos(q2 + q3)
    c1, s1 = math.cos(q1), math.sin(q1)

    xp = -l1 * s2 - l2 * s23
    zp = -l1 * c2 - l2 * c23
    rel_y = c1 * d - s1 * zp
    rel_z = s1 * d + c1 * zp

    dxp_dq2 = -l1 * c2 - l2 * c23
    dzp_dq2 = l1 * s2 + l2 * s23
    dxp_dq3 = -l2 * c23
    dzp_dq3 = l2 * s23

    return np.array(
        [
            [0.0, dxp_dq2, dxp_dq3],
            [-rel_z, -s1 * dzp_dq2, -s1 * dzp_dq3],
            [rel_y, c1 * dzp_dq2, c1 * dzp_dq3],
        ]
    )


class TerrainBoundsError(ValueError):
    pass


@dataclass(frozen=True)
class TerrainSegment:
    start_x: float
    incline: float  # [rad], positive rises with x
    friction: float = 0.7
    kind: str = "flat"


@dataclass(frozen=True)
class TerrainSample:
    height: float
    normal: np.ndarray
    incline: float
    friction: float
    kind: str


@dataclass(frozen=True, eq=False)
class Terrain:
    """Contiguous piecewise-linear terrain profile along world x.

    Height is continuous across segment joins by construction; each segment
    extends to the start of the next (the last one to ``end_x``).
    """

    name: str
    segments: tuple[TerrainSegment, ...]
    end_x: float = 1000.0
    base_height: float = 0.0
    course_end: float | None = None  # finish line for strategy runs
    _starts: tuple[float, ...] = field(init=False, repr=False)
    _heights: tuple[float, ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("terrain needs at least one segment")
        starts = [s.start_x for s in self.segments]
        if sorted(starts) != starts or len(set(starts)) != len(starts):
            raise ValueError("segments must be ordered by start_x without overlap")
        if any(s.friction <= 0.0 for s in self.segments):
            raise ValueError("friction coefficients must be positive")
        heights = [self.base_height]
        for prev, cur in zip(self.segments, self.segments[1:]):
            run = cur.start_x - prev.start_x
            heights.append(heights[-1] + math.tan(prev.incline) * run)
        object.__setattr__(self, "_starts", tuple(starts))
        object.__setattr__(self, "_heights", tuple(heights))

    @property
    def start_x(self) -> float:
        return self.segments[0].start_x

    @property
    def kinds(self) -> tuple[str, ...]:
        seen: list[str] = []
        for seg in self.segments:
            if seg.kind not in seen:
                seen.append(seg.kind)
        return tuple(seen)

    def segment_at(self, x: float) -> TerrainSegment:
        if x < self.start_x or x > self.end_x:
            raise TerrainBoundsError(
                f"x={x} outside terrain extent [{self.start_x}, {self.end_x}]"
            )
        idx = bisect.bisect_right(self._starts, x) - 1
        return self.segments[max(idx, 0)]

    def query(self, x: float) -> TerrainSample:
        seg = self.segment_at(x)
        idx = self.segments.index(seg)
        height = self._heights[idx] + math.tan(seg.incline) * (x - seg.start_x)
        normal = np.array([-math.sin(seg.incline), 0.0, math.cos(seg.incline)])
        return TerrainSample(
            height=height,
            normal=normal,
            incline=seg.incline,
            friction=seg.friction,
            kind=seg.kind,
        )

    def tangent(self, x: float) -> np.ndarray:
        seg = self.segment_at(x)
        return np.array([math.cos(seg.incline), 0.0, math.sin(seg.incline)])


def terrain_query(terrain: Terrain, x: float) -> TerrainSample:
    return terrain.query(x)


_DEG = math.pi / 180.0


def terrain_preset(name: str, friction: float = 0.7) -> Terrain:
    """Named terrain profiles used throughout the experiments."""
    key = name.strip().lower().replace("_", "-")
    if key == "flat":
        return Terrain(
            "flat", (TerrainSegment(-100.0, 0.0, friction, "flat"),), end_x=1000.0
        )
    if key == "slope12":
        return Terrain(
            "slope12",
            (TerrainSegment(-100.0, 12.0 * _DEG, friction, "slope12"),),
            end_x=1000.0,
        )
    if key == "flat-slope":
        return Terrain(
            "flat-slope",
            (
                TerrainSegment(-100.0, 0.0, friction, "flat"),
                TerrainSegment(3.0, 12.0 * _DEG, friction, "slope12"),
            ),
            end_x=1000.0,
            course_end=6.0,
        )
    if key == "continuous-slope":
        return Terrain(
            "continuous-slope",
            (
                TerrainSegment(-100.0, 0.0, friction, "flat"),
                TerrainSegment(1.5, 8.0 * _DEG, friction, "slope8"),
                TerrainSegment(3.5, 12.0 * _DEG, friction, "slope12"),
                TerrainSegment(5.5, 18.0 * _DEG, friction, "slope18"),
            ),
            end_x=1000.0,
            course_end=7.5,
        )
    if key == "up-down-slope":
        return Terrain(
            "up-down-slope",
            (
                TerrainSegment(-100.0, 0.0, friction, "flat"),
                TerrainSegment(1.5, 12.0 * _DEG, friction, "slope12"),
                TerrainSegment(4.5, -12.0 * _DEG, friction, "down12"),
                TerrainSegment(7.5, 0.0, friction, "flat"),
            ),
            end_x=1000.0,
            course_end=9.0,
        )
    raise ValueError(f"unknown terrain preset: {name!r}")
