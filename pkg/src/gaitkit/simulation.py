"""Single-rigid-body quadruped simulation with force-distribution control.

The trunk is a rigid body driven by contact forces solved per control step;
legs are massless kinematic chains except for a point mass at each foot,
which makes swing effort (and hence the duty factor) show up in the energy
accounting. Swing feet follow a cycloidal arch toward a capture-style
touchdown point; stance feet are pinned to the terrain.

Angle convention: euler = (roll, pitch, yaw) with pitch positive nose-up, so
a body aligned to an uphill slope has pitch equal to the terrain inclination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .forces import distribute_forces
from .gaits import GaitPattern, LegId, leg_contact
from .robot import (
    OutOfWorkspaceError,
    RobotParams,
    Terrain,
    TerrainBoundsError,
    leg_ik,
    leg_jacobian,
)
from .transitions import GaitFsm

_GRAV_DIR = np.array([0.0, 0.0, -1.0])


@dataclass(frozen=True, eq=False)
class BodyState:
    """Trunk pose and rates: position/velocity, euler angles, world angular velocity."""

    position: np.ndarray
    velocity: np.ndarray
    euler: np.ndarray  # (roll, pitch, yaw), pitch positive nose-up
    omega: np.ndarray  # world frame

    @property
    def roll(self) -> float:
        return float(self.euler[0])

    @property
    def pitch(self) -> float:
        return float(self.euler[1])

    @property
    def yaw(self) -> float:
        return float(self.euler[2])


def rotation_matrix(euler) -> np.ndarray:
    """Body-to-world rotation for (roll, pitch, yaw), pitch nose-up positive."""
    roll, pitch, yaw = float(euler[0]), float(euler[1]), float(euler[2])
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    ry = np.array([[cp, 0.0, -sp], [0.0, 1.0, 0.0], [sp, 0.0, cp]])
    rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    return rz @ ry @ rx


def euler_rate_to_omega(euler) -> np.ndarray:
    """Matrix mapping (roll, pitch, yaw) rates to the world angular velocity."""
    _, pitch, yaw = float(euler[0]), float(euler[1]), float(euler[2])
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    return np.array(
        [[cy * cp, sy, 0.0], [sy * cp, -cy, 0.0], [sp, 0.0, 1.0]]
    )


def omega_to_euler_rates(euler, omega) -> np.ndarray:
    m = euler_rate_to_omega(euler)
    # guard the pitch singularity; failure thresholds sit well inside it
    if abs(np.linalg.det(m)) < 1e-8:
        return np.zeros(3)
    return np.linalg.solve(m, omega)


@dataclass(frozen=True)
class ContactForceSet:
    """Per-leg world-frame contact forces with stance flags and foot points."""

    forces: np.ndarray  # (4, 3)
    stance: np.ndarray  # (4,) bool
    foot_positions: np.ndarray  # (4, 3) world frame

    def __post_init__(self) -> None:
        swing = ~np.asarray(self.stance, dtype=bool)
        if np.any(np.abs(np.asarray(self.forces)[swing]) > 0.0):
            raise ValueError("swing legs must carry exactly zero force")


@dataclass(frozen=True)
class SimConfig:
    """Control gains, swing geometry, failure thresholds, and seeding."""

    dt: float = 0.002
    kp_lin: tuple[float, float, float] = (400.0, 400.0, 400.0)
    kd_lin: tuple[float, float, float] = (40.0, 40.0, 40.0)
    kp_ang: tuple[float, float, float] = (60.0, 60.0, 60.0)
    kd_ang: tuple[float, float, float] = (8.0, 8.0, 8.0)
    swing_apex: float = 0.06
    ground_clearance: float = 0.02
    nominal_height: float = 0.32
    max_roll: float = 0.6
    max_pitch: float = 0.6
    min_height_ratio: float = 0.4
    seed: int = 0
    attitude_jitter: float = 0.03  # uniform +/- [rad] on initial roll/pitch
    velocity_jitter: float = 0.05  # uniform +/- [m/s] on initial velocity
    f_max_scale: float = 2.0  # per-foot normal bound as multiple of m*g
    carrot_clamp: float = 0.2  # [m] cap on the position-reference lead/lag
    capture_gain: float = 0.18  # [s] touchdown shift per unit velocity error
    capture_clamp: float = 0.5  # [m] cap on the touchdown velocity correction
    touchdown_noise: float = 0.01  # [m] std of per-swing landing scatter
    joint_torque_limit: float = 33.5  # [N*m] actuator saturation per joint

    def validate(self) -> None:
        if self.dt <= 0.0 or self.dt > 0.002 + 1e-12:
            raise ValueError("dt must lie in (0, 2 ms]")
        gains = (*self.kp_lin, *self.kd_lin, *self.kp_ang, *self.kd_ang)
        if any(g < 0.0 for g in gains):
            raise ValueError("PD gains must be non-negative")
        if self.ground_clearance <= 0.0 or self.swing_apex <= 0.0:
            raise ValueError("swing clearance and apex must be positive")
        if self.nominal_height <= 0.0:
            raise ValueError("nominal height must be positive")


def swing_trajectory(s: float, lift_point, target_point, apex: float) -> np.ndarray:
    """Swing foot position at swing phase ``s`` in [0, 1].

    Cycloidal progress along the lift->target chord with a sinusoidal arch
    peaking ``apex`` above the chord midpoint; both endpoints are exact.
    """
    s = min(1.0, max(0.0, float(s)))
    lift = np.asarray(lift_point, dtype=float)
    target = np.asarray(target_point, dtype=float)
    sigma = s - math.sin(2.0 * math.pi * s) / (2.0 * math.pi)
    pos = lift + sigma * (target - lift)
    pos[2] += apex * math.sin(math.pi * s)
    return pos


def swing_acceleration(
    s: float, lift_point, target_point, apex: float, swing_time: float
) -> np.ndarray:
    """Second time derivative of :func:`swing_trajectory` at phase ``s``."""
    s = min(1.0, max(0.0, float(s)))
    lift = np.asarray(lift_point, dtype=float)
    target = np.asarray(target_point, dtype=float)
    d2 = 2.0 * math.pi * math.sin(2.0 * math.pi * s) * (target - lift)
    d2[2] += -apex * math.pi * math.pi * math.sin(math.pi * s)
    return d2 / (swing_time * swing_time)


def step(state: BodyState, contact: ContactForceSet, params: RobotParams, dt: float) -> BodyState:
    """Semi-implicit Euler update of the trunk rigid-body dynamics."""
    if dt <= 0.0 or dt > 0.002 + 1e-12:
        raise ValueError("integration step must lie in (0, 2 ms]")
    f_total = contact.forces.sum(axis=0)
    moment = np.zeros(3)
    for leg in range(4):
        if contact.stance[leg]:
            moment += np.cross(
                contact.foot_positions[leg] - state.position, contact.forces[leg]
            )

    accel = params.gravity * _GRAV_DIR + f_total / params.mass
    rot = rotation_matrix(state.euler)
    inertia_w = rot @ params.inertia @ rot.T
    gyro = np.cross(state.omega, inertia_w @ state.omega)
    omega_dot = np.linalg.solve(inertia_w, moment - gyro)

    velocity = state.velocity + accel * dt
    position = state.position + velocity * dt
    omega = state.omega + omega_dot * dt
    euler = state.euler + omega_to_euler_rates(state.euler, omega) * dt
    return BodyState(position=position, velocity=velocity, euler=euler, omega=omega)


def stance_torques(force_body, q_leg, leg: LegId, params: RobotParams) -> np.ndarray:
    """Joint torques balancing a body-frame ground reaction force: tau = -J^T f."""
    return -leg_jacobian(q_leg, leg, params).T @ np.asarray(force_body, dtype=float)


def swing_torques(
    q_leg, foot_accel_body, leg: LegId, params: RobotParams
) -> np.ndarray:
    """Joint torques driving the swing foot point mass: tau = J^T m (a - g).

    ``foot_accel_body`` is the demanded foot acceleration minus nothing; the
    gravity term is added here, both expressed in the body frame.
    """
    j = leg_jacobian(q_leg, leg, params)
    return j.T @ (params.foot_mass * np.asarray(foot_accel_body, dtype=float))


@dataclass
class StrideLog:
    """Sampled time series over one stride plus per-stride aggregates."""

    time: np.ndarray  # (n,)
    torques: np.ndarray  # (n, 12) per-leg (abduction, hip, knee), LegId order
    joint_velocities: np.ndarray  # (n, 12)
    forces: np.ndarray  # (n, 4, 3) world frame
    stance: np.ndarray  # (n, 4) bool
    position: np.ndarray  # (n, 3)
    velocity: np.ndarray  # (n, 3)
    euler: np.ndarray  # (n, 3)
    omega: np.ndarray  # (n, 3)
    euler_rates: np.ndarray  # (n, 3)
    foot_positions: np.ndarray  # (n, 4, 3)
    v_cmd: float
    delta_s: float
    t_f: float
    failed: bool
    complete: bool
    slip_events: int = 0
    torque_flags: int = 0


@dataclass
class TrialResult:
    strides: list[StrideLog]
    events: list
    action_windows: list
    failed: bool
    finished_course: bool
    end_time: float


class SteadyGait:
    """Gait source that holds one pattern forever."""

    def __init__(self, pattern: GaitPattern):
        self._pattern = pattern
        self.events: list = []
        self.action_windows: list = []

    @property
    def period(self) -> float:
        return self._pattern.period

    def advance(self, dt: float) -> GaitPattern:
        return self._pattern

    def on_stride_boundary(self, stride_idx: int, state: BodyState, t: float) -> None:
        pass


class FsmGaitSupplier:
    """Gait source backed by a :class:`GaitFsm`, with a stride-boundary hook."""

    def __init__(self, fsm: GaitFsm, on_stride=None):
        self.fsm = fsm
        self._on_stride = on_stride

    @property
    def period(self) -> float:
        return self.fsm.period

    @property
    def events(self) -> list:
        return self.fsm.events

    @property
    def action_windows(self) -> list:
        return self.fsm.action_windows

    def advance(self, dt: float) -> GaitPattern:
        return self.fsm.advance(dt)

    def on_stride_boundary(self, stride_idx: int, state: BodyState, t: float) -> None:
        if self._on_stride is not None:
            self._on_stride(self, stride_idx, state, t)


class _StrideAccumulator:
    def __init__(self) -> None:
        self.rows: list = []
        self.start_time = 0.0
        self.start_pos: np.ndarray | None = None
        self.slips = 0
        self.flags = 0

    def reset(self, t: float, pos: np.ndarray) -> None:
        self.rows = []
        self.start_time = t
        self.start_pos = pos.copy()
        self.slips = 0
        self.flags = 0

    def close(self, t: float, pos: np.ndarray, v_cmd: float, failed: bool, complete: bool) -> StrideLog | None:
        if not self.rows:
            return None
        cols = list(zip(*self.rows))
        return StrideLog(
            time=np.array(cols[0]),
            torques=np.array(cols[1]),
            joint_velocities=np.array(cols[2]),
            forces=np.array(cols[3]),
            stance=np.array(cols[4]),
            position=np.array(cols[5]),
            velocity=np.array(cols[6]),
            euler=np.array(cols[7]),
            omega=np.array(cols[8]),
            euler_rates=np.array(cols[9]),
            foot_positions=np.array(cols[10]),
            v_cmd=v_cmd,
            delta_s=float(np.linalg.norm(pos - self.start_pos)),
            t_f=t - self.start_time,
            failed=failed,
            complete=complete,
            slip_events=self.slips,
            torque_flags=self.flags,
        )


def run_trial(
    gait_source,
    v_cmd: float,
    terrain: Terrain,
    duration: float,
    config: SimConfig | None = None,
    params: RobotParams | None = None,
    *,
    rng: np.random.Generator | None = None,
    start_x: float = 0.0,
    finish_x: float | None = None,
    initial_state: BodyState | None = None,
    on_stride=None,
) -> TrialResult:
    """Closed-loop trial: track ``v_cmd`` along the terrain under a gait source.

    ``gait_source`` may be a steady :class:`GaitPattern`, a :class:`GaitFsm`,
    or any supplier with ``advance(dt)`` / ``on_stride_boundary(...)``. Logs
    are segmented per stride; the trial ends early on failure (attitude or
    height threshold) or when the body passes ``finish_x``.
    """
    config = config or SimConfig()
    params = params or RobotParams()
    config.validate()
    if not 0.0 <= v_cmd <= 3.0:
        raise ValueError(f"commanded velocity {v_cmd} outside the supported [0, 3] m/s")

    if isinstance(gait_source, GaitPattern):
        supplier = SteadyGait(gait_source)
    elif isinstance(gait_source, GaitFsm):
        supplier = FsmGaitSupplier(gait_source, on_stride)
    else:
        supplier = gait_source
    period = supplier.period

    if duration < 3.0 * period - 1e-9:
        raise ValueError("trial duration must cover at least three strides")

    dt = config.dt
    rng = rng if rng is not None else np.random.default_rng(config.seed)

    samp0 = terrain.query(start_x)
    if initial_state is None:
        jit_att = rng.uniform(-1.0, 1.0, size=2) * config.attitude_jitter
        jit_vel = rng.uniform(-1.0, 1.0, size=2) * config.velocity_jitter
        tangent = terrain.tangent(start_x)
        state = BodyState(
            position=np.array(
                [start_x, 0.0, samp0.height + config.nominal_height]
            ),
            velocity=v_cmd * tangent + np.array([jit_vel[0], jit_vel[1], 0.0]),
            euler=np.array([jit_att[0], samp0.incline + jit_att[1], 0.0]),
            omega=np.zeros(3),
        )
    else:
        state = initial_state

    rot = rotation_matrix(state.euler)
    foot_pos = np.zeros((4, 3))
    for leg in LegId:
        hip_w = state.position + rot @ params.hip_position(leg)
        foot_pos[leg] = [hip_w[0], hip_w[1], terrain.query(hip_w[0]).height]
    lift_pos = foot_pos.copy()
    swing_entry_s = np.zeros(4)
    was_swing = np.zeros(4, dtype=bool)
    touchdown_scatter = np.zeros((4, 2))

    q = np.zeros((4, 3))
    for leg in LegId:
        body_target = rot.T @ (foot_pos[leg] - state.position)
        try:
            q[leg] = leg_ik(body_target, leg, params)
        except OutOfWorkspaceError as err:
            q[leg] = err.clamped_angles
    q_prev = q.copy()

    kp_lin = np.asarray(config.kp_lin)
    kd_lin = np.asarray(config.kd_lin)
    kp_ang = np.asarray(config.kp_ang)
    kd_ang = np.asarray(config.kd_ang)
    f_max = config.f_max_scale * params.mass * params.gravity
    g_vec = params.gravity * _GRAV_DIR
    apex = max(config.swing_apex, config.ground_clearance)

    carrot_x = start_x
    phase = 0.0
    stride_idx = 0
    failed = False
    finished = False
    strides: list[StrideLog] = []
    acc = _StrideAccumulator()
    acc.reset(0.0, state.position)

    n_steps = int(round(duration / dt))
    t = 0.0
    for _ in range(n_steps):
        pattern = supplier.advance(dt)
        beta = pattern.beta
        swing_time_full = (1.0 - beta) * period
        rot = rotation_matrix(state.euler)

        try:
            body_samp = terrain.query(state.position[0])
            # the body spans terrain kinks: blend the reference incline over
            # the fore and hind hip footprint instead of stepping at the kink
            half = 0.5 * params.hip_length
            incline_ref = 0.5 * (
                terrain.query(
                    min(max(state.position[0] + half, terrain.start_x), terrain.end_x)
                ).incline
                + terrain.query(
                    min(max(state.position[0] - half, terrain.start_x), terrain.end_x)
                ).incline
            )
        except TerrainBoundsError:
            failed = True
            break
        tangent = np.array([math.cos(incline_ref), 0.0, math.sin(incline_ref)])
        v_des = v_cmd * tangent
        v_des_flat = np.array([v_des[0], 0.0, 0.0])

        scheduled = np.zeros(4, dtype=bool)
        eff_stance = np.zeros(4, dtype=bool)
        torques = np.zeros((4, 3))
        foot_acc_world = np.zeros((4, 3))
        for leg in LegId:
            cs = leg_contact(pattern, phase, leg)
            if cs.is_swing:
                s = cs.swing_phase
                if not was_swing[leg]:
                    lift_pos[leg] = foot_pos[leg].copy()
                    swing_entry_s[leg] = s
                    was_swing[leg] = True
                    # landing scatter drawn once per swing (sensing and
                    # terrain irregularity stand-in); one source of the
                    # trial-to-trial variance the repeated tests average over
                    touchdown_scatter[leg] = rng.normal(
                        0.0, config.touchdown_noise, size=2
                    )
                s0 = swing_entry_s[leg]
                local = (s - s0) / (1.0 - s0) if s0 < 1.0 - 1e-9 else 1.0
                t_rem = (1.0 - s) * swing_time_full
                hip_b = params.hip_position(leg)
                hip_w = state.position + rot @ hip_b
                # Raibert touchdown: symmetric stepping on the actual velocity
                # plus a capture correction toward the commanded one; using
                # the commanded velocity alone leaves lateral sway undamped
                v_flat = np.array([state.velocity[0], state.velocity[1], 0.0])
                hip_pred = hip_w + v_flat * t_rem
                correction = config.capture_gain * (v_flat - v_des_flat)
                c_norm = np.linalg.norm(correction)
                if c_norm > config.capture_clamp:
                    correction *= config.capture_clamp / c_norm
                target = hip_pred + v_flat * (0.5 * beta * period) + correction
                target[0] += touchdown_scatter[leg, 0]
                target[1] += touchdown_scatter[leg, 1]
                try:
                    target[2] = terrain.query(target[0]).height
                except TerrainBoundsError:
                    target[2] = foot_pos[leg][2]
                foot_pos[leg] = swing_trajectory(local, lift_pos[leg], target, apex)
                eff_swing_time = max((1.0 - s0) * swing_time_full, 1e-6)
                foot_acc_world[leg] = swing_acceleration(
                    local, lift_pos[leg], target, apex, eff_swing_time
                )
            else:
                if was_swing[leg]:
                    was_swing[leg] = False
                    try:
                        foot_pos[leg][2] = terrain.query(foot_pos[leg][0]).height
                    except TerrainBoundsError:
                        pass
                scheduled[leg] = True

            body_target = rot.T @ (foot_pos[leg] - state.position)
            try:
                q[leg] = leg_ik(body_target, leg, params)
                reachable = True
            except OutOfWorkspaceError as err:
                q[leg] = err.clamped_angles
                reachable = False
                acc.slips += 1
            eff_stance[leg] = scheduled[leg] and reachable

        # body tracking wrench; gravity feedforward scaled so flight gaits
        # receive the stride-averaged weight support during their stance phases
        carrot_x += v_cmd * math.cos(incline_ref) * dt
        carrot_samp = terrain.query(min(max(carrot_x, terrain.start_x), terrain.end_x))
        p_des = np.array(
            [carrot_x, 0.0, carrot_samp.height + config.nominal_height]
        )
        # anti-windup on the error, not the reference: surging gaits lead and
        # lag the constant-velocity plan within a stride without stealing it
        p_err = p_des - state.position
        p_err[0] = min(max(p_err[0], -config.carrot_clamp), config.carrot_clamp)
        support_scale = 1.0 / min(1.0, 2.0 * beta)
        f_des = (
            kp_lin * p_err
            + kd_lin * (v_des - state.velocity)
            + np.array([0.0, 0.0, params.mass * params.gravity * support_scale])
        )
        euler_des = np.array([0.0, incline_ref, 0.0])
        m_des = euler_rate_to_omega(state.euler) @ (
            kp_ang * (euler_des - state.euler)
        ) - kd_ang * state.omega
        wrench = np.concatenate([f_des, m_des])

        mu = body_samp.friction
        normals = np.zeros((4, 3))
        for leg in LegId:
            try:
                normals[leg] = terrain.query(foot_pos[leg][0]).normal
            except TerrainBoundsError:
                normals[leg] = np.array([0.0, 0.0, 1.0])
        dist = distribute_forces(
            wrench, foot_pos, eff_stance, state.position, mu, f_max, normals
        )

        qdot = (q - q_prev) / dt
        q_prev = q.copy()
        applied_forces = dist.forces.copy()
        for leg in LegId:
            if eff_stance[leg]:
                f_body = rot.T @ dist.forces[leg]
                torques[leg] = stance_torques(f_body, q[leg], leg, params)
                # actuator saturation: when a joint exceeds its torque limit
                # the whole leg force scales down and the commanded wrench is
                # no longer met; this is the controller limitation that drops
                # the violent gaits
                peak = np.max(np.abs(torques[leg]))
                if peak > config.joint_torque_limit:
                    scale = config.joint_torque_limit / peak
                    torques[leg] *= scale
                    applied_forces[leg] = dist.forces[leg] * scale
                    acc.flags += 1
            else:
                a_body = rot.T @ (foot_acc_world[leg] - g_vec)
                torques[leg] = swing_torques(q[leg], a_body, leg, params)
                if np.max(np.abs(torques[leg])) > config.joint_torque_limit:
                    scale = config.joint_torque_limit / np.max(np.abs(torques[leg]))
                    torques[leg] *= scale
                    foot_acc_world[leg] *= scale
                    acc.flags += 1

        acc.rows.append(
            (
                t,
                torques.reshape(12).copy(),
                qdot.reshape(12).copy(),
                applied_forces.copy(),
                eff_stance.copy(),
                state.position.copy(),
                state.velocity.copy(),
                state.euler.copy(),
                state.omega.copy(),
                omega_to_euler_rates(state.euler, state.omega),
                foot_pos.copy(),
            )
        )

        contact = ContactForceSet(
            forces=applied_forces, stance=eff_stance, foot_positions=foot_pos.copy()
        )
        state = step(state, contact, params, dt)
        t += dt

        try:
            ground = terrain.query(state.position[0]).height
        except TerrainBoundsError:
            failed = True
            break
        if (
            abs(state.roll) > config.max_roll
            or abs(state.pitch) > config.max_pitch
            or state.position[2] - ground < config.min_height_ratio * config.nominal_height
        ):
            failed = True
            break

        phase += dt / period
        if phase >= 1.0 - 1e-9:
            phase -= 1.0
            log = acc.close(t, state.position, v_cmd, failed=False, complete=True)
            if log is not None:
                strides.append(log)
            acc.reset(t, state.position)
            stride_idx += 1
            supplier.on_stride_boundary(stride_idx, state, t)

        if finish_x is not None and state.position[0] >= finish_x:
            finished = True
            break

    log = acc.close(t, state.position, v_cmd, failed=failed, complete=False)
    if log is not None:
        strides.append(log)
    if failed and strides:
        strides[-1].failed = True

    return TrialResult(
        strides=strides,
        events=list(supplier.events),
        action_windows=list(supplier.action_windows),
        failed=failed,
        finished_course=finished,
        end_time=t,
    )
