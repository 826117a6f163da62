import math

import numpy as np
import pytest

from gaitkit.gaits import LegId
from gaitkit.robot import (
    OutOfWorkspaceError,
    RobotParams,
    Terrain,
    TerrainBoundsError,
    TerrainSegment,
    leg_fk,
    leg_ik,
    leg_jacobian,
    terrain_preset,
    terrain_query,
)

PARAMS = RobotParams()
DEG = math.pi / 180.0


def _random_reachable_q(rng):
    # knee-backward branch, away from the workspace boundary
    return np.array(
        [
            rng.uniform(-0.6, 0.6),
            rng.uniform(-0.9, 0.9),
            rng.uniform(-2.4, -0.25),
        ]
    )


def test_straight_leg_below_hip():
    for leg in LegId:
        foot = leg_fk(np.zeros(3), leg, PARAMS)
        hip = PARAMS.hip_position(leg)
        assert foot[0] == pytest.approx(hip[0])
        assert foot[1] == pytest.approx(hip[1])
        assert foot[2] == pytest.approx(hip[2] - PARAMS.leg_reach)


def test_symmetric_crouch_stays_below_hip():
    theta = 0.5
    foot = leg_fk(np.array([0.0, theta, -2 * theta]), LegId.RF, PARAMS)
    hip = PARAMS.hip_position(LegId.RF)
    assert foot[0] == pytest.approx(hip[0], abs=1e-12)
    assert foot[2] == pytest.approx(hip[2] - PARAMS.leg_reach * math.cos(theta))


@pytest.mark.parametrize("leg", list(LegId))
def test_fk_ik_round_trip(leg):
    rng = np.random.default_rng(int(leg) + 1)
    for _ in range(1000):
        q = _random_reachable_q(rng)
        foot = leg_fk(q, leg, PARAMS)
        q_back = leg_ik(foot, leg, PARAMS)
        foot_back = leg_fk(q_back, leg, PARAMS)
        assert np.linalg.norm(foot_back - foot) <= 1e-9


def test_ik_unreachable_carries_clamped_point():
    target = PARAMS.hip_position(LegId.LF) + np.array([0.0, 0.0, -2.0])
    with pytest.raises(OutOfWorkspaceError) as err:
        leg_ik(target, LegId.LF, PARAMS)
    clamped = err.value.clamped_point
    hip = PARAMS.hip_position(LegId.LF)
    assert np.linalg.norm(clamped - hip) <= PARAMS.leg_reach + 1e-9
    q = err.value.clamped_angles
    assert np.allclose(leg_fk(q, LegId.LF, PARAMS), clamped, atol=1e-9)


@pytest.mark.parametrize("leg", list(LegId))
def test_jacobian_matches_finite_differences(leg):
    rng = np.random.default_rng(17 + int(leg))
    h = 1e-6
    for _ in range(100):
        q = _random_reachable_q(rng)
        jac = leg_jacobian(q, leg, PARAMS)
        fd = np.zeros((3, 3))
        for j in range(3):
            dq = np.zeros(3)
            dq[j] = h
            fd[:, j] = (leg_fk(q + dq, leg, PARAMS) - leg_fk(q - dq, leg, PARAMS)) / (
                2 * h
            )
        scale = max(1.0, np.linalg.norm(fd))
        assert np.linalg.norm(jac - fd) / scale <= 1e-6


def test_straight_leg_is_singular():
    jac = leg_jacobian(np.zeros(3), LegId.RH, PARAMS)
    assert abs(np.linalg.det(jac)) < 1e-12


def test_abduction_column_orthogonal_to_x():
    rng = np.random.default_rng(5)
    for _ in range(20):
        q = _random_reachable_q(rng)
        jac = leg_jacobian(q, LegId.LH, PARAMS)
        assert jac[0, 0] == 0.0


def test_robot_params_validation():
    with pytest.raises(ValueError):
        RobotParams(mass=-1.0)
    with pytest.raises(ValueError):
        RobotParams(inertia_diag=(0.0, 0.1, 0.1))
    with pytest.raises(ValueError):
        RobotParams(n_motors=8)


# -- terrain -----------------------------------------------------------------

def test_flat_terrain_query():
    terrain = terrain_preset("flat")
    s = terrain_query(terrain, 3.0)
    assert s.height == 0.0
    assert np.allclose(s.normal, [0.0, 0.0, 1.0])
    assert s.incline == 0.0
    assert s.friction == 0.7


def test_slope_height_geometry():
    terrain = terrain_preset("flat-slope")
    join = 3.0
    s = terrain_query(terrain, join + 1.0)
    assert s.incline == pytest.approx(12 * DEG)
    assert s.height == pytest.approx(math.tan(12 * DEG) * 1.0)
    assert np.allclose(s.normal, [-math.sin(12 * DEG), 0.0, math.cos(12 * DEG)])


def test_height_continuous_at_joins():
    for name in ("flat-slope", "continuous-slope", "up-down-slope"):
        terrain = terrain_preset(name)
        for seg in terrain.segments[1:]:
            x = seg.start_x
            below = terrain_query(terrain, x - 1e-9).height
            above = terrain_query(terrain, x + 1e-9).height
            assert above == pytest.approx(below, abs=1e-6)


def test_out_of_bounds_raises():
    terrain = terrain_preset("flat")
    with pytest.raises(TerrainBoundsError):
        terrain_query(terrain, terrain.start_x - 1.0)
    with pytest.raises(TerrainBoundsError):
        terrain_query(terrain, terrain.end_x + 1.0)


def test_terrain_validation():
    with pytest.raises(ValueError):
        Terrain("bad", ())
    with pytest.raises(ValueError):
        Terrain(
            "bad",
            (TerrainSegment(1.0, 0.0), TerrainSegment(0.0, 0.0)),
        )
    with pytest.raises(ValueError):
        Terrain("bad", (TerrainSegment(0.0, 0.0, friction=0.0),))


def test_preset_kinds():
    assert terrain_preset("flat").kinds == ("flat",)
    assert terrain_preset("slope12").kinds == ("slope12",)
    assert set(terrain_preset("continuous-slope").kinds) == {
        "flat", "slope8", "slope12", "slope18",
    }
    with pytest.raises(ValueError):
        terrain_preset("mountains")
