"""
Línea de tiempo de obstáculos, formato .scn y suite incluida.
"""

import math

import pytest

from latentroute.engine.scenarios import (
    builtin_scenario,
    builtin_suite,
    check_scenario,
    dump_scenario,
    is_active,
    load_scenario,
    obstacle_at,
    parse_scenario,
    perturb_scenario,
    pose_at,
    save_scenario,
    scenario_digest,
    shape_at,
)
from latentroute.errors import DomainError, InputError, JointLimitError, ParseError
from latentroute.schemas.robot import Pose
from latentroute.schemas.scenario import MorphKeyframe, ObstacleTrack, PoseKeyframe, Scenario


START = [-1.2, -0.3, 0.0, -2.2, 0.0, 2.0, 0.7854]
GOAL = [1.2, -0.3, 0.0, -2.2, 0.0, 2.0, 0.7854]


def track(**overrides):
    values = dict(
        name="box",
        kind="box",
        dims=[0.1, 0.1, 0.1],
        trajectory=[
            PoseKeyframe(tick=0, pose=Pose(position=[0.0, 0.0, 0.0])),
            PoseKeyframe(tick=10, pose=Pose(position=[1.0, 0.0, 0.0])),
        ],
    )
    values.update(overrides)
    return ObstacleTrack(**values)


def scenario(*tracks, **overrides):
    values = dict(id="test", category="moving", start=START, goal=GOAL, obstacles=list(tracks))
    values.update(overrides)
    return Scenario(**values)


# ===== TRAYECTORIA =====

def test_position_is_linear():
    t = track()
    assert pose_at(t, 5).position == pytest.approx([0.5, 0.0, 0.0])
    assert pose_at(t, 3).position == pytest.approx([0.3, 0.0, 0.0])


def test_keyframes_are_exact():
    t = track()
    assert pose_at(t, 0) == t.trajectory[0].pose
    assert pose_at(t, 10) == t.trajectory[1].pose


def test_pose_holds_outside_the_keyframes():
    t = track(trajectory=[
        PoseKeyframe(tick=5, pose=Pose(position=[0.2, 0.0, 0.0])),
        PoseKeyframe(tick=10, pose=Pose(position=[1.0, 0.0, 0.0])),
    ])
    assert pose_at(t, 0).position == [0.2, 0.0, 0.0]
    assert pose_at(t, 50).position == [1.0, 0.0, 0.0]


def test_orientation_uses_slerp():
    quarter = [math.cos(math.pi / 4), 0.0, 0.0, math.sin(math.pi / 4)]
    t = track(trajectory=[
        PoseKeyframe(tick=0, pose=Pose()),
        PoseKeyframe(tick=10, pose=Pose(orientation=quarter)),
    ])
    eighth = [math.cos(math.pi / 8), 0.0, 0.0, math.sin(math.pi / 8)]
    assert pose_at(t, 5).orientation == pytest.approx(eighth, abs=1e-12)


# ===== MORPH =====

def test_base_shape_before_first_morph():
    t = track(morph=[MorphKeyframe(tick=4, kind="box", dims=[0.2, 0.2, 0.2])])
    assert shape_at(t, 2) == ("box", [0.1, 0.1, 0.1])
    assert shape_at(t, 4) == ("box", [0.2, 0.2, 0.2])


def test_morph_interpolation_and_kind_swap():
    s = builtin_scenario("morphing_cuboid_cylinder")
    member = s.obstacles[0]
    kind, dims = shape_at(member, 100)
    assert kind == "box"
    assert dims == pytest.approx([0.12, 0.12, 0.2])
    # Entre tipos distintos rige el keyframe anterior hasta el siguiente
    assert shape_at(member, 175) == ("box", [0.12, 0.12, 0.24])
    assert shape_at(member, 200) == ("cylinder", [0.07, 0.24])
    kind, dims = shape_at(member, 300)
    assert kind == "cylinder"
    assert dims == pytest.approx([0.06, 0.27])
    assert shape_at(member, 900) == ("cylinder", [0.05, 0.3])


# ===== APARICIÓN =====

def test_disappear_is_exclusive():
    t = track(appear=3, disappear=7)
    assert [is_active(t, tick) for tick in range(9)] == [False] * 3 + [True] * 4 + [False] * 2


def test_snapshot_is_the_union_of_active_members():
    s = scenario(track(name="a"), track(name="b", appear=5))
    assert obstacle_at(s, 2).ids == ["a"]
    snapshot = obstacle_at(s, 5)
    assert snapshot.ids == ["a", "b"]
    assert snapshot.label == "a+b"
    assert [m.kind for m in snapshot.members] == ["box", "box"]
    assert obstacle_at(scenario(track(appear=5)), 1) is None


def test_negative_tick():
    with pytest.raises(DomainError):
        obstacle_at(scenario(track()), -1)


# ===== VALIDACIÓN =====

def test_start_equals_goal_only_for_trivial():
    with pytest.raises(ValueError):
        scenario(goal=START)
    assert scenario(goal=START, category="trivial").goal == START


def test_disappear_after_appear():
    with pytest.raises(ValueError):
        track(appear=5, disappear=5)


def test_check_scenario_limits(panda):
    check_scenario(scenario(), panda)
    with pytest.raises(JointLimitError):
        check_scenario(scenario(goal=[0.0] * 7), panda)


# ===== FORMATO .scn =====

def test_builtin_suite():
    suite = builtin_suite()
    ids = [s.id for s in suite]
    assert len(suite) >= 7
    assert len(set(ids)) == len(ids)
    assert {"static_blocker", "crossing_mover", "morphing_cuboid_cylinder", "two_obstacles",
            "appearing_blocker", "free_path", "trapped"} <= set(ids)
    for s in suite:
        assert parse_scenario(dump_scenario(s)) == s


def test_builtin_scenarios_fit_the_panda(panda):
    for s in builtin_suite():
        check_scenario(s, panda)


def test_unknown_builtin():
    with pytest.raises(InputError):
        builtin_scenario("no_existe")


def test_digest_tracks_content():
    s = builtin_scenario("static_blocker")
    assert scenario_digest(s) == scenario_digest(parse_scenario(dump_scenario(s)))
    assert scenario_digest(s) != scenario_digest(s.model_copy(update={"seed": s.seed + 1}))


def test_unknown_shape_kind():
    text = dump_scenario(builtin_scenario("two_obstacles")).replace("kind = sphere", "kind = torus")
    with pytest.raises(ParseError) as exc:
        parse_scenario(text)
    assert exc.value.token == "torus"
    assert exc.value.line > 0


def test_start_equals_goal_is_a_parse_error():
    s = builtin_scenario("static_blocker")
    text = dump_scenario(s)
    start_line = next(line for line in text.splitlines() if line.startswith("start = "))
    goal_line = next(line for line in text.splitlines() if line.startswith("goal = "))
    with pytest.raises(ParseError):
        parse_scenario(text.replace(goal_line, "goal = " + start_line.split(" = ", 1)[1]))


def test_missing_trajectory():
    text = "\n".join([
        "[scenario]",
        "id = roto",
        "start = " + " ".join(map(str, START)),
        "goal = " + " ".join(map(str, GOAL)),
        "",
        "[obstacle lost]",
        "kind = sphere",
        "dims = 0.05",
    ])
    with pytest.raises(ParseError) as exc:
        parse_scenario(text)
    assert exc.value.token == "lost"


def test_save_and_load(tmp_path, panda):
    s = builtin_scenario("crossing_mover")
    path = tmp_path / "crossing_mover.scn"
    save_scenario(s, path)
    assert load_scenario(path, panda) == s
    with pytest.raises(InputError):
        load_scenario(tmp_path / "nada.scn")


# ===== PERTURBACIÓN =====

def test_perturbation_is_deterministic():
    s = builtin_scenario("crossing_mover")
    a = perturb_scenario(s, seed=9, jitter=0.02)
    assert a == perturb_scenario(s, seed=9, jitter=0.02)
    assert a != perturb_scenario(s, seed=10, jitter=0.02)
    for original, moved in zip(s.obstacles, a.obstacles):
        for f0, f1 in zip(original.trajectory, moved.trajectory):
            assert f0.tick == f1.tick
            assert all(abs(x - y) <= 0.02 for x, y in zip(f0.pose.position, f1.pose.position))


def test_zero_jitter_keeps_positions():
    s = builtin_scenario("crossing_mover")
    same = perturb_scenario(s, seed=3, jitter=0.0)
    assert [t.trajectory for t in same.obstacles] == [t.trajectory for t in s.obstacles]
    with pytest.raises(DomainError):
        perturb_scenario(s, seed=3, jitter=-0.1)
