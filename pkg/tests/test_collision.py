"""
GJK entre primitivas convexas y holgura del brazo por eslabón.
"""

import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from latentroute.engine.collision import arm_clearance, clearance_cost, distance_cost, gjk_distance, is_collision
from latentroute.engine.kinematics import capsule_segments_world, chain_transforms
from latentroute.errors import ConvergenceError, DomainError
from latentroute.schemas.collision import ClearanceReport, ConvexShape, CostParams, GjkParams
from latentroute.schemas.robot import Pose


def shape(kind, dims, position=(0.0, 0.0, 0.0), orientation=(1.0, 0.0, 0.0, 0.0), points=None):
    return ConvexShape(
        kind=kind,
        dims=list(dims),
        points=points,
        pose=Pose(position=list(position), orientation=list(orientation)),
    )


def sphere(radius, position):
    return shape("sphere", [radius], position)


def random_orientation(rng):
    x, y, z, w = Rotation.random(random_state=rng).as_quat()
    return [w, x, y, z]


# ===== CASOS ANALÍTICOS =====

def test_sphere_sphere():
    assert gjk_distance(sphere(0.1, (0, 0, 0)), sphere(0.2, (1, 0, 0))) == pytest.approx(0.7, abs=1e-12)


def test_overlap_is_zero():
    assert gjk_distance(sphere(0.5, (0, 0, 0)), sphere(0.5, (0.6, 0, 0))) == 0.0
    assert gjk_distance(shape("box", [1, 1, 1]), sphere(0.1, (0.2, 0.1, 0.0))) == 0.0


@pytest.mark.parametrize(
    "a, b, expected",
    [
        (shape("box", [0.2, 0.2, 0.2]), sphere(0.1, (1, 0, 0)), 0.8),
        (shape("box", [0.2, 0.2, 0.2]), shape("box", [0.2, 0.2, 0.2], (0, 0, 1)), 0.8),
        (shape("cylinder", [0.1, 0.4]), sphere(0.05, (0, 0, 1)), 0.75),
        (shape("cylinder", [0.1, 0.4]), sphere(0.05, (1, 0, 0)), 0.85),
        (shape("capsule", [0.05, 0.4]), sphere(0.1, (0, 0, 1)), 0.65),
        (shape("capsule", [0.05, 0.4]), sphere(0.1, (1, 0, 0)), 0.85),
        (
            shape("hull", [], points=[[x, y, z] for x in (-0.1, 0.1) for y in (-0.1, 0.1) for z in (-0.1, 0.1)]),
            sphere(0.1, (1, 0, 0)),
            0.8,
        ),
    ],
)
def test_primitive_pairs(a, b, expected):
    assert gjk_distance(a, b) == pytest.approx(expected, abs=1e-7)


def test_rotated_box_corner():
    """Cubo girado 45° sobre z: la esquina queda a sqrt(2)/2 · lado del centro"""
    quarter = Rotation.from_euler("z", 45, degrees=True).as_quat()
    box = shape("box", [1, 1, 1], orientation=[quarter[3], *quarter[:3]])
    distance = gjk_distance(box, sphere(0.1, (2, 0, 0)))
    assert distance == pytest.approx(2 - math.sqrt(2) / 2 - 0.1, abs=1e-7)


def test_distance_is_symmetric():
    rng = np.random.default_rng(1)
    for _ in range(10):
        a = shape("box", rng.uniform(0.05, 0.3, 3), rng.uniform(-1, 1, 3), random_orientation(rng))
        b = shape("cylinder", rng.uniform(0.05, 0.3, 2), rng.uniform(-1, 1, 3), random_orientation(rng))
        assert gjk_distance(a, b) == pytest.approx(gjk_distance(b, a), abs=1e-7)


# ===== ORÁCULO CERRADO =====

def box_sphere_oracle(center, rotation, half, point, radius):
    local = rotation.T @ (point - center)
    return max(0.0, float(np.linalg.norm(local - np.clip(local, -half, half))) - radius)


def cylinder_sphere_oracle(center, rotation, radius, half_height, point, sphere_radius):
    local = rotation.T @ (point - center)
    radial = math.hypot(local[0], local[1])
    closest_radial = min(radial, radius)
    closest_z = float(np.clip(local[2], -half_height, half_height))
    gap = math.hypot(radial - closest_radial, local[2] - closest_z)
    return max(0.0, gap - sphere_radius)


def _oracle_pairs(count, seed):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        orientation = random_orientation(rng)
        rotation = Rotation.from_quat([*orientation[1:], orientation[0]]).as_matrix()
        point = rng.uniform(-1.0, 1.0, 3)
        radius = float(rng.uniform(0.01, 0.2))
        yield rng, orientation, rotation, point, radius


def _check_against_oracle(count, seed):
    for rng, orientation, rotation, point, radius in _oracle_pairs(count, seed):
        center = rng.uniform(-0.3, 0.3, 3)
        dims = rng.uniform(0.05, 0.6, 3)
        box = shape("box", dims, center, orientation)
        expected = box_sphere_oracle(center, rotation, dims / 2, point, radius)
        assert gjk_distance(box, sphere(radius, point)) == pytest.approx(expected, abs=1e-7)

        cyl_dims = rng.uniform(0.05, 0.5, 2)
        cylinder = shape("cylinder", cyl_dims, center, orientation)
        expected = cylinder_sphere_oracle(center, rotation, cyl_dims[0], cyl_dims[1] / 2, point, radius)
        assert gjk_distance(cylinder, sphere(radius, point)) == pytest.approx(expected, abs=1e-6)


def test_against_closed_form():
    _check_against_oracle(20, seed=7)


@pytest.mark.slow
def test_against_closed_form_many():
    _check_against_oracle(200, seed=8)


# ===== HOLGURA DEL BRAZO =====

STRAIGHT = np.array([0.0, 0.0, 0.0, -0.0698, 0.0, 0.0, 0.0])


def _sphere_near_link3(panda, offset, radius=0.02):
    """Esfera desplazada `offset` en y desde el punto medio del eslabón 3 (brazo en el plano xz)"""
    segments = capsule_segments_world(panda, chain_transforms(panda, STRAIGHT))
    assert np.allclose(segments[:, :, 1], 0.0, atol=1e-12)
    midpoint = segments[3].mean(axis=0)
    return sphere(radius, midpoint + np.array([0.0, offset, 0.0]))


def test_argmin_link(panda):
    report = arm_clearance(panda, STRAIGHT, _sphere_near_link3(panda, 0.12))
    assert report.argmin_link == 3
    assert report.min_distance == pytest.approx(0.12 - 0.06 - 0.02, abs=1e-9)
    assert report.per_link[3] == report.min_distance
    assert len(report.per_link) == 7


def test_collision_margin(panda):
    ball = _sphere_near_link3(panda, 0.12)
    assert is_collision(panda, STRAIGHT, ball, margin=0.05)
    assert not is_collision(panda, STRAIGHT, ball, margin=0.03)
    with pytest.raises(DomainError):
        is_collision(panda, STRAIGHT, ball, margin=-0.01)


def test_contact_is_zero(panda):
    report = arm_clearance(panda, STRAIGHT, _sphere_near_link3(panda, 0.0))
    assert report.min_distance == 0.0
    assert report.argmin_link == 3
    assert is_collision(panda, STRAIGHT, _sphere_near_link3(panda, 0.0))


def test_union_is_minimum_over_members(panda):
    near = _sphere_near_link3(panda, 0.12)
    far = sphere(0.05, (0.0, 0.7, 0.3))
    union = arm_clearance(panda, STRAIGHT, [far, near])
    assert union.min_distance == pytest.approx(
        min(arm_clearance(panda, STRAIGHT, near).min_distance, arm_clearance(panda, STRAIGHT, far).min_distance),
        abs=1e-12,
    )
    for link in range(7):
        assert union.per_link[link] == pytest.approx(
            min(arm_clearance(panda, STRAIGHT, near).per_link[link], arm_clearance(panda, STRAIGHT, far).per_link[link]),
            abs=1e-12,
        )


def test_empty_union_is_rejected(panda):
    with pytest.raises(DomainError):
        arm_clearance(panda, STRAIGHT, [])


def test_clearance_cost():
    assert clearance_cost(ClearanceReport(min_distance=0.5, argmin_link=0, per_link=[0.5] * 7)) == pytest.approx(4.0)
    assert clearance_cost(ClearanceReport(min_distance=0.0, argmin_link=2, per_link=[1, 1, 0, 1, 1, 1, 1])) == math.inf


def test_invalid_shape_dimensions():
    with pytest.raises(ValueError):
        shape("box", [0.1, 0.1])
    with pytest.raises(ValueError):
        shape("sphere", [-0.1])


# ===== ORÁCULO POR MUESTREO DE SUPERFICIE =====

def _rotation_of(orientation):
    return Rotation.from_quat([*orientation[1:], orientation[0]]).as_matrix()


def point_box_distance(points, center, rotation, half):
    local = (points - center) @ rotation
    return np.linalg.norm(local - np.clip(local, -half, half), axis=1)


def point_cylinder_distance(points, center, rotation, radius, half_height):
    local = (points - center) @ rotation
    radial = np.hypot(local[:, 0], local[:, 1])
    return np.hypot(np.maximum(radial - radius, 0.0), np.maximum(np.abs(local[:, 2]) - half_height, 0.0))


def box_surface(center, rotation, dims, count=41):
    half = np.asarray(dims, dtype=float) / 2
    u = np.linspace(-1.0, 1.0, count)
    a, b = (g.ravel() for g in np.meshgrid(u, u))
    faces = []
    for axis in range(3):
        others = [i for i in range(3) if i != axis]
        for sign in (-1.0, 1.0):
            local = np.empty((len(a), 3))
            local[:, axis] = sign
            local[:, others[0]] = a
            local[:, others[1]] = b
            faces.append(local * half)
    return np.vstack(faces) @ rotation.T + center


def cylinder_surface(center, rotation, radius, half_height, angles=256, rings=41):
    theta = np.linspace(0.0, 2 * math.pi, angles, endpoint=False)
    heights = np.linspace(-half_height, half_height, rings)
    t, h = (g.ravel() for g in np.meshgrid(theta, heights))
    side = np.column_stack([radius * np.cos(t), radius * np.sin(t), h])
    t, r = (g.ravel() for g in np.meshgrid(theta, np.linspace(0.0, radius, rings)))
    caps = [np.column_stack([r * np.cos(t), r * np.sin(t), np.full(len(t), z)]) for z in (-half_height, half_height)]
    return np.vstack([side, *caps]) @ rotation.T + center


def _separated_pair(rng):
    """Orientaciones aleatorias y centros a 1 m: las formas quedan separadas al menos 0.3 m"""
    first, second = random_orientation(rng), random_orientation(rng)
    direction = rng.normal(size=3)
    offset = direction / np.linalg.norm(direction)
    return (np.zeros(3), first, _rotation_of(first)), (offset, second, _rotation_of(second))


def _assert_sampled(distance, sampled):
    assert distance <= sampled + 1e-9
    assert sampled - distance <= 2e-3


def test_box_cylinder_against_surface_samples():
    rng = np.random.default_rng(21)
    for _ in range(5):
        (c1, o1, r1), (c2, o2, r2) = _separated_pair(rng)
        dims = rng.uniform(0.05, 0.4, 3)
        radius, height = rng.uniform(0.03, 0.2), rng.uniform(0.05, 0.4)
        distance = gjk_distance(shape("box", dims, c1, o1), shape("cylinder", [radius, height], c2, o2))
        sampled = point_cylinder_distance(box_surface(c1, r1, dims), c2, r2, radius, height / 2).min()
        _assert_sampled(distance, sampled)


def test_capsule_box_against_axis_samples():
    rng = np.random.default_rng(22)
    for _ in range(5):
        (c1, o1, r1), (c2, o2, r2) = _separated_pair(rng)
        radius, length = rng.uniform(0.02, 0.1), rng.uniform(0.05, 0.4)
        dims = rng.uniform(0.05, 0.4, 3)
        distance = gjk_distance(shape("capsule", [radius, length], c1, o1), shape("box", dims, c2, o2))
        t = np.linspace(-length / 2, length / 2, 2001)
        axis = c1 + t[:, None] * r1[:, 2]
        sampled = point_box_distance(axis, c2, r2, dims / 2).min() - radius
        _assert_sampled(distance, sampled)


def test_cylinder_cylinder_against_surface_samples():
    rng = np.random.default_rng(23)
    for _ in range(5):
        (c1, o1, r1), (c2, o2, r2) = _separated_pair(rng)
        a = rng.uniform(0.03, 0.2), rng.uniform(0.05, 0.4)
        b = rng.uniform(0.03, 0.2), rng.uniform(0.05, 0.4)
        distance = gjk_distance(shape("cylinder", a, c1, o1), shape("cylinder", b, c2, o2))
        sampled = point_cylinder_distance(cylinder_surface(c1, r1, a[0], a[1] / 2), c2, r2, b[0], b[1] / 2).min()
        _assert_sampled(distance, sampled)


def test_translation_invariance():
    rng = np.random.default_rng(24)
    for _ in range(10):
        (c1, o1, _), (c2, o2, _) = _separated_pair(rng)
        dims, cyl = rng.uniform(0.05, 0.4, 3), rng.uniform(0.05, 0.3, 2)
        shift = rng.uniform(-5.0, 5.0, 3)
        base = gjk_distance(shape("box", dims, c1, o1), shape("cylinder", cyl, c2, o2))
        moved = gjk_distance(shape("box", dims, c1 + shift, o1), shape("cylinder", cyl, c2 + shift, o2))
        assert moved == pytest.approx(base, abs=1e-9)


# ===== COSTO Y LÍMITES DE GJK =====

def test_cost_strictly_decreasing():
    distances = np.linspace(0.01, 2.0, 50)
    for params in (CostParams(), CostParams(beta=1.0), CostParams(beta=3.5)):
        costs = [clearance_cost(ClearanceReport(min_distance=d, argmin_link=0, per_link=[d] * 7), params) for d in distances]
        assert all(a > b for a, b in zip(costs, costs[1:]))
    assert distance_cost(0.5, CostParams(beta=1.0)) == pytest.approx(2.0)
    assert distance_cost(-0.1) == math.inf


def test_distant_obstacle(panda):
    assert arm_clearance(panda, STRAIGHT, sphere(0.05, (10.0, 0.0, 0.0))).min_distance > 9.0


def test_gjk_iteration_limit_is_honored(panda):
    a = shape("box", [1, 1, 1])
    b = shape("box", [1, 1, 1], (3.0, 0.4, 0.2))
    assert gjk_distance(a, b) == pytest.approx(2.0, abs=1e-7)
    with pytest.raises(ConvergenceError):
        gjk_distance(a, b, GjkParams(max_iterations=1))
    crate = shape("box", [0.2, 0.2, 0.2], (0.5, 0.5, 0.5))
    assert arm_clearance(panda, STRAIGHT, crate).min_distance > 0.0
    with pytest.raises(ConvergenceError):
        arm_clearance(panda, STRAIGHT, crate, GjkParams(max_iterations=1))
