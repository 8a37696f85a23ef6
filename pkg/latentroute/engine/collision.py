"""
Distancia mínima entre formas convexas (GJK), holgura del brazo completo
y costo recíproco de proximidad.

GJK trabaja sobre la geometría "núcleo" de cada forma: un punto para la
esfera, un segmento para la cápsula y el cuerpo completo para caja, cilindro
y hull. El radio de esfera y cápsula se resta al final como margen, así las
formas redondeadas quedan exactas.
"""

import logging
import math
from typing import List, Sequence, Tuple, Union

import numpy as np

from latentroute.engine.kinematics import capsule_segments_world, chain_transforms
from latentroute.errors import ConvergenceError, DomainError
from latentroute.schemas.collision import ClearanceReport, ConvexShape, CostParams, GjkParams
from latentroute.schemas.robot import Pose, RobotModel


logger = logging.getLogger(__name__)

DEFAULT_GJK = GjkParams()
_EPS = 1e-12
_EPS_SQ = _EPS * _EPS

Obstacle = Union[ConvexShape, Sequence[ConvexShape]]


# =====================================================
# NÚCLEOS CON FUNCIÓN DE SOPORTE
# =====================================================

class _Core:
    """Función de soporte del núcleo de una forma, en coordenadas del mundo"""

    kind = "core"
    margin = 0.0
    center: np.ndarray

    def support(self, d: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class _PointCore(_Core):
    kind = "point"

    def __init__(self, center: np.ndarray, margin: float):
        self.center = center
        self.margin = margin

    def support(self, d):
        return self.center


class _SegmentCore(_Core):
    kind = "segment"

    def __init__(self, a: np.ndarray, b: np.ndarray, margin: float):
        self.a = a
        self.b = b
        self.center = 0.5 * (a + b)
        self.margin = margin

    def support(self, d):
        return self.b if d @ (self.b - self.a) > 0.0 else self.a


class _BoxCore(_Core):
    kind = "box"

    def __init__(self, center: np.ndarray, rotation: np.ndarray, half: np.ndarray):
        self.center = center
        self.rotation = rotation
        self.half = half

    def support(self, d):
        local = self.rotation.T @ d
        return self.center + self.rotation @ np.where(local >= 0.0, self.half, -self.half)


class _CylinderCore(_Core):
    kind = "cylinder"

    def __init__(self, center: np.ndarray, rotation: np.ndarray, radius: float, half_height: float):
        self.center = center
        self.rotation = rotation
        self.radius = radius
        self.half_height = half_height

    def support(self, d):
        local = self.rotation.T @ d
        radial = math.hypot(local[0], local[1])
        if radial > _EPS:
            scale = self.radius / radial
            point = np.array([local[0] * scale, local[1] * scale, 0.0])
        else:
            point = np.zeros(3)
        point[2] = self.half_height if local[2] >= 0.0 else -self.half_height
        return self.center + self.rotation @ point


class _HullCore(_Core):
    kind = "hull"

    def __init__(self, points: np.ndarray):
        self.points = points
        self.center = points.mean(axis=0)

    def support(self, d):
        return self.points[int(np.argmax(self.points @ d))]


def core_of(shape: ConvexShape) -> _Core:
    """Construye el núcleo de soporte de una forma colocada"""
    center = shape.center
    if shape.kind == "sphere":
        return _PointCore(center, shape.dims[0])
    rotation = shape.rotation
    if shape.kind == "capsule":
        axis = rotation[:, 2] * (0.5 * shape.dims[1])
        return _SegmentCore(center - axis, center + axis, shape.dims[0])
    if shape.kind == "box":
        return _BoxCore(center, rotation, 0.5 * np.asarray(shape.dims, dtype=float))
    if shape.kind == "cylinder":
        return _CylinderCore(center, rotation, shape.dims[0], 0.5 * shape.dims[1])
    local = np.asarray(shape.points, dtype=float)
    return _HullCore(local @ rotation.T + center)


# =====================================================
# PUNTO MÁS CERCANO AL ORIGEN EN UN SIMPLEX
# =====================================================

def _closest_segment(a, b) -> Tuple[np.ndarray, List[int]]:
    ab = b - a
    denom = ab @ ab
    if denom < _EPS_SQ:
        return (a, [0]) if a @ a <= b @ b else (b, [1])
    t = -(a @ ab) / denom
    if t <= 0.0:
        return a, [0]
    if t >= 1.0:
        return b, [1]
    return a + t * ab, [0, 1]


def _closest_triangle(a, b, c) -> Tuple[np.ndarray, List[int]]:
    ab, ac = b - a, c - a
    n = np.cross(ab, ac)
    if n @ n < _EPS_SQ:
        # Triángulo degenerado: el mejor de sus lados
        best = None
        for i, j in ((0, 1), (0, 2), (1, 2)):
            pts = (a, b, c)
            p, sub = _closest_segment(pts[i], pts[j])
            ids = [(i, j)[k] for k in sub]
            if best is None or p @ p < best[0] @ best[0]:
                best = (p, ids)
        return best

    d1, d2 = -(ab @ a), -(ac @ a)
    if d1 <= 0.0 and d2 <= 0.0:
        return a, [0]
    d3, d4 = -(ab @ b), -(ac @ b)
    if d3 >= 0.0 and d4 <= d3:
        return b, [1]
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        return a + (d1 / (d1 - d3)) * ab, [0, 1]
    d5, d6 = -(ab @ c), -(ac @ c)
    if d6 >= 0.0 and d5 <= d6:
        return c, [2]
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        return a + (d2 / (d2 - d6)) * ac, [0, 2]
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return b + w * (c - b), [1, 2]
    # Interior: proyección sobre el plano
    return n * ((a @ n) / (n @ n)), [0, 1, 2]


def _closest_tetrahedron(points: List[np.ndarray]) -> Tuple[np.ndarray, List[int]]:
    faces = ((0, 1, 2, 3), (0, 2, 3, 1), (0, 3, 1, 2), (1, 3, 2, 0))
    best = None
    outside_any = False
    for i, j, k, opposite in faces:
        p0, p1, p2, p3 = points[i], points[j], points[k], points[opposite]
        n = np.cross(p1 - p0, p2 - p0)
        side_origin = -(p0 @ n)
        side_opposite = (p3 - p0) @ n
        if side_opposite * side_opposite < _EPS_SQ:
            # Tetraedro degenerado: se trata como si el origen estuviera fuera
            outside = True
        else:
            outside = side_origin * side_opposite < 0.0
        if not outside:
            continue
        outside_any = True
        p, sub = _closest_triangle(p0, p1, p2)
        ids = [(i, j, k)[m] for m in sub]
        if best is None or p @ p < best[0] @ best[0]:
            best = (p, ids)
    if not outside_any:
        return np.zeros(3), [0, 1, 2, 3]
    return best


def _closest_on_simplex(simplex: List[np.ndarray]) -> Tuple[np.ndarray, List[int]]:
    n = len(simplex)
    if n == 1:
        return simplex[0], [0]
    if n == 2:
        return _closest_segment(*simplex)
    if n == 3:
        return _closest_triangle(*simplex)
    return _closest_tetrahedron(simplex)


# =====================================================
# GJK
# =====================================================

def _core_distance(a: _Core, b: _Core, max_iterations: int, tolerance: float) -> float:
    """Distancia entre núcleos; 0 si se intersectan"""
    if a.kind == "point" and b.kind == "point":
        return float(np.linalg.norm(a.center - b.center))
    if {a.kind, b.kind} == {"point", "segment"}:
        point, segment = (a, b) if a.kind == "point" else (b, a)
        closest, _ = _closest_segment(segment.a - point.center, segment.b - point.center)
        return float(np.linalg.norm(closest))

    simplex: List[np.ndarray] = []
    v = a.center - b.center
    vv = float(v @ v)
    if vv < _EPS_SQ:
        # Los centros son interiores: diferencia nula implica contacto
        return 0.0

    for _ in range(max_iterations):
        w = a.support(-v) - b.support(v)
        vw = float(v @ w)
        # Sin progreso suficiente del soporte: v ya es la distancia
        if vv - vw <= tolerance * math.sqrt(vv):
            return math.sqrt(vv)
        if any(np.array_equal(w, s) for s in simplex):
            return math.sqrt(vv)

        simplex.append(w)
        closest, keep = _closest_on_simplex(simplex)
        simplex = [simplex[i] for i in keep]
        if len(simplex) == 4:
            return 0.0

        new_vv = float(closest @ closest)
        max_norm = max(float(s @ s) for s in simplex)
        if new_vv <= _EPS_SQ or new_vv <= 1e-15 * max_norm:
            return 0.0
        if new_vv >= vv * (1.0 - 1e-15) and len(simplex) > 1:
            return math.sqrt(min(vv, new_vv))
        v, vv = closest, new_vv

    raise ConvergenceError(
        f"GJK no convergió en {max_iterations} iteraciones (|v| = {math.sqrt(vv):.3e})",
        simplex=simplex,
    )


def gjk_distance(
    a: ConvexShape,
    b: ConvexShape,
    gjk: GjkParams = DEFAULT_GJK,
) -> float:
    """
    Distancia euclidiana mínima entre dos formas convexas.
    Retorna 0 si se tocan o intersectan. Simétrica en sus argumentos.

    Raises:
        ConvergenceError: con el último simplex si se agotan las iteraciones
    """
    ca, cb = core_of(a), core_of(b)
    return max(0.0, _core_distance(ca, cb, gjk.max_iterations, gjk.tolerance) - ca.margin - cb.margin)


# =====================================================
# HOLGURA DEL BRAZO
# =====================================================

def _members(obstacle: Obstacle) -> List[ConvexShape]:
    members = [obstacle] if isinstance(obstacle, ConvexShape) else list(obstacle)
    if not members:
        raise DomainError("el obstáculo no tiene miembros")
    return members


def link_capsule_shape(model: RobotModel, q: Sequence[float], link: int, check: bool = True) -> ConvexShape:
    """Cápsula del eslabón `link` colocada en el mundo como ConvexShape"""
    segments = capsule_segments_world(model, chain_transforms(model, q, check=check))
    a, b = segments[link]
    axis = b - a
    length = float(np.linalg.norm(axis))
    return ConvexShape(
        kind="capsule",
        dims=[float(model.capsule_radii[link]), length],
        pose=Pose(position=(0.5 * (a + b)).tolist(), orientation=_quaternion_z_to(axis / length).tolist()),
    )


def _quaternion_z_to(direction: np.ndarray) -> np.ndarray:
    """Cuaternión (w, x, y, z) que lleva el eje z a `direction`"""
    z = np.array([0.0, 0.0, 1.0])
    dot = float(z @ direction)
    if dot < -1.0 + 1e-12:
        return np.array([0.0, 1.0, 0.0, 0.0])
    quat = np.concatenate([[1.0 + dot], np.cross(z, direction)])
    return quat / np.linalg.norm(quat)


def clearance_from_frames(
    model: RobotModel,
    frames: np.ndarray,
    obstacle: Obstacle,
    gjk: GjkParams = DEFAULT_GJK,
) -> ClearanceReport:
    """Como arm_clearance, a partir de transformaciones ya calculadas"""
    members = [core_of(m) for m in _members(obstacle)]
    segments = capsule_segments_world(model, frames)
    per_link = []
    for link in range(len(segments)):
        link_core = _SegmentCore(segments[link, 0], segments[link, 1], float(model.capsule_radii[link]))
        best = math.inf
        for member in members:
            core = _core_distance(link_core, member, gjk.max_iterations, gjk.tolerance)
            best = min(best, max(0.0, core - link_core.margin - member.margin))
        per_link.append(best)
    argmin = int(np.argmin(per_link))  # primer índice en empates
    return ClearanceReport(min_distance=per_link[argmin], argmin_link=argmin, per_link=per_link)


def arm_clearance(
    model: RobotModel,
    q: Sequence[float],
    obstacle: Obstacle,
    gjk: GjkParams = DEFAULT_GJK,
) -> ClearanceReport:
    """
    Distancia de cada cápsula de eslabón al obstáculo (unión = mínimo sobre miembros).

    Raises:
        JointLimitError: q fuera de límites
        ConvergenceError: GJK no convergió
    """
    return clearance_from_frames(model, chain_transforms(model, q), obstacle, gjk)


def distance_cost(distance: float, params: CostParams = CostParams()) -> float:
    """1 / distance^beta; infinito cuando hay contacto"""
    if distance <= 0.0:
        return math.inf
    return 1.0 / distance ** params.beta


def clearance_cost(report: ClearanceReport, params: CostParams = CostParams()) -> float:
    return distance_cost(report.min_distance, params)


def is_collision(
    model: RobotModel,
    q: Sequence[float],
    obstacle: Obstacle,
    margin: float = 0.0,
    gjk: GjkParams = DEFAULT_GJK,
) -> bool:
    """True si la holgura mínima es <= margin"""
    if not margin >= 0.0:
        raise DomainError(f"el margen debe ser >= 0, recibido {margin}")
    return arm_clearance(model, q, obstacle, gjk).min_distance <= margin
