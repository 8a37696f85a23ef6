"""
Modelo cinemático del manipulador: cinemática directa con DH modificado,
límites articulares y lectura/escritura del archivo de robot.
"""

import hashlib
import logging
from importlib import resources
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from pydantic import ValidationError
from scipy.spatial.transform import Rotation

from latentroute.engine import textformat
from latentroute.errors import DomainError, InputError, JointLimitError, ParseError
from latentroute.schemas.robot import CapsuleSpec, DhRow, JointLimit, Pose, RobotModel


logger = logging.getLogger(__name__)

DOF = 7


# =====================================================
# TRANSFORMACIONES
# =====================================================

def dh_transform(a: float, d: float, alpha: float, theta: float) -> np.ndarray:
    """T = RotX(alpha) · TransX(a) · RotZ(theta) · TransZ(d)"""
    ct, st = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(alpha), np.sin(alpha)
    return np.array([
        [ct, -st, 0.0, a],
        [st * ca, ct * ca, -sa, -d * sa],
        [st * sa, ct * sa, ca, d * ca],
        [0.0, 0.0, 0.0, 1.0],
    ])


def check_limits(model: RobotModel, q: Sequence[float]) -> np.ndarray:
    """
    Valida un JointVector.

    Raises:
        JointLimitError: con el índice de la primera articulación fuera de rango
    """
    q = np.asarray(q, dtype=float)
    if q.shape != (DOF,):
        raise DomainError(f"se esperaban {DOF} ángulos, se recibieron {q.size}")
    bad = np.flatnonzero(~((q >= model.lower) & (q <= model.upper)))
    if bad.size:
        i = int(bad[0])
        raise JointLimitError(i, float(q[i]), float(model.lower[i]), float(model.upper[i]))
    return q


def chain_transforms(model: RobotModel, q: Sequence[float], check: bool = True) -> np.ndarray:
    """Transformaciones acumuladas (7, 4, 4): el elemento i es T_0^(i+1)"""
    q = check_limits(model, q) if check else np.asarray(q, dtype=float)
    dh = model.dh_array
    frames = np.empty((DOF, 4, 4))
    current = np.eye(4)
    for i in range(DOF):
        a, d, alpha, offset = dh[i]
        current = current @ dh_transform(a, d, alpha, q[i] + offset)
        frames[i] = current
    return frames


def batch_chain_transforms(model: RobotModel, configs: np.ndarray) -> np.ndarray:
    """Versión vectorizada de chain_transforms, sin validar límites: (n, 7, 4, 4)"""
    configs = np.asarray(configs, dtype=float).reshape(-1, DOF)
    n = len(configs)
    frames = np.empty((n, DOF, 4, 4))
    current = np.broadcast_to(np.eye(4), (n, 4, 4))
    for i, (a, d, alpha, offset) in enumerate(model.dh_array):
        theta = configs[:, i] + offset
        ct, st = np.cos(theta), np.sin(theta)
        ca, sa = np.cos(alpha), np.sin(alpha)
        step = np.zeros((n, 4, 4))
        step[:, 0, 0], step[:, 0, 1], step[:, 0, 3] = ct, -st, a
        step[:, 1, 0], step[:, 1, 1], step[:, 1, 2], step[:, 1, 3] = st * ca, ct * ca, -sa, -d * sa
        step[:, 2, 0], step[:, 2, 1], step[:, 2, 2], step[:, 2, 3] = st * sa, ct * sa, ca, d * ca
        step[:, 3, 3] = 1.0
        current = current @ step
        frames[:, i] = current
    return frames


def batch_pose_vectors(transforms: np.ndarray) -> np.ndarray:
    """(n, 4, 4) -> (n, 7) con (x, y, z, qw, qx, qy, qz)"""
    xyzw = Rotation.from_matrix(transforms[:, :3, :3]).as_quat()
    return np.hstack([transforms[:, :3, 3], canonical_quaternions(np.roll(xyzw, 1, axis=1))])


def canonical_quaternions(quats: np.ndarray) -> np.ndarray:
    """Normaliza y fija el signo: primera componente no nula positiva (w >= 0)"""
    quats = np.atleast_2d(np.asarray(quats, dtype=float))
    quats = quats / np.linalg.norm(quats, axis=1, keepdims=True)
    first = np.argmax(quats != 0.0, axis=1)
    signs = np.sign(quats[np.arange(len(quats)), first])
    return quats * signs[:, None]


def matrix_quaternion(rotation: np.ndarray) -> np.ndarray:
    """Cuaternión (w, x, y, z) con w >= 0"""
    xyzw = Rotation.from_matrix(rotation).as_quat()
    return canonical_quaternions(np.roll(xyzw, 1))[0]


def pose_vector(transform: np.ndarray) -> np.ndarray:
    """(x, y, z, qw, qx, qy, qz) de una transformación homogénea"""
    return np.concatenate([transform[:3, 3], matrix_quaternion(transform[:3, :3])])


def to_pose(transform: np.ndarray) -> Pose:
    vec = pose_vector(transform)
    return Pose(position=vec[:3].tolist(), orientation=vec[3:].tolist())


def forward_kinematics(model: RobotModel, q: Sequence[float]) -> Pose:
    """
    Pose de la brida para la configuración q.

    Raises:
        JointLimitError: si alguna articulación viola sus límites
    """
    return to_pose(chain_transforms(model, q)[-1])


def link_poses(model: RobotModel, q: Sequence[float]) -> List[Pose]:
    """Poses acumuladas de los 7 marcos; la última es la de forward_kinematics"""
    return [to_pose(T) for T in chain_transforms(model, q)]


def capsule_segments_world(model: RobotModel, frames: np.ndarray) -> np.ndarray:
    """(7, 2, 3): extremos de cada cápsula en coordenadas del mundo"""
    local = model.capsule_segments
    rot = frames[:, :3, :3]
    trans = frames[:, :3, 3]
    return np.einsum("lij,lkj->lki", rot, local) + trans[:, None, :]


# =====================================================
# MUESTREO
# =====================================================

def random_configuration(model: RobotModel, rng_seed: int) -> np.ndarray:
    """Muestra uniforme dentro de los límites; misma semilla, mismo vector"""
    rng = np.random.default_rng(rng_seed)
    return rng.uniform(model.lower, model.upper)


def random_configurations(model: RobotModel, count: int, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(model.lower, model.upper, size=(count, DOF))


def clamp_to_limits(model: RobotModel, q: np.ndarray) -> np.ndarray:
    return np.clip(q, model.lower, model.upper)


# =====================================================
# ARCHIVO DE ROBOT
# =====================================================

def parse_robot(text: str, source: str = "<robot>") -> RobotModel:
    """
    Lee el formato de robot: 'name = ...', luego secciones [dh], [limits], [capsules].

    Raises:
        ParseError: sintaxis o valores inválidos, con línea y columna
    """
    sections = textformat.parse_sections(text, source)
    name = "robot"
    preamble = sections[0].assignments(source)
    for key, entry in preamble.items():
        if key != "name":
            raise textformat.unknown_key(entry, source)
        name = textformat.text_value(entry)
    if sections[0].rows():
        row = sections[0].rows()[0]
        raise ParseError("fila fuera de sección", source, row.line, row.tokens[0].column, row.tokens[0].text)

    widths = {"dh": 4, "limits": 2, "capsules": 7}
    tables = {}
    for section in sections[1:]:
        if section.name not in widths:
            raise ParseError("sección desconocida", source, section.line, 1, section.name)
        if section.name in tables:
            raise ParseError("sección repetida", source, section.line, 1, section.name)
        if section.argument is not None or section.assignments(source):
            raise ParseError("la sección solo admite filas", source, section.line, 1, section.name)
        rows = [textformat.floats(r.tokens, widths[section.name], source, r.line) for r in section.rows()]
        if len(rows) != DOF:
            raise ParseError(f"[{section.name}] necesita {DOF} filas, tiene {len(rows)}", source, section.line, 1)
        tables[section.name] = (section, rows)

    for required in widths:
        if required not in tables:
            raise ParseError(f"falta la sección [{required}]", source, len(text.splitlines()) or 1, 1)

    try:
        return RobotModel(
            name=name,
            dh_rows=[DhRow(a=r[0], d=r[1], alpha=r[2], theta_offset=r[3]) for r in tables["dh"][1]],
            joint_limits=[JointLimit(lower=r[0], upper=r[1]) for r in tables["limits"][1]],
            capsules=[CapsuleSpec(radius=r[0], a=r[1:4], b=r[4:7]) for r in tables["capsules"][1]],
        )
    except ValidationError as e:
        first = e.errors()[0]
        section_name = {"dh_rows": "dh", "joint_limits": "limits", "capsules": "capsules"}.get(
            str(first["loc"][0]) if first["loc"] else "", "dh"
        )
        section = tables[section_name][0]
        row = first["loc"][1] if len(first["loc"]) > 1 and isinstance(first["loc"][1], int) else 0
        line = section.rows()[row].line if section.rows() else section.line
        raise ParseError(first["msg"], source, line, 1)


def dump_robot(model: RobotModel) -> str:
    """Serializa el modelo en el formato de texto (canónico, floats exactos)"""
    lines = [f"name = {model.name}", "", "[dh]"]
    lines += [textformat.format_row([r.a, r.d, r.alpha, r.theta_offset]) for r in model.dh_rows]
    lines += ["", "[limits]"]
    lines += [textformat.format_row([lim.lower, lim.upper]) for lim in model.joint_limits]
    lines += ["", "[capsules]"]
    lines += [textformat.format_row([c.radius, *c.a, *c.b]) for c in model.capsules]
    return "\n".join(lines) + "\n"


def robot_digest(model: RobotModel) -> str:
    return hashlib.sha256(dump_robot(model).encode("utf-8")).hexdigest()


def load_robot(path: Optional[str] = None) -> RobotModel:
    """
    Carga un robot desde archivo; sin ruta, el Panda incluido en el paquete.

    Raises:
        InputError: archivo inexistente o ilegible
        ParseError: contenido inválido
    """
    if not path:
        text = resources.files("latentroute.data").joinpath("panda.robot").read_text(encoding="utf-8")
        return parse_robot(text, "panda.robot")
    file_path = Path(path)
    try:
        text = file_path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise InputError(f"no se puede leer el archivo de robot {file_path}: {e}")
    model = parse_robot(text, str(file_path))
    logger.debug("robot '%s' cargado desde %s", model.name, file_path)
    return model
