"""
Escenarios guionados: lectura/escritura del formato de texto, suite
incluida en el paquete y estado del obstáculo en cada tick.
"""

import hashlib
import logging
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError
from scipy.spatial.transform import Rotation, Slerp

from latentroute.engine import textformat
from latentroute.engine.kinematics import canonical_quaternions, check_limits
from latentroute.errors import DomainError, InputError, ParseError
from latentroute.schemas.collision import DIMENSION_COUNT, ConvexShape
from latentroute.schemas.robot import Pose, RobotModel
from latentroute.schemas.scenario import (
    MorphKeyframe,
    ObstacleSnapshot,
    ObstacleTrack,
    PoseKeyframe,
    Scenario,
)


logger = logging.getLogger(__name__)

SCENARIO_SUFFIX = ".scn"
SCENARIO_KEYS = ("id", "category", "description", "robot", "tick_seconds", "seed", "max_ticks", "start", "goal")
OBSTACLE_KEYS = ("kind", "dims", "appear", "disappear")
SHAPE_KINDS = ("sphere", "box", "cylinder", "capsule")


# =====================================================
# INTERPOLACIÓN
# =====================================================

def _bracket(ticks: Sequence[int], tick: int) -> Tuple[int, int]:
    """Índices (i, j) de los keyframes que rodean a tick; i == j si cae en uno o fuera del rango"""
    if tick <= ticks[0]:
        return 0, 0
    if tick >= ticks[-1]:
        return len(ticks) - 1, len(ticks) - 1
    j = int(np.searchsorted(ticks, tick, side="right"))
    i = j - 1
    if ticks[i] == tick:
        return i, i
    return i, j


def pose_at(track: ObstacleTrack, tick: int) -> Pose:
    """Posición lineal y orientación por slerp; exacta en los keyframes"""
    frames = track.trajectory
    i, j = _bracket([k.tick for k in frames], tick)
    if i == j:
        return frames[i].pose
    a, b = frames[i], frames[j]
    t = (tick - a.tick) / (b.tick - a.tick)
    p0, p1 = np.asarray(a.pose.position), np.asarray(b.pose.position)
    position = p0 + t * (p1 - p0)
    if a.pose.orientation == b.pose.orientation:
        orientation = a.pose.orientation
    else:
        rotations = Rotation.from_quat([np.roll(a.pose.orientation, -1), np.roll(b.pose.orientation, -1)])
        xyzw = Slerp([0.0, 1.0], rotations)([t]).as_quat()
        orientation = canonical_quaternions(np.roll(xyzw, 1, axis=1))[0].tolist()
    return Pose(position=position.tolist(), orientation=orientation)


def shape_at(track: ObstacleTrack, tick: int) -> Tuple[str, List[float]]:
    """
    Tipo y dimensiones en tick. Antes del primer keyframe de morph rige la
    forma base; entre keyframes del mismo tipo las dimensiones se interpolan,
    entre tipos distintos el cambio ocurre en el keyframe siguiente.
    """
    morph = track.morph
    if not morph or tick < morph[0].tick:
        return track.kind, list(track.dims)
    i, j = _bracket([k.tick for k in morph], tick)
    a = morph[i]
    if i == j or morph[j].kind != a.kind:
        return a.kind, list(a.dims)
    b = morph[j]
    t = (tick - a.tick) / (b.tick - a.tick)
    return a.kind, [x + t * (y - x) for x, y in zip(a.dims, b.dims)]


def is_active(track: ObstacleTrack, tick: int) -> bool:
    return tick >= track.appear and (track.disappear is None or tick < track.disappear)


def obstacle_at(s: Scenario, tick: int) -> Optional[ObstacleSnapshot]:
    """
    Obstáculo en el tick dado; None si ningún miembro está presente.

    Raises:
        DomainError: tick negativo
    """
    if tick < 0:
        raise DomainError(f"tick debe ser >= 0, recibido {tick}")
    ids, members = [], []
    for track in s.obstacles:
        if not is_active(track, tick):
            continue
        kind, dims = shape_at(track, tick)
        ids.append(track.name)
        members.append(ConvexShape(kind=kind, dims=dims, pose=pose_at(track, tick)))
    if not members:
        return None
    return ObstacleSnapshot(tick=tick, ids=ids, members=members)


def perturb_scenario(s: Scenario, seed: int, jitter: float) -> Scenario:
    """Desplaza las posiciones de los keyframes con ruido uniforme en [-jitter, jitter]"""
    if jitter < 0:
        raise DomainError("jitter debe ser >= 0")
    rng = np.random.default_rng(seed)
    tracks = []
    for track in s.obstacles:
        frames = []
        for frame in track.trajectory:
            offset = rng.uniform(-jitter, jitter, size=3) if jitter > 0 else np.zeros(3)
            position = (np.asarray(frame.pose.position) + offset).tolist()
            frames.append(PoseKeyframe(tick=frame.tick, pose=Pose(position=position, orientation=frame.pose.orientation)))
        tracks.append(track.model_copy(update={"trajectory": frames}))
    return s.model_copy(update={"obstacles": tracks, "seed": seed})


# =====================================================
# FORMATO DE TEXTO
# =====================================================

def _int_value(entry: textformat.Entry, source: str) -> int:
    return textformat.to_int(textformat.single(entry, source), source)


def _parse_header(section: textformat.Section, source: str) -> Dict:
    values: Dict = {}
    for key, entry in section.assignments(source).items():
        if key not in SCENARIO_KEYS:
            raise textformat.unknown_key(entry, source)
        if key in ("id", "category", "robot"):
            values[key] = textformat.single(entry, source).text
        elif key == "description":
            values[key] = textformat.text_value(entry)
        elif key == "tick_seconds":
            values[key] = textformat.to_float(textformat.single(entry, source), source)
        elif key in ("seed", "max_ticks"):
            values[key] = _int_value(entry, source)
        else:
            values[key] = textformat.floats(entry.tokens, 7, source, entry.line)
    for required in ("id", "start", "goal"):
        if required not in values:
            raise ParseError(f"[scenario] sin '{required}'", source, section.line, 1)
    if section.rows():
        row = section.rows()[0]
        raise ParseError("[scenario] no admite filas", source, row.line, row.tokens[0].column, row.tokens[0].text)
    return values


def _shape_kind(token: textformat.Token, source: str) -> str:
    if token.text not in SHAPE_KINDS:
        raise ParseError("tipo de forma desconocido", source, token.line, token.column, token.text)
    return token.text


def _parse_obstacle(section: textformat.Section, source: str) -> Dict:
    values: Dict = {"name": section.argument}
    entries = section.assignments(source)
    for key, entry in entries.items():
        if key not in OBSTACLE_KEYS:
            raise textformat.unknown_key(entry, source)
    if "kind" not in entries or "dims" not in entries:
        raise ParseError("[obstacle] necesita 'kind' y 'dims'", source, section.line, 1)
    kind = _shape_kind(textformat.single(entries["kind"], source), source)
    values["kind"] = kind
    values["dims"] = textformat.floats(entries["dims"].tokens, DIMENSION_COUNT[kind], source, entries["dims"].line)
    if "appear" in entries:
        values["appear"] = _int_value(entries["appear"], source)
    if "disappear" in entries:
        token = textformat.single(entries["disappear"], source)
        values["disappear"] = None if token.text == "none" else textformat.to_int(token, source)
    return values


def _parse_trajectory(section: textformat.Section, source: str) -> List[PoseKeyframe]:
    frames = []
    for row in section.rows():
        if not row.tokens:
            continue
        tick = textformat.to_int(row.tokens[0], source)
        values = textformat.floats(row.tokens[1:], 7, source, row.line)
        try:
            frames.append(PoseKeyframe(tick=tick, pose=Pose(position=values[:3], orientation=values[3:])))
        except ValidationError as e:
            raise ParseError(e.errors()[0]["msg"], source, row.line, row.tokens[0].column)
    return frames


def _parse_morph(section: textformat.Section, source: str) -> List[MorphKeyframe]:
    frames = []
    for row in section.rows():
        if len(row.tokens) < 2:
            raise ParseError("fila de morph incompleta", source, row.line, 1)
        tick = textformat.to_int(row.tokens[0], source)
        kind = _shape_kind(row.tokens[1], source)
        dims = textformat.floats(row.tokens[2:], DIMENSION_COUNT[kind], source, row.line)
        try:
            frames.append(MorphKeyframe(tick=tick, kind=kind, dims=dims))
        except ValidationError as e:
            raise ParseError(e.errors()[0]["msg"], source, row.line, row.tokens[0].column)
    return frames


def parse_scenario(text: str, source: str = "<escenario>") -> Scenario:
    """
    Lee el formato de escenario: [scenario], luego [obstacle NOMBRE],
    [trajectory NOMBRE] y [morph NOMBRE] opcional por cada obstáculo.

    Raises:
        ParseError: sintaxis, clave, tipo de forma o valor inválido, con línea y columna
    """
    sections = textformat.parse_sections(text, source)
    if sections[0].entries:
        entry = sections[0].entries[0]
        raise ParseError("contenido fuera de sección", source, entry.line, 1)

    header = None
    obstacles: Dict[str, Dict] = {}
    order: List[str] = []
    trajectories: Dict[str, List[PoseKeyframe]] = {}
    morphs: Dict[str, List[MorphKeyframe]] = {}
    lines: Dict[str, int] = {}

    for section in sections[1:]:
        if section.name == "scenario":
            if header is not None:
                raise ParseError("sección repetida", source, section.line, 1, "scenario")
            header = _parse_header(section, source)
            lines["scenario"] = section.line
            continue
        if section.name not in ("obstacle", "trajectory", "morph"):
            raise ParseError("sección desconocida", source, section.line, 1, section.name)
        name = section.argument
        if not name:
            raise ParseError(f"[{section.name}] necesita un nombre", source, section.line, 1)
        target = {"obstacle": obstacles, "trajectory": trajectories, "morph": morphs}[section.name]
        if name in target:
            raise ParseError("sección repetida", source, section.line, 1, f"{section.name} {name}")
        if section.name == "obstacle":
            target[name] = _parse_obstacle(section, source)
            order.append(name)
        elif section.name == "trajectory":
            if section.assignments(source):
                raise ParseError("[trajectory] solo admite filas", source, section.line, 1)
            target[name] = _parse_trajectory(section, source)
        else:
            if section.assignments(source):
                raise ParseError("[morph] solo admite filas", source, section.line, 1)
            target[name] = _parse_morph(section, source)
        lines[f"{section.name} {name}"] = section.line

    if header is None:
        raise ParseError("falta la sección [scenario]", source, len(text.splitlines()) or 1, 1)
    for name in list(trajectories) + list(morphs):
        if name not in obstacles:
            line = lines.get(f"trajectory {name}", lines.get(f"morph {name}", 1))
            raise ParseError("obstáculo no declarado", source, line, 1, name)

    tracks = []
    for name in order:
        if name not in trajectories:
            raise ParseError(f"obstáculo '{name}' sin [trajectory]", source, lines[f"obstacle {name}"], 1, name)
        try:
            tracks.append(ObstacleTrack(**obstacles[name], trajectory=trajectories[name], morph=morphs.get(name, [])))
        except ValidationError as e:
            raise ParseError(e.errors()[0]["msg"], source, lines[f"obstacle {name}"], 1, name)
    try:
        return Scenario(**header, obstacles=tracks)
    except ValidationError as e:
        raise ParseError(e.errors()[0]["msg"], source, lines["scenario"], 1)


def dump_scenario(s: Scenario) -> str:
    """Forma canónica del escenario; parse_scenario(dump_scenario(s)) == s"""
    fmt = textformat.format_float
    lines = [
        "[scenario]",
        f"id = {s.id}",
        f"category = {s.category}",
    ]
    if s.description:
        lines.append(f"description = {s.description}")
    lines += [
        f"robot = {s.robot}",
        f"tick_seconds = {fmt(s.tick_seconds)}",
        f"seed = {s.seed}",
        f"max_ticks = {s.max_ticks}",
        f"start = {textformat.format_row(s.start)}",
        f"goal = {textformat.format_row(s.goal)}",
    ]
    for track in s.obstacles:
        lines += [
            "",
            f"[obstacle {track.name}]",
            f"kind = {track.kind}",
            f"dims = {textformat.format_row(track.dims)}",
            f"appear = {track.appear}",
            f"disappear = {'none' if track.disappear is None else track.disappear}",
            "",
            f"[trajectory {track.name}]",
        ]
        for frame in track.trajectory:
            lines.append(f"{frame.tick} {textformat.format_row([*frame.pose.position, *frame.pose.orientation])}")
        if track.morph:
            lines += ["", f"[morph {track.name}]"]
            for frame in track.morph:
                lines.append(f"{frame.tick} {frame.kind} {textformat.format_row(frame.dims)}")
    return "\n".join(lines) + "\n"


def scenario_digest(s: Scenario) -> str:
    return hashlib.sha256(dump_scenario(s).encode("utf-8")).hexdigest()


def check_scenario(s: Scenario, robot: RobotModel) -> None:
    """
    Raises:
        JointLimitError: inicio o meta fuera de los límites del robot
    """
    check_limits(robot, s.start)
    check_limits(robot, s.goal)


def load_scenario(path: Path, robot: Optional[RobotModel] = None) -> Scenario:
    """
    Raises:
        InputError: archivo inexistente o ilegible
        ParseError: contenido inválido
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise InputError(f"no se puede leer el escenario {path}: {e}")
    scenario = parse_scenario(text, str(path))
    if robot is not None:
        check_scenario(scenario, robot)
    return scenario


def save_scenario(s: Scenario, path: Path) -> None:
    Path(path).write_text(dump_scenario(s), encoding="utf-8")


# =====================================================
# SUITE INCLUIDA
# =====================================================

def builtin_suite() -> List[Scenario]:
    """Escenarios empaquetados en latentroute/data/scenarios, ordenados por nombre de archivo"""
    folder = resources.files("latentroute.data.scenarios")
    files = sorted((f for f in folder.iterdir() if f.name.endswith(SCENARIO_SUFFIX)), key=lambda f: f.name)
    return [parse_scenario(f.read_text(encoding="utf-8"), f.name) for f in files]


def builtin_scenario(scenario_id: str) -> Scenario:
    """
    Raises:
        InputError: no existe un escenario incluido con ese id
    """
    for scenario in builtin_suite():
        if scenario.id == scenario_id:
            return scenario
    known = ", ".join(s.id for s in builtin_suite())
    raise InputError(f"escenario '{scenario_id}' desconocido (incluidos: {known})")
