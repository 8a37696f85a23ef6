"""
Ejecutivo de lazo cerrado: sigue los waypoints decodificados hacia la meta,
vigila la holgura contra el obstáculo vivo y reencamina cuando se viola el umbral.

Máquina de estados:
    following -> replanning -> following
    following -> reached
    replanning -> failed(trapped) tras trap_patience ticks sin avance
    cualquiera -> failed (unreachable | timeout)
"""

import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Protocol, Sequence, Set, Tuple

import numpy as np
from pydantic import ValidationError

from latentroute.engine.collision import DEFAULT_GJK, clearance_from_frames, distance_cost
from latentroute.engine.kinematics import DOF, batch_chain_transforms, chain_transforms, check_limits, pose_vector
from latentroute.engine.roadmap import Roadmap, nearest_node, shortest_path
from latentroute.engine.scenarios import obstacle_at
from latentroute.errors import CorruptArtifactError, DomainError, InputError
from latentroute.schemas.collision import ClearanceReport, GjkParams
from latentroute.schemas.planner import (
    ObstacleMemberRecord,
    PlanEvent,
    PlanState,
    RunSummary,
    SafetyConfig,
    TraceHeader,
    TraceRecord,
)
from latentroute.schemas.robot import RobotModel
from latentroute.schemas.scenario import ObstacleSnapshot, Scenario


logger = logging.getLogger(__name__)

RELABEL_FACTOR = 5.0


class StateEncoder(Protocol):
    """Lo que el ejecutivo necesita del encoder: vector crudo de 18 campos -> punto latente"""

    def encode_state(self, raw: Sequence[float]) -> np.ndarray:
        ...

    def default_obstacle_position(self) -> np.ndarray:
        ...


# =====================================================
# HOLGURA EN VIVO
# =====================================================

class LiveChecker:
    """Holgura del brazo contra el obstáculo de un tick, con caché por nodo y por configuración"""

    def __init__(
        self,
        robot: RobotModel,
        r: Roadmap,
        obstacle: Optional[ObstacleSnapshot],
        gjk: GjkParams = DEFAULT_GJK,
    ):
        self.robot = robot
        self.roadmap = r
        self.obstacle = obstacle
        self.gjk = gjk
        self._reports: Dict[Tuple[float, ...], ClearanceReport] = {}
        self._nodes: Dict[int, float] = {}

    def report(self, q: Sequence[float]) -> Optional[ClearanceReport]:
        if self.obstacle is None:
            return None
        key = tuple(float(v) for v in q)
        if key not in self._reports:
            frames = chain_transforms(self.robot, key, check=False)
            self._reports[key] = clearance_from_frames(self.robot, frames, self.obstacle.members, self.gjk)
        return self._reports[key]

    def distance(self, q: Sequence[float]) -> float:
        report = self.report(q)
        return math.inf if report is None else report.min_distance

    def node_distance(self, node: int) -> float:
        if node not in self._nodes:
            self._nodes[node] = self.distance(self.roadmap.joints[node])
        return self._nodes[node]

    def node_safe(self, node: int, threshold: float) -> bool:
        return self.node_distance(node) > threshold

    def unsafe_nodes(self, threshold: float, nodes: Optional[Iterable[int]] = None) -> Set[int]:
        """Nodos que violan el umbral; sin `nodes`, todo el roadmap"""
        if self.obstacle is None:
            return set()
        candidates = [n for n in (range(len(self.roadmap)) if nodes is None else nodes) if n not in self._nodes]
        if candidates:
            frames = batch_chain_transforms(self.robot, self.roadmap.joints[candidates])
            for node, node_frames in zip(candidates, frames):
                report = clearance_from_frames(self.robot, node_frames, self.obstacle.members, self.gjk)
                self._nodes[node] = report.min_distance
        pool = range(len(self.roadmap)) if nodes is None else nodes
        return {n for n in pool if self._nodes[n] <= threshold}


# =====================================================
# CODIFICACIÓN DEL ESTADO
# =====================================================

def state_vector(
    robot: RobotModel,
    encoder: StateEncoder,
    q: Sequence[float],
    obstacle: Optional[ObstacleSnapshot],
) -> np.ndarray:
    """
    Vector de 18 campos para el encoder: articulaciones, pose del efector,
    posición del miembro más cercano al efector (o la media del corpus sin
    obstáculo) y bandera 0.
    """
    q = np.asarray(q, dtype=float)
    pose = pose_vector(chain_transforms(robot, q, check=False)[-1])
    if obstacle is None:
        obstacle_pos = np.asarray(encoder.default_obstacle_position(), dtype=float)
    else:
        centers = np.array([m.center for m in obstacle.members])
        obstacle_pos = centers[int(np.argmin(np.linalg.norm(centers - pose[:3], axis=1)))]
    return np.concatenate([q, pose, obstacle_pos, [0.0]])


def encode_joints(robot: RobotModel, encoder: StateEncoder, q: Sequence[float], obstacle: Optional[ObstacleSnapshot]) -> np.ndarray:
    return np.asarray(encoder.encode_state(state_vector(robot, encoder, q, obstacle)), dtype=float)


def relabel_radius(r: Roadmap, cfg: SafetyConfig) -> float:
    if cfg.relabel_radius is not None:
        return cfg.relabel_radius
    return RELABEL_FACTOR * (r.params.median_edge or r.median_edge())


def _segment_distances(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    length_sq = float(ab @ ab)
    if length_sq == 0.0:
        return np.linalg.norm(points - a, axis=1)
    t = np.clip((points - a) @ ab / length_sq, 0.0, 1.0)
    return np.linalg.norm(points - (a + t[:, None] * ab), axis=1)


# =====================================================
# RUTEO VERIFICADO
# =====================================================

def snap_safe(
    r: Roadmap,
    z: Sequence[float],
    checker: LiveChecker,
    threshold: float,
    exclude: Iterable[int] = (),
) -> Optional[int]:
    """Nodo más cercano a z con holgura viva > umbral y fuera de `exclude`"""
    excluded = set(exclude)
    while len(excluded) < len(r):
        node = nearest_node(r, z, exclude=excluded)
        if checker.node_safe(node, threshold):
            return node
        excluded.add(node)
    return None


def _lazy_route(
    r: Roadmap,
    checker: LiveChecker,
    start: int,
    goal: int,
    blocked: Set[int],
    cfg: SafetyConfig,
) -> Tuple[List[int], bool]:
    """
    Camino más corto verificando solo los nodos del camino; los que violan el
    umbral se enmascaran y se repite. Retorna (camino, concluyente).
    """
    blocked = set(blocked)
    for _ in range(cfg.max_lazy_rounds):
        path = shortest_path(r, start, goal, blocked)
        if not path:
            return [], True
        bad = [n for n in path if not checker.node_safe(n, cfg.clearance_threshold)]
        if not bad:
            return path, True
        blocked.update(bad)
    return [], False


def route(
    r: Roadmap,
    checker: LiveChecker,
    start: int,
    goal: int,
    avoided: Iterable[int],
    cfg: SafetyConfig,
    segment: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> List[int]:
    """
    Ruta segura contra el obstáculo vivo. Primero enmascara localmente (nodos a
    menos de relabel_radius del segmento bloqueado) y verifica el camino en
    forma perezosa; si no alcanza, enmascara el grafo completo, y como último
    intento ignora los nodos evitados.
    """
    avoided = set(avoided) - {start, goal}
    local: Set[int] = set()
    if segment is not None and checker.obstacle is not None:
        near = np.flatnonzero(_segment_distances(r.coords, segment[0], segment[1]) <= relabel_radius(r, cfg))
        local = checker.unsafe_nodes(cfg.clearance_threshold, near.tolist())
    path, _ = _lazy_route(r, checker, start, goal, local | avoided, cfg)
    if path:
        return path

    unsafe = checker.unsafe_nodes(cfg.clearance_threshold)
    for blocked in (unsafe | avoided, unsafe):
        path = shortest_path(r, start, goal, blocked)
        if path:
            logger.debug("ruta encontrada con máscara global (%d nodos bloqueados)", len(blocked))
            return path
    return []


# =====================================================
# OPERACIONES
# =====================================================

def _with(p: PlanState, **changes) -> PlanState:
    data = p.model_dump()
    data.update(changes)
    return PlanState(**data)


def _event(tick: int, kind: str, detail: str = "", node: Optional[int] = None, clearance: Optional[float] = None) -> PlanEvent:
    return PlanEvent(tick=tick, kind=kind, detail=detail, node=node, clearance=clearance)


def _fail(p: PlanState, reason: str, tick: int, **changes) -> PlanState:
    logger.info("tick %d: failed(%s)", tick, reason)
    events = list(p.events) + [_event(tick, "failed", reason)]
    return _with(p, status="failed", reason=reason, events=events, **changes)


def plan_initial(
    r: Roadmap,
    m: StateEncoder,
    robot: RobotModel,
    start_joints: Sequence[float],
    goal_joints: Sequence[float],
    obstacle: Optional[ObstacleSnapshot],
    cfg: SafetyConfig = SafetyConfig(),
    tick: int = 0,
) -> PlanState:
    """
    Codifica inicio y meta (con el obstáculo actual y bandera 0), los ajusta a
    los nodos seguros más cercanos y rutea sobre nodos verificados contra el
    obstáculo vivo. Nodos ajustados en componentes distintas -> failed
    ("unreachable"). Meta en violación, sin ruta segura o inicio en violación
    -> replanning; el ejecutivo reintenta en los ticks siguientes.

    Raises:
        JointLimitError: inicio o meta fuera de límites
    """
    start = check_limits(robot, start_joints)
    goal = check_limits(robot, goal_joints)
    if len(r) == 0:
        raise DomainError("el roadmap está vacío")
    checker = LiveChecker(robot, r, obstacle, cfg.gjk)
    threshold = cfg.clearance_threshold
    z_start = encode_joints(robot, m, start, obstacle)
    z_goal = encode_joints(robot, m, goal, obstacle)

    base = dict(current_joints=start.tolist(), goal_joints=goal.tolist(), tick=tick)
    raw_start, raw_goal = nearest_node(r, z_start), nearest_node(r, z_goal)

    if np.array_equal(start, goal):
        events = [_event(tick, "plan", "inicio igual a meta", raw_start), _event(tick, "reached")]
        return PlanState(**base, active_path=[raw_start], progress=1, start_node=raw_start,
                         goal_node=raw_start, status="reached", events=events)

    start_node = snap_safe(r, z_start, checker, threshold)
    goal_node = snap_safe(r, z_goal, checker, threshold)
    plan = PlanState(
        **base,
        start_node=raw_start if start_node is None else start_node,
        goal_node=raw_goal if goal_node is None else goal_node,
    )
    if not shortest_path(r, plan.start_node, plan.goal_node):
        return _fail(plan, "unreachable", tick)

    path: List[int] = []
    blocked = None
    if checker.distance(goal) <= threshold:
        blocked = "meta en violación"
    elif start_node is None or goal_node is None:
        blocked = "sin nodos seguros"
    else:
        path = route(r, checker, start_node, goal_node, (), cfg)
        if not path:
            blocked = "sin ruta segura"
    if blocked is not None:
        if not cfg.adaptive:
            return _fail(plan, "trapped", tick)
        logger.info("plan inicial bloqueado (%s), queda en replanning", blocked)
        return _with(plan, status="replanning", events=[_event(tick, "replanning", blocked)])

    events = [_event(tick, "plan", f"{len(path)} nodos", start_node)]
    status = "following"
    start_distance = checker.distance(start)
    if cfg.adaptive and start_distance <= threshold:
        status = "replanning"
        events.append(_event(tick, "replanning", "inicio en violación", clearance=start_distance))
    logger.info("plan inicial: %d -> %d, %d nodos, estado %s", start_node, goal_node, len(path), status)
    return _with(plan, active_path=path, progress=0, status=status, events=events)


def _target(p: PlanState, r: Roadmap) -> Tuple[np.ndarray, Optional[int]]:
    if p.progress < len(p.active_path):
        node = p.active_path[p.progress]
        return np.asarray(r.joints[node]), node
    return np.asarray(p.goal_joints), None


def _stall(
    p: PlanState,
    cfg: SafetyConfig,
    tick: int,
    avoided: Dict[int, int],
    events: List[PlanEvent],
    detail: str,
) -> PlanState:
    """
    El brazo queda detenido en replanning. Tras trap_patience ticks
    consecutivos sin avance -> failed("trapped").
    """
    since = tick if p.stalled_since is None else p.stalled_since
    if tick - since >= cfg.trap_patience:
        return _fail(_with(p, avoided=avoided, events=events, stalled_since=since, tick=tick + 1), "trapped", tick)
    if p.status != "replanning":
        logger.info("tick %d: replanning (%s)", tick, detail)
        events = events + [_event(tick, "replanning", detail)]
    return _with(p, status="replanning", avoided=avoided, events=events, stalled_since=since, tick=tick + 1)


def _reroute(
    p: PlanState,
    r: Roadmap,
    robot: RobotModel,
    m: StateEncoder,
    checker: LiveChecker,
    cfg: SafetyConfig,
    tick: int,
    avoided: Dict[int, int],
    events: List[PlanEvent],
    blocked_at: Optional[np.ndarray] = None,
) -> PlanState:
    """
    Reencamina desde el nodo seguro más cercano a la configuración actual; el
    brazo queda detenido este tick. Con la meta en violación o sin ruta segura
    el estado pasa a replanning y se reintenta en el tick siguiente.
    """
    threshold = cfg.clearance_threshold
    if checker.distance(p.goal_joints) <= threshold:
        return _stall(p, cfg, tick, avoided, events, "meta en violación")

    z_current = encode_joints(robot, m, p.current_joints, checker.obstacle)
    goal_node = p.goal_node
    if not checker.node_safe(goal_node, threshold):
        goal_node = snap_safe(r, r.coords[goal_node], checker, threshold, avoided)
    start_node = snap_safe(r, z_current, checker, threshold, avoided)
    path: List[int] = []
    if start_node is not None and goal_node is not None:
        segment = (z_current, z_current if blocked_at is None else blocked_at)
        path = route(r, checker, start_node, goal_node, avoided, cfg, segment)
    if not path:
        return _stall(p, cfg, tick, avoided, events, "sin ruta segura")

    clear = checker.distance(p.current_joints) > threshold
    events = events + [_event(tick, "reroute", f"{len(path)} nodos", start_node)]
    logger.info("tick %d: reencaminado desde el nodo %d (%d nodos)", tick, start_node, len(path))
    return _with(
        p,
        active_path=path,
        progress=0,
        goal_node=goal_node,
        status="following" if clear else "replanning",
        avoided=avoided,
        events=events,
        reroutes=p.reroutes + 1,
        stalled_since=None,
        tick=tick + 1,
    )


def _escape(p: PlanState, r: Roadmap, robot: RobotModel, checker: LiveChecker, cfg: SafetyConfig) -> Optional[Tuple[np.ndarray, bool]]:
    """
    Paso acotado que aumenta estrictamente la holgura desde una pose en
    violación: hacia el objetivo activo si mejora, si no el mejor paso sobre
    un solo eje. Retorna (pose, llega al objetivo) o None.
    """
    current = np.asarray(p.current_joints)
    here = checker.distance(current)
    target, _ = _target(p, r)
    delta = target - current
    span = float(np.max(np.abs(delta)))
    if span > 0:
        arriving = span <= cfg.joint_speed
        candidate = target if arriving else current + delta * (cfg.joint_speed / span)
        if checker.distance(candidate) > here:
            return candidate, arriving

    best, best_distance = None, here
    for joint in range(DOF):
        for sign in (1.0, -1.0):
            candidate = current.copy()
            candidate[joint] += sign * cfg.joint_speed
            if not robot.lower[joint] <= candidate[joint] <= robot.upper[joint]:
                continue
            distance = checker.distance(candidate)
            if distance > best_distance:
                best, best_distance = candidate, distance
    return None if best is None else (best, False)


def _recover(
    p: PlanState,
    r: Roadmap,
    robot: RobotModel,
    m: StateEncoder,
    checker: LiveChecker,
    cfg: SafetyConfig,
    tick: int,
    avoided: Dict[int, int],
    events: List[PlanEvent],
) -> PlanState:
    """Tick en replanning: desde una pose en violación solo se admiten pasos que mejoran la holgura"""
    threshold = cfg.clearance_threshold
    if checker.distance(p.current_joints) > threshold:
        return _reroute(p, r, robot, m, checker, cfg, tick, avoided, events)

    escape = _escape(p, r, robot, checker, cfg)
    if escape is None:
        return _stall(p, cfg, tick, avoided, events, "ningún paso mejora la holgura")
    candidate, arriving = escape
    clear = checker.distance(candidate) > threshold
    _, target_node = _target(p, r)
    progress = p.progress
    status = "following" if clear and p.active_path else "replanning"
    if arriving and clear:
        progress += 1
        if target_node is not None:
            events.append(_event(tick, "waypoint", node=target_node))
        else:
            events.append(_event(tick, "reached"))
            status = "reached"
    return _with(
        p,
        current_joints=candidate.tolist(),
        progress=progress,
        status=status,
        avoided=avoided,
        events=events,
        stalled_since=None,
        tick=tick + 1,
    )


def step(
    p: PlanState,
    r: Roadmap,
    robot: RobotModel,
    m: StateEncoder,
    obstacle: Optional[ObstacleSnapshot],
    cfg: SafetyConfig = SafetyConfig(),
) -> PlanState:
    """
    Avanza un tick: interpola hacia el siguiente objetivo con paso articular
    acotado y verifica la holgura de la pose candidata. Si viola el umbral el
    brazo se detiene, el nodo objetivo queda evitado y se reencamina. En
    replanning el brazo solo se mueve para alejarse del obstáculo; tras
    trap_patience ticks sin avance -> failed("trapped").

    Raises:
        DomainError: el estado ya es terminal
    """
    if p.terminal:
        raise DomainError(f"step sobre un estado terminal ({p.status})")
    tick = p.tick
    threshold = cfg.clearance_threshold
    checker = LiveChecker(robot, r, obstacle, cfg.gjk)
    avoided = {node: expiry for node, expiry in p.avoided.items() if expiry > tick}
    events = list(p.events)

    if p.status == "replanning":
        return _recover(p, r, robot, m, checker, cfg, tick, avoided, events)

    current = np.asarray(p.current_joints)
    target, target_node = _target(p, r)
    delta = target - current
    span = float(np.max(np.abs(delta)))
    arriving = span <= cfg.joint_speed
    candidate = target if arriving else current + delta * (cfg.joint_speed / span)

    if obstacle is not None and (tick % cfg.check_period == 0 or arriving):
        distance = checker.distance(candidate)
        if distance <= threshold:
            if not cfg.adaptive:
                events.append(_event(tick, "violation", node=target_node, clearance=distance))
            else:
                events.append(_event(tick, "halt", node=target_node, clearance=distance))
                if target_node is not None:
                    avoided[target_node] = tick + cfg.avoid_ttl
                blocked_at = r.coords[target_node if target_node is not None else p.goal_node]
                halted = _with(p, halts=p.halts + 1)
                return _reroute(halted, r, robot, m, checker, cfg, tick, avoided, events, blocked_at)

    progress = p.progress
    status = p.status
    if arriving:
        progress += 1
        if target_node is not None:
            events.append(_event(tick, "waypoint", node=target_node))
        else:
            events.append(_event(tick, "reached"))
            status = "reached"
    return _with(
        p,
        current_joints=candidate.tolist(),
        progress=progress,
        status=status,
        avoided=avoided,
        events=events,
        tick=tick + 1,
    )


# =====================================================
# EJECUCIÓN Y TRAZA
# =====================================================

def _obstacle_records(obstacle: Optional[ObstacleSnapshot]) -> List[ObstacleMemberRecord]:
    if obstacle is None:
        return []
    return [
        ObstacleMemberRecord(
            id=name, kind=member.kind, dims=list(member.dims),
            position=list(member.pose.position), orientation=list(member.pose.orientation),
        )
        for name, member in zip(obstacle.ids, obstacle.members)
    ]


def make_record(
    robot: RobotModel,
    checker: LiveChecker,
    p: PlanState,
    tick: int,
    events: Sequence[PlanEvent],
) -> TraceRecord:
    pose = pose_vector(chain_transforms(robot, p.current_joints, check=False)[-1])
    report = checker.report(p.current_joints)
    waypoint = next((e.node for e in events if e.kind == "waypoint"), None)
    return TraceRecord(
        tick=tick,
        joints=list(p.current_joints),
        ee_pos=pose[:3].tolist(),
        ee_quat=pose[3:].tolist(),
        obstacle_id=None if checker.obstacle is None else checker.obstacle.label,
        obstacle_pose=_obstacle_records(checker.obstacle),
        min_clearance=None if report is None else report.min_distance,
        argmin_link=None if report is None else report.argmin_link,
        status=p.status,
        event=[e.kind for e in events],
        waypoint=waypoint,
        active_path=list(p.active_path),
        progress=p.progress,
        reason=p.reason,
    )


def execute(
    p: PlanState,
    r: Roadmap,
    robot: RobotModel,
    m: StateEncoder,
    scenario: Scenario,
    cfg: SafetyConfig = SafetyConfig(),
    max_ticks: Optional[int] = None,
) -> Tuple[PlanState, List[TraceRecord]]:
    """
    Itera step contra la línea de tiempo del escenario hasta reached, failed o
    max_ticks (agotado -> failed("timeout")). Un registro por tick.
    """
    max_ticks = scenario.max_ticks if max_ticks is None else max_ticks
    if max_ticks < 1:
        raise DomainError("max_ticks debe ser >= 1")
    records: List[TraceRecord] = []

    if p.terminal:
        checker = LiveChecker(robot, r, obstacle_at(scenario, p.tick), cfg.gjk)
        records.append(make_record(robot, checker, p, p.tick, [e for e in p.events if e.tick == p.tick]))
        return p, records

    while not p.terminal and len(records) < max_ticks:
        tick = p.tick
        obstacle = obstacle_at(scenario, tick)
        seen = len(p.events)
        p = step(p, r, robot, m, obstacle, cfg)
        records.append(make_record(robot, LiveChecker(robot, r, obstacle, cfg.gjk), p, tick, p.events[seen:]))

    if not p.terminal:
        last = records[-1]
        p = _fail(p, "timeout", last.tick)
        records[-1] = last.model_copy(update={"status": "failed", "reason": "timeout", "event": last.event + ["failed"]})
    return p, records


def _line(model) -> str:
    return json.dumps(model.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))


def trace_text(header: TraceHeader, records: Sequence[TraceRecord]) -> str:
    return "\n".join([_line(header)] + [_line(record) for record in records]) + "\n"


def write_trace(header: TraceHeader, records: Sequence[TraceRecord], path: Path) -> str:
    """Escribe la traza JSONL y retorna su sha256"""
    text = trace_text(header, records)
    Path(path).write_text(text, encoding="utf-8")
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def read_trace(path: Path) -> Tuple[TraceHeader, List[TraceRecord]]:
    """
    Raises:
        InputError: archivo inexistente
        CorruptArtifactError: JSON inválido o registros que no cumplen el esquema
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as e:
        raise InputError(f"no se puede leer la traza {path}: {e}")
    if not lines:
        raise CorruptArtifactError(f"{path}: traza vacía")
    try:
        header = TraceHeader(**json.loads(lines[0]))
    except (json.JSONDecodeError, TypeError, ValidationError) as e:
        raise CorruptArtifactError(f"{path}:1: encabezado de traza inválido ({e})")
    records = []
    for number, line in enumerate(lines[1:], start=2):
        try:
            records.append(TraceRecord(**json.loads(line)))
        except (json.JSONDecodeError, TypeError, ValidationError) as e:
            raise CorruptArtifactError(f"{path}:{number}: registro de traza inválido ({e})")
    return header, records


def summarize(
    p: PlanState,
    records: Sequence[TraceRecord],
    header: TraceHeader,
    robot: RobotModel,
    trace_digest: str = "",
) -> RunSummary:
    ee = pose_vector(chain_transforms(robot, p.current_joints, check=False)[-1])[:3]
    goal_ee = pose_vector(chain_transforms(robot, p.goal_joints, check=False)[-1])[:3]
    clearances = [rec.min_clearance for rec in records if rec.min_clearance is not None]
    costs = [distance_cost(c, header.safety.cost) for c in clearances]
    finite = [c for c in costs if math.isfinite(c)]
    return RunSummary(
        scenario_id=header.scenario_id,
        status=p.status,
        reason=p.reason,
        ticks=len(records),
        reroutes=p.reroutes,
        halts=p.halts,
        violations=sum(1 for e in p.events if e.kind == "violation"),
        waypoints=sum(1 for e in p.events if e.kind == "waypoint"),
        min_clearance=min(clearances) if clearances else None,
        peak_cost=max(finite) if finite else None,
        contact_ticks=len(costs) - len(finite),
        goal_error=float(np.linalg.norm(ee - goal_ee)),
        initial_path=header.initial_path,
        final_path=list(p.active_path),
        adaptive=header.safety.adaptive,
        config_hash=header.config_hash,
        tool_version=header.tool_version,
        trace_digest=trace_digest,
    )
