"""
Repetición independiente de una traza: recalcula cinemática, obstáculo y
holgura de cada tick y compara con lo registrado.

La holgura se recalcula forma por forma con gjk_distance sobre cápsulas
construidas desde la cinemática, no con el camino por lotes del ejecutivo.
"""

import logging
from typing import List, Optional, Sequence

import numpy as np

from latentroute import __version__
from latentroute.engine.collision import DEFAULT_GJK, gjk_distance, link_capsule_shape
from latentroute.engine.kinematics import DOF, chain_transforms, pose_vector, robot_digest
from latentroute.engine.scenarios import obstacle_at, scenario_digest
from latentroute.errors import LineageMismatchError
from latentroute.schemas.collision import GjkParams
from latentroute.schemas.planner import TRACE_SCHEMA_VERSION, TraceHeader, TraceRecord
from latentroute.schemas.reports import Mismatch, VerificationReport
from latentroute.schemas.robot import RobotModel
from latentroute.schemas.scenario import ObstacleSnapshot, Scenario


logger = logging.getLogger(__name__)

TOLERANCE = 1e-6
OBSTACLE_TOLERANCE = 1e-9
TIE_TOLERANCE = 1e-9


def check_lineage(header: TraceHeader, scenario: Scenario, robot: RobotModel) -> None:
    """
    Raises:
        LineageMismatchError: la traza no proviene de este escenario, robot o versión
    """
    if header.schema_version != TRACE_SCHEMA_VERSION:
        raise LineageMismatchError(f"versión de esquema de traza {header.schema_version} no soportada")
    if header.tool_version != __version__:
        raise LineageMismatchError(f"traza generada con latentroute {header.tool_version}, esta es {__version__}")
    if header.scenario_id != scenario.id or header.scenario_digest != scenario_digest(scenario):
        raise LineageMismatchError(f"la traza corresponde al escenario '{header.scenario_id}' con otro contenido")
    if header.robot_digest != robot_digest(robot):
        raise LineageMismatchError("la traza se generó con otro modelo de robot")


def link_distances(
    robot: RobotModel, q: Sequence[float], obstacle: ObstacleSnapshot, gjk: GjkParams = DEFAULT_GJK,
) -> List[float]:
    """Distancia de cada eslabón al obstáculo (mínimo sobre miembros)"""
    return [
        min(gjk_distance(link_capsule_shape(robot, q, link, check=False), member, gjk) for member in obstacle.members)
        for link in range(DOF)
    ]


def _quat_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(min(np.max(np.abs(a - b)), np.max(np.abs(a + b))))


def _check_obstacle(record: TraceRecord, snapshot: Optional[ObstacleSnapshot], out: List[Mismatch]) -> None:
    expected_id = None if snapshot is None else snapshot.label
    if record.obstacle_id != expected_id:
        out.append(Mismatch(tick=record.tick, field="obstacle_id", logged=str(record.obstacle_id), recomputed=str(expected_id)))
        return
    if snapshot is None:
        if record.obstacle_pose:
            out.append(Mismatch(tick=record.tick, field="obstacle_pose", detail="pose registrada sin obstáculo activo"))
        return
    if len(record.obstacle_pose) != len(snapshot.members):
        out.append(Mismatch(tick=record.tick, field="obstacle_pose", detail="cantidad de miembros distinta"))
        return
    for logged, member in zip(record.obstacle_pose, snapshot.members):
        errors = [
            logged.kind != member.kind,
            len(logged.dims) != len(member.dims)
            or np.max(np.abs(np.subtract(logged.dims, member.dims)), initial=0.0) > OBSTACLE_TOLERANCE,
            np.max(np.abs(np.subtract(logged.position, member.pose.position))) > OBSTACLE_TOLERANCE,
            _quat_error(np.asarray(logged.orientation), np.asarray(member.pose.orientation)) > OBSTACLE_TOLERANCE,
        ]
        if any(errors):
            out.append(Mismatch(
                tick=record.tick, field="obstacle_pose",
                logged=f"{logged.kind} {logged.dims} {logged.position}",
                recomputed=f"{member.kind} {list(member.dims)} {list(member.pose.position)}",
                detail=f"miembro '{logged.id}'",
            ))


def verify_trace(
    header: TraceHeader,
    records: Sequence[TraceRecord],
    scenario: Scenario,
    robot: RobotModel,
    trace_name: str = "",
    tolerance: float = TOLERANCE,
) -> VerificationReport:
    """
    Recalcula cada tick: FK, obstáculo, holgura mínima y eslabón argmin
    (tolerancia 1e-6), paso articular acotado y, si el ejecutivo era
    adaptativo, holgura > umbral en cada llegada a waypoint.

    Raises:
        LineageMismatchError: digest o versión distintos
    """
    check_lineage(header, scenario, robot)
    safety = header.safety
    mismatches: List[Mismatch] = []
    arrivals = 0
    previous = np.asarray(scenario.start, dtype=float)
    expected_tick = records[0].tick if records else 0

    for record in records:
        tick = record.tick
        if tick != expected_tick:
            mismatches.append(Mismatch(tick=tick, field="tick", logged=str(tick), recomputed=str(expected_tick)))
        expected_tick = tick + 1

        q = np.asarray(record.joints, dtype=float)
        if q.shape != (DOF,) or not np.isfinite(q).all():
            mismatches.append(Mismatch(tick=tick, field="joints", detail="vector articular inválido"))
            continue
        if np.any(q < robot.lower - 1e-12) or np.any(q > robot.upper + 1e-12):
            mismatches.append(Mismatch(tick=tick, field="joints", detail="fuera de límites"))

        step_size = float(np.max(np.abs(q - previous)))
        if step_size > safety.joint_speed + 1e-9:
            mismatches.append(Mismatch(
                tick=tick, field="joints", logged=repr(step_size), recomputed=repr(safety.joint_speed),
                detail="paso articular mayor que joint_speed",
            ))
        previous = q

        pose = pose_vector(chain_transforms(robot, q, check=False)[-1])
        if np.max(np.abs(pose[:3] - np.asarray(record.ee_pos))) > tolerance:
            mismatches.append(Mismatch(tick=tick, field="ee_pos", logged=repr(record.ee_pos), recomputed=repr(pose[:3].tolist())))
        if _quat_error(pose[3:], np.asarray(record.ee_quat)) > tolerance:
            mismatches.append(Mismatch(tick=tick, field="ee_quat", logged=repr(record.ee_quat), recomputed=repr(pose[3:].tolist())))

        snapshot = obstacle_at(scenario, tick)
        _check_obstacle(record, snapshot, mismatches)

        distance = None
        if snapshot is not None:
            per_link = link_distances(robot, q, snapshot, safety.gjk)
            distance = min(per_link)
            if record.min_clearance is None or abs(record.min_clearance - distance) > tolerance:
                mismatches.append(Mismatch(tick=tick, field="min_clearance", logged=repr(record.min_clearance), recomputed=repr(distance)))
            elif record.argmin_link is None or not 0 <= record.argmin_link < DOF \
                    or per_link[record.argmin_link] - distance > max(tolerance, TIE_TOLERANCE):
                mismatches.append(Mismatch(
                    tick=tick, field="argmin_link", logged=repr(record.argmin_link),
                    recomputed=repr(int(np.argmin(per_link))),
                ))
        elif record.min_clearance is not None:
            mismatches.append(Mismatch(tick=tick, field="min_clearance", logged=repr(record.min_clearance), recomputed="None"))

        arrived = "waypoint" in record.event or "reached" in record.event
        if arrived:
            arrivals += 1
            if safety.adaptive and distance is not None and not distance > safety.clearance_threshold:
                mismatches.append(Mismatch(
                    tick=tick, field="safety", logged=repr(record.min_clearance), recomputed=repr(distance),
                    detail=f"llegada a waypoint con holgura <= {safety.clearance_threshold}",
                ))

    final_status = records[-1].status if records else None
    if final_status not in ("reached", "failed"):
        mismatches.append(Mismatch(
            tick=records[-1].tick if records else None, field="status", logged=str(final_status),
            detail="el último registro debe ser reached o failed",
        ))
    elif final_status == "reached":
        goal = pose_vector(chain_transforms(robot, scenario.goal, check=False)[-1])[:3]
        error = float(np.linalg.norm(np.asarray(records[-1].ee_pos) - goal))
        if error > safety.goal_tolerance:
            mismatches.append(Mismatch(
                tick=records[-1].tick, field="status", logged="reached", recomputed=repr(error),
                detail="efector fuera de la tolerancia de meta",
            ))

    report = VerificationReport(
        trace=trace_name,
        scenario_id=scenario.id,
        ticks_checked=len(records),
        final_status=final_status,
        waypoint_arrivals=arrivals,
        mismatches=mismatches,
    )
    if report.ok:
        logger.info("traza verificada: %d ticks sin discrepancias", len(records))
    else:
        logger.warning("traza con %d discrepancias en %d ticks", len(mismatches), len(report.mismatched_ticks))
    return report
