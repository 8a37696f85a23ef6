"""
latentroute simulate - ejecuta un escenario con el ejecutivo de replanificación
"""

import argparse
import logging

from latentroute import __version__
from latentroute.artifacts import MODEL_FILE, ROADMAP_FILE, ArtifactStore, file_digest
from latentroute.config import Settings
from latentroute.dependencies.loaders import get_model, get_roadmap, get_robot, get_scenario
from latentroute.engine.kinematics import robot_digest
from latentroute.engine.replanner import execute, plan_initial, relabel_radius, summarize, write_trace
from latentroute.engine.roadmap import roadmap_digest
from latentroute.engine.scenarios import dump_scenario, obstacle_at, perturb_scenario, scenario_digest
from latentroute.errors import PlanningFailure
from latentroute.schemas.planner import SafetyConfig, TraceHeader


logger = logging.getLogger(__name__)

OVERRIDES = {
    "threshold": "CLEARANCE_THRESHOLD",
    "max_ticks": "MAX_TICKS",
    "jitter": "SCENARIO_JITTER",
}


def register(subparsers) -> argparse.ArgumentParser:
    parser = subparsers.add_parser("simulate", help="Simula un escenario y escribe la traza")
    parser.add_argument("scenario", help="Id de un escenario incluido o ruta a un archivo .scn")
    parser.add_argument("--roadmap", help=f"Roadmap (por defecto <salida>/{ROADMAP_FILE})")
    parser.add_argument("--model", help=f"Modelo (por defecto <salida>/{MODEL_FILE})")
    parser.add_argument("--threshold", type=float, help="Umbral de holgura en metros (CLEARANCE_THRESHOLD)")
    parser.add_argument("--max-ticks", dest="max_ticks", type=int, help="Límite de ticks; 0 = el del escenario")
    parser.add_argument("--jitter", type=float, help="Perturbación de keyframes con SEED (SCENARIO_JITTER)")
    parser.add_argument("--non-adaptive", dest="non_adaptive", action="store_true",
                        help="Sigue el camino inicial sin reencaminar (línea base)")
    parser.add_argument("--robot", help="Archivo de robot")
    return parser


def safety_config(settings: Settings, non_adaptive: bool = False) -> SafetyConfig:
    return SafetyConfig(
        clearance_threshold=settings.CLEARANCE_THRESHOLD,
        check_period=settings.CHECK_PERIOD,
        joint_speed=settings.JOINT_SPEED,
        goal_tolerance=settings.GOAL_TOLERANCE,
        avoid_ttl=settings.AVOID_TTL,
        collision_margin=settings.COLLISION_MARGIN,
        trap_patience=settings.TRAP_PATIENCE,
        adaptive=settings.ADAPTIVE and not non_adaptive,
        gjk=settings.gjk_params,
        cost=settings.cost_params,
    )


def run(args: argparse.Namespace, settings: Settings) -> int:
    store = ArtifactStore.from_settings(settings)
    robot = get_robot(settings, args.robot)
    model_path = args.model or store.path(MODEL_FILE)
    model = get_model(model_path, settings)
    roadmap = get_roadmap(args.roadmap or store.path(ROADMAP_FILE), model_path)

    scenario = get_scenario(args.scenario, robot)
    if settings.SCENARIO_JITTER > 0:
        scenario = perturb_scenario(scenario, settings.SEED, settings.SCENARIO_JITTER)
    max_ticks = settings.MAX_TICKS or scenario.max_ticks

    cfg = safety_config(settings, args.non_adaptive)
    cfg = cfg.model_copy(update={"relabel_radius": settings.RELABEL_FACTOR * (roadmap.params.median_edge or roadmap.median_edge())})
    logger.info("radio de reetiquetado local: %.4f", relabel_radius(roadmap, cfg))

    plan = plan_initial(roadmap, model, robot, scenario.start, scenario.goal, obstacle_at(scenario, 0), cfg)
    header = TraceHeader(
        tool_version=__version__,
        config_hash=store.config_hash,
        robot_digest=robot_digest(robot),
        scenario_id=scenario.id,
        scenario_digest=scenario_digest(scenario),
        roadmap_digest=roadmap_digest(roadmap),
        model_digest=file_digest(model_path),
        safety=cfg,
        max_ticks=max_ticks,
        start_node=plan.start_node,
        goal_node=plan.goal_node,
        initial_path=plan.active_path,
    )
    final, records = execute(plan, roadmap, robot, model, scenario, cfg, max_ticks)

    store.write_text(f"scenario_{scenario.id}.scn", dump_scenario(scenario))
    trace_digest = write_trace(header, records, store.path(f"trace_{scenario.id}.jsonl"))
    summary = summarize(final, records, header, robot, trace_digest)
    store.write_json(f"summary_{scenario.id}.json", summary)

    print(f"Escenario {scenario.id}: {summary.status}"
          + (f" ({summary.reason})" if summary.reason else "")
          + f" en {summary.ticks} ticks, {summary.reroutes} reencaminamientos")
    print(f"Traza: {store.path(f'trace_{scenario.id}.jsonl')}")
    if final.status == "failed":
        raise PlanningFailure(final.reason or "unknown", scenario.id)
    return 0
