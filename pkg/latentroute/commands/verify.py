"""
latentroute verify - repite una traza con el oráculo de holgura independiente
"""

import argparse
import logging
from pathlib import Path

from latentroute import __version__
from latentroute.artifacts import ArtifactStore
from latentroute.config import Settings
from latentroute.dependencies.loaders import get_robot, get_scenario, require_file
from latentroute.engine.replanner import read_trace
from latentroute.engine.verify import verify_trace
from latentroute.errors import VerificationMismatch


logger = logging.getLogger(__name__)

OVERRIDES = {}


def register(subparsers) -> argparse.ArgumentParser:
    parser = subparsers.add_parser("verify", help="Verifica una traza contra el escenario y el robot")
    parser.add_argument("trace", help="Traza JSONL producida por simulate")
    parser.add_argument("--scenario", required=True, help="Archivo .scn o id del escenario incluido")
    parser.add_argument("--robot", help="Archivo de robot (por defecto ROBOT_FILE o el Panda incluido)")
    return parser


def run(args: argparse.Namespace, settings: Settings) -> int:
    store = ArtifactStore.from_settings(settings)
    trace_path = require_file(Path(args.trace), "traza")
    robot = get_robot(settings, args.robot)
    scenario = get_scenario(args.scenario, robot)
    header, records = read_trace(trace_path)

    report = verify_trace(header, records, scenario, robot, trace_name=trace_path.name)
    report = report.model_copy(update={"tool_version": __version__, "config_hash": store.config_hash})
    target = store.write_json(f"verify_{trace_path.stem}.json", report)

    print(f"Verificación de {trace_path.name}: {report.ticks_checked} ticks, {len(report.mismatches)} discrepancias")
    print(f"Reporte: {target}")
    if not report.ok:
        ticks = report.mismatched_ticks
        raise VerificationMismatch(ticks, "" if ticks else "la traza no termina en reached o failed")
    return 0
