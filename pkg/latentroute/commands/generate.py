"""
latentroute generate - corpus etiquetado de estados robot-obstáculo
"""

import argparse
import logging

from latentroute.artifacts import DATASET_FILE, ArtifactStore
from latentroute.config import Settings
from latentroute.dependencies.loaders import get_robot
from latentroute.engine.dataset import generate, rebalance, save_dataset


logger = logging.getLogger(__name__)

# Opción del comando -> campo de Settings
OVERRIDES = {
    "count": "DATASET_COUNT",
    "rebalance": "REBALANCE_FRACTION",
    "focus": "FOCUS_FRACTION",
    "workers": "WORKERS",
}


def register(subparsers) -> argparse.ArgumentParser:
    parser = subparsers.add_parser("generate", help="Genera el dataset de muestras etiquetadas")
    parser.add_argument("--count", type=int, help="Número de muestras (DATASET_COUNT)")
    parser.add_argument("--rebalance", type=float, help="Fracción objetivo de colisiones (REBALANCE_FRACTION)")
    parser.add_argument("--focus", type=float, help="Fracción de obstáculos cerca del brazo (FOCUS_FRACTION)")
    parser.add_argument("--workers", type=int, help="Procesos de generación (WORKERS)")
    parser.add_argument("--robot", help="Archivo de robot (por defecto ROBOT_FILE o el Panda incluido)")
    parser.add_argument("--name", default=DATASET_FILE, help="Nombre del CSV dentro del directorio de salida")
    return parser


def run(args: argparse.Namespace, settings: Settings) -> int:
    store = ArtifactStore.from_settings(settings)
    robot = get_robot(settings, args.robot)
    box = [value for pair in settings.workspace_box for value in pair]

    raw = generate(
        robot,
        settings.DATASET_COUNT,
        box,
        settings.SEED,
        obstacle_radius=settings.OBSTACLE_RADIUS,
        margin=settings.COLLISION_MARGIN,
        focus_fraction=settings.FOCUS_FRACTION,
        chunk_size=settings.CHUNK_SIZE,
        workers=settings.WORKERS,
        config_hash=store.config_hash,
        gjk=settings.gjk_params,
    )
    logger.info("corpus crudo: %d muestras, %.3f en colisión", len(raw), raw.colliding_fraction)
    dataset = rebalance(raw, settings.REBALANCE_FRACTION, settings.SEED)

    target = store.path(args.name)
    digest = save_dataset(dataset, target)
    print(f"Dataset: {len(dataset)} muestras ({dataset.colliding_fraction:.3f} en colisión) -> {target}")
    print(f"sha256: {digest}")
    return 0
