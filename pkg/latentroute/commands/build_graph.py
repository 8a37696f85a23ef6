"""
latentroute build-graph - roadmap sobre el espacio latente + reportes del embedding
"""

import argparse
import logging

from latentroute.artifacts import (
    BUILD_REPORT_FILE,
    DATASET_FILE,
    EMBEDDING_CSV_FILE,
    EMBEDDING_JSONL_FILE,
    LATENT_POINTS_FILE,
    MODEL_FILE,
    ROADMAP_FILE,
    ArtifactStore,
    file_digest,
)
from latentroute.config import Settings
from latentroute.dependencies.loaders import get_dataset, get_model, get_robot
from latentroute.engine.metrics import isomap_report, stability_across_bins
from latentroute.engine.roadmap import build_roadmap, save_roadmap
from latentroute.schemas.roadmap import RoadmapParams


logger = logging.getLogger(__name__)

OVERRIDES = {
    "k": "KNN_K",
    "grid": "GRID_RESOLUTION",
}

EMBEDDING_COLUMNS = (
    "method", "subsample_size", "evaluated_points", "k",
    "trustworthiness", "continuity", "silhouette", "geodesic_rank_correlation",
)


def register(subparsers) -> argparse.ArgumentParser:
    parser = subparsers.add_parser("build-graph", help="Construye el roadmap latente y evalúa el embedding")
    parser.add_argument("--dataset", help=f"CSV del dataset (por defecto <salida>/{DATASET_FILE})")
    parser.add_argument("--model", help=f"Modelo entrenado (por defecto <salida>/{MODEL_FILE})")
    parser.add_argument("--k", type=int, help="Vecinos del grafo k-NN (KNN_K)")
    parser.add_argument("--grid", type=int, help="Resolución de la grilla de densificación (GRID_RESOLUTION)")
    parser.add_argument("--skip-metrics", action="store_true", help="No calcular los reportes del embedding")
    parser.add_argument("--robot", help="Archivo de robot")
    return parser


def run(args: argparse.Namespace, settings: Settings) -> int:
    store = ArtifactStore.from_settings(settings)
    robot = get_robot(settings, args.robot)
    dataset_path = args.dataset or store.path(DATASET_FILE)
    model_path = args.model or store.path(MODEL_FILE)
    dataset = get_dataset(dataset_path, robot)
    model = get_model(model_path, settings, dataset_digest=file_digest(dataset_path))

    params = RoadmapParams(
        model_digest=file_digest(model_path),
        dataset_digest=model.dataset_digest,
        config_hash=store.config_hash,
    )
    roadmap, report, cloud = build_roadmap(
        model,
        robot,
        dataset,
        k=settings.KNN_K,
        grid_resolution=settings.GRID_RESOLUTION,
        grid_margin=settings.GRID_MARGIN,
        flag_threshold=settings.FLAG_THRESHOLD,
        bridge_cap_factor=settings.BRIDGE_CAP_FACTOR,
        max_encoded_nodes=settings.MAX_ENCODED_NODES,
        obstacle_radius=settings.OBSTACLE_RADIUS,
        margin=settings.COLLISION_MARGIN,
        seed=settings.SEED,
        params=params,
        gjk=settings.gjk_params,
    )
    save_roadmap(roadmap, store.path(ROADMAP_FILE))
    store.write_json(BUILD_REPORT_FILE, {**report.model_dump(mode="json"), **store.lineage()})

    rows = [(float(z0), float(z1), int(flag), "dataset") for z0, z1, flag in cloud]
    rows += [
        (float(z[0]), float(z[1]), 0, origin)
        for z, origin in zip(roadmap.coords, roadmap.origins) if origin == "grid"
    ]
    store.write_csv(LATENT_POINTS_FILE, ("z0", "z1", "flag", "origin"), rows, comment=store.lineage_comment())

    if not args.skip_metrics:
        # Las métricas comparan en el espacio normalizado con que se entrenó el modelo
        dataset = dataset.replace(normalization=model.normalization)
        bins = [size for size in settings.metrics_bins if size <= len(dataset)] or [len(dataset)]
        reports = stability_across_bins(
            dataset, model, bins, k=settings.METRICS_K, seed=settings.SEED, max_points=settings.METRICS_MAX_POINTS,
        )
        reports.append(isomap_report(
            dataset, max(bins), k=settings.METRICS_K, seed=settings.SEED, max_points=settings.METRICS_MAX_POINTS,
        ))
        store.write_jsonl(EMBEDDING_JSONL_FILE, [{**r.model_dump(), **store.lineage()} for r in reports])
        store.write_csv(
            EMBEDDING_CSV_FILE,
            EMBEDDING_COLUMNS,
            [[getattr(r, column) for column in EMBEDDING_COLUMNS] for r in reports],
            comment=store.lineage_comment(),
        )

    print(f"Roadmap: {report.nodes} nodos, {report.edges} aristas -> {store.path(ROADMAP_FILE)}")
    if report.connectivity.dropped_nodes:
        print(f"Componentes descartadas: {report.connectivity.dropped_components} ({len(report.connectivity.dropped_nodes)} nodos)")
    return 0
