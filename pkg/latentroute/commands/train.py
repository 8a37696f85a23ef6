"""
latentroute train - entrena el VAE sobre el dataset
"""

import argparse
import logging

from latentroute.artifacts import DATASET_FILE, MODEL_FILE, TRAIN_REPORT_FILE, ArtifactStore, file_digest
from latentroute.config import Settings
from latentroute.dependencies.loaders import get_dataset, get_robot
from latentroute.engine.autoencoder import save_model, train
from latentroute.engine.dataset import split
from latentroute.engine.metrics import class_silhouette
from latentroute.schemas.training import TrainConfig


logger = logging.getLogger(__name__)

OVERRIDES = {
    "epochs": "EPOCHS",
    "batch_size": "BATCH_SIZE",
    "learning_rate": "LEARNING_RATE",
    "hidden": "HIDDEN_SIZES",
}


def register(subparsers) -> argparse.ArgumentParser:
    parser = subparsers.add_parser("train", help="Entrena el autoencoder variacional")
    parser.add_argument("--dataset", help=f"CSV del dataset (por defecto <salida>/{DATASET_FILE})")
    parser.add_argument("--epochs", type=int, help="Épocas (EPOCHS)")
    parser.add_argument("--batch-size", dest="batch_size", type=int, help="Tamaño de batch (BATCH_SIZE)")
    parser.add_argument("--learning-rate", dest="learning_rate", type=float, help="Tasa de aprendizaje (LEARNING_RATE)")
    parser.add_argument("--hidden", help="Capas ocultas separadas por coma (HIDDEN_SIZES)")
    parser.add_argument("--robot", help="Archivo de robot para verificar el linaje del dataset")
    return parser


def train_config(settings: Settings) -> TrainConfig:
    return TrainConfig(
        hidden_sizes=settings.hidden_sizes,
        epochs=settings.EPOCHS,
        batch_size=settings.BATCH_SIZE,
        learning_rate=settings.LEARNING_RATE,
        momentum=settings.MOMENTUM,
        kl_weight=settings.KL_WEIGHT,
        kl_warmup_fraction=settings.KL_WARMUP_FRACTION,
        seed=settings.SEED,
    )


def run(args: argparse.Namespace, settings: Settings) -> int:
    store = ArtifactStore.from_settings(settings)
    robot = get_robot(settings, args.robot)
    dataset_path = args.dataset or store.path(DATASET_FILE)
    dataset = get_dataset(dataset_path, robot)
    dataset_digest = file_digest(dataset_path)

    train_part, heldout = split(dataset, settings.TRAIN_FRACTION, settings.SEED)
    model, report = train(
        train_part,
        train_config(settings),
        heldout=heldout,
        dataset_digest=dataset_digest,
        config_hash=store.config_hash,
    )
    latent, _ = model.encode_batch(model.normalize(heldout.samples))
    report = report.model_copy(update={"silhouette": class_silhouette(latent, heldout.flags)})

    save_model(model, store.path(MODEL_FILE))
    store.write_json(TRAIN_REPORT_FILE, report)
    print(f"Modelo: {store.path(MODEL_FILE)}")
    print(f"Exactitud de bandera (retenidos): {report.flag_accuracy:.3f}  silhouette: {report.silhouette:.3f}")
    return 0
