"""
Resolución de artefactos compartida por los comandos.
Cada loader valida existencia y linaje y lanza errores categorizados.
"""

import logging
from pathlib import Path
from typing import Optional

from latentroute.artifacts import file_digest
from latentroute.config import Settings
from latentroute.engine.autoencoder import VaeModel, load_model
from latentroute.engine.dataset import Dataset, load_dataset
from latentroute.engine.kinematics import load_robot
from latentroute.engine.roadmap import Roadmap, load_roadmap
from latentroute.engine.scenarios import builtin_scenario, check_scenario, load_scenario
from latentroute.errors import InputError, LineageMismatchError
from latentroute.schemas.robot import RobotModel
from latentroute.schemas.scenario import Scenario
from latentroute.schemas.training import ModelArchitecture


logger = logging.getLogger(__name__)


def require_file(path: Optional[Path], what: str) -> Path:
    """
    Raises:
        InputError: la ruta no existe o no es un archivo
    """
    if path is None:
        raise InputError(f"falta la ruta del {what}")
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no existe el {what}: {path}")
    return path


def get_robot(settings: Settings, path: Optional[str] = None) -> RobotModel:
    """Robot del archivo indicado, de ROBOT_FILE o el Panda incluido"""
    robot_file = path or settings.ROBOT_FILE or None
    if robot_file:
        require_file(Path(robot_file), "archivo de robot")
    return load_robot(robot_file)


def get_dataset(path: Path, robot: RobotModel) -> Dataset:
    return load_dataset(require_file(path, "dataset"), robot)


def get_model(path: Path, settings: Settings, dataset_digest: Optional[str] = None) -> VaeModel:
    """
    Carga el modelo con la arquitectura esperada por la configuración.

    Raises:
        LineageMismatchError: el modelo se entrenó con otro dataset
    """
    expected = ModelArchitecture(hidden_sizes=settings.hidden_sizes)
    model = load_model(require_file(path, "modelo"), expected)
    if dataset_digest is not None and model.dataset_digest != dataset_digest:
        raise LineageMismatchError(f"{path}: el modelo se entrenó con otro dataset")
    return model


def get_roadmap(path: Path, model_path: Optional[Path] = None) -> Roadmap:
    """
    Raises:
        LineageMismatchError: el roadmap se construyó con otro modelo
    """
    roadmap = load_roadmap(require_file(path, "roadmap"))
    if model_path is not None and roadmap.params.model_digest != file_digest(model_path):
        raise LineageMismatchError(f"{path}: el roadmap se construyó con otro modelo")
    return roadmap


def get_scenario(reference: str, robot: RobotModel) -> Scenario:
    """Ruta a un archivo .scn o id de un escenario incluido"""
    path = Path(reference)
    if path.is_file():
        scenario = load_scenario(path)
    else:
        scenario = builtin_scenario(reference)
    check_scenario(scenario, robot)
    logger.debug("escenario '%s' (%d obstáculos)", scenario.id, len(scenario.obstacles))
    return scenario
