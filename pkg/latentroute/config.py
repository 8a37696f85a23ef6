"""
latentroute - Configuración
Manejo de variables de entorno, archivo de configuración y overrides del CLI
"""

import hashlib
import json
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

from dotenv import dotenv_values
from pydantic import ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings

from latentroute.errors import ConfigError
from latentroute.schemas.collision import CostParams, GjkParams


# Campos que no afectan el contenido de los artefactos
_NON_LINEAGE_FIELDS = {"OUTPUT_DIR", "LOG_LEVEL", "WORKERS"}


class Settings(BaseSettings):
    """
    Configuración de una corrida.
    Lee variables de entorno y el archivo .env (formato clave=valor).
    """

    # General
    PROJECT_NAME: str = "latentroute"
    OUTPUT_DIR: str = "runs"
    LOG_LEVEL: str = "INFO"
    SEED: int = 7
    WORKERS: int = 1

    # Robot
    ROBOT_FILE: str = ""  # vacío = Panda incluido en el paquete

    # Colisión
    COST_BETA: float = 2.0
    COLLISION_MARGIN: float = 0.0
    GJK_MAX_ITERATIONS: int = 64
    GJK_TOLERANCE: float = 1e-9

    # Dataset
    DATASET_COUNT: int = 100000
    WORKSPACE_BOX: str = "-0.8,0.8,-0.8,0.8,0.0,1.2"
    OBSTACLE_RADIUS: float = 0.02
    FOCUS_FRACTION: float = 0.25
    REBALANCE_FRACTION: float = 0.30
    TRAIN_FRACTION: float = 0.8
    CHUNK_SIZE: int = 5000

    # Autoencoder
    HIDDEN_SIZES: str = "300,200,75"
    EPOCHS: int = 40
    BATCH_SIZE: int = 256
    LEARNING_RATE: float = 1e-3
    MOMENTUM: float = 0.9
    KL_WEIGHT: float = 1e-3
    KL_WARMUP_FRACTION: float = 0.1

    # Roadmap
    KNN_K: int = 8
    GRID_RESOLUTION: int = 100
    GRID_MARGIN: float = 0.05
    FLAG_THRESHOLD: float = 0.5
    BRIDGE_CAP_FACTOR: float = 3.0
    MAX_ENCODED_NODES: int = 4000

    # Métricas del manifold
    METRICS_K: int = 12
    METRICS_BINS: str = "2000,5000,10000,20000"
    METRICS_MAX_POINTS: int = 2000

    # Replanificación
    CLEARANCE_THRESHOLD: float = 0.08
    CHECK_PERIOD: int = 1
    RELABEL_FACTOR: float = 5.0
    JOINT_SPEED: float = 0.05
    GOAL_TOLERANCE: float = 0.03
    AVOID_TTL: int = 50
    TRAP_PATIENCE: int = 100  # ticks seguidos sin avance antes de fallar (trapped)
    MAX_TICKS: int = 0  # 0 = usar el max_ticks del escenario
    ADAPTIVE: bool = True
    SCENARIO_JITTER: float = 0.0

    @field_validator("LOG_LEVEL")
    @classmethod
    def normalize_level(cls, v: str) -> str:
        """Acepta el nivel en cualquier capitalización"""
        level = v.strip().upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"nivel de log desconocido: {v}")
        return level

    @field_validator(
        "DATASET_COUNT", "EPOCHS", "BATCH_SIZE", "KNN_K", "GRID_RESOLUTION",
        "METRICS_K", "CHECK_PERIOD", "WORKERS", "CHUNK_SIZE", "GJK_MAX_ITERATIONS",
        "MAX_ENCODED_NODES", "METRICS_MAX_POINTS",
    )
    @classmethod
    def positive_int(cls, v: int) -> int:
        if v < 1:
            raise ValueError("debe ser >= 1")
        return v

    @field_validator(
        "COST_BETA", "OBSTACLE_RADIUS", "LEARNING_RATE", "CLEARANCE_THRESHOLD",
        "JOINT_SPEED", "GOAL_TOLERANCE", "RELABEL_FACTOR", "BRIDGE_CAP_FACTOR",
        "GJK_TOLERANCE",
    )
    @classmethod
    def positive_float(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("debe ser > 0")
        return v

    @field_validator("REBALANCE_FRACTION", "TRAIN_FRACTION", "FLAG_THRESHOLD")
    @classmethod
    def open_unit_interval(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError("debe estar en (0, 1)")
        return v

    @field_validator("FOCUS_FRACTION", "KL_WARMUP_FRACTION", "MOMENTUM", "GRID_MARGIN")
    @classmethod
    def closed_unit_interval(cls, v: float) -> float:
        if not 0.0 <= v <= 1.0:
            raise ValueError("debe estar en [0, 1]")
        return v

    @field_validator("COLLISION_MARGIN", "KL_WEIGHT", "SCENARIO_JITTER", "MAX_TICKS", "AVOID_TTL", "TRAP_PATIENCE")
    @classmethod
    def non_negative(cls, v):
        if v < 0:
            raise ValueError("debe ser >= 0")
        return v

    @model_validator(mode="after")
    def check_composites(self) -> "Settings":
        # Fuerza el parseo de los campos compuestos al construir
        self.workspace_box
        self.hidden_sizes
        self.metrics_bins
        if self.CLEARANCE_THRESHOLD <= self.COLLISION_MARGIN:
            raise ValueError("CLEARANCE_THRESHOLD debe ser mayor que COLLISION_MARGIN")
        return self

    @property
    def workspace_box(self) -> Tuple[Tuple[float, float], ...]:
        """Convierte WORKSPACE_BOX en ((xmin, xmax), (ymin, ymax), (zmin, zmax))"""
        values = _float_list(self.WORKSPACE_BOX, "WORKSPACE_BOX")
        if len(values) != 6:
            raise ValueError("WORKSPACE_BOX necesita 6 valores: xmin,xmax,ymin,ymax,zmin,zmax")
        box = tuple((values[i], values[i + 1]) for i in range(0, 6, 2))
        if any(lo >= hi for lo, hi in box):
            raise ValueError("WORKSPACE_BOX degenerado: cada mínimo debe ser menor que su máximo")
        return box

    @property
    def hidden_sizes(self) -> List[int]:
        """Convierte HIDDEN_SIZES en una lista de enteros"""
        sizes = [int(v) for v in _float_list(self.HIDDEN_SIZES, "HIDDEN_SIZES")]
        if not sizes or any(s < 1 for s in sizes):
            raise ValueError("HIDDEN_SIZES debe listar tamaños positivos")
        return sizes

    @property
    def metrics_bins(self) -> List[int]:
        """Convierte METRICS_BINS en una lista de tamaños de submuestra"""
        bins = [int(v) for v in _float_list(self.METRICS_BINS, "METRICS_BINS")]
        if not bins or any(b < 2 for b in bins):
            raise ValueError("METRICS_BINS debe listar tamaños >= 2")
        return bins

    @property
    def gjk_params(self) -> GjkParams:
        return GjkParams(max_iterations=self.GJK_MAX_ITERATIONS, tolerance=self.GJK_TOLERANCE)

    @property
    def cost_params(self) -> CostParams:
        return CostParams(beta=self.COST_BETA)

    def lineage_dict(self) -> Dict[str, Any]:
        return {k: v for k, v in self.model_dump().items() if k not in _NON_LINEAGE_FIELDS}

    def config_hash(self) -> str:
        """SHA-256 del JSON canónico de los campos que afectan a los artefactos"""
        payload = json.dumps(self.lineage_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    class Config:
        env_file = ".env"
        case_sensitive = True
        extra = "forbid"
        validate_assignment = True


def _float_list(raw: str, name: str) -> List[float]:
    try:
        return [float(part) for part in raw.split(",") if part.strip()]
    except ValueError:
        raise ValueError(f"{name} contiene valores no numéricos: {raw!r}")


@lru_cache()
def get_settings() -> Settings:
    """
    Retorna la configuración cacheada del proceso.
    Se carga solo una vez y se reutiliza.
    """
    return Settings()


def load_settings(
    config_file: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> Settings:
    """
    Construye la configuración de una corrida.
    Prioridad: archivo de configuración < entorno < overrides del CLI.

    Raises:
        ConfigError: archivo ilegible, claves desconocidas o valores inválidos
    """
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    unknown = sorted(set(overrides) - set(Settings.model_fields))
    if unknown:
        raise ConfigError(f"opciones desconocidas: {', '.join(unknown)}")

    kwargs: Dict[str, Any] = dict(overrides)
    if config_file is not None:
        path = Path(config_file)
        if not path.is_file():
            raise ConfigError(f"no se puede leer el archivo de configuración: {path}")
        try:
            file_values = dotenv_values(path)
        except (OSError, UnicodeDecodeError) as e:
            raise ConfigError(f"no se puede leer el archivo de configuración {path}: {e}")
        unknown = sorted(set(file_values) - set(Settings.model_fields))
        if unknown:
            raise ConfigError(f"{path}: claves desconocidas: {', '.join(unknown)}")
        kwargs["_env_file"] = str(path)

    try:
        return Settings(**kwargs)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}"
            for err in e.errors()
        )
        raise ConfigError(f"configuración inválida: {problems}")


def parse_assignments(pairs: Optional[List[str]]) -> Dict[str, str]:
    """Convierte ['CLAVE=valor', ...] de --set en un diccionario"""
    result: Dict[str, str] = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set espera CLAVE=valor, recibido: {pair!r}")
        result[key.strip()] = value.strip()
    return result
