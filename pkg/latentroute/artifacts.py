"""
latentroute - Artefactos
Capa de persistencia de una corrida: todo archivo de salida pasa por el
ArtifactStore, que no escribe fuera del directorio de salida configurado.
"""

import csv
import hashlib
import io
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

from pydantic import BaseModel

from latentroute import __version__
from latentroute.config import Settings
from latentroute.errors import ConfigError, InputError


logger = logging.getLogger(__name__)

# Nombres por defecto dentro del directorio de salida
DATASET_FILE = "dataset.csv"
MODEL_FILE = "model.pt"
TRAIN_REPORT_FILE = "train_report.json"
ROADMAP_FILE = "roadmap.json"
BUILD_REPORT_FILE = "build_report.json"
EMBEDDING_JSONL_FILE = "embedding_report.jsonl"
EMBEDDING_CSV_FILE = "embedding_summary.csv"
LATENT_POINTS_FILE = "latent_points.csv"


def file_digest(path: Path) -> str:
    """sha256 del contenido de un archivo"""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no existe el archivo {path}")
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _dump(payload: Any) -> Any:
    if isinstance(payload, BaseModel):
        return payload.model_dump(mode="json")
    return payload


class ArtifactStore:
    """
    Directorio de salida de una corrida.
    Toda escritura se resuelve dentro de `root`; los nombres que escapan
    (rutas absolutas, '..') se rechazan.
    """

    def __init__(self, root: Path, config_hash: str = ""):
        self.root = Path(root).resolve()
        self.config_hash = config_hash
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ConfigError(f"no se puede crear el directorio de salida {self.root}: {e}")

    @classmethod
    def from_settings(cls, settings: Settings) -> "ArtifactStore":
        return cls(Path(settings.OUTPUT_DIR), settings.config_hash())

    def path(self, name: str) -> Path:
        """
        Ruta de un artefacto dentro del directorio de salida.

        Raises:
            InputError: el nombre resuelve fuera del directorio
        """
        target = (self.root / name).resolve()
        if target != self.root and self.root not in target.parents:
            raise InputError(f"'{name}' queda fuera del directorio de salida {self.root}")
        return target

    def lineage(self) -> dict:
        return {"config_hash": self.config_hash, "tool_version": __version__}

    # ===== ESCRITURA =====

    def write_text(self, name: str, text: str) -> Path:
        target = self.path(name)
        target.write_text(text, encoding="utf-8")
        logger.debug("artefacto escrito: %s", target)
        return target

    def write_json(self, name: str, payload: Any) -> Path:
        """JSON con claves ordenadas; los modelos pydantic se serializan en modo json"""
        return self.write_text(name, json.dumps(_dump(payload), sort_keys=True, indent=2) + "\n")

    def write_jsonl(self, name: str, rows: Iterable[Any]) -> Path:
        lines = [json.dumps(_dump(row), sort_keys=True, separators=(",", ":")) for row in rows]
        return self.write_text(name, "\n".join(lines) + "\n")

    def write_csv(
        self,
        name: str,
        header: Sequence[str],
        rows: Iterable[Sequence[Any]],
        comment: Optional[str] = None,
    ) -> Path:
        buffer = io.StringIO()
        if comment:
            buffer.write(f"# {comment}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
        return self.write_text(name, buffer.getvalue())

    def lineage_comment(self) -> str:
        return f"latentroute {__version__} config_hash={self.config_hash}"
