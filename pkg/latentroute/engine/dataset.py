"""
Corpus de 18 campos: generación etiquetada, rebalanceo, split estratificado,
normalización y persistencia CSV + sidecar .meta.
"""

import csv
import dataclasses
import hashlib
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from dotenv import dotenv_values
from pydantic import ValidationError

from latentroute import __version__
from latentroute.engine.collision import clearance_from_frames
from latentroute.engine.kinematics import batch_chain_transforms, batch_pose_vectors, random_configurations, robot_digest
from latentroute.errors import CorruptArtifactError, DomainError, InputError, LineageMismatchError
from latentroute.schemas.collision import ConvexShape, GjkParams
from latentroute.schemas.dataset import FIELD_NAMES, FLAG_INDEX, DatasetMeta, Normalization, Sample
from latentroute.schemas.robot import Pose, RobotModel


logger = logging.getLogger(__name__)

N_FIELDS = len(FIELD_NAMES)
JOINTS = slice(0, 7)
POSE = slice(7, 14)
OBSTACLE = slice(14, 17)

FOCUS_SIGMA = 0.08
CONSISTENCY_TOLERANCE = 1e-6
WorkspaceBox = Sequence[Tuple[float, float]]


@dataclasses.dataclass(frozen=True)
class Dataset:
    """Colección ordenada e inmutable de muestras (n, 18)"""

    samples: np.ndarray
    seed: int
    meta: DatasetMeta
    normalization: Optional[Normalization] = None

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 2 or samples.shape[1] != N_FIELDS:
            raise DomainError(f"las muestras deben tener forma (n, {N_FIELDS})")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def flags(self) -> np.ndarray:
        return self.samples[:, FLAG_INDEX]

    @property
    def colliding_fraction(self) -> float:
        return float(self.flags.mean()) if len(self) else 0.0

    def has_both_classes(self) -> bool:
        return 0 < int(self.flags.sum()) < len(self)

    def sample(self, index: int) -> Sample:
        return Sample.from_row(self.samples[index])

    def replace(self, **changes) -> "Dataset":
        """Nueva instancia; recalcula los campos derivados del meta"""
        new = dataclasses.replace(self, **changes)
        meta = new.meta.model_copy(update={
            "count": len(new),
            "colliding_fraction": new.colliding_fraction,
            "normalization": new.normalization,
        })
        return dataclasses.replace(new, meta=meta)


# =====================================================
# GENERACIÓN
# =====================================================

def _obstacle_sphere(position: np.ndarray, radius: float) -> ConvexShape:
    return ConvexShape(kind="sphere", dims=[radius], pose=Pose(position=position.tolist()))


def _generate_chunk(
    model: RobotModel,
    count: int,
    box: np.ndarray,
    seed_seq: np.random.SeedSequence,
    obstacle_radius: float,
    margin: float,
    focus_fraction: float,
    gjk: GjkParams,
) -> np.ndarray:
    """Bloque de muestras con su propio generador; consume siempre los mismos sorteos"""
    rng = np.random.default_rng(seed_seq)
    configs = random_configurations(model, count, rng)
    uniform_obstacles = rng.uniform(box[:, 0], box[:, 1], size=(count, 3))
    focus_mask = rng.random(count) < focus_fraction
    focus_links = rng.integers(0, 7, size=count)
    focus_t = rng.random(count)
    focus_noise = rng.normal(0.0, FOCUS_SIGMA, size=(count, 3))

    frames = batch_chain_transforms(model, configs)
    poses = batch_pose_vectors(frames[:, -1])
    rows = np.empty((count, N_FIELDS))
    rows[:, JOINTS] = configs
    rows[:, POSE] = poses

    for i in range(count):
        obstacle = uniform_obstacles[i]
        if focus_mask[i]:
            # Obstáculo cerca del eje de un eslabón al azar
            segment = _world_segment(model, frames[i], int(focus_links[i]))
            point = segment[0] + focus_t[i] * (segment[1] - segment[0]) + focus_noise[i]
            obstacle = np.clip(point, box[:, 0], box[:, 1])
        report = clearance_from_frames(model, frames[i], _obstacle_sphere(obstacle, obstacle_radius), gjk)
        rows[i, OBSTACLE] = obstacle
        rows[i, FLAG_INDEX] = 1.0 if report.min_distance <= margin else 0.0
    return rows


def _world_segment(model: RobotModel, frames: np.ndarray, link: int) -> np.ndarray:
    rotation, translation = frames[link, :3, :3], frames[link, :3, 3]
    return model.capsule_segments[link] @ rotation.T + translation


def generate(
    model: RobotModel,
    count: int,
    workspace_box: WorkspaceBox,
    seed: int,
    obstacle_radius: float = 0.02,
    margin: float = 0.0,
    focus_fraction: float = 0.0,
    chunk_size: int = 5000,
    workers: int = 1,
    config_hash: str = "",
    gjk: GjkParams = GjkParams(),
) -> Dataset:
    """
    Genera `count` muestras etiquetadas: configuración uniforme dentro de límites,
    obstáculo esférico uniforme en la caja de trabajo (más una fracción enfocada
    cerca de los eslabones) y bandera de colisión con el margen dado.

    El resultado solo depende de la semilla: cada bloque recibe una semilla hija
    y los bloques se unen en orden, con cualquier número de workers.
    """
    if count < 1:
        raise DomainError("count debe ser >= 1")
    box = np.asarray(workspace_box, dtype=float).reshape(3, 2)
    if np.any(box[:, 0] >= box[:, 1]):
        raise DomainError(f"caja de trabajo degenerada: {box.tolist()}")
    if not 0.0 <= focus_fraction <= 1.0:
        raise DomainError("focus_fraction debe estar en [0, 1]")

    sizes = [min(chunk_size, count - start) for start in range(0, count, chunk_size)]
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    args = [(model, n, box, child, obstacle_radius, margin, focus_fraction, gjk) for n, child in zip(sizes, children)]

    if workers > 1 and len(sizes) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_generate_chunk, *zip(*args)))
    else:
        chunks = [_generate_chunk(*a) for a in args]

    samples = np.vstack(chunks)
    meta = DatasetMeta(
        tool_version=__version__,
        seed=seed,
        count=count,
        robot_digest=robot_digest(model),
        config_hash=config_hash,
        colliding_fraction=float(samples[:, FLAG_INDEX].mean()),
        workspace_box=box.ravel().tolist(),
        obstacle_radius=obstacle_radius,
        collision_margin=margin,
        focus_fraction=focus_fraction,
    )
    logger.info("dataset generado: %d muestras, %.3f en colisión", count, meta.colliding_fraction)
    return Dataset(samples=samples, seed=seed, meta=meta)


# =====================================================
# REBALANCEO Y SPLIT
# =====================================================

def rebalance(d: Dataset, target_collision_fraction: float, seed: int) -> Dataset:
    """
    Submuestrea o duplica cada clase para alcanzar la fracción objetivo
    manteniendo el tamaño del corpus.

    Raises:
        DomainError: fracción fuera de (0, 1) o dataset de una sola clase
    """
    if not 0.0 < target_collision_fraction < 1.0:
        raise DomainError("la fracción objetivo debe estar en (0, 1)")
    if not d.has_both_classes():
        raise DomainError("rebalancear requiere ambas clases en el dataset")

    n = len(d)
    colliding = np.flatnonzero(d.flags == 1.0)
    safe = np.flatnonzero(d.flags == 0.0)
    n_colliding = min(max(int(round(target_collision_fraction * n)), 1), n - 1)

    rng = np.random.default_rng(seed)
    picked = np.concatenate([
        _resample(rng, colliding, n_colliding),
        _resample(rng, safe, n - n_colliding),
    ])
    order = picked[rng.permutation(n)]
    meta = d.meta.model_copy(update={"rebalance_fraction": target_collision_fraction})
    result = d.replace(samples=d.samples[order], meta=meta)
    logger.info("rebalanceo: %.3f -> %.3f en colisión", d.colliding_fraction, result.colliding_fraction)
    return result


def _resample(rng: np.random.Generator, indices: np.ndarray, size: int) -> np.ndarray:
    if size <= len(indices):
        return rng.choice(indices, size=size, replace=False)
    extra = rng.choice(indices, size=size - len(indices), replace=True)
    return np.concatenate([indices, extra])


def split(d: Dataset, train_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """
    Split estratificado por bandera, disjunto y exhaustivo. Ambas partes llevan
    la normalización calculada con la parte de entrenamiento.

    Raises:
        DomainError: fracción fuera de (0, 1) o alguna clase quedaría vacía
    """
    if not 0.0 < train_fraction < 1.0:
        raise DomainError("train_fraction debe estar en (0, 1)")

    classes = [np.flatnonzero(d.flags == value) for value in (0.0, 1.0)]
    classes = [c for c in classes if len(c)]
    quotas = [train_fraction * len(c) for c in classes]
    counts = [int(math.floor(q)) for q in quotas]
    # Reparto del resto por mayor fracción (empate: orden de clase)
    remaining = int(round(train_fraction * len(d))) - sum(counts)
    for i in sorted(range(len(classes)), key=lambda i: -(quotas[i] - counts[i]))[:max(remaining, 0)]:
        counts[i] += 1

    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for members, n_train in zip(classes, counts):
        if n_train == 0 or n_train == len(members):
            raise DomainError("el split dejaría una clase vacía en una de las partes")
        shuffled = rng.permutation(members)
        train_idx.append(shuffled[:n_train])
        test_idx.append(shuffled[n_train:])

    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.sort(np.concatenate(test_idx))
    meta = d.meta.model_copy(update={"train_fraction": train_fraction})
    train = d.replace(samples=d.samples[train_idx], meta=meta)
    normalization = fit_normalization(train.samples)
    return (
        train.replace(normalization=normalization),
        d.replace(samples=d.samples[test_idx], meta=meta, normalization=normalization),
    )


# =====================================================
# NORMALIZACIÓN
# =====================================================

def fit_normalization(samples: np.ndarray) -> Normalization:
    """
    Media y desviación poblacional por campo. Un campo de varianza nula queda
    sin transformar (media 0, escala 1) y se registra el aviso.
    """
    samples = np.asarray(samples, dtype=float)
    mean = samples.mean(axis=0)
    scale = samples.std(axis=0)
    unscaled, warnings = [], []
    for i, name in enumerate(FIELD_NAMES):
        if i == FLAG_INDEX:
            mean[i], scale[i] = 0.0, 1.0
            continue
        if not scale[i] > 1e-12 * max(1.0, abs(mean[i])):
            mean[i], scale[i] = 0.0, 1.0
            unscaled.append(name)
            warnings.append(f"campo '{name}' con varianza nula: escala fijada en 1")
            logger.warning("campo '%s' con varianza nula: se deja sin escalar", name)
    return Normalization(mean=mean.tolist(), scale=scale.tolist(), unscaled_fields=unscaled, warnings=warnings)


def _stats(d: Dataset) -> Tuple[np.ndarray, np.ndarray]:
    if d.normalization is None:
        raise DomainError("el dataset no tiene estadísticas de normalización")
    return np.asarray(d.normalization.mean), np.asarray(d.normalization.scale)


def normalize(d: Dataset, x: np.ndarray) -> np.ndarray:
    """Vector(es) de 18 campos al espacio normalizado; la bandera pasa sin cambios"""
    mean, scale = _stats(d)
    return (np.asarray(x, dtype=float) - mean) / scale


def denormalize(d: Dataset, x: np.ndarray) -> np.ndarray:
    mean, scale = _stats(d)
    return np.asarray(x, dtype=float) * scale + mean


# =====================================================
# PERSISTENCIA
# =====================================================

def _format(value: float, column: int) -> str:
    if column == FLAG_INDEX:
        return str(int(value))
    return repr(float(value))


def dataset_csv(d: Dataset) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(FIELD_NAMES)
    for row in d.samples:
        writer.writerow([_format(v, i) for i, v in enumerate(row)])
    return buffer.getvalue()


def _meta_text(meta: DatasetMeta) -> str:
    lines = [
        f"format_version={meta.format_version}",
        f"tool_version={meta.tool_version}",
        f"seed={meta.seed}",
        f"count={meta.count}",
        f"robot_digest={meta.robot_digest}",
        f"config_hash={meta.config_hash}",
        f"colliding_fraction={meta.colliding_fraction!r}",
        f"workspace_box={' '.join(repr(v) for v in meta.workspace_box)}",
        f"obstacle_radius={meta.obstacle_radius!r}",
        f"collision_margin={meta.collision_margin!r}",
        f"focus_fraction={meta.focus_fraction!r}",
    ]
    if meta.rebalance_fraction is not None:
        lines.append(f"rebalance_fraction={meta.rebalance_fraction!r}")
    if meta.train_fraction is not None:
        lines.append(f"train_fraction={meta.train_fraction!r}")
    if meta.normalization is not None:
        norm = meta.normalization
        lines.append(f"normalization_mean={' '.join(repr(v) for v in norm.mean)}")
        lines.append(f"normalization_scale={' '.join(repr(v) for v in norm.scale)}")
        lines.append(f"normalization_unscaled={' '.join(norm.unscaled_fields)}")
    return "\n".join(lines) + "\n"


def meta_path(csv_path: Path) -> Path:
    return Path(csv_path).with_suffix(".meta")


def save_dataset(d: Dataset, path: Path) -> str:
    """Escribe CSV + .meta; retorna el digest SHA-256 del CSV"""
    path = Path(path)
    text = dataset_csv(d)
    path.write_text(text, encoding="utf-8")
    meta_path(path).write_text(_meta_text(d.meta), encoding="utf-8")
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _parse_meta(path: Path) -> DatasetMeta:
    values = dotenv_values(path)
    try:
        norm = None
        if values.get("normalization_mean"):
            unscaled = (values.get("normalization_unscaled") or "").split()
            norm = Normalization(
                mean=[float(v) for v in values["normalization_mean"].split()],
                scale=[float(v) for v in values["normalization_scale"].split()],
                unscaled_fields=unscaled,
                warnings=[f"campo '{name}' con varianza nula: escala fijada en 1" for name in unscaled],
            )
        optional = {k: float(values[k]) for k in ("rebalance_fraction", "train_fraction") if values.get(k)}
        return DatasetMeta(
            format_version=int(values["format_version"]),
            tool_version=values["tool_version"],
            seed=int(values["seed"]),
            count=int(values["count"]),
            robot_digest=values["robot_digest"],
            config_hash=values.get("config_hash") or "",
            colliding_fraction=float(values["colliding_fraction"]),
            workspace_box=[float(v) for v in values["workspace_box"].split()],
            obstacle_radius=float(values["obstacle_radius"]),
            collision_margin=float(values.get("collision_margin") or 0.0),
            focus_fraction=float(values.get("focus_fraction") or 0.0),
            normalization=norm,
            **optional,
        )
    except (KeyError, ValueError, TypeError, AttributeError, ValidationError) as e:
        raise CorruptArtifactError(f"{path}: metadatos inválidos ({e})")


def load_dataset(path: Path, model: Optional[RobotModel] = None) -> Dataset:
    """
    Lee CSV + .meta. Con `model`, verifica el linaje y la consistencia
    pose/cinemática de cada muestra.

    Raises:
        InputError: archivo faltante
        CorruptArtifactError: encabezado, filas o metadatos inválidos
        LineageMismatchError: el dataset se generó con otro robot
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no existe el dataset {path}")
    if not meta_path(path).is_file():
        raise InputError(f"falta el archivo de metadatos {meta_path(path)}")

    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(header) != FIELD_NAMES:
            raise CorruptArtifactError(f"{path}: encabezado inesperado")
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != N_FIELDS:
                raise CorruptArtifactError(f"{path}:{line_no}: se esperaban {N_FIELDS} columnas")
            try:
                values = [float(v) for v in row]
            except ValueError:
                raise CorruptArtifactError(f"{path}:{line_no}: valor no numérico")
            if values[FLAG_INDEX] not in (0.0, 1.0) or not all(map(math.isfinite, values)):
                raise CorruptArtifactError(f"{path}:{line_no}: valores inválidos")
            rows.append(values)

    meta = _parse_meta(meta_path(path))
    samples = np.array(rows, dtype=float).reshape(-1, N_FIELDS)
    if len(samples) != meta.count:
        raise CorruptArtifactError(f"{path}: {len(samples)} filas, los metadatos declaran {meta.count}")

    if model is not None:
        digest = robot_digest(model)
        if digest != meta.robot_digest:
            raise LineageMismatchError(f"{path}: generado con otro robot ({meta.robot_digest[:12]} != {digest[:12]})")
        check_consistency(model, samples, str(path))

    return Dataset(samples=samples, seed=meta.seed, meta=meta, normalization=meta.normalization)


def check_consistency(model: RobotModel, samples: np.ndarray, source: str = "<dataset>") -> None:
    """Cada ee_pose debe coincidir con la cinemática directa (cuaternión salvo signo)"""
    if not len(samples):
        return
    expected = batch_pose_vectors(batch_chain_transforms(model, samples[:, JOINTS])[:, -1])
    stored = samples[:, POSE]
    pos_err = np.abs(stored[:, :3] - expected[:, :3]).max(axis=1)
    quat_err = np.minimum(
        np.abs(stored[:, 3:] - expected[:, 3:]).max(axis=1),
        np.abs(stored[:, 3:] + expected[:, 3:]).max(axis=1),
    )
    bad = np.flatnonzero((pos_err > CONSISTENCY_TOLERANCE) | (quat_err > CONSISTENCY_TOLERANCE))
    if bad.size:
        raise CorruptArtifactError(
            f"{source}: {bad.size} muestras no coinciden con la cinemática directa (primera: fila {int(bad[0])})"
        )
    inside = (samples[:, JOINTS] >= model.lower) & (samples[:, JOINTS] <= model.upper)
    if not inside.all():
        row = int(np.flatnonzero(~inside.all(axis=1))[0])
        raise CorruptArtifactError(f"{source}: fila {row} con articulaciones fuera de límites")
