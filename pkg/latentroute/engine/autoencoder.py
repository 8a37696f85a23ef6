"""
Autoencoder variacional con espacio latente 2D (PyTorch, float64).

Encoder: 18 -> ocultas -> (media 2, log-varianza 2); decoder: 2 -> ocultas
invertidas -> 18, con el campo de bandera pasado por una sigmoide.
"""

import logging
import math
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch
from torch import nn

from latentroute import __version__
from latentroute.engine.dataset import Dataset, normalize
from latentroute.errors import ArchitectureMismatchError, CorruptArtifactError, DomainError, InputError, TrainingError
from latentroute.schemas.dataset import FLAG_INDEX, Normalization
from latentroute.schemas.training import EpochStats, ModelArchitecture, TrainConfig, TrainReport


logger = logging.getLogger(__name__)

MODEL_FORMAT = "latentroute-vae"
MODEL_FORMAT_VERSION = 1
DTYPE = torch.float64


# =====================================================
# RED
# =====================================================

def _mlp(sizes: Sequence[int], final_activation: bool) -> nn.Sequential:
    layers: List[nn.Module] = []
    for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        layers.append(nn.Linear(n_in, n_out))
        if final_activation or i < len(sizes) - 2:
            layers.append(nn.Tanh())
    return nn.Sequential(*layers)


class VaeNetwork(nn.Module):
    def __init__(self, architecture: ModelArchitecture):
        super().__init__()
        hidden = list(architecture.hidden_sizes)
        self.architecture = architecture
        self.encoder = _mlp([architecture.input_dim, *hidden], final_activation=True)
        self.mean_head = nn.Linear(hidden[-1], architecture.latent_dim)
        self.logvar_head = nn.Linear(hidden[-1], architecture.latent_dim)
        self.decoder = _mlp([architecture.latent_dim, *reversed(hidden), architecture.input_dim], final_activation=False)

    def encode(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        h = self.encoder(x)
        return self.mean_head(h), self.logvar_head(h)

    def decode(self, z: torch.Tensor) -> torch.Tensor:
        raw = self.decoder(z)
        return torch.cat([raw[:, :FLAG_INDEX], torch.sigmoid(raw[:, FLAG_INDEX:])], dim=1)

    def forward(self, x: torch.Tensor, noise: Optional[torch.Tensor] = None):
        """Con `noise` aplica el truco de reparametrización; sin él usa la media"""
        mean, logvar = self.encode(x)
        z = mean if noise is None else mean + torch.exp(0.5 * logvar) * noise
        return self.decode(z), mean, logvar


def build_network(architecture: ModelArchitecture, seed: int) -> VaeNetwork:
    """Inicialización determinista sin tocar el estado global de torch"""
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        return VaeNetwork(architecture).to(DTYPE)


# =====================================================
# PÉRDIDA
# =====================================================

def reconstruction_error(x: torch.Tensor, x_hat: torch.Tensor) -> torch.Tensor:
    """Media sobre el batch de ||x - x'||^2"""
    return ((x - x_hat) ** 2).sum(dim=1).mean()


def kl_divergence(mean: torch.Tensor, logvar: torch.Tensor) -> torch.Tensor:
    """KL cerrada a N(0, I), promediada sobre el batch"""
    return (-0.5 * (1.0 + logvar - mean ** 2 - torch.exp(logvar)).sum(dim=1)).mean()


def loss_terms(
    network: VaeNetwork,
    batch: torch.Tensor,
    kl_weight: float,
    noise: Optional[torch.Tensor] = None,
) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """(total, reconstrucción, kl) como tensores diferenciables"""
    x_hat, mean, logvar = network(batch, noise)
    recon = reconstruction_error(batch, x_hat)
    kl = kl_divergence(mean, logvar)
    return recon + kl_weight * kl, recon, kl


# =====================================================
# MODELO ENTRENADO
# =====================================================

class VaeModel:
    """
    Red entrenada + referencia de normalización. Inmutable para el resto
    del pipeline; toda inferencia usa la media latente.
    """

    def __init__(
        self,
        network: VaeNetwork,
        normalization: Normalization,
        kl_weight: float,
        config_hash: str = "",
        dataset_digest: str = "",
        tool_version: str = __version__,
    ):
        self.network = network.eval()
        for parameter in self.network.parameters():
            parameter.requires_grad_(False)
        self.normalization = normalization
        self.kl_weight = kl_weight
        self.config_hash = config_hash
        self.dataset_digest = dataset_digest
        self.tool_version = tool_version
        self._mean = np.asarray(normalization.mean)
        self._scale = np.asarray(normalization.scale)

    @property
    def architecture(self) -> ModelArchitecture:
        return self.network.architecture

    # Espacio normalizado

    def encode_batch(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        x = _finite(x, self.architecture.input_dim, "entrada del encoder")
        with torch.no_grad():
            mean, logvar = self.network.encode(torch.from_numpy(x))
        return mean.numpy(), logvar.numpy()

    def decode_batch(self, z: np.ndarray) -> np.ndarray:
        z = _finite(z, self.architecture.latent_dim, "punto latente")
        with torch.no_grad():
            return self.network.decode(torch.from_numpy(z)).numpy()

    def encode(self, x: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
        mean, logvar = self.encode_batch(np.asarray(x, dtype=float)[None, :])
        return mean[0], logvar[0]

    def decode(self, z: Sequence[float]) -> np.ndarray:
        return self.decode_batch(np.asarray(z, dtype=float)[None, :])[0]

    # Espacio original

    def normalize(self, raw: np.ndarray) -> np.ndarray:
        return (np.asarray(raw, dtype=float) - self._mean) / self._scale

    def denormalize(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) * self._scale + self._mean

    def encode_state(self, raw: Sequence[float]) -> np.ndarray:
        """Vector crudo de 18 campos -> media latente 2D"""
        return self.encode(self.normalize(raw))[0]

    def default_obstacle_position(self) -> np.ndarray:
        """Posición media del obstáculo en el corpus, usada cuando no hay obstáculo"""
        return self._mean[14:17].copy()


def _finite(values, width: int, what: str) -> np.ndarray:
    array = np.ascontiguousarray(np.asarray(values, dtype=np.float64))
    if array.ndim != 2 or array.shape[1] != width:
        raise DomainError(f"{what}: se esperaba forma (n, {width}), recibido {array.shape}")
    if not np.isfinite(array).all():
        raise DomainError(f"{what}: valores no finitos")
    return array


def encode(m: VaeModel, x: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """(media, log-varianza) de un vector normalizado de 18 campos"""
    return m.encode(x)


def decode(m: VaeModel, z: Sequence[float]) -> np.ndarray:
    """Vector normalizado de 18 campos; el último es el puntaje de bandera"""
    return m.decode(z)


def loss(m: VaeModel, batch: np.ndarray) -> Tuple[float, float, float]:
    """(total, reconstrucción, kl) sobre un batch normalizado, usando la media latente"""
    x = torch.from_numpy(_finite(batch, m.architecture.input_dim, "batch"))
    if len(x) == 0:
        raise DomainError("el batch está vacío")
    with torch.no_grad():
        total, recon, kl = loss_terms(m.network, x, m.kl_weight)
    return float(total), float(recon), float(kl)


# =====================================================
# ENTRENAMIENTO
# =====================================================

def kl_weight_at(config: TrainConfig, epoch: int) -> float:
    """Calentamiento lineal del peso KL durante la fracción inicial de épocas"""
    warmup = int(math.ceil(config.kl_warmup_fraction * config.epochs))
    if warmup <= 0:
        return config.kl_weight
    return config.kl_weight * min(1.0, (epoch + 1) / warmup)


def flag_accuracy(m: VaeModel, x: np.ndarray, threshold: float = 0.5) -> float:
    """Fracción de muestras cuya bandera decodificada (umbral 0.5) coincide"""
    mean, _ = m.encode_batch(x)
    decoded = m.decode_batch(mean)[:, FLAG_INDEX]
    return float(np.mean((decoded >= threshold) == (x[:, FLAG_INDEX] >= 0.5)))


def train(
    d: Dataset,
    config: TrainConfig,
    heldout: Optional[Dataset] = None,
    dataset_digest: str = "",
    config_hash: str = "",
) -> Tuple[VaeModel, TrainReport]:
    """
    Entrena con SGD + momentum sobre el split normalizado `d`.
    Determinista por semilla: la inicialización, el barajado y el ruido de
    reparametrización salen de generadores sembrados.

    Raises:
        DomainError: dataset de una sola clase, sin normalización o menor al batch
        TrainingError: la pérdida deja de ser finita (con índice de época)
    """
    if not d.has_both_classes():
        raise DomainError("entrenar requiere ambas clases en el dataset")
    if len(d) < config.batch_size:
        raise DomainError(f"el dataset ({len(d)}) es menor que el batch ({config.batch_size})")

    architecture = ModelArchitecture(hidden_sizes=config.hidden_sizes)
    network = build_network(architecture, config.seed)
    generator = torch.Generator().manual_seed(config.seed)
    optimizer = torch.optim.SGD(network.parameters(), lr=config.learning_rate, momentum=config.momentum)
    x = torch.from_numpy(np.ascontiguousarray(normalize(d, d.samples)))
    n = len(x)

    history: List[EpochStats] = []
    for epoch in range(config.epochs):
        weight = kl_weight_at(config, epoch)
        network.train()
        order = torch.randperm(n, generator=generator)
        for start in range(0, n, config.batch_size):
            batch = x[order[start:start + config.batch_size]]
            noise = torch.randn(len(batch), architecture.latent_dim, generator=generator, dtype=DTYPE)
            optimizer.zero_grad()
            total, _, _ = loss_terms(network, batch, weight, noise)
            if not torch.isfinite(total):
                raise TrainingError(epoch)
            total.backward()
            optimizer.step()

        network.eval()
        with torch.no_grad():
            total, recon, kl = loss_terms(network, x, weight)
        if not all(math.isfinite(float(v)) for v in (total, recon, kl)):
            raise TrainingError(epoch)
        history.append(EpochStats(
            epoch=epoch, kl_weight=weight, reconstruction=float(recon), kl=max(float(kl), 0.0), total=float(total)
        ))
        logger.debug("época %d: total=%.6f recon=%.6f kl=%.6f", epoch, float(total), float(recon), float(kl))

    model = VaeModel(network, d.normalization, config.kl_weight, config_hash, dataset_digest)
    evaluation = heldout if heldout is not None and len(heldout) else d
    x_eval = normalize(d, evaluation.samples)
    _, heldout_recon, _ = loss(model, x_eval)
    report = TrainReport(
        epochs=history,
        heldout_reconstruction=heldout_recon,
        flag_accuracy=flag_accuracy(model, x_eval),
        train_samples=len(d),
        heldout_samples=len(evaluation) if evaluation is not d else 0,
        config=config,
        dataset_digest=dataset_digest,
        config_hash=config_hash,
        tool_version=__version__,
    )
    logger.info(
        "entrenamiento terminado: recon retenida %.4f, exactitud de bandera %.3f",
        report.heldout_reconstruction, report.flag_accuracy,
    )
    return model, report


# =====================================================
# PERSISTENCIA
# =====================================================

def save_model(m: VaeModel, path: Path) -> None:
    torch.save(
        {
            "format": MODEL_FORMAT,
            "format_version": MODEL_FORMAT_VERSION,
            "architecture": m.architecture.model_dump(),
            "state_dict": m.network.state_dict(),
            "normalization": m.normalization.model_dump(),
            "kl_weight": m.kl_weight,
            "config_hash": m.config_hash,
            "dataset_digest": m.dataset_digest,
            "tool_version": m.tool_version,
        },
        str(path),
    )


def load_model(path: Path, expected: Optional[ModelArchitecture] = None) -> VaeModel:
    """
    Raises:
        InputError: archivo inexistente
        CorruptArtifactError: archivo truncado, dañado o de otra versión
        ArchitectureMismatchError: arquitectura distinta de la esperada
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no existe el modelo {path}")
    try:
        payload = torch.load(str(path), map_location="cpu", weights_only=True)
    except Exception as e:
        raise CorruptArtifactError(f"{path}: no se pudo leer el modelo ({type(e).__name__})")
    if not isinstance(payload, dict) or payload.get("format") != MODEL_FORMAT:
        raise CorruptArtifactError(f"{path}: no es un modelo de latentroute")
    if payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise CorruptArtifactError(
            f"{path}: versión de formato {payload.get('format_version')} no soportada (se espera {MODEL_FORMAT_VERSION})"
        )

    try:
        architecture = ModelArchitecture(**payload["architecture"])
        normalization = Normalization(**payload["normalization"])
    except Exception as e:
        raise CorruptArtifactError(f"{path}: metadatos del modelo inválidos ({e})")
    if expected is not None and architecture != expected:
        raise ArchitectureMismatchError(
            f"{path}: arquitectura {architecture.hidden_sizes} distinta de la esperada {expected.hidden_sizes}"
        )

    network = VaeNetwork(architecture).to(DTYPE)
    try:
        network.load_state_dict(payload["state_dict"], strict=True)
    except (RuntimeError, KeyError) as e:
        raise ArchitectureMismatchError(f"{path}: los pesos no corresponden a la arquitectura declarada ({e})")
    return VaeModel(
        network,
        normalization,
        float(payload.get("kl_weight", 0.0)),
        config_hash=str(payload.get("config_hash", "")),
        dataset_digest=str(payload.get("dataset_digest", "")),
        tool_version=str(payload.get("tool_version", "")),
    )
