from typing import List, Optional

from pydantic import BaseModel, Field


class ModelArchitecture(BaseModel):
    """Tamaños de capa del VAE; el decoder es el espejo del encoder"""
    input_dim: int = 18
    hidden_sizes: List[int] = Field(default_factory=lambda: [300, 200, 75], min_length=1)
    latent_dim: int = 2
    activation: str = "tanh"

    class Config:
        frozen = True


class TrainConfig(BaseModel):
    """Hiperparámetros de entrenamiento"""
    hidden_sizes: List[int] = Field(default_factory=lambda: [300, 200, 75], min_length=1)
    epochs: int = Field(default=40, ge=1)
    batch_size: int = Field(default=256, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0)
    momentum: float = Field(default=0.9, ge=0, le=1)
    kl_weight: float = Field(default=1e-3, ge=0)
    kl_warmup_fraction: float = Field(default=0.1, ge=0, le=1)
    seed: int = 7

    class Config:
        json_schema_extra = {
            "example": {"hidden_sizes": [300, 200, 75], "epochs": 40, "batch_size": 256, "seed": 7}
        }


# =====================================================
# RESPONSE SCHEMAS
# =====================================================

class EpochStats(BaseModel):
    epoch: int
    kl_weight: float = Field(..., ge=0)
    reconstruction: float = Field(..., ge=0)
    kl: float = Field(..., ge=0)
    total: float = Field(..., ge=0)


class TrainReport(BaseModel):
    """Resultado del entrenamiento: pérdidas por época y métricas sobre datos retenidos"""
    epochs: List[EpochStats]
    heldout_reconstruction: float = Field(..., ge=0)
    flag_accuracy: float = Field(..., ge=0, le=1)
    train_samples: int
    heldout_samples: int
    config: TrainConfig
    dataset_digest: str = ""
    config_hash: str = ""
    tool_version: str = ""
    silhouette: Optional[float] = None
