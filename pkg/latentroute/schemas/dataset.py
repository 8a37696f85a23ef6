from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

from latentroute.schemas.robot import Pose


# Orden fijo de los 18 campos de una muestra aplanada
FIELD_NAMES: Tuple[str, ...] = (
    "theta0", "theta1", "theta2", "theta3", "theta4", "theta5", "theta6",
    "x", "y", "z", "qw", "qx", "qy", "qz",
    "ox", "oy", "oz",
    "flag",
)
FLAG_INDEX = 17


class Sample(BaseModel):
    """Registro de entrenamiento: articulaciones, pose del efector, obstáculo y bandera"""
    joints: List[float] = Field(..., min_length=7, max_length=7)
    ee_pose: Pose
    obstacle_pos: List[float] = Field(..., min_length=3, max_length=3)
    collision_flag: Literal[0, 1]

    def to_row(self) -> List[float]:
        return [
            *self.joints,
            *self.ee_pose.position,
            *self.ee_pose.orientation,
            *self.obstacle_pos,
            float(self.collision_flag),
        ]

    @classmethod
    def from_row(cls, row) -> "Sample":
        row = [float(v) for v in row]
        if len(row) != len(FIELD_NAMES):
            raise ValueError(f"una muestra tiene {len(FIELD_NAMES)} campos, recibidos {len(row)}")
        return cls(
            joints=row[0:7],
            ee_pose=Pose(position=row[7:10], orientation=row[10:14]),
            obstacle_pos=row[14:17],
            collision_flag=int(row[17]),
        )


class Normalization(BaseModel):
    """Media y escala por campo, calculadas solo con el split de entrenamiento"""
    mean: List[float] = Field(..., min_length=18, max_length=18)
    scale: List[float] = Field(..., min_length=18, max_length=18)
    unscaled_fields: List[str] = Field(default_factory=list)
    warnings: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def flag_passthrough(self) -> "Normalization":
        if self.mean[FLAG_INDEX] != 0.0 or self.scale[FLAG_INDEX] != 1.0:
            raise ValueError("la bandera de colisión no se escala")
        if any(s <= 0 for s in self.scale):
            raise ValueError("las escalas deben ser positivas")
        return self


class DatasetMeta(BaseModel):
    """Contenido del archivo .meta que acompaña al CSV"""
    format_version: int = 1
    tool_version: str
    seed: int
    count: int
    robot_digest: str
    config_hash: str = ""
    colliding_fraction: float
    workspace_box: List[float] = Field(..., min_length=6, max_length=6)
    obstacle_radius: float
    collision_margin: float = 0.0
    focus_fraction: float = 0.0
    rebalance_fraction: Optional[float] = None
    train_fraction: Optional[float] = None
    normalization: Optional[Normalization] = None
