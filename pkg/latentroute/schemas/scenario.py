from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from latentroute.schemas.collision import DIMENSION_COUNT, ConvexShape
from latentroute.schemas.robot import Pose


ScenarioShapeKind = Literal["sphere", "box", "cylinder", "capsule"]
ScenarioCategory = Literal["static", "moving", "morphing", "multi", "appearing", "free", "trapped", "trivial"]


def _check_dims(kind: str, dims: List[float]) -> None:
    if len(dims) != DIMENSION_COUNT[kind]:
        raise ValueError(f"{kind} necesita {DIMENSION_COUNT[kind]} dimensiones, recibió {len(dims)}")
    if any(not d > 0 for d in dims):
        raise ValueError(f"dimensiones de {kind} deben ser positivas")


def _strictly_increasing(ticks: List[int], what: str) -> None:
    if any(b <= a for a, b in zip(ticks, ticks[1:])):
        raise ValueError(f"los ticks de {what} deben ser estrictamente crecientes")


# =====================================================
# KEYFRAMES
# =====================================================

class PoseKeyframe(BaseModel):
    tick: int = Field(..., ge=0)
    pose: Pose

    class Config:
        frozen = True


class MorphKeyframe(BaseModel):
    """Forma del obstáculo a partir de `tick`"""
    tick: int = Field(..., ge=0)
    kind: ScenarioShapeKind
    dims: List[float]

    @model_validator(mode="after")
    def valid_shape(self) -> "MorphKeyframe":
        _check_dims(self.kind, self.dims)
        return self

    class Config:
        frozen = True


class ObstacleTrack(BaseModel):
    """Un miembro del obstáculo: forma base, trayectoria, morph y ventana de aparición"""
    name: str = Field(..., pattern=r"^[A-Za-z0-9_\-]+$")
    kind: ScenarioShapeKind
    dims: List[float]
    appear: int = Field(default=0, ge=0)
    disappear: Optional[int] = None
    trajectory: List[PoseKeyframe] = Field(..., min_length=1)
    morph: List[MorphKeyframe] = Field(default_factory=list)

    @model_validator(mode="after")
    def valid_track(self) -> "ObstacleTrack":
        _check_dims(self.kind, self.dims)
        if self.disappear is not None and self.disappear <= self.appear:
            raise ValueError("disappear debe ser mayor que appear")
        _strictly_increasing([k.tick for k in self.trajectory], "la trayectoria")
        _strictly_increasing([k.tick for k in self.morph], "el morph")
        return self

    class Config:
        frozen = True


# =====================================================
# ESCENARIO
# =====================================================

class Scenario(BaseModel):
    """Entorno guionado: obstáculos con línea de tiempo + configuraciones de inicio y meta"""
    id: str = Field(..., pattern=r"^[A-Za-z0-9_\-]+$")
    category: ScenarioCategory = "static"
    description: str = ""
    robot: str = "panda"
    tick_seconds: float = Field(default=0.05, gt=0)
    seed: int = 0
    max_ticks: int = Field(default=1500, ge=1)
    start: List[float] = Field(..., min_length=7, max_length=7)
    goal: List[float] = Field(..., min_length=7, max_length=7)
    obstacles: List[ObstacleTrack] = Field(default_factory=list)

    @field_validator("description")
    @classmethod
    def single_line(cls, v: str) -> str:
        if "#" in v or "\n" in v:
            raise ValueError("la descripción no admite '#' ni saltos de línea")
        return " ".join(v.split())

    @model_validator(mode="after")
    def valid_scenario(self) -> "Scenario":
        if self.start == self.goal and self.category != "trivial":
            raise ValueError("inicio y meta deben ser distintos")
        names = [t.name for t in self.obstacles]
        if len(set(names)) != len(names):
            raise ValueError("nombres de obstáculo repetidos")
        return self

    class Config:
        frozen = True
        json_schema_extra = {
            "example": {
                "id": "static_blocker",
                "category": "static",
                "tick_seconds": 0.05,
                "seed": 7,
                "start": [-1.2, -0.3, 0.0, -2.2, 0.0, 2.0, 0.7854],
                "goal": [1.2, -0.3, 0.0, -2.2, 0.0, 2.0, 0.7854],
            }
        }


class ObstacleSnapshot(BaseModel):
    """Estado del obstáculo en un tick: unión de los miembros activos"""
    tick: int
    ids: List[str]
    members: List[ConvexShape]

    @property
    def label(self) -> str:
        return "+".join(self.ids)
