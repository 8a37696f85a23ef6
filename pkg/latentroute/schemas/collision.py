from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, PrivateAttr, model_validator

from latentroute.schemas.robot import Pose


ShapeKind = Literal["sphere", "box", "cylinder", "capsule", "hull"]

# Número de dimensiones por tipo de forma
DIMENSION_COUNT = {
    "sphere": 1,    # radio
    "box": 3,       # lados completos lx, ly, lz
    "cylinder": 2,  # radio, altura (eje z local)
    "capsule": 2,   # radio, longitud del segmento (eje z local)
    "hull": 0,      # puntos en el marco local
}


# =====================================================
# FORMAS
# =====================================================

class ConvexShape(BaseModel):
    """Primitiva convexa colocada en el mundo"""
    kind: ShapeKind
    dims: List[float] = Field(default_factory=list)
    points: Optional[List[List[float]]] = None
    pose: Pose = Field(default_factory=Pose)

    _rotation: Optional[np.ndarray] = PrivateAttr(default=None)

    @model_validator(mode="after")
    def check_dimensions(self) -> "ConvexShape":
        expected = DIMENSION_COUNT[self.kind]
        if len(self.dims) != expected:
            raise ValueError(f"{self.kind} necesita {expected} dimensiones, recibió {len(self.dims)}")
        if any(not (np.isfinite(d) and d > 0) for d in self.dims):
            raise ValueError(f"dimensiones de {self.kind} deben ser estrictamente positivas")
        if self.kind == "hull":
            pts = np.asarray(self.points or [], dtype=float)
            if pts.ndim != 2 or pts.shape[0] < 4 or pts.shape[1] != 3:
                raise ValueError("hull necesita al menos 4 puntos 3D")
            centered = pts - pts.mean(axis=0)
            sv = np.linalg.svd(centered, compute_uv=False)
            if sv[-1] <= 1e-9 * max(sv[0], 1e-12):
                raise ValueError("los puntos del hull son coplanares")
        elif self.points is not None:
            raise ValueError(f"{self.kind} no acepta puntos")
        return self

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.pose.position, dtype=float)

    @property
    def rotation(self) -> np.ndarray:
        """Matriz de rotación 3x3 (se calcula una sola vez)"""
        if self._rotation is None:
            from scipy.spatial.transform import Rotation

            w, x, y, z = self.pose.orientation
            self._rotation = Rotation.from_quat([x, y, z, w]).as_matrix()
        return self._rotation

    class Config:
        frozen = True
        json_schema_extra = {
            "example": {
                "kind": "box",
                "dims": [0.12, 0.12, 0.12],
                "pose": {"position": [0.45, 0.0, 0.5], "orientation": [1.0, 0.0, 0.0, 0.0]},
            }
        }


# =====================================================
# REPORTES
# =====================================================

class ClearanceReport(BaseModel):
    """Distancias brazo-obstáculo por eslabón"""
    min_distance: float = Field(..., ge=0)
    argmin_link: int = Field(..., ge=0, le=6)
    per_link: List[float] = Field(..., min_length=7, max_length=7)

    @model_validator(mode="after")
    def consistent_minimum(self) -> "ClearanceReport":
        if any(d < 0 for d in self.per_link):
            raise ValueError("las distancias no pueden ser negativas")
        if self.per_link[self.argmin_link] != self.min_distance or min(self.per_link) != self.min_distance:
            raise ValueError("min_distance debe ser el mínimo de per_link en argmin_link")
        return self


class CostParams(BaseModel):
    beta: float = Field(default=2.0, gt=0)

    class Config:
        frozen = True


class GjkParams(BaseModel):
    """Límites del bucle GJK"""
    max_iterations: int = Field(default=64, ge=1)
    tolerance: float = Field(default=1e-9, gt=0)

    class Config:
        frozen = True
