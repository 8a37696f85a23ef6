from typing import List

import numpy as np
from pydantic import BaseModel, Field, PrivateAttr, field_validator, model_validator


# =====================================================
# POSES
# =====================================================

class Pose(BaseModel):
    """Posición en metros + orientación como cuaternión unitario (w, x, y, z)"""
    position: List[float] = Field(default_factory=lambda: [0.0, 0.0, 0.0], min_length=3, max_length=3)
    orientation: List[float] = Field(default_factory=lambda: [1.0, 0.0, 0.0, 0.0], min_length=4, max_length=4)

    @field_validator("orientation")
    @classmethod
    def unit_quaternion(cls, v: List[float]) -> List[float]:
        """Normaliza cuaterniones casi unitarios; rechaza el resto"""
        norm = float(np.linalg.norm(v))
        if not np.isfinite(norm) or abs(norm - 1.0) > 1e-6:
            raise ValueError(f"el cuaternión debe ser unitario (norma {norm})")
        if norm != 1.0:
            v = [float(c) / norm for c in v]
        return v

    @field_validator("position")
    @classmethod
    def finite_position(cls, v: List[float]) -> List[float]:
        if not all(np.isfinite(v)):
            raise ValueError("posición no finita")
        return [float(c) for c in v]

    class Config:
        frozen = True
        json_schema_extra = {
            "example": {"position": [0.4735, 0.0, 0.5156], "orientation": [0.0, 0.9238, -0.3827, 0.0]}
        }


# =====================================================
# MODELO DEL ROBOT
# =====================================================

class DhRow(BaseModel):
    """Fila Denavit-Hartenberg modificada: a, d en metros; alpha, theta_offset en radianes"""
    a: float
    d: float
    alpha: float
    theta_offset: float = 0.0

    class Config:
        frozen = True


class JointLimit(BaseModel):
    lower: float
    upper: float

    @model_validator(mode="after")
    def non_empty(self) -> "JointLimit":
        if not self.lower < self.upper:
            raise ValueError(f"intervalo de límites vacío: [{self.lower}, {self.upper}]")
        return self

    class Config:
        frozen = True


class CapsuleSpec(BaseModel):
    """Cápsula de colisión de un eslabón: segmento a-b en el marco del eslabón + radio"""
    radius: float = Field(..., gt=0)
    a: List[float] = Field(..., min_length=3, max_length=3)
    b: List[float] = Field(..., min_length=3, max_length=3)

    @model_validator(mode="after")
    def positive_length(self) -> "CapsuleSpec":
        if float(np.linalg.norm(np.subtract(self.b, self.a))) <= 0.0:
            raise ValueError("la cápsula necesita longitud positiva")
        return self

    class Config:
        frozen = True


class RobotModel(BaseModel):
    """
    Cadena serial de 7 articulaciones rotacionales.
    Inmutable una vez construida.
    """
    name: str = "robot"
    dh_rows: List[DhRow] = Field(..., min_length=7, max_length=7)
    joint_limits: List[JointLimit] = Field(..., min_length=7, max_length=7)
    capsules: List[CapsuleSpec] = Field(..., min_length=7, max_length=7)

    _dh: np.ndarray = PrivateAttr()
    _lower: np.ndarray = PrivateAttr()
    _upper: np.ndarray = PrivateAttr()
    _caps: np.ndarray = PrivateAttr()
    _radii: np.ndarray = PrivateAttr()

    def model_post_init(self, __context) -> None:
        self._dh = np.array([[r.a, r.d, r.alpha, r.theta_offset] for r in self.dh_rows], dtype=float)
        self._lower = np.array([lim.lower for lim in self.joint_limits], dtype=float)
        self._upper = np.array([lim.upper for lim in self.joint_limits], dtype=float)
        self._caps = np.array([[c.a, c.b] for c in self.capsules], dtype=float)
        self._radii = np.array([c.radius for c in self.capsules], dtype=float)

    @property
    def dh_array(self) -> np.ndarray:
        """(7, 4): a, d, alpha, theta_offset"""
        return self._dh

    @property
    def lower(self) -> np.ndarray:
        return self._lower

    @property
    def upper(self) -> np.ndarray:
        return self._upper

    @property
    def capsule_segments(self) -> np.ndarray:
        """(7, 2, 3): extremos de cada cápsula en el marco de su eslabón"""
        return self._caps

    @property
    def capsule_radii(self) -> np.ndarray:
        return self._radii

    class Config:
        frozen = True
