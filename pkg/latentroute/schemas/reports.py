from typing import List, Literal, Optional

from pydantic import BaseModel, Field


# =====================================================
# MÉTRICAS DEL MANIFOLD
# =====================================================

class EmbeddingReport(BaseModel):
    """Calidad de un embedding 2D respecto de los datos originales"""
    method: Literal["vae", "isomap"] = "vae"
    subsample_size: int = Field(..., ge=2)
    evaluated_points: int = Field(..., ge=2)
    k: int = Field(..., ge=1)
    trustworthiness: float = Field(..., ge=0, le=1)
    continuity: float = Field(..., ge=0, le=1)
    silhouette: float = Field(..., ge=-1, le=1)
    geodesic_rank_correlation: float = Field(..., ge=-1, le=1)

    class Config:
        json_schema_extra = {
            "example": {
                "method": "vae", "subsample_size": 5000, "evaluated_points": 2000, "k": 12,
                "trustworthiness": 0.91, "continuity": 0.93, "silhouette": 0.12,
                "geodesic_rank_correlation": 0.64,
            }
        }


# =====================================================
# VERIFICACIÓN DE TRAZAS
# =====================================================

class Mismatch(BaseModel):
    tick: Optional[int] = None
    field: str
    logged: Optional[str] = None
    recomputed: Optional[str] = None
    detail: str = ""


class VerificationReport(BaseModel):
    """Resultado de repetir una traza con el oráculo de holgura independiente"""
    trace: str
    scenario_id: str
    tool_version: str = ""
    config_hash: str = ""
    ticks_checked: int = 0
    final_status: Optional[str] = None
    waypoint_arrivals: int = 0
    mismatches: List[Mismatch] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches

    @property
    def mismatched_ticks(self) -> List[int]:
        return sorted({m.tick for m in self.mismatches if m.tick is not None})
