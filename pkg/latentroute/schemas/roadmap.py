from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field


class LatentPoint(BaseModel):
    """Punto 2D del manifold con su etiqueta y las articulaciones decodificadas"""
    coords: List[float] = Field(..., min_length=2, max_length=2)
    label: Literal["safe", "colliding"] = "safe"
    origin: Literal["dataset", "grid"] = "dataset"
    decoded_joints: List[float] = Field(..., min_length=7, max_length=7)
    flag_score: float = 0.0


class RoadmapParams(BaseModel):
    """Parámetros de construcción y linaje del roadmap"""
    k: int = Field(default=8, ge=1)
    grid_resolution: int = Field(default=0, ge=0)
    grid_margin: float = 0.05
    bounds: Optional[List[float]] = None  # z0_min, z0_max, z1_min, z1_max
    flag_threshold: float = 0.5
    bridge_cap: Optional[float] = None
    median_edge: Optional[float] = None
    model_digest: str = ""
    dataset_digest: str = ""
    config_hash: str = ""


# =====================================================
# REPORTES
# =====================================================

class DensifyReport(BaseModel):
    candidates: int
    safe: int
    colliding: int
    clamped: int = 0
    rechecked_colliding: int = 0
    label_agreement: Optional[float] = None


class BridgeAction(BaseModel):
    from_node: int
    to_node: int
    distance: float


class ConnectivityReport(BaseModel):
    """Acciones de ensure_connected; índices de nodo previos al reindexado"""
    components_before: int
    components_after: int
    bridges: List[BridgeAction] = Field(default_factory=list)
    dropped_nodes: List[int] = Field(default_factory=list)
    dropped_components: int = 0
    cap: float


class BuildReport(BaseModel):
    encoded_nodes: int
    grid: Optional[DensifyReport] = None
    connectivity: ConnectivityReport
    nodes: int
    edges: int
    latent_bounds: Tuple[float, float, float, float]
