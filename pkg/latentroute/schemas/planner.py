from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field, model_validator

from latentroute.schemas.collision import CostParams, GjkParams


PlanStatus = Literal["following", "replanning", "reached", "failed"]
EventKind = Literal["plan", "halt", "reroute", "waypoint", "reached", "failed", "violation", "replanning"]
TRACE_SCHEMA_VERSION = 1


class SafetyConfig(BaseModel):
    """Parámetros del ejecutivo de replanificación"""
    clearance_threshold: float = Field(default=0.08, gt=0, description="Holgura mínima admitida (m)")
    check_period: int = Field(default=1, ge=1, description="Ticks entre verificaciones de holgura")
    relabel_radius: Optional[float] = Field(default=None, gt=0, description="Radio latente del enmascarado local")
    joint_speed: float = Field(default=0.05, gt=0, description="Paso articular máximo por tick (rad)")
    goal_tolerance: float = Field(default=0.03, gt=0, description="Distancia del efector a la meta (m)")
    avoid_ttl: int = Field(default=50, ge=0, description="Ticks que un nodo bloqueado queda evitado")
    max_lazy_rounds: int = Field(default=64, ge=1)
    collision_margin: float = Field(default=0.0, ge=0)
    trap_patience: int = Field(default=100, ge=0, description="Ticks seguidos sin avance antes de declarar trapped")
    adaptive: bool = True
    gjk: GjkParams = Field(default_factory=GjkParams)
    cost: CostParams = Field(default_factory=CostParams)

    @model_validator(mode="after")
    def threshold_above_margin(self) -> "SafetyConfig":
        if self.clearance_threshold <= self.collision_margin:
            raise ValueError("clearance_threshold debe ser mayor que el margen de colisión del dataset")
        return self

    class Config:
        frozen = True


class PlanEvent(BaseModel):
    tick: int
    kind: EventKind
    detail: str = ""
    node: Optional[int] = None
    clearance: Optional[float] = None


class PlanState(BaseModel):
    """
    Estado del ejecutivo. `progress` apunta al siguiente objetivo: un índice
    de `active_path`, o len(active_path) cuando falta llegar a `goal_joints`.
    """
    current_joints: List[float] = Field(..., min_length=7, max_length=7)
    goal_joints: List[float] = Field(..., min_length=7, max_length=7)
    active_path: List[int] = Field(default_factory=list)
    progress: int = 0
    start_node: int
    goal_node: int
    status: PlanStatus = "following"
    reason: Optional[str] = None
    tick: int = 0
    avoided: Dict[int, int] = Field(default_factory=dict)  # nodo -> tick de expiración
    events: List[PlanEvent] = Field(default_factory=list)
    reroutes: int = 0
    halts: int = 0
    stalled_since: Optional[int] = None

    @model_validator(mode="after")
    def progress_in_bounds(self) -> "PlanState":
        if not 0 <= self.progress <= len(self.active_path):
            raise ValueError(f"progress {self.progress} fuera de [0, {len(self.active_path)}]")
        return self

    @property
    def terminal(self) -> bool:
        return self.status in ("reached", "failed")


# =====================================================
# TRAZA
# =====================================================

class ObstacleMemberRecord(BaseModel):
    id: str
    kind: str
    dims: List[float]
    position: List[float]
    orientation: List[float]


class TraceHeader(BaseModel):
    record: Literal["header"] = "header"
    schema_version: int = TRACE_SCHEMA_VERSION
    tool_version: str
    config_hash: str
    robot_digest: str
    scenario_id: str
    scenario_digest: str
    roadmap_digest: str = ""
    model_digest: str = ""
    safety: SafetyConfig
    max_ticks: int
    start_node: int
    goal_node: int
    initial_path: List[int]


class TraceRecord(BaseModel):
    tick: int
    joints: List[float]
    ee_pos: List[float]
    ee_quat: List[float]
    obstacle_id: Optional[str] = None
    obstacle_pose: List[ObstacleMemberRecord] = Field(default_factory=list)
    min_clearance: Optional[float] = None
    argmin_link: Optional[int] = None
    status: PlanStatus
    event: List[str] = Field(default_factory=list)
    waypoint: Optional[int] = None
    active_path: List[int]
    progress: int
    reason: Optional[str] = None


class RunSummary(BaseModel):
    scenario_id: str
    status: PlanStatus
    reason: Optional[str] = None
    ticks: int
    reroutes: int
    halts: int
    violations: int
    waypoints: int
    min_clearance: Optional[float] = None
    peak_cost: Optional[float] = None
    contact_ticks: int = 0
    goal_error: float
    initial_path: List[int]
    final_path: List[int]
    adaptive: bool
    config_hash: str
    tool_version: str
    trace_digest: str = ""
