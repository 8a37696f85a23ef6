"""
Roadmap sobre el espacio latente: grafo k-NN de nodos seguros, densificación
por grilla con etiquetado del decoder, reparación de conectividad y Dijkstra.
"""

import dataclasses
import hashlib
import heapq
import json
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from latentroute import __version__
from latentroute.engine.autoencoder import VaeModel
from latentroute.engine.collision import DEFAULT_GJK, Obstacle, clearance_from_frames
from latentroute.engine.dataset import Dataset
from latentroute.engine.kinematics import batch_chain_transforms, clamp_to_limits
from latentroute.errors import CorruptArtifactError, DomainError, InputError, UnknownNodeError
from latentroute.schemas.collision import ConvexShape, GjkParams
from latentroute.schemas.dataset import FLAG_INDEX
from latentroute.schemas.roadmap import (
    BridgeAction,
    BuildReport,
    ConnectivityReport,
    DensifyReport,
    LatentPoint,
    RoadmapParams,
)
from latentroute.schemas.robot import Pose, RobotModel


logger = logging.getLogger(__name__)

ROADMAP_FORMAT = "latentroute-roadmap"
ROADMAP_FORMAT_VERSION = 1
MIN_WEIGHT = 1e-12

Adjacency = Dict[int, Dict[int, float]]


@dataclasses.dataclass(frozen=True)
class Roadmap:
    """Grafo no dirigido de nodos seguros; no se modifica después de construido"""

    coords: np.ndarray          # (n, 2)
    joints: np.ndarray          # (n, 7) articulaciones decodificadas
    origins: Tuple[str, ...]
    flag_scores: np.ndarray     # (n,)
    adjacency: Adjacency
    params: RoadmapParams

    def __post_init__(self):
        for name in ("coords", "joints", "flag_scores"):
            array = np.array(getattr(self, name), dtype=float)
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    def __len__(self) -> int:
        return len(self.coords)

    def neighbors(self, node: int) -> Mapping[int, float]:
        return self.adjacency[node]

    def edges(self) -> List[Tuple[int, int, float]]:
        return [(u, v, w) for u in sorted(self.adjacency) for v, w in sorted(self.adjacency[u].items()) if u < v]

    def edge_count(self) -> int:
        return sum(len(n) for n in self.adjacency.values()) // 2

    def median_edge(self) -> float:
        weights = [w for _, _, w in self.edges()]
        return float(np.median(weights)) if weights else 0.0

    def point(self, node: int) -> LatentPoint:
        self.check_node(node)
        return LatentPoint(
            coords=self.coords[node].tolist(),
            label="safe",
            origin=self.origins[node],
            decoded_joints=self.joints[node].tolist(),
            flag_score=float(self.flag_scores[node]),
        )

    def check_node(self, node: int) -> None:
        if not (isinstance(node, (int, np.integer)) and 0 <= node < len(self)):
            raise UnknownNodeError(int(node) if isinstance(node, (int, np.integer)) else -1, len(self))


def _validate_adjacency(adjacency: Adjacency, n: int) -> None:
    for u, nbrs in adjacency.items():
        for v, w in nbrs.items():
            if u == v or not (0 <= v < n):
                raise DomainError(f"arista inválida ({u}, {v})")
            if not w > 0 or adjacency.get(v, {}).get(u) != w:
                raise DomainError(f"arista ({u}, {v}) no simétrica o con peso no positivo")


# =====================================================
# CONSTRUCCIÓN
# =====================================================

def build_knn(points: Sequence[LatentPoint], k: int, params: Optional[RoadmapParams] = None) -> Roadmap:
    """
    Conecta cada nodo con sus k vecinos latentes más cercanos y simetriza por unión.
    Empates de distancia se resuelven por índice de nodo.

    Raises:
        DomainError: k < 1, menos de k + 1 puntos o algún punto en colisión
    """
    if k < 1:
        raise DomainError("k debe ser >= 1")
    if len(points) < k + 1:
        raise DomainError(f"build_knn necesita al menos {k + 1} puntos, hay {len(points)}")
    if any(p.label != "safe" for p in points):
        raise DomainError("el roadmap solo admite puntos seguros")

    coords = np.array([p.coords for p in points], dtype=float)
    n = len(coords)
    tree = cKDTree(coords)
    size = min(n, k + 1 + 8)
    _, candidates = tree.query(coords, k=size)
    candidates = np.atleast_2d(candidates)

    adjacency: Adjacency = {i: {} for i in range(n)}
    for i in range(n):
        cand, query_size = candidates[i], size
        while True:
            cand = cand[(cand != i) & (cand < n)]
            dist = np.linalg.norm(coords[cand] - coords[i], axis=1)
            order = np.lexsort((cand, dist))
            cand, dist = cand[order], dist[order]
            # Los empates con la k-ésima distancia deben estar todos en la consulta
            if query_size >= n or dist[k - 1] < dist[-1]:
                break
            query_size = min(n, 2 * query_size)
            _, cand = tree.query(coords[i], k=query_size)
        for j in cand[:k]:
            j = int(j)
            w = max(float(np.linalg.norm(coords[j] - coords[i])), MIN_WEIGHT)
            adjacency[i][j] = w
            adjacency[j][i] = w

    params = (params or RoadmapParams()).model_copy(update={"k": k})
    roadmap = Roadmap(
        coords=coords,
        joints=np.array([p.decoded_joints for p in points], dtype=float),
        origins=tuple(p.origin for p in points),
        flag_scores=np.array([p.flag_score for p in points], dtype=float),
        adjacency=adjacency,
        params=params,
    )
    return dataclasses.replace(roadmap, params=params.model_copy(update={"median_edge": roadmap.median_edge()}))


def latent_bounds(coords: np.ndarray, margin: float = 0.05) -> Tuple[float, float, float, float]:
    """Caja envolvente de la nube latente ampliada en `margin` de su extensión"""
    coords = np.asarray(coords, dtype=float)
    lo, hi = coords.min(axis=0), coords.max(axis=0)
    pad = margin * np.maximum(hi - lo, 1e-6)
    return float(lo[0] - pad[0]), float(hi[0] + pad[0]), float(lo[1] - pad[1]), float(hi[1] + pad[1])


def decode_points(m: VaeModel, robot: RobotModel, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Decodifica puntos latentes al espacio original.
    Retorna (articulaciones recortadas a límites, obstáculo decodificado,
    puntaje de bandera, máscara de recorte).
    """
    raw = m.denormalize(m.decode_batch(z))
    joints = raw[:, :7]
    clamped = clamp_to_limits(robot, joints)
    was_clamped = np.any(clamped != joints, axis=1)
    return clamped, raw[:, 14:17], raw[:, FLAG_INDEX], was_clamped


def _ground_truth(
    robot: RobotModel,
    joints: np.ndarray,
    obstacles: Sequence[Obstacle],
    margin: float,
    gjk: GjkParams = DEFAULT_GJK,
) -> np.ndarray:
    frames = batch_chain_transforms(robot, joints)
    return np.array([
        clearance_from_frames(robot, frames[i], obstacles[i], gjk).min_distance <= margin for i in range(len(joints))
    ])


def densify_grid(
    m: VaeModel,
    robot: RobotModel,
    bounds: Sequence[float],
    resolution: int,
    collision_env: Optional[Obstacle] = None,
    flag_threshold: float = 0.5,
    obstacle_radius: float = 0.02,
    margin: float = 0.0,
    gjk: GjkParams = DEFAULT_GJK,
) -> Tuple[List[LatentPoint], DensifyReport]:
    """
    Evalúa resolution² puntos de grilla: el decoder los etiqueta (puntaje de
    bandera < umbral = seguro). Las articulaciones fuera de límites se recortan
    y esos puntos se vuelven a verificar con GJK; con `collision_env` se
    verifican todos contra ese entorno, si no contra el obstáculo decodificado.
    """
    if resolution < 1:
        raise DomainError("la resolución debe ser >= 1")
    z0_min, z0_max, z1_min, z1_max = bounds
    axis0 = np.linspace(z0_min, z0_max, resolution)
    axis1 = np.linspace(z1_min, z1_max, resolution)
    grid = np.array([[a, b] for b in axis1 for a in axis0], dtype=float)

    joints, obstacle_pos, scores, was_clamped = decode_points(m, robot, grid)
    if collision_env is not None:
        envs: List[Obstacle] = [collision_env] * len(grid)
    else:
        envs = [
            ConvexShape(kind="sphere", dims=[obstacle_radius], pose=Pose(position=p.tolist())) for p in obstacle_pos
        ]
    truth = _ground_truth(robot, joints, envs, margin, gjk)
    stamped = scores >= flag_threshold

    recheck = was_clamped if collision_env is None else np.ones(len(grid), dtype=bool)
    colliding = stamped | (recheck & truth)
    points = [
        LatentPoint(
            coords=grid[i].tolist(), label="safe", origin="grid",
            decoded_joints=joints[i].tolist(), flag_score=float(scores[i]),
        )
        for i in np.flatnonzero(~colliding)
    ]
    report = DensifyReport(
        candidates=len(grid),
        safe=len(points),
        colliding=int(colliding.sum()),
        clamped=int(was_clamped.sum()),
        rechecked_colliding=int((recheck & truth & ~stamped).sum()),
        label_agreement=float(np.mean(stamped == truth)),
    )
    if report.clamped:
        logger.warning("%d puntos de grilla con articulaciones fuera de límites (recortadas)", report.clamped)
    logger.info("grilla %dx%d: %d seguros, %d en colisión", resolution, resolution, report.safe, report.colliding)
    return points, report


def label_agreement(
    m: VaeModel,
    robot: RobotModel,
    z: np.ndarray,
    flag_threshold: float = 0.5,
    obstacle_radius: float = 0.02,
    margin: float = 0.0,
    gjk: GjkParams = DEFAULT_GJK,
) -> float:
    """Fracción de puntos donde la bandera del decoder coincide con GJK contra el obstáculo decodificado"""
    joints, obstacle_pos, scores, _ = decode_points(m, robot, np.asarray(z, dtype=float))
    envs = [ConvexShape(kind="sphere", dims=[obstacle_radius], pose=Pose(position=p.tolist())) for p in obstacle_pos]
    truth = _ground_truth(robot, joints, envs, margin, gjk)
    return float(np.mean((scores >= flag_threshold) == truth))


# =====================================================
# CONECTIVIDAD
# =====================================================

def _components(r: Roadmap) -> np.ndarray:
    n = len(r)
    rows, cols = [], []
    for u, nbrs in r.adjacency.items():
        for v in nbrs:
            rows.append(u)
            cols.append(v)
    matrix = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    _, labels = connected_components(matrix, directed=False)
    return labels


def ensure_connected(r: Roadmap, cap: Optional[float] = None) -> Tuple[Roadmap, ConnectivityReport]:
    """
    Une cada componente menor con la componente principal mediante la arista
    más corta si no supera `cap` (por defecto 3 x arista mediana); las
    componentes más lejanas se descartan y los nodos se reindexan.
    """
    n = len(r)
    if cap is None:
        cap = 3.0 * r.median_edge()
    if n == 0:
        return r, ConnectivityReport(components_before=0, components_after=0, cap=cap)

    labels = _components(r)
    n_components = int(labels.max()) + 1
    if n_components == 1:
        return r, ConnectivityReport(components_before=1, components_after=1, cap=cap)

    sizes = np.bincount(labels)
    # Componente principal: la mayor; en empate, la que contiene el índice menor
    main_label = int(labels[np.flatnonzero(sizes[labels] == sizes.max())[0]])
    in_main = labels == main_label
    pending = {int(c) for c in np.unique(labels) if c != main_label}
    adjacency = {u: dict(nbrs) for u, nbrs in r.adjacency.items()}
    bridges: List[BridgeAction] = []

    while pending:
        tree = cKDTree(r.coords[in_main])
        main_nodes = np.flatnonzero(in_main)
        best = None
        for c in sorted(pending):
            members = np.flatnonzero(labels == c)
            dist, idx = tree.query(r.coords[members])
            j = int(np.argmin(dist))
            candidate = (float(dist[j]), int(members[j]), int(main_nodes[idx[j]]), c)
            if best is None or candidate[:2] < best[:2]:
                best = candidate
        distance, u, v, c = best
        if distance > cap:
            break
        w = max(distance, MIN_WEIGHT)
        adjacency[u][v] = w
        adjacency[v][u] = w
        bridges.append(BridgeAction(from_node=u, to_node=v, distance=distance))
        in_main |= labels == c
        pending.discard(c)

    dropped = np.flatnonzero(~in_main)
    report = ConnectivityReport(
        components_before=n_components,
        components_after=1,
        bridges=bridges,
        dropped_nodes=dropped.tolist(),
        dropped_components=len(pending),
        cap=cap,
    )
    if len(pending):
        logger.warning("se descartaron %d componentes (%d nodos) más allá del tope %.4f", len(pending), dropped.size, cap)
    return _subgraph(r, np.flatnonzero(in_main), adjacency), report


def _subgraph(r: Roadmap, keep: np.ndarray, adjacency: Adjacency) -> Roadmap:
    remap = {int(old): new for new, old in enumerate(keep)}
    new_adjacency = {
        remap[u]: {remap[v]: w for v, w in adjacency[u].items() if v in remap}
        for u in map(int, keep)
    }
    return Roadmap(
        coords=r.coords[keep],
        joints=r.joints[keep],
        origins=tuple(r.origins[i] for i in keep),
        flag_scores=r.flag_scores[keep],
        adjacency=new_adjacency,
        params=r.params,
    )


# =====================================================
# CONSULTAS
# =====================================================

def shortest_path(
    r: Roadmap,
    start: int,
    goal: int,
    blocked: Optional[Iterable[int]] = None,
) -> List[int]:
    """
    Dijkstra sobre la lista de adyacencia. Entre caminos de igual peso gana el
    predecesor de menor índice. Lista vacía = inalcanzable.

    Raises:
        UnknownNodeError: start o goal fuera del roadmap
    """
    r.check_node(start)
    r.check_node(goal)
    blocked_set: Set[int] = set(blocked or ())
    if start in blocked_set or goal in blocked_set:
        return []
    if start == goal:
        return [int(start)]

    dist: Dict[int, float] = {start: 0.0}
    previous: Dict[int, int] = {}
    done: Set[int] = set()
    heap = [(0.0, start)]
    while heap:
        d_u, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == goal:
            break
        for v, w in r.adjacency[u].items():
            if v in blocked_set or v in done:
                continue
            candidate = d_u + w
            current = dist.get(v, math.inf)
            if candidate < current or (candidate == current and u < previous.get(v, math.inf)):
                dist[v] = candidate
                previous[v] = u
                heapq.heappush(heap, (candidate, v))

    if goal not in done:
        return []
    path = [goal]
    while path[-1] != start:
        path.append(previous[path[-1]])
    return [int(node) for node in reversed(path)]


def path_weight(r: Roadmap, path: Sequence[int]) -> float:
    total = 0.0
    for u, v in zip(path[:-1], path[1:]):
        total += r.adjacency[u][v]
    return total


def nearest_node(r: Roadmap, z: Sequence[float], exclude: Optional[Iterable[int]] = None) -> int:
    """
    Nodo de menor distancia latente a z; en empate, el de menor índice.

    Raises:
        DomainError: roadmap vacío o todos los nodos excluidos
    """
    if len(r) == 0:
        raise DomainError("el roadmap está vacío")
    d2 = ((r.coords - np.asarray(z, dtype=float)) ** 2).sum(axis=1)
    if exclude:
        d2 = d2.copy()
        d2[list(exclude)] = np.inf
        if not np.isfinite(d2).any():
            raise DomainError("todos los nodos están excluidos")
    return int(np.argmin(d2))


# =====================================================
# PIPELINE
# =====================================================

def build_roadmap(
    m: VaeModel,
    robot: RobotModel,
    d: Dataset,
    k: int = 8,
    grid_resolution: int = 100,
    grid_margin: float = 0.05,
    flag_threshold: float = 0.5,
    bridge_cap_factor: float = 3.0,
    max_encoded_nodes: int = 4000,
    obstacle_radius: float = 0.02,
    margin: float = 0.0,
    seed: int = 0,
    params: Optional[RoadmapParams] = None,
    gjk: GjkParams = DEFAULT_GJK,
) -> Tuple[Roadmap, BuildReport, np.ndarray]:
    """
    Codifica el corpus, toma las muestras seguras como nodos, densifica con la
    grilla y repara la conectividad. Retorna también la nube latente completa
    (z0, z1, bandera) para exportarla.
    """
    latent, _ = m.encode_batch(m.normalize(d.samples))
    cloud = np.column_stack([latent, d.flags])
    bounds = latent_bounds(latent, grid_margin)

    safe_idx = np.flatnonzero(d.flags == 0.0)
    if len(safe_idx) > max_encoded_nodes:
        safe_idx = np.sort(np.random.default_rng(seed).choice(safe_idx, max_encoded_nodes, replace=False))
    joints, _, scores, was_clamped = decode_points(m, robot, latent[safe_idx])
    if was_clamped.any():
        logger.warning("%d nodos codificados con articulaciones recortadas", int(was_clamped.sum()))
    points = [
        LatentPoint(coords=latent[i].tolist(), origin="dataset", decoded_joints=joints[j].tolist(), flag_score=float(scores[j]))
        for j, i in enumerate(safe_idx)
    ]

    grid_report = None
    if grid_resolution > 0:
        grid_points, grid_report = densify_grid(
            m, robot, bounds, grid_resolution,
            flag_threshold=flag_threshold, obstacle_radius=obstacle_radius, margin=margin, gjk=gjk,
        )
        points += grid_points

    params = (params or RoadmapParams()).model_copy(update={
        "grid_resolution": grid_resolution,
        "grid_margin": grid_margin,
        "bounds": list(bounds),
        "flag_threshold": flag_threshold,
    })
    roadmap = build_knn(points, k, params)
    cap = bridge_cap_factor * roadmap.median_edge()
    roadmap, connectivity = ensure_connected(roadmap, cap)
    roadmap = dataclasses.replace(roadmap, params=roadmap.params.model_copy(update={"bridge_cap": cap}))
    report = BuildReport(
        encoded_nodes=len(safe_idx),
        grid=grid_report,
        connectivity=connectivity,
        nodes=len(roadmap),
        edges=roadmap.edge_count(),
        latent_bounds=bounds,
    )
    logger.info("roadmap: %d nodos, %d aristas", report.nodes, report.edges)
    return roadmap, report, cloud


# =====================================================
# PERSISTENCIA
# =====================================================

def roadmap_payload(r: Roadmap) -> dict:
    return {
        "format": ROADMAP_FORMAT,
        "format_version": ROADMAP_FORMAT_VERSION,
        "tool_version": __version__,
        "params": r.params.model_dump(),
        "nodes": [
            {
                "coords": r.coords[i].tolist(),
                "label": "safe",
                "origin": r.origins[i],
                "flag_score": float(r.flag_scores[i]),
                "decoded_joints": r.joints[i].tolist(),
            }
            for i in range(len(r))
        ],
        "edges": [[u, v, w] for u, v, w in r.edges()],
    }


def roadmap_json(r: Roadmap) -> str:
    return json.dumps(roadmap_payload(r), sort_keys=True, separators=(",", ":")) + "\n"


def roadmap_digest(r: Roadmap) -> str:
    return hashlib.sha256(roadmap_json(r).encode("utf-8")).hexdigest()


def save_roadmap(r: Roadmap, path: Path) -> None:
    Path(path).write_text(roadmap_json(r), encoding="utf-8")


def load_roadmap(path: Path) -> Roadmap:
    """
    Raises:
        InputError: archivo inexistente
        CorruptArtifactError: JSON inválido, otra versión o grafo inconsistente
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no existe el roadmap {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CorruptArtifactError(f"{path}: no es un roadmap legible ({e})")
    if not isinstance(payload, dict) or payload.get("format") != ROADMAP_FORMAT:
        raise CorruptArtifactError(f"{path}: no es un roadmap de latentroute")
    if payload.get("format_version") != ROADMAP_FORMAT_VERSION:
        raise CorruptArtifactError(f"{path}: versión de formato {payload.get('format_version')} no soportada")

    try:
        nodes = [LatentPoint(**node) for node in payload["nodes"]]
        n = len(nodes)
        adjacency: Adjacency = {i: {} for i in range(n)}
        for u, v, w in payload["edges"]:
            adjacency[int(u)][int(v)] = float(w)
            adjacency[int(v)][int(u)] = float(w)
        _validate_adjacency(adjacency, n)
        if any(node.label != "safe" for node in nodes):
            raise DomainError("el roadmap contiene nodos en colisión")
        return Roadmap(
            coords=np.array([p.coords for p in nodes], dtype=float).reshape(-1, 2),
            joints=np.array([p.decoded_joints for p in nodes], dtype=float).reshape(-1, 7),
            origins=tuple(p.origin for p in nodes),
            flag_scores=np.array([p.flag_score for p in nodes], dtype=float),
            adjacency=adjacency,
            params=RoadmapParams(**payload.get("params", {})),
        )
    except CorruptArtifactError:
        raise
    except Exception as e:
        raise CorruptArtifactError(f"{path}: contenido del roadmap inválido ({e})")
