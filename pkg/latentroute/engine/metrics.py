"""
Métricas de calidad del espacio latente: confiabilidad (trustworthiness),
continuidad, silueta por clase de colisión y correlación de rangos entre
distancias geodésicas y latentes. Incluye la línea base Isomap.
"""

import logging
from typing import List, Optional, Sequence

import numpy as np
from scipy.sparse.csgraph import shortest_path
from scipy.spatial.distance import pdist
from scipy.stats import spearmanr
from sklearn.manifold import Isomap
from sklearn.manifold import trustworthiness as sk_trustworthiness
from sklearn.metrics import silhouette_score
from sklearn.neighbors import kneighbors_graph

from latentroute.engine.autoencoder import VaeModel
from latentroute.engine.dataset import Dataset, normalize
from latentroute.errors import DomainError
from latentroute.schemas.dataset import FLAG_INDEX
from latentroute.schemas.reports import EmbeddingReport


logger = logging.getLogger(__name__)

GEODESIC_MAX_POINTS = 1000


def _rank_score(reference: np.ndarray, embedded: np.ndarray, k: int) -> float:
    reference = np.asarray(reference, dtype=float)
    embedded = np.asarray(embedded, dtype=float)
    n = len(reference)
    if len(embedded) != n:
        raise DomainError(f"conteos distintos: {n} puntos originales vs {len(embedded)} embebidos")
    if k < 1:
        raise DomainError("k debe ser >= 1")
    if k >= n - 1:
        # Todos los puntos son vecinos entre sí
        return 1.0
    if k >= n / 2:
        # sklearn exige k < n / 2
        clamped = (n - 1) // 2
        logger.debug("k=%d recortado a %d para n=%d", k, clamped, n)
        k = clamped
    return float(sk_trustworthiness(reference, embedded, n_neighbors=k))


def trustworthiness(high: np.ndarray, low: np.ndarray, k: int) -> float:
    """
    Confiabilidad en [0, 1] (sklearn): penaliza vecinos del embedding que no
    eran vecinos en el espacio original. Con k >= n - 1 vale 1 por
    convención; con k >= n / 2 se usa el mayor k admitido.

    Raises:
        DomainError: conteos distintos o k < 1
    """
    return _rank_score(high, low, k)


def continuity(high: np.ndarray, low: np.ndarray, k: int) -> float:
    """Continuidad en [0, 1]: vecinos originales que el embedding separa"""
    return _rank_score(low, high, k)


def class_silhouette(low: np.ndarray, labels: np.ndarray) -> float:
    """Silueta de las clases de colisión; 0 si hay una sola clase"""
    labels = np.asarray(labels)
    if len(np.unique(labels)) < 2 or len(labels) < 3:
        return 0.0
    return float(silhouette_score(np.asarray(low, dtype=float), labels, metric="euclidean"))


def geodesic_rank_correlation(high: np.ndarray, low: np.ndarray, k: int, seed: int = 0) -> float:
    """
    Spearman entre distancias geodésicas (grafo k-NN en el espacio original)
    y distancias euclidianas latentes, sobre pares conectados.
    """
    high = np.asarray(high, dtype=float)
    low = np.asarray(low, dtype=float)
    if len(high) > GEODESIC_MAX_POINTS:
        keep = np.sort(np.random.default_rng(seed).choice(len(high), GEODESIC_MAX_POINTS, replace=False))
        high, low = high[keep], low[keep]
    n = len(high)
    if n < 3:
        return 0.0
    graph = kneighbors_graph(high, n_neighbors=min(k, n - 1), mode="distance")
    graph = graph.maximum(graph.T)
    geodesic = shortest_path(graph, method="D", directed=False)
    upper = np.triu_indices(n, k=1)
    geo = geodesic[upper]
    lat = pdist(low)
    finite = np.isfinite(geo)
    if finite.sum() < 3:
        return 0.0
    rho = spearmanr(geo[finite], lat[finite]).correlation
    return 0.0 if not np.isfinite(rho) else float(np.clip(rho, -1.0, 1.0))


def high_dimensional(d: Dataset, samples: Optional[np.ndarray] = None) -> np.ndarray:
    """Los 17 campos no categóricos, normalizados"""
    samples = d.samples if samples is None else samples
    return np.delete(normalize(d, samples), FLAG_INDEX, axis=1)


def embedding_report(
    high: np.ndarray,
    low: np.ndarray,
    labels: np.ndarray,
    k: int,
    subsample_size: Optional[int] = None,
    method: str = "vae",
    seed: int = 0,
) -> EmbeddingReport:
    return EmbeddingReport(
        method=method,
        subsample_size=subsample_size or len(high),
        evaluated_points=len(high),
        k=k,
        trustworthiness=trustworthiness(high, low, k),
        continuity=continuity(high, low, k),
        silhouette=class_silhouette(low, labels),
        geodesic_rank_correlation=geodesic_rank_correlation(high, low, k, seed),
    )


def _bin_indices(n: int, size: int, max_points: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng([seed, size])
    indices = np.arange(n) if size == n else np.sort(rng.choice(n, size, replace=False))
    if len(indices) > max_points:
        indices = np.sort(rng.choice(indices, max_points, replace=False))
    return indices


def stability_across_bins(
    d: Dataset,
    m: VaeModel,
    bin_sizes: Sequence[int],
    k: int = 12,
    seed: int = 0,
    max_points: int = 2000,
) -> List[EmbeddingReport]:
    """
    Un reporte por tamaño de submuestra. Cada bin evalúa a lo sumo
    `max_points` puntos (submuestra sembrada) para acotar el costo O(n²).

    Raises:
        DomainError: algún bin es mayor que el dataset
    """
    n = len(d)
    if any(size > n or size < 2 for size in bin_sizes):
        raise DomainError(f"los bins deben estar en [2, {n}]: {list(bin_sizes)}")
    high_all = high_dimensional(d)
    low_all, _ = m.encode_batch(m.normalize(d.samples))
    reports = []
    for size in bin_sizes:
        idx = _bin_indices(n, size, max_points, seed)
        report = embedding_report(high_all[idx], low_all[idx], d.flags[idx], k, subsample_size=size, seed=seed)
        logger.info(
            "bin %d: trustworthiness=%.4f continuity=%.4f silhouette=%.4f",
            size, report.trustworthiness, report.continuity, report.silhouette,
        )
        reports.append(report)
    return reports


def isomap_report(d: Dataset, size: int, k: int = 12, seed: int = 0, max_points: int = 2000) -> EmbeddingReport:
    """Línea base: embedding isométrico (Isomap) evaluado con las mismas métricas"""
    size = min(size, len(d))
    idx = _bin_indices(len(d), size, max_points, seed)
    high = high_dimensional(d)[idx]
    low = Isomap(n_neighbors=min(k, len(idx) - 1), n_components=2).fit_transform(high)
    return embedding_report(high, low, d.flags[idx], k, subsample_size=size, method="isomap", seed=seed)
