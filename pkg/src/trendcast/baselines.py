"""Nearest-neighbor forecasting baselines and the 60% ordering policy.

The neighbor index maps per-product feature vectors to their 12-week
sales. Three feature modes: ``attribute`` (concatenated one-hot over the
category/color/fabric vocabularies of the indexed products), ``image``
(raw image feature vectors), and ``attribute+image`` (concatenation).

Neighbor weighting defaults to similarity: w_k proportional to
max(1 - cosine_distance, 0). The literal farther-gets-more-weight
formula (w_k proportional to the distance itself) is available behind
``literal_distance_weights=True`` for comparison runs.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset, FeatureProvider, Product, SALES_WEEKS
from .errors import CompatibilityError, ContractError, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_K = 11
MODES = ("attribute", "image", "attribute+image")
INDEX_FORMAT = "trendcast-knn-index"
INDEX_VERSION = 1


@dataclass(frozen=True)
class NeighborIndex:
    """Immutable search structure: one feature row and sales row per product."""

    mode: str
    ids: tuple[str, ...]
    features: np.ndarray               # (n, f)
    sales: np.ndarray                  # (n, 12)
    categories: tuple[str, ...]        # one-hot slot order
    colors: tuple[str, ...]
    fabrics: tuple[str, ...]
    image_provider: FeatureProvider | None = None

    def __len__(self) -> int:
        return len(self.ids)

    def _one_hot(self, product: Product) -> np.ndarray:
        vec = np.zeros(len(self.categories) + len(self.colors) + len(self.fabrics))
        offset = 0
        for value, pool in ((product.category, self.categories),
                            (product.color, self.colors),
                            (product.fabric, self.fabrics)):
            if value in pool:
                vec[offset + pool.index(value)] = 1.0
            offset += len(pool)
        return vec

    def _image_vector(self, product: Product) -> np.ndarray:
        if product.image_features is not None:
            return np.asarray(product.image_features, dtype=np.float64)
        if self.image_provider is None:
            raise ContractError(
                f"index mode {self.mode!r} needs image features, but product "
                f"{product.id} has none and no provider is attached")
        return self.image_provider.vector(product.id)

    def encode(self, product: Product) -> np.ndarray:
        """Feature vector for a query product, in this index's space."""
        parts = []
        if self.mode in ("attribute", "attribute+image"):
            parts.append(self._one_hot(product))
        if self.mode in ("image", "attribute+image"):
            parts.append(self._image_vector(product))
        vec = np.concatenate(parts)
        if vec.shape[0] != self.features.shape[1]:
            raise CompatibilityError(
                f"query vector has {vec.shape[0]} features, index stores "
                f"{self.features.shape[1]}")
        return vec


def build_neighbor_index(dataset: Dataset, mode: str = "attribute",
                         image_provider: FeatureProvider | None = None) -> NeighborIndex:
    """Index every product of ``dataset`` under the chosen feature mode."""
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")
    if len(dataset) == 0:
        raise ContractError("cannot build a neighbor index from an empty dataset")
    probe = NeighborIndex(
        mode=mode, ids=(), features=np.zeros((0, 0)), sales=np.zeros((0, SALES_WEEKS)),
        categories=tuple(sorted({p.category for p in dataset})),
        colors=tuple(sorted({p.color for p in dataset})),
        fabrics=tuple(sorted({p.fabric for p in dataset})),
        image_provider=image_provider)
    rows = []
    for p in dataset:
        parts = []
        if mode in ("attribute", "attribute+image"):
            parts.append(probe._one_hot(p))
        if mode in ("image", "attribute+image"):
            parts.append(probe._image_vector(p))
        rows.append(np.concatenate(parts))
    features = np.vstack(rows)
    norms = np.linalg.norm(features, axis=1)
    if np.any(norms == 0.0):
        bad = dataset.products[int(np.argmin(norms))].id
        raise ValidationError(f"product {bad} has a zero-norm feature vector")
    return NeighborIndex(
        mode=mode, ids=tuple(p.id for p in dataset), features=features,
        sales=dataset.sales_matrix(), categories=probe.categories,
        colors=probe.colors, fabrics=probe.fabrics, image_provider=image_provider)


def cosine_distance(q: np.ndarray, keys: np.ndarray) -> np.ndarray:
    qn = np.linalg.norm(q)
    if qn == 0.0:
        raise ValidationError("query has a zero-norm feature vector")
    kn = np.linalg.norm(keys, axis=1)
    return 1.0 - (keys @ q) / (kn * qn)


def knn_forecast(query: Product, index: NeighborIndex, k: int = DEFAULT_K,
                 literal_distance_weights: bool = False) -> np.ndarray:
    """Weighted average of the k nearest neighbors' 12-week sales.

    Neighbors are ranked by cosine distance with ties broken by ascending
    product id. Weights are normalized similarities by default; when all
    k similarities (or, in literal mode, all k distances) vanish, the
    average is uniform.
    """
    if k < 1:
        raise ContractError(f"k must be >= 1, got {k}")
    if k > len(index):
        raise ContractError(f"k={k} exceeds index size {len(index)}")
    q = index.encode(query)
    dist = cosine_distance(q, index.features)
    order = sorted(range(len(index)), key=lambda i: (dist[i], index.ids[i]))
    chosen = order[:k]
    d = dist[chosen]
    if literal_distance_weights:
        weights = d.copy()
    else:
        weights = np.maximum(1.0 - d, 0.0)
    total = weights.sum()
    if total <= 0.0:
        weights = np.full(k, 1.0 / k)
    else:
        weights = weights / total
    return weights @ index.sales[chosen]


# ---------------------------------------------------------------------------
# persistence


def save_index(index: NeighborIndex, path) -> None:
    payload = {
        "format": INDEX_FORMAT,
        "version": INDEX_VERSION,
        "mode": index.mode,
        "ids": list(index.ids),
        "features": index.features.tolist(),
        "sales": index.sales.tolist(),
        "categories": list(index.categories),
        "colors": list(index.colors),
        "fabrics": list(index.fabrics),
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, sort_keys=True, separators=(",", ":"))


def load_index(path, image_provider: FeatureProvider | None = None) -> NeighborIndex:
    with open(path, encoding="utf-8") as f:
        payload = json.load(f)
    if payload.get("format") != INDEX_FORMAT:
        raise CompatibilityError(f"{path}: not a {INDEX_FORMAT} file")
    if payload.get("version") != INDEX_VERSION:
        raise CompatibilityError(f"{path}: unsupported version {payload.get('version')}")
    features = np.asarray(payload["features"], dtype=np.float64)
    sales = np.asarray(payload["sales"], dtype=np.float64)
    if sales.ndim != 2 or sales.shape[1] != SALES_WEEKS:
        raise CompatibilityError(f"{path}: sales matrix must be (n, {SALES_WEEKS})")
    if features.shape[0] != sales.shape[0]:
        raise CompatibilityError(f"{path}: {features.shape[0]} feature rows for "
                                 f"{sales.shape[0]} sales rows")
    return NeighborIndex(
        mode=payload["mode"], ids=tuple(payload["ids"]), features=features,
        sales=sales, categories=tuple(payload["categories"]),
        colors=tuple(payload["colors"]), fabrics=tuple(payload["fabrics"]),
        image_provider=image_provider)


# ---------------------------------------------------------------------------
# 60% ordering policy


def sixty_percent_policy(query: Product, history: Dataset) -> float:
    """Order quantity: 1.6 x the historical mean of first-6-week sales.

    The mean is taken over previous-season products matching the query's
    (category, color, fabric); when nothing matches, the match relaxes to
    category only and then to the whole history, each relaxation logged.
    """
    if len(history) == 0:
        raise ContractError("sixty_percent_policy needs a non-empty history")

    def six_week_sums(products):
        return [sum(p.sales[:6]) for p in products]

    exact = [p for p in history
             if (p.category, p.color, p.fabric)
             == (query.category, query.color, query.fabric)]
    if exact:
        pool = exact
    else:
        by_category = [p for p in history if p.category == query.category]
        if by_category:
            logger.warning(
                "60%% policy: no (category, color, fabric) match for %s "
                "(%s, %s, %s); falling back to category-only matching",
                query.id, query.category, query.color, query.fabric)
            pool = by_category
        else:
            logger.warning(
                "60%% policy: no category match for %s (%s); falling back "
                "to the global history mean", query.id, query.category)
            pool = list(history)
    sums = six_week_sums(pool)
    return 1.6 * (sum(sums) / len(sums))
