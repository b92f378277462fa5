"""Quorum arithmetic and the three-stage path reduction."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .fpm import fpgrowth
from .paths import PathSet


@dataclass(frozen=True)
class Quorum:
    value: int
    source_size: int


def quorum(n_trees: int) -> Quorum:
    """Smallest vote count that fixes a hard-majority forest's decision: floor(n/2 + 1)."""
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    return Quorum(n_trees // 2 + 1, n_trees)


@dataclass(frozen=True)
class ReductionConfig:
    association_enabled: bool = True
    association_min_support: float = 0.1
    clustering_enabled: bool = True
    clustering_k: int | str = 2
    seed: int = 0

    KEYS = {
        "reduction.association.enabled": "association_enabled",
        "reduction.association.min_support": "association_min_support",
        "reduction.clustering.enabled": "clustering_enabled",
        "reduction.clustering.k": "clustering_k",
        "reduction.seed": "seed",
    }

    @classmethod
    def from_mapping(cls, cfg: Mapping, base: "ReductionConfig | None" = None) -> "ReductionConfig":
        """Build from dotted keys (``reduction.clustering.k``) or the nested equivalent."""
        flat = _flatten(cfg)
        values = {}
        for key, val in flat.items():
            if not key.startswith("reduction."):
                continue
            if key not in cls.KEYS:
                raise KeyError(f"unknown config key {key!r}")
            values[cls.KEYS[key]] = val
        return replace(base or cls(), **values)


def _flatten(cfg: Mapping, prefix: str = "") -> dict:
    out = {}
    for k, v in cfg.items():
        key = f"{prefix}{k}"
        if isinstance(v, Mapping):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


@dataclass
class ReductionTrace:
    seed: int
    stages: list[tuple[str, int, int]] = field(default_factory=list)
    under_quorum: bool = False

    def record(self, name: str, before: int, after: int) -> None:
        self.stages.append((name, before, after))

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "under_quorum": self.under_quorum,
            "stages": [{"stage": s, "before": b, "after": a} for s, b, a in self.stages],
        }


def _check_floor(ps: PathSet, q: Quorum) -> None:
    if len(ps) < q.value:
        raise ValueError(f"{len(ps)} paths is below the quorum of {q.value}")


# ---------------------------------------------------------------- association


def reduce_by_association(ps: PathSet, q: Quorum, min_support: float = 0.1) -> PathSet:
    """Keep the paths that fit inside the most common feature patterns.

    Path feature sets are mined as transactions. Frequent itemsets are merged
    into a growing feature set in support order, and as soon as at least
    ``q.value`` paths use only those features, exactly those paths are kept.
    """
    _check_floor(ps, q)
    if len(ps) == q.value:
        return ps
    feats = [p.features for p in ps]
    itemsets = fpgrowth([sorted(f) for f in feats], min_support)
    chosen: set[int] = set()
    for fi in itemsets:
        chosen.update(fi.items)
        kept = [i for i, f in enumerate(feats) if f <= chosen]
        if len(kept) >= q.value:
            return ps.keep(kept)
    return ps


# ----------------------------------------------------------------- clustering


def jaccard_distances(ps: PathSet) -> np.ndarray:
    sets = [p.features for p in ps]
    n = len(sets)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            union = len(sets[i] | sets[j])
            d = 0.0 if union == 0 else 1.0 - len(sets[i] & sets[j]) / union
            D[i, j] = D[j, i] = d
    return D


def assign(D: np.ndarray, medoids) -> np.ndarray:
    """Cluster index of each point; ties go to the lowest-index medoid."""
    medoids = np.sort(np.asarray(medoids))
    return np.argmin(D[:, medoids], axis=1)


def _cost(D: np.ndarray, medoids) -> float:
    return float(D[:, list(medoids)].min(axis=1).sum())


def _exact_medoids(D: np.ndarray, k: int, tol: float = 1e-9) -> list[int]:
    """Globally optimal medoids; costs within ``tol`` of the optimum tie, and the
    lexicographically smallest tied set wins."""
    n = len(D)
    if k == 2:
        # cost of every pair at once: sum over points of min(D[p, i], D[p, j])
        C = np.full((n, n), np.inf)
        for i in range(n - 1):
            C[i, i + 1:] = np.minimum(D[:, i][:, None], D[:, i + 1:]).sum(axis=0)
        i, j = np.argwhere(C <= C.min() + tol)[0]
        return [int(i), int(j)]
    combos = list(itertools.combinations(range(n), k))
    costs = np.array([_cost(D, c) for c in combos])
    return list(combos[int(np.argmax(costs <= costs.min() + tol))])


def _pam(D: np.ndarray, k: int) -> list[int]:
    n = len(D)
    medoids = [int(np.argmin(D.sum(axis=1)))]
    while len(medoids) < k:
        best, best_cost = -1, np.inf
        for h in range(n):
            if h in medoids:
                continue
            c = _cost(D, medoids + [h])
            if c < best_cost - 1e-12:
                best, best_cost = h, c
        medoids.append(best)
    cost = _cost(D, medoids)
    while True:
        swap, swap_cost = None, cost
        for mi in range(k):
            for h in range(n):
                if h in medoids:
                    continue
                trial = medoids[:mi] + [h] + medoids[mi + 1:]
                c = _cost(D, trial)
                if c < swap_cost - 1e-12:
                    swap, swap_cost = trial, c
        if swap is None:
            return medoids
        medoids, cost = swap, swap_cost


def kmedoids(D: np.ndarray, k: int, exact_limit: int = 50_000) -> tuple[np.ndarray, np.ndarray]:
    """k-medoids on a precomputed distance matrix.

    Exhaustive (global optimum, lowest-index tie-break) when there are at most
    ``exact_limit`` candidate medoid sets, otherwise PAM build + swap.
    Returns (sorted medoid indices, cluster index per point).
    """
    n = len(D)
    if not 1 <= k <= n:
        raise ValueError(f"k={k} not in [1, {n}]")
    if k == 1:
        medoids = [int(np.argmin(D.sum(axis=0)))]
    elif math.comb(n, k) <= exact_limit:
        medoids = _exact_medoids(D, k)
    else:
        medoids = _pam(D, k)
    medoids = np.sort(np.array(medoids))
    return medoids, assign(D, medoids)


def silhouette(D: np.ndarray, labels: np.ndarray) -> float:
    n = len(D)
    ks = np.unique(labels)
    if len(ks) < 2:
        return -1.0
    s = np.zeros(n)
    for i in range(n):
        own = labels == labels[i]
        if own.sum() <= 1:
            continue
        a = D[i, own].sum() / (own.sum() - 1)
        b = min(D[i, labels == c].mean() for c in ks if c != labels[i])
        m = max(a, b)
        s[i] = 0.0 if m == 0 else (b - a) / m
    return float(s.mean())


def choose_k(D: np.ndarray, candidates=range(2, 6)) -> int:
    n = len(D)
    best_k, best_s = 2, -np.inf
    for k in candidates:
        if k >= n:
            break
        s = silhouette(D, kmedoids(D, k)[1])
        if s > best_s + 1e-12:
            best_k, best_s = k, s
    return min(best_k, n)


def retain_largest_clusters(labels: np.ndarray, medoids: np.ndarray, floor: int) -> list[int]:
    """Positions of whole clusters, biggest first, until ``floor`` points are kept."""
    sizes = np.bincount(labels, minlength=len(medoids))
    order = sorted(range(len(medoids)), key=lambda c: (-sizes[c], medoids[c]))
    kept: list[int] = []
    for c in order:
        if len(kept) >= floor:
            break
        kept.extend(np.nonzero(labels == c)[0].tolist())
    return sorted(kept)


def reduce_by_clustering(ps: PathSet, q: Quorum, k: int | str = 2) -> PathSet:
    """Cluster paths by Jaccard distance of their feature sets; keep the biggest clusters."""
    _check_floor(ps, q)
    if len(ps) == q.value:
        return ps
    D = jaccard_distances(ps)
    k = choose_k(D) if k == "auto" else min(int(k), len(ps))
    medoids, labels = kmedoids(D, k)
    return ps.keep(retain_largest_clusters(labels, medoids, q.value))


# --------------------------------------------------------------------- random


def reduce_by_random(ps: PathSet, q: Quorum, seed: int = 0) -> PathSet:
    _check_floor(ps, q)
    if len(ps) == q.value:
        return ps
    rng = np.random.default_rng(seed)
    return ps.keep(rng.choice(len(ps), size=q.value, replace=False))


def reduce_pipeline(ps: PathSet, q: Quorum, cfg: ReductionConfig | None = None):
    """Association, clustering, then random selection down to exactly the quorum.

    Under-quorum input comes back untouched with ``trace.under_quorum`` set.
    """
    cfg = cfg or ReductionConfig()
    trace = ReductionTrace(cfg.seed)
    if len(ps) < q.value:
        trace.under_quorum = True
        return ps, trace
    if cfg.association_enabled:
        before = len(ps)
        ps = reduce_by_association(ps, q, cfg.association_min_support)
        trace.record("association", before, len(ps))
    if cfg.clustering_enabled:
        before = len(ps)
        ps = reduce_by_clustering(ps, q, cfg.clustering_k)
        trace.record("clustering", before, len(ps))
    before = len(ps)
    ps = reduce_by_random(ps, q, cfg.seed)
    trace.record("random", before, len(ps))
    return ps, trace
