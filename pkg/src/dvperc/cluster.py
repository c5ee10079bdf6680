"""Weak and strong clusters of a configuration.

Weak clusters are components of the symmetrised open-edge graph; strong
clusters use only mutually selected edges. Both relations are symmetric, so
plain undirected connectivity suffices.

Single configurations go through :class:`UnionFind`. Monte Carlo batches go
through :func:`batch_labels`, which stacks many trials into one block-diagonal
sparse graph and labels it with ``scipy.sparse.csgraph``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ShellOutOfRange
from .graph import GraphWindow
from .sampler import Configuration

Mode = Literal["weak", "strong"]
MODES = ("weak", "strong")


class UnionFind:
    """Disjoint sets over 0..n-1 with union by size and path halving."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.components = n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.components -= 1
        return ra

    def component_size(self, x: int) -> int:
        return self.size[self.find(x)]


@dataclass(frozen=True)
class ClusterReport:
    size: int
    max_shell: int
    touches_window_boundary: bool
    mode: str


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be 'weak' or 'strong', got {mode!r}")


def open_edges(window: GraphWindow, masks: np.ndarray, mode: Mode) -> tuple[np.ndarray, np.ndarray]:
    """Endpoints (x, y) of open in-window edges for a (V,) or (T, V) mask array.

    For batched input the endpoints are flattened indices ``t * V + x``.
    An undirected edge may appear once per direction.
    """
    _check_mode(mode)
    masks = np.asarray(masks, dtype=np.int64)
    batched = masks.ndim == 2
    m2 = masks if batched else masks[None, :]
    n_trials, n_vert = m2.shape
    nb = window.neighbors
    slots = np.arange(window.degree)
    inside = nb >= 0
    picks = (m2[:, :, None] >> slots) & 1  # (T, V, d)
    picks = picks.astype(bool) & inside[None]
    if mode == "strong":
        safe_nb = np.where(inside, nb, 0)
        back = (m2[:, safe_nb] >> window.reverse_slot.clip(min=0)[None]) & 1
        picks &= back.astype(bool)
    t, x, s = np.nonzero(picks)
    y = nb[x, s]
    if batched:
        return t * n_vert + x, t * n_vert + y
    return x, y


def component_labels(window: GraphWindow, config: Configuration, mode: Mode) -> np.ndarray:
    """Component representative for every vertex of the window (union-find)."""
    xs, ys = open_edges(window, config.masks, mode)
    uf = UnionFind(window.n_vertices)
    for a, b in zip(xs.tolist(), ys.tolist()):
        uf.union(a, b)
    return np.array([uf.find(v) for v in range(window.n_vertices)], dtype=np.int64)


def count_components(window: GraphWindow, config: Configuration, mode: Mode) -> int:
    xs, ys = open_edges(window, config.masks, mode)
    uf = UnionFind(window.n_vertices)
    for a, b in zip(xs.tolist(), ys.tolist()):
        uf.union(a, b)
    return uf.components


def _report(window: GraphWindow, labels: np.ndarray, root: int, mode: str) -> ClusterReport:
    members = labels == labels[root]
    max_shell = int(window.dist[members].max())
    return ClusterReport(int(members.sum()), max_shell, max_shell == window.radius, mode)


def weak_cluster(window: GraphWindow, config: Configuration, root: int = 0) -> ClusterReport:
    return _report(window, component_labels(window, config, "weak"), root, "weak")


def strong_cluster(window: GraphWindow, config: Configuration, root: int = 0) -> ClusterReport:
    return _report(window, component_labels(window, config, "strong"), root, "strong")


def cluster(window: GraphWindow, config: Configuration, root: int = 0, mode: Mode = "weak") -> ClusterReport:
    _check_mode(mode)
    return _report(window, component_labels(window, config, mode), root, mode)


def reaches_shell(window: GraphWindow, config: Configuration, n: int, mode: Mode = "weak") -> bool:
    """Whether the origin's cluster meets the sphere at distance ``n``.

    Exact for n <= R: a connecting path has a prefix inside B(n).
    """
    if not 0 <= n <= window.radius:
        raise ShellOutOfRange(f"shell {n} outside 0..{window.radius}")
    return cluster(window, config, 0, mode).max_shell >= n


@dataclass(frozen=True)
class BatchClusters:
    """Per-trial observables of a batch of configurations."""

    origin_size: np.ndarray  # |C(o)| truncated to the window
    origin_max_shell: np.ndarray
    n_components: np.ndarray  # components of the induced subgraph on the window


def batch_labels(window: GraphWindow, masks: np.ndarray, mode: Mode) -> tuple[int, np.ndarray]:
    masks = np.asarray(masks)
    n_nodes = masks.size
    xs, ys = open_edges(window, masks, mode)
    graph = coo_matrix((np.ones(xs.size, dtype=np.int8), (xs, ys)), shape=(n_nodes, n_nodes)).tocsr()
    return connected_components(graph, directed=True, connection="weak")


def batch_clusters(window: GraphWindow, masks: np.ndarray, mode: Mode) -> BatchClusters:
    masks = np.atleast_2d(masks)
    n_trials, n_vert = masks.shape
    n_comp, labels = batch_labels(window, masks, mode)
    sizes = np.bincount(labels, minlength=n_comp)
    dist = np.broadcast_to(window.dist, (n_trials, n_vert)).reshape(-1)
    max_shell = np.zeros(n_comp, dtype=np.int64)
    np.maximum.at(max_shell, labels, dist)
    origin_labels = labels[np.arange(n_trials) * n_vert]
    # each component lives inside one trial; attribute it to the trial of any member
    first_node = np.full(n_comp, -1, dtype=np.int64)
    first_node[labels[::-1]] = np.arange(labels.size)[::-1]
    per_trial = np.bincount(first_node // n_vert, minlength=n_trials)
    return BatchClusters(sizes[origin_labels], max_shell[origin_labels], per_trial)
