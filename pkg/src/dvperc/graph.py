"""Finite balls of the catalog graphs, self-avoiding walk counts, and dual-graph facts."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Hashable, Optional

import numpy as np

from .errors import RadiusTooLarge, RadiusTooSmall, UnknownGraph

GHOST = -1
DEFAULT_MAX_VERTICES = 5_000_000

HONEYCOMB_LAMBDA = math.sqrt(2.0 + math.sqrt(2.0))

_TRI_DIRS = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))  # 0, 60, ..., 300 degrees
# honeycomb = triangular lattice minus the class (n - m) % 3 == 2
_HEX_DIRS = {0: ((1, 0), (-1, 1), (0, -1)), 1: ((0, 1), (-1, 0), (1, -1))}


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    degree: int
    dual: Optional[str] = None
    dual_degree: Optional[int] = None
    dual_lambda: Optional[float] = None  # exact connective constant of the dual, when known
    lambda_exact: Optional[float] = None  # exact connective constant of the graph, when known

    @property
    def lambda_bound(self) -> float:
        return float(self.degree - 1)

    @property
    def dual_lambda_bound(self) -> Optional[float]:
        return None if self.dual_degree is None else float(self.dual_degree - 1)

    @property
    def lambda_value(self) -> float:
        """Best available value of lambda(G) usable in a certificate."""
        return self.lambda_bound if self.lambda_exact is None else self.lambda_exact

    @property
    def dual_lambda_value(self) -> Optional[float]:
        return self.dual_lambda_bound if self.dual_lambda is None else self.dual_lambda


def _parse_key(name: str) -> tuple[str, Optional[int]]:
    base, _, arg = name.partition(":")
    if base in ("tree", "hypercube"):
        if not arg:
            raise UnknownGraph(f"{name!r}: missing parameter (e.g. {base}:3)")
        try:
            return base, int(arg)
        except ValueError:
            raise UnknownGraph(f"{name!r}: bad parameter") from None
    if arg or base not in ("line", "square", "triangular", "hexagonal"):
        raise UnknownGraph(f"unknown graph {name!r}")
    return base, None


def catalog_entry(name: str) -> CatalogEntry:
    base, arg = _parse_key(name)
    if base == "line":
        return CatalogEntry("line", 2, lambda_exact=1.0)
    if base == "tree":
        if arg < 3:
            raise UnknownGraph("tree:d needs d >= 3")
        return CatalogEntry(name, arg, lambda_exact=float(arg - 1))
    if base == "hypercube":
        if arg < 1:
            raise UnknownGraph("hypercube:D needs D >= 1")
        if arg == 1:
            return CatalogEntry(name, 2, lambda_exact=1.0)
        if arg == 2:
            return CatalogEntry(name, 4, dual="square", dual_degree=4)
        return CatalogEntry(name, 2 * arg)
    if base == "square":
        return CatalogEntry("square", 4, dual="square", dual_degree=4)
    if base == "triangular":
        return CatalogEntry("triangular", 6, dual="hexagonal", dual_degree=3, dual_lambda=HONEYCOMB_LAMBDA)
    return CatalogEntry(
        "hexagonal", 3, dual="triangular", dual_degree=6, lambda_exact=HONEYCOMB_LAMBDA
    )


def _neighbor_fn(name: str) -> tuple[int, Hashable, Callable[[Hashable], list]]:
    base, arg = _parse_key(name)
    if base == "line":
        return 2, 0, lambda x: [x + 1, x - 1]
    if base in ("square", "hypercube"):
        dim = 2 if base == "square" else arg
        if dim < 1:
            raise UnknownGraph("hypercube:D needs D >= 1")

        def nbrs(x):
            out = []
            for i in range(dim):
                for s in (1, -1):
                    y = list(x)
                    y[i] += s
                    out.append(tuple(y))
            return out

        return 2 * dim, (0,) * dim, nbrs
    if base == "triangular":
        return 6, (0, 0), lambda x: [(x[0] + a, x[1] + b) for a, b in _TRI_DIRS]
    if base == "hexagonal":
        return 3, (0, 0), lambda x: [(x[0] + a, x[1] + b) for a, b in _HEX_DIRS[(x[0] - x[1]) % 3]]
    d = arg
    if d < 3:
        raise UnknownGraph("tree:d needs d >= 3")

    def tree_nbrs(x):
        if not x:
            return [(s,) for s in range(d)]
        return [x[:-1]] + [x + (s,) for s in range(1, d)]

    return d, (), tree_nbrs


@dataclass(frozen=True, eq=False)
class GraphWindow:
    """The ball B(R) around the origin (vertex id 0), ids in breadth-first order.

    ``neighbors[x, i]`` is the id of x(i+1) or ``GHOST`` when it lies outside
    the ball; ``reverse_slot[x, i]`` is the slot index of x inside that
    neighbour's list.
    """

    graph_name: str
    degree: int
    radius: int
    coords: tuple
    neighbors: np.ndarray
    reverse_slot: np.ndarray
    dist: np.ndarray
    index: dict = field(repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.coords)

    def shell(self, n: int) -> np.ndarray:
        return np.flatnonzero(self.dist == n)

    def shell_sizes(self) -> list[int]:
        return np.bincount(self.dist, minlength=self.radius + 1).tolist()

    def id_of(self, coord) -> int:
        if isinstance(coord, list):
            coord = tuple(coord)
        try:
            return self.index[coord]
        except KeyError:
            raise KeyError(f"{coord!r} is not inside B({self.radius}) of {self.graph_name}") from None


def build_window(name: str, radius: int, max_vertices: int = DEFAULT_MAX_VERTICES) -> GraphWindow:
    if radius < 1:
        raise ValueError("radius must be >= 1")
    d, origin, nbrs = _neighbor_fn(name)
    coords = [origin]
    dist = [0]
    index = {origin: 0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        if dist[v] == radius:
            continue
        for y in nbrs(coords[v]):
            if y not in index:
                if len(coords) >= max_vertices:
                    raise RadiusTooLarge(f"B({radius}) of {name} exceeds {max_vertices} vertices")
                index[y] = len(coords)
                coords.append(y)
                dist.append(dist[v] + 1)
                queue.append(index[y])
    n = len(coords)
    neighbors = np.full((n, d), GHOST, dtype=np.int64)
    for v, x in enumerate(coords):
        for i, y in enumerate(nbrs(x)):
            neighbors[v, i] = index.get(y, GHOST)
    reverse = np.full((n, d), GHOST, dtype=np.int64)
    vs, slots = np.nonzero(neighbors >= 0)
    targets = neighbors[vs, slots]
    # slot of v in its neighbour's list
    back = neighbors[targets] == vs[:, None]
    if not np.all(back.sum(axis=1) == 1):
        raise AssertionError("neighbour relation is not symmetric")
    reverse[vs, slots] = np.argmax(back, axis=1)
    for arr in (neighbors, reverse):
        arr.setflags(write=False)
    dist_arr = np.asarray(dist, dtype=np.int64)
    dist_arr.setflags(write=False)
    return GraphWindow(name, d, radius, tuple(coords), neighbors, reverse, dist_arr, index)


def count_saw(window: GraphWindow, n: int) -> int:
    """Number of self-avoiding walks of length ``n`` starting at the origin."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n > window.radius:
        raise RadiusTooSmall(f"n={n} exceeds window radius {window.radius}")
    if n == 0:
        return 1
    nb = window.neighbors.tolist()
    on_path = bytearray(window.n_vertices)
    on_path[0] = 1
    count = 0
    # explicit stack of (vertex, next slot to try)
    path = [0]
    slot = [0]
    d = window.degree
    while path:
        v = path[-1]
        i = slot[-1]
        if i == d:
            on_path[v] = 0
            path.pop()
            slot.pop()
            continue
        slot[-1] = i + 1
        y = nb[v][i]
        if y < 0 or on_path[y]:
            continue
        if len(path) == n:
            count += 1
            continue
        on_path[y] = 1
        path.append(y)
        slot.append(0)
    return count


@dataclass(frozen=True)
class LambdaEstimate:
    estimate: float  # min(d - 1, sigma(n)^(1/n))
    sigma: int
    n: int
    bound: float
    catalog: Optional[float]

    @property
    def value(self) -> float:
        return self.estimate if self.catalog is None else self.catalog


def lambda_estimate(window: GraphWindow, n_max: int) -> LambdaEstimate:
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    sigma = count_saw(window, n_max)
    bound = float(window.degree - 1)
    entry = catalog_entry(window.graph_name)
    return LambdaEstimate(
        estimate=min(bound, sigma ** (1.0 / n_max)),
        sigma=sigma,
        n=n_max,
        bound=bound,
        catalog=entry.lambda_exact,
    )
