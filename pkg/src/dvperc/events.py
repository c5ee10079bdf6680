"""Exact probabilities of events that depend on finitely many vertex states.

An event is a support ``W`` (window vertex ids) plus a vectorised predicate on
joint states. Joint states are enumerated as integers whose base-2^d digits
are the vertex masks, most significant digit first, so the truth table
reshapes directly into a tensor with one axis of length 2^d per vertex.
Probabilities are contractions of that tensor with the single-vertex law.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import rng
from .errors import (
    DegreeMismatch,
    DirectionNotTangent,
    KOutOfRange,
    NotIncreasing,
    OffPairEdge,
    SimplexExit,
    SupportTooLarge,
)
from .graph import GraphWindow
from .prob import ProbVector
from .sampler import sample_configs

MAX_BITS = 24
MAX_BOX_BITS = 22  # joint states times subsets K
CHUNK = 1 << 18
FD_STEP = 1e-5
TANGENT_TOL = 1e-12

Predicate = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class EventSpec:
    """``predicate`` maps an (N, |W|) array of masks, columns in ``support`` order, to N booleans."""

    support: tuple
    predicate: Predicate
    description: str = ""

    def __call__(self, states: np.ndarray) -> np.ndarray:
        return np.asarray(self.predicate(states), dtype=bool)

    def on(self, support: Sequence[int]) -> Predicate:
        """The predicate re-indexed to act on columns of a larger support."""
        cols = [list(support).index(x) for x in self.support]
        return lambda s: self(s[:, cols])


def union_support(*supports) -> tuple:
    out: list = []
    for s in supports:
        for x in s:
            if x not in out:
                out.append(x)
    return tuple(out)


# ---------------------------------------------------------------------------
# built-in events


def everything() -> EventSpec:
    return EventSpec((), lambda s: np.ones(s.shape[0], dtype=bool), "all")


def nothing() -> EventSpec:
    return EventSpec((), lambda s: np.zeros(s.shape[0], dtype=bool), "none")


def _slot(window: GraphWindow, x: int, y: int) -> int:
    hits = np.flatnonzero(window.neighbors[x] == y)
    if hits.size == 0:
        raise ValueError(f"vertices {x} and {y} are not adjacent in the window")
    return int(hits[0])


def choose_event(window: GraphWindow, x: int, y: int) -> EventSpec:
    """x selects its neighbour y."""
    i = _slot(window, x, y)
    return EventSpec((x,), lambda s: ((s[:, 0] >> i) & 1).astype(bool), f"{x} chooses {y}")


def edge_event(window: GraphWindow, x: int, y: int, mode: str = "weak") -> EventSpec:
    i, j = _slot(window, x, y), _slot(window, y, x)
    if mode == "weak":
        pred = lambda s: (((s[:, 0] >> i) | (s[:, 1] >> j)) & 1).astype(bool)
        sym = "~"
    elif mode == "strong":
        pred = lambda s: (((s[:, 0] >> i) & (s[:, 1] >> j)) & 1).astype(bool)
        sym = "<->"
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return EventSpec((x, y), pred, f"{x} {sym} {y}")


def _local_edges(window: GraphWindow, support: Sequence[int]) -> list:
    pos = {v: a for a, v in enumerate(support)}
    edges = []
    for a, v in enumerate(support):
        for i, y in enumerate(window.neighbors[v].tolist()):
            b = pos.get(y)
            if b is not None and a < b:
                edges.append((a, b, i, int(window.reverse_slot[v, i])))
    return edges


def _reach_predicate(window, support, sources, targets, mode) -> Predicate:
    edges = _local_edges(window, support)
    m = len(support)

    def pred(s: np.ndarray) -> np.ndarray:
        opened = []
        for a, b, i, j in edges:
            fa, fb = (s[:, a] >> i) & 1, (s[:, b] >> j) & 1
            opened.append(((fa | fb) if mode == "weak" else (fa & fb)).astype(bool))
        reach = np.zeros(s.shape, dtype=bool)
        reach[:, sources] = True
        for _ in range(m):
            before = reach.copy()
            for (a, b, _, _), o in zip(edges, opened):
                reach[:, a] |= reach[:, b] & o
                reach[:, b] |= reach[:, a] & o
            if np.array_equal(before, reach):
                break
        return reach[:, targets].any(axis=1)

    return pred


def connect_event(
    window: GraphWindow, x: int, y: int, mode: str = "weak", support: Optional[Sequence[int]] = None
) -> EventSpec:
    """x and y joined by an open path that stays inside ``support`` (default: the whole window)."""
    if mode not in ("weak", "strong"):
        raise ValueError(f"unknown mode {mode!r}")
    support = tuple(range(window.n_vertices)) if support is None else union_support((x, y), support)
    a, b = support.index(x), support.index(y)
    return EventSpec(support, _reach_predicate(window, support, [a], [b], mode), f"{x} connected to {y} ({mode})")


def reach_event(window: GraphWindow, n: int, mode: str = "weak") -> EventSpec:
    """The origin's cluster meets the sphere at distance n; decided by the states in B(n)."""
    if not 1 <= n <= window.radius:
        raise ValueError(f"shell {n} outside 1..{window.radius}")
    support = tuple(np.flatnonzero(window.dist <= n).tolist())
    targets = [a for a, v in enumerate(support) if window.dist[v] == n]
    return EventSpec(support, _reach_predicate(window, support, [0], targets, mode), f"origin reaches shell {n}")


def all_of(*events: EventSpec) -> EventSpec:
    sup = union_support(*(e.support for e in events))
    preds = [e.on(sup) for e in events]

    def pred(s):
        out = np.ones(s.shape[0], dtype=bool)
        for f in preds:
            out &= f(s)
        return out

    return EventSpec(sup, pred, " and ".join(f"({e.description})" for e in events))


def any_of(*events: EventSpec) -> EventSpec:
    sup = union_support(*(e.support for e in events))
    preds = [e.on(sup) for e in events]

    def pred(s):
        out = np.zeros(s.shape[0], dtype=bool)
        for f in preds:
            out |= f(s)
        return out

    return EventSpec(sup, pred, " or ".join(f"({e.description})" for e in events))


def negation(event: EventSpec) -> EventSpec:
    return EventSpec(event.support, lambda s: ~event(s), f"not ({event.description})")


def state_index(states: np.ndarray, d: int) -> np.ndarray:
    """Joint-state integer for each row of an (N, |W|) mask array."""
    idx = np.zeros(states.shape[0], dtype=np.int64)
    for j in range(states.shape[1]):
        idx = (idx << d) | states[:, j]
    return idx


def table_event(support: Sequence[int], table: np.ndarray, d: int, description: str = "table") -> EventSpec:
    """Event given by its truth table over joint-state integers."""
    table = np.asarray(table, dtype=bool).reshape(-1)
    if table.size != 1 << (d * len(support)):
        raise ValueError("truth table has the wrong length")
    return EventSpec(tuple(support), lambda s: table[state_index(s, d)], description)


# ---------------------------------------------------------------------------
# enumeration


def _check(window: GraphWindow, event: EventSpec, p: Optional[ProbVector], max_bits: int = MAX_BITS) -> None:
    d = window.degree
    if p is not None and p.degree != d:
        raise DegreeMismatch(f"p has degree {p.degree}, window has {d}")
    if any(not 0 <= x < window.n_vertices for x in event.support):
        raise ValueError("event support leaves the window")
    if len(event.support) * d > max_bits:
        raise SupportTooLarge(f"|W| * d = {len(event.support) * d} exceeds {max_bits}")


def joint_states(n_vertices: int, d: int, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    mask = (1 << d) - 1
    cols = [(idx >> (d * (n_vertices - 1 - j))) & mask for j in range(n_vertices)]
    return np.stack(cols, axis=1) if cols else np.zeros((idx.size, 0), dtype=np.int64)


def truth_tensor(event: EventSpec, d: int) -> np.ndarray:
    """Boolean tensor of shape (2^d,) * |W|, axis j indexing the state of support[j]."""
    m = len(event.support)
    total = 1 << (d * m)
    out = np.empty(total, dtype=bool)
    for start in range(0, total, CHUNK):
        stop = min(start + CHUNK, total)
        out[start:stop] = event(joint_states(m, d, start, stop))
    return out.reshape((1 << d,) * m)


def vertex_law(entries: Sequence[float], d: int) -> np.ndarray:
    """P(omega(x) = S) for every mask S: p_|S| / C(d, |S|)."""
    sizes = np.array([bin(s).count("1") for s in range(1 << d)])
    return np.array([entries[k] / math.comb(d, k) for k in sizes], dtype=np.float64)


def _contract(tensor: np.ndarray, w: np.ndarray) -> float:
    t = np.asarray(tensor, dtype=np.float64)
    while t.ndim:
        t = np.tensordot(t, w, axes=([t.ndim - 1], [0]))
    return float(t)


def _vertex_marginals(tensor: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Q[j, S] = P(event with omega(support[j]) replaced by S)."""
    m = tensor.ndim
    out = np.empty((m, w.size))
    t = tensor.astype(np.float64)
    for j in range(m):
        r = np.moveaxis(t, j, 0)
        while r.ndim > 1:
            r = np.tensordot(r, w, axes=([r.ndim - 1], [0]))
        out[j] = r
    return out


def exact_prob(window: GraphWindow, event: EventSpec, p: ProbVector) -> float:
    _check(window, event, p)
    d = window.degree
    return _contract(truth_tensor(event, d), vertex_law(p.entries, d))


def sample_frequency(
    window: GraphWindow, event: EventSpec, p: ProbVector, trials: int, seed: int
) -> tuple[float, float]:
    """Monte Carlo frequency of ``event`` and its binomial standard error."""
    cols = list(event.support)
    hits = 0
    block = max(1, (1 << 20) // window.n_vertices)
    for s in range(0, trials, block):
        masks = sample_configs(window, p, seed, np.arange(s, min(s + block, trials)))
        hits += int(event(masks[:, cols]).sum())
    f = hits / trials
    return f, math.sqrt(f * (1 - f) / trials)


def fkg_gap(window: GraphWindow, a: EventSpec, b: EventSpec, p: ProbVector) -> float:
    """P(A) P(B) - P(A and B); positive means the pair is negatively correlated."""
    both = all_of(a, b)
    _check(window, both, p)
    return exact_prob(window, a, p) * exact_prob(window, b, p) - exact_prob(window, both, p)


@dataclass(frozen=True)
class BoxResult:
    box: float
    product: float

    @property
    def holds(self) -> bool:
        return self.box <= self.product + 1e-12


def box_indicator(a_tensor: np.ndarray, b_tensor: np.ndarray) -> np.ndarray:
    """Joint states at which A and B occur on disjoint sets of vertices.

    ``C(K, omega) in A`` holds iff A is true for every completion of omega off
    K, i.e. the truth tensor is all-true along the axes outside K. Larger
    certificates are easier, so pairing K with its complement is enough.
    """
    m = a_tensor.ndim
    out = np.zeros(a_tensor.shape, dtype=bool)
    axes = range(m)
    for r in range(m + 1):
        for k_set in itertools.combinations(axes, r):
            rest = tuple(j for j in axes if j not in k_set)
            cert_a = a_tensor.all(axis=rest, keepdims=True) if rest else a_tensor
            cert_b = b_tensor.all(axis=k_set, keepdims=True) if k_set else b_tensor
            out |= cert_a & cert_b
    return out


def box_prob(window: GraphWindow, a: EventSpec, b: EventSpec, p: ProbVector) -> BoxResult:
    sup = union_support(a.support, b.support)
    d = window.degree
    joint = EventSpec(sup, lambda s: np.ones(s.shape[0], dtype=bool))
    _check(window, joint, p)
    if len(sup) * d + len(sup) > MAX_BOX_BITS:
        raise SupportTooLarge(f"box enumeration needs 2^{len(sup) * d + len(sup)} steps")
    ta = truth_tensor(EventSpec(sup, a.on(sup)), d)
    tb = truth_tensor(EventSpec(sup, b.on(sup)), d)
    w = vertex_law(p.entries, d)
    return BoxResult(_contract(box_indicator(ta, tb), w), _contract(ta, w) * _contract(tb, w))


# ---------------------------------------------------------------------------
# derivatives


@dataclass(frozen=True)
class RussoResult:
    formula_value: float
    finite_difference: float
    scheme: str  # "central" or "forward" (second order, used on a simplex face)


def _inside(entries: np.ndarray) -> bool:
    return bool(np.all(entries >= -1e-15) and np.all(entries <= 1 + 1e-15))


def russo_derivative(
    window: GraphWindow, event: EventSpec, p: ProbVector, direction: Sequence[float], step: float = FD_STEP
) -> RussoResult:
    d = window.degree
    _check(window, event, p)
    v = np.asarray(direction, dtype=np.float64)
    if v.shape != (d + 1,):
        raise DirectionNotTangent(f"direction needs {d + 1} components")
    if abs(math.fsum(v)) > TANGENT_TOL:
        raise DirectionNotTangent("direction components must sum to 0")
    base = np.asarray(p.entries, dtype=np.float64)
    tensor = truth_tensor(event, d)
    q = _vertex_marginals(tensor, vertex_law(p.entries, d))
    dw = vertex_law(v, d)
    formula = float(np.sum(q @ dw))

    def prob_at(t: float) -> float:
        return _contract(tensor, vertex_law(base + t * v, d))

    if not _inside(base + step * v):
        raise SimplexExit("p + eps * direction leaves the simplex")
    if _inside(base - step * v):
        fd = (prob_at(step) - prob_at(-step)) / (2 * step)
        scheme = "central"
    elif _inside(base + 2 * step * v):
        fd = (-3 * prob_at(0.0) + 4 * prob_at(step) - prob_at(2 * step)) / (2 * step)
        scheme = "forward"
    else:
        raise SimplexExit("no room for a finite difference inside the simplex")
    return RussoResult(formula, fd, scheme)


def check_increasing(event: EventSpec, d: int, pairs: int = 1000, seed: int = 0) -> bool:
    """Random spot check: omega <= omega' vertexwise never turns the event off."""
    m = len(event.support)
    if m == 0:
        return True
    u = rng.uniforms(seed, rng.STREAM_EVENTS, np.arange(pairs)[:, None], np.arange(m)[None, :], 2)
    low = np.floor(u[..., 0] * (1 << d)).astype(np.int64)
    high = low | np.floor(u[..., 1] * (1 << d)).astype(np.int64)
    return not np.any(event(low) & ~event(high))


def increasing_derivative(
    window: GraphWindow, event: EventSpec, p: ProbVector, k: int, pairs: int = 1000, seed: int = 0
) -> float:
    """d/dp P(A) for p_k = 1 - p, p_{k+1} = p, as a sum over pivotal single-slot additions.

    The coefficient k!(d-k-1)!/d! weighs each (S, y) pair with |S| = k and y
    outside S by the probability that adding y to omega(x) = S switches A on.
    """
    d = window.degree
    _check(window, event, p)
    if not 0 <= k <= d - 1:
        raise KOutOfRange(f"k = {k} outside 0..{d - 1}")
    if any(abs(e) > 1e-15 for i, e in enumerate(p.entries) if i not in (k, k + 1)):
        raise OffPairEdge(f"p must be supported on sizes {k} and {k + 1}")
    if not check_increasing(event, d, pairs, seed):
        raise NotIncreasing(f"{event.description!r} failed the increasingness spot check")
    coeff = math.factorial(k) * math.factorial(d - k - 1) / math.factorial(d)
    w = vertex_law(p.entries, d)
    tensor = truth_tensor(event, d)
    sets = [s for s in range(1 << d) if bin(s).count("1") == k]
    total = 0.0
    for j in range(tensor.ndim):
        t = np.moveaxis(tensor, j, 0)
        switched = np.zeros(t.shape[1:], dtype=np.float64)
        for s in sets:
            for y in range(d):
                if not s >> y & 1:
                    switched += t[s | (1 << y)] & ~t[s]
        total += _contract(switched, w)
    return coeff * total
