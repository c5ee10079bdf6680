"""Monte Carlo estimators on finite windows and on the regular tree.

Trials are cut into blocks whose size depends only on the window, and the
per-trial statistics are concatenated in trial order before any reduction.
Results are therefore identical for any ``threads`` value.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import rng
from .cluster import BatchClusters, batch_clusters
from .errors import AllZeroReach, KOutOfRange, ShellOutOfRange
from .graph import GraphWindow
from .prob import ProbVector, make_prob_vector
from .sampler import coupled_sample_batch, direct_masks, sample_configs

CELLS_PER_BLOCK = 1 << 20
MIN_FIT_SUCCESSES = 10


@dataclass(frozen=True)
class EstimatorResult:
    estimate: float
    std_error: float
    trials: int
    flagged_fraction: float = 0.0
    metadata: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "std_error": self.std_error,
            "trials": self.trials,
            "flagged_fraction": self.flagged_fraction,
            **self.metadata,
        }


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    n = x.size
    mean = float(np.mean(x))
    if n < 2:
        return mean, 0.0
    return mean, float(np.std(x, ddof=1) / math.sqrt(n))


def block_size(window: GraphWindow) -> int:
    return max(1, CELLS_PER_BLOCK // window.n_vertices)


def _blocks(trials: int, size: int) -> list[np.ndarray]:
    return [np.arange(s, min(s + size, trials), dtype=np.int64) for s in range(0, trials, size)]


def _map_blocks(fn: Callable, blocks: list, threads: int) -> list:
    if threads <= 1 or len(blocks) <= 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, blocks))


def _meta(window: GraphWindow, p: ProbVector, mode: str, seed: int, **extra) -> dict:
    return {
        "graph": window.graph_name,
        "radius": window.radius,
        "p": list(p.entries),
        "mode": mode,
        "seed": seed,
        **extra,
    }


@dataclass(frozen=True)
class TrialStats:
    """Per-trial observables, in trial order."""

    size: np.ndarray
    max_shell: np.ndarray
    n_components: np.ndarray


def trial_stats(
    window: GraphWindow, p: ProbVector, mode: str, trials: int, seed: int, threads: int = 1
) -> TrialStats:
    if trials < 1:
        raise ValueError("trials must be >= 1")

    def run(block: np.ndarray) -> BatchClusters:
        return batch_clusters(window, sample_configs(window, p, seed, block), mode)

    parts = _map_blocks(run, _blocks(trials, block_size(window)), threads)
    return TrialStats(
        np.concatenate([b.origin_size for b in parts]),
        np.concatenate([b.origin_max_shell for b in parts]),
        np.concatenate([b.n_components for b in parts]),
    )


def estimate_reach(
    window: GraphWindow, p: ProbVector, n: int, mode: str, trials: int, seed: int, threads: int = 1
) -> EstimatorResult:
    """Frequency of {origin's cluster meets the sphere at distance n}; exact in law for n <= R."""
    if not 0 <= n <= window.radius:
        raise ShellOutOfRange(f"shell {n} outside 0..{window.radius}")
    st = trial_stats(window, p, mode, trials, seed, threads)
    hit = st.max_shell >= n
    est = float(hit.mean())
    se = math.sqrt(est * (1 - est) / trials)
    flagged = float(np.mean(st.max_shell == window.radius))
    return EstimatorResult(est, se, trials, flagged, _meta(window, p, mode, seed, shell=n))


def estimate_chi(
    window: GraphWindow, p: ProbVector, mode: str, trials: int, seed: int, threads: int = 1
) -> EstimatorResult:
    """Mean origin-cluster size; a lower bound whenever some cluster touched the window edge."""
    st = trial_stats(window, p, mode, trials, seed, threads)
    est, se = _mean_se(st.size.astype(np.float64))
    flagged = float(np.mean(st.max_shell == window.radius))
    return EstimatorResult(est, se, trials, flagged, _meta(window, p, mode, seed, lower_bound=flagged > 0))


@dataclass(frozen=True)
class SizeDistribution:
    rows: list  # (m, frequency, std_error) for m = 1..m_max
    overflow_fraction: float  # clusters touching the window edge
    beyond_fraction: float  # untouched clusters larger than m_max
    trials: int
    metadata: dict = field(default_factory=dict)


def estimate_size_distribution(
    window: GraphWindow, p: ProbVector, mode: str, trials: int, seed: int, m_max: int, threads: int = 1
) -> SizeDistribution:
    if not 1 <= m_max < window.n_vertices:
        raise ValueError(f"m_max must lie in 1..{window.n_vertices - 1}")
    st = trial_stats(window, p, mode, trials, seed, threads)
    touch = st.max_shell == window.radius
    sizes = st.size[~touch]
    counts = np.bincount(sizes, minlength=m_max + 1)
    rows = []
    for m in range(1, m_max + 1):
        f = counts[m] / trials
        rows.append((m, float(f), math.sqrt(f * (1 - f) / trials)))
    beyond = float(np.sum(sizes > m_max) / trials)
    return SizeDistribution(rows, float(touch.mean()), beyond, trials, _meta(window, p, mode, seed, m_max=m_max))


@dataclass(frozen=True)
class KappaEstimate:
    kappa_inverse_mean: EstimatorResult
    kappa_count: EstimatorResult


def estimate_kappa(
    window: GraphWindow, p: ProbVector, mode: str, trials: int, seed: int, threads: int = 1
) -> KappaEstimate:
    """Clusters per vertex two ways: mean of 1/|C(o)| (an upper bound under truncation),
    and the component count of the induced subgraph on the window divided by its size."""
    st = trial_stats(window, p, mode, trials, seed, threads)
    flagged = float(np.mean(st.max_shell == window.radius))
    meta = _meta(window, p, mode, seed)
    inv, inv_se = _mean_se(1.0 / st.size)
    cnt, cnt_se = _mean_se(st.n_components / window.n_vertices)
    return KappaEstimate(
        EstimatorResult(inv, inv_se, trials, flagged, {**meta, "upper_bound": flagged > 0}),
        EstimatorResult(cnt, cnt_se, trials, flagged, meta),
    )


@dataclass(frozen=True)
class DecayFit:
    slope: float
    per_shell: list  # (n, estimate, std_error, successes)
    fitted_shells: list
    trials: int
    metadata: dict = field(default_factory=dict)

    @property
    def rate(self) -> float:
        return -self.slope


def fit_log_slope(shells: Sequence[int], successes: Sequence[int], trials: int) -> tuple[float, list]:
    """Unweighted least-squares slope of log(successes / trials) against n, over shells with
    at least ``MIN_FIT_SUCCESSES`` successes."""
    pts = [(n, s) for n, s in zip(shells, successes) if s >= MIN_FIT_SUCCESSES]
    if len(pts) < 2:
        raise AllZeroReach(
            f"only {len(pts)} shell(s) with >= {MIN_FIT_SUCCESSES} successes; rate unidentifiable"
        )
    x = np.array([n for n, _ in pts], dtype=np.float64)
    y = np.log(np.array([s for _, s in pts], dtype=np.float64) / trials)
    slope = float(np.polyfit(x, y, 1)[0])
    return slope, [n for n, _ in pts]


def estimate_decay(
    window: GraphWindow,
    p: ProbVector,
    mode: str,
    shells: Sequence[int],
    trials: int,
    seed: int,
    threads: int = 1,
) -> DecayFit:
    shells = list(shells)
    if not shells or min(shells) < 0 or max(shells) > window.radius:
        raise ShellOutOfRange(f"shells must lie in 0..{window.radius}")
    st = trial_stats(window, p, mode, trials, seed, threads)
    per_shell = []
    succ = []
    for n in shells:
        s = int(np.sum(st.max_shell >= n))
        f = s / trials
        per_shell.append((n, f, math.sqrt(f * (1 - f) / trials), s))
        succ.append(s)
    if not any(succ):
        raise AllZeroReach("no shell was reached in any trial")
    slope, used = fit_log_slope(shells, succ, trials)
    return DecayFit(slope, per_shell, used, trials, _meta(window, p, mode, seed))


def coupled_trial_stats(
    window: GraphWindow, ps: Sequence[ProbVector], mode: str, trials: int, seed: int
) -> tuple[list[np.ndarray], list[TrialStats]]:
    """Per-trial masks and observables along a chain p_1 <= p_2 <= ... drawn with the monotone coupling."""
    masks_all = [[] for _ in ps]
    stats = [[] for _ in ps]
    for block in _blocks(trials, block_size(window)):
        masks = coupled_sample_batch(window, ps, seed, block)
        for i, m in enumerate(masks):
            masks_all[i].append(m)
            stats[i].append(batch_clusters(window, m, mode))
    out_stats = [
        TrialStats(
            np.concatenate([b.origin_size for b in s]),
            np.concatenate([b.origin_max_shell for b in s]),
            np.concatenate([b.n_components for b in s]),
        )
        for s in stats
    ]
    return [np.concatenate(m) for m in masks_all], out_stats


# ---------------------------------------------------------------------------
# regular tree

TREE_BLOCK_TRIALS = 128
DEFAULT_FRONTIER_CAP = 512


def tree_prob_vector(d: int, p: float, mode: str, k: Optional[int] = None) -> ProbVector:
    """(p_1, p_2) = (1 - p, p) for weak mode, (p_k, p_{k+1}) = (1 - p, p) for strong mode."""
    if d < 3:
        raise ValueError("d must be >= 3")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if mode == "weak":
        lo = 1
    elif mode == "strong":
        if k is None or not 2 <= k <= d - 1:
            raise KOutOfRange(f"strong mode needs 2 <= k <= {d - 1}, got {k}")
        lo = k
    else:
        raise ValueError(f"unknown mode {mode!r}")
    entries = [0.0] * (d + 1)
    entries[lo] = 1.0 - p
    entries[lo + 1] = p
    return make_prob_vector(entries)


def _tree_masks(seed: int, trial_ids: np.ndarray, index: np.ndarray, generation: int, pv: ProbVector) -> np.ndarray:
    u = rng.uniforms(seed, rng.STREAM_TREE, trial_ids, index, pv.degree + 1, substream=generation)
    return direct_masks(u, pv)


@dataclass
class _TreeRecord:
    parent_type: list = field(default_factory=list)
    child_type_counts: list = field(default_factory=list)


def _weak_type(masks: np.ndarray) -> np.ndarray:
    """1: parent only; 2: parent and a child; 3: one child only; 4: two or more children only."""
    parent = (masks & 1).astype(bool)
    kids = np.zeros_like(masks)
    m = masks >> 1
    while np.any(m):
        kids += m & 1
        m = m >> 1
    return np.where(parent, np.where(kids == 0, 1, 2), np.where(kids <= 1, 3, 4))


def _strong_type(masks: np.ndarray, k: int) -> np.ndarray:
    """1: selects k neighbours (parent + k-1 children); 2: selects k+1."""
    size = np.zeros_like(masks)
    m = masks.copy()
    while np.any(m):
        size += m & 1
        m = m >> 1
    return np.where(size == k, 1, 2)


def _simulate_tree_block(
    trial_ids: np.ndarray,
    pv: ProbVector,
    mode: str,
    generations: int,
    seed: int,
    cap: Optional[int],
    record: Optional[_TreeRecord] = None,
    k: Optional[int] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Returns (alive[generation, trial] for 0..generations, capped[trial])."""
    d = pv.degree
    n = trial_ids.size
    alive = np.zeros((generations + 1, n), dtype=bool)
    alive[0] = True
    capped = np.zeros(n, dtype=bool)
    # frontier: local trial index, within-trial position, state mask
    owner = np.arange(n, dtype=np.int64)
    pos = np.zeros(n, dtype=np.int64)
    masks = _tree_masks(seed, trial_ids[owner], pos, 0, pv)
    is_root = True
    for g in range(1, generations + 1):
        if owner.size == 0:
            break
        slots = np.arange(d) if is_root else np.arange(1, d)
        ns = slots.size
        c_owner = np.repeat(owner, ns)
        c_slot = np.tile(slots, owner.size)
        c_parent_pick = ((np.repeat(masks, ns) >> c_slot) & 1).astype(bool)
        c_index = np.repeat(pos, ns) * d + c_slot
        c_masks = _tree_masks(seed, trial_ids[c_owner], c_index, g, pv)
        c_pick_parent = (c_masks & 1).astype(bool)
        keep = (c_parent_pick | c_pick_parent) if mode == "weak" else (c_parent_pick & c_pick_parent)
        if record is not None and not is_root:
            typer = _weak_type if mode == "weak" else (lambda m: _strong_type(m, k))
            n_types = 4 if mode == "weak" else 2
            ptype = typer(masks)
            ctype = typer(c_masks)
            parent_of = np.repeat(np.arange(owner.size), ns)
            counts = np.zeros((owner.size, n_types), dtype=np.int64)
            np.add.at(counts, (parent_of[keep], ctype[keep] - 1), 1)
            record.parent_type.append(ptype)
            record.child_type_counts.append(counts)
        owner, masks = c_owner[keep], c_masks[keep]
        if owner.size:
            starts = np.searchsorted(owner, np.arange(n))
            pos = np.arange(owner.size) - starts[owner]
            if cap is not None:
                over = pos >= cap
                if np.any(over):
                    capped[np.unique(owner[over])] = True
                    owner, masks, pos = owner[~over], masks[~over], pos[~over]
        else:
            pos = owner.copy()
        alive[g] = np.bincount(owner, minlength=n) > 0
        is_root = False
    return alive, capped


@dataclass(frozen=True)
class TreeSurvival:
    result: EstimatorResult
    curve: list  # survival frequency at generations 0..g
    capped_fraction: float


def tree_survival(
    d: int,
    p: float,
    mode: str,
    generations: int,
    trials: int,
    seed: int,
    k: Optional[int] = None,
    frontier_cap: Optional[int] = DEFAULT_FRONTIER_CAP,
    threads: int = 1,
) -> TreeSurvival:
    """Frequency with which the origin's cluster on the d-regular tree reaches depth ``generations``.

    Generation by generation only the open frontier is kept. With a
    ``frontier_cap`` each trial keeps at most that many frontier vertices; a
    capped trial can only be undercounted, and the capped share is reported.
    """
    if generations < 1:
        raise ValueError("generations must be >= 1")
    if generations > rng.MAX_SUBSTREAM:
        raise ValueError("too many generations")
    pv = tree_prob_vector(d, p, mode, k)

    def run(block):
        return _simulate_tree_block(block, pv, mode, generations, seed, frontier_cap)

    parts = _map_blocks(run, _blocks(trials, TREE_BLOCK_TRIALS), threads)
    alive = np.concatenate([a for a, _ in parts], axis=1)
    capped = np.concatenate([c for _, c in parts])
    curve = alive.mean(axis=1).tolist()
    est = curve[-1]
    se = math.sqrt(est * (1 - est) / trials)
    meta = {"graph": f"tree:{d}", "p": p, "mode": mode, "k": k, "generations": generations, "seed": seed}
    res = EstimatorResult(est, se, trials, float(capped.mean()), meta)
    return TreeSurvival(res, curve, float(capped.mean()))


@dataclass(frozen=True)
class OffspringMeans:
    means: np.ndarray  # (j, i): mean type-j children per type-i parent
    std_errors: np.ndarray
    parents: np.ndarray  # number of type-i parents observed


def tree_offspring_means(
    d: int, p: float, mode: str, generations: int, trials: int, seed: int, k: Optional[int] = None
) -> OffspringMeans:
    """Empirical mean offspring matrix from the tree simulation (non-root parents only)."""
    pv = tree_prob_vector(d, p, mode, k)
    rec = _TreeRecord()
    for block in _blocks(trials, TREE_BLOCK_TRIALS):
        _simulate_tree_block(block, pv, mode, generations, seed, None, rec, k)
    n_types = 4 if mode == "weak" else 2
    ptype = np.concatenate(rec.parent_type)
    counts = np.concatenate(rec.child_type_counts)
    means = np.full((n_types, n_types), np.nan)
    ses = np.full((n_types, n_types), np.nan)
    parents = np.zeros(n_types, dtype=np.int64)
    for i in range(n_types):
        sel = counts[ptype == i + 1]
        parents[i] = sel.shape[0]
        if sel.shape[0] >= 2:
            means[:, i] = sel.mean(axis=0)
            ses[:, i] = sel.std(axis=0, ddof=1) / math.sqrt(sel.shape[0])
    return OffspringMeans(means, ses, parents)
