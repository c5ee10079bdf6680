"""Configurations drawn from the product measure, and the monotone coupling.

Vertex ``x`` of trial ``t`` owns the uniforms ``uniforms(seed, CONFIG, t, x)``:
the first decides the subset size (direct sampler) or plays the role of the
single coupling variable X(x) (coupling sampler); the next ``d`` rank the
slots for the direct sampler.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import rng
from .errors import DegreeMismatch, NotComparable
from .graph import GraphWindow
from .prob import ProbVector, dominates

MAX_COUPLING_DEGREE = 12


@dataclass(frozen=True, eq=False)
class Configuration:
    """Per-vertex chosen-neighbour subsets; bit i of ``masks[x]`` set iff x(i+1) is chosen."""

    masks: np.ndarray
    degree: int

    def __eq__(self, other):
        return (
            isinstance(other, Configuration)
            and self.degree == other.degree
            and np.array_equal(self.masks, other.masks)
        )

    def chosen(self, x: int) -> list[int]:
        m = int(self.masks[x])
        return [i for i in range(self.degree) if m >> i & 1]


def cumulative(p: ProbVector) -> np.ndarray:
    """Right-closed cumulative thresholds p_0, p_0+p_1, ..., with the last pinned to 1."""
    cum = np.array([math.fsum(p.entries[: k + 1]) for k in range(p.degree + 1)])
    cum[-1] = 1.0
    return cum


def _check_degree(window: GraphWindow, p: ProbVector) -> None:
    if p.degree != window.degree:
        raise DegreeMismatch(f"p has degree {p.degree}, window {window.graph_name} has {window.degree}")


def config_uniforms(window: GraphWindow, seed: int, trials) -> np.ndarray:
    """Uniforms for a batch of trials, shape (T, V, d + 1)."""
    trials = np.atleast_1d(np.asarray(trials, dtype=np.uint64))
    vertices = np.arange(window.n_vertices, dtype=np.uint64)
    return rng.uniforms(seed, rng.STREAM_CONFIG, trials[:, None], vertices[None, :], window.degree + 1)


def direct_masks(u: np.ndarray, p: ProbVector) -> np.ndarray:
    """Size by inverse CDF on u[..., 0], then a uniform subset of that size by selection sampling.

    Slot i is taken with probability (still needed) / (slots left), using
    u[..., 1 + i]; this yields every k-subset with probability 1 / C(d, k).
    """
    d = p.degree
    need = np.minimum(np.searchsorted(cumulative(p), u[..., 0], side="right"), d)
    masks = np.zeros(need.shape, dtype=np.int64)
    for i in range(d):
        take = u[..., 1 + i] * (d - i) < need
        masks |= take.astype(np.int64) << i
        need = need - take
    return masks


def sample_configs(window: GraphWindow, p: ProbVector, seed: int, trials) -> np.ndarray:
    """Masks for several trials at once, shape (T, V)."""
    _check_degree(window, p)
    return direct_masks(config_uniforms(window, seed, trials), p)


def sample_config(window: GraphWindow, p: ProbVector, seed: int, trial: int) -> Configuration:
    return Configuration(sample_configs(window, p, seed, [trial])[0], window.degree)


def unrank_permutations(ranks: np.ndarray, d: int) -> np.ndarray:
    """Lexicographic permutations of (0, ..., d-1) for 0-based ranks; shape ranks.shape + (d,)."""
    ranks = np.asarray(ranks, dtype=np.int64)
    flat = ranks.reshape(-1)
    avail = np.ones((flat.size, d), dtype=bool)
    out = np.empty((flat.size, d), dtype=np.int64)
    rem = flat.copy()
    for i in range(d):
        f = math.factorial(d - 1 - i)
        digit = rem // f
        rem = rem % f
        pos = np.argmax(np.cumsum(avail, axis=1) == (digit + 1)[:, None], axis=1)
        out[:, i] = pos
        avail[np.arange(flat.size), pos] = False
    return out.reshape(ranks.shape + (d,))


def eta_masks(x: np.ndarray, ps: Sequence[ProbVector]) -> list[np.ndarray]:
    """Coupled masks for each p from the same coupling variables ``x`` in [0, 1)."""
    d = ps[0].degree
    if d > MAX_COUPLING_DEGREE:
        raise ValueError(f"coupling sampler supports d <= {MAX_COUPLING_DEGREE}")
    nfact = math.factorial(d)
    scaled = np.asarray(x, dtype=np.float64) * nfact
    block = np.minimum(np.floor(scaled).astype(np.int64), nfact - 1)
    within = scaled - block
    perms = unrank_permutations(block, d)
    # prefix masks: prefix[..., k] = mask of the first k entries of the permutation
    bits = np.left_shift(np.int64(1), perms)
    prefix = np.concatenate([np.zeros(block.shape + (1,), dtype=np.int64), np.cumsum(bits, axis=-1)], axis=-1)
    out = []
    for p in ps:
        sizes = np.minimum(np.searchsorted(cumulative(p), within, side="right"), d)
        out.append(np.take_along_axis(prefix, sizes[..., None], axis=-1)[..., 0])
    return out


def _check_chain(ps: Sequence[ProbVector]) -> None:
    if not ps:
        raise ValueError("need at least one p")
    for a, b in zip(ps, ps[1:]):
        if a.degree != b.degree:
            raise DegreeMismatch("all p must share a degree")
        if not dominates(a, b):
            raise NotComparable(f"{a.entries} is not <= {b.entries}")


def coupled_sample_batch(window: GraphWindow, ps: Sequence[ProbVector], seed: int, trials) -> list[np.ndarray]:
    """Coupled masks for a batch of trials; one (T, V) array per p."""
    _check_chain(ps)
    _check_degree(window, ps[0])
    u = config_uniforms(window, seed, trials)
    return eta_masks(u[..., 0], ps)


def coupled_sample(window: GraphWindow, ps: Sequence[ProbVector], seed: int, trial: int) -> list[Configuration]:
    masks = coupled_sample_batch(window, ps, seed, [trial])
    return [Configuration(m[0], window.degree) for m in masks]


def eta_subset_law(entries: Sequence, d: int | None = None) -> dict[int, object]:
    """Exact law of the coupling's subset, by summing the lengths of its breakpoint intervals.

    Works in whatever number type ``entries`` holds (``Fraction`` gives exact
    arithmetic). Returns ``{mask: total measure}`` over all 2^d subsets.
    """
    entries = list(entries)
    d = len(entries) - 1 if d is None else d
    nfact = math.factorial(d)
    zero = entries[0] - entries[0]
    cum = [zero]
    for e in entries:
        cum.append(cum[-1] + e)
    law = {m: zero for m in range(1 << d)}
    for j, perm in enumerate(itertools.permutations(range(d))):
        mask = 0
        for k in range(d + 1):
            if k:
                mask |= 1 << perm[k - 1]
            lo = Fraction(j) + cum[k] if isinstance(zero, Fraction) else j + cum[k]
            law[mask] += (j + cum[k + 1] - lo) / nfact
    return law
