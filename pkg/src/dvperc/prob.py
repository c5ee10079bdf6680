"""Choice-size distributions and the scalar constants derived from them.

A :class:`ProbVector` holds ``(p_0, ..., p_d)``: each site picks ``k`` of
its ``d`` neighbours with probability ``p_k``, uniformly among the
``C(d, k)`` subsets of that size.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import DegreeMismatch, NegativeEntry, NoPositiveSupport, Overflow, SumNotOne

INPUT_SUM_TOL = 1e-9
ORDER_SLACK = 1e-12


@dataclass(frozen=True)
class ProbVector:
    entries: tuple[float, ...]

    @property
    def degree(self) -> int:
        return len(self.entries) - 1

    def __getitem__(self, k: int) -> float:
        return self.entries[k]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def tail(self, i: int) -> float:
        """p_i + ... + p_d."""
        return math.fsum(self.entries[i:])

    def subset_weight(self, size: int) -> float:
        """Probability of one particular subset of the given size."""
        return self.entries[size] / math.comb(self.degree, size)


def make_prob_vector(entries: Sequence[float]) -> ProbVector:
    if len(entries) == 0:
        raise ValueError("entries must be non-empty")
    vals = [float(e) for e in entries]
    if any(not math.isfinite(v) for v in vals):
        raise ValueError("entries must be finite")
    for k, v in enumerate(vals):
        if v < 0:
            raise NegativeEntry(f"p_{k} = {v} < 0")
    total = math.fsum(vals)
    if abs(total - 1.0) > INPUT_SUM_TOL:
        raise SumNotOne(f"entries sum to {total!r}, expected 1")
    if total != 1.0:
        vals = [v / total for v in vals]
    return ProbVector(tuple(vals))


def as_prob_vector(p) -> ProbVector:
    return p if isinstance(p, ProbVector) else make_prob_vector(p)


def dominates(p: ProbVector, q: ProbVector) -> bool:
    """True iff ``p <= q``: every tail sum of ``p`` is at most that of ``q``."""
    if p.degree != q.degree:
        raise DegreeMismatch(f"degrees {p.degree} and {q.degree} differ")
    return all(p.tail(i) <= q.tail(i) + ORDER_SLACK for i in range(p.degree + 1))


def edge_choice_prob(p: ProbVector) -> float:
    """Probability that a site selects one fixed neighbour: sum_i p_i i/d."""
    d = p.degree
    return math.fsum(p[i] * i / d for i in range(1, d + 1))


def pair_choice_prob(p: ProbVector) -> float:
    """Probability that a site selects two fixed distinct neighbours."""
    d = p.degree
    if d < 2:
        return 0.0
    return math.fsum(p[i] * i * (i - 1) / (d * (d - 1)) for i in range(2, d + 1))


@dataclass(frozen=True)
class DecayConstants:
    c: float
    c_tilde: float
    a: float
    a_tilde: float


def weak_decay_prefactor(p: ProbVector) -> float:
    """The constant a(d, p) of the weak cluster-size bound (exponents as printed)."""
    d = p.degree
    if d < 2:
        raise ValueError("a(d, p) needs d >= 2")
    first = (2.0 * p[2] / (d * (d - 1))) ** 3
    second_base = math.fsum(p[i] * (d - i) * (d - i - 1) / (d * (d - 1)) for i in range(0, d - 1))
    third_base = math.fsum(p[i] * (d - i) / d for i in range(0, d))
    out = first
    for base, expo in ((second_base, 2 * d - 4), (third_base, d - 4)):
        if base == 0.0 and expo < 0:
            return math.inf
        out *= base ** expo
    return out


def strong_decay_prefactor(p: ProbVector) -> float:
    """The constant a~(d, p): squared minimum of successive size-ratio factors."""
    d = p.degree
    support = [j for j in range(1, d + 1) if p[j] > 0]
    if not support:
        raise NoPositiveSupport("a~ undefined: no p_j > 0 with j >= 1")
    k = support[0]
    terms = [1.0]
    for j in range(k, d):
        # a zero p_j means no configuration of that size exists to extend
        if p[j] == 0.0:
            continue
        terms.append(p[j + 1] / p[j] * (j + 1) / (d - j))
    return min(terms) ** 2


def decay_constants(p: ProbVector) -> DecayConstants:
    d = p.degree
    c = edge_choice_prob(p)
    c_tilde = c * pair_choice_prob(p) / d**2
    a = weak_decay_prefactor(p) if d >= 2 else math.nan
    a_tilde = strong_decay_prefactor(p)
    return DecayConstants(c=c, c_tilde=c_tilde, a=a, a_tilde=a_tilde)


@dataclass(frozen=True)
class PairEdgeConstants:
    p0_prime: float
    p1_prime: float
    p2_prime: float
    q: float
    alpha: float
    beta: float


def pair_edge_constants(p: ProbVector) -> PairEdgeConstants:
    """Two-edge marginals at one site and the roots of the weak path recurrence.

    For two distinct neighbours y, z of a site x: ``p0_prime`` is the chance x
    selects neither, ``p1_prime / 2`` that it selects y but not z, ``p2_prime``
    that it selects both. ``q`` is the chance that a given edge is weakly open.
    """
    d = p.degree
    if d < 2:
        raise ValueError("pair constants need d >= 2")
    dd = d * (d - 1)
    p0p = math.fsum(
        [p[0], p[1] * (d - 2) / d] + [p[i] * (d - i) * (d - i - 1) / dd for i in range(2, d - 1)]
    )
    half_p1p = math.fsum([p[1] / d] + [p[i] * i * (d - i) / dd for i in range(2, d)])
    p1p = 2.0 * half_p1p
    p2p = pair_choice_prob(p)
    miss = math.fsum(p[i] * (d - i) / d for i in range(d + 1))
    q = 1.0 - miss * miss
    mid = (p1p + p2p) / 2.0
    rad = math.sqrt(max((p0p + p1p / 2.0 + p2p / 4.0) * p2p, 0.0))
    return PairEdgeConstants(p0p, p1p, p2p, q, mid + rad, mid - rad)


def b_value(p: ProbVector) -> float:
    """max over i of (P(a site avoids i fixed neighbours))^(1/i), i = 1..d-1."""
    d = p.degree
    if d < 2:
        raise ValueError("b(p) needs d >= 2")
    best = 0.0
    for i in range(1, d):
        inner = 0.0
        for j in range(0, d - i + 1):
            prod = 1.0
            for k in range(i):
                prod *= ((d - k) - j) / (d - k)
            inner += p[j] * prod
        best = max(best, max(inner, 0.0) ** (1.0 / i))
    return min(best, 1.0)


SKELETON_LIMIT = 2**63 - 1


def skeleton_count(n_exterior: int, limit: int = SKELETON_LIMIT) -> int:
    """Labelled skeletons with ``n_exterior`` exterior vertices: (2n-2)!/(2^(n-1)(n-1)!).

    Here n = n_exterior - 1, so the value is the odd double factorial
    (2n-3)!!. Raises :class:`Overflow` once the count exceeds ``limit``.
    """
    if n_exterior < 3:
        raise ValueError("n_exterior must be >= 3")
    count = 1
    for factor in range(3, 2 * n_exterior - 4, 2):
        count *= factor
        if count > limit:
            raise Overflow(f"skeleton count for {n_exterior} exceeds {limit}")
    return count
