"""Closed forms, tree mean matrices and thresholds, and sufficient-condition checkers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np

from .errors import DegreeMismatch, KOutOfRange, P2IsOne
from .graph import catalog_entry
from .prob import ProbVector, b_value, pair_edge_constants

Real = Union[float, Fraction]

REPEATED_ROOT_TOL = 1e-12


def _require_line(p: ProbVector) -> None:
    if p.degree != 2:
        raise DegreeMismatch(f"the line has d = 2, got p of degree {p.degree}")


@dataclass(frozen=True)
class T2Chi:
    chi: float
    chi_tilde: float


def t2_chi(p: ProbVector) -> T2Chi:
    """Mean weak and strong cluster sizes on the line."""
    _require_line(p)
    p0, p1, p2 = p.entries
    if p2 >= 1.0:
        raise P2IsOne("p_2 = 1: every cluster is infinite")
    chi = 8.0 * (1.0 + p0) / (2.0 * p0 + p1) ** 2 - 3.0
    chi_tilde = (2.0 * p2 + p1) ** 2 / (2.0 * (1.0 - p2)) + 1.0
    return T2Chi(chi, chi_tilde)


def t2_first_step(p: ProbVector) -> float:
    """P(0 ~ 1) for the weak relation on the line."""
    p0, p1, p2 = p.entries
    return (p1 / 2 + p2) + (p0 + p1 / 2) * (p1 / 2 + p2)


def t2_connection(p: ProbVector, n: int, mode: str = "weak") -> float:
    """P(0 connected to n) on the line; weak by the three-term recurrence, strong in closed form."""
    _require_line(p)
    if n < 0:
        raise ValueError("n must be >= 0")
    p0, p1, p2 = p.entries
    if mode == "strong":
        if n == 0:
            return 1.0
        return (p2 + p1 / 2) ** 2 * p2 ** (n - 1)
    if mode != "weak":
        raise ValueError(f"unknown mode {mode!r}")
    lin = p1 + p2
    const = (p1 / 2) ** 2 - p0 * p2
    prev, cur = 1.0, t2_first_step(p)
    if n == 0:
        return prev
    for _ in range(n - 1):
        prev, cur = cur, lin * cur - const * prev
    return cur


def t2_connection_closed(p: ProbVector, n: int) -> float:
    """Weak P(0 ~ n) from the characteristic roots of the recurrence."""
    _require_line(p)
    pc = pair_edge_constants(p)
    a, b = pc.alpha, pc.beta
    p1 = t2_first_step(p)
    if n == 0:
        return 1.0
    if abs(a - b) < REPEATED_ROOT_TOL:
        if a == 0.0:
            return 0.0
        slope = p1 / a - 1.0
        return (1.0 + slope * n) * a**n
    return path_open_probability(a, b, p1, n)


def _h(a: float, b: float, n: int) -> float:
    """(a^n - b^n) / (a - b), summed directly when the roots are close."""
    if n <= 0:
        return 0.0
    if abs(a - b) > 1e-3 * max(abs(a), abs(b)):
        return (a**n - b**n) / (a - b)
    return math.fsum(a**i * b ** (n - 1 - i) for i in range(n))


def path_open_probability(alpha: float, beta: float, first: float, n: int) -> float:
    """(alpha^n (first - beta) - beta^n (first - alpha)) / (alpha - beta), stably."""
    if n == 0:
        return 1.0
    return first * _h(alpha, beta, n) - alpha * beta * _h(alpha, beta, n - 1)


@dataclass(frozen=True)
class MeanMatrix:
    mode: str
    entries: np.ndarray = field(repr=False)
    spectral_radius: Real

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]


def _check_unit(p: Real) -> None:
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p}")


def tree_weak_matrix(d: int, p: Real) -> MeanMatrix:
    """Four-type mean offspring matrix for (p_1, p_2) = (1 - p, p) on the d-regular tree.

    Types: 1 selects its parent only, 2 its parent and one child, 3 one child
    only, 4 two children only. Entry (j, i) is the mean number of type-j
    children attached to a type-i vertex.
    """
    if d < 3:
        raise ValueError("d must be >= 3")
    _check_unit(p)
    q = 1 - p
    a = q * (d - 1) / d
    b = 2 * p * (d - 1) / d
    c = p * (d - 2) / d
    m = np.array(
        [
            [a, a, a, a],
            [b, b, b, b],
            [0 * a, a, a, 2 * a],
            [0 * c, c, c, 2 * c],
        ],
        dtype=object if isinstance(p, Fraction) else np.float64,
    )
    return MeanMatrix("weak", m, tree_weak_radius(d, p))


def tree_weak_radius(d: int, p: float) -> float:
    p = float(p)
    disc = (3 - 2 * d) * p * p + 2 * (d - 1) ** 2 * p
    return ((d - 2) * p + (d - 1) + math.sqrt(max(disc, 0.0))) / d


def tree_weak_eigenvalues(d: int, p: float) -> tuple[float, float, float, float]:
    p = float(p)
    disc = math.sqrt(max((3 - 2 * d) * p * p + 2 * (d - 1) ** 2 * p, 0.0))
    mid = (d - 2) * p + (d - 1)
    return ((mid + disc) / d, (mid - disc) / d, 0.0, 0.0)


def tree_weak_threshold(d: int) -> float:
    if d < 3:
        raise ValueError("d must be >= 3")
    s = d * d - d - 1
    return 1.0 / (s + math.sqrt(s * s - (d - 1) ** 2))


def _check_k(d: int, k: int) -> None:
    if d < 3:
        raise ValueError("d must be >= 3")
    if not 2 <= k <= d - 1:
        raise KOutOfRange(f"k = {k} outside 2..{d - 1}")


def tree_strong_matrix(d: int, k: int, p: Real) -> MeanMatrix:
    """Two-type mean matrix for (p_k, p_{k+1}) = (1 - p, p); rank one, so rho is its trace."""
    _check_k(d, k)
    _check_unit(p)
    q = 1 - p
    m = np.array(
        [
            [q * k * (k - 1) / d, q * k * k / d],
            [p * (k + 1) * (k - 1) / d, p * (k + 1) * k / d],
        ],
        dtype=object if isinstance(p, Fraction) else np.float64,
    )
    return MeanMatrix("strong", m, k * (2 * p + k - 1) / d)


@dataclass(frozen=True)
class StrongThreshold:
    value: float
    exact: Fraction
    regime: str  # "interior", "supercritical_for_all_p", "critical_at_zero", "subcritical_for_all_p"

    @property
    def in_unit_interval(self) -> bool:
        return 0 < self.exact < 1


def tree_strong_threshold(d: int, k: int) -> StrongThreshold:
    _check_k(d, k)
    exact = Fraction(d - k * (k - 1), 2 * k)
    if exact < 0:
        regime = "supercritical_for_all_p"
    elif exact == 0:
        regime = "critical_at_zero"
    elif exact >= 1:
        regime = "subcritical_for_all_p"
    else:
        regime = "interior"
    return StrongThreshold(float(exact), exact, regime)


@dataclass(frozen=True)
class ConditionVerdict:
    conclusion: str  # theta_zero | theta_positive | inconclusive
    mode: str
    certificate: dict


def check_subcritical(p: ProbVector, lambda_g: float, mode: str = "weak") -> ConditionVerdict:
    """Path-counting certificate for theta = 0: lambda * alpha < 1 (weak), lambda * p2' < 1 (strong)."""
    if p.degree < 3:
        raise ValueError("needs d >= 3")
    if lambda_g < 1:
        raise ValueError("a connective constant is at least 1")
    pc = pair_edge_constants(p)
    if mode == "weak":
        name, factor = "alpha", pc.alpha
    elif mode == "strong":
        name, factor = "p2_prime", pc.p2_prime
    else:
        raise ValueError(f"unknown mode {mode!r}")
    product = lambda_g * factor
    ok = product < 1.0
    cert = {
        "lambda": lambda_g,
        name: factor,
        "product": product,
        "inequality": f"lambda * {name} < 1",
        "holds": ok,
    }
    return ConditionVerdict("theta_zero" if ok else "inconclusive", mode, cert)


def check_supercritical(p: ProbVector, lambda_dual: float, mode: str = "weak") -> ConditionVerdict:
    """Dual-contour certificate for theta > 0: lambda* b^2 < 1 (weak), lambda* b < 1 and p0+p1 < 1 (strong)."""
    if lambda_dual < 1:
        raise ValueError("a connective constant is at least 1")
    b = b_value(p)
    if mode == "weak":
        product = lambda_dual * b * b
        ok = product < 1.0
        ineq = "lambda_dual * b^2 < 1"
    elif mode == "strong":
        product = lambda_dual * b
        low = p[0] + p[1]
        ok = product < 1.0 and low < 1.0
        ineq = "lambda_dual * b < 1 and p0 + p1 < 1"
    else:
        raise ValueError(f"unknown mode {mode!r}")
    cert = {"lambda_dual": lambda_dual, "b": b, "product": product, "inequality": ineq, "holds": ok}
    if mode == "strong":
        cert["p0_plus_p1"] = low
    return ConditionVerdict("theta_positive" if ok else "inconclusive", mode, cert)


def dual_lambda_rows(d: int, k: int, lambda_dual: float, mode: str = "weak") -> bool:
    """d == k, or lambda* below (d/(d-k))^2 (weak) / d/(d-k) (strong)."""
    if not 2 <= k <= d:
        raise KOutOfRange(f"k = {k} outside 2..{d}")
    if d == k:
        return True
    ratio = Fraction(d, d - k)
    limit = ratio**2 if mode == "weak" else ratio
    if mode not in ("weak", "strong"):
        raise ValueError(f"unknown mode {mode!r}")
    if isinstance(lambda_dual, (int, Fraction)):
        return Fraction(lambda_dual) < limit
    return lambda_dual < float(limit)


def check_corollary_rows(d: int, d_star: int, k: int, mode: str = "weak") -> bool:
    """The dual-degree version: lambda* replaced by its bound d* - 1."""
    return dual_lambda_rows(d, k, d_star - 1, mode)


def check_catalog_rows(graph_name: str, k: int, mode: str = "weak") -> bool:
    """Like :func:`check_corollary_rows` but with the catalog's exact lambda* when it has one."""
    entry = catalog_entry(graph_name)
    if entry.dual_lambda_value is None:
        raise ValueError(f"{graph_name} has no dual graph in the catalog")
    return dual_lambda_rows(entry.degree, k, entry.dual_lambda_value, mode)
