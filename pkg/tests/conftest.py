"""Independent brute-force oracles shared by the test modules.

Nothing here calls into the package's enumeration or clustering code: states
are explicit Python sets over integer line positions.
"""
from __future__ import annotations

import itertools
import math
import sys
from fractions import Fraction

import pytest

LINE_STATES = (frozenset(), frozenset({+1}), frozenset({-1}), frozenset({+1, -1}))


def line_state_weight(p, s) -> float:
    return p[len(s)] / math.comb(2, len(s))


def line_enumerate(p, positions):
    """Yield (weight, {position: chosen offsets}) over all joint states of the positions."""
    for combo in itertools.product(LINE_STATES, repeat=len(positions)):
        w = 1.0
        for s in combo:
            w *= line_state_weight(p, s)
        if w:
            yield w, dict(zip(positions, combo))


def line_edge_open(state, x, mode):
    """Edge (x, x+1) under a dict of chosen offsets."""
    a = +1 in state[x]
    b = -1 in state[x + 1]
    return (a or b) if mode == "weak" else (a and b)


def brute_line_connection(p, n, mode="weak") -> float:
    """P(0 connected to n) on the line: every edge between them must be open."""
    if n == 0:
        return 1.0
    total = 0.0
    for w, st in line_enumerate(p, list(range(n + 1))):
        if all(line_edge_open(st, x, mode) for x in range(n)):
            total += w
    return total


def closure_components(n_vertices, edges):
    """Components by repeated relaxation of reachability sets (no union-find)."""
    reach = [{v} for v in range(n_vertices)]
    changed = True
    while changed:
        changed = False
        for a, b in edges:
            if reach[a] != reach[b]:
                merged = reach[a] | reach[b]
                for v in merged:
                    if reach[v] != merged:
                        reach[v] = merged
                        changed = True
    return reach


def fraction_vectors(d, count, seed=0):
    """Deterministic random rational probability vectors of degree d."""
    import random

    rnd = random.Random(seed)
    out = []
    for _ in range(count):
        raw = [rnd.randint(0, 9) for _ in range(d + 1)]
        if sum(raw) == 0:
            raw[0] = 1
        tot = sum(raw)
        out.append([Fraction(r, tot) for r in raw])
    return out


@pytest.fixture(scope="session")
def line_oracle():
    return brute_line_connection


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
