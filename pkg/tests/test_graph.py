import math

import numpy as np
import pytest

from dvperc.errors import RadiusTooLarge, RadiusTooSmall, UnknownGraph
from dvperc.graph import HONEYCOMB_LAMBDA, build_window, catalog_entry, count_saw, lambda_estimate

GRAPHS = ["line", "square", "triangular", "hexagonal", "hypercube:1", "hypercube:3", "tree:3", "tree:5"]


def test_window_examples():
    w = build_window("square", 2)
    assert w.n_vertices == 13 and w.shell_sizes() == [1, 4, 8]
    assert build_window("tree:3", 2).n_vertices == 10
    w = build_window("line", 5)
    assert w.n_vertices == 11
    for v, x in enumerate(w.coords):
        if abs(x) < 5:
            assert [w.coords[y] for y in w.neighbors[v]] == [x + 1, x - 1]


@pytest.mark.parametrize("name", GRAPHS)
def test_neighbour_symmetry_and_distances(name):
    w = build_window(name, 4)
    for v in range(w.n_vertices):
        for i, y in enumerate(w.neighbors[v]):
            if y >= 0:
                assert w.neighbors[y, w.reverse_slot[v, i]] == v
                assert abs(w.dist[v] - w.dist[y]) <= 1
            else:
                assert w.dist[v] == w.radius
        assert len(w.neighbors[v]) == w.degree


def test_shell_sizes():
    assert build_window("square", 6).shell_sizes()[1:] == [4 * n for n in range(1, 7)]
    assert build_window("hypercube:1", 6).shell_sizes()[1:] == [2] * 6
    assert build_window("tree:4", 5).shell_sizes()[1:] == [4 * 3 ** (n - 1) for n in range(1, 6)]
    assert build_window("hexagonal", 3).shell_sizes()[1:] == [3, 6, 9]
    assert build_window("triangular", 3).shell_sizes()[1:] == [6, 12, 18]


def test_windows_nest_as_id_prefixes():
    small, big = build_window("triangular", 3), build_window("triangular", 6)
    assert big.coords[: small.n_vertices] == small.coords


def test_saw_counts():
    sq = build_window("square", 6)
    assert [count_saw(sq, n) for n in range(1, 7)] == [4, 12, 36, 100, 284, 780]
    hx = build_window("hexagonal", 6)
    assert [count_saw(hx, n) for n in range(1, 7)] == [3, 6, 12, 24, 48, 90]
    tr = build_window("tree:3", 6)
    assert [count_saw(tr, n) for n in range(1, 7)] == [3 * 2 ** (n - 1) for n in range(1, 7)]
    assert count_saw(build_window("triangular", 3), 3) == 138


def test_saw_independent_of_radius():
    assert count_saw(build_window("square", 5), 5) == count_saw(build_window("square", 8), 5)


def test_saw_needs_radius():
    with pytest.raises(RadiusTooSmall):
        count_saw(build_window("square", 2), 3)


def test_lambda_estimates():
    for n in (1, 3, 6):
        est = lambda_estimate(build_window("tree:3", n), n)
        assert est.estimate == pytest.approx(min(2.0, (3 * 2 ** (n - 1)) ** (1 / n)))
        assert est.value == 2.0
    assert lambda_estimate(build_window("hexagonal", 4), 4).value == pytest.approx(math.sqrt(2 + math.sqrt(2)))
    sq = lambda_estimate(build_window("square", 6), 6)
    assert 2 < sq.value <= 3


def test_catalog():
    assert catalog_entry("square").dual_degree == 4
    tri = catalog_entry("triangular")
    assert tri.dual == "hexagonal" and tri.dual_degree == 3 and tri.dual_lambda_value == HONEYCOMB_LAMBDA
    hexa = catalog_entry("hexagonal")
    assert hexa.dual_degree == 6 and hexa.lambda_value == HONEYCOMB_LAMBDA
    for bad in ("cube", "tree", "tree:2", "hypercube:x", "square:3"):
        with pytest.raises(UnknownGraph):
            catalog_entry(bad)


def test_radius_cap():
    with pytest.raises(RadiusTooLarge):
        build_window("square", 50, max_vertices=100)
    with pytest.raises(ValueError):
        build_window("square", 0)


def test_ghost_slots_only_on_outer_shell():
    w = build_window("hexagonal", 5)
    inner = w.dist < w.radius
    assert np.all(w.neighbors[inner] >= 0)
