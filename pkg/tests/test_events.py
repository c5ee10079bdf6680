import itertools

import numpy as np
import pytest

from dvperc import events as ev
from dvperc.errors import DirectionNotTangent, NotIncreasing, OffPairEdge, SimplexExit, SupportTooLarge
from dvperc.graph import build_window
from dvperc.prob import make_prob_vector as P

from conftest import line_edge_open, line_enumerate
from eventgen import random_direction, random_event, random_increasing_event, random_interior_p


@pytest.fixture(scope="module")
def line():
    return build_window("line", 2)


def test_exact_prob_examples(line):
    i = line.id_of
    for p in (0.0, 0.3, 0.7, 1.0):
        pv = P([0, 1 - p, p])
        assert ev.exact_prob(line, ev.everything(), pv) == 1.0
        weak = ev.edge_event(line, i(0), i(1))
        assert ev.exact_prob(line, weak, pv) == pytest.approx(1 - ((1 - p) / 2) ** 2, abs=1e-12)
        strong = ev.edge_event(line, i(-1), i(0), "strong")
        assert ev.exact_prob(line, strong, pv) == pytest.approx(((1 + p) / 2) ** 2, abs=1e-12)


def test_exact_prob_matches_set_enumeration(line):
    i = line.id_of
    pv = P([0.2, 0.5, 0.3])
    event = ev.connect_event(line, i(-2), i(1), "weak")
    oracle = sum(
        w for w, st in line_enumerate(pv, [-2, -1, 0, 1, 2]) if all(line_edge_open(st, x, "weak") for x in (-2, -1, 0))
    )
    assert ev.exact_prob(line, event, pv) == pytest.approx(oracle, abs=1e-14)


def test_reach_event_matches_two_sided_formula(line):
    from dvperc.exact import t2_connection

    pv = P([0.1, 0.6, 0.3])
    want = 2 * t2_connection(pv, 2) - t2_connection(pv, 4)
    assert ev.exact_prob(line, ev.reach_event(line, 2), pv) == pytest.approx(want, abs=1e-14)


def test_exact_prob_agrees_with_sampling():
    w = build_window("line", 1)
    rng = np.random.default_rng(2)
    pv = P([0.25, 0.4, 0.35])
    for k in range(20):
        event = random_event(w, rng, 3)
        exact = ev.exact_prob(w, event, pv)
        freq, se = ev.sample_frequency(w, event, pv, 100_000, k)
        assert abs(freq - exact) <= 3 * max(se, 1e-12)


def test_support_bound():
    w = build_window("square", 2)
    wide = ev.EventSpec(tuple(range(7)), lambda s: np.ones(s.shape[0], dtype=bool))
    with pytest.raises(SupportTooLarge):
        ev.exact_prob(w, wide, P([0.2] * 5))


def test_fkg_gap_examples(line):
    i = line.id_of
    a = ev.edge_event(line, i(-1), i(0))
    b = ev.edge_event(line, i(0), i(1))
    pv = P([0.1, 0.5, 0.4])
    pa = ev.exact_prob(line, a, pv)
    assert ev.fkg_gap(line, a, a, pv) == pytest.approx(pa * pa - pa, abs=1e-14)
    assert ev.fkg_gap(line, a, b, P([0, 1, 0])) == pytest.approx(1 / 16, abs=1e-12)
    sa = ev.edge_event(line, i(-1), i(0), "strong")
    sb = ev.edge_event(line, i(0), i(1), "strong")
    assert ev.fkg_gap(line, sa, sb, P([0, 1, 0])) == pytest.approx(1 / 16, abs=1e-12)


def test_box_examples(line):
    i = line.id_of
    a = ev.choose_event(line, i(0), i(1))
    pv = P([0, 1, 0])
    r = ev.box_prob(line, a, ev.everything(), pv)
    assert r.box == pytest.approx(ev.exact_prob(line, a, pv))
    r = ev.box_prob(line, a, a, pv)
    assert r.box == 0.0 and r.product == 0.25 and r.holds


def test_box_of_events_on_disjoint_supports_is_intersection(line):
    i = line.id_of
    a = ev.choose_event(line, i(-1), i(0))
    b = ev.choose_event(line, i(1), i(2))
    pv = P([0.3, 0.3, 0.4])
    r = ev.box_prob(line, a, b, pv)
    assert r.box == pytest.approx(r.product, abs=1e-14)


def test_box_indicator_against_definition():
    # direct implementation of the certificate definition over explicit K and completions
    w = build_window("line", 1)
    rng = np.random.default_rng(5)
    d = 2
    for _ in range(10):
        a = random_event(w, rng, 2)
        b = random_event(w, rng, 2)
        sup = ev.union_support(a.support, b.support)
        states = list(itertools.product(range(4), repeat=len(sup)))
        fa = {s: bool(a.on(sup)(np.array([s]))[0]) for s in states}
        fb = {s: bool(b.on(sup)(np.array([s]))[0]) for s in states}

        def certified(f, s, keep):
            return all(f[t] for t in states if all(t[j] == s[j] for j in keep))

        ta = ev.truth_tensor(ev.EventSpec(sup, a.on(sup)), d)
        tb = ev.truth_tensor(ev.EventSpec(sup, b.on(sup)), d)
        box = ev.box_indicator(ta, tb)
        for s in states:
            want = any(
                certified(fa, s, k) and certified(fb, s, [j for j in range(len(sup)) if j not in k])
                for r in range(len(sup) + 1)
                for k in itertools.combinations(range(len(sup)), r)
            )
            assert box[s] == want


def test_reimer_fuzz():
    rng = np.random.default_rng(7)
    for w, m in ((build_window("line", 3), 3), (build_window("square", 1), 2)):
        for _ in range(40):
            pv = P(random_interior_p(rng, w.degree))
            r = ev.box_prob(w, random_event(w, rng, m), random_event(w, rng, m), pv)
            assert r.holds


def test_russo_examples(line):
    i = line.id_of
    a = ev.choose_event(line, i(0), i(1))
    r = ev.russo_derivative(line, a, P([1 / 3] * 3), [-1, 0, 1])
    assert r.formula_value == pytest.approx(1.0, abs=1e-12)
    assert r.finite_difference == pytest.approx(1.0, abs=1e-9)
    z = ev.russo_derivative(line, a, P([1 / 3] * 3), [0, 0, 0])
    assert z.formula_value == 0 and z.finite_difference == 0
    o = ev.russo_derivative(line, ev.everything(), P([1 / 3] * 3), [1, -2, 1])
    assert o.formula_value == 0


def test_russo_errors_and_faces(line):
    i = line.id_of
    a = ev.edge_event(line, i(0), i(1))
    with pytest.raises(DirectionNotTangent):
        ev.russo_derivative(line, a, P([1 / 3] * 3), [1, 0, 1])
    with pytest.raises(SimplexExit):
        ev.russo_derivative(line, a, P([0, 1, 0]), [-1, 1, 0])
    r = ev.russo_derivative(line, a, P([0, 1, 0]), [0, -1, 1])
    assert r.scheme == "forward"
    assert abs(r.formula_value - r.finite_difference) <= 1e-6


def test_russo_fuzz():
    rng = np.random.default_rng(11)
    for w, m in ((build_window("line", 2), 4), (build_window("square", 1), 2)):
        for _ in range(25):
            pv = P(random_interior_p(rng, w.degree))
            r = ev.russo_derivative(w, random_event(w, rng, m), pv, random_direction(rng, w.degree))
            assert abs(r.formula_value - r.finite_difference) <= 1e-6


def test_increasing_derivative_examples(line):
    i = line.id_of
    edge = ev.edge_event(line, i(0), i(1))
    assert ev.increasing_derivative(line, edge, P([0, 0.7, 0.3]), 1) == pytest.approx(0.35, abs=1e-12)
    choose = ev.choose_event(line, i(0), i(1))
    assert ev.increasing_derivative(line, choose, P([0, 0.7, 0.3]), 1) == pytest.approx(0.5, abs=1e-12)
    assert ev.increasing_derivative(line, ev.everything(), P([0, 0.7, 0.3]), 1) == 0


def test_increasing_derivative_guards(line):
    i = line.id_of
    edge = ev.edge_event(line, i(0), i(1))
    with pytest.raises(NotIncreasing):
        ev.increasing_derivative(line, ev.negation(edge), P([0, 0.7, 0.3]), 1)
    with pytest.raises(OffPairEdge):
        ev.increasing_derivative(line, edge, P([0.1, 0.6, 0.3]), 1)


def test_increasing_derivative_equals_tangent_russo():
    rng = np.random.default_rng(13)
    for w in (build_window("line", 2), build_window("square", 1)):
        d = w.degree
        for _ in range(10):
            event = random_increasing_event(w, rng, 3 if d == 2 else 2)
            k = int(rng.integers(0, d))
            t = rng.uniform(0.05, 0.95)
            entries = [0.0] * (d + 1)
            entries[k], entries[k + 1] = 1 - t, t
            direction = [0.0] * (d + 1)
            direction[k], direction[k + 1] = -1.0, 1.0
            pv = P(entries)
            pair_value = ev.increasing_derivative(w, event, pv, k)
            russo = ev.russo_derivative(w, event, pv, direction).formula_value
            assert pair_value == pytest.approx(russo, abs=1e-10)
