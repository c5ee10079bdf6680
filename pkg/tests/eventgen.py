"""Random finite-support events for fuzzing."""
from __future__ import annotations

import numpy as np

from dvperc.events import EventSpec, joint_states, table_event


def random_support(window, rng: np.random.Generator, size: int) -> tuple:
    return tuple(int(v) for v in rng.choice(window.n_vertices, size=size, replace=False))


def random_event(window, rng: np.random.Generator, max_size: int) -> EventSpec:
    """Arbitrary (not necessarily monotone) event given by a random truth table."""
    d = window.degree
    size = int(rng.integers(1, max_size + 1))
    support = random_support(window, rng, size)
    density = rng.uniform(0.1, 0.9)
    table = rng.random(1 << (d * size)) < density
    return table_event(support, table, d, f"random table on {support}")


def random_increasing_event(window, rng: np.random.Generator, max_size: int) -> EventSpec:
    """Up-set generated by a few random joint states: on iff some generator sits below."""
    d = window.degree
    size = int(rng.integers(1, max_size + 1))
    support = random_support(window, rng, size)
    states = joint_states(size, d, 0, 1 << (d * size))
    gens = states[rng.choice(states.shape[0], size=int(rng.integers(1, 4)))]
    table = np.zeros(states.shape[0], dtype=bool)
    for g in gens:
        table |= np.all((states & g) == g, axis=1)
    return table_event(support, table, d, f"up-set on {support}")


def random_direction(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.normal(size=d + 1)
    return v - v.mean()


def random_interior_p(rng: np.random.Generator, d: int) -> list:
    p = rng.dirichlet(np.ones(d + 1)) * 0.9 + 0.1 / (d + 1)
    return list(p / p.sum())
