import numpy as np
import pytest

from ergoscope import GeneratorSpec, RowCache


@pytest.fixture
def two_state():
    """Symmetric two-state chain with unit rates: all moments closed-form."""
    return GeneratorSpec(row_of=lambda i: [(1 - i, 1.0)], name="two_state",
                         n_states=2)


@pytest.fixture
def two_state_cache(two_state):
    return RowCache(two_state)


def random_finite_chain(rng: np.random.Generator, n_states: int):
    """Random irreducible conservative generator on <= n_states states.

    A directed cycle backbone guarantees irreducibility; extra sparse rates
    are sprinkled on top.
    """
    n = int(rng.integers(5, n_states + 1))
    rows = [[] for _ in range(n)]
    for i in range(n):
        entries = {(i + 1) % n: float(rng.uniform(0.2, 2.0))}
        for _ in range(int(rng.integers(0, 4))):
            j = int(rng.integers(0, n))
            if j != i:
                entries[j] = entries.get(j, 0.0) + float(rng.uniform(0.05, 3.0))
        rows[i] = sorted(entries.items())
    return GeneratorSpec(row_of=lambda i: rows[i], name=f"random_{n}",
                         n_states=n)
