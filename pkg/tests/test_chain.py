import numpy as np
import pytest

import ergoscope as es
from ergoscope import zoo
from ergoscope.chain import OUT, geometric_prefixes


def test_enumeration_identity_on_integer_chain(two_state):
    assert es.enumerate_states(two_state, 5) == [0, 1]
    zm = zoo.birth_death_gamma(1.0)
    assert es.enumerate_states(zm.spec, 5) == [0, 1, 2, 3, 4]


def test_enumeration_level_major_multi_gamma():
    zm = zoo.multi_gamma(2, 2.0)
    enum = es.enumerate_states(zm.raw, 6)
    assert enum.states == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    assert enum.levels_closed == 3
    assert enum.prefix_sizes() == [1, 3, 6]


def test_enumeration_level_major_brussel():
    zm = zoo.brussel(sites=1)
    enum = es.enumerate_states(zm.raw, 3)
    assert enum.states == [((0, 0),), ((1, 0),), ((0, 1),)]


def test_enumeration_stops_at_level_boundary_and_reports():
    zm = zoo.multi_gamma(2, 2.0)
    enum = es.enumerate_states(zm.raw, 5)   # level 2 (3 states) does not fit
    assert enum.prefix_sizes() == [1, 3]
    assert enum.first_unenumerated_level == 2
    with pytest.raises(es.CapacityError) as exc:
        es.enumerate_states(zm.raw, 0)
    assert exc.value.first_unclosed_level == 0


def test_enumeration_deterministic():
    zm = zoo.brussel(sites=2)
    a = es.enumerate_states(zm.raw, 50).states
    b = es.enumerate_states(zm.raw, 50).states
    assert a == b


def test_embedded_kernel_rows():
    spec = es.GeneratorSpec(row_of=lambda i: [(1, 2.0), (2, 3.0)] if i == 0
                            else [(0, 1.0)], name="toy")
    kern = es.embedded_kernel(spec)
    cols, probs = kern.row(0)
    assert dict(zip(cols, probs)) == {1: 0.4, 2: 0.6}
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_embedded_kernel_catastrophe_row():
    zm = zoo.catastrophe("constant")
    kern = es.embedded_kernel(zm.spec)
    cols, probs = kern.row(3)
    row = dict(zip(cols, probs))
    assert row[4] == pytest.approx(0.8)
    assert row[0] == pytest.approx(0.2)


def test_embedded_kernel_rejects_discrete_and_absorbing():
    dspec = es.GeneratorSpec(row_of=lambda i: [(1 - i, 1.0)], kind="discrete",
                             n_states=2)
    with pytest.raises(es.ModelError):
        es.embedded_kernel(dspec)
    absorbing = es.GeneratorSpec(row_of=lambda i: [] if i == 1 else [(1, 1.0)],
                                 n_states=2)
    kern = es.embedded_kernel(absorbing)
    with pytest.raises(es.ModelError):
        kern.row(1)


def test_generator_row_validation():
    bad_rate = es.GeneratorSpec(row_of=lambda i: [(i + 1, -1.0)])
    with pytest.raises(es.ModelError):
        bad_rate.row(0)
    self_loop = es.GeneratorSpec(row_of=lambda i: [(i, 1.0)])
    with pytest.raises(es.ModelError):
        self_loop.row(0)
    declared = es.GeneratorSpec(row_of=lambda i: [(i + 1, 1.0)],
                                total_rate_of=lambda i: 2.0)
    with pytest.raises(es.ModelError):
        declared.row(0)
    # declared rates matching the row sum to 1e-12 relative pass
    ok = es.GeneratorSpec(row_of=lambda i: [(i + 1, 3.0)],
                          total_rate_of=lambda i: 3.0 * (1 + 1e-13))
    assert ok.total_rate(0) == pytest.approx(3.0)


def test_discrete_rows_must_sum_to_one():
    bad = es.GeneratorSpec(row_of=lambda i: [(1 - i, 0.5)], kind="discrete",
                           n_states=2)
    with pytest.raises(es.ModelError):
        bad.row(0)


def test_truncated_system_catastrophe_example():
    zm = zoo.catastrophe("constant")
    system = es.build_truncated_system(zm.spec, (0,), 2)
    A = system.A.toarray()
    assert A == pytest.approx(np.array([[0.0, 2.0 / 3.0], [0.0, 0.0]]))
    assert system.g == pytest.approx(np.array([1.0 / 3.0, 0.25]))


def test_truncated_system_exponential_two_state(two_state):
    system = es.build_truncated_system(two_state, (0,), 1,
                                       kind="exponential", lam=0.5)
    assert system.A.toarray() == pytest.approx(np.zeros((1, 1)))
    assert system.g == pytest.approx(np.array([2.0]))


def test_truncated_system_degenerate_no_unknowns(two_state):
    system = es.build_truncated_system(two_state, (0,), 0)
    assert system.n_unknowns == 0


def test_truncated_system_validation(two_state):
    with pytest.raises(es.ModelError):
        es.build_truncated_system(two_state, (5,), 1)
    with pytest.raises(es.NumericsError):
        es.build_truncated_system(two_state, (0,), 1,
                                  kind="exponential", lam=1.5)


def test_prefix_stability():
    zm = zoo.birth_death_gamma(1.5)
    cache = es.RowCache(zm.spec)
    small = es.build_truncated_system(cache, (0,), 16)
    big = es.build_truncated_system(cache, (0,), 64)
    ns = small.n_unknowns
    A_small = small.A.toarray()
    A_big = big.A.toarray()[:ns, :ns]
    assert A_small == pytest.approx(A_big, abs=0)
    assert small.g == pytest.approx(big.g[:ns], abs=0)


def test_out_of_prefix_targets_count_toward_rate():
    zm = zoo.multi_gamma(2, 2.0)
    spec, enum = zm.indexed_spec(6)
    cache = es.RowCache(spec)
    # boundary state (2,0): up-moves leave the prefix but load the total rate
    idx = enum.index_of[(2, 0)]
    assert any(j == OUT for j in cache.cols(idx))
    raw_rates = dict(zm.raw.row_of((2, 0)))
    assert cache.q(idx) == pytest.approx(sum(raw_rates.values()))


def test_geometric_prefixes():
    sizes = list(range(1, 200))
    picks = geometric_prefixes(sizes)
    vals = [p + 1 for p in picks]
    # geometric growth except possibly the appended final prefix
    assert all(b >= 2 * a for a, b in zip(vals[:-1], vals[1:]) if b != vals[-1])
    assert picks[-1] == 198
    assert vals[0] >= 8


def test_truncated_systems_are_substochastic():
    zm = zoo.birth_death_gamma(1.5)
    cache = es.RowCache(zm.spec)
    for kind, kw in [("ordinary", {}), ("ladder", {"source": np.ones(65),
                                                   "order": 1})]:
        system = es.build_truncated_system(cache, (0,), 64, kind=kind, **kw)
        A = system.A
        assert A.data.min() >= 0.0 and A.data.max() <= 1.0
        rowsums = np.asarray(A.sum(axis=1)).ravel()
        assert rowsums.max() <= 1.0 + 1e-12
