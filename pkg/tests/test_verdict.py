import numpy as np
import pytest

from ergoscope import DEFAULT_RULE, VerdictRule, boundedness_verdict
from ergoscope.verdict import running_max


def test_constant_sequence_converges():
    v = boundedness_verdict([2.0, 2.0, 2.0, 2.0, 2.0])
    assert v.converged
    assert v.estimate == pytest.approx(2.0)
    assert v.evidence["mode"] == "plateau"


def test_geometric_growth_diverges():
    v = boundedness_verdict([2.0, 4.0, 8.0, 16.0, 32.0])
    assert v.diverging
    assert v.descriptor == "geometric"


def test_harmonic_partial_sums_diverge_logarithmically():
    s = np.cumsum(1.0 / np.arange(1, 2**17 + 1))
    windows = s[[2**k - 1 for k in range(4, 18)]]
    v = boundedness_verdict(windows)
    assert v.diverging
    assert v.descriptor == "logarithmic"


def test_geometric_contraction_extrapolates():
    # s_k = 1 - 2^-k approaches 1 at ratio 1/2 per step
    s = 1.0 - 0.5 ** np.arange(1, 12)
    v = boundedness_verdict(s)
    assert v.converged
    assert v.evidence["mode"] == "contraction"
    assert v.estimate == pytest.approx(1.0, abs=1e-3)


def test_slowly_shrinking_increments_are_inconclusive():
    # increments shrink too slowly to extrapolate, too fast to diverge
    deltas = 0.88 ** np.arange(12)
    v = boundedness_verdict(np.cumsum(deltas))
    assert v.state == "inconclusive"


def test_overflow_is_divergence():
    v = boundedness_verdict([1.0, 2.0, np.inf, np.inf])
    assert v.diverging
    assert v.descriptor == "overflow"


def test_short_sequence_rejected():
    with pytest.raises(ValueError):
        boundedness_verdict([1.0, 2.0])


def test_decreasing_sequence_rejected():
    with pytest.raises(ValueError):
        boundedness_verdict([3.0, 2.0, 1.0])


def test_verdict_monotone_under_extension():
    # extending a cleanly converging sweep never flips it to diverging
    s = 5.0 - 4.0 * 0.5 ** np.arange(1, 16)
    states = []
    for k in range(5, len(s) + 1):
        states.append(boundedness_verdict(s[:k]).state)
    assert "diverging" not in states
    assert states[-1] == "converged"


def test_rule_is_configurable():
    rule = VerdictRule(tol_conv=0.5)
    v = boundedness_verdict([1.0, 1.2, 1.21, 1.211], rule)
    assert v.converged


def test_running_max_envelope():
    assert running_max([1.0, 0.5, 2.0, 1.5]).tolist() == [1.0, 1.0, 2.0, 2.0]
