"""Boundedness verdicts for monotone evidence sequences.

Sequences arrive sampled at geometrically growing truncation levels, so a
finite limit approached at rate N^-p shows increments shrinking geometrically
(ratio 2^-p per doubling), while log/linear divergence keeps increments
non-shrinking.  The rule classifies on the tail-window increments and never
claims more than the data supports: Inconclusive is a valid terminal answer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class VerdictRule:
    """Decision thresholds, all applied to tail windows.

    tol_conv    relative increment treated as a plateau
    tol_div     absolute increment floor for divergence
    ratio_conv  increment ratio below which the sequence is contracting
    ratio_div   increment ratio above which growth is non-shrinking
    """

    tol_conv: float = 1e-6
    tol_div: float = 1e-4
    ratio_conv: float = 0.85
    ratio_div: float = 0.9
    monotone_slack: float = 1e-12


DEFAULT_RULE = VerdictRule()


@dataclass
class Verdict:
    state: str                      # "converged" | "diverging" | "inconclusive"
    estimate: float | None = None   # limit estimate when converged
    descriptor: str | None = None   # growth descriptor when diverging
    evidence: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.state == "converged"

    @property
    def diverging(self) -> bool:
        return self.state == "diverging"

    def summary(self) -> str:
        if self.converged:
            return f"converged({self.estimate:.6g})"
        if self.diverging:
            return f"diverging({self.descriptor})"
        return "inconclusive"


def boundedness_verdict(seq, rule: VerdictRule = DEFAULT_RULE) -> Verdict:
    """Classify a nondecreasing sequence as converged/diverging/inconclusive.

    Converged: the last two relative increments are below ``tol_conv``
    (plateau), or the last three increment ratios are below ``ratio_conv``
    (geometric contraction; the limit is then estimated by geometric
    extrapolation).  Diverging: the last three increments all exceed
    ``tol_div`` and the last two ratios stay above ``ratio_div``; overflow
    to non-finite values is divergence outright.
    """
    s = np.asarray(seq, dtype=float)
    if len(s) < 3:
        raise ValueError("need at least 3 sequence points for a verdict")
    finite = np.isfinite(s)
    if not finite.all():
        k = int(np.argmin(finite))
        return Verdict("diverging", descriptor="overflow",
                       evidence={"first_nonfinite_index": k})
    d = np.diff(s)
    if d.min() < -rule.monotone_slack * (1.0 + abs(s[-1])):
        raise ValueError("sequence is not nondecreasing")
    d = np.maximum(d, 0.0)
    rel = d / (1.0 + np.abs(s[1:]))
    evidence = {
        "tail_values": s[-4:].tolist(),
        "tail_increments": d[-3:].tolist(),
        "tail_rel_increments": rel[-2:].tolist(),
    }

    if rel[-1] < rule.tol_conv and rel[-2] < rule.tol_conv:
        return Verdict("converged", estimate=float(s[-1]),
                       evidence={**evidence, "mode": "plateau"})

    ratios = None
    if len(d) >= 2:
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = d[1:] / d[:-1]
        evidence["tail_ratios"] = ratios[-3:].tolist()

    if (len(d) >= 4 and np.all(d[-3:] > 0)
            and np.all(ratios[-3:] <= rule.ratio_conv)):
        r = float(np.clip(ratios[-1], 0.0, rule.ratio_div))
        est = float(s[-1] + d[-1] * r / (1.0 - r))
        return Verdict("converged", estimate=est,
                       evidence={**evidence, "mode": "contraction",
                                 "contraction_ratio": r})

    if (len(d) >= 3 and np.all(d[-3:] >= rule.tol_div)
            and len(ratios) >= 2 and np.all(ratios[-2:] >= rule.ratio_div)):
        mean_ratio = float(np.mean(ratios[-2:]))
        descriptor = "geometric" if mean_ratio >= 1.25 else "logarithmic"
        return Verdict("diverging", descriptor=descriptor,
                       evidence={**evidence, "mean_ratio": mean_ratio})

    return Verdict("inconclusive", evidence=evidence)


def running_max(seq) -> np.ndarray:
    """Monotone envelope of an arbitrary statistic (its prefix suprema)."""
    return np.maximum.accumulate(np.asarray(seq, dtype=float))
