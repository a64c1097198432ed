"""Ergodicity-hierarchy reports assembled from monotone sweep evidence.

Tiers, weakest to strongest: recurrent, ergodic (= first moments), higher
polynomial moments, exponential, strong.  Each tier gets a boundedness
verdict on its defining statistic; implications are then propagated along
the hierarchy (a strong "yes" implies everything below, a low "no" refutes
everything above) without ever overwriting raw evidence -- contradictions
raise consistency flags instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain import GeneratorSpec, RowCache, normalize_target_set
from .moments import (ExpMomentCurve, default_schedule, exp_moment_scan,
                      sweep_series_verdict, truncation_sweep)
from .verdict import DEFAULT_RULE, Verdict, VerdictRule

YES, NO, UNKNOWN = "yes", "no", "inconclusive"


@dataclass
class TierResult:
    name: str
    holds: str = UNKNOWN
    grade: str = "evidence"        # evidence | certificate | implied | none
    verdict: Verdict | None = None
    statistic: str = ""
    levels: list = field(default_factory=list)
    values: list = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "grade": self.grade,
            "verdict": None if self.verdict is None else {
                "state": self.verdict.state,
                "estimate": self.verdict.estimate,
                "descriptor": self.verdict.descriptor,
            },
            "statistic": self.statistic,
            "levels": list(self.levels),
            "values": [_json_float(v) for v in self.values],
            "notes": list(self.notes),
        }


def _json_float(v):
    if isinstance(v, str):
        return v
    v = float(v)
    if np.isinf(v):
        return "inf"
    return v


@dataclass
class ErgodicityReport:
    model: str
    kind: str
    H: tuple[int, ...]
    L: int
    schedule: list[int]
    tiers: dict[str, TierResult]
    consistency_ok: bool = True
    consistency_messages: list[str] = field(default_factory=list)
    scan: dict = field(default_factory=dict)

    def tier_order(self) -> list[str]:
        order = ["recurrent", "ergodic"]
        order += [f"ergodic_{l}" for l in range(2, self.L + 1)]
        order += ["exponential", "strong"]
        return [t for t in order if t in self.tiers]

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "model": self.model,
            "kind": self.kind,
            "H": list(self.H),
            "L": self.L,
            "schedule": list(self.schedule),
            "tiers": {name: self.tiers[name].to_dict()
                      for name in self.tier_order()},
            "consistency": {"ok": self.consistency_ok,
                            "messages": list(self.consistency_messages)},
            "scan": self.scan,
        }


def verdict_to_holds(v: Verdict, *, invert: bool = False) -> str:
    """Converged statistic = property holds (or fails, when inverted)."""
    if v.converged:
        return NO if invert else YES
    if v.diverging:
        return YES if invert else NO
    return UNKNOWN


def _tier_from_sweep(name: str, statistic: str, levels, values, cache,
                     rule: VerdictRule, note_cap: str) -> TierResult:
    v = sweep_series_verdict(values, cache, list(levels), rule)
    tier = TierResult(name=name, holds=verdict_to_holds(v), verdict=v,
                      statistic=statistic, levels=list(levels),
                      values=list(values))
    if tier.holds == UNKNOWN:
        tier.notes.append(note_cap)
    return tier


def exponential_tier(curve: ExpMomentCurve, rule: VerdictRule) -> TierResult:
    """Exponential tier from a rate scan.

    Divergence at every scanned rate is negative evidence.  A bounded sweep
    at some rate is NOT taken as positive evidence on its own: with a finite
    truncation cap, a genuinely non-exponential chain shows a pseudo-boundary
    that slides toward rate zero as the cap grows, indistinguishable from a
    true threshold at fixed budget.  Positive calls therefore only arrive via
    the strong-tier implication during propagation.
    """
    states = curve.verdict_states()
    tier = TierResult(name="exponential",
                      statistic="scaled_exp_moment_at_target",
                      levels=[float(l) for l in curve.lambdas],
                      values=[s for s in states])
    diverging = [s == "diverging" for s in states]
    converged = [s == "converged" for s in states]
    if all(diverging):
        tier.holds = NO
        tier.verdict = Verdict("diverging", descriptor="at-every-scanned-rate")
    else:
        tier.holds = UNKNOWN
        tier.notes.append(
            "scan cannot certify a positive exponential threshold at this "
            "truncation cap")
        if any(converged):
            tier.notes.append(
                "bounded sweep at some scanned rate (suggestive only)")
        if any(diverging):
            k = max(i for i, d in enumerate(diverging) if d)
            tier.notes.append(
                f"divergence visible down to rate {curve.lambdas[k]:.6g}")
    if not curve.certified:
        tier.notes.append("minimum total rate not certified on the prefix")
    return tier


def uniform_return_fast_path(spec, H=None, prefix: int = 1 << 14) -> dict:
    """Fast-path check: a uniform positive rate into the target set.

    For a recurrent chain, a positive infimum of the direct rates into the
    target set forces strong ergodicity (returns are dominated by a single
    exponential clock).  The infimum is only measurable on the enumerated
    prefix, so the result carries a certification heuristic like the one
    used for the minimum total rate.
    """
    cache = spec if isinstance(spec, RowCache) else RowCache(spec)
    H = normalize_target_set(H)
    hset = set(H)
    n = prefix
    if cache.spec.n_states is not None:
        n = min(n, cache.spec.n_states)
    into = np.zeros(n)
    for i in range(n):
        if i in hset:
            into[i] = np.inf
            continue
        for j, r in zip(cache.cols(i), cache.rates(i)):
            if int(j) in hset:
                into[i] += r
    vals = into[np.isfinite(into)]
    if len(vals) == 0:
        return {"min_rate_into_target": np.inf, "positive": True,
                "certified": True, "prefix": n}
    m = float(vals.min())
    split = max(1, int(0.9 * len(vals)))
    certified = bool(len(vals) < 2 or vals[split:].min(initial=np.inf)
                     > m * (1.0 + 1e-12) or np.argmin(vals) < split)
    if cache.spec.n_states is not None and n >= cache.spec.n_states:
        certified = True
    return {"min_rate_into_target": m, "positive": m > 0.0,
            "certified": certified, "prefix": n}


@dataclass
class TransienceCertificateReport:
    """Outcome of checking a transience certificate on the embedded chain."""

    holds: bool
    max_violation: float
    checked_rows: int
    skipped_rows: int
    min_z: float
    z0: float
    strict_ok: bool

    @property
    def certifies_transience(self) -> bool:
        return self.holds and self.strict_ok


def transience_certificate_check(spec, z, tol: float = 1e-9
                                 ) -> TransienceCertificateReport:
    """Verify sum_j P_ij z_j <= z_i (i >= 1) on the prefix covered by ``z``
    plus the strict condition -inf < min z < z_0.

    Rows whose targets leave the prefix are skipped and counted; a pass is
    transience evidence for the embedded chain on the checked region.
    """
    cache = spec if isinstance(spec, RowCache) else RowCache(spec)
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValueError("certificate must be finite-valued")
    n = len(z)
    discrete = cache.spec.kind == "discrete"
    checked = skipped = 0
    max_viol = 0.0
    for i in range(1, n):
        cols = cache.cols(i)
        rates = cache.rates(i)
        if np.any(cols >= n) or np.any(cols < 0):
            skipped += 1
            continue
        probs = rates if discrete else rates / cache.q(i)
        lhs = float(probs @ z[cols])
        max_viol = max(max_viol, lhs - z[i])
        checked += 1
    scale = 1.0 + float(np.max(np.abs(z)))
    strict = bool(z.min() < z[0] - tol * scale)
    return TransienceCertificateReport(
        holds=max_viol <= tol * scale, max_violation=max_viol,
        checked_rows=checked, skipped_rows=skipped,
        min_z=float(z.min()), z0=float(z[0]), strict_ok=strict)


def classify(spec: GeneratorSpec, H=None, L: int = 1, *,
             schedule=None, rule: VerdictRule = DEFAULT_RULE,
             lambda_grid_size: int = 20, solver: str = "direct",
             single_birth=None, sb_depth: int | None = None,
             transience_z=None, run_exp_scan: bool = True) -> ErgodicityReport:
    """Full hierarchy report for one chain.

    The ordinary sweep feeds both the ergodic tier (target-state values) and
    the strong tier (interior maxima); ladder sweeps cover orders 2..L; the
    rate scan covers the exponential tier.  The recurrent tier is delegated
    to the single-birth explicit statistic when ``single_birth`` is given,
    to a user transience certificate via ``transience_z``, and is otherwise
    left inconclusive.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    H = normalize_target_set(H)
    cache = RowCache(spec)
    schedule = list(schedule) if schedule is not None else default_schedule()
    cap_note = f"schedule capped at N={schedule[-1]}"

    tiers: dict[str, TierResult] = {}
    ordinary = truncation_sweep(cache, H, "ordinary", schedule, solver=solver)
    tiers["ergodic"] = _tier_from_sweep(
        "ergodic", "target_return_moment", ordinary.levels,
        ordinary.h_series(), cache, rule, cap_note)
    tiers["strong"] = _tier_from_sweep(
        "strong", "interior_maximum", ordinary.levels,
        ordinary.interior_series(), cache, rule, cap_note)

    for ell in range(2, L + 1):
        sw = truncation_sweep(cache, H, "ladder", schedule,
                              order=ell, solver=solver)
        tiers[f"ergodic_{ell}"] = _tier_from_sweep(
            f"ergodic_{ell}", f"target_return_moment_order_{ell}",
            sw.levels, sw.h_series(), cache, rule, cap_note)

    scan_info: dict = {}
    if spec.kind == "continuous" and run_exp_scan:
        curve = exp_moment_scan(cache, H, schedule,
                                grid_size=lambda_grid_size, rule=rule,
                                solver=solver, ordinary=ordinary)
        tiers["exponential"] = exponential_tier(curve, rule)
        scan_info = {
            "lambda_prime": curve.lam_prime,
            "lambda_prime_certified": curve.certified,
            "lambdas": [float(l) for l in curve.lambdas],
            "verdicts": curve.verdict_states(),
            "limit_gap": [_json_float(g) for g in curve.limit_gap],
        }
    else:
        tier = TierResult(name="exponential", holds=UNKNOWN, grade="none",
                          statistic="scaled_exp_moment_at_target")
        tier.notes.append("no exponential criterion for discrete kind"
                          if spec.kind == "discrete" else "scan disabled")
        tiers["exponential"] = tier

    tiers["recurrent"] = _recurrent_tier(cache, single_birth, sb_depth,
                                         schedule, transience_z, rule)

    # fast path: uniform return rate + recurrence forces strong ergodicity
    if spec.kind == "continuous" and tiers["recurrent"].holds == YES:
        fp = uniform_return_fast_path(cache, H, prefix=schedule[-1] + 1)
        if fp["positive"] and fp["certified"]:
            strong = tiers["strong"]
            note = (f"uniform rate into the target set "
                    f">= {fp['min_rate_into_target']:.6g} on the prefix "
                    "(with recurrence, a strong-ergodicity fast path)")
            strong.notes.append(note)
            if strong.holds == UNKNOWN:
                strong.holds, strong.grade = YES, "evidence"

    report = ErgodicityReport(
        model=spec.name, kind=spec.kind, H=H, L=L, schedule=schedule,
        tiers=tiers, scan=scan_info)
    _propagate(report)
    return report


def _recurrent_tier(cache, single_birth, sb_depth, schedule, transience_z,
                    rule) -> TierResult:
    from . import single_birth as sb_mod

    if single_birth is not None:
        depth = sb_depth or schedule[-1]
        tab = sb_mod.build_tableau(single_birth, depth, cross_check="off")
        rec = sb_mod.recurrence_explicit(tab, rule)
        tier = TierResult(
            name="recurrent",
            holds=verdict_to_holds(rec.verdict, invert=True),
            verdict=rec.verdict, statistic=rec.statistic,
            levels=rec.windows.tolist(), values=rec.values.tolist())
        if tier.holds == UNKNOWN:
            tier.notes.append(f"tableau capped at K={depth}")
        return tier
    if transience_z is not None:
        rep = transience_certificate_check(cache, transience_z)
        tier = TierResult(name="recurrent",
                          statistic="transience_certificate")
        if rep.certifies_transience:
            tier.holds, tier.grade = NO, "certificate"
            tier.notes.append(
                f"certificate verified on {rep.checked_rows} rows")
        else:
            tier.holds = UNKNOWN
            tier.notes.append(
                "supplied certificate does not verify "
                f"(violation {rep.max_violation:.3e}, strict={rep.strict_ok})")
        return tier
    tier = TierResult(name="recurrent", holds=UNKNOWN, grade="none",
                      statistic="none")
    tier.notes.append("no single-birth structure or certificate supplied")
    return tier


def _propagate(report: ErgodicityReport) -> None:
    """yes flows down the hierarchy, no flows up; conflicts are flagged."""
    order = report.tier_order()
    tiers = report.tiers
    # downward implication from the strongest yes
    for k, name in enumerate(order):
        if tiers[name].holds == YES:
            for lower in order[:k]:
                t = tiers[lower]
                if t.holds == NO:
                    report.consistency_ok = False
                    report.consistency_messages.append(
                        f"{name}=yes contradicts {lower}=no")
                elif t.holds == UNKNOWN:
                    t.holds, t.grade = YES, "implied"
                    t.notes.append(f"implied by {name}")
    # upward refutation from the weakest no
    for k, name in enumerate(order):
        if tiers[name].holds == NO and tiers[name].grade != "implied":
            for upper in order[k + 1:]:
                t = tiers[upper]
                if t.holds == YES and t.grade != "implied":
                    report.consistency_ok = False
                    report.consistency_messages.append(
                        f"{name}=no contradicts {upper}=yes")
                elif t.holds == UNKNOWN:
                    t.holds, t.grade = NO, "implied"
                    t.notes.append(f"implied by {name}")
