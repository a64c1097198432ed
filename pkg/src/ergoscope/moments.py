"""Hitting-time moments via monotone truncation sweeps.

Each truncation level yields the minimal solution of a finite system whose
values increase to the countable-state moments as the level grows; the sweep
(target-state values plus the interior maximum per level) is the raw
evidence consumed by the classifier and the witness generators.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain import RowCache, build_truncated_system, normalize_target_set
from .errors import NumericsError
from .minsolve import from_truncation, solve_direct, solve_iterative
from .verdict import DEFAULT_RULE, Verdict, VerdictRule, boundedness_verdict

MONOTONE_SLACK = 1e-12


def default_schedule(lo: int = 4, hi: int = 17) -> list[int]:
    """Doubling truncation levels 2^lo .. 2^hi."""
    return [2**k for k in range(lo, hi + 1)]


def _as_cache(spec) -> RowCache:
    return spec if isinstance(spec, RowCache) else RowCache(spec)


def _solve(system, solver: str):
    op = from_truncation(system)
    sol = solve_direct(op) if solver == "direct" else solve_iterative(op)
    if sol.status == "inconclusive":
        raise NumericsError(
            f"solver inconclusive at N={system.N}: {sol.warnings}")
    return sol


@dataclass
class MomentTable:
    """Values of one polynomial-moment order on a truncation.

    ``values`` covers the unknown (interior) states; ``h_values`` are derived
    by one application of the target-state row identity, never solved for.
    """

    order: int
    N: int
    H: tuple[int, ...]
    unknown_states: np.ndarray
    values: np.ndarray
    h_values: dict[int, float]
    diverged: bool = False

    @property
    def interior_max(self) -> float:
        if self.diverged:
            return np.inf
        return float(self.values.max(initial=0.0))

    def dense(self) -> np.ndarray:
        """Values on states 0..N as one array (targets included)."""
        out = np.empty(self.N + 1)
        out[self.unknown_states] = self.values
        for h, v in self.h_values.items():
            out[h] = v
        return out


def _zero_order_table(cache: RowCache, H, N: int) -> MomentTable:
    H = normalize_target_set(H)
    if cache.spec.n_states is not None:
        N = min(N, cache.spec.n_states - 1)
    hset = set(H)
    unknown = np.array([i for i in range(N + 1) if i not in hset], dtype=np.int64)
    return MomentTable(order=0, N=N, H=H, unknown_states=unknown,
                       values=np.ones(len(unknown)),
                       h_values={h: 1.0 for h in H})


def moment_ladder(spec, H, ell_max: int, N: int, *,
                  solver: str = "direct") -> list[MomentTable]:
    """Moment tables of orders 1..ell_max on the level-N truncation.

    Order ell+1 sources from the order-ell table (the order-0 table is all
    ones, so ell=1 coincides with the ordinary hitting-time system).
    A diverged level marks its table infinite and stops the ladder.
    """
    if ell_max < 1:
        raise ValueError("ell_max must be >= 1")
    cache = _as_cache(spec)
    prev = _zero_order_table(cache, H, N)
    tables: list[MomentTable] = []
    for ell in range(1, ell_max + 1):
        system = build_truncated_system(
            cache, prev.H, prev.N, kind="ladder",
            source=prev.dense(), order=ell - 1)
        sol = _solve(system, solver)
        if sol.status == "diverged":
            tables.append(MomentTable(
                order=ell, N=prev.N, H=prev.H,
                unknown_states=system.unknown_states,
                values=np.full(system.n_unknowns, np.inf),
                h_values={h: np.inf for h in prev.H}, diverged=True))
            break
        h_values = {h: system.h_value(h, sol.x) for h in prev.H}
        table = MomentTable(order=ell, N=prev.N, H=prev.H,
                            unknown_states=system.unknown_states,
                            values=sol.x, h_values=h_values)
        tables.append(table)
        prev = table
    return tables


@dataclass
class MomentSweep:
    """Monotone evidence from increasing truncations of one system family."""

    kind: str                       # "ordinary" | "ladder" | "exponential"
    param: float | None
    H: tuple[int, ...]
    levels: list[int] = field(default_factory=list)
    h_values: dict[int, list[float]] = field(default_factory=dict)
    interior_max: list[float] = field(default_factory=list)
    aborted: str | None = None

    def h_series(self, h: int | None = None) -> np.ndarray:
        """Per-level target value (max over H when h is None)."""
        if h is not None:
            return np.array(self.h_values[h])
        return np.max([self.h_values[h] for h in self.H], axis=0)

    def interior_series(self) -> np.ndarray:
        return np.array(self.interior_max)

    def check_monotone(self) -> None:
        for name, series in [("h", self.h_series()),
                             ("interior", self.interior_series())]:
            fin = np.isfinite(series)
            s = series[fin]
            if len(s) >= 2:
                lhs = s[:-1]
                rhs = s[1:] + MONOTONE_SLACK * (1.0 + np.abs(s[1:]))
                if np.any(lhs > rhs):
                    raise NumericsError(
                        f"{name}-value sweep lost monotonicity: {series}")
            # once a level diverges, all larger truncations must as well
            if not fin.all() and np.any(np.diff(fin.astype(int)) > 0):
                raise NumericsError("finite level after a diverged one")


def sweep_level(cache: RowCache, H, N: int, kind: str, *, order=None,
                lam=None, solver="direct"):
    """(h_values, interior_max) at one truncation level."""
    if kind == "ladder":
        tables = moment_ladder(cache, H, order, N, solver=solver)
        table = tables[-1]
        if table.order != order:         # ladder stopped early on divergence
            return {h: np.inf for h in table.H}, np.inf
        return table.h_values, table.interior_max
    sys_kind = "exponential" if kind == "exponential" else "ordinary"
    system = build_truncated_system(cache, H, N, kind=sys_kind, lam=lam)
    sol = _solve(system, solver)
    if sol.status == "diverged":
        return {h: np.inf for h in system.H}, np.inf
    h_values = {h: system.h_value(h, sol.x) for h in system.H}
    return h_values, float(sol.x.max(initial=0.0))


def truncation_sweep(spec, H, kind: str = "ordinary",
                     schedule=None, *, order: int | None = None,
                     lam: float | None = None,
                     solver: str = "direct") -> MomentSweep:
    """Run one system family over an increasing truncation schedule.

    Levels are computed independently (prefix stability makes the values
    agree with a single incremental computation); monotonicity is asserted.
    A level that fails to solve aborts the sweep, retaining partial results.
    """
    cache = _as_cache(spec)
    H = normalize_target_set(H)
    schedule = list(schedule) if schedule is not None else default_schedule()
    if not schedule or any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be nonempty and strictly increasing")
    if kind == "ladder" and (order is None or order < 1):
        raise ValueError("ladder sweeps need order >= 1")
    if kind == "exponential" and lam is None:
        raise ValueError("exponential sweeps need lam")

    sweep = MomentSweep(kind=kind, param=(lam if kind == "exponential" else order),
                        H=H, h_values={h: [] for h in H})
    seen = set()
    for N in schedule:
        if cache.spec.n_states is not None:
            N = min(N, cache.spec.n_states - 1)
        if N in seen:                    # finite chain saturates the schedule
            continue
        seen.add(N)
        try:
            h_values, m = sweep_level(cache, H, N, kind,
                                      order=order, lam=lam, solver=solver)
        except NumericsError as exc:
            sweep.aborted = f"level N={N}: {exc}"
            break
        sweep.levels.append(N)
        for h in H:
            sweep.h_values[h].append(h_values[h])
        sweep.interior_max.append(m)
    if not sweep.levels:
        raise NumericsError(f"sweep produced no levels ({sweep.aborted})")
    sweep.check_monotone()
    return sweep


def sweep_series_verdict(series, cache: RowCache, levels,
                         rule: VerdictRule = DEFAULT_RULE) -> Verdict:
    """Boundedness verdict for a sweep series, treating a finite chain whose
    truncation covers every state as exact (converged at the computed value)."""
    series = np.asarray(series, dtype=float)
    n_states = cache.spec.n_states
    exact = (n_states is not None and levels and levels[-1] >= n_states - 1)
    if len(series) >= 3 and not exact:
        return boundedness_verdict(series, rule)
    if exact:
        if np.isfinite(series[-1]):
            return Verdict("converged", estimate=float(series[-1]),
                           evidence={"mode": "finite chain, exact value"})
        return Verdict("diverging", descriptor="overflow")
    if len(series) >= 3:
        return boundedness_verdict(series, rule)
    return Verdict("inconclusive",
                   evidence={"reason": "fewer than 3 sweep levels"})


@dataclass
class ExpMomentCurve:
    """Exponential-moment sweeps over a decreasing rate grid.

    ``lam_prime`` is half the minimum total rate over the enumerated prefix;
    ``certified`` records whether that prefix minimum can be trusted as the
    global infimum.  ``limit_gap`` holds, per level of the finest-rate sweep,
    the (nonnegative) excess of the exponential value over the ordinary one,
    which shrinks as the rate approaches zero.
    """

    lam_prime: float
    certified: bool
    lambdas: list[float]
    sweeps: list[MomentSweep]
    verdicts: list[Verdict]
    ordinary: MomentSweep
    limit_gap: list[float] = field(default_factory=list)

    def verdict_states(self) -> list[str]:
        return [v.state for v in self.verdicts]


def exp_moment_scan(spec, H, schedule=None, *, grid=None, grid_size: int = 20,
                    rule: VerdictRule = DEFAULT_RULE, solver: str = "direct",
                    ordinary: MomentSweep | None = None) -> ExpMomentCurve:
    """Scan exponential moments over rates lam' * 2^-n, n = 0..grid_size.

    Requires a positive minimum total rate on the prefix.  Each rate gets its
    own sweep and boundedness verdict; the scan also checks the small-rate
    limit against the ordinary sweep (the exponential value dominates the
    ordinary one and approaches it from above as the rate drops).
    """
    cache = _as_cache(spec)
    H = normalize_target_set(H)
    schedule = list(schedule) if schedule is not None else default_schedule()
    n_prefix = schedule[-1] + 1
    lam_prime = 0.5 * cache.min_rate(n_prefix)
    if not lam_prime > 0:
        raise NumericsError("minimum total rate on the prefix is not positive")
    certified = cache.min_rate_certified(n_prefix)
    if grid is None:
        grid = [lam_prime * 2.0**-n for n in range(grid_size + 1)]
    else:
        grid = [float(l) for l in grid]
        if any(not (0.0 < l <= lam_prime) for l in grid):
            raise NumericsError(f"grid rates must lie in (0, {lam_prime}]")
        if any(b >= a for a, b in zip(grid, grid[1:])):
            raise ValueError("grid must be strictly decreasing")

    if ordinary is None:
        ordinary = truncation_sweep(cache, H, "ordinary", schedule, solver=solver)

    sweeps, verdicts = [], []
    for lam in grid:
        sw = truncation_sweep(cache, H, "exponential", schedule,
                              lam=lam, solver=solver)
        sweeps.append(sw)
        verdicts.append(sweep_series_verdict(sw.h_series(), cache,
                                             sw.levels, rule))

    # rate-monotonicity at fixed level: values nondecreasing in the rate
    for k in range(min(len(s.levels) for s in sweeps)):
        vals = np.array([s.h_series()[k] for s in sweeps])  # decreasing rates
        fin = np.isfinite(vals)
        v = vals[fin]
        if len(v) > 1 and np.any(v[:-1] < v[1:] - MONOTONE_SLACK * (1 + np.abs(v[1:]))):
            raise NumericsError("exponential values not monotone in the rate")

    finest = sweeps[-1]
    gaps = []
    ref = ordinary.h_series()
    for k, N in enumerate(finest.levels):
        if N in ordinary.levels:
            j = ordinary.levels.index(N)
            gaps.append(float(finest.h_series()[k] - ref[j]))
    curve = ExpMomentCurve(lam_prime=lam_prime, certified=certified,
                           lambdas=list(grid), sweeps=sweeps,
                           verdicts=verdicts, ordinary=ordinary,
                           limit_gap=gaps)
    if gaps and min(gaps) < -MONOTONE_SLACK * (1 + abs(ref[-1])):
        raise NumericsError("exponential values dipped below ordinary ones")
    return curve
