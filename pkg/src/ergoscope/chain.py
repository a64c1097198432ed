"""Countable-state chain models: generators, embedded kernels, truncations.

A chain is given by a sparse row function over canonical state indices
0, 1, 2, ...  Continuous-time rows list off-diagonal rates (the diagonal is
minus their sum, so every generator is conservative by construction);
discrete-time rows list transition probabilities and must sum to one.

Multi-dimensional models enter through :func:`enumerate_states`, which maps
tuple-valued states onto canonical indices in level-major order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import CapacityError, ModelError, NumericsError

#: index used for transition targets that fall outside the enumerated prefix
OUT = -1

RATE_RTOL = 1e-12


@dataclass(frozen=True)
class GeneratorSpec:
    """Sparse conservative rate matrix (or transition matrix) on indices 0,1,2,...

    ``row_of(i)`` returns the off-diagonal row as ``[(j, rate), ...]``; targets
    equal to :data:`OUT` stand for states beyond the enumerated prefix and only
    contribute to the total rate.  ``kind`` is ``"continuous"`` (rates, 1/time)
    or ``"discrete"`` (probability rows).  ``total_rate_of``, when supplied,
    is cross-checked against the row sum at relative tolerance 1e-12.
    """

    row_of: Callable[[int], Sequence[tuple[int, float]]]
    kind: str = "continuous"
    name: str = "chain"
    n_states: int | None = None
    total_rate_of: Callable[[int], float] | None = None
    state_label_of: Callable[[int], object] | None = None

    def __post_init__(self):
        if self.kind not in ("continuous", "discrete"):
            raise ModelError(f"unknown kind {self.kind!r}")

    def row(self, i: int) -> list[tuple[int, float]]:
        """Validated off-diagonal row of state ``i``."""
        entries = [(int(j), float(r)) for j, r in self.row_of(i)]
        for j, r in entries:
            if j == i:
                raise ModelError(f"self-loop in row {i}")
            if not np.isfinite(r) or r <= 0.0:
                raise ModelError(f"non-positive rate {r} at ({i}, {j})")
        total = sum(r for _, r in entries)
        if total <= 0.0:
            raise ModelError(f"state {i} is absorbing (zero total rate)")
        if self.kind == "discrete" and abs(total - 1.0) > 1e-12 * max(1.0, total):
            raise ModelError(f"discrete row {i} sums to {total!r}, not 1")
        if self.total_rate_of is not None:
            q = float(self.total_rate_of(i))
            if abs(q - total) > RATE_RTOL * max(q, total):
                raise ModelError(
                    f"row {i}: declared total rate {q!r} != row sum {total!r}")
        return entries

    def total_rate(self, i: int) -> float:
        return sum(r for _, r in self.row(i))


class RowCache:
    """CSR-style cache of validated generator rows for a growing prefix.

    Built once per model and shared by truncation builders; immutable for
    already-cached indices, so prefix stability of truncated systems is
    automatic.
    """

    def __init__(self, spec: GeneratorSpec):
        self.spec = spec
        self._cols: list[np.ndarray] = []
        self._rates: list[np.ndarray] = []
        self._q: list[float] = []

    def ensure(self, n: int) -> None:
        """Cache rows for states 0..n-1."""
        if self.spec.n_states is not None:
            n = min(n, self.spec.n_states)
        while len(self._q) < n:
            i = len(self._q)
            entries = self.spec.row(i)
            self._cols.append(np.array([j for j, _ in entries], dtype=np.int64))
            self._rates.append(np.array([r for _, r in entries], dtype=float))
            self._q.append(float(self._rates[-1].sum()))

    def __len__(self) -> int:
        return len(self._q)

    def cols(self, i: int) -> np.ndarray:
        self.ensure(i + 1)
        return self._cols[i]

    def rates(self, i: int) -> np.ndarray:
        self.ensure(i + 1)
        return self._rates[i]

    def q(self, i: int) -> float:
        self.ensure(i + 1)
        return self._q[i]

    def q_array(self, n: int) -> np.ndarray:
        self.ensure(n)
        return np.array(self._q[:n])

    def min_rate(self, n: int) -> float:
        """min q_i over the first ``n`` states (continuous kind)."""
        return float(self.q_array(n).min())

    def min_rate_certified(self, n: int) -> bool:
        """Heuristic: the prefix minimum is trusted as the global infimum
        unless the terminal decile of rates dips to the running minimum."""
        q = self.q_array(n)
        if self.spec.n_states is not None and len(q) >= self.spec.n_states:
            return True          # full finite chain: the minimum is exact
        split = max(1, int(0.9 * len(q)))
        tail = q[split:]
        if len(tail) == 0:
            return True
        return bool(tail.min() > q.min() * (1.0 + 1e-12)) or bool(
            np.argmin(q) < split)


def normalize_target_set(H: Iterable[int] | int | None) -> tuple[int, ...]:
    """Canonical finite nonempty target set (sorted tuple), default {0}."""
    if H is None:
        return (0,)
    if isinstance(H, int):
        return (H,)
    out = tuple(sorted(set(int(h) for h in H)))
    if not out:
        raise ModelError("target set must be nonempty")
    if out[0] < 0:
        raise ModelError("target set must contain nonnegative indices")
    return out


@dataclass(frozen=True)
class EmbeddedKernel:
    """Jump chain of a continuous-kind generator: row i is rate row / q_i."""

    cache: RowCache

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        cols = self.cache.cols(i)
        probs = self.cache.rates(i) / self.cache.q(i)
        return cols, probs


def embedded_kernel(spec: GeneratorSpec | RowCache) -> EmbeddedKernel:
    """Embedded jump kernel; rejects discrete-kind and absorbing states lazily."""
    cache = spec if isinstance(spec, RowCache) else RowCache(spec)
    if cache.spec.kind != "continuous":
        raise ModelError("embedded kernel is defined for continuous kind only")
    return EmbeddedKernel(cache)


@dataclass
class TruncatedSystem:
    """Finite affine fixed-point problem x = A x + g over the unknown states.

    Unknowns are the states with index <= N outside the target set; all mass
    pointing into the target set or above level N is dropped from ``A``
    (equivalently redirected into the target set, which contributes zero).
    ``h_rows`` holds, per target state, the data needed to evaluate the
    one-application identity for its value from the interior solution.
    """

    N: int
    kind: str                      # "ordinary" | "ladder" | "exponential"
    H: tuple[int, ...]
    unknown_states: np.ndarray     # global indices of unknowns, ascending
    A: sp.csr_matrix
    g: np.ndarray
    h_rows: dict[int, tuple[np.ndarray, np.ndarray, float]]  # h -> (pos, w, g_h)
    param: float | None = None     # ladder order or exponential rate
    model: str = "chain"

    @property
    def n_unknowns(self) -> int:
        return len(self.unknown_states)

    def h_value(self, h: int, x: np.ndarray) -> float:
        """Value at target state ``h`` from the interior solution ``x``."""
        pos, w, gh = self.h_rows[h]
        return float(w @ x[pos] + gh)


def build_truncated_system(
    cache: RowCache | GeneratorSpec,
    H: Iterable[int] | int | None,
    N: int,
    *,
    kind: str = "ordinary",
    source: np.ndarray | None = None,
    order: int | None = None,
    lam: float | None = None,
) -> TruncatedSystem:
    """Assemble the truncated affine system for states 0..N.

    kind="ordinary":     g_i = 1/q_i (continuous) or 1 (discrete)
    kind="ladder":       g_i = (order+1)/q_i * source_i (continuous)
                         or source_i (discrete); ``source`` is indexed by
                         global state and must cover 0..N
    kind="exponential":  continuous only; weights q_ij/(q_i - lam) and
                         g_i = 1/(q_i - lam), requires 0 < lam < min q_i
    """
    if not isinstance(cache, RowCache):
        cache = RowCache(cache)
    spec = cache.spec
    H = normalize_target_set(H)
    if spec.n_states is not None:
        N = min(N, spec.n_states - 1)
    if max(H) > N:
        raise ModelError(f"target set {H} not inside truncation N={N}")
    cache.ensure(N + 1)
    discrete = spec.kind == "discrete"

    if kind == "ladder":
        if source is None or order is None:
            raise ModelError("ladder kind needs a source table and its order")
        if len(source) < N + 1:
            raise ModelError("ladder source must cover states 0..N")
    elif kind == "exponential":
        if discrete:
            raise ModelError("exponential systems are continuous-kind only")
        if lam is None or not (0.0 < lam < cache.min_rate(N + 1)):
            raise NumericsError(
                f"rate {lam!r} outside (0, min q_i) on the truncation")
    elif kind != "ordinary":
        raise ModelError(f"unknown system kind {kind!r}")

    hset = set(H)
    unknown = np.array([i for i in range(N + 1) if i not in hset], dtype=np.int64)
    pos_of = {int(s): p for p, s in enumerate(unknown)}

    rows, cols, vals = [], [], []
    g = np.empty(len(unknown))
    for p, i in enumerate(unknown):
        i = int(i)
        q = cache.q(i)
        if discrete:
            weight, gi = 1.0, 1.0
        elif kind == "exponential":
            weight, gi = 1.0 / (q - lam), 1.0 / (q - lam)
        else:
            weight, gi = 1.0 / q, 1.0 / q
        if kind == "ladder":
            gi = (source[i] if discrete else (order + 1) / q * source[i])
        g[p] = gi
        for j, r in zip(cache.cols(i), cache.rates(i)):
            pj = pos_of.get(int(j))
            if pj is not None:
                rows.append(p); cols.append(pj); vals.append(r * weight)
    A = sp.csr_matrix((vals, (rows, cols)), shape=(len(unknown),) * 2)

    h_rows = {}
    for h in H:
        q = cache.q(h)
        if discrete:
            weight, gh = 1.0, 1.0
        elif kind == "exponential":
            weight, gh = 1.0 / (q - lam), 1.0 / (q - lam)
        else:
            weight, gh = 1.0 / q, 1.0 / q
        if kind == "ladder":
            gh = (source[h] if discrete else (order + 1) / q * source[h])
        pos, w = [], []
        for j, r in zip(cache.cols(h), cache.rates(h)):
            pj = pos_of.get(int(j))
            if pj is not None:
                pos.append(pj); w.append(r * weight)
        h_rows[h] = (np.array(pos, dtype=np.int64), np.array(w), gh)

    return TruncatedSystem(
        N=N, kind=kind, H=H, unknown_states=unknown, A=A, g=g,
        h_rows=h_rows, param=(lam if kind == "exponential" else order),
        model=spec.name)


# ---------------------------------------------------------------------------
# multi-dimensional state enumeration


def _flatten(state) -> tuple[int, ...]:
    if isinstance(state, (tuple, list)):
        out: list[int] = []
        for part in state:
            out.extend(_flatten(part))
        return tuple(out)
    return (int(state),)


def state_level(state) -> int:
    """Total population |x| of a (possibly nested) tuple state."""
    return sum(_flatten(state))


@dataclass(frozen=True)
class RawModel:
    """Chain over opaque tuple-valued states, prior to index enumeration."""

    row_of: Callable[[object], Sequence[tuple[object, float]]]
    root: object
    kind: str = "continuous"
    name: str = "chain"


@dataclass
class Enumeration:
    states: list
    index_of: dict
    level_counts: list[int]        # states per closed level
    levels_closed: int             # number of fully closed levels
    first_unenumerated_level: int | None = None   # where capacity ran out

    def prefix_sizes(self) -> list[int]:
        """Cumulative state counts at level closures (valid truncation points)."""
        return [int(v) for v in np.cumsum(self.level_counts)]


def enumerate_states(model, capacity: int):
    """Deterministic level-major enumeration of the reachable state space.

    For 1-d integer chains this is the identity prefix ``[0, ..., capacity-1]``.
    For tuple-state models, levels (total population) are closed in order,
    members sorted by descending lexicographic order of the flattened tuple.
    Raises :class:`CapacityError` if not even the root level fits.
    """
    if capacity < 1:
        raise CapacityError("capacity must be >= 1", first_unclosed_level=0)
    if isinstance(model, GeneratorSpec) or (
            isinstance(model, RawModel) and isinstance(model.root, int)):
        n = capacity
        if isinstance(model, GeneratorSpec) and model.n_states is not None:
            n = min(n, model.n_states)
        return list(range(n))

    row_of = model.row_of
    placed: list = []
    placed_set: set = set()
    pending: dict[int, set] = {state_level(model.root): {model.root}}
    level_counts: list[int] = []
    stopped_at: int | None = None

    while pending:
        lvl = min(pending)
        members = pending.pop(lvl)
        # close the level under same-level transitions
        queue = list(members)
        while queue:
            s = queue.pop()
            for t, _r in row_of(s):
                lt = state_level(t)
                if lt == lvl:
                    if t not in members:
                        members.add(t)
                        queue.append(t)
                elif lt > lvl:
                    pending.setdefault(lt, set()).add(t)
                elif t not in placed_set:
                    raise ModelError(
                        f"state {t!r} at level {lt} discovered after level closed")
        if len(placed) + len(members) > capacity:
            if not placed:
                raise CapacityError(
                    f"capacity {capacity} cannot hold level {lvl}",
                    first_unclosed_level=lvl)
            stopped_at = lvl
            break
        for s in sorted(members, key=_flatten, reverse=True):
            placed.append(s)
            placed_set.add(s)
        level_counts.append(len(members))
        # drop already-placed states from future levels
        for lt in list(pending):
            pending[lt] -= placed_set
            if not pending[lt]:
                del pending[lt]

    enum = Enumeration(
        states=placed,
        index_of={s: i for i, s in enumerate(placed)},
        level_counts=level_counts,
        levels_closed=len(level_counts),
        first_unenumerated_level=stopped_at,
    )
    return enum


def geometric_prefixes(prefix_sizes, floor: int = 8) -> list[int]:
    """Subsequence of level-closure sizes growing at least geometrically.

    Verdict rules are calibrated for doubling truncation windows; raw
    level-closure sizes grow near-linearly for multi-dimensional models, so
    sweeps should run on this subsequence (returned as truncation indices,
    i.e. sizes minus one).
    """
    out = []
    last = 0
    for s in prefix_sizes:
        if s >= max(floor, 2 * last):
            out.append(int(s) - 1)
            last = s
    if prefix_sizes and (not out or out[-1] != int(prefix_sizes[-1]) - 1):
        out.append(int(prefix_sizes[-1]) - 1)
    return out


def index_raw_model(model: RawModel, enum: Enumeration) -> GeneratorSpec:
    """Canonical-index view of a tuple-state model; out-of-prefix targets map
    to :data:`OUT` (they still count toward total rates)."""
    states = enum.states
    index_of = enum.index_of

    def row_of(i: int):
        out = []
        for t, r in model.row_of(states[i]):
            out.append((index_of.get(t, OUT), float(r)))
        return out

    return GeneratorSpec(
        row_of=row_of, kind=model.kind, name=model.name,
        n_states=len(states), state_label_of=lambda i: states[i])
