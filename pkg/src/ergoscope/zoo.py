"""Built-in model catalog and the level-reduction inequality checkers.

Each zoo entry couples a generator (plus single-birth structure where it
applies) with the classification the literature asserts for it, closed under
the hierarchy implications; regression tests compare classifier output
against these assertions.  The multi-dimensional entries also expose exact
level-reduced inequality checks for their test-function families.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .chain import GeneratorSpec, RawModel
from .errors import ModelError
from .single_birth import SingleBirthSpec
from .verdict import DEFAULT_RULE, Verdict, VerdictRule, boundedness_verdict, running_max


def _close_assertions(d: dict) -> dict:
    """Close a partial class assertion under the hierarchy implications."""
    order = ["recurrent", "ergodic", "exponential", "strong"]
    out = {k: d.get(k) for k in order}
    for k in range(len(order) - 1, 0, -1):        # yes flows down
        if out[order[k]] is True:
            for j in range(k):
                out[order[j]] = True
    for k in range(len(order) - 1):               # no flows up
        if out[order[k]] is False:
            for j in range(k + 1, len(order)):
                out[order[j]] = False
    return out


@dataclass
class ZooModel:
    name: str
    params: dict
    spec: GeneratorSpec
    single_birth: SingleBirthSpec | None = None
    raw: RawModel | None = None
    asserted: dict = field(default_factory=dict)
    notes: str = ""

    def alpha_vec(self, i: np.ndarray) -> np.ndarray:
        if self.single_birth is None or self.single_birth.vector_below_root is None:
            raise ModelError(f"{self.name} has no catastrophe rate vector")
        return self.single_birth.vector_below_root(np.asarray(i))

    def indexed_spec(self, capacity: int | None = None):
        """Canonical-index generator; multi-dimensional entries are
        enumerated level-major up to ``capacity`` states first."""
        if self.spec is not None:
            return self.spec, None
        from .chain import enumerate_states, index_raw_model
        if capacity is None:
            raise ModelError(f"{self.name} needs an enumeration capacity")
        enum = enumerate_states(self.raw, capacity)
        return index_raw_model(self.raw, enum), enum


# ---------------------------------------------------------------------------
# one-dimensional families


def birth_death_gamma(gamma: float) -> ZooModel:
    """Birth-death chain with unit birth rate at 0 and rates i^gamma above."""
    g = float(gamma)

    def up_of(n):
        return 1.0 if n == 0 else float(n) ** g

    def below_of(n):
        return [] if n == 0 else [(n - 1, float(n) ** g)]

    sb = SingleBirthSpec(up_of=up_of, below_of=below_of,
                         name=f"birth_death_gamma({g})")
    asserted = _close_assertions({
        "recurrent": True,
        "ergodic": g > 1,
        "strong": g > 2,
    })
    return ZooModel(name="birth_death_gamma", params={"gamma": g},
                    spec=sb.to_generator(), single_birth=sb,
                    asserted=asserted)


CATASTROPHE_FAMILIES = ("power", "log_power", "loglog_power",
                        "alternating", "constant", "custom")


def _alpha_vector(family: str, gamma: float | None, custom=None):
    if family == "power":
        return lambda i: np.asarray(i, dtype=float) ** (-gamma)
    if family == "log_power":
        def f(i):
            i = np.asarray(i, dtype=float)
            return np.log(np.maximum(i, 3.0)) ** (-gamma)
        return f
    if family == "loglog_power":
        def f(i):
            i = np.asarray(i, dtype=float)
            return np.log(np.log(np.maximum(i, 16.0))) ** (-gamma)
        return f
    if family == "alternating":
        def f(i):
            i = np.asarray(i, dtype=float)
            return np.where(i.astype(np.int64) % 2 == 1, 1.0 / i, 1.0)
        return f
    if family == "constant":
        return lambda i: np.ones_like(np.asarray(i, dtype=float))
    if family == "custom":
        if custom is None:
            raise ModelError("custom catastrophe family needs alpha values")
        if callable(custom):
            return lambda i: np.asarray(custom(np.asarray(i)), dtype=float)
        arr = np.asarray(custom, dtype=float)

        def f(i):
            i = np.asarray(i, dtype=np.int64)
            if i.max(initial=0) > len(arr):
                raise ModelError("custom alpha array too short")
            return arr[i - 1]
        return f
    raise ModelError(f"unknown catastrophe family {family!r}")


def _catastrophe_assertions(family: str, gamma: float | None) -> dict:
    if family == "power":
        return _close_assertions({"recurrent": not (gamma > 0)})
    if family == "log_power":
        if gamma > 1:
            return _close_assertions({"recurrent": False})
        if gamma == 1:
            return _close_assertions({"recurrent": True, "ergodic": False})
        if gamma > 0:
            return _close_assertions({"ergodic": True, "exponential": False})
        return {}
    if family == "loglog_power":
        if gamma > 0:
            return _close_assertions({"ergodic": True, "exponential": False})
        return {}
    if family in ("alternating", "constant"):
        return _close_assertions({"strong": True})
    return {}


def catastrophe(family: str, gamma: float | None = None,
                alpha=None) -> ZooModel:
    """Uniformly accelerating climb (rate i+1 up) with a drop to the origin
    at rate alpha_i; the alpha family selects where it sits in the hierarchy."""
    if family not in CATASTROPHE_FAMILIES:
        raise ModelError(f"unknown catastrophe family {family!r}")
    needs_gamma = family in ("power", "log_power", "loglog_power")
    if needs_gamma:
        if gamma is None or gamma <= 0:
            raise ModelError(f"family {family!r} needs gamma > 0")
        gamma = float(gamma)
    av = _alpha_vector(family, gamma, alpha)

    def up_vec(i):
        return np.asarray(i, dtype=float) + 1.0

    def up_of(n):
        return float(n + 1)

    def below_of(n):
        if n == 0:
            return []
        a = float(av(np.array([n]))[0])
        return [(0, a)] if a > 0 else []

    name = f"catastrophe({family}" + (f", gamma={gamma})" if needs_gamma else ")")
    sb = SingleBirthSpec(up_of=up_of, below_of=below_of, name=name,
                         vector_up=up_vec, vector_below_root=av,
                         below_only_root=True)
    params = {"family": family}
    if needs_gamma:
        params["gamma"] = gamma
    return ZooModel(name="catastrophe", params=params,
                    spec=sb.to_generator(), single_birth=sb,
                    asserted=_catastrophe_assertions(family, gamma))


def single_birth_custom(up, below, name: str = "single_birth_custom") -> ZooModel:
    """User-supplied single-birth chain: ``up(n)`` rates and sparse
    ``below(n)`` rows."""
    sb = SingleBirthSpec(up_of=up, below_of=below, name=name)
    return ZooModel(name=name, params={}, spec=sb.to_generator(),
                    single_birth=sb, asserted={})


# ---------------------------------------------------------------------------
# multi-dimensional models


def _uniform_offdiag(s: int) -> np.ndarray:
    if s == 1:
        return np.zeros((1, 1))
    p = np.full((s, s), 1.0 / (s - 1))
    np.fill_diagonal(p, 0.0)
    return p


def brussel(sites: int = 1, lam1: float = 1.0, lam2: float = 1.0,
            lam3: float = 1.0, lam4: float = 1.0, a=None, b=None,
            p1=None, p2=None) -> ZooModel:
    """Two-species reaction network with per-site pairs (x1, x2)."""
    s = int(sites)
    if s < 1 or min(lam1, lam2, lam3, lam4) <= 0:
        raise ModelError("need sites >= 1 and positive reaction constants")
    a = np.full(s, 1.0) if a is None else np.asarray(a, dtype=float)
    b = np.full(s, 1.0) if b is None else np.asarray(b, dtype=float)
    if len(a) != s or len(b) != s or a.min() <= 0 or b.min() <= 0:
        raise ModelError("a and b must be positive per-site values")
    p1 = _uniform_offdiag(s) if p1 is None else np.asarray(p1, dtype=float)
    p2 = _uniform_offdiag(s) if p2 is None else np.asarray(p2, dtype=float)
    for p in (p1, p2):
        if p.shape != (s, s) or p.min() < 0 or np.any(np.diag(p) != 0):
            raise ModelError("migration matrices must be nonneg, zero diagonal")

    def row_of(x):
        out = []
        for u in range(s):
            x1, x2 = x[u]
            out.append((_bump(x, u, 0, +1), lam1 * a[u]))
            if x1 >= 1:
                out.append((_bump(_bump(x, u, 0, -1), u, 1, +1),
                            lam2 * b[u] * x1))
                out.append((_bump(x, u, 0, -1), lam4 * x1))
            if x2 >= 1 and x1 >= 2:
                out.append((_bump(_bump(x, u, 0, +1), u, 1, -1),
                            lam3 * 0.5 * x1 * (x1 - 1) * x2))
            for v in range(s):
                if v == u:
                    continue
                if x1 >= 1 and p1[u, v] > 0:
                    out.append((_bump(_bump(x, u, 0, -1), v, 0, +1),
                                x1 * p1[u, v]))
                if x2 >= 1 and p2[u, v] > 0:
                    out.append((_bump(_bump(x, u, 1, -1), v, 1, +1),
                                x2 * p2[u, v]))
        return _merge(out)

    root = tuple((0, 0) for _ in range(s))
    raw = RawModel(row_of=row_of, root=root, name="brussel")
    asserted = _close_assertions({"exponential": True, "strong": False})
    return ZooModel(name="brussel",
                    params={"sites": s, "lam1": lam1, "lam2": lam2,
                            "lam3": lam3, "lam4": lam4},
                    spec=None, raw=raw, asserted=asserted,
                    notes="classify via enumerate_states; level checks exact")


def _bump(x, u, comp, delta):
    site = list(x[u])
    site[comp] += delta
    out = list(x)
    out[u] = tuple(site)
    return tuple(out)


def _merge(entries):
    acc: dict = {}
    for y, r in entries:
        if r > 0:
            acc[y] = acc.get(y, 0.0) + r
    return list(acc.items())


def multi_gamma(sites: int, gamma: float, p=None) -> ZooModel:
    """Per-site random walk with rates x(u)^gamma up/down plus migration."""
    s = int(sites)
    if s < 1:
        raise ModelError("sites must be >= 1")
    g = float(gamma)
    p = _uniform_offdiag(s) if p is None else np.asarray(p, dtype=float)
    if p.shape != (s, s) or p.min() < 0 or np.any(np.diag(p) != 0):
        raise ModelError("migration matrix must be nonneg with zero diagonal")
    theta = tuple(0 for _ in range(s))

    def row_of(x):
        out = []
        if x == theta:
            for u in range(s):
                out.append((_bump1(x, u, +1), 1.0))
            return out
        for u in range(s):
            c = x[u]
            if c >= 1:
                out.append((_bump1(x, u, +1), float(c) ** g))
                out.append((_bump1(x, u, -1), float(c) ** g))
                for v in range(s):
                    if v != u and p[u, v] > 0:
                        out.append((_bump1(_bump1(x, u, -1), v, +1),
                                    c * p[u, v]))
        return _merge(out)

    raw = RawModel(row_of=row_of, root=theta, name="multi_gamma")
    asserted = {}
    if g <= 1:
        asserted = _close_assertions({"ergodic": False})
    elif g <= 2:
        asserted = _close_assertions({"strong": False})
    return ZooModel(name="multi_gamma", params={"sites": s, "gamma": g},
                    spec=None, raw=raw, asserted=asserted,
                    notes="up-moves only at occupied sites (0^gamma := 0)")


def _bump1(x, u, delta):
    out = list(x)
    out[u] += delta
    return tuple(out)


# ---------------------------------------------------------------------------
# transience certificate for the catastrophe family


def catastrophe_transience_certificate(alpha_vec, K: int) -> np.ndarray:
    """Certificate z for embedded-chain transience: z_0 = 0 and
    z_{i+1} = z_i * (1 + alpha_i/(i+1)) going down from -1 at state 1.

    Bounded (hence valid, with min z < z_0) exactly when the products
    converge, i.e. when the alpha series over i is summable.
    """
    if K < 2:
        raise ModelError("certificate needs K >= 2")
    i = np.arange(1, K, dtype=float)
    a = np.asarray(alpha_vec(i), dtype=float)
    p = (i + 1.0) / (i + 1.0 + a)        # embedded up-probability
    z = np.zeros(K)
    z[1] = -1.0
    if K > 2:
        z[2:] = -np.cumprod(1.0 / p[:-1])
    return z


# ---------------------------------------------------------------------------
# level-reduction checks


@dataclass
class LevelCheckReport:
    family: str
    n_max: int
    i_max: int
    max_violation: float
    violation_count: int
    statistic: np.ndarray
    verdict: Verdict
    notes: list[str] = field(default_factory=list)

    @property
    def zero_violations(self) -> bool:
        return self.violation_count == 0

    def to_dict(self) -> dict:
        return {
            "family": self.family, "n_max": self.n_max, "i_max": self.i_max,
            "max_violation": self.max_violation,
            "violation_count": self.violation_count,
            "statistic": [float(v) for v in self.statistic],
            "verdict": self.verdict.state,
            "notes": list(self.notes),
        }


def _windows(n_max: int) -> np.ndarray:
    ks = [2**m for m in range(0, 64) if 2**m < n_max]
    ks.append(n_max)
    return np.array(sorted(set(ks)), dtype=np.int64)


def brussel_level_inequality_check(family: str, n_max: int, i_max: int, *,
                                   lam1: float = 1.0, lam4: float = 1.0,
                                   a_total: float = 1.0,
                                   tol: float = 1e-12,
                                   rule: VerdictRule = DEFAULT_RULE
                                   ) -> LevelCheckReport:
    """Check the level-reduced test-function inequality for the two-species
    model: lam4*l*(f_i - f_{i-1}) - lam1*a~*(f_{i+1} - f_i) <= 1 for all
    1 <= l <= i, i <= i_max, per family member n <= n_max.

    The left side is linear in l (the species-one population on the level),
    so evaluating the endpoints l in {1, i} bounds every interior l exactly.
    """
    if family not in ("log_level", "increment"):
        raise ModelError("family must be 'log_level' or 'increment'")
    la = lam1 * a_total
    i = np.arange(1, i_max + 1, dtype=float)
    max_viol = -np.inf
    count = 0
    stats = []
    for n in range(1, n_max + 1):
        if family == "log_level":
            # f_i = log(i+1)/lam4 capped at level n; d_i = f_i - f_{i-1}
            d = np.where(i <= n, np.log((i + 1.0) / i) / lam4, 0.0)
            d_next = np.where(i + 1 <= n, np.log((i + 2.0) / (i + 1.0)) / lam4,
                              0.0)
            stat = math.log(min(n, i_max) + 1.0) / lam4
        else:
            d = np.where(i <= n, 1.0 / (lam4 * (i + 1.0)),
                         np.where(i == n + 1, -1.0 / (la * (n + 1.0)),
                                  -1.0 / la))
            ip = i + 1.0
            d_next = np.where(ip <= n, 1.0 / (lam4 * (ip + 1.0)),
                              np.where(ip == n + 1, -1.0 / (la * (n + 1.0)),
                                       -1.0 / la))
            stat = float(np.max(np.cumsum(d)))
        viol = np.maximum(lam4 * 1.0 * d - la * d_next,
                          lam4 * i * d - la * d_next) - 1.0
        m = float(viol.max())
        max_viol = max(max_viol, m)
        count += int(np.count_nonzero(viol > tol))
        stats.append(stat)
    stats = np.asarray(stats)
    env = running_max(stats)[_windows(n_max) - 1]
    verdict = boundedness_verdict(env, rule)
    return LevelCheckReport(
        family=family, n_max=n_max, i_max=i_max, max_violation=max_viol,
        violation_count=count, statistic=env, verdict=verdict,
        notes=["interior populations bounded via the l in {1, i} endpoints "
               "(left side linear in l)"])


def multi_gamma_level_check(gamma: float, family: str, n_max: int,
                            i_max: int, *, tol: float = 1e-12,
                            rule: VerdictRule = DEFAULT_RULE
                            ) -> LevelCheckReport:
    """Check the level-reduced increment inequalities for the per-site
    random walk: d_i - d_{i+1} <= i^-gamma.

    ``power_tail`` and ``loglog`` are the non-strong families (gamma <= 2);
    ``harmonic`` is the non-ergodicity family (gamma <= 1), whose rows hold
    with equality and which also checks the target row y_0 <= y_1 + 1.
    """
    if family in ("power_tail", "loglog"):
        if gamma > 2:
            raise ModelError(f"{family} family requires gamma <= 2")
    elif family == "harmonic":
        if gamma > 1:
            raise ModelError("harmonic family requires gamma <= 1")
    else:
        raise ModelError("family must be power_tail/loglog/harmonic")

    i = np.arange(1, i_max + 1, dtype=float)
    bound = i ** (-gamma)
    max_viol = -np.inf
    count = 0
    stats = []
    notes = []
    for n in range(1, n_max + 1):
        if family == "power_tail":
            eps_n = 1.0 / (n + 1.0)
            d = np.where(i <= n, i ** -(1.0 + 1.0 / i), i ** -(1.0 + eps_n))
            ip = i + 1.0
            d_next = np.where(ip <= n, ip ** -(1.0 + 1.0 / ip),
                              ip ** -(1.0 + eps_n))
            # all increments are positive: the supremum is the full series,
            # whose tail beyond i_max is a Hurwitz zeta value
            from scipy.special import zeta as hurwitz_zeta
            stat = float(np.sum(np.where(i <= min(n, i_max),
                                         i ** -(1.0 + 1.0 / i),
                                         i ** -(1.0 + eps_n))))
            if n <= i_max:
                stat += float(hurwitz_zeta(1.0 + eps_n, i_max + 1))
            viol = d - d_next - bound
        elif family == "loglog":
            head = 1.0 / ((i + 9.0) * np.log(i + 9.0))
            c_n = 1.0 / ((n + 9.0) * math.log(n + 9.0))
            inv_sq = 1.0 / i**2
            prev_sum = np.concatenate(([0.0], np.cumsum(inv_sq)))
            base = prev_sum[min(n - 1, i_max)]
            # d_j = c_n - sum_{k=n}^{j-1} 1/k^2 for j >= n+1
            tail = c_n - (prev_sum[np.arange(i_max)] - base)
            d = np.where(i <= n, head, tail)
            head_up = 1.0 / ((i + 10.0) * np.log(i + 10.0))
            tail_up = c_n - (prev_sum[np.arange(1, i_max + 1)] - base)
            d_next = np.where(i + 1 <= n, head_up, tail_up)
            stat = float(np.max(np.cumsum(d)))
            viol = d - d_next - bound
        else:
            # d_k = n - H_{k-1}; rows hold with equality at gamma = 1
            H_prev = np.concatenate(([0.0], np.cumsum(1.0 / i[:-1])))
            d = n - H_prev
            d_next = n - (H_prev + 1.0 / i)
            stat = float(n + 1)      # the target-row value
            viol = d - d_next - bound
            row0 = (n + 1.0) - (d[0] + 1.0)
            viol = np.concatenate(([row0], viol))
        m = float(viol.max())
        max_viol = max(max_viol, m)
        count += int(np.count_nonzero(viol > tol))
        stats.append(stat)
    if family == "harmonic":
        notes.append("rows hold with equality at gamma = 1")
    stats = np.asarray(stats)
    env = running_max(stats)[_windows(n_max) - 1]
    verdict = boundedness_verdict(env, rule)
    return LevelCheckReport(
        family=family, n_max=n_max, i_max=i_max, max_violation=max_viol,
        violation_count=count, statistic=env, verdict=verdict, notes=notes)


# ---------------------------------------------------------------------------
# registry and model-file loading


BUILTINS = {
    "birth_death_gamma": {
        "ctor": birth_death_gamma,
        "params": {"gamma": "float, birth/death exponent"},
        "classes": "ergodic iff gamma > 1; strongly ergodic iff gamma > 2",
    },
    "catastrophe": {
        "ctor": catastrophe,
        "params": {"family": "power|log_power|loglog_power|alternating|"
                             "constant|custom",
                   "gamma": "float, required for the power-type families"},
        "classes": "spans transient to strongly ergodic by family",
    },
    "brussel": {
        "ctor": brussel,
        "params": {"sites": "int", "lam1": "float", "lam2": "float",
                   "lam3": "float", "lam4": "float"},
        "classes": "exponentially but not strongly ergodic",
    },
    "multi_gamma": {
        "ctor": multi_gamma,
        "params": {"sites": "int", "gamma": "float"},
        "classes": "non-strong for gamma <= 2; non-ergodic for gamma <= 1",
    },
}


def from_config(data: dict) -> ZooModel:
    """Model-spec file: {"builtin": name, "params": {...}} or
    {"explicit": {"states": n, "triplets": [[i, j, rate], ...], "kind": ...}}."""
    if "builtin" in data:
        name = data["builtin"]
        if name not in BUILTINS:
            raise ModelError(f"unknown builtin model {name!r}")
        return BUILTINS[name]["ctor"](**data.get("params", {}))
    if "explicit" in data:
        body = data["explicit"]
        n = int(body["states"])
        kind = body.get("kind", "continuous")
        rows: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for i, j, r in body["triplets"]:
            i, j, r = int(i), int(j), float(r)
            if not (0 <= i < n and 0 <= j < n):
                raise ModelError(f"triplet ({i},{j}) outside 0..{n - 1}")
            rows[i].append((j, r))
        spec = GeneratorSpec(row_of=lambda i: rows[i], kind=kind,
                             name=data.get("name", "explicit"), n_states=n)
        return ZooModel(name=spec.name, params={"states": n, "kind": kind},
                        spec=spec, asserted={})
    raise ModelError("model config needs a 'builtin' or 'explicit' key")


def zoo_list() -> list[dict]:
    return [{"name": name, "params": info["params"], "classes": info["classes"]}
            for name, info in sorted(BUILTINS.items())]
