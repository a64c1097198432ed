"""Minimal nonnegative solutions of finite affine systems x = A x + g.

The minimal solution is the monotone limit of f <- A f + g from f = 0; for
our truncated systems it is finite exactly when it solves (I - A) x = g with
x >= 0, so the direct path factorizes and the iterative path serves as an
independent oracle.  Both must agree to 1e-9 relative wherever both finish.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NumericsError

OVERFLOW_BOUND = 1e100
DENSE_CUTOFF = 64
NEG_CLAMP = 1e-10


@dataclass(frozen=True)
class AffineOperator:
    """Nonnegative pair (A, g) defining x = A x + g."""

    A: sp.spmatrix
    g: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", sp.csr_matrix(self.A))
        object.__setattr__(self, "g", np.asarray(self.g, dtype=float))
        if self.A.shape[0] != self.A.shape[1] or self.A.shape[0] != len(self.g):
            raise ValueError("shape mismatch between A and g")
        if self.A.nnz and self.A.data.min() < 0:
            raise ValueError("A must be nonnegative")
        if len(self.g) and self.g.min() < 0:
            raise ValueError("g must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.g)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.A @ x + self.g

    def residual(self, x: np.ndarray) -> float:
        if self.n == 0:
            return 0.0
        return float(np.max(np.abs(x - self.apply(x))))


def from_truncation(system) -> AffineOperator:
    """Operator view of a :class:`~ergoscope.chain.TruncatedSystem`."""
    return AffineOperator(system.A, system.g)


@dataclass
class MinimalSolution:
    """Solver result.  ``status`` is one of:

    converged     x approximates the finite minimal solution
    diverged      the minimal solution is infinite (component overflowed or
                  the direct solve certified no nonnegative solution)
    inconclusive  iteration budget ran out; x is a certified lower bound
    """

    x: np.ndarray
    method: str
    residual: float
    iterations: int
    status: str = "converged"
    diverging_component: int | None = None
    warnings: tuple[str, ...] = ()

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def solve_iterative(op: AffineOperator, tol: float = 1e-12,
                    max_iter: int = 200_000) -> MinimalSolution:
    """Monotone fixed-point iteration from zero.

    Divergence is declared only on overflow past 1e100 (with the witnessing
    component); hitting ``max_iter`` with finite values yields an
    ``inconclusive`` result whose iterate is a certified lower bound.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    wit = _certified_infinite_block(op)
    if wit is not None:
        return MinimalSolution(
            x=op.g.copy(), method="iterative", residual=np.inf, iterations=0,
            status="diverged", diverging_component=wit,
            warnings=("block with unit row sums and positive sources: "
                      "iterates grow at least linearly",))
    x = np.zeros(op.n)
    for it in range(1, max_iter + 1):
        x_new = op.apply(x)
        # monotone by construction; tolerate only rounding-level regression
        if len(x_new) and np.min(x_new - x) < -1e-12 * (1.0 + np.max(np.abs(x))):
            raise NumericsError("iteration lost monotonicity (invalid operator)")
        m = x_new.max(initial=0.0)
        if m > OVERFLOW_BOUND or not np.isfinite(m):
            return MinimalSolution(
                x=x_new, method="iterative", residual=np.inf, iterations=it,
                status="diverged", diverging_component=int(np.argmax(x_new)))
        delta = np.max(x_new - x, initial=0.0)
        x = x_new
        if delta <= tol * (1.0 + m):
            res = op.residual(x)
            if res <= 10 * tol * (1.0 + m):
                return MinimalSolution(
                    x=x, method="iterative", residual=res, iterations=it)
    return MinimalSolution(
        x=x, method="iterative", residual=op.residual(x), iterations=max_iter,
        status="inconclusive",
        warnings=("max_iter reached; x is a lower bound on the minimal solution",))


def _certified_infinite_block(op: AffineOperator) -> int | None:
    """Index witnessing an infinite minimal solution, when certifiable.

    If the states whose rows carry total weight >= 1 keep all that weight
    among themselves and all receive positive sources, their minimum iterate
    gains at least min g per step, so the minimal solution is infinite even
    though overflow would take forever.  Sufficient only; the overflow bound
    catches the rest.
    """
    if op.n == 0:
        return None
    rs = np.asarray(op.A.sum(axis=1)).ravel()
    S = rs >= 1.0 - 1e-12
    if not S.any():
        return None
    sub = op.A[S][:, S]
    if np.asarray(sub.sum(axis=1)).ravel().min() < 1.0 - 1e-12:
        return None
    if op.g[S].min() <= 0.0:
        return None
    return int(np.flatnonzero(S)[0])


def solve_direct(op: AffineOperator) -> MinimalSolution:
    """Factorize (I - A) x = g; dense below 64 unknowns, sparse LU above.

    Nonnegativity of the result certifies it is the minimal solution
    (strictly positive sources make a negative component impossible when the
    spectral radius of A is below one); a negative component therefore
    reports the minimal solution as infinite.  Singular or ill-conditioned
    factorizations fall back to the iterative path with a warning.
    """
    n = op.n
    if n == 0:
        return MinimalSolution(x=np.zeros(0), method="direct", residual=0.0,
                               iterations=0)
    warnings: tuple[str, ...] = ()
    x = None
    try:
        if n < DENSE_CUTOFF:
            M = np.eye(n) - op.A.toarray()
            x = np.linalg.solve(M, op.g)
            x += np.linalg.solve(M, op.g - M @ x)
        else:
            M = (sp.eye(n, format="csc") - op.A).tocsc()
            with np.errstate(all="ignore"):
                lu = spla.splu(M)
                x = lu.solve(op.g)
                # one refinement pass: downstream closed-form identities
                # amplify any error in the solution by the system size
                x += lu.solve(op.g - M @ x)
    except (np.linalg.LinAlgError, RuntimeError):
        x = None
    if x is not None and np.all(np.isfinite(x)):
        res = op.residual(x)
        scale = 1.0 + float(np.max(np.abs(x)))
        if res <= 1e-8 * scale:
            lo = float(x.min())
            if lo < -NEG_CLAMP * scale:
                return MinimalSolution(
                    x=x, method="direct", residual=res, iterations=0,
                    status="diverged", diverging_component=int(np.argmin(x)),
                    warnings=("direct solution has a negative component: "
                              "no finite minimal nonnegative solution",))
            np.clip(x, 0.0, None, out=x)
            return MinimalSolution(x=x, method="direct", residual=res,
                                   iterations=0)
        warnings = (f"direct residual {res:.3e} above threshold; "
                    "falling back to iteration",)
    else:
        warnings = ("singular direct factorization; falling back to iteration",)
    fb = solve_iterative(op)
    return MinimalSolution(
        x=fb.x, method="direct+iterative_fallback", residual=fb.residual,
        iterations=fb.iterations, status=fb.status,
        diverging_component=fb.diverging_component,
        warnings=warnings + fb.warnings)


@dataclass
class CertificateReport:
    """Residuals of a sub/super-solution check.

    ``residuals`` holds y - (A y + g).  A super-solution (all residuals
    >= -tol) dominates the minimal solution; a sub-solution (all residuals
    <= tol) sits below it only under the boundedness side condition, which
    this check records but cannot prove.
    """

    sense: str
    residuals: np.ndarray
    max_violation: float
    holds: bool
    boundedness_assumed: bool = field(default=False)

    @property
    def verdict(self) -> str:
        if not self.holds:
            return f"not a {self.sense}-solution"
        if self.sense == "sub":
            return "sub-solution (lower bound candidate, boundedness flagged)"
        return "super-solution (upper bound on the minimal solution)"


def check_certificate(op: AffineOperator, y: np.ndarray, sense: str,
                      tol: float = 1e-9) -> CertificateReport:
    """Evaluate y against A y + g componentwise; pure, never raises on data."""
    if sense not in ("sub", "super"):
        raise ValueError("sense must be 'sub' or 'super'")
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("certificate must be finite-valued")
    r = y - op.apply(y)
    scale = 1.0 + float(np.max(np.abs(y), initial=0.0))
    if sense == "super":
        viol = float(np.max(-r, initial=0.0))
    else:
        viol = float(np.max(r, initial=0.0))
    return CertificateReport(
        sense=sense, residuals=r, max_violation=viol,
        holds=viol <= tol * scale, boundedness_assumed=(sense == "sub"))
