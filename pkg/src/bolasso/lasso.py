"""Exact Lasso solutions.

The objective throughout is::

    (1 / 2n) * ||y - X w||^2 + mu * ||w||_1

with correlations measured as ``X.T @ r / n``, so the smallest penalty
giving the all-zero solution is ``mu_max = ||X.T y / n||_inf``.

Two independent solvers are provided: :func:`lars_lasso_path` computes
every breakpoint of the piecewise-linear path, and
:func:`coordinate_descent` solves a single penalty level. They only share
the problem container, which keeps the second usable as a check on the
first. :func:`kkt_residual` certifies either output.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import numba

_SPAN_TOL = 1e-10


class DegenerateDesign(ValueError):
    """The active-set Gram matrix became singular along the path."""


class NotConverged(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class LassoProblem:
    """Design matrix ``X`` (n, p) and response ``y`` (n,).

    ``centered`` and ``scaled`` record preprocessing that has already been
    applied; they are checked, not performed. ``scaled`` means every
    nonconstant column satisfies ``||x_j||^2 / n = 1``.
    """

    X: np.ndarray
    y: np.ndarray
    centered: bool = False
    scaled: bool = False

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float).reshape(-1)
        if X.ndim != 2:
            raise ValueError(f"design must be 2-d, got shape {X.shape}")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError(f"design must have n >= 1 and p >= 1, got {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{X.shape[0]} rows but {y.shape[0]} responses")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("problem data must be finite")
        n = X.shape[0]
        if self.centered:
            if np.max(np.abs(X.mean(axis=0)), initial=0.0) > 1e-10 or abs(y.mean()) > 1e-10:
                raise ValueError("problem flagged centered but means are nonzero")
        if self.scaled:
            sq = np.sum(X ** 2, axis=0) / n
            nonconstant = np.ptp(X, axis=0) > 0
            if np.any(np.abs(sq[nonconstant] - 1.0) > 1e-10):
                raise ValueError("problem flagged scaled but column norms differ from 1")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n_samples(self):
        return self.X.shape[0]

    @property
    def n_features(self):
        return self.X.shape[1]

    @cached_property
    def gram(self):
        """``X.T X / n``"""
        G = self.X.T @ self.X / self.n_samples
        G = 0.5 * (G + G.T)
        G.setflags(write=False)
        return G

    @cached_property
    def xty(self):
        """``X.T y / n``"""
        v = self.X.T @ self.y / self.n_samples
        v.setflags(write=False)
        return v

    @property
    def mu_max(self):
        return float(np.max(np.abs(self.xty)))

    def take(self, rows):
        """Problem restricted to (possibly repeated) ``rows``; flags reset."""
        rows = np.asarray(rows, dtype=int)
        return LassoProblem(self.X[rows], self.y[rows])


@dataclass(frozen=True, eq=False)
class PathKnot:
    mu: float
    weights: np.ndarray
    active: tuple = field(init=False)
    signs: np.ndarray = field(init=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "active", support_of(w, 0.0))
        object.__setattr__(self, "signs", sign_pattern_of(w, 0.0))


@dataclass(frozen=True, eq=False)
class LassoPath:
    """Breakpoints of the regularization path.

    ``mus`` is strictly decreasing and ``coefs[k]`` holds the weights at
    ``mus[k]``; the first row is all zeros.
    """

    mus: np.ndarray
    coefs: np.ndarray

    def __post_init__(self):
        mus = np.array(self.mus, dtype=float)
        coefs = np.array(self.coefs, dtype=float)
        mus.setflags(write=False)
        coefs.setflags(write=False)
        object.__setattr__(self, "mus", mus)
        object.__setattr__(self, "coefs", coefs)

    @cached_property
    def knots(self):
        return tuple(PathKnot(float(mu), w) for mu, w in zip(self.mus, self.coefs))

    def __len__(self):
        return self.mus.size

    def __iter__(self):
        return iter(self.knots)


def support_of(w, tol=1e-10):
    """Sorted tuple of indices with ``|w_j| > tol``."""
    w = np.asarray(w, dtype=float)
    return tuple(int(j) for j in np.flatnonzero(np.abs(w) > tol))


def sign_pattern_of(w, tol=1e-10):
    """Signs in {-1, 0, 1}, with entries ``|w_j| <= tol`` mapped to 0."""
    w = np.asarray(w, dtype=float)
    s = np.sign(w).astype(int)
    s[np.abs(w) <= tol] = 0
    return s


def lasso_objective(problem, mu, w):
    r = problem.y - problem.X @ w
    return float(r @ r / (2 * problem.n_samples) + mu * np.sum(np.abs(w)))


def kkt_residual(problem, mu, w):
    """Largest violation of the Lasso subgradient conditions at ``w``.

    With ``g = X.T (X w - y) / n`` a minimizer satisfies
    ``g_j = -mu * sign(w_j)`` on its support and ``|g_j| <= mu`` elsewhere.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    w = np.asarray(w, dtype=float)
    g = problem.gram @ w - problem.xty
    nz = w != 0
    viol = np.where(nz, np.abs(g + mu * np.sign(w)), np.maximum(np.abs(g) - mu, 0.0))
    return float(np.max(viol))


def lars_lasso_path(problem, max_knots=None):
    """Every breakpoint of the Lasso path, from ``mu_max`` down to 0.

    LARS with the Lasso modification: a variable leaves the active set when
    its coefficient reaches zero. Variables that reach the boundary at the
    same step (within 1e-12 relative) enter together, so the lower index is
    never admitted after a higher one. On each segment the active weights
    are solved as ``u - mu * d`` from the active-set equations, and event
    levels and knot weights both come from that one factorization.

    Parameters
    ----------
    problem : LassoProblem
    max_knots : int, optional
        Stop after this many knots (the zero knot counts). The default
        runs to ``mu = 0``.

    Returns
    -------
    LassoPath

    Raises
    ------
    DegenerateDesign
        If the active columns become linearly dependent, e.g. two
        collinear columns reaching the boundary together.
    """
    if max_knots is not None and max_knots < 1:
        raise ValueError("max_knots must be >= 1")
    p = problem.n_features
    # generic paths have a few p breakpoints at most; guards against cycling
    cap = 50 * p + 100 if max_knots is None else min(max_knots, 50 * p + 100)
    return lars_gram(problem.gram, problem.xty, cap)


def lars_gram(Q, q, max_knots):
    """LARS-Lasso from Gram quantities ``Q = X'X/n`` and ``q = X'y/n``."""
    mus, W, status, where = _lars_kernel(np.ascontiguousarray(Q, dtype=float),
                                         np.ascontiguousarray(q, dtype=float),
                                         int(max_knots), _SPAN_TOL)
    if status == 1:
        raise DegenerateDesign(f"active set became singular after knot {where}")
    if status == 2:
        raise DegenerateDesign(f"collinear variables entered together after knot {where}")
    return LassoPath(mus, W)


@numba.njit(cache=True)
def _chol(A, check):
    """Lower Cholesky factor; ok=False if a pivot is <= dim * eps * max diag."""
    k = A.shape[0]
    L = np.zeros((k, k))
    maxdiag = 0.0
    for i in range(k):
        maxdiag = max(maxdiag, A[i, i])
    thresh = k * 2.220446049250313e-16 * maxdiag if check else 0.0
    for j in range(k):
        s = A[j, j]
        for m in range(j):
            s -= L[j, m] * L[j, m]
        if s <= thresh or not s > 0.0:
            return L, False
        L[j, j] = np.sqrt(s)
        for i in range(j + 1, k):
            t = A[i, j]
            for m in range(j):
                t -= L[i, m] * L[j, m]
            L[i, j] = t / L[j, j]
    return L, True


@numba.njit(cache=True)
def _chol_solve(L, b):
    k = b.shape[0]
    z = np.empty(k)
    for i in range(k):
        t = b[i]
        for m in range(i):
            t -= L[i, m] * z[m]
        z[i] = t / L[i, i]
    x = np.empty(k)
    for i in range(k - 1, -1, -1):
        t = z[i]
        for m in range(i + 1, k):
            t -= L[m, i] * x[m]
        x[i] = t / L[i, i]
    return x


@numba.njit(cache=True)
def _schur(Q, base, j):
    """Part of column j's squared norm not explained by the ``base`` columns."""
    k = base.shape[0]
    if k == 0:
        return Q[j, j]
    B = np.empty((k, k))
    r = np.empty(k)
    for a in range(k):
        r[a] = Q[base[a], j]
        for b in range(k):
            B[a, b] = Q[base[a], base[b]]
    L, ok = _chol(B, False)
    if not ok:
        return 0.0
    coef = _chol_solve(L, r)
    return Q[j, j] - np.dot(r, coef)


@numba.njit(cache=True)
def _lars_kernel(Q, q, cap, span_tol):
    p = q.shape[0]
    mus = np.empty(cap)
    W = np.zeros((cap, p))
    c = q.copy()
    mu = np.max(np.abs(c))
    mus[0] = mu
    nk = 1
    if mu == 0.0:
        return mus[:1], W[:1], 0, 0

    active = np.zeros(p, dtype=np.bool_)
    signs = np.zeros(p)
    for j in range(p):
        if abs(c[j]) >= mu * (1 - 1e-12):
            active[j] = True
            signs[j] = np.sign(c[j])
    entered = active.copy()
    dropped = np.zeros(p, dtype=np.bool_)
    blocked = np.zeros(p, dtype=np.bool_)
    enter = np.empty(p)
    drop = np.empty(p)

    while nk < cap:
        A = np.flatnonzero(active)
        k = A.shape[0]
        QAA = np.empty((k, k))
        for a in range(k):
            for b in range(k):
                QAA[a, b] = Q[A[a], A[b]]
        L, ok = _chol(QAA, True)
        if not ok:
            return mus[:nk], W[:nk], 1, nk - 1
        # on this segment w_A(t) = u - t * d
        u = _chol_solve(L, q[A])
        d = _chol_solve(L, signs[A])

        mu_new = 0.0
        for j in range(p):
            enter[j] = -np.inf
            drop[j] = -np.inf
        for j in range(p):
            if active[j] or blocked[j]:
                continue
            # inactive correlation along the segment is e_j + t * a_j
            e = q[j]
            aj = 0.0
            for b in range(k):
                e -= Q[j, A[b]] * u[b]
                aj += Q[j, A[b]] * d[b]
            pos = e / (1.0 - aj) if aj != 1.0 else -np.inf
            neg = -e / (1.0 + aj) if aj != -1.0 else -np.inf
            if dropped[j]:
                # sits on the boundary at mu; only the opposite side readmits it
                cj = e + mu * aj
                if cj > 0:
                    pos = -np.inf
                elif cj < 0:
                    neg = -np.inf
            best = -np.inf
            if pos >= 0.0 and pos < mu:
                best = pos
            if neg >= 0.0 and neg < mu and neg > best:
                best = neg
            enter[j] = best
            if best > mu_new:
                mu_new = best
        for b in range(k):
            j = A[b]
            if entered[j] or d[b] == 0.0:
                continue
            t = u[b] / d[b]
            if t >= 0.0 and t < mu:
                drop[j] = t
                if t > mu_new:
                    mu_new = t
        if mu_new <= mu * 1e-13:
            mu_new = 0.0
        tie = 1e-12 * mu

        w = np.zeros(p)
        for b in range(k):
            w[A[b]] = u[b] - mu_new * d[b]
        dropping = np.zeros(p, dtype=np.bool_)
        entering = np.zeros(p, dtype=np.bool_)
        if mu_new > 0.0:
            for j in range(p):
                if drop[j] >= mu_new - tie:
                    dropping[j] = True
                    w[j] = 0.0
                if enter[j] >= mu_new - tie:
                    entering[j] = True
        mus[nk] = mu_new
        W[nk] = w
        nk += 1
        mu = mu_new
        if mu == 0.0:
            break

        c = q - Q @ w
        any_drop = False
        for j in range(p):
            if dropping[j]:
                active[j] = False
                signs[j] = 0.0
                any_drop = True
        if any_drop:
            blocked[:] = False
        # a column in the span of the active ones can only reach the
        # boundary through roundoff: hold it out until the next drop
        base = np.flatnonzero(active)
        accepted = np.zeros(p, dtype=np.bool_)
        n_acc = 0
        for j in range(p):
            if not entering[j]:
                continue
            tol = span_tol * Q[j, j]
            grown = np.concatenate((base, np.flatnonzero(accepted)))
            if _schur(Q, grown, j) > tol:
                accepted[j] = True
                n_acc += 1
            elif _schur(Q, base, j) <= tol:
                blocked[j] = True
            else:
                return mus[:nk], W[:nk], 2, nk - 1
        for j in range(p):
            if accepted[j]:
                active[j] = True
                signs[j] = np.sign(c[j]) if c[j] != 0.0 else 1.0
        entered = accepted
        dropped = dropping
        if not active.any():
            # everything dropped at once: restart from the current correlations
            j = int(np.argmax(np.abs(c)))
            active[j] = True
            signs[j] = np.sign(c[j])
            entered[j] = True
    return mus[:nk], W[:nk], 0, 0


def path_at(path, mu):
    """Evaluate the piecewise-linear path at ``mu``.

    Returns zeros above the first knot and the exact knot weights at a
    knot. Raises ``ValueError`` below the last knot of a truncated path.
    """
    return path_coefs(path, [mu])[0]


def path_coefs(path, mu_grid):
    """Evaluate the path on many penalty levels at once.

    Returns an array of shape (len(mu_grid), p). Values at or above the
    first knot are zero and a level equal to a knot gets that knot's
    weights exactly. The grid must not extend below the last knot.
    """
    mu_grid = np.asarray(mu_grid, dtype=float).reshape(-1)
    mus, W = path.mus, path.coefs
    if mu_grid.size and mu_grid.min() < mus[-1]:
        raise ValueError(f"mu={mu_grid.min()} lies below the last computed knot {mus[-1]}")
    out = np.zeros((mu_grid.size, W.shape[1]))
    inside = mu_grid < mus[0]
    g = mu_grid[inside]
    # mus is decreasing: k is the knot with mus[k] >= mu > mus[k+1]
    k = np.searchsorted(-mus, -g, side="right") - 1
    exact = mus[k] == g
    k1 = np.minimum(k + 1, mus.size - 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(exact, 0.0, (mus[k] - g) / (mus[k] - mus[k1]))
    vals = (1 - t)[:, None] * W[k] + t[:, None] * W[k1]
    vals[exact] = W[k[exact]]
    out[inside] = vals
    return out


def path_supports(path, mu_grid, tol=0.0):
    """Support of the path at each value of ``mu_grid``.

    Interpolated weights are exact zeros off the segment's active set, so
    the default tolerance is 0.
    """
    return [support_of(w, tol) for w in path_coefs(path, mu_grid)]


@numba.njit(cache=True)
def _cd_kernel(Q, q, mu, w, tol, max_iter):
    p = q.shape[0]
    # r = q - Q w
    r = q - Q @ w
    for it in range(max_iter):
        max_delta = 0.0
        max_w = 0.0
        for j in range(p):
            qjj = Q[j, j]
            if qjj <= 0.0:
                continue
            z = r[j] + qjj * w[j]
            if z > mu:
                new = (z - mu) / qjj
            elif z < -mu:
                new = (z + mu) / qjj
            else:
                new = 0.0
            delta = new - w[j]
            if delta != 0.0:
                for i in range(p):
                    r[i] -= Q[i, j] * delta
                w[j] = new
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
            if abs(new) > max_w:
                max_w = abs(new)
        if max_delta <= tol * (1.0 + max_w):
            return it + 1
    return -1


def coordinate_descent(problem, mu, tol=1e-10, max_iter=100_000, w0=None):
    """Solve the Lasso at one penalty level by cyclic coordinate descent.

    Coordinates are visited in the fixed order ``0..p-1``. Iteration stops
    once a full sweep changes no coordinate by more than
    ``tol * (1 + ||w||_inf)``.

    Raises
    ------
    NotConverged
        If ``max_iter`` sweeps are not enough.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    Q = np.ascontiguousarray(problem.gram)
    q = np.ascontiguousarray(problem.xty)
    w = np.zeros(problem.n_features) if w0 is None else np.array(w0, dtype=float)
    sweeps = _cd_kernel(Q, q, float(mu), w, float(tol), int(max_iter))
    if sweeps < 0:
        raise NotConverged(f"coordinate descent did not converge in {max_iter} sweeps")
    return w
