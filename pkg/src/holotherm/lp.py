"""Dense two-phase primal simplex with Bland's rule.

Sized for the small exact transport programs in this package (up to a few
hundred columns). Solves   max c.x  s.t.  A x = b, x >= 0   and recovers the
equality duals y with A^T y >= c from the optimal basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, InfeasibleError

EPS = 1e-11


@dataclass(frozen=True, eq=False)
class LPResult:
    x: np.ndarray
    y: np.ndarray
    value: float
    basis: tuple
    iterations: int


def _pivot(T: np.ndarray, r: int, k: int) -> None:
    T[r] /= T[r, k]
    col = T[:, k].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _iterate(T, basis, allowed, max_iter, count):
    """Bland's rule on a tableau whose last row holds reduced costs."""
    m = T.shape[0] - 1
    while True:
        if count >= max_iter:
            raise ConvergenceError("simplex iteration cap reached", iterations=count)
        rc = T[-1, :-1]
        enter = next((j for j in allowed if rc[j] > EPS), None)
        if enter is None:
            return count
        col = T[:m, enter]
        rows = [i for i in range(m) if col[i] > EPS]
        if not rows:
            raise InfeasibleError("linear program is unbounded")
        ratios = [(T[i, -1] / col[i], basis[i], i) for i in rows]
        best = min(r[0] for r in ratios)
        # Bland: among minimal ratios leave the smallest basic index
        leave = min((b, i) for q, b, i in ratios if q <= best + EPS)[1]
        _pivot(T, leave, enter)
        basis[leave] = enter
        count += 1


def simplex_max(c, A, b, max_iter: int = 50_000) -> LPResult:
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    sign = np.where(b < 0, -1.0, 1.0)
    A_s, b_s = A * sign[:, None], b * sign

    # phase I: maximize -sum(artificials)
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A_s
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b_s
    T[-1, :n] = A_s.sum(axis=0)
    T[-1, -1] = b_s.sum()
    basis = list(range(n, n + m))
    count = _iterate(T, basis, range(n + m), max_iter, 0)
    if T[-1, -1] > 1e-9 * max(1.0, np.abs(b_s).sum()):
        raise InfeasibleError(f"no feasible point (phase I residual {T[-1, -1]:.3g})")

    # drive artificials out of the basis; rows that cannot pivot are redundant
    keep = []
    for i in range(m):
        if basis[i] >= n:
            k = next((j for j in range(n) if abs(T[i, j]) > 1e-9), None)
            if k is None:
                continue
            _pivot(T, i, k)
            basis[i] = k
        keep.append(i)
    T = np.vstack([T[keep], T[-1:]])
    basis = [basis[i] for i in keep]
    T = np.delete(T, np.s_[n:n + m], axis=1)

    # phase II
    T[-1, :] = 0.0
    T[-1, :n] = c
    for i, j in enumerate(basis):
        T[-1] -= c[j] * T[i]
    count = _iterate(T, basis, range(n), max_iter, count)

    x = np.zeros(n)
    x[basis] = T[:-1, -1]
    x[np.abs(x) < 1e-15] = 0.0
    B = A_s[np.ix_(keep, basis)]
    y_kept = np.linalg.solve(B.T, c[basis])
    y = np.zeros(m)
    y[keep] = y_kept
    y *= sign
    return LPResult(x, y, float(c @ x), tuple(basis), count)
