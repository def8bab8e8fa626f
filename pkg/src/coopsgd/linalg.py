"""Dense symmetric eigenvalue solver.

Householder reduction to tridiagonal form followed by the implicit QL
iteration with Wilkinson-style shifts. Only eigenvalues are produced; the
mixing-matrix analysis never needs eigenvectors.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["tridiagonalize", "tridiagonal_eigvals", "symmetric_eigvals"]

_EPS = np.finfo(float).eps
_MAX_QL_ITER = 60


def tridiagonalize(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reduce a symmetric matrix to tridiagonal form by Householder reflections.

    Returns ``(diag, offdiag)`` with ``len(offdiag) == n - 1``. The reduction is
    an orthogonal similarity, so the spectrum is preserved.
    """
    a = np.array(a, dtype=float, copy=True)
    n = a.shape[0]
    offdiag = np.zeros(max(n - 1, 0))
    for k in range(n - 2):
        x = a[k + 1 :, k]
        norm_x = math.sqrt(float(x @ x))
        if norm_x == 0.0:
            offdiag[k] = 0.0
            continue
        alpha = -norm_x if x[0] >= 0 else norm_x
        v = x.copy()
        v[0] -= alpha
        v /= math.sqrt(float(v @ v))
        sub = a[k + 1 :, k + 1 :]
        w = sub @ v
        q = w - float(v @ w) * v
        sub -= 2.0 * (np.outer(v, q) + np.outer(q, v))
        offdiag[k] = alpha
    if n >= 2:
        offdiag[n - 2] = a[n - 1, n - 2]
    return np.diag(a).copy(), offdiag


def tridiagonal_eigvals(diag: np.ndarray, offdiag: np.ndarray) -> np.ndarray:
    """Eigenvalues of a symmetric tridiagonal matrix, implicit QL iteration.

    Returned in ascending order.
    """
    d = [float(x) for x in diag]
    n = len(d)
    e = [float(x) for x in offdiag] + [0.0]
    if len(e) != n and n > 0:
        raise ValueError("offdiag must have length len(diag) - 1")

    for l in range(n):
        iters = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= _EPS * dd:
                    break
                m += 1
            if m == l:
                break
            iters += 1
            if iters > _MAX_QL_ITER:
                raise np.linalg.LinAlgError("QL iteration failed to converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            deflated = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.sort(np.array(d))


def symmetric_eigvals(a: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of a dense symmetric matrix.

    Symmetry is assumed, not checked.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] == 0:
        return np.zeros(0)
    d, e = tridiagonalize(a)
    return tridiagonal_eigvals(d, e)
