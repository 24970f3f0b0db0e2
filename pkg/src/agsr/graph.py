"""Graph primitives: adjacency normalization, Laplacians, a deterministic
symmetric eigensolver, padding and node strength.

Degrees and strengths are taken over absolute edge weights because
functional connectivity weights are correlations and can be negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import EigenFailure, InvalidGraph, InvalidTarget, NotSymmetric


@dataclass(frozen=True)
class WeightedGraph:
    """Symmetric weighted adjacency matrix with a zero diagonal."""

    adj: np.ndarray

    def __post_init__(self):
        adj = np.array(self.adj, dtype=np.float64)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise InvalidGraph(f"adjacency must be square, got shape {adj.shape}")
        if not np.all(np.isfinite(adj)):
            raise InvalidGraph("adjacency contains non-finite entries")
        if not np.array_equal(adj, adj.T):
            raise InvalidGraph("adjacency is not exactly symmetric")
        if np.any(np.diag(adj) != 0):
            raise InvalidGraph("adjacency has non-zero diagonal entries")
        adj.setflags(write=False)
        object.__setattr__(self, "adj", adj)

    @property
    def n(self) -> int:
        return self.adj.shape[0]


@dataclass(frozen=True)
class EigenDecomposition:
    """Ascending eigenvalues and sign-normalized eigenvectors (as columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _adjacency(g) -> np.ndarray:
    if isinstance(g, WeightedGraph):
        return g.adj
    adj = np.asarray(g, dtype=np.float64)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise InvalidGraph(f"adjacency must be square, got shape {adj.shape}")
    if not np.all(np.isfinite(adj)):
        raise InvalidGraph("adjacency contains non-finite entries")
    return adj


def normalized_adjacency(g) -> np.ndarray:
    """Return ``D^-1/2 (A + I) D^-1/2`` with ``D_ii = sum_j |A + I|_ij``."""
    a_hat = _adjacency(g) + np.eye(_adjacency(g).shape[0])
    inv_sqrt = 1.0 / np.sqrt(np.abs(a_hat).sum(axis=1))
    # the outer product is exactly symmetric, so the result is too
    return np.outer(inv_sqrt, inv_sqrt) * a_hat


def graph_laplacian(g) -> np.ndarray:
    """Unnormalized Laplacian ``D - A`` using absolute-weight degrees."""
    adj = _adjacency(g)
    return np.diag(np.abs(adj).sum(axis=1)) - adj


def symmetrize(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    return (m + m.T) / 2


def node_strength(g) -> np.ndarray:
    return np.abs(_adjacency(g)).sum(axis=1)


def selection_matrix(n: int, k: int) -> np.ndarray:
    """``k`` vertically stacked ``n x n`` identities, shape ``(n*k, n)``."""
    if n < 1 or k < 1:
        raise ValueError("n and k must be positive")
    return np.tile(np.eye(n), (k, 1))


def _borders(target: int, size: int) -> tuple[int, int]:
    diff = target - size
    # odd differences put the extra row/column on the top-left side
    return (diff + 1) // 2, diff // 2


def pad_isotropic(m, target: int) -> np.ndarray:
    """Center ``m`` inside a ``target x target`` zero matrix."""
    m = np.asarray(m, dtype=np.float64)
    size = m.shape[0]
    if target < size:
        raise InvalidTarget(f"cannot pad a {size}x{size} matrix to {target}")
    lo, hi = _borders(target, size)
    out = np.zeros((target, target))
    out[lo:target - hi, lo:target - hi] = m
    return out


def unpad_isotropic(m, original: int) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    target = m.shape[0]
    if original > target:
        raise InvalidTarget(f"cannot unpad a {target}x{target} matrix to {original}")
    lo, hi = _borders(target, original)
    return m[lo:target - hi, lo:target - hi].copy()


def padding_border(target: int, size: int) -> int:
    """Leading border width used when padding ``size`` up to ``target``."""
    if target < size:
        raise InvalidTarget(f"target {target} is smaller than {size}")
    return _borders(target, size)[0]


# --- symmetric eigensolver -------------------------------------------------
#
# Householder reduction to tridiagonal form followed by the implicit QL
# algorithm, after the EISPACK tred2/tql2 pair.


def _tridiagonalize(a: np.ndarray):
    n = a.shape[0]
    v = a.copy()
    d = v[n - 1, :].copy()
    e = np.zeros(n)

    for i in range(n - 1, 0, -1):
        scale = np.abs(d[:i]).sum()
        h = 0.0
        if scale == 0.0:
            e[i] = d[i - 1]
            d[:i] = v[i - 1, :i]
            v[i, :i] = 0.0
            v[:i, i] = 0.0
        else:
            d[:i] /= scale
            h = float(d[:i] @ d[:i])
            f = d[i - 1]
            g = math.sqrt(h)
            if f > 0:
                g = -g
            e[i] = scale * g
            h -= f * g
            d[i - 1] = f - g
            e[:i] = 0.0

            for j in range(i):
                f = d[j]
                v[j, i] = f
                g = e[j] + v[j, j] * f
                if j + 1 < i:
                    col = v[j + 1:i, j]
                    g += col @ d[j + 1:i]
                    e[j + 1:i] += col * f
                e[j] = g

            e[:i] /= h
            f = float(e[:i] @ d[:i])
            hh = f / (h + h)
            e[:i] -= hh * d[:i]
            for j in range(i):
                f = d[j]
                g = e[j]
                v[j:i, j] -= f * e[j:i] + g * d[j:i]
                d[j] = v[i - 1, j]
                v[i, j] = 0.0
        d[i] = h

    for i in range(n - 1):
        v[n - 1, i] = v[i, i]
        v[i, i] = 1.0
        h = d[i + 1]
        if h != 0.0:
            d[:i + 1] = v[:i + 1, i + 1] / h
            g = v[:i + 1, i + 1] @ v[:i + 1, :i + 1]
            v[:i + 1, :i + 1] -= np.outer(d[:i + 1], g)
        v[:i + 1, i + 1] = 0.0
    d[:] = v[n - 1, :]
    v[n - 1, :] = 0.0
    v[n - 1, n - 1] = 1.0
    e[0] = 0.0
    return d, e, v


def _implicit_ql(d: np.ndarray, e: np.ndarray, v: np.ndarray, max_iter: int) -> None:
    n = d.shape[0]
    e[:n - 1] = e[1:].copy()
    e[n - 1] = 0.0
    f = 0.0
    tst1 = 0.0
    eps = 2.0 ** -52
    iterations = 0

    for l in range(n):
        tst1 = max(tst1, abs(d[l]) + abs(e[l]))
        m = l
        while m < n - 1 and abs(e[m]) > eps * tst1:
            m += 1
        if m > l:
            while True:
                iterations += 1
                if iterations > max_iter:
                    raise EigenFailure(f"QL iteration did not converge in {max_iter} sweeps")
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = math.hypot(p, 1.0)
                if p < 0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                d[l + 2:] -= h
                f += h

                p = d[m]
                c = c2 = c3 = 1.0
                el1 = e[l + 1]
                s = s2 = 0.0
                for i in range(m - 1, l - 1, -1):
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = math.hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    col_next = v[:, i + 1].copy()
                    v[:, i + 1] = s * v[:, i] + c * col_next
                    v[:, i] = c * v[:, i] - s * col_next
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if abs(e[l]) <= eps * tst1:
                    break
        d[l] += f
        e[l] = 0.0


def eigendecompose(laplacian) -> EigenDecomposition:
    """Eigendecomposition of a real symmetric matrix.

    Eigenvalues come back ascending. Each eigenvector column is flipped so
    that its entry of largest magnitude (first such row on ties) is positive,
    which makes the output a deterministic function of the input.
    """
    lap = np.asarray(laplacian, dtype=np.float64)
    if lap.ndim != 2 or lap.shape[0] != lap.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {lap.shape}")
    if not np.all(np.isfinite(lap)):
        raise EigenFailure("matrix contains non-finite entries")
    if np.max(np.abs(lap - lap.T), initial=0.0) > 1e-10:
        raise NotSymmetric("matrix is not symmetric within 1e-10")
    n = lap.shape[0]
    if n == 0:
        return EigenDecomposition(np.zeros(0), np.zeros((0, 0)))
    if n == 1:
        return EigenDecomposition(lap[0].copy(), np.ones((1, 1)))

    d, e, v = _tridiagonalize((lap + lap.T) / 2)
    _implicit_ql(d, e, v, max_iter=30 * n)

    order = np.argsort(d, kind="stable")
    values = d[order]
    vectors = v[:, order]
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.where(vectors[pivots, np.arange(n)] < 0, -1.0, 1.0)
    return EigenDecomposition(values, vectors * signs[None, :])
