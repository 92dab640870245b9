"""LLL reduction and integer-relation search.

The basis rows are kept as exact Python ints; Gram-Schmidt data is float.
Sizes here are tiny (<= ~20 rows), so the simple textbook loop with full
orthogonalization is plenty fast.
"""

from __future__ import annotations

from math import gcd

import numpy as np

RELATION_SCALE = 1e10


def lll_reduce(basis: list[list[int]], delta: float = 0.99) -> list[list[int]]:
    """LLL-reduce integer row vectors. Returns a new list of rows.

    The rows stay exact Python ints; Gram-Schmidt data is float and updated
    incrementally under size reductions (a swap triggers a full recompute,
    which is cheap at these sizes).
    """
    b = [list(map(int, row)) for row in basis]
    n = len(b)
    if n <= 1:
        return b

    def gram_schmidt():
        bf = np.array(b, dtype=float)
        mu = np.zeros((n, n))
        bstar = np.zeros_like(bf)
        norms = np.zeros(n)
        for i in range(n):
            bstar[i] = bf[i]
            for j in range(i):
                mu[i, j] = 0.0 if norms[j] == 0 else bf[i] @ bstar[j] / norms[j]
                bstar[i] -= mu[i, j] * bstar[j]
            norms[i] = bstar[i] @ bstar[i]
        return mu, norms

    mu, norms = gram_schmidt()
    k = 1
    steps = 0
    while k < n:
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q:
                b[k] = [x - q * y for x, y in zip(b[k], b[j])]
                mu[k, :j] -= q * mu[j, :j]
                mu[k, j] -= q
        if norms[k] >= (delta - mu[k, k - 1] ** 2) * norms[k - 1]:
            k += 1
            continue
        b[k], b[k - 1] = b[k - 1], b[k]
        steps += 1
        if steps % 512 == 0:
            mu, norms = gram_schmidt()  # periodic refresh against float drift
            k = max(k - 1, 1)
            continue
        # O(n) swap update of the Gram-Schmidt data (classical step 2)
        mu_old = mu[k, k - 1]
        b_new = norms[k] + mu_old * mu_old * norms[k - 1]
        if b_new <= 0:
            mu, norms = gram_schmidt()
            k = max(k - 1, 1)
            continue
        mu[k, k - 1] = mu_old * norms[k - 1] / b_new
        norms[k] = norms[k - 1] * norms[k] / b_new
        norms[k - 1] = b_new
        if k > 1:
            mu[[k - 1, k], : k - 1] = mu[[k, k - 1], : k - 1]
        for i in range(k + 1, n):
            t = mu[i, k]
            mu[i, k] = mu[i, k - 1] - mu_old * t
            mu[i, k - 1] = t + mu[k, k - 1] * mu[i, k]
        k = max(k - 1, 1)
    return b


def primitive(vec) -> np.ndarray:
    v = [int(x) for x in vec]
    g = 0
    for x in v:
        g = gcd(g, abs(x))
    if g > 1:
        v = [x // g for x in v]
    for x in v:
        if x != 0:
            if x < 0:
                v = [-y for y in v]
            break
    return np.array(v, dtype=object)


def relation_candidates(a: np.ndarray, scale: float = RELATION_SCALE) -> list[np.ndarray]:
    """Integer vectors x with a @ x near zero, by LLL on [I | scale*a^T].

    `a` is a real m x d matrix of constraints. Candidates come back ordered by
    the reduced basis; callers re-verify residuals and coefficient bounds.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    m, d = a.shape
    rows = []
    for j in range(d):
        tail = [int(round(scale * a[i, j])) for i in range(m)]
        rows.append([1 if t == j else 0 for t in range(d)] + tail)
    reduced = lll_reduce(rows)
    out = []
    for row in reduced:
        x = np.array(row[:d], dtype=object)
        if any(v != 0 for v in x):
            out.append(primitive(x))
    return out


def small_relation(a: np.ndarray, bound: int, residual_tol: float,
                   scale: float = RELATION_SCALE):
    """First LLL candidate x with |x|_inf <= bound and ||a x|| < residual_tol * |x|."""
    if bound < 1:
        return None
    a = np.atleast_2d(np.asarray(a, dtype=float))
    for x in relation_candidates(a, scale):
        xf = np.array([int(v) for v in x], dtype=float)
        if np.max(np.abs(xf)) > bound:
            continue
        if np.linalg.norm(a @ xf) < residual_tol * np.linalg.norm(xf):
            return x
    return None
