"""Independent reference implementations used as test oracles."""

import numpy as np


def brute_force_neighbors(matrix, k):
    """All-pairs cosine from raw dot products, then a full sort by (-sim, id)."""
    norms = np.sqrt((matrix ** 2).sum(axis=1))
    sims = (matrix @ matrix.T) / np.outer(norms, norms)
    sims = np.clip(sims, -1.0, 1.0)
    out = []
    for q in range(len(matrix)):
        others = sorted((j for j in range(len(matrix)) if j != q), key=lambda j: (-sims[q, j], j))
        out.append(others[:k])
    return out


def gauss_ridge(X, y, lam):
    """Centred normal equations solved by Gaussian elimination with partial pivoting."""
    X = [list(map(float, r)) for r in X]
    y = list(map(float, y))
    n, p = len(X), len(X[0])
    xm = [sum(r[j] for r in X) / n for j in range(p)]
    ym = sum(y) / n
    Xc = [[r[j] - xm[j] for j in range(p)] for r in X]
    yc = [v - ym for v in y]
    A = [[sum(Xc[i][a] * Xc[i][b] for i in range(n)) + (lam if a == b else 0.0) for b in range(p)]
         + [sum(Xc[i][a] * yc[i] for i in range(n))] for a in range(p)]
    for col in range(p):
        piv = max(range(col, p), key=lambda r: abs(A[r][col]))
        A[col], A[piv] = A[piv], A[col]
        for r in range(col + 1, p):
            f = A[r][col] / A[col][col]
            for c in range(col, p + 1):
                A[r][c] -= f * A[col][c]
    w = [0.0] * p
    for r in range(p - 1, -1, -1):
        w[r] = (A[r][p] - sum(A[r][c] * w[c] for c in range(r + 1, p))) / A[r][r]
    return np.array(w), ym - sum(m * v for m, v in zip(xm, w))
