"""Small shared linear-algebra helpers for the engines."""

from __future__ import annotations

import numpy as np


def drop_collinear(Z: np.ndarray, names, tol: float = 1e-8):
    """Greedy left-to-right removal of (near-)collinear columns.

    Keeps the first column of every dependent group, so the result is
    deterministic and order-stable.  Returns (Z_kept, kept_names,
    dropped_names).  Constant columns are treated as collinear with the
    intercept and dropped.
    """
    Z = np.asarray(Z, dtype=float)
    n = Z.shape[0]
    basis = [np.ones(n) / np.sqrt(n)]  # implicit intercept
    kept_idx, dropped = [], []
    for j, name in enumerate(names):
        v = Z[:, j].copy()
        scale = np.linalg.norm(v)
        if scale == 0:
            dropped.append(name)
            continue
        for b in basis:
            v -= (b @ v) * b
        # re-orthogonalize once for numerical safety
        for b in basis:
            v -= (b @ v) * b
        resid = np.linalg.norm(v)
        if resid <= tol * scale:
            dropped.append(name)
            continue
        basis.append(v / resid)
        kept_idx.append(j)
    return Z[:, kept_idx], [names[j] for j in kept_idx], dropped
