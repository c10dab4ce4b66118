"""Moment expansion of the design matrix for CBPS and entropy balancing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import DesignMatrix
from .linalg import drop_collinear


@dataclass(frozen=True)
class MomentExpansion:
    """Powers 1..m of the numeric design columns, standardized.

    Dummy columns contribute only their first power.  Near-collinear
    columns (a binary confounder's square, for instance) are dropped and
    listed in ``dropped``.  ``raw`` keeps the unstandardized powers so
    balance can be verified on the original scale.
    """

    m: int
    Z: np.ndarray
    names: tuple
    raw: np.ndarray
    center: np.ndarray
    scale: np.ndarray
    dropped: tuple


def expand_moments(dm: DesignMatrix, m: int, estimand: str) -> MomentExpansion:
    """Build the standardized moment matrix.

    Standardization centers and scales each power column by its source
    group's statistics: the control group under ATT (the group being
    reweighted) and the full sample under ATE.
    """
    if m not in (1, 2, 3):
        raise ValueError("m must be 1, 2, or 3")
    if estimand not in ("ATE", "ATT"):
        raise ValueError(f"unsupported estimand {estimand!r}")

    numeric = set(dm.numeric_cols)
    cols, names = [], []
    for j, name in enumerate(dm.column_names):
        x = dm.X[:, j]
        cols.append(x)
        names.append(name)
        if name in numeric:
            for power in range(2, m + 1):
                cols.append(x ** power)
                names.append(f"{name}^{power}")
    raw = np.column_stack(cols)

    source = dm.T == 0 if estimand == "ATT" else np.ones(dm.n, dtype=bool)
    center = raw[source].mean(axis=0)
    sd = raw[source].std(axis=0, ddof=1)

    usable = sd > 0
    raw = raw[:, usable]
    center, sd = center[usable], sd[usable]
    kept_names = [n for n, u in zip(names, usable) if u]
    dropped = [n for n, u in zip(names, usable) if not u]

    Z = (raw - center) / sd
    Z, kept, collinear = drop_collinear(Z, kept_names)
    keep_idx = [kept_names.index(n) for n in kept]
    return MomentExpansion(
        m=m, Z=Z, names=tuple(kept),
        raw=raw[:, keep_idx], center=center[keep_idx], scale=sd[keep_idx],
        dropped=tuple(dropped + collinear))
