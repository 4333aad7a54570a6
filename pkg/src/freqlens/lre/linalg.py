"""Rank-truncated pseudoinverse used for representation edits."""

from __future__ import annotations

import numpy as np

SINGULAR_FLOOR = 1e-12  # relative to the largest singular value


def low_rank_pinv(W: np.ndarray, rank: int) -> np.ndarray:
    """Truncated-SVD pseudoinverse: keep the top `rank` singular triplets.

    Singular values below SINGULAR_FLOOR * sigma_max are treated as zero
    before inversion, so a nominally full-rank request on a degenerate
    matrix stays stable.
    """
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2:
        raise ValueError("W must be a matrix")
    full = min(W.shape)
    if not 1 <= rank <= full:
        raise ValueError(f"rank {rank} outside [1, {full}]")
    U, sigma, Vt = np.linalg.svd(W, full_matrices=False)
    keep = sigma > SINGULAR_FLOOR * sigma[0] if sigma[0] > 0 else np.zeros_like(sigma, bool)
    inv = np.zeros_like(sigma)
    use = np.arange(full) < rank
    use &= keep
    inv[use] = 1.0 / sigma[use]
    return (Vt.T * inv) @ U.T
