"""Input checks shared by the estimator front ends."""
import numpy as np


def check_spectral(X, grid, allow_batch=False):
    """Validate spectral coefficients against ``grid``; returns a complex array."""
    X = np.asarray(X)
    if X.ndim not in ((2, 3) if allow_batch else (2,)):
        raise ValueError(f"expected coefficients of shape (n, n){' or (m, n, n)' if allow_batch else ''}, got {X.shape}")
    grid.check(X)
    if not np.all(np.isfinite(X)):
        raise ValueError("coefficients contain non-finite values")
    return X.astype(complex, copy=False)


def check_physical(X, grid):
    X = np.asarray(X, dtype=float)
    grid.check(X)
    if not np.all(np.isfinite(X)):
        raise ValueError("field contains non-finite values")
    return X
