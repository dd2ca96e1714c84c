"""Input validation helpers shared by the estimators."""

from __future__ import annotations

import numpy as np

from agentfp.errors import ShapeMismatch


def check_mtam_array(X, W: int | None = None, dtype=np.float32) -> np.ndarray:
    """Coerce MTAM input to shape (n, 2, 2, W).

    Accepts (n, 4, W), (n, 2, 2, W) or a single (4, W) / (2, 2, W) sample.
    """
    X = np.asarray(X, dtype=dtype)
    if X.ndim == 2 and X.shape[0] == 4:
        X = X[None]
    elif X.ndim == 3 and X.shape[:2] == (2, 2):
        X = X[None]
    if X.ndim == 3 and X.shape[1] == 4:
        X = X.reshape(len(X), 2, 2, X.shape[2])
    if X.ndim != 4 or X.shape[1:3] != (2, 2):
        raise ShapeMismatch(f"expected MTAMs shaped (n, 2, 2, W) or (n, 4, W), got {X.shape}")
    if W is not None and X.shape[3] != W:
        raise ShapeMismatch(f"MTAM width {X.shape[3]} does not match model width {W}")
    if not np.all(np.isfinite(X)):
        raise ValueError("MTAM input contains non-finite values")
    return X


def check_probability(x, name: str, *, open_low=True, open_high=True) -> float:
    x = float(x)
    lo_ok = x > 0 if open_low else x >= 0
    hi_ok = x < 1 if open_high else x <= 1
    if not (lo_ok and hi_ok):
        lo = "(" if open_low else "["
        hi = ")" if open_high else "]"
        raise ValueError(f"{name} must lie in {lo}0, 1{hi}, got {x}")
    return x


def check_random_state(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
