from __future__ import annotations

import numpy as np
from scipy import stats

MIN_POINTS = 4


def fit_loglog_slope(points) -> tuple[float, float]:
    """Least-squares slope of ``log y`` against ``log x``.

    Returns ``(slope, half_width)`` where the half-width is the 95% Student-t
    interval on the slope. Non-finite or non-positive points are dropped
    before counting.
    """
    pts = np.asarray(list(points), dtype=float).reshape(-1, 2)
    keep = np.all(np.isfinite(pts), axis=1) & np.all(pts > 0, axis=1)
    pts = pts[keep]
    n = pts.shape[0]
    if n < MIN_POINTS:
        raise ValueError(f"need at least {MIN_POINTS} finite positive points, got {n}")
    lx, ly = np.log(pts[:, 0]), np.log(pts[:, 1])
    fit = stats.linregress(lx, ly)
    half = float(stats.t.ppf(0.975, n - 2) * fit.stderr)
    return float(fit.slope), half
