"""Least-squares power-law fits."""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..errors import DomainError


@dataclass(frozen=True)
class RegressionFit:
    slope: float
    intercept: float
    r_squared: float
    points: tuple

    def predict(self, x):
        return np.exp(self.intercept) * np.asarray(x, dtype=float) ** self.slope


def fit_loglog(points):
    """Ordinary least squares of ``log y`` on ``log x``."""
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 3:
        raise DomainError("a log-log fit needs at least 3 points")
    xy = np.array(pts)
    if not np.all(np.isfinite(xy)) or np.any(xy <= 0):
        raise DomainError("log-log fit needs finite positive coordinates")
    lx, ly = np.log(xy[:, 0]), np.log(xy[:, 1])
    if np.ptp(lx) == 0:
        raise DomainError("all abscissae coincide")
    res = stats.linregress(lx, ly)
    # a constant series has zero variance; report a perfect fit
    r2 = 1.0 if np.ptp(ly) == 0 else float(min(max(res.rvalue ** 2, 0.0), 1.0))
    return RegressionFit(float(res.slope), float(res.intercept), r2, tuple(pts))
