"""Ensemble statistics with standard errors and the empirical validation layer."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import trapezoid

from . import analytics as an
from .errors import DomainError
from .quadrature import QuadConfig
from .simulate import Grid, PathEnsemble, stationary_path

__all__ = [
    "CovEstimate",
    "ErgodicityResult",
    "DecayRow",
    "estimate_cov",
    "estimate_moment",
    "ergodicity_check",
    "decay_study",
    "MIN_PATHS",
]

MIN_PATHS = 30


@dataclass(frozen=True)
class CovEstimate:
    value: float
    std_error: float
    n_paths: int

    def z_score(self, target: float) -> float:
        diff = self.value - target
        if self.std_error == 0.0:
            return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
        return diff / self.std_error

    def within(self, target: float, k: float = 3.0) -> bool:
        return abs(self.value - target) <= k * self.std_error


def _mean_se(terms: np.ndarray) -> CovEstimate:
    n = terms.size
    if n == 0:
        return CovEstimate(0.0, 0.0, 0)
    if n < MIN_PATHS:
        raise DomainError(f"need at least {MIN_PATHS} paths, got {n}")
    # numpy's pairwise summation keeps the reduction order-stable
    mean = float(np.mean(terms))
    se = float(np.std(terms, ddof=1)) / math.sqrt(n)
    return CovEstimate(mean, se, n)


def estimate_cov(e: PathEnsemble, s: float, t: float) -> CovEstimate:
    """Sample mean of ``X_s X_t`` across paths with its standard error."""
    return _mean_se(e.at(s) * e.at(t))


def estimate_moment(e: PathEnsemble, t: float, p: int) -> CovEstimate:
    """Sample ``p``-th moment at ``t`` with its standard error."""
    if isinstance(p, bool) or not isinstance(p, (int, np.integer)) or p < 1:
        raise DomainError(f"moment order must be an integer >= 1, got {p!r}")
    return _mean_se(e.at(t) ** p)


@dataclass(frozen=True)
class ErgodicityResult:
    time_avg_mean: float
    expected: float
    z_score: float
    std_error: float
    degenerate: bool


def ergodicity_check(
    e: PathEnsemble,
    f: str = "identity",
    ou: an.OUSpec | None = None,
    config: QuadConfig | None = None,
) -> ErgodicityResult:
    """Compare per-path time averages of ``f(Z)`` with the ensemble expectation.

    The expectation is 0 for ``"identity"`` and the stationary variance for
    ``"square"``.  The grid must span at least ``50 / theta``.  Constant
    time-averages across paths are reported as ``degenerate``.
    """
    ou = ou if ou is not None else e.process
    if not isinstance(ou, an.OUSpec):
        raise DomainError("ergodicity_check needs the OU specification of the ensemble")
    span = e.grid.t1 - e.grid.t0
    if span < 50.0 / ou.theta:
        raise DomainError(f"time span {span} is shorter than 50 / theta = {50.0 / ou.theta}")
    if f == "identity":
        vals = e.paths
        expected = 0.0
    elif f == "square":
        vals = e.paths**2
        expected = an.stationary_variance(ou, config)
    else:
        raise DomainError(f"unknown functional {f!r}")
    averages = trapezoid(vals, e.grid.points, axis=1) / span
    n = averages.size
    mean = float(np.mean(averages))
    se = float(np.std(averages, ddof=1)) / math.sqrt(n) if n > 1 else 0.0
    degenerate = se == 0.0
    if degenerate:
        z = 0.0 if mean == expected else math.copysign(math.inf, mean - expected)
    else:
        z = (mean - expected) / se
    return ErgodicityResult(mean, expected, z, se, degenerate)


@dataclass(frozen=True)
class DecayRow:
    lag: float
    estimate: CovEstimate
    analytic: float


def decay_study(
    ou: an.OUSpec,
    lags: Sequence[float],
    n_paths: int,
    seed: int,
    dt: float | None = None,
    burn_in: float | None = None,
    threads: int = 1,
    config: QuadConfig | None = None,
) -> list[DecayRow]:
    """Monte-Carlo lag covariances of the stationary solution next to the analytic values.

    Each path contributes the product ``Z_0 Z_lag``.  ``dt`` defaults to the
    largest step that puts every lag on the grid with at least 32 steps per
    unit of the smallest positive lag.
    """
    lags = [float(x) for x in lags]
    if not lags or any(x < 0 for x in lags):
        raise DomainError("lags must be a nonempty list of nonnegative numbers")
    t_max = max(lags)
    positive = [x for x in lags if x > 0]
    if dt is None:
        dt = (min(positive) if positive else 1.0) / 32.0
    n = int(round(t_max / dt)) + 1 if t_max > 0 else 2
    t1 = (n - 1) * dt
    grid = Grid.uniform(t1, n)
    e = stationary_path(ou, grid, n_paths, seed, burn_in=burn_in, threads=threads, config=config)
    analytic = an.stationary_autocov(ou, np.array(lags), config)
    rows = []
    for lag, a in zip(lags, np.atleast_1d(analytic)):
        rows.append(DecayRow(lag, estimate_cov(e, 0.0, lag), float(a)))
    return rows
