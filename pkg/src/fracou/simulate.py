"""Exact-in-law Gaussian path generation and OU path construction.

Driving paths are centered Gaussian vectors on a time grid.  Two exact
samplers are available:

* circulant embedding of the stationary increment sequence (fBm and the
  second-kind noise on uniform grids starting at 0);
* dense Cholesky factorization of the covariance matrix (any grid, any
  Gaussian driver), with a small escalating jitter for numerically
  rank-deficient matrices.

OU paths are built pathwise from the driver through integration by parts,
``X_t = G_t - theta e^{-theta t} int_0^t e^{theta r} G_r dr``, with the
integral evaluated by a recursive trapezoidal rule.

Randomness: path ``i`` draws from its own generator seeded with
``SeedSequence(seed, spawn_key=(i,))``, so a path does not depend on how many
paths are requested or on how the work is split across threads.
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy.linalg import cholesky

from . import kernels as kn
from .analytics import FirstKind, OUSpec, SecondKind
from .errors import DomainError, NotPositiveDefiniteError, UnsupportedProcessError
from .quadrature import DEFAULT_CONFIG, QuadConfig, integrate_1d

__all__ = [
    "Grid",
    "PathEnsemble",
    "path_rng",
    "sample_gaussian",
    "ou_first_kind",
    "ou_second_kind",
    "ibp_weights",
    "time_change",
    "second_kind_noise",
    "second_kind_increment_autocov",
    "stationary_path",
]

log = logging.getLogger(__name__)

CHUNK = 256
_JITTERS = (0.0, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10)
_CLIP_MASS = 1e-8


@dataclass(frozen=True)
class Grid:
    """Strictly increasing time grid; uniform unless explicit points are given."""

    t0: float
    t1: float
    n: int
    points_: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.n < 2:
            raise DomainError(f"a grid needs n >= 2 points, got {self.n}")
        if not (self.t0 >= 0 and self.t1 > self.t0):
            raise DomainError(f"need 0 <= t0 < t1, got t0={self.t0}, t1={self.t1}")
        if self.points_ is not None:
            pts = np.asarray(self.points_, dtype=float)
            if pts.size != self.n or np.any(np.diff(pts) <= 0):
                raise DomainError("grid points must be strictly increasing and match n")
            if pts[0] != self.t0 or pts[-1] != self.t1:
                raise DomainError("grid points must start at t0 and end at t1")

    @classmethod
    def uniform(cls, t1: float, n: int, t0: float = 0.0) -> "Grid":
        return cls(float(t0), float(t1), int(n))

    @classmethod
    def from_points(cls, points) -> "Grid":
        pts = tuple(float(x) for x in points)
        if len(pts) < 2:
            raise DomainError("a grid needs at least 2 points")
        grid = cls(pts[0], pts[-1], len(pts), pts)
        if grid.uniform_spacing:
            return cls(pts[0], pts[-1], len(pts))
        return grid

    @property
    def points(self) -> np.ndarray:
        if self.points_ is not None:
            return np.asarray(self.points_, dtype=float)
        return np.linspace(self.t0, self.t1, self.n)

    @property
    def uniform_spacing(self) -> bool:
        if self.points_ is None:
            return True
        d = np.diff(np.asarray(self.points_, dtype=float))
        return bool(np.allclose(d, d[0], rtol=1e-12, atol=0))

    @property
    def dt(self) -> float:
        if not self.uniform_spacing:
            raise DomainError("dt is only defined for uniform grids")
        return (self.t1 - self.t0) / (self.n - 1)

    def index_of(self, t: float) -> int:
        """Index of the grid point equal to ``t`` (no interpolation)."""
        pts = self.points
        i = int(np.argmin(np.abs(pts - t)))
        scale = max(1.0, abs(self.t1))
        if abs(pts[i] - t) > 1e-9 * scale:
            raise DomainError(f"time {t} is not on the grid")
        return i

    def to_dict(self) -> dict:
        out = {"t0": self.t0, "t1": self.t1, "n": self.n}
        if self.points_ is not None:
            out["points"] = list(self.points_)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        if d.get("points") is not None:
            return cls(float(d["t0"]), float(d["t1"]), int(d["n"]), tuple(float(x) for x in d["points"]))
        return cls(float(d["t0"]), float(d["t1"]), int(d["n"]))


Process = Union[kn.ProcessSpec, OUSpec]


@dataclass
class PathEnsemble:
    """Sampled trajectories: ``paths[i, j]`` is path ``i`` at ``grid.points[j]``."""

    grid: Grid
    paths: np.ndarray
    seed: int
    process: Process
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.paths = np.asarray(self.paths, dtype=float)
        if self.paths.ndim != 2 or self.paths.shape[1] != self.grid.n:
            raise DomainError(f"paths must have shape (n_paths, {self.grid.n}), got {self.paths.shape}")

    @property
    def n_paths(self) -> int:
        return self.paths.shape[0]

    def at(self, t: float) -> np.ndarray:
        return self.paths[:, self.grid.index_of(t)]


def path_rng(seed: int, i: int) -> np.random.Generator:
    """Generator for path ``i`` of a run seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(i),))))


def _check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed < 2**64:
        raise DomainError(f"seed must be an integer in [0, 2^64), got {seed!r}")


def _check_paths(n_paths):
    if isinstance(n_paths, bool) or not isinstance(n_paths, (int, np.integer)) or n_paths < 1:
        raise DomainError(f"n_paths must be a positive integer, got {n_paths!r}")


def _run_chunks(n_paths: int, width: int, work: Callable[[int, int], np.ndarray], threads: int) -> np.ndarray:
    """Fill an ``(n_paths, width)`` array chunk by chunk; chunk layout is fixed."""
    out = np.empty((n_paths, width))
    starts = list(range(0, n_paths, CHUNK))

    def job(start):
        stop = min(start + CHUNK, n_paths)
        out[start:stop] = work(start, stop)

    if threads <= 1 or len(starts) == 1:
        for s in starts:
            job(s)
    else:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            list(pool.map(job, starts))
    return out


def _normals(seed, start, stop, size):
    return np.stack([path_rng(seed, i).standard_normal(size) for i in range(start, stop)])


class _CirculantSampler:
    """Stationary Gaussian sequence of length m from its autocovariance at lags 0..m."""

    def __init__(self, acov: np.ndarray):
        m = acov.size - 1
        row = np.concatenate([acov, acov[-2:0:-1]])
        self.m = m
        self.size = row.size
        lam = np.fft.fft(row).real
        neg = lam < 0
        neg_mass = float(-lam[neg].sum()) if np.any(neg) else 0.0
        total = float(np.abs(lam).sum())
        self.ok = neg_mass <= _CLIP_MASS * total
        self.neg_mass = neg_mass / total if total > 0 else 0.0
        self.scale = np.sqrt(np.where(neg, 0.0, lam) / self.size)

    def draw(self, seed, start, stop):
        z = _normals(seed, start, stop, 2 * self.size)
        w = self.scale * (z[:, : self.size] + 1j * z[:, self.size:])
        return np.fft.fft(w, axis=1).real[:, : self.m]


def _dense_factor(C: np.ndarray) -> np.ndarray:
    mean_diag = float(np.mean(np.diag(C)))
    for eps in _JITTERS:
        try:
            A = C if eps == 0.0 else C + eps * mean_diag * np.eye(C.shape[0])
            L = cholesky(A, lower=True, check_finite=True)
            if eps:
                log.info("covariance factorized with jitter %.0e * mean(diag)", eps)
            return L
        except np.linalg.LinAlgError:
            continue
    raise NotPositiveDefiniteError(
        f"covariance matrix of size {C.shape[0]} is not positive definite within jitter 1e-10 * mean(diag)"
    )


class _DenseSampler:
    def __init__(self, C: np.ndarray):
        self.L = _dense_factor(C)
        self.m = C.shape[0]

    def draw(self, seed, start, stop):
        z = _normals(seed, start, stop, self.m)
        return z @ self.L.T


def _fgn_acov(H: float, dt: float, m: int) -> np.ndarray:
    k = np.arange(m, dtype=float)
    h2 = 2.0 * H
    return 0.5 * dt**h2 * (np.abs(k + 1) ** h2 - 2.0 * k**h2 + np.abs(k - 1) ** h2)


def _positive_part(grid: Grid):
    pts = grid.points
    has_zero = pts[0] == 0.0
    return (pts[1:] if has_zero else pts), has_zero


def _assemble(values: np.ndarray, has_zero: bool) -> np.ndarray:
    if not has_zero:
        return values
    out = np.empty((values.shape[0], values.shape[1] + 1))
    out[:, 0] = 0.0
    out[:, 1:] = values
    return out


def _gaussian_driver(p: kn.ProcessSpec) -> kn.ProcessSpec:
    if isinstance(p, kn.Hermite):
        if p.q != 1:
            raise UnsupportedProcessError("Hermite processes of order q >= 2 are not Gaussian; no path sampler")
        return kn.FBM(p.H)
    if isinstance(p, kn.BiFBM) and p.K == 1.0:
        return kn.FBM(p.H)
    return p


def sample_gaussian(
    p: kn.ProcessSpec,
    grid: Grid,
    n_paths: int,
    seed: int,
    method: str = "auto",
    threads: int = 1,
) -> PathEnsemble:
    """Exact samples of the Gaussian process ``p`` on ``grid`` (``G_0 = 0``).

    ``method`` is ``"circulant"`` (fBm on a uniform grid from 0), ``"dense"``
    (Cholesky of the covariance matrix) or ``"auto"`` (circulant when
    possible).  A circulant embedding whose negative eigenvalues carry more
    than 1e-8 of the spectrum falls back to the dense route with a warning.
    """
    _check_seed(seed)
    _check_paths(n_paths)
    q = _gaussian_driver(p)
    if method not in ("auto", "circulant", "dense"):
        raise DomainError(f"unknown sampling method {method!r}")
    circulant_ok = isinstance(q, kn.FBM) and grid.uniform_spacing and grid.t0 == 0.0
    if method == "circulant" and not circulant_ok:
        raise DomainError("circulant embedding needs fBm on a uniform grid starting at 0")
    use = "circulant" if (method in ("auto", "circulant") and circulant_ok) else "dense"

    if use == "circulant":
        sampler = _CirculantSampler(_fgn_acov(q.H, grid.dt, grid.n))
        if sampler.ok:
            incr = _run_chunks(n_paths, grid.n - 1, lambda a, b: sampler.draw(seed, a, b), threads)
            paths = np.zeros((n_paths, grid.n))
            np.cumsum(incr, axis=1, out=paths[:, 1:])
            return PathEnsemble(grid, paths, int(seed), p, {"quantity": "G", "method": "circulant"})
        warnings.warn(
            f"circulant embedding has negative eigenvalue mass {sampler.neg_mass:.2e}; using dense factorization",
            RuntimeWarning,
        )
        use = "dense"

    pos, has_zero = _positive_part(grid)
    C = np.asarray(kn.cov(q, pos[:, None], pos[None, :]))
    sampler = _DenseSampler(C)
    vals = _run_chunks(n_paths, pos.size, lambda a, b: sampler.draw(seed, a, b), threads)
    return PathEnsemble(grid, _assemble(vals, has_zero), int(seed), p, {"quantity": "G", "method": "dense"})


def _ibp(paths: np.ndarray, pts: np.ndarray, theta: float) -> np.ndarray:
    """``G - theta J`` with ``J_k = int_0^{t_k} e^{-theta (t_k - r)} G_r dr`` (trapezoid)."""
    out = np.empty_like(paths)
    out[:, 0] = paths[:, 0]
    if theta == 0.0:
        out[:] = paths
        return out
    J = np.zeros(paths.shape[0])
    for k in range(1, pts.size):
        d = pts[k] - pts[k - 1]
        e = math.exp(-theta * d)
        J = e * J + 0.5 * d * (e * paths[:, k - 1] + paths[:, k])
        out[:, k] = paths[:, k] - theta * J
    return out


def _check_driver(driver: PathEnsemble):
    if driver.grid.n < 2:
        raise DomainError("grid too coarse: need at least 2 points")
    if driver.grid.t0 != 0.0:
        raise DomainError("the driver grid must start at t = 0")
    if np.any(driver.paths[:, 0] != 0.0):
        raise DomainError("driver paths must start at 0")


def ou_first_kind(driver: PathEnsemble, theta: float) -> PathEnsemble:
    """Solution of ``dX = -theta X dt + dG``, ``X_0 = 0``, built pathwise from ``G``."""
    _check_driver(driver)
    theta = float(theta)
    X = _ibp(driver.paths, driver.grid.points, theta)
    process = driver.process
    if isinstance(process, kn.ProcessSpec):
        process = OUSpec.first(process, theta)
    meta = dict(driver.meta, quantity="X", theta=theta)
    return PathEnsemble(driver.grid, X, driver.seed, process, meta)


def ou_second_kind(noise: PathEnsemble, theta: float) -> PathEnsemble:
    """Solution of ``dX = -theta X dt + dY`` from second-kind noise paths ``Y``."""
    _check_driver(noise)
    theta = float(theta)
    X = _ibp(noise.paths, noise.grid.points, theta)
    process = noise.process
    if isinstance(process, kn.ProcessSpec):
        process = OUSpec.second(process, theta)
    meta = dict(noise.meta, quantity="X", theta=theta)
    return PathEnsemble(noise.grid, X, noise.seed, process, meta)


def ibp_weights(grid: Grid, theta: float, k: int | None = None) -> np.ndarray:
    """Weights ``w`` with ``X_{t_k} = sum_j w_j G_{t_j}`` for the discrete construction.

    ``w @ C @ w`` with ``C`` the driver covariance on the grid is the exact
    second moment of the simulated ``X_{t_k}`` (no sampling noise).
    Defaults to the last grid point.
    """
    pts = grid.points
    k = pts.size - 1 if k is None else int(k)
    if not 0 <= k < pts.size:
        raise DomainError("index outside the grid")
    w = np.zeros(pts.size)
    w[k] = 1.0
    for i in range(1, k + 1):
        d = pts[i] - pts[i - 1]
        w[i - 1] -= theta * 0.5 * d * math.exp(-theta * (pts[k] - pts[i - 1]))
        w[i] -= theta * 0.5 * d * math.exp(-theta * (pts[k] - pts[i]))
    return w


def time_change(gamma: float, t):
    """``a_t = gamma e^{t / gamma}``."""
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")
    out = gamma * np.exp(np.asarray(t, dtype=float) / gamma)
    return float(out) if np.ndim(out) == 0 else out


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS


def second_kind_increment_autocov(
    base: kn.ProcessSpec, dt: float, m: int, config: QuadConfig | None = None
) -> np.ndarray:
    """Autocovariance of the increments ``Y_{(j+1) dt} - Y_{j dt}`` at lags ``0..m-1``.

    Uses ``-[f((k+1)d) - 2 f(kd) + f((k-1)d)] + d^2 int_0^1 (1-s) [f(kd + sd) + f(kd - sd)] ds``,
    i.e. the second difference of the increment variance with the ``h`` part
    written as a local integral, which keeps full relative accuracy at
    large lags.
    """
    cfg = config or DEFAULT_CONFIG
    if not dt > 0 or m < 1:
        raise DomainError("need dt > 0 and m >= 1")
    f = lambda x: np.asarray(kn.f_U(base, x))
    k = np.arange(m, dtype=float)
    x = k * dt
    second_diff = f(x + dt) - 2.0 * f(x) + f(np.abs(x - dt))
    local = np.empty(m)
    near = k <= 1
    for i in np.flatnonzero(near):
        c = x[i]
        r = integrate_1d(lambda s: (1.0 - s) * (f(c + s * dt) + f(np.abs(c - s * dt))), 0.0, 1.0, "both", cfg)
        local[i] = r.require()
    far = np.flatnonzero(~near)
    if far.size:
        s = _GL_NODES[None, :]
        vals = (1.0 - s) * (f(x[far, None] + s * dt) + f(x[far, None] - s * dt))
        local[far] = vals @ _GL_WEIGHTS
        # verify the fixed rule against the adaptive one on a few lags
        for i in far[:: max(1, far.size // 8)]:
            c = x[i]
            ref = integrate_1d(lambda u: (1.0 - u) * (f(c + u * dt) + f(c - u * dt)), 0.0, 1.0, "none", cfg)
            if abs(ref.value - local[i]) > 10 * max(ref.est_error, cfg.rel_tol * abs(ref.value), 1e-15):
                local[i] = ref.value
    return -second_diff + dt * dt * local


def _second_kind_cov_matrix(base, pos, config):
    return np.asarray(kn.cov_Y1(base, pos[:, None], pos[None, :], config))


def second_kind_noise(
    base: kn.ProcessSpec,
    grid: Grid,
    n_paths: int,
    seed: int,
    method: str = "dense",
    threads: int = 1,
    config: QuadConfig | None = None,
) -> PathEnsemble:
    """Samples of ``Y_t = int_0^t e^{-s} dU_{a_s}`` on ``grid`` (``Y_0 = 0``).

    ``method``:

    * ``"dense"``: Cholesky of ``R_Y(s,t) = [f(|t-s|) - f(t) - f(s) + f(0)]
      + [h(s) + h(t) - h(|t-s|)]``;
    * ``"circulant"``: exact circulant embedding of the stationary increments
      (uniform grids from 0);
    * ``"pathwise"``: ``Y = L + eta`` with ``L_t = e^{-t} U_{a_t} - U_{a_0}``
      and ``eta_t = int_0^t e^{-s} U_{a_s} ds`` (trapezoid).  The base is
      sampled at the time-changed points through the stationary process
      ``V_s = e^{-s} U_{a_s}`` (covariance ``f(|t-s|)``), which is the same
      Gaussian vector up to the deterministic factor ``e^{s}`` but keeps the
      covariance matrix well conditioned.  Carries an O(dt) discretization bias.
    """
    _check_seed(seed)
    _check_paths(n_paths)
    cfg = config or DEFAULT_CONFIG
    base = kn._second_kind_base(base)
    if grid.t0 != 0.0:
        raise DomainError("second-kind noise is simulated on grids starting at t = 0")
    pts = grid.points
    meta = {"quantity": "Y", "method": method}

    if method == "circulant":
        if not grid.uniform_spacing:
            raise DomainError("circulant embedding needs a uniform grid")
        sampler = _CirculantSampler(second_kind_increment_autocov(base, grid.dt, grid.n, cfg))
        if sampler.ok:
            incr = _run_chunks(n_paths, grid.n - 1, lambda a, b: sampler.draw(seed, a, b), threads)
            paths = np.zeros((n_paths, grid.n))
            np.cumsum(incr, axis=1, out=paths[:, 1:])
            return PathEnsemble(grid, paths, int(seed), base, meta)
        warnings.warn(
            f"circulant embedding has negative eigenvalue mass {sampler.neg_mass:.2e}; using dense factorization",
            RuntimeWarning,
        )
        method = meta["method"] = "dense"

    if method == "dense":
        pos = pts[1:]
        sampler = _DenseSampler(_second_kind_cov_matrix(base, pos, cfg))
        vals = _run_chunks(n_paths, pos.size, lambda a, b: sampler.draw(seed, a, b), threads)
        return PathEnsemble(grid, _assemble(vals, True), int(seed), base, meta)

    if method == "pathwise":
        C = np.asarray(kn.f_U(base, pts[:, None] - pts[None, :]))
        sampler = _DenseSampler(C)
        d = np.diff(pts)

        def work(a, b):
            V = sampler.draw(seed, a, b)
            eta = np.zeros_like(V)
            np.cumsum(0.5 * d * (V[:, 1:] + V[:, :-1]), axis=1, out=eta[:, 1:])
            return V - V[:, :1] + eta

        paths = _run_chunks(n_paths, grid.n, work, threads)
        return PathEnsemble(grid, paths, int(seed), base, meta)

    raise DomainError(f"unknown method {method!r}")


def stationary_path(
    ou: OUSpec,
    grid: Grid,
    n_paths: int,
    seed: int,
    burn_in: float | None = None,
    threads: int = 1,
    config: QuadConfig | None = None,
) -> PathEnsemble:
    """Approximate stationary paths ``Z`` by running the OU equation from ``-burn_in``.

    The driver is simulated on ``[0, burn_in + T]`` with the grid spacing of
    ``grid`` (``burn_in`` is rounded up to a whole number of steps) and the
    last ``grid.n`` points are returned, shifted to ``grid``.  The second
    moment bias is at most ``C e^{-theta burn_in}``; the default burn-in is
    ``20 / theta``.
    """
    _check_seed(seed)
    _check_paths(n_paths)
    if not ou.theta > 0:
        raise DomainError("stationary paths need theta > 0")
    burn_in = 20.0 / ou.theta if burn_in is None else float(burn_in)
    if not burn_in > 0:
        raise DomainError(f"burn_in must be > 0, got {burn_in}")
    if not grid.uniform_spacing:
        raise DomainError("stationary paths are generated on uniform grids")
    dt = grid.dt
    nb = int(math.ceil(burn_in / dt - 1e-9))
    total = nb + grid.n
    long_t1 = (total - 1) * dt

    if isinstance(ou.noise, FirstKind):
        from .analytics import _stationary_fbm

        fbm = _stationary_fbm(ou)
        acov = _fgn_acov(fbm.H, dt, total)
    else:
        acov = second_kind_increment_autocov(ou.noise.base, dt, total, config)
    sampler = _CirculantSampler(acov)
    if not sampler.ok:
        raise NotPositiveDefiniteError(
            f"circulant embedding for the stationary run has negative eigenvalue mass {sampler.neg_mass:.2e}"
        )
    long_pts = np.arange(total) * dt
    theta = ou.theta

    def work(a, b):
        incr = sampler.draw(seed, a, b)
        G = np.zeros((b - a, total))
        np.cumsum(incr, axis=1, out=G[:, 1:])
        return _ibp(G, long_pts, theta)[:, nb:]

    paths = _run_chunks(n_paths, grid.n, work, threads)
    meta = {"quantity": "Z", "burn_in": nb * dt, "method": "circulant", "long_t1": long_t1}
    return PathEnsemble(grid, paths, int(seed), ou, meta)
