"""Covariance kernels of the supported driving processes and their derived functions.

Four families are supported:

* ``FBM(H)``        fractional Brownian motion;
* ``SubFBM(H)``     subfractional Brownian motion;
* ``BiFBM(H, K)``   bifractional Brownian motion (``K = 1`` is fBm);
* ``Hermite(q, H)`` Hermite process of order ``q``, which shares the fBm
  covariance (only covariance-level quantities are available).

Besides the covariance ``R(s, t)`` and its mixed partial derivative, the module
provides the auxiliary functions of the second-kind noise
``Y_t = int_0^t e^{-s} dU_{a_s}`` with ``a_t = gamma e^{t / gamma}``:

* ``f_U(x) = gamma^{2 gamma} R_U(e^{x / 2gamma}, e^{-x / 2gamma})`` (even);
* ``h_U(t) = int_0^{|t|} (|t| - x) f_U(x) dx``;
* ``rho_dd_Y1(x) = f_U(x) - f_U''(x)``, the mixed partial of ``R_Y``.

All closed forms are written in overflow-free, cancellation-free form
(``log1p``/``expm1`` in log space, short binomial series where two nearly
equal terms would otherwise be subtracted).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import binom

from .errors import DomainError, QuadratureError, SingularityError, UnsupportedProcessError
from .quadrature import DEFAULT_CONFIG, QuadConfig, integrate_1d

__all__ = [
    "ProcessSpec",
    "FBM",
    "SubFBM",
    "BiFBM",
    "Hermite",
    "HolderExponent",
    "holder_exponent",
    "process_from_name",
    "cov",
    "mixed_partial",
    "rho",
    "increment_variance",
    "increment_bound_constant",
    "m_gamma",
    "n_gamma",
    "minus_kernel",
    "plus_kernel",
    "f_U",
    "h_U",
    "h_U_many",
    "rho_dd_Y1",
    "rho_dd_Y1_asymptote",
    "cov_Y1",
    "increment_variance_Y1",
]

ArrayLike = Union[float, np.ndarray]


def _check_unit(name, value, lo=0.0, hi=1.0, hi_closed=False):
    if not isinstance(value, (int, float, np.floating, np.integer)) or isinstance(value, bool):
        raise DomainError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    upper_ok = value <= hi if hi_closed else value < hi
    if not (lo < value and upper_ok):
        bracket = "]" if hi_closed else ")"
        raise DomainError(f"{name} must lie in ({lo}, {hi}{bracket}, got {value}")


class ProcessSpec:
    """Common interface of the driving-process parameter records."""

    name: str = ""

    @property
    def gamma(self) -> float:
        """Hoelder exponent of the increments (``gamma`` of the time change)."""
        raise NotImplementedError

    @property
    def gaussian(self) -> bool:
        return True

    def params(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class FBM(ProcessSpec):
    H: float
    name = "fbm"

    def __post_init__(self):
        _check_unit("H", self.H)

    @property
    def gamma(self) -> float:
        return float(self.H)

    def params(self) -> dict:
        return {"process": self.name, "H": float(self.H)}


@dataclass(frozen=True)
class SubFBM(ProcessSpec):
    H: float
    name = "subfbm"

    def __post_init__(self):
        _check_unit("H", self.H)

    @property
    def gamma(self) -> float:
        return float(self.H)

    def params(self) -> dict:
        return {"process": self.name, "H": float(self.H)}


@dataclass(frozen=True)
class BiFBM(ProcessSpec):
    H: float
    K: float = 1.0
    name = "bifbm"

    def __post_init__(self):
        _check_unit("H", self.H)
        _check_unit("K", self.K, hi_closed=True)

    @property
    def gamma(self) -> float:
        return float(self.H) * float(self.K)

    def params(self) -> dict:
        return {"process": self.name, "H": float(self.H), "K": float(self.K)}


@dataclass(frozen=True)
class Hermite(ProcessSpec):
    q: int
    H: float
    name = "hermite"

    def __post_init__(self):
        if isinstance(self.q, bool) or not isinstance(self.q, (int, np.integer)) or self.q < 1:
            raise DomainError(f"Hermite order q must be an integer >= 1, got {self.q!r}")
        _check_unit("H", self.H, lo=0.5)

    @property
    def gamma(self) -> float:
        return float(self.H)

    @property
    def gaussian(self) -> bool:
        return self.q == 1

    def params(self) -> dict:
        return {"process": self.name, "q": int(self.q), "H": float(self.H)}


@dataclass(frozen=True)
class HolderExponent:
    gamma: float

    def __post_init__(self):
        _check_unit("gamma", self.gamma)


def holder_exponent(p: ProcessSpec) -> HolderExponent:
    return HolderExponent(p.gamma)


def process_from_name(name: str, H: float, K: float | None = None, q: int | None = None) -> ProcessSpec:
    """Build a process record from a lowercase family name."""
    key = name.strip().lower()
    if key == "fbm":
        return FBM(H)
    if key == "subfbm":
        return SubFBM(H)
    if key == "bifbm":
        return BiFBM(H, 1.0 if K is None else K)
    if key == "hermite":
        return Hermite(1 if q is None else q, H)
    raise DomainError(f"unknown process family {name!r}")


def _as_fbm(p: ProcessSpec) -> ProcessSpec:
    """Hermite processes share every covariance-level quantity with fBm."""
    if isinstance(p, Hermite):
        return FBM(p.H)
    return p


def _pow(a, b):
    """``a**b`` for ``a >= 0`` with ``0**b = 0`` (``b > 0``); negative bases are rejected."""
    a = np.asarray(a, dtype=float)
    if np.any(a < 0) or np.any(np.isnan(a)):
        raise DomainError("power of a negative or NaN base")
    if b == 0:
        return np.ones_like(a)
    with np.errstate(divide="ignore"):
        out = np.exp(b * np.log(a))
    return out


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def _require_nonneg(name, *xs):
    for x in xs:
        if np.any(np.asarray(x) < 0):
            raise DomainError(f"{name} is defined for nonnegative times only")


def cov(p: ProcessSpec, s: ArrayLike, t: ArrayLike) -> ArrayLike:
    """Covariance ``R(s, t)`` of the driving process (vectorized in ``s``, ``t``)."""
    # Every covariance is written as big^{2 gamma} * phi(small / big) with
    # expm1/log1p inside phi, which avoids cancellation when s and t are far apart.
    p = _as_fbm(p)
    s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
    if np.any(np.isnan(s)) or np.any(np.isnan(t)):
        raise DomainError("covariance arguments must not be NaN")
    a, b = np.abs(s), np.abs(t)
    big = np.maximum(a, b)
    small = np.minimum(a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(big > 0, small / np.where(big > 0, big, 1.0), 0.0)
    if isinstance(p, FBM):
        same_side = np.sign(s) * np.sign(t) >= 0
        if p.H == 0.5:
            return _out(np.where(same_side, small, 0.0))
        h2 = 2.0 * p.H
        # |t - s| / big is 1 - r on the same side of 0 and 1 + r otherwise
        with np.errstate(divide="ignore"):
            lr = np.where(same_side, np.log1p(-np.minimum(r, 1.0)), np.log1p(r))
            phi = _pow(r, h2) - np.expm1(h2 * lr)
        return _out(np.where(big > 0, 0.5 * _pow(big, h2) * phi, 0.0))
    _require_nonneg(p.name, s, t)
    if isinstance(p, SubFBM):
        h2 = 2.0 * p.H
        phi = _pow(r, h2) - _even_binom_tail(h2, np.atleast_1d(r)).reshape(r.shape)
        return _out(np.where(big > 0, _pow(big, h2) * phi, 0.0))
    if isinstance(p, BiFBM):
        h2 = 2.0 * p.H
        with np.errstate(divide="ignore"):
            phi = np.expm1(p.K * np.log1p(_pow(r, h2))) - np.expm1(h2 * p.K * np.log1p(-r))
        return _out(np.where(big > 0, 2.0 ** (-p.K) * _pow(big, h2 * p.K) * phi, 0.0))
    raise UnsupportedProcessError(f"no covariance for {p!r}")


def rho(p: ProcessSpec, t: ArrayLike) -> ArrayLike:
    """Variance function ``rho(t) = E[G_t^2] = R(t, t)``."""
    return cov(p, t, t)


def increment_variance(p: ProcessSpec, s: ArrayLike, t: ArrayLike) -> ArrayLike:
    """``E[(G_t - G_s)^2] = R(t,t) + R(s,s) - 2 R(s,t)``."""
    out = np.asarray(cov(p, t, t)) + np.asarray(cov(p, s, s)) - 2.0 * np.asarray(cov(p, s, t))
    return _out(out)


def increment_bound_constant(p: ProcessSpec) -> float:
    """Constant ``C`` with ``E[(G_t - G_s)^2] <= C |t - s|^{2 gamma}`` for all ``s, t``.

    fBm increments are exactly ``|t-s|^{2H}``.  For subfBm the increment
    variance lies between ``(2 - 2^{2H-1})`` and ``1`` times ``|t-s|^{2H}``
    (ordered according to the sign of ``H - 1/2``).  For bifBm the upper bound
    is ``2^{1-K}``.
    """
    p = _as_fbm(p)
    if isinstance(p, FBM):
        return 1.0
    if isinstance(p, SubFBM):
        return max(1.0, 2.0 - 2.0 ** (2.0 * p.H - 1.0))
    if isinstance(p, BiFBM):
        return 2.0 ** (1.0 - p.K)
    raise UnsupportedProcessError(f"no increment bound for {p!r}")


def mixed_partial(p: ProcessSpec, u: ArrayLike, v: ArrayLike) -> ArrayLike:
    """``d^2 R / du dv`` off the diagonal.

    Raises :class:`SingularityError` when ``u == v`` anywhere: integrals of
    this kernel must be split so that the diagonal is only ever a corner.
    For fBm with ``H = 1/2`` the off-diagonal value is exactly 0.
    """
    p = _as_fbm(p)
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    if np.any(u == v):
        raise SingularityError("mixed partial derivative is singular on the diagonal u == v")
    d = np.abs(v - u)
    if isinstance(p, FBM):
        if p.H == 0.5:
            return _out(np.zeros_like(d))
        return _out(p.H * (2.0 * p.H - 1.0) * _pow(d, 2.0 * p.H - 2.0))
    _require_nonneg(p.name, u, v)
    if np.any(u == 0) or np.any(v == 0):
        raise SingularityError(f"{p.name} mixed partial requires u, v > 0")
    H = p.H
    if isinstance(p, SubFBM):
        if H == 0.5:
            return _out(np.zeros_like(d))
        c = H * (2.0 * H - 1.0)
        return _out(c * (_pow(d, 2.0 * H - 2.0) - _pow(u + v, 2.0 * H - 2.0)))
    if isinstance(p, BiFBM):
        K = p.K
        hk = H * K
        first = 2.0 ** (1.0 - K) * hk * (2.0 * hk - 1.0) * _pow(d, 2.0 * hk - 2.0)
        if K == 1.0:
            return _out(first)
        second = (2.0 ** (-K) * (2.0 * H) ** 2 * K * (K - 1.0)
                  * _pow(_pow(u, 2.0 * H) + _pow(v, 2.0 * H), K - 2.0)
                  * _pow(u * v, 2.0 * H - 1.0))
        return _out(first + second)
    raise UnsupportedProcessError(f"no mixed partial for {p!r}")


def _check_gamma(gamma):
    _check_unit("gamma", gamma)


def m_gamma(gamma: float, x: ArrayLike) -> ArrayLike:
    """``(e^{x/2g} - e^{-x/2g})^{2g}`` extended to negative ``x`` by evenness."""
    _check_gamma(gamma)
    a = np.abs(np.asarray(x, dtype=float))
    with np.errstate(divide="ignore"):
        out = np.exp(a + 2.0 * gamma * np.log(-np.expm1(-a / gamma)))
    return _out(out)


def n_gamma(gamma: float, x: ArrayLike) -> ArrayLike:
    """``(e^{x/2g} + e^{-x/2g})^{2g}``, an even function."""
    _check_gamma(gamma)
    a = np.abs(np.asarray(x, dtype=float))
    return _out(np.exp(a + 2.0 * gamma * np.log1p(np.exp(-a / gamma))))


def minus_kernel(gamma: float, x: ArrayLike) -> ArrayLike:
    """``(e^{x/2g} - e^{-x/2g})^{2g-2}`` for ``x != 0``, even in ``x``.

    This is the right-hand side kernel of ``m'' - m = (2(2g-1)/g) * kernel``.
    """
    _check_gamma(gamma)
    a = np.abs(np.asarray(x, dtype=float))
    if np.any(a == 0):
        raise SingularityError("minus kernel is singular at x = 0")
    return _out(np.exp(_log_minus_kernel(gamma, a)))


def plus_kernel(gamma: float, x: ArrayLike) -> ArrayLike:
    """``(e^{x/2g} + e^{-x/2g})^{2g-2}``, even in ``x``."""
    _check_gamma(gamma)
    a = np.abs(np.asarray(x, dtype=float))
    return _out(np.exp(_log_plus_kernel(gamma, a)))


def _even_binom_tail(c, q):
    """``((1+q)^c + (1-q)^c) / 2 - 1`` without cancellation for ``0 <= q <= 1``."""
    q = np.asarray(q, dtype=float)
    out = np.empty_like(q)
    small = q < 0.05
    qs = q[small]
    acc = np.zeros_like(qs)
    q2 = qs * qs
    term = np.ones_like(qs)
    for k in range(1, 12):
        term = term * q2
        acc += binom(c, 2 * k) * term
    out[small] = acc
    ql = q[~small]
    with np.errstate(divide="ignore"):
        out[~small] = 0.5 * (np.exp(c * np.log1p(ql)) + np.exp(c * np.log1p(-ql))) - 1.0
    return out


def _odd_binom_ratio(c, q):
    """``((1-q)^c - (1+q)^c) / q`` without cancellation for ``0 <= q < 1``."""
    q = np.asarray(q, dtype=float)
    out = np.empty_like(q)
    small = q < 0.05
    qs = q[small]
    acc = np.zeros_like(qs)
    q2 = qs * qs
    term = np.ones_like(qs)
    for k in range(0, 12):
        acc += binom(c, 2 * k + 1) * term
        term = term * q2
    out[small] = -2.0 * acc
    ql = q[~small]
    out[~small] = (np.exp(c * np.log1p(-ql)) - np.exp(c * np.log1p(ql))) / ql
    return out


def _second_kind_base(p: ProcessSpec) -> ProcessSpec:
    if isinstance(p, Hermite):
        raise UnsupportedProcessError(
            "second-kind noise is only defined here for Gaussian bases (fbm, subfbm, bifbm)"
        )
    if not isinstance(p, (FBM, SubFBM, BiFBM)):
        raise UnsupportedProcessError(f"unsupported base process {p!r}")
    return p


def _exp_times(a, y):
    """``e^a * y`` for large ``a`` and tiny ``y`` without overflow."""
    with np.errstate(divide="ignore"):
        return np.sign(y) * np.exp(a + np.log(np.abs(y)))


def f_U(p: ProcessSpec, x: ArrayLike) -> ArrayLike:
    """``gamma^{2 gamma} R_U(e^{x / 2gamma}, e^{-x / 2gamma})`` in closed, stable form."""
    p = _second_kind_base(p)
    g = p.gamma
    a = np.abs(np.asarray(x, dtype=float))
    pref = g ** (2.0 * g)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if isinstance(p, FBM):
            q = np.exp(-a / p.H)
            out = 0.5 * pref * (np.exp(-a) - _exp_times(a, np.expm1(2.0 * p.H * np.log1p(-q))))
        elif isinstance(p, SubFBM):
            q = np.exp(-a / p.H)
            tail = _even_binom_tail(2.0 * p.H, np.atleast_1d(q)).reshape(q.shape)
            out = pref * (np.exp(-a) - _exp_times(a, tail))
        else:
            K = p.K
            q1 = np.exp(-2.0 * a / K)
            q2 = np.exp(-a / g)
            bracket = np.expm1(K * np.log1p(q1)) - np.expm1(2.0 * g * np.log1p(-q2))
            out = pref * 2.0 ** (-K) * _exp_times(a, bracket)
    return _out(out)


def h_U(p: ProcessSpec, t: float, config: QuadConfig | None = None) -> float:
    """``int_0^{|t|} (|t| - x) f_U(x) dx`` by adaptive quadrature.

    Raises :class:`QuadratureError` (carrying the best estimate and its error)
    if the tolerance in ``config`` is not met.
    """
    cfg = config or DEFAULT_CONFIG
    p = _second_kind_base(p)
    a = abs(float(t))
    if a == 0.0:
        return 0.0
    res = integrate_1d(lambda x: (a - x) * f_U(p, x), 0.0, a, "left", cfg)
    return res.require()


def h_U_many(p: ProcessSpec, t: ArrayLike, config: QuadConfig | None = None) -> np.ndarray:
    """Vectorized :func:`h_U` for many points, sharing work between them.

    Uses ``h(t) = t F0(t) - F1(t)`` with the cumulative integrals
    ``F0 = int_0^t f`` and ``F1 = int_0^t x f`` accumulated segment by segment
    over the sorted distinct ``|t|``.
    """
    cfg = config or DEFAULT_CONFIG
    p = _second_kind_base(p)
    t = np.asarray(t, dtype=float)
    a = np.abs(t).ravel()
    knots, inverse = np.unique(a, return_inverse=True)
    F0 = np.zeros(knots.size)
    F1 = np.zeros(knots.size)
    lo = 0.0
    acc0 = acc1 = 0.0
    for i, hi in enumerate(knots):
        if hi > lo:
            flag = "left" if lo == 0.0 else "none"
            r0 = integrate_1d(lambda x: f_U(p, x), lo, hi, flag, cfg)
            r1 = integrate_1d(lambda x: x * f_U(p, x), lo, hi, flag, cfg)
            if not (r0.converged and r1.converged):
                raise QuadratureError("h_U segment did not converge",
                                      r0.value, max(r0.est_error, r1.est_error))
            acc0 += r0.value
            acc1 += r1.value
        F0[i] = acc0
        F1[i] = acc1
        lo = hi
    h = knots * F0 - F1
    return h[inverse].reshape(t.shape)


def _log_minus_kernel(gamma, a):
    with np.errstate(divide="ignore"):
        return a * (1.0 - 1.0 / gamma) + (2.0 * gamma - 2.0) * np.log(-np.expm1(-a / gamma))


def _log_plus_kernel(gamma, a):
    return a * (1.0 - 1.0 / gamma) + (2.0 * gamma - 2.0) * np.log1p(np.exp(-a / gamma))


def rho_dd_Y1(p: ProcessSpec, x: ArrayLike, exp_shift: float = 0.0) -> ArrayLike:
    """``f_U(x) - f_U''(x)``: the mixed partial of the second-kind noise covariance.

    Equivalently ``d^2 R_Y(s, t) / ds dt`` at ``x = |t - s|``.  Closed forms in
    terms of the minus/plus kernels; singular at ``x = 0`` unless the
    coefficient vanishes (fBm or subfBm with ``H = 1/2``).

    With ``exp_shift`` the function returns ``e^{exp_shift * |x|}`` times the
    kernel, with the exponential folded into the log-space evaluation so
    that growing weights never overflow against the decaying kernel.
    """
    p = _second_kind_base(p)
    a = np.abs(np.asarray(x, dtype=float))
    if p.H == 0.5 and (not isinstance(p, BiFBM) or p.K == 1.0):
        return _out(np.zeros_like(a))
    if np.any(a == 0):
        raise SingularityError("second-kind kernel is singular at x = 0")
    shift = exp_shift * a
    if isinstance(p, FBM):
        H = p.H
        coef = (2.0 * H - 1.0) * H ** (2.0 * H - 1.0)
        return _out(coef * np.exp(_log_minus_kernel(H, a) + shift))
    if isinstance(p, SubFBM):
        H = p.H
        coef = (2.0 * H - 1.0) * H ** (2.0 * H - 1.0)
        q = np.exp(-a / H)
        ratio = _odd_binom_ratio(2.0 * H - 2.0, np.atleast_1d(q)).reshape(q.shape)
        return _out(coef * np.exp(a * (1.0 - 2.0 / H) + shift) * ratio)
    H, K = p.H, p.K
    g = H * K
    coef_minus = g ** (2.0 * g - 1.0) * (2.0 * g - 1.0) / 2.0 ** (K - 1.0)
    out = coef_minus * np.exp(_log_minus_kernel(g, a) + shift)
    if K != 1.0:
        coef_plus = g ** (2.0 * g) * (K - 1.0) / (2.0 ** (K - 2.0) * K)
        out = out + coef_plus * np.exp(_log_plus_kernel(K / 2.0, a) + shift)
    return _out(out)


def rho_dd_Y1_asymptote(p: ProcessSpec) -> tuple[float, float]:
    """``(A, c)`` with ``rho_dd_Y1(x) ~ A e^{-c x}`` as ``x -> infinity``.

    Returns ``A = 0`` when the kernel vanishes identically.
    """
    p = _second_kind_base(p)
    if isinstance(p, FBM):
        H = p.H
        return (2.0 * H - 1.0) * H ** (2.0 * H - 1.0), 1.0 / H - 1.0
    if isinstance(p, SubFBM):
        H = p.H
        # M - N ~ -2 (2H - 2) e^{x (1 - 2/H)}
        return (2.0 * H - 1.0) * H ** (2.0 * H - 1.0) * (4.0 - 4.0 * H), 2.0 / H - 1.0
    H, K = p.H, p.K
    g = H * K
    a_minus = g ** (2.0 * g - 1.0) * (2.0 * g - 1.0) / 2.0 ** (K - 1.0)
    c_minus = 1.0 / g - 1.0
    if K == 1.0:
        return a_minus, c_minus
    a_plus = g ** (2.0 * g) * (K - 1.0) / (2.0 ** (K - 2.0) * K)
    c_plus = 2.0 / K - 1.0
    if math.isclose(c_plus, c_minus, rel_tol=0, abs_tol=1e-15):
        return a_plus + a_minus, c_plus
    return (a_plus, c_plus) if c_plus < c_minus else (a_minus, c_minus)


def cov_Y1(p: ProcessSpec, s: ArrayLike, t: ArrayLike, config: QuadConfig | None = None) -> ArrayLike:
    """Covariance of the second-kind noise ``Y`` at nonnegative times.

    ``R_Y(s,t) = f(|t-s|) - f(t) - f(s) + f(0) + h(s) + h(t) - h(|t-s|)``.
    """
    s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
    _require_nonneg("second-kind noise", s, t)
    d = np.abs(t - s)
    f0 = float(f_U(p, 0.0))
    fs = np.asarray(f_U(p, np.stack([d, t, s])))
    hs = h_U_many(p, np.stack([s, t, d]), config)
    out = fs[0] - fs[1] - fs[2] + f0 + hs[0] + hs[1] - hs[2]
    return _out(out)


def increment_variance_Y1(p: ProcessSpec, lag: ArrayLike, config: QuadConfig | None = None) -> ArrayLike:
    """``E[(Y_{t+lag} - Y_t)^2] = 2 f(0) - 2 f(|lag|) + 2 h(|lag|)``."""
    lag = np.asarray(lag, dtype=float)
    f0 = float(f_U(p, 0.0))
    out = 2.0 * f0 - 2.0 * np.asarray(f_U(p, lag)) + 2.0 * h_U_many(p, lag, config)
    return _out(out)
