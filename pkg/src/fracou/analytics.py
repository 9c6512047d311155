"""Stationary moments, auto-covariances and decay regimes of fractional OU processes.

An :class:`OUSpec` couples a driving noise with a mean-reversion speed
``theta``:

* ``FirstKind(p)``: ``dX = -theta X dt + dG`` with ``G`` the process ``p``;
* ``SecondKind(base)``: ``dX = -theta X dt + dY`` with
  ``Y_t = int_0^t e^{-s} dU_{a_s}`` built on the self-similar ``base``.

``X`` always starts at 0.  For drivers with stationary increments (fBm,
Hermite, any second-kind noise) the stationary solution
``Z_t = int_{-inf}^t e^{-theta (t-s)} dG_s`` exists and ``X_t = Z_t - e^{-theta t} Z_0``.
SubfBm and bifBm (``K < 1``) are not stationary-increment drivers; for them
only the variance limit of ``X_t`` and covariance bounds are available.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy.special import gamma as gamma_fn

from . import kernels as kn
from .errors import DomainError, NonStationaryDriverError, UnsupportedProcessError
from .quadrature import DEFAULT_CONFIG, QuadConfig, QuadResult, cross_cov, delta_g, integrate_1d, stationary_double

__all__ = [
    "FirstKind",
    "SecondKind",
    "OUSpec",
    "AsymptoticRegime",
    "QuadratureConstant",
    "DecayFit",
    "stationary_variance",
    "stationary_variance_quadrature",
    "stationary_moment",
    "stationary_autocov",
    "ou_variance",
    "ou_variance_direct",
    "ou_cov",
    "ou_cov_cross_integral",
    "classify_regime",
    "nonstationary_variance_limit",
    "nonstationary_cov_bound_exponent",
    "fit_decay",
    "g_sub",
    "unit_theta_autocov",
    "g_bi",
]


@dataclass(frozen=True)
class FirstKind:
    p: kn.ProcessSpec

    @property
    def label(self) -> str:
        return "first"


@dataclass(frozen=True)
class SecondKind:
    base: kn.ProcessSpec

    def __post_init__(self):
        if not isinstance(self.base, (kn.FBM, kn.SubFBM, kn.BiFBM)):
            raise UnsupportedProcessError(
                f"second-kind noise needs a Gaussian self-similar base, got {self.base!r}"
            )

    @property
    def label(self) -> str:
        return "second"


Noise = Union[FirstKind, SecondKind]


@dataclass(frozen=True)
class OUSpec:
    noise: Noise
    theta: float

    def __post_init__(self):
        if not isinstance(self.noise, (FirstKind, SecondKind)):
            raise DomainError(f"noise must be FirstKind or SecondKind, got {self.noise!r}")
        if not math.isfinite(float(self.theta)):
            raise DomainError(f"theta must be finite, got {self.theta}")

    @classmethod
    def first(cls, p: kn.ProcessSpec, theta: float) -> "OUSpec":
        return cls(FirstKind(p), float(theta))

    @classmethod
    def second(cls, base: kn.ProcessSpec, theta: float) -> "OUSpec":
        return cls(SecondKind(base), float(theta))

    @property
    def process(self) -> kn.ProcessSpec:
        return self.noise.p if isinstance(self.noise, FirstKind) else self.noise.base

    @property
    def kind(self) -> str:
        return self.noise.label

    def params(self) -> dict:
        out = dict(self.process.params())
        out.update(kind=self.kind, theta=float(self.theta))
        return out


def _require_positive_theta(ou: OUSpec):
    if not ou.theta > 0:
        raise DomainError(f"theta must be > 0 for stationary or asymptotic quantities, got {ou.theta}")


def _stationary_fbm(ou: OUSpec) -> kn.FBM | None:
    """The fBm that carries the first-kind stationary law, or ``None`` for second kind."""
    if isinstance(ou.noise, SecondKind):
        return None
    p = ou.noise.p
    if isinstance(p, kn.Hermite):
        return kn.FBM(p.H)
    if isinstance(p, kn.FBM):
        return p
    if isinstance(p, kn.BiFBM) and p.K == 1.0:
        return kn.FBM(p.H)
    raise NonStationaryDriverError(
        f"{p!r} does not have stationary increments; no stationary solution exists"
    )


def _increment_variance_fn(ou: OUSpec, config: QuadConfig) -> Callable[[np.ndarray], np.ndarray]:
    fbm = _stationary_fbm(ou)
    if fbm is not None:
        return lambda t: np.asarray(kn.rho(fbm, t))
    base = ou.noise.base
    return lambda t: np.asarray(kn.increment_variance_Y1(base, t, config))


def stationary_variance(ou: OUSpec, config: QuadConfig | None = None) -> float:
    """``E[Z_0^2]`` of the stationary solution."""
    cfg = config or DEFAULT_CONFIG
    _require_positive_theta(ou)
    theta = ou.theta
    fbm = _stationary_fbm(ou)
    if fbm is not None:
        if fbm.H == 0.5:
            return 1.0 / (2.0 * theta)
        return fbm.H * gamma_fn(2.0 * fbm.H) / theta ** (2.0 * fbm.H)
    base = ou.noise.base
    f0 = float(kn.f_U(base, 0.0))
    coef = 1.0 / theta - theta
    if coef == 0.0:
        return f0
    laplace = integrate_1d(lambda x: kn.f_U(base, x) * np.exp(-theta * x), 0.0, math.inf, "left", cfg)
    return f0 + coef * laplace.require()


def stationary_variance_quadrature(ou: OUSpec, config: QuadConfig | None = None) -> QuadResult:
    """``(theta / 2) int_0^inf e^{-theta t} E[(G_t - G_0)^2] dt``, the generic route."""
    cfg = config or DEFAULT_CONFIG
    _require_positive_theta(ou)
    theta = ou.theta
    incr = _increment_variance_fn(ou, cfg)
    res = integrate_1d(lambda t: np.exp(-theta * t) * incr(t), 0.0, math.inf, "left", cfg)
    return res.scaled(theta / 2.0)


def stationary_moment(ou: OUSpec, p: int, config: QuadConfig | None = None) -> float:
    """``E[Z_0^p]``: 0 for odd ``p`` and ``p! / (2^{p/2} (p/2)!) * V^{p/2}`` for even ``p``."""
    if isinstance(p, bool) or not isinstance(p, (int, np.integer)) or p < 1:
        raise DomainError(f"moment order must be an integer >= 1, got {p!r}")
    if isinstance(ou.noise, FirstKind) and isinstance(ou.noise.p, kn.Hermite) and ou.noise.p.q > 1:
        raise UnsupportedProcessError("moments beyond the covariance are Gaussian-only")
    if p % 2 == 1:
        return 0.0
    var = stationary_variance(ou, config)
    half = p // 2
    return math.factorial(p) / (2.0**half * math.factorial(half)) * var**half


def _second_order_kernel(ou: OUSpec) -> tuple[Callable[[np.ndarray], np.ndarray], float]:
    """Kernel ``k`` and its exponent at 0 such that the stationary autocov is
    ``e^{-theta t} V + stationary_double(k, theta, t)``."""
    fbm = _stationary_fbm(ou)
    if fbm is not None:
        H = fbm.H
        c = H * (2.0 * H - 1.0)
        return (lambda u: c * np.power(u, 2.0 * H - 2.0)), 2.0 * H - 2.0
    base = ou.noise.base
    return (lambda u: np.asarray(kn.rho_dd_Y1(base, u))), 2.0 * base.gamma - 2.0


def _kernel_vanishes(ou: OUSpec) -> bool:
    fbm = _stationary_fbm(ou)
    if fbm is not None:
        return fbm.H == 0.5
    base = ou.noise.base
    return base.H == 0.5 and (not isinstance(base, kn.BiFBM) or base.K == 1.0)


def stationary_autocov(ou: OUSpec, t: float | Sequence[float], config: QuadConfig | None = None):
    """``E[Z_t Z_0]`` for a lag ``t >= 0`` (scalar or array)."""
    cfg = config or DEFAULT_CONFIG
    _require_positive_theta(ou)
    theta = ou.theta
    lags = np.asarray(t, dtype=float)
    if np.any(lags < 0) or np.any(np.isnan(lags)):
        raise DomainError("lags must be nonnegative")
    var = stationary_variance(ou, cfg)
    out = np.exp(-theta * lags) * var
    if not _kernel_vanishes(ou):
        k, beta = _second_order_kernel(ou)
        flat = out.ravel()
        for i, lag in enumerate(lags.ravel()):
            if lag > 0:
                flat[i] += stationary_double(k, theta, float(lag), cfg, k_exponent_at_zero=beta).require()
        out = flat.reshape(lags.shape)
    return float(out) if out.ndim == 0 else out


def unit_theta_autocov(base: kn.ProcessSpec, t):
    """Exact second-kind auto-covariance at ``theta = 1``: ``e^{-t} R_U(a_t, a_0)``.

    With ``theta = 1`` the stationary solution is ``Z_t = e^{-t} U_{a_t}``, so
    no quadrature is needed.  Serves as an independent check of
    :func:`stationary_autocov`.
    """
    SecondKind(base)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("lags must be nonnegative")
    g = base.gamma
    a_t = g * np.exp(t / g)
    out = np.exp(-t) * np.asarray(kn.cov(base, a_t, g))
    return float(out) if out.ndim == 0 else out


def g_sub(H: float):
    """Correction ``g`` with ``R_subfBm = R_fBm + g`` and its derivatives."""

    def g(s, r):
        s, r = np.asarray(s, float), np.asarray(r, float)
        return 0.5 * (np.power(s, 2 * H) + np.power(r, 2 * H) - np.power(s + r, 2 * H))

    def dg_ds_at0(s):
        return np.zeros_like(np.asarray(s, float))

    def d2g(s, r):
        return -H * (2 * H - 1) * np.power(np.asarray(s, float) + np.asarray(r, float), 2 * H - 2)

    return g, dg_ds_at0, d2g


def g_bi(H: float, K: float):
    """Correction ``g`` with ``R_bifBm(H,K) = 2^{1-K} R_fBm(HK) + g`` and its derivatives."""
    c = 2.0 ** (-K)

    def g(s, r):
        s, r = np.asarray(s, float), np.asarray(r, float)
        return c * (np.power(np.power(s, 2 * H) + np.power(r, 2 * H), K)
                    - np.power(s, 2 * H * K) - np.power(r, 2 * H * K))

    def dg_ds_at0(s):
        return np.zeros_like(np.asarray(s, float))

    def d2g(s, r):
        s, r = np.asarray(s, float), np.asarray(r, float)
        return (c * (2 * H) ** 2 * K * (K - 1)
                * np.power(np.power(s, 2 * H) + np.power(r, 2 * H), K - 2)
                * np.power(s * r, 2 * H - 1))

    return g, dg_ds_at0, d2g


def _link_variance(ou: OUSpec, t: float, cfg: QuadConfig) -> float:
    theta = ou.theta
    var = stationary_variance(ou, cfg)
    r = stationary_autocov(ou, t, cfg)
    return var * (1.0 + math.exp(-2.0 * theta * t)) - 2.0 * math.exp(-theta * t) * r


def ou_variance(ou: OUSpec, t: float, config: QuadConfig | None = None) -> float:
    """``E[X_t^2]`` for the solution started at ``X_0 = 0``.

    Stationary-increment drivers use ``X_t = Z_t - e^{-theta t} Z_0``.
    SubfBm and bifBm are split into an fBm part plus the correction ``g``
    handled by :func:`delta_g`.
    """
    cfg = config or DEFAULT_CONFIG
    if t < 0:
        raise DomainError("t must be >= 0")
    if t == 0:
        return 0.0
    try:
        _stationary_fbm(ou)
        stationary = True
    except NonStationaryDriverError:
        stationary = False
    if stationary and ou.theta > 0:
        return _link_variance(ou, t, cfg)
    if stationary:
        return ou_variance_direct(ou, t, cfg).require()
    p = ou.noise.p
    if isinstance(p, kn.SubFBM):
        base = OUSpec.first(kn.FBM(p.H), ou.theta)
        parts = g_sub(p.H)
        weight = 1.0
    else:
        base = OUSpec.first(kn.FBM(p.H * p.K), ou.theta)
        parts = g_bi(p.H, p.K)
        weight = 2.0 ** (1.0 - p.K)
    _, right = delta_g(*parts, ou.theta, t, cfg)
    return weight * ou_variance(base, t, cfg) + right.require()


def ou_variance_direct(ou: OUSpec, t: float, config: QuadConfig | None = None) -> QuadResult:
    """``E[X_t^2]`` from the three-term integration-by-parts form with ``g = R_G``.

    Only covariance evaluations are involved, so this is an independent route
    to :func:`ou_variance`.  Second-kind noise is not supported here.
    """
    cfg = config or DEFAULT_CONFIG
    if isinstance(ou.noise, SecondKind):
        raise UnsupportedProcessError("direct route needs a first-kind covariance")
    p = ou.noise.p
    left, _ = delta_g(
        lambda s, r: np.asarray(kn.cov(p, s, r)),
        lambda s: np.zeros_like(s),
        lambda s, r: np.zeros_like(s),
        ou.theta, t, cfg,
    )
    return left


def ou_cov(ou: OUSpec, s: float, t: float, config: QuadConfig | None = None) -> float:
    """``E[X_s X_t]`` for the solution started at 0."""
    cfg = config or DEFAULT_CONFIG
    if s > t:
        s, t = t, s
    if s < 0:
        raise DomainError("times must be >= 0")
    if s == 0:
        return 0.0
    if s == t:
        return ou_variance(ou, s, cfg)
    try:
        _stationary_fbm(ou)
        stationary = ou.theta > 0
    except NonStationaryDriverError:
        stationary = False
    if not stationary:
        return ou_cov_cross_integral(ou, s, t, cfg).require()
    theta = ou.theta
    var = stationary_variance(ou, cfg)
    r = stationary_autocov(ou, np.array([t - s, s, t]), cfg)
    return float(r[0] - math.exp(-theta * t) * r[1] - math.exp(-theta * s) * r[2]
                 + math.exp(-theta * (s + t)) * var)


def ou_cov_cross_integral(ou: OUSpec, s: float, t: float, config: QuadConfig | None = None) -> QuadResult:
    """``E[X_s X_t] = e^{-theta (t-s)} E[X_s^2] + e^{-theta (t+s)} * cross term``.

    The cross term integrates the mixed partial of ``R_G`` over
    ``[0, s] x [s, t]``.  First-kind drivers only.
    """
    cfg = config or DEFAULT_CONFIG
    if isinstance(ou.noise, SecondKind):
        raise UnsupportedProcessError("cross-covariance route needs a first-kind driver")
    if not 0 < s < t:
        raise DomainError(f"need 0 < s < t, got s={s}, t={t}")
    p = ou.noise.p
    theta = ou.theta
    var_s = ou_variance(ou, s, cfg)
    if isinstance(kn._as_fbm(p), kn.FBM) and kn._as_fbm(p).H == 0.5:
        cross = QuadResult(0.0, 0.0, 0, True)
    else:
        cross = cross_cov(lambda x, y: np.asarray(kn.mixed_partial(p, x, y)), theta, 0.0, s, s, t, cfg)
    scale = math.exp(-theta * (t + s))
    return cross.scaled(scale, math.exp(-theta * (t - s)) * var_s)


@dataclass(frozen=True)
class QuadratureConstant:
    """A leading constant defined by an integral, evaluated on demand."""

    description: str
    compute: Callable[[QuadConfig], float] = field(repr=False, compare=False)

    def evaluate(self, config: QuadConfig | None = None) -> float:
        return float(self.compute(config or DEFAULT_CONFIG))

    def __float__(self):
        return self.evaluate()


@dataclass(frozen=True)
class AsymptoticRegime:
    """Asymptotic law of ``E[Z_t Z_0]`` as ``t -> infinity``.

    ``kind`` is ``"power"`` (``constant * t^exponent``), ``"exp"``
    (``constant * t^poly_degree * e^{-rate t}``) or ``"closed"`` (an exact
    formula named by ``form_id``).
    """

    kind: str
    exponent: float | None = None
    rate: float | None = None
    poly_degree: int = 0
    constant: Union[float, QuadratureConstant, None] = None
    boundary: bool = False
    form_id: str | None = None

    def __post_init__(self):
        if self.kind == "power" and not (self.exponent is not None and self.exponent < 0):
            raise DomainError("power-law regime needs a negative exponent")
        if self.kind == "exp" and not (self.rate is not None and self.rate > 0):
            raise DomainError("exponential regime needs a positive rate")
        if self.poly_degree not in (0, 1):
            raise DomainError("poly_degree must be 0 or 1")

    def constant_value(self, config: QuadConfig | None = None) -> float:
        c = self.constant
        if isinstance(c, QuadratureConstant):
            return c.evaluate(config)
        return float(c)

    def leading_term(self, t, config: QuadConfig | None = None):
        t = np.asarray(t, dtype=float)
        c = self.constant_value(config)
        if self.kind == "power":
            return c * np.power(t, self.exponent)
        return c * np.power(t, self.poly_degree) * np.exp(-self.rate * t)

    def as_record(self, config: QuadConfig | None = None) -> dict:
        rec = {"kind": self.kind}
        if self.exponent is not None:
            rec["exponent"] = self.exponent
        if self.rate is not None:
            rec["rate"] = self.rate
        rec["poly_degree"] = self.poly_degree
        rec["constant"] = self.constant_value(config)
        rec["boundary"] = self.boundary
        if self.form_id is not None:
            rec["form_id"] = self.form_id
        return rec


def classify_regime(ou: OUSpec) -> AsymptoticRegime:
    """Decay law of the stationary auto-covariance.

    First kind (fBm, Hermite): ``t^{2H-2} / theta^2``; Brownian case exact.
    Second kind: the kernel ``rho_dd_Y1`` decays like ``A e^{-c u}``, giving

    * ``theta < c``: rate ``theta``, constant ``V + J / (2 theta)`` with
      ``J = int_0^inf (e^{theta u} - e^{-theta u}) k(u) du``;
    * ``theta = c``: rate ``theta`` with a factor ``t``, constant ``A / (2 theta)``;
    * ``theta > c``: rate ``c``, constant ``A / (theta^2 - c^2)``.

    For bifBm with ``K < 1`` and ``theta = 1`` the first constant is exactly
    zero and the third form applies even though ``theta < c``.
    """
    _require_positive_theta(ou)
    theta = ou.theta
    fbm = _stationary_fbm(ou)
    if fbm is not None:
        if fbm.H == 0.5:
            return AsymptoticRegime("closed", rate=theta, constant=1.0 / (2.0 * theta),
                                    form_id="exp(-theta*t)/(2*theta)")
        return AsymptoticRegime("power", exponent=2.0 * fbm.H - 2.0, constant=1.0 / theta**2)
    base = ou.noise.base
    if isinstance(base, kn.BiFBM) and base.H == 0.5 and base.K != 1.0:
        raise DomainError("second-kind bifBm regime is not classified for H = 1/2")
    if isinstance(base, kn.BiFBM) and math.isclose(base.gamma, 0.5) and base.K != 1.0:
        raise DomainError("second-kind bifBm regime requires HK != 1/2")
    if _kernel_vanishes(ou):
        # the kernel vanishes and the auto-covariance is exactly V e^{-theta t}
        var = stationary_variance(ou)
        return AsymptoticRegime("exp", rate=theta, constant=var)
    A, c = kn.rho_dd_Y1_asymptote(base)
    if isinstance(base, kn.BiFBM) and base.K < 1.0 and theta == 1.0:
        # At theta = 1 the stationary solution is e^{-t} U_{a_t}, whose
        # auto-covariance e^{-t} R_U(a_t, a_0) has no e^{-t} term: the theta < c
        # constant vanishes and the next term A e^{-c t} / (theta^2 - c^2) leads.
        return AsymptoticRegime("exp", rate=c, constant=A / (theta**2 - c**2),
                                form_id="lamperti")
    if math.isclose(theta, c, rel_tol=1e-12, abs_tol=1e-15):
        return AsymptoticRegime("exp", rate=theta, poly_degree=1,
                                constant=A / (2.0 * theta), boundary=True)
    if theta > c:
        return AsymptoticRegime("exp", rate=c, constant=A / (theta**2 - c**2))

    def compute(cfg: QuadConfig) -> float:
        def integrand(u):
            # (e^{theta u} - e^{-theta u}) k(u) with e^{theta u} folded into k
            return -np.expm1(-2.0 * theta * u) * np.asarray(kn.rho_dd_Y1(base, u, exp_shift=theta))

        J = integrate_1d(integrand, 0.0, math.inf, "left", cfg).require()
        return stationary_variance(ou, cfg) + J / (2.0 * theta)

    handle = QuadratureConstant(
        "V + (1/(2 theta)) int_0^inf (e^{theta u} - e^{-theta u}) k(u) du", compute
    )
    return AsymptoticRegime("exp", rate=theta, constant=handle)


def nonstationary_variance_limit(ou: OUSpec) -> tuple[float, float]:
    """``(lim E[X_t^2], exponent)`` for first-kind subfBm / bifBm.

    The distance to the limit is bounded by ``C t^exponent``.
    """
    _require_positive_theta(ou)
    if not isinstance(ou.noise, FirstKind):
        raise UnsupportedProcessError("variance limit is defined for first-kind drivers")
    p = ou.noise.p
    theta = ou.theta
    if isinstance(p, kn.SubFBM):
        if p.H == 0.5:
            raise DomainError("H = 1/2 is excluded for subfBm")
        return p.H * gamma_fn(2.0 * p.H) / theta ** (2.0 * p.H), 2.0 * p.H - 2.0
    if isinstance(p, kn.BiFBM):
        g = p.gamma
        if math.isclose(g, 0.5, rel_tol=0, abs_tol=1e-15):
            raise DomainError("HK = 1/2 is excluded for bifBm")
        return g * gamma_fn(2.0 * g) / (2.0 ** (p.K - 1.0) * theta ** (2.0 * g)), 2.0 * g - 2.0
    raise UnsupportedProcessError(f"variance limit is only catalogued for subfBm and bifBm, got {p!r}")


def nonstationary_cov_bound_exponent(ou: OUSpec) -> float:
    """Exponent ``e`` in ``|E[X_s X_t]| <= C |t - s|^e`` for first-kind subfBm / bifBm."""
    if not isinstance(ou.noise, FirstKind):
        raise UnsupportedProcessError("covariance bound is defined for first-kind drivers")
    p = ou.noise.p
    if isinstance(p, kn.SubFBM):
        return 2.0 * p.H - 2.0
    if isinstance(p, kn.BiFBM):
        if p.H < 0.5:
            return 2.0 * p.H * p.K - 2.0 * p.H - 1.0
        return 2.0 * p.H * p.K - 2.0
    raise UnsupportedProcessError(f"covariance bound is only catalogued for subfBm and bifBm, got {p!r}")


@dataclass(frozen=True)
class DecayFit:
    """Least-squares decay fit.

    ``estimate`` is the power-law exponent (model ``"power"``) or the decay
    rate (``"exponential"``, ``"exponential_poly"``).  ``poly_exponent`` is the
    fitted power of ``t`` multiplying the exponential in the latter model.
    """

    estimate: float
    r_squared: float
    dropped: int
    n_used: int
    intercept: float
    poly_exponent: float | None = None


def fit_decay(series, model: str = "power") -> DecayFit:
    """Fit ``log|value|`` against ``log t`` (power), ``t`` (exponential) or both.

    ``series`` is a sequence of ``(t, value)`` pairs or a 2 x n array.
    Nonpositive values are dropped with a warning; fewer than 5 usable points
    raise :class:`DomainError`.
    """
    arr = np.asarray(series, dtype=float)
    if arr.ndim != 2:
        raise DomainError("series must be a sequence of (t, value) pairs")
    if arr.shape[1] != 2 and arr.shape[0] == 2:
        arr = arr.T
    if arr.shape[1] != 2:
        raise DomainError("series must be a sequence of (t, value) pairs")
    t, v = arr[:, 0], arr[:, 1]
    if np.any(np.diff(t) <= 0):
        raise DomainError("t must be strictly increasing")
    keep = np.isfinite(v) & (v > 0) & np.isfinite(t)
    if model == "power":
        keep &= t > 0
    dropped = int(np.count_nonzero(~keep))
    if dropped:
        warnings.warn(f"fit_decay dropped {dropped} nonpositive or non-finite values", RuntimeWarning)
    t, v = t[keep], v[keep]
    if t.size < 5:
        raise DomainError(f"fit_decay needs at least 5 usable points, got {t.size}")
    y = np.log(v)
    if model == "power":
        X = np.column_stack([np.ones_like(t), np.log(t)])
    elif model == "exponential":
        X = np.column_stack([np.ones_like(t), t])
    elif model == "exponential_poly":
        if np.any(t <= 0):
            raise DomainError("exponential_poly needs t > 0")
        X = np.column_stack([np.ones_like(t), t, np.log(t)])
    else:
        raise DomainError(f"unknown decay model {model!r}")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    if model == "power":
        return DecayFit(float(coef[1]), r2, dropped, int(t.size), float(coef[0]))
    poly = float(coef[2]) if model == "exponential_poly" else None
    return DecayFit(float(-coef[1]), r2, dropped, int(t.size), float(coef[0]), poly)
