"""Validation suites: dual-route numerical checks shared by the CLI and the tests.

Each suite returns a list of :class:`CheckResult`.  A check compares two
independent evaluations of the same quantity (closed form against
quadrature, quadrature against finite differences, Monte-Carlo against
quadrature) at a fixed tolerance.

Suites:

* ``identities``: kernel identities, stationary-increment decomposition,
  closed-form ``f_U`` against its definition, mixed partials against finite
  differences;
* ``quadrature``: both sides of the variance-correction identity and the
  one-dimensional reduction of the stationary double integral against brute
  2-D quadrature;
* ``closed_form``: stationary variance, Brownian auto-covariance and
  Gaussian moments;
* ``asymptotics``: power-law and exponential decay laws, regime constants,
  fitted rates and nonstationary variance limits;
* ``montecarlo``: simulated moments against quadrature, ergodicity and
  standard-error calibration.  Its size is set by the budget.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import factorial2

from . import analytics as an
from . import kernels as kn
from . import montecarlo as mc
from . import quadrature as qd
from . import simulate as sim
from .errors import DomainError

__all__ = ["CheckResult", "Budget", "BUDGETS", "SUITES", "run_suite", "run_suites", "rel_err"]


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.suite}/{self.name}: {self.detail}"

    def as_record(self) -> dict:
        return {
            "suite": self.suite,
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "tolerance": self.tolerance,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class Budget:
    """Monte-Carlo sizes.  ``n_steps`` is the number of grid steps on ``[0, T]``."""

    name: str
    n_paths: int
    n_steps: int
    T: float
    decay_paths: int
    ergodic_paths: int
    calib_seeds: int
    calib_paths: int


BUDGETS = {
    "quick": Budget("quick", 2000, 512, 10.0, 4000, 100, 50, 200),
    "default": Budget("default", 10_000, 4096, 10.0, 10_000, 200, 50, 400),
}


def rel_err(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0.0 else abs(a - b) / scale


class _Collector:
    def __init__(self, suite: str):
        self.suite = suite
        self.results: list[CheckResult] = []

    def within(self, name: str, err: float, tol: float, detail: str = ""):
        ok = bool(np.isfinite(err) and err <= tol)
        self.results.append(CheckResult(self.suite, name, ok, float(err), tol,
                                        f"{detail} err={err:.3e} tol={tol:.1e}".strip()))

    def flag(self, name: str, ok: bool, value: float, tol: float, detail: str):
        self.results.append(CheckResult(self.suite, name, bool(ok), float(value), tol, detail))

    def guard(self, name: str, fn: Callable[[], None]):
        """Run ``fn``; an exception becomes a failed check instead of aborting the suite."""
        try:
            fn()
        except Exception as exc:  # reported, not swallowed
            self.results.append(CheckResult(self.suite, name, False, math.nan, math.nan,
                                            f"raised {type(exc).__name__}: {exc}"))


# ---------------------------------------------------------------- identities

_GAUSSIAN_CASES = [kn.FBM(0.7), kn.FBM(0.3), kn.SubFBM(0.7), kn.SubFBM(0.3),
                   kn.BiFBM(0.6, 0.5), kn.BiFBM(0.3, 0.8)]


def _fd2(fn, x, h):
    """Richardson-extrapolated central second difference."""
    def d2(step):
        return (fn(x + step) - 2.0 * fn(x) + fn(x - step)) / step**2
    return (4.0 * d2(h / 2.0) - d2(h)) / 3.0


def _identities(budget: Budget) -> list[CheckResult]:
    c = _Collector("identities")
    xs = np.linspace(0.1, 10.0, 34)

    def mn_identities():
        for g in (0.3, 0.7):
            worst_m = worst_n = 0.0
            for x in xs:
                h = 1e-3 * max(1.0, x)
                m = float(kn.m_gamma(g, x))
                rm = _fd2(lambda y: float(kn.m_gamma(g, y)), x, h) - m \
                    - 2.0 * (2.0 * g - 1.0) / g * float(kn.minus_kernel(g, x))
                n = float(kn.n_gamma(g, x))
                rn = _fd2(lambda y: float(kn.n_gamma(g, y)), x, h) - n \
                    - 2.0 * (1.0 - 2.0 * g) / g * float(kn.plus_kernel(g, x))
                worst_m = max(worst_m, abs(rm) / max(1.0, abs(m)))
                worst_n = max(worst_n, abs(rn) / max(1.0, abs(n)))
            c.within(f"m_identity[gamma={g}]", worst_m, 1e-6, "m''-m vs kernel on [0.1,10]")
            c.within(f"n_identity[gamma={g}]", worst_n, 1e-6, "n''-n vs kernel on [0.1,10]")

    c.guard("mn_identities", mn_identities)

    rng = np.random.default_rng(20240611)
    u = rng.uniform(0.05, 5.0, 200)
    v = rng.uniform(0.05, 5.0, 200)

    def decomposition():
        for p in (kn.FBM(0.7), kn.FBM(0.3), kn.Hermite(2, 0.7), kn.Hermite(3, 0.8)):
            lhs = np.asarray(kn.cov(p, u, v))
            rhs = 0.5 * (kn.rho(p, u) + kn.rho(p, v) - kn.rho(p, np.abs(v - u)))
            err = float(np.max(np.abs(lhs - rhs) / np.maximum(np.abs(lhs), 1e-300)))
            c.within(f"decomposition_holds[{p}]", err, 1e-12, "cov vs rho decomposition")
        for p in (kn.SubFBM(0.7), kn.SubFBM(0.3), kn.BiFBM(0.6, 0.5), kn.BiFBM(0.3, 0.8)):
            lhs = np.asarray(kn.cov(p, u, v))
            rhs = 0.5 * (kn.rho(p, u) + kn.rho(p, v) - kn.rho(p, np.abs(v - u)))
            gap = float(np.max(np.abs(lhs - rhs)))
            c.flag(f"decomposition_fails[{p}]", gap > 1e-3, gap, 1e-3,
                   f"non-stationary increments: max gap {gap:.3e} > 1e-3")

    c.guard("decomposition", decomposition)

    def f_closed_forms():
        x = np.array([-2.0, -0.3, 0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 12.0])
        for p in _GAUSSIAN_CASES:
            g = p.gamma
            closed = np.asarray(kn.f_U(p, x))
            ax = np.abs(x)
            definitional = g ** (2 * g) * np.asarray(kn.cov(p, np.exp(ax / (2 * g)), np.exp(-ax / (2 * g))))
            err = float(np.max(np.abs(closed - definitional) / np.abs(definitional)))
            c.within(f"f_closed_form[{p}]", err, 1e-10, "closed form vs definition")
        for p in (kn.BiFBM(0.6, 0.5), kn.BiFBM(0.3, 0.8)):
            xx = np.array([0.1, 1.0, 5.0])
            g = p.gamma
            definitional = g ** (2 * g) * np.asarray(kn.cov(p, np.exp(xx / (2 * g)), np.exp(-xx / (2 * g))))
            plus = g ** (2 * g) * 2.0 ** (-p.K) * (kn.n_gamma(p.K / 2, xx) + kn.m_gamma(g, xx))
            gap = float(np.min(np.abs(plus - definitional) / np.abs(definitional)))
            c.flag(f"f_plus_sign_rejected[{p}]", gap > 1e-3, gap, 1e-3,
                   f"'+' variant misses the definition by >= {gap:.3e}")

    c.guard("f_closed_forms", f_closed_forms)

    def mixed_partials():
        for p in _GAUSSIAN_CASES + [kn.Hermite(2, 0.7)]:
            worst = 0.0
            count = 0
            while count < 50:
                a, b = rng.uniform(0.2, 5.0, 2)
                if abs(a - b) < 0.1 * max(a, b):
                    continue
                count += 1
                h = 1e-4 * max(a, b)
                fd = (kn.cov(p, a + h, b + h) - kn.cov(p, a + h, b - h)
                      - kn.cov(p, a - h, b + h) + kn.cov(p, a - h, b - h)) / (4 * h * h)
                exact = float(kn.mixed_partial(p, a, b))
                worst = max(worst, abs(fd - exact) / abs(exact))
            c.within(f"mixed_partial_fd[{p}]", worst, 1e-4, "50 off-diagonal points")

    c.guard("mixed_partials", mixed_partials)
    return c.results


# ---------------------------------------------------------------- quadrature

def _quadrature(budget: Budget) -> list[CheckResult]:
    c = _Collector("quadrature")

    def delta_forms():
        for label, parts in (("sub(H=0.7)", an.g_sub(0.7)), ("bi(H=0.6,K=0.5)", an.g_bi(0.6, 0.5))):
            for t in (1.0, 2.0, 5.0):
                left, right = qd.delta_g(*parts, 1.0, t)
                ok = left.converged and right.converged
                err = rel_err(left.value, right.value) if ok else math.inf
                c.within(f"delta_g_forms[{label},t={t}]", err, 1e-6,
                         f"left={left.value:.12g} right={right.value:.12g}")

    c.guard("delta_forms", delta_forms)

    def reduction_vs_brute():
        for g in (0.3, 0.7):
            kernels = {
                "power": (lambda u, g=g: np.power(u, 2 * g - 2), 2 * g - 2),
                "minus": (lambda u, g=g: np.asarray(kn.minus_kernel(g, u)), 2 * g - 2),
                "plus": (lambda u, g=g: np.asarray(kn.plus_kernel(g, u)), 0.0),
            }
            for name, (k, beta) in kernels.items():
                for t in (1.0, 2.0, 5.0):
                    red = qd.stationary_double(k, 1.0, t, k_exponent_at_zero=beta)
                    brute = qd.stationary_double(k, 1.0, t, k_exponent_at_zero=beta, method="brute")
                    ok = red.converged and brute.converged
                    err = rel_err(red.value, brute.value) if ok else math.inf
                    c.within(f"reduction_vs_brute[{name},gamma={g},t={t}]", err, 1e-6)

    c.guard("reduction_vs_brute", reduction_vs_brute)
    return c.results


# ---------------------------------------------------------------- closed forms

def _closed_form(budget: Budget) -> list[CheckResult]:
    c = _Collector("closed_form")

    def variance():
        for H in (0.3, 0.5, 0.7):
            for theta in (0.5, 1.0, 2.0):
                ou = an.OUSpec.first(kn.FBM(H), theta)
                closed = H * math.gamma(2 * H) / theta ** (2 * H)
                quad = an.stationary_variance_quadrature(ou).require()
                c.within(f"variance_laplace[H={H},theta={theta}]", rel_err(closed, quad), 1e-8)
                c.within(f"variance_routine[H={H},theta={theta}]",
                         rel_err(closed, an.stationary_variance(ou)), 1e-14)

    c.guard("variance", variance)

    def brownian_autocov():
        worst = 0.0
        for theta in (0.5, 1.0, 2.0):
            ou = an.OUSpec.first(kn.FBM(0.5), theta)
            for t in (0.0, 0.5, 1.0, 2.0, 5.0, 10.0):
                exact = math.exp(-theta * t) / (2 * theta)
                worst = max(worst, rel_err(an.stationary_autocov(ou, t), exact))
        c.within("brownian_autocov", worst, 1e-10, "e^{-theta t}/(2 theta)")

    c.guard("brownian_autocov", brownian_autocov)

    def moments():
        worst = 0.0
        for H in (0.3, 0.5, 0.7):
            for theta in (0.5, 1.0, 2.0):
                ou = an.OUSpec.first(kn.FBM(H), theta)
                sigma = math.sqrt(an.stationary_variance(ou))
                for p in (2, 4, 6):
                    expect = float(factorial2(p - 1)) * sigma**p
                    worst = max(worst, rel_err(an.stationary_moment(ou, p), expect))
                odd = max(abs(an.stationary_moment(ou, p)) for p in (1, 3, 5))
                c.flag(f"odd_moments[H={H},theta={theta}]", odd == 0.0, odd, 0.0, "odd moments vanish")
        c.within("even_moments", worst, 1e-12, "(p-1)!! sigma^p, p in {2,4,6}")

    c.guard("moments", moments)
    return c.results


# ---------------------------------------------------------------- asymptotics

# (base, theta) per regime branch of the second-kind decay law
_RATE_CASES = [
    (kn.FBM(0.7), 0.2), (kn.FBM(0.7), 2.0), (kn.FBM(0.3), 1.0), (kn.FBM(0.3), 4.0),
    (kn.SubFBM(0.7), 1.0), (kn.SubFBM(0.7), 3.0), (kn.SubFBM(0.3), 1.0), (kn.SubFBM(0.3), 8.0),
    (kn.BiFBM(0.6, 0.5), 0.5), (kn.BiFBM(0.6, 0.5), 3.0),
    (kn.BiFBM(0.3, 0.5), 0.5), (kn.BiFBM(0.3, 0.5), 4.0),
]


def _critical_rate(base: kn.ProcessSpec) -> float:
    """Decay rate of the second-kind kernel, by family."""
    if isinstance(base, kn.FBM):
        return 1.0 / base.H - 1.0
    if isinstance(base, kn.SubFBM):
        return 2.0 / base.H - 1.0
    if base.H < 0.5:
        return 2.0 / base.K - 1.0
    return 1.0 / (base.H * base.K) - 1.0


def _asymptotics(budget: Budget) -> list[CheckResult]:
    c = _Collector("asymptotics")

    def power_law_double():
        for g in (0.3, 0.7):
            t = 50.0
            val = qd.stationary_double(lambda u: np.power(u, 2 * g - 2), 1.0, t,
                                       k_exponent_at_zero=2 * g - 2).require()
            ratio = val / t ** (2 * g - 2)
            c.flag(f"power_double_ratio[gamma={g}]", 0.95 <= ratio <= 1.05, ratio, 0.05,
                   f"value*theta^2/t^(2g-2) = {ratio:.6f} in [0.95,1.05]")

    c.guard("power_law_double", power_law_double)

    def exp_double_constants():
        for g, theta in ((0.7, 0.2), (0.7, 3.0), (0.3, 1.0), (0.3, 3.0)):
            cr = 1.0 / g - 1.0
            k = lambda u, g=g: np.asarray(kn.minus_kernel(g, u))  # noqa: E731
            t = 40.0
            val = qd.stationary_double(k, theta, t, k_exponent_at_zero=2 * g - 2).require()
            if theta < cr:
                J = qd.integrate_1d(
                    lambda u: -np.expm1(-2 * theta * u) * np.exp(theta * u + kn._log_minus_kernel(g, u)),
                    0.0, math.inf, "left").require()
                lead = math.exp(-theta * t) * J / (2 * theta)
                case = "theta<c"
            else:
                lead = math.exp(-cr * t) / (theta**2 - cr**2)
                case = "theta>c"
            c.within(f"exp_double_constant[{case},gamma={g},theta={theta}]",
                     abs(val / lead - 1.0), 0.02, f"ratio={val / lead:.6f} at t=40")

    c.guard("exp_double_constants", exp_double_constants)

    def boundary_shape():
        g = 0.7
        cr = 1.0 / g - 1.0
        ts = np.linspace(20.0, 60.0, 15) / cr
        vals = [qd.stationary_double(lambda u: np.asarray(kn.minus_kernel(g, u)), cr, t,
                                     k_exponent_at_zero=2 * g - 2).require() for t in ts]
        fit = an.fit_decay(np.column_stack([ts, vals]), "exponential_poly")
        c.within("boundary_rate", abs(fit.estimate / cr - 1.0), 0.05,
                 f"fitted rate {fit.estimate:.6f} vs {cr:.6f}")
        c.within("boundary_poly_degree", abs(fit.poly_exponent - 1.0), 0.1,
                 f"fitted power of t {fit.poly_exponent:.4f} vs 1")
        ratio = vals[-1] / (ts[-1] * math.exp(-cr * ts[-1]) / (2 * cr))
        c.within("boundary_constant", abs(ratio - 1.0), 0.02, f"t e^(-theta t)/(2 theta) ratio {ratio:.6f}")

    c.guard("boundary_shape", boundary_shape)

    def power_law_exponent():
        ts = np.linspace(20.0, 100.0, 17)
        for p in (kn.FBM(0.7), kn.FBM(0.3), kn.Hermite(2, 0.7)):
            ou = an.OUSpec.first(p, 1.0)
            vals = an.stationary_autocov(ou, ts)
            fit = an.fit_decay(np.column_stack([ts, np.abs(vals)]), "power")
            target = 2 * p.H - 2
            c.within(f"power_exponent[{p}]", abs(fit.estimate - target), 0.05,
                     f"fitted {fit.estimate:.5f} vs {target:.2f}")
            reg = an.classify_regime(ou)
            c.flag(f"power_regime[{p}]", reg.kind == "power" and math.isclose(reg.exponent, target),
                   reg.exponent, 0.0, f"classified exponent {reg.exponent}")

    c.guard("power_law_exponent", power_law_exponent)

    def exponential_rates():
        for base, theta in _RATE_CASES:
            ou = an.OUSpec.second(base, theta)
            cr = _critical_rate(base)
            rate = min(theta, cr)
            ts = np.linspace(20.0, 60.0, 11) / rate
            vals = np.asarray(an.stationary_autocov(ou, ts))
            sign = np.sign(vals[-1])
            fit = an.fit_decay(np.column_stack([ts, sign * vals]), "exponential")
            branch = "theta<c" if theta < cr else "theta>c"
            c.within(f"second_kind_rate[{base},theta={theta},{branch}]", abs(fit.estimate / rate - 1.0), 0.05,
                     f"fitted {fit.estimate:.6f} vs {rate:.6f}")
            reg = an.classify_regime(ou)
            c.flag(f"second_kind_regime[{base},theta={theta}]",
                   reg.kind == "exp" and math.isclose(reg.rate, rate), reg.rate, 0.0,
                   f"classified rate {reg.rate:.6f}")

    c.guard("exponential_rates", exponential_rates)

    def nonstationary_limits():
        ts = np.geomspace(10.0, 80.0, 10)
        for p in (kn.SubFBM(0.7), kn.SubFBM(0.3), kn.BiFBM(0.6, 0.5), kn.BiFBM(0.8, 0.8)):
            ou = an.OUSpec.first(p, 1.0)
            lim, expo = an.nonstationary_variance_limit(ou)
            g = p.gamma
            if isinstance(p, kn.SubFBM):
                closed = g * math.gamma(2 * g)
            else:
                closed = 2.0 ** (1.0 - p.K) * g * math.gamma(2 * g)
            c.within(f"variance_limit_value[{p}]", rel_err(lim, closed), 1e-14)
            err = np.array([an.ou_variance(ou, t) - lim for t in ts])
            fit = an.fit_decay(np.column_stack([ts, np.abs(err)]), "power")
            c.within(f"variance_limit_exponent[{p}]", abs(fit.estimate - (2 * g - 2)), 0.15,
                     f"fitted {fit.estimate:.4f} vs {2 * g - 2:.2f} on t in [10,80]")

    c.guard("nonstationary_limits", nonstationary_limits)
    return c.results


# ---------------------------------------------------------------- Monte Carlo

def _z_check(c: _Collector, name: str, est: mc.CovEstimate, target: float, k: float = 3.0):
    z = est.z_score(target)
    c.flag(name, abs(z) <= k, z, k,
           f"mc={est.value:.6g} se={est.std_error:.2e} target={target:.6g} z={z:+.2f}")


def _montecarlo(budget: Budget, threads: int = 1) -> list[CheckResult]:
    c = _Collector("montecarlo")
    T = budget.T
    grid = sim.Grid.uniform(T, budget.n_steps + 1)

    def first_kind():
        ou = an.OUSpec.first(kn.FBM(0.7), 1.0)
        X = sim.ou_first_kind(sim.sample_gaussian(kn.FBM(0.7), grid, budget.n_paths, 101, threads=threads), 1.0)
        _z_check(c, "first_kind_variance_T", mc.estimate_cov(X, T, T), an.ou_variance(ou, T))
        _z_check(c, "first_kind_cov_half_T", mc.estimate_cov(X, T / 2, T), an.ou_cov(ou, T / 2, T))
        for row in mc.decay_study(ou, [1.0, 2.0, 4.0], budget.decay_paths, 102, threads=threads):
            _z_check(c, f"first_kind_lag_cov[{row.lag:g}]", row.estimate, row.analytic)

    c.guard("first_kind", first_kind)

    def second_kind():
        base = kn.FBM(0.7)
        ou = an.OUSpec.second(base, 1.0)
        Y = sim.second_kind_noise(base, grid, budget.n_paths, 201, threads=threads)
        X = sim.ou_second_kind(Y, 1.0)
        _z_check(c, "second_kind_variance_T", mc.estimate_cov(X, T, T), an.ou_variance(ou, T))
        _z_check(c, "second_kind_cov_half_T", mc.estimate_cov(X, T / 2, T), an.ou_cov(ou, T / 2, T))
        for row in mc.decay_study(ou, [1.0, 2.0, 4.0], budget.decay_paths, 202, threads=threads):
            _z_check(c, f"second_kind_lag_cov[{row.lag:g}]", row.estimate, row.analytic)
        # increment law of the noise at several lags and start times
        for s, lag in ((0.0, T / 8), (0.0, T / 4), (T / 4, T / 4), (T / 2, T / 4), (0.0, T / 2)):
            d = Y.at(s + lag) - Y.at(s)
            est = mc._mean_se(d * d)
            target = float(kn.increment_variance_Y1(base, lag))
            _z_check(c, f"noise_increment_variance[s={s:g},lag={lag:g}]", est, target)

    c.guard("second_kind", second_kind)

    def ergodicity():
        g = sim.Grid.uniform(50.0, 801)
        cases = (("identity", an.OUSpec.first(kn.FBM(0.5), 1.0)),
                 ("square", an.OUSpec.first(kn.FBM(0.7), 1.0)),
                 ("square", an.OUSpec.second(kn.FBM(0.7), 1.0)))
        for i, (f, ou) in enumerate(cases):
            Z = sim.stationary_path(ou, g, budget.ergodic_paths, 301 + i, threads=threads)
            r = mc.ergodicity_check(Z, f)
            c.flag(f"ergodicity[{f},{ou.kind},{ou.process}]", abs(r.z_score) < 4.0 and not r.degenerate,
                   r.z_score, 4.0, f"time average {r.time_avg_mean:.5g} vs {r.expected:.5g} z={r.z_score:+.2f}")

    c.guard("ergodicity", ergodicity)

    def calibration():
        ou = an.OUSpec.first(kn.FBM(0.7), 1.0)
        g = sim.Grid.uniform(1.0, 33)
        target = an.ou_variance(ou, 1.0)
        inside = 0
        for seed in range(budget.calib_seeds):
            X = sim.ou_first_kind(sim.sample_gaussian(kn.FBM(0.7), g, budget.calib_paths, 1000 + seed), 1.0)
            inside += mc.estimate_cov(X, 1.0, 1.0).within(target, 2.0)
        need = math.ceil(0.8 * budget.calib_seeds)
        c.flag("se_calibration", inside >= need, inside, need,
               f"{inside}/{budget.calib_seeds} seeds inside +-2 SE (need {need})")

    c.guard("calibration", calibration)
    return c.results


SUITES: dict[str, Callable[..., list[CheckResult]]] = {
    "identities": _identities,
    "quadrature": _quadrature,
    "closed_form": _closed_form,
    "asymptotics": _asymptotics,
    "montecarlo": _montecarlo,
}


def run_suite(name: str, budget: str | Budget = "default", threads: int = 1) -> list[CheckResult]:
    if name not in SUITES:
        raise DomainError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    b = budget if isinstance(budget, Budget) else BUDGETS.get(budget)
    if b is None:
        raise DomainError(f"unknown budget {budget!r}; choose from {sorted(BUDGETS)}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        if name == "montecarlo":
            return _montecarlo(b, threads)
        return SUITES[name](b)


def run_suites(names, budget: str | Budget = "default", threads: int = 1,
               on_result: Callable[[CheckResult], None] | None = None) -> tuple[list[CheckResult], dict]:
    """Run several suites; returns all results and the wall time per suite."""
    results: list[CheckResult] = []
    timing = {}
    for name in names:
        start = time.perf_counter()
        out = run_suite(name, budget, threads)
        timing[name] = time.perf_counter() - start
        for r in out:
            if on_result is not None:
                on_result(r)
        results.extend(out)
    return results, timing
