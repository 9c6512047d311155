import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracou import kernels as kn
from fracou.errors import DomainError, SingularityError, UnsupportedProcessError

hurst = st.floats(0.05, 0.95)
times = st.floats(0.01, 20.0)
K_param = st.floats(0.05, 1.0)

GAUSSIAN = [kn.FBM(0.7), kn.FBM(0.3), kn.SubFBM(0.7), kn.SubFBM(0.3), kn.BiFBM(0.6, 0.5), kn.BiFBM(0.3, 0.8)]
ALL = GAUSSIAN + [kn.Hermite(2, 0.7), kn.Hermite(1, 0.6)]

# 30-digit mpmath evaluations of the definitions (gamma^{2gamma} R_U(e^{x/2g}, e^{-x/2g}),
# f - f'' by numerical differentiation, h by quadrature); see tests for the inputs.
F_ORACLE = {
    "fbm07": (kn.FBM(0.7), [0.59003621989200874794, 0.37443086889541359776, 0.051879853643267469635]),
    "sub07": (kn.SubFBM(0.7), [0.39629221422492590459, 0.19662155309887563058, 0.0040736893038799459528]),
    "bi0605": (kn.BiFBM(0.6, 0.5), [0.31233051419614531778, 0.02863193066075311374, 1.8191257233476614708e-6]),
}
RHO_DD_ORACLE = {
    "fbm07": [0.41904428451819952986, 0.26629635737272068992, 0.15249631545776612315],
    "sub07": [0.19864787678672945769, 0.067689914946690252564, 0.010166733969278690197],
    "bi0605": [-0.63556395242054701825, -0.15996844597456441876, -0.012028444805836716134],
}
H_ORACLE = {
    "fbm07": [0.26577707292743234291, 1.7878301178499991511],
    "sub07": [0.17022538132094582901, 1.0078502363567103608],
    "bi0605": [0.099615006353073029448, 0.40070846758184863557],
}


# ---------------------------------------------------------------- records

def test_parameter_ranges_rejected():
    for bad in (lambda: kn.FBM(0.0), lambda: kn.FBM(1.2), lambda: kn.SubFBM(1.0),
                lambda: kn.BiFBM(0.5, 0.0), lambda: kn.BiFBM(0.5, 1.1),
                lambda: kn.Hermite(0, 0.7), lambda: kn.Hermite(2, 0.4), lambda: kn.Hermite(1.5, 0.7)):
        with pytest.raises(DomainError):
            bad()


def test_holder_exponent():
    assert kn.holder_exponent(kn.FBM(0.3)).gamma == 0.3
    assert kn.holder_exponent(kn.SubFBM(0.7)).gamma == 0.7
    assert kn.holder_exponent(kn.Hermite(2, 0.8)).gamma == 0.8
    assert kn.holder_exponent(kn.BiFBM(0.6, 0.5)).gamma == pytest.approx(0.3, abs=1e-15)


def test_process_from_name():
    assert kn.process_from_name("FBM", 0.4) == kn.FBM(0.4)
    assert kn.process_from_name("bifbm", 0.4, K=0.5) == kn.BiFBM(0.4, 0.5)
    assert kn.process_from_name("hermite", 0.7, q=2) == kn.Hermite(2, 0.7)
    with pytest.raises(DomainError):
        kn.process_from_name("levy", 0.5)


# ---------------------------------------------------------------- covariance

def test_cov_examples():
    assert kn.cov(kn.FBM(0.7), 2.0, 2.0) == pytest.approx(2**1.4, rel=1e-15)
    assert kn.cov(kn.FBM(0.5), 1.0, 2.0) == 1.0
    assert kn.cov(kn.FBM(0.5), -1.0, -3.0) == pytest.approx(1.0)
    H, t = 0.7, 1.7
    assert kn.cov(kn.SubFBM(H), t, t) == pytest.approx((2 - 2 ** (2 * H - 1)) * t ** (2 * H), rel=1e-14)


def test_cov_domain():
    with pytest.raises(DomainError):
        kn.cov(kn.SubFBM(0.7), -1.0, 1.0)
    with pytest.raises(DomainError):
        kn.cov(kn.BiFBM(0.6, 0.5), 1.0, -0.1)


@given(hurst, times, times)
def test_bifbm_k1_is_fbm(H, s, t):
    assert kn.cov(kn.BiFBM(H, 1.0), s, t) == pytest.approx(kn.cov(kn.FBM(H), s, t), rel=1e-12, abs=1e-300)
    assert kn.rho(kn.BiFBM(H, 1.0), t) == pytest.approx(kn.rho(kn.FBM(H), t), rel=1e-12)


@given(st.floats(0.51, 0.99), times, times, st.integers(1, 4))
def test_hermite_matches_fbm(H, s, t, q):
    assert kn.cov(kn.Hermite(q, H), s, t) == kn.cov(kn.FBM(H), s, t)


@given(st.sampled_from(ALL), times, times)
def test_cov_symmetric_and_diagonal_nonnegative(p, s, t):
    assert kn.cov(p, s, t) == kn.cov(p, t, s)
    assert kn.cov(p, t, t) >= 0.0
    assert kn.rho(p, t) == kn.cov(p, t, t)


def test_rho_at_zero():
    for p in ALL:
        assert kn.rho(p, 0.0) == 0.0


@given(st.sampled_from(ALL), st.lists(st.floats(0.01, 10.0), min_size=8, max_size=8, unique=True))
def test_gram_matrix_psd(p, pts):
    x = np.array(sorted(pts))
    if np.min(np.diff(x)) < 1e-6:
        return
    G = np.asarray(kn.cov(p, x[:, None], x[None, :]))
    lam = np.linalg.eigvalsh(G)
    assert lam.min() >= -1e-10 * np.trace(G)


@given(st.sampled_from(ALL))
def test_increment_bound(p):
    C = kn.increment_bound_constant(p)
    g = p.gamma
    lags = np.geomspace(1e-3, 30.0, 40)
    for s in (0.0, 0.3, 2.0, 15.0):
        iv = np.asarray(kn.increment_variance(p, s, s + lags))
        assert np.all(iv <= C * lags ** (2 * g) * (1 + 1e-8))


def test_stationary_increment_decomposition():
    rng = np.random.default_rng(1)
    u, v = rng.uniform(0.05, 5, 100), rng.uniform(0.05, 5, 100)
    for p in (kn.FBM(0.7), kn.FBM(0.2), kn.Hermite(2, 0.7)):
        rhs = 0.5 * (kn.rho(p, u) + kn.rho(p, v) - kn.rho(p, np.abs(v - u)))
        np.testing.assert_allclose(kn.cov(p, u, v), rhs, rtol=1e-12)
    for p in (kn.SubFBM(0.7), kn.BiFBM(0.6, 0.5)):
        rhs = 0.5 * (kn.rho(p, u) + kn.rho(p, v) - kn.rho(p, np.abs(v - u)))
        assert np.max(np.abs(kn.cov(p, u, v) - rhs)) > 1e-3


# ---------------------------------------------------------------- mixed partial

def test_mixed_partial_examples():
    assert kn.mixed_partial(kn.FBM(0.5), 1.0, 2.0) == 0.0
    assert kn.mixed_partial(kn.FBM(0.7), 1.0, 2.0) == pytest.approx(0.28, rel=1e-14)
    H = 0.7
    assert kn.mixed_partial(kn.SubFBM(H), 1.0, 2.0) == pytest.approx(H * (2 * H - 1) * (1 - 3 ** (2 * H - 2)))


def test_mixed_partial_singular():
    with pytest.raises(SingularityError):
        kn.mixed_partial(kn.FBM(0.7), 1.0, 1.0)
    with pytest.raises(DomainError):
        kn.mixed_partial(kn.SubFBM(0.7), 0.0, 1.0)


@pytest.mark.parametrize("p", ALL, ids=str)
def test_mixed_partial_finite_difference(p):
    rng = np.random.default_rng(7)
    done = 0
    while done < 50:
        u, v = rng.uniform(0.2, 5.0, 2)
        if abs(u - v) < 0.1 * max(u, v):
            continue
        done += 1
        h = 1e-4 * max(u, v)
        fd = (kn.cov(p, u + h, v + h) - kn.cov(p, u + h, v - h) - kn.cov(p, u - h, v + h)
              + kn.cov(p, u - h, v - h)) / (4 * h * h)
        assert kn.mixed_partial(p, u, v) == pytest.approx(fd, rel=1e-4)


# ---------------------------------------------------------------- m, n

def test_m_n_values():
    assert kn.m_gamma(0.3, 0.0) == 0.0
    assert kn.n_gamma(0.5, 0.0) == pytest.approx(2.0)
    assert kn.n_gamma(0.3, 0.0) == pytest.approx(2**0.6)
    x = 1.3
    assert kn.m_gamma(0.7, x) == pytest.approx((math.exp(x / 1.4) - math.exp(-x / 1.4)) ** 1.4, rel=1e-14)


@given(st.floats(0.05, 0.95), st.floats(-30, 30))
def test_m_n_even(g, x):
    assert kn.m_gamma(g, x) == kn.m_gamma(g, -x)
    assert kn.n_gamma(g, x) == kn.n_gamma(g, -x)


@pytest.mark.parametrize("g", [0.3, 0.7])
@pytest.mark.parametrize("x", [0.5, 1.0, 3.0])
def test_m_identity_residual(g, x):
    h = 1e-3
    d2 = lambda s: (kn.m_gamma(g, x + s) - 2 * kn.m_gamma(g, x) + kn.m_gamma(g, x - s)) / s**2  # noqa: E731
    m2 = (4 * d2(h / 2) - d2(h)) / 3
    res = m2 - kn.m_gamma(g, x) - 2 * (2 * g - 1) / g * kn.minus_kernel(g, x)
    assert abs(res) < 1e-6


@pytest.mark.parametrize("g", [0.3, 0.7])
@pytest.mark.parametrize("x", [0.1, 0.5, 1.0, 3.0, 10.0])
def test_n_identity_residual(g, x):
    h = 1e-3 * max(1, x)
    d2 = lambda s: (kn.n_gamma(g, x + s) - 2 * kn.n_gamma(g, x) + kn.n_gamma(g, x - s)) / s**2  # noqa: E731
    n2 = (4 * d2(h / 2) - d2(h)) / 3
    res = n2 - kn.n_gamma(g, x) - 2 * (1 - 2 * g) / g * kn.plus_kernel(g, x)
    assert abs(res) / max(1.0, kn.n_gamma(g, x)) < 1e-6


# ---------------------------------------------------------------- f_U, h_U, rho''

def test_f_at_zero():
    for H in (0.3, 0.7):
        assert kn.f_U(kn.FBM(H), 0.0) == pytest.approx(H ** (2 * H), rel=1e-14)
        assert kn.f_U(kn.SubFBM(H), 0.0) == pytest.approx(H ** (2 * H) * (2 - 2 ** (2 * H - 1)), rel=1e-14)


@pytest.mark.parametrize("key", list(F_ORACLE))
def test_f_against_mpmath(key):
    p, expected = F_ORACLE[key]
    np.testing.assert_allclose(kn.f_U(p, np.array([0.1, 1.0, 5.0])), expected, rtol=1e-12)


@pytest.mark.parametrize("p", GAUSSIAN, ids=str)
def test_f_matches_definition(p):
    g = p.gamma
    x = np.array([0.0, 0.1, 1.0, 5.0, 20.0])
    d = g ** (2 * g) * np.asarray(kn.cov(p, np.exp(x / (2 * g)), np.exp(-x / (2 * g))))
    np.testing.assert_allclose(kn.f_U(p, x), d, rtol=1e-10)


def test_bifbm_plus_sign_display_is_wrong():
    p = kn.BiFBM(0.6, 0.5)
    x = np.array([0.1, 1.0, 5.0])
    g = p.gamma
    plus = g ** (2 * g) * 2 ** (-p.K) * (kn.n_gamma(p.K / 2, x) + kn.m_gamma(g, x))
    assert np.all(np.abs(plus / kn.f_U(p, x) - 1) > 0.1)


@given(st.sampled_from(GAUSSIAN), st.floats(0, 40))
def test_f_even(p, x):
    assert kn.f_U(p, x) == kn.f_U(p, -x)


def test_f_rejects_hermite():
    with pytest.raises(UnsupportedProcessError):
        kn.f_U(kn.Hermite(2, 0.7), 1.0)


def test_h_zero_and_even():
    for p in GAUSSIAN:
        assert kn.h_U(p, 0.0) == 0.0
        assert kn.h_U(p, -1.5) == kn.h_U(p, 1.5)


def test_h_brownian_closed_form():
    # f(x) = e^{-x}/2 for H = 1/2, hence h(t) = (t - 1 + e^{-t}) / 2
    for t in (0.1, 1.0, 3.0, 12.0):
        assert kn.h_U(kn.FBM(0.5), t) == pytest.approx(0.5 * (t - 1 + math.exp(-t)), rel=1e-10)


@pytest.mark.parametrize("key", list(H_ORACLE))
def test_h_against_mpmath(key):
    p = F_ORACLE[key][0]
    for t, want in zip((1.0, 3.0), H_ORACLE[key]):
        assert kn.h_U(p, t) == pytest.approx(want, rel=1e-9)
    np.testing.assert_allclose(kn.h_U_many(p, np.array([3.0, 1.0])), H_ORACLE[key][::-1], rtol=1e-9)


@pytest.mark.parametrize("p", GAUSSIAN, ids=str)
def test_h_superadditive(p):
    for t in (1.0, 2.0):
        assert kn.h_U(p, t) - 2 * kn.h_U(p, t / 2) >= 0.0


def test_rho_dd_examples():
    assert np.all(np.asarray(kn.rho_dd_Y1(kn.FBM(0.5), np.array([0.1, 1.0, 7.0]))) == 0.0)
    x = 1.0
    want = 0.4 * 0.7**0.4 * (math.exp(x / 1.4) - math.exp(-x / 1.4)) ** (-0.6)
    assert kn.rho_dd_Y1(kn.FBM(0.7), x) == pytest.approx(want, rel=1e-14)
    with pytest.raises(SingularityError):
        kn.rho_dd_Y1(kn.FBM(0.7), 0.0)


@pytest.mark.parametrize("key", list(RHO_DD_ORACLE))
def test_rho_dd_against_mpmath(key):
    p = F_ORACLE[key][0]
    np.testing.assert_allclose(kn.rho_dd_Y1(p, np.array([0.5, 1.0, 2.0])), RHO_DD_ORACLE[key], rtol=1e-12)


@pytest.mark.parametrize("p", GAUSSIAN, ids=str)
def test_rho_dd_matches_f_minus_f2(p):
    for x in (0.5, 1.0, 2.0):
        h = 1e-3
        d2 = lambda s: (kn.f_U(p, x + s) - 2 * kn.f_U(p, x) + kn.f_U(p, x - s)) / s**2  # noqa: E731
        f2 = (4 * d2(h / 2) - d2(h)) / 3
        assert kn.rho_dd_Y1(p, x) == pytest.approx(kn.f_U(p, x) - f2, rel=1e-5)


@pytest.mark.parametrize("p", GAUSSIAN, ids=str)
def test_rho_dd_asymptote(p):
    A, c = kn.rho_dd_Y1_asymptote(p)
    x = 60.0 / max(c, 0.5)
    assert kn.rho_dd_Y1(p, x) / (A * math.exp(-c * x)) == pytest.approx(1.0, rel=1e-6)


@pytest.mark.parametrize("p", [kn.FBM(0.7), kn.SubFBM(0.3), kn.BiFBM(0.6, 0.5)], ids=str)
def test_cov_Y1_and_increment_law(p):
    s, t = 0.7, 2.2
    f, h = (lambda x: float(kn.f_U(p, x))), (lambda x: kn.h_U(p, x))
    want = f(t - s) - f(t) - f(s) + f(0) + h(s) + h(t) - h(t - s)
    assert kn.cov_Y1(p, s, t) == pytest.approx(want, rel=1e-10)
    lag = 1.5
    assert kn.increment_variance_Y1(p, lag) == pytest.approx(2 * f(0) - 2 * f(lag) + 2 * h(lag), rel=1e-10)
    inc = kn.cov_Y1(p, s + lag, s + lag) + kn.cov_Y1(p, s, s) - 2 * kn.cov_Y1(p, s, s + lag)
    assert inc == pytest.approx(kn.increment_variance_Y1(p, lag), rel=1e-9)


def test_mpmath_oracle_recomputed_once():
    # live spot check of one frozen value so the frozen table stays honest
    mp.mp.dps = 30
    H = mp.mpf("0.7")
    x = mp.mpf(1)
    R = lambda s, t: (s ** (2 * H) + t ** (2 * H) - abs(t - s) ** (2 * H)) / 2  # noqa: E731
    val = H ** (2 * H) * R(mp.e ** (x / (2 * H)), mp.e ** (-x / (2 * H)))
    assert float(val) == pytest.approx(F_ORACLE["fbm07"][1][1], rel=1e-15)
