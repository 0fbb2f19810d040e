"""Quadrature, special-function, and inverse-CDF machinery."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wohs.numerics import (
    ConvergenceError,
    DomainError,
    QuadSpec,
    TabulatedCdf,
    adaptive_quad,
    abs_gamma_neg_half_alpha,
    build_inverse_cdf,
    gamma_fn,
    incomplete_j,
    stable_constants,
)


@pytest.mark.parametrize("x,want", [
    (0.5, math.sqrt(math.pi)),
    (1.0, 1.0),
    (1.5, math.sqrt(math.pi) / 2),
    (5.0, 24.0),
])
def test_gamma_worked_values(x, want):
    assert gamma_fn(x) == pytest.approx(want, rel=1e-14)


def test_gamma_rejects_nonpositive():
    with pytest.raises(DomainError):
        gamma_fn(0.0)
    with pytest.raises(DomainError):
        gamma_fn(-1.5)


def test_abs_gamma_neg_half_worked():
    # alpha = 1: |Gamma(-1/2)| = 2 sqrt(pi)
    assert abs_gamma_neg_half_alpha(1.0) == pytest.approx(2 * math.sqrt(math.pi), rel=1e-14)


@given(st.floats(min_value=0.05, max_value=1.9))
@settings(max_examples=50, deadline=None)
def test_abs_gamma_neg_half_recurrence(alpha):
    # Gamma(z+2) = (z+1) z Gamma(z) at z = -alpha/2, taken in absolute value
    h = alpha / 2
    want = gamma_fn(2 - h) / (h * (1 - h))
    assert abs_gamma_neg_half_alpha(alpha) == pytest.approx(want, rel=1e-12)


def test_stable_constants_alpha1_d2():
    c = stable_constants(1.0, 2)
    pi = math.pi
    assert c.C == pytest.approx(1 / pi**2, rel=1e-14)
    assert c.A == pytest.approx(1 / (2 * pi**4), rel=1e-14)
    assert c.B == pytest.approx(1 / (4 * pi**3), rel=1e-14)
    assert c.E == pytest.approx(1 / (2 * pi**2), rel=1e-14)
    assert c.K == pytest.approx(1 / (2 * pi), rel=1e-14)


@pytest.mark.parametrize("alpha", [0.3, 0.8, 1.0, 1.4, 1.9])
@pytest.mark.parametrize("d", [1, 2, 3, 5])
def test_stable_constants_product_identity(alpha, d):
    c = stable_constants(alpha, d)
    assert c.B == pytest.approx(c.E * c.K, rel=1e-13)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.7])
@pytest.mark.parametrize("d", [2, 3, 4])
def test_stable_constants_dimension_ratio(alpha, d):
    # C carries the dimension only through Gamma(d/2)/pi^{d/2}
    c1 = stable_constants(alpha, 1)
    cd = stable_constants(alpha, d)
    assert cd.C / c1.C == pytest.approx(
        gamma_fn(d / 2) / math.pi ** (d / 2), rel=1e-13)
    assert c1.C == pytest.approx(math.sin(alpha * math.pi / 2) / math.pi, rel=1e-13)


def test_stable_constants_rejects_bad_args():
    with pytest.raises(DomainError):
        stable_constants(2.0, 2)
    with pytest.raises(DomainError):
        stable_constants(0.0, 2)
    with pytest.raises(DomainError):
        stable_constants(1.0, 0)


def test_incomplete_j_closed_form():
    # d=2, alpha=1: the integrand is (u+1)^{-1} u^{-1/2}, antiderivative 2 atan(sqrt(u))
    assert incomplete_j(1.0, 1.0, 2) == pytest.approx(math.pi / 2, rel=1e-13)
    assert incomplete_j(8.0, 1.0, 2) == pytest.approx(
        2 * math.atan(math.sqrt(8.0)), rel=1e-13)


def test_incomplete_j_at_infinity():
    # complete Beta(alpha/2, (d-alpha)/2) when d > alpha
    want = gamma_fn(0.5) * gamma_fn(1.0) / gamma_fn(1.5)
    assert incomplete_j(np.inf, 1.0, 3) == pytest.approx(want, rel=1e-13)
    with pytest.raises(DomainError):
        incomplete_j(np.inf, 1.0, 1)


def test_incomplete_j_zero_and_negative():
    assert incomplete_j(0.0, 1.3, 2) == 0.0
    with pytest.raises(DomainError):
        incomplete_j(-1e-9, 1.3, 2)


@pytest.mark.parametrize("alpha,d", [(0.5, 2), (1.0, 2), (1.5, 3),
                                     (1.9, 2), (1.95, 2), (1.99, 2)])
def test_incomplete_j_matches_quadrature(alpha, d):
    # includes the near-degenerate (d-alpha)/2 -> 0 regime where the
    # regularized-Beta route loses accuracy and the series route takes over
    z = 3.7
    spec = QuadSpec(0.0, z, singularity_exponents=(alpha / 2 - 1, None))
    want = adaptive_quad(lambda u: (u + 1) ** (-d / 2) * u ** (alpha / 2 - 1), spec)
    assert incomplete_j(z, alpha, d) == pytest.approx(want, rel=1e-9)


@given(st.floats(min_value=0.2, max_value=1.8),
       st.floats(min_value=0.1, max_value=2.0),
       st.floats(min_value=0.1, max_value=5.0))
@settings(max_examples=25, deadline=None)
def test_incomplete_j_additive_in_upper_limit(alpha, z1, dz):
    z2 = z1 + dz
    d = 3
    inc = incomplete_j(z2, alpha, d) - incomplete_j(z1, alpha, d)
    want = adaptive_quad(
        lambda u: (u + 1) ** (-d / 2) * u ** (alpha / 2 - 1),
        QuadSpec(z1, z2))
    assert inc == pytest.approx(want, rel=1e-8, abs=1e-12)


def test_quadspec_validation():
    with pytest.raises(DomainError):
        QuadSpec(1.0, 1.0)
    with pytest.raises(DomainError):
        QuadSpec(2.0, -3.0)
    with pytest.raises(DomainError):
        QuadSpec(0.0, 1.0, abs_tol=0.0)
    with pytest.raises(DomainError):
        QuadSpec(0.0, 1.0, singularity_exponents=(-1.0, None))


def test_adaptive_quad_endpoint_singularity():
    got = adaptive_quad(lambda x: x ** -0.5,
                        QuadSpec(0.0, 1.0, singularity_exponents=(-0.5, None)))
    assert got == pytest.approx(2.0, rel=1e-10)


def test_adaptive_quad_both_endpoints_singular():
    got = adaptive_quad(lambda x: x ** -0.5 * (1 - x) ** -0.5,
                        QuadSpec(0.0, 1.0, singularity_exponents=(-0.5, -0.5)))
    assert got == pytest.approx(math.pi, rel=1e-10)


def test_adaptive_quad_infinite_tail():
    got = adaptive_quad(lambda x: x ** -2.0,
                        QuadSpec(1.0, np.inf, singularity_exponents=(None, 0.0)))
    assert got == pytest.approx(1.0, rel=1e-10)


def test_adaptive_quad_left_infinite():
    got = adaptive_quad(lambda x: math.exp(-x * x / 2), QuadSpec(-np.inf, 0.0))
    assert got == pytest.approx(math.sqrt(2 * math.pi) / 2, rel=1e-10)


def test_adaptive_quad_rejects_doubly_infinite():
    with pytest.raises(DomainError):
        adaptive_quad(lambda x: math.exp(-x * x), QuadSpec(-np.inf, np.inf))


def test_adaptive_quad_divergent_raises_with_state():
    with pytest.raises(ConvergenceError) as exc:
        adaptive_quad(lambda x: 1.0 / x, QuadSpec(0.0, 1.0))
    assert exc.value.estimate is not None
    assert exc.value.error_bound > 0


@pytest.fixture(scope="module")
def arcsine_table():
    return build_inverse_cdf(
        lambda y: y ** -0.5 * (1.0 - y) ** -0.5,
        QuadSpec(0.0, 1.0, singularity_exponents=(-0.5, -0.5)))


def test_inverse_cdf_uniform_quantiles():
    t = build_inverse_cdf(lambda y: np.ones_like(y), QuadSpec(2.0, 5.0))
    assert t.total_mass == pytest.approx(3.0, rel=1e-12)
    assert t.quantile(0.5) == pytest.approx(3.5, abs=1e-9)
    assert t.quantile(0.25) == pytest.approx(2.75, abs=1e-9)


def test_inverse_cdf_sqrt_singularity():
    t = build_inverse_cdf(lambda y: y ** -0.5,
                          QuadSpec(0.0, 1.0, singularity_exponents=(-0.5, None)))
    assert t.total_mass == pytest.approx(2.0, rel=1e-10)
    # CDF is sqrt(y), so quantile(u) = u^2
    assert t.quantile(0.5) == pytest.approx(0.25, abs=1e-8)
    assert t.quantile(0.1) == pytest.approx(0.01, abs=1e-8)


def test_inverse_cdf_arcsine_quantiles(arcsine_table):
    t = arcsine_table
    assert t.total_mass == pytest.approx(math.pi, rel=1e-10)
    assert t.quantile(0.5) == pytest.approx(0.5, abs=1e-8)
    assert t.quantile(0.25) == pytest.approx(math.sin(math.pi / 8) ** 2, abs=1e-8)
    assert t.quantile(0.75) == pytest.approx(math.sin(3 * math.pi / 8) ** 2, abs=1e-8)


def test_inverse_cdf_roundtrip_grid(arcsine_table):
    t = arcsine_table
    for u in np.linspace(0.001, 0.999, 999):
        assert abs(t.cdf_at(t.quantile(u)) - u) < 1e-9


@given(st.floats(min_value=1e-6, max_value=1 - 1e-6))
@settings(max_examples=200, deadline=None)
def test_inverse_cdf_roundtrip_property(arcsine_table, u):
    t = arcsine_table
    assert t.cdf_at(t.quantile(u)) == pytest.approx(u, abs=1e-9)


def test_inverse_cdf_halfline_with_tail():
    # integrand of a conditional first-coordinate law, restricted to one
    # side of its interior singular point
    a, x = 0.5, 2.0

    def f(y):
        y = np.asarray(y, dtype=float)
        return np.abs(y) ** (a - 1) / (x - y) / (1.0 - y) ** (a / 2)

    spec = QuadSpec(-np.inf, 0.0, singularity_exponents=(-0.25, a - 1))
    t = build_inverse_cdf(f, spec)
    assert t.total_mass == pytest.approx(adaptive_quad(f, spec), rel=1e-9)
    for u in (0.05, 0.5, 0.95):
        q = t.quantile(u)
        assert q < 0.0
        assert t.cdf_at(q) == pytest.approx(u, abs=1e-8)


def test_inverse_cdf_quantile_endpoints(arcsine_table):
    t = arcsine_table
    assert t.quantile(0.0) == t.support[0]
    assert t.quantile(1.0) == t.support[1]
    with pytest.raises(DomainError):
        t.quantile(-0.01)
    with pytest.raises(DomainError):
        t.quantile(1.01)


def test_inverse_cdf_zero_mass_raises():
    with pytest.raises(DomainError):
        build_inverse_cdf(lambda y: np.zeros_like(y), QuadSpec(0.0, 1.0))


def test_tabulated_cdf_rejects_malformed():
    knots = np.array([0.0, 0.5, 1.0])
    with pytest.raises(DomainError):
        TabulatedCdf(support=(0.0, 1.0), knots=knots,
                     cdf_values=np.array([0.0, 0.6, 0.5]), total_mass=1.0)
    with pytest.raises(DomainError):
        TabulatedCdf(support=(0.0, 1.0), knots=np.array([0.0, 0.0, 1.0]),
                     cdf_values=np.array([0.0, 0.5, 1.0]), total_mass=1.0)
