import math

import mpmath
import numpy as np
import pytest

from brwre.environment import EnvironmentLaw
from brwre.offspring import OffspringLaw
from brwre.velocity import (
    RateContext,
    RegimeError,
    biggins_gamma,
    biggins_mu,
    check_hl_conditions,
    gamma,
    lambda_,
    lambda_prime,
    m0_of_t,
    rho,
    rwre_speed,
    solve_t_plus,
    velocity,
)

BINARY = OffspringLaw.binary()
M15 = OffspringLaw.from_pairs([[1, 0.5], [2, 0.5]])
CONST = RateContext(BINARY, EnvironmentLaw.constant(0.25))
SUB = RateContext(M15, EnvironmentLaw.from_pairs([0.2, 0.4]))

# m=2, p=0.25: root of the scalar condition, independently confirmed with 40-digit arithmetic
T_PLUS_REF = 0.48330277117647806
GAMMA_REF = 0.18928962491523176


def law_with_mean(m):
    # p1, p2 (and p3 when needed) with the requested mean
    if m <= 2:
        return OffspringLaw.from_pairs([[1, 2 - m], [2, m - 1]])
    return OffspringLaw.from_pairs([[2, 3 - m], [3, m - 2]])


def test_m0_examples():
    assert m0_of_t(2.0, 0.25, 0.0) == pytest.approx(3.0, abs=1e-15)
    series = sum(2**i * 0.25 ** (i - 1) * 0.75 * math.exp(0.2 * i) for i in range(1, 201))
    assert m0_of_t(BINARY, 0.25, 0.2) == pytest.approx(series, rel=1e-12)
    assert m0_of_t(2.0, 0.25, 0.2) == pytest.approx(4.70617, abs=1e-5)
    with pytest.raises(ValueError):
        m0_of_t(2.0, 0.25, math.log(2))


def test_lambda_closed_forms():
    assert lambda_(CONST, 0.0) == pytest.approx(math.log(3), abs=1e-15)
    assert lambda_prime(CONST, 0.0) == pytest.approx(2.0, abs=1e-15)
    assert lambda_prime(SUB, 0.0) == pytest.approx(0.5 * (1 / 0.7 + 1 / 0.4), abs=1e-15)
    assert rho(CONST, 0.0) == pytest.approx(-math.log(3), abs=1e-15)


@pytest.mark.parametrize("ctx", [CONST, SUB])
def test_gradient_check(ctx):
    h = 1e-6
    for t in np.linspace(0.01, 0.95 * ctx.t_max, 20):
        fd = (lambda_(ctx, t + h) - lambda_(ctx, t - h)) / (2 * h)
        assert lambda_prime(ctx, t) == pytest.approx(fd, abs=1e-6)
        assert lambda_prime(ctx, t) > 1


@pytest.mark.parametrize("ctx", [CONST, SUB])
def test_rho_monotone(ctx):
    r = [rho(ctx, t) for t in np.linspace(0, 0.999 * ctx.t_max, 100)]
    assert r[0] < 0 and r[-1] > 0
    assert np.all(np.diff(r) >= 0)


def test_domain():
    with pytest.raises(ValueError):
        lambda_(CONST, CONST.t_max)
    with pytest.raises(RegimeError):
        RateContext(BINARY, EnvironmentLaw.from_pairs([0.3, 0.5]))
    with pytest.raises(RegimeError):
        velocity(BINARY, EnvironmentLaw.from_pairs([0.6, 0.7]))


def test_reference_point():
    t = solve_t_plus(CONST)
    assert t == pytest.approx(T_PLUS_REF, abs=1e-12)
    rep = gamma(CONST)
    assert rep.gamma == pytest.approx(GAMMA_REF, abs=1e-12)
    assert rep.gamma == pytest.approx(1.0 / rep.lambda_prime_at_t_plus, abs=1e-12)
    # e^{t+} = (1 - gamma) / (m p)
    assert math.exp(t) == pytest.approx((1 - rep.gamma) / 0.5, abs=1e-10)
    assert rep.rwre_speed == 0.75 and rep.gamma < rep.rwre_speed
    assert rho(CONST, t - 1e-9) <= 0 <= rho(CONST, t + 1e-9)


def test_reference_point_high_precision():
    mpmath.mp.dps = 40
    m, p = 2, mpmath.mpf("0.25")

    def r(t):
        x = m * p * mpmath.e**t
        return t / (1 - x) - mpmath.log(m * (1 - p) * mpmath.e**t / (1 - x))

    root = mpmath.findroot(r, (0.45, 0.55), solver="anderson", tol=mpmath.mpf(10) ** -35)
    assert float(root) == pytest.approx(T_PLUS_REF, abs=1e-16)
    assert float(1 - m * p * mpmath.e**root) == pytest.approx(GAMMA_REF, abs=1e-16)


def test_subcritical_example():
    rep = velocity(M15, EnvironmentLaw.from_pairs([0.2, 0.4]))
    assert 0 < rep.gamma < rep.rwre_speed < 1
    assert rep.rwre_speed == pytest.approx(1 / 1.4583333333333333, abs=1e-15)
    assert rep.gamma == pytest.approx(0.21660890496444515, abs=1e-12)
    assert rep.biggins_gamma is None
    assert 0 < rep.t_plus < SUB.t_max


@pytest.mark.parametrize("m", [1.5, 2.0, 3.0])
@pytest.mark.parametrize("p", [0.05, 0.1, 0.2, 0.3])
def test_biggins_equivalence(m, p):
    if m * p >= 1:
        pytest.skip("needs m p < 1")
    rep = velocity(law_with_mean(m), EnvironmentLaw.constant(p))
    assert abs(rep.gamma - rep.biggins_gamma) <= 1e-9
    assert rep.biggins_gamma < 1 - p


def test_biggins_examples():
    assert biggins_gamma(2.0, 0.25) == pytest.approx(GAMMA_REF, abs=1e-12)
    a = 0.75
    assert biggins_mu(a, 2.0, 0.25) == pytest.approx(2.0, abs=1e-12)
    assert biggins_mu(a - 1e-12, 2.0, 0.25) == pytest.approx(2.0, abs=1e-9)


def test_hl_conditions():
    assert check_hl_conditions(SUB).all()
    assert tuple(check_hl_conditions(CONST)) == (True, True, True, True)


def test_gamma_decreases_with_m():
    env = EnvironmentLaw.from_pairs([0.2, 0.3])
    g = [velocity(law_with_mean(m), env).gamma for m in (1.2, 1.5, 2.0)]
    assert g[0] > g[1] > g[2]


@pytest.mark.parametrize("support", [[0.1], [0.1, 0.5], [0.05, 0.2, 0.6]])
def test_gamma_below_rwre_speed(support):
    rep = velocity(law_with_mean(1.5), EnvironmentLaw.from_pairs(support))
    assert 0 < rep.gamma < rep.rwre_speed
