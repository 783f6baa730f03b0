"""First-order velocity of the minimal position in the subcritical regime.

After the location-to-time transformation, a particle's jump children have
mean log-Laplace transform

    log m0(t) = log( m (1 - w) e^t / (1 - m w e^t) ),   m w e^t < 1,

averaged over the environment to give ``Lambda(t)``.  The speed of the
rightmost jump time is ``Lambda'(t+)`` where ``t+`` is the root of
``rho(t) = t Lambda'(t) - Lambda(t)``; the minimal position moves at the
reciprocal.  Everything here is an exact finite weighted sum; no sampling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from brwre.environment import (
    EnvironmentLaw,
    Regime,
    RegimeKind,
    classify,
    expectation,
    omega_max,
)
from brwre.offspring import OffspringLaw

MAX_BISECTIONS = 200
DEFAULT_TOL = 1e-12


class RegimeError(ValueError):
    """The laws are not in the regime an operation requires."""


def _mean(offspring) -> float:
    return offspring.mean if isinstance(offspring, OffspringLaw) else float(offspring)


def m0_of_t(offspring, omega: float, t: float) -> float:
    """Mean of ``sum_l exp(t * tau_l)`` over the jump children of one particle.

    ``offspring`` may be an :class:`OffspringLaw` or the mean ``m`` itself.
    """
    m = _mean(offspring)
    x = m * omega * math.exp(t)
    if x >= 1.0:
        raise ValueError(f"m*omega*e^t = {x!r} >= 1: the jump series diverges")
    return m * (1.0 - omega) * math.exp(t) / (1.0 - x)


@dataclass(frozen=True)
class RateContext:
    offspring: OffspringLaw
    env: EnvironmentLaw

    def __post_init__(self):
        regime = classify(self.env, self.offspring)
        if regime.kind is not RegimeKind.SUBCRITICAL:
            raise RegimeError(f"velocity formulas need a subcritical regime, got {regime.kind.value}")

    @property
    def m(self) -> float:
        return self.offspring.mean

    @property
    def t_max(self) -> float:
        return math.log(1.0 / (self.m * omega_max(self.env)))

    def _check(self, t: float) -> None:
        if not t < self.t_max:
            raise ValueError(f"t={t!r} outside the finite domain t < {self.t_max!r}")


def lambda_(ctx: RateContext, t: float) -> float:
    ctx._check(t)
    return expectation(ctx.env, lambda w: math.log(m0_of_t(ctx.m, w, t)))


def lambda_prime(ctx: RateContext, t: float) -> float:
    ctx._check(t)
    et = math.exp(t)
    return expectation(ctx.env, lambda w: 1.0 / (1.0 - ctx.m * w * et))


def lambda_second(ctx: RateContext, t: float) -> float:
    ctx._check(t)
    et = math.exp(t)
    return expectation(ctx.env, lambda w: ctx.m * w * et / (1.0 - ctx.m * w * et) ** 2)


def rho(ctx: RateContext, t: float) -> float:
    return t * lambda_prime(ctx, t) - lambda_(ctx, t)


def solve_t_plus(ctx: RateContext, tol: float = DEFAULT_TOL) -> float:
    """Root of ``rho`` in ``(0, t_max)`` by bisection.

    ``rho(0) = -Lambda(0) < 0`` and ``rho`` blows up at ``t_max`` because the
    largest atom makes ``Lambda'`` diverge there, so a positive right end is
    found by stepping toward ``t_max`` geometrically.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    t_max = ctx.t_max
    lo = 0.0
    if not rho(ctx, lo) < 0:
        raise RuntimeError("rho(0) is not negative; Lambda(0) must be positive")
    hi = None
    for k in range(1, 64):
        cand = t_max * (1.0 - 2.0 ** -k)
        if rho(ctx, cand) > 0:
            hi = cand
            break
        lo = cand
    if hi is None:
        raise RuntimeError("rho never changed sign below t_max")
    for _ in range(MAX_BISECTIONS):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if rho(ctx, mid) <= 0:
            lo = mid
        else:
            hi = mid
    t_plus = 0.5 * (lo + hi)
    assert 0.0 < t_plus < t_max
    return t_plus


def rwre_speed(env: EnvironmentLaw) -> float:
    """Speed ``1 / E[1/(1 - omega)]`` of a single walker in the same environment."""
    return 1.0 / expectation(env, lambda w: 1.0 / (1.0 - w))


def biggins_mu(a: float, m: float, p: float) -> float:
    """``inf_{theta >= 0} e^{theta a} (m p + m (1 - p) e^{-theta})`` in closed form."""
    if a >= 1.0 - p:
        return m
    if a <= 0.0:
        return m * p
    return m * p / (1.0 - a) * ((1.0 - p) * (1.0 - a) / (p * a)) ** a


def _log_mu(a: float, m: float, p: float) -> float:
    if a <= 0.0:
        return math.log(m * p)
    return math.log(m * p) - math.log1p(-a) + a * (math.log((1.0 - p) * (1.0 - a)) - math.log(p * a))


def biggins_gamma(m: float, p: float, tol: float = 1e-15) -> float:
    """Classical minimal-position speed ``inf{a > 0 : mu(a) >= 1}`` for constant ``omega = p``.

    ``log mu`` is increasing on ``(0, 1 - p)`` from ``log(m p) < 0`` to ``log m > 0``.
    """
    if not (m > 1.0 and 0.0 < p and m * p < 1.0):
        raise ValueError(f"need m > 1, p > 0 and m*p < 1 (got m={m!r}, p={p!r})")
    lo, hi = 0.0, 1.0 - p
    for _ in range(MAX_BISECTIONS):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if _log_mu(mid, m, p) >= 0.0:
            hi = mid
        else:
            lo = mid
    return hi


class HLConditions(NamedTuple):
    """Hypotheses needed for the time-environment limit theorem."""

    log_mean_positive_finite: bool
    zero_interior: bool
    first_jump_integrable: bool
    llogl_moment: bool

    def all(self) -> bool:
        return all(self)


def check_hl_conditions(ctx: RateContext) -> HLConditions:
    e_log = expectation(ctx.env, lambda w: math.log(ctx.m * (1.0 - w) / (1.0 - ctx.m * w)))
    subcritical = classify(ctx.env, ctx.offspring).kind is RegimeKind.SUBCRITICAL
    return HLConditions(
        0.0 < e_log < math.inf,
        ctx.t_max > 0.0,
        # a subcritical stayer process has integrable extinction time
        subcritical,
        # finite support gives a finite second moment, which implies the L log L condition
        math.isfinite(ctx.offspring.second_moment),
    )


@dataclass(frozen=True)
class VelocityReport:
    regime: Regime
    t_plus: float
    gamma: float
    lambda_prime_at_t_plus: float
    rwre_speed: float
    biggins_gamma: float | None
    conditions: HLConditions

    def as_dict(self) -> dict:
        c = self.conditions
        return {
            "regime": self.regime.kind.value,
            "t_plus": self.t_plus,
            "gamma": self.gamma,
            "lambda_prime": self.lambda_prime_at_t_plus,
            "rwre_speed": self.rwre_speed,
            "biggins_gamma": self.biggins_gamma,
            "cond1": c[0],
            "cond2": c[1],
            "cond3": c[2],
            "cond4": c[3],
        }


def gamma(ctx: RateContext, tol: float = DEFAULT_TOL) -> VelocityReport:
    t_plus = solve_t_plus(ctx, tol)
    lp = lambda_prime(ctx, t_plus)
    big = biggins_gamma(ctx.m, ctx.env.support[0]) if ctx.env.is_constant else None
    return VelocityReport(
        regime=classify(ctx.env, ctx.offspring),
        t_plus=t_plus,
        gamma=1.0 / lp,
        lambda_prime_at_t_plus=lp,
        rwre_speed=rwre_speed(ctx.env),
        biggins_gamma=big,
        conditions=check_hl_conditions(ctx),
    )


def velocity(offspring: OffspringLaw, env: EnvironmentLaw) -> VelocityReport:
    return gamma(RateContext(offspring, env))
