"""Finite-support environment laws and the supercritical/critical/subcritical split."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from brwre.offspring import LawError, OffspringLaw

PROB_TOL = 1e-12
CRITICAL_TOL = 1e-12


@dataclass(frozen=True)
class EnvironmentLaw:
    """Law of a single stay probability ``omega_0``: finitely many atoms in ``(delta, 1 - delta)``."""

    support: tuple[float, ...]
    weights: tuple[float, ...]
    delta: float = 1e-6

    def __post_init__(self):
        support = tuple(float(x) for x in self.support)
        weights = tuple(float(w) for w in self.weights)
        if not support:
            raise LawError("environment support is empty")
        if len(support) != len(weights):
            raise LawError("environment support and weights differ in length")
        if not self.delta > 0:
            raise LawError("delta must be > 0")
        if any(b <= a for a, b in zip(support, support[1:])):
            raise LawError("environment support must be strictly increasing")
        if any(not (self.delta < x < 1.0 - self.delta) for x in support):
            raise LawError(f"environment support must lie in (delta, 1 - delta) with delta={self.delta}")
        if any(not w > 0 for w in weights):
            raise LawError("environment weights must be positive")
        if abs(sum(weights) - 1.0) > PROB_TOL:
            raise LawError(f"environment weights sum to {sum(weights)!r}, not 1")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def constant(cls, omega: float, delta: float = 1e-6) -> "EnvironmentLaw":
        return cls((omega,), (1.0,), delta)

    @classmethod
    def from_pairs(cls, support: Sequence[float], weights: Sequence[float] | None = None,
                   delta: float = 1e-6) -> "EnvironmentLaw":
        """Accept support points in any order; equal weights when none are given."""
        if weights is None:
            weights = [1.0 / len(support)] * len(support)
        pairs = sorted(zip(support, weights))
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs), delta)

    @property
    def is_constant(self) -> bool:
        return len(self.support) == 1


@dataclass(frozen=True)
class EnvironmentRealization:
    """A sampled environment ``omega_0, omega_1, ...`` with the seed it came from."""

    omegas: np.ndarray
    seed: int | None = None

    def __len__(self) -> int:
        return len(self.omegas)

    def __getitem__(self, i):
        return self.omegas[i]

    @classmethod
    def constant(cls, omega: float, length: int) -> "EnvironmentRealization":
        return cls(np.full(length, float(omega)))


class RegimeKind(enum.Enum):
    SUPERCRITICAL = "Supercritical"
    CRITICAL = "Critical"
    SUBCRITICAL = "Subcritical"


@dataclass(frozen=True)
class Regime:
    kind: RegimeKind
    mass_at_one_over_m: bool
    omega_max: float
    one_over_m: float


def omega_max(law: EnvironmentLaw) -> float:
    return max(law.support)


def classify(law: EnvironmentLaw, offspring: OffspringLaw) -> Regime:
    """Compare ``omega_max`` with ``1/m``; equality is judged at 1e-12."""
    w_max = omega_max(law)
    inv_m = 1.0 / offspring.mean
    if abs(w_max - inv_m) <= CRITICAL_TOL:
        kind = RegimeKind.CRITICAL
    elif w_max > inv_m:
        kind = RegimeKind.SUPERCRITICAL
    else:
        kind = RegimeKind.SUBCRITICAL
    atom = any(abs(x - inv_m) <= CRITICAL_TOL for x in law.support)
    return Regime(kind, atom, w_max, inv_m)


def sample_environment(law: EnvironmentLaw, length: int, rng: np.random.Generator,
                       seed: int | None = None) -> EnvironmentRealization:
    if length < 1:
        raise ValueError("environment length must be >= 1")
    support = np.asarray(law.support)
    if law.is_constant:
        return EnvironmentRealization(np.full(length, support[0]), seed)
    idx = rng.choice(len(support), size=length, p=np.asarray(law.weights))
    return EnvironmentRealization(support[idx], seed)


def expectation(law: EnvironmentLaw, f: Callable[[float], float]) -> float:
    """Exact ``E f(omega_0)`` as a weighted sum over the atoms."""
    total = 0.0
    for x, w in zip(law.support, law.weights):
        v = f(x)
        if not math.isfinite(v):
            raise ValueError(f"function is not finite at support point {x!r}")
        total += w * v
    return total
