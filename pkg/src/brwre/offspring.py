"""Offspring laws, their generating functions, and within-site stayer processes.

A particle sitting at a site with stay probability ``omega`` founds a
Galton-Watson process of the descendants that never leave the site.  Its
one-generation generating function is ``h(s) = phi(omega * s + 1 - omega)``
where ``phi`` is the offspring pgf; its extinction time ``T`` is the first
generation with no stayers left.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from brwre import kernels

PROB_TOL = 1e-12

#: Marker stored in integer arrays of extinction times for runs still alive at the cap.
CENSORED = -1


class LawError(ValueError):
    """A distribution violates one of its defining invariants."""


@dataclass(frozen=True)
class OffspringLaw:
    """Finite-support reproduction law ``(p_0, ..., p_K)`` with ``p_0 = 0`` and ``p_1 < 1``."""

    probs: tuple[float, ...]
    mean: float = field(init=False)
    second_moment: float = field(init=False)

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        if len(probs) < 2:
            raise LawError("offspring law needs support beyond k=0")
        if any(not np.isfinite(p) or p < 0 for p in probs):
            raise LawError("offspring probabilities must be finite and nonnegative")
        if abs(sum(probs) - 1.0) > PROB_TOL:
            raise LawError(f"offspring probabilities sum to {sum(probs)!r}, not 1")
        if probs[0] != 0.0:
            raise LawError("p_0 must be 0 (no extinction)")
        if probs[1] >= 1.0:
            raise LawError("p_1 must be < 1 (nondegenerate branching)")
        ks = np.arange(len(probs))
        p = np.asarray(probs)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "mean", float(ks @ p))
        object.__setattr__(self, "second_moment", float((ks * ks) @ p))

    @classmethod
    def from_pairs(cls, pairs: Sequence[Sequence[float]]) -> "OffspringLaw":
        """Build from ``(k, p_k)`` pairs, the serialized config form."""
        pairs = [(int(k), float(p)) for k, p in pairs]
        if not pairs:
            raise LawError("offspring law is empty")
        if any(k < 0 for k, _ in pairs):
            raise LawError("offspring counts must be nonnegative")
        if len({k for k, _ in pairs}) != len(pairs):
            raise LawError("duplicate offspring count in (k, p_k) pairs")
        probs = [0.0] * (max(k for k, _ in pairs) + 1)
        for k, p in pairs:
            probs[k] = p
        return cls(tuple(probs))

    @classmethod
    def binary(cls) -> "OffspringLaw":
        return cls((0.0, 0.0, 1.0))

    def to_pairs(self) -> list[list[float]]:
        return [[k, p] for k, p in enumerate(self.probs) if p > 0]

    @property
    def max_offspring(self) -> int:
        return len(self.probs) - 1

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=np.float64)

    def pgf(self, s: float) -> float:
        return pgf(self, s)

    def sample(self, rng: np.random.Generator, size: int | None = None):
        """Draw offspring counts; ``size=None`` returns a Python int."""
        k = rng.choice(len(self.probs), size=size, p=self.as_array())
        return int(k) if size is None else k.astype(np.int64)


def pgf(law: OffspringLaw, s: float) -> float:
    """Evaluate ``sum_k p_k s**k`` for ``s`` in ``[0, 1]``."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"pgf argument {s!r} outside [0, 1]")
    # Horner, highest degree first
    acc = 0.0
    for p in reversed(law.probs):
        acc = acc * s + p
    return acc


def sample_offspring(law: OffspringLaw, rng: np.random.Generator) -> int:
    return law.sample(rng)


@dataclass(frozen=True)
class SiteGWLaw:
    """Stayer Galton-Watson process at a site with stay probability ``stay_prob``."""

    base: OffspringLaw
    stay_prob: float

    def __post_init__(self):
        if not 0.0 < self.stay_prob < 1.0:
            raise LawError(f"stay probability {self.stay_prob!r} outside (0, 1)")

    @property
    def mean(self) -> float:
        return self.base.mean * self.stay_prob

    def pgf(self, s: float) -> float:
        w = self.stay_prob
        return pgf(self.base, w * s + 1.0 - w)


@dataclass(frozen=True)
class Censored:
    """Extinction not observed before ``horizon`` generations."""

    horizon: int


def _check_cap(horizon_cap: int) -> None:
    if horizon_cap < 1:
        raise ValueError("horizon_cap must be >= 1")


def sample_extinction_times(
    site: SiteGWLaw,
    rng: np.random.Generator,
    size: int,
    horizon_cap: int,
    survival_bound: int = kernels.DEFAULT_SURVIVAL_BOUND,
) -> np.ndarray:
    """Extinction times of ``size`` independent stayer processes, one ancestor each.

    Entries equal to :data:`CENSORED` are runs still alive after ``horizon_cap``
    generations, or whose population passed ``survival_bound`` (treated as
    surviving; only reachable when ``m * omega > 1``).
    """
    _check_cap(horizon_cap)
    times, *_ = kernels.stayer_gw(
        site.base.as_array(), site.stay_prob, int(size), int(horizon_cap),
        int(survival_bound), rng, False,
    )
    return times


def sample_extinction_time(site: SiteGWLaw, rng: np.random.Generator, horizon_cap: int):
    """One extinction time ``T >= 1``, or :class:`Censored` past the cap."""
    t = int(sample_extinction_times(site, rng, 1, horizon_cap)[0])
    return Censored(horizon_cap) if t == CENSORED else t


def extinction_cdf(site: SiteGWLaw, k: int) -> float:
    """Exact ``P(T <= k)`` by iterating ``q_i = h(q_{i-1})`` from ``q_0 = 0``."""
    if k < 0:
        raise ValueError("k must be >= 0")
    q = 0.0
    for _ in range(k):
        q = site.pgf(q)
    return q


def extinction_cdf_table(site: SiteGWLaw, k_max: int) -> np.ndarray:
    """``[P(T <= 0), ..., P(T <= k_max)]``."""
    out = np.empty(k_max + 1)
    q = 0.0
    out[0] = q
    for i in range(1, k_max + 1):
        q = site.pgf(q)
        out[i] = q
    return out


def mean_extinction_time(site: SiteGWLaw, tol: float = 1e-13, max_terms: int = 10_000_000) -> float:
    """``E T = sum_k P(T > k)`` for a subcritical stayer process."""
    if site.mean >= 1.0:
        return float("inf")
    total, q, k = 0.0, 0.0, 0
    while k < max_terms:
        tail = 1.0 - q
        total += tail
        if tail < tol:
            break
        q = site.pgf(q)
        k += 1
    return total
