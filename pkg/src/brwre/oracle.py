"""Brute-force ground truth for small instances, independent of the simulators."""
from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass

from brwre.offspring import OffspringLaw, pgf

NODE_BUDGET = 10**7
MAX_ENUMERATION_DEPTH = 3


class EnumerationTooLarge(RuntimeError):
    pass


@dataclass(frozen=True)
class ExactDistribution:
    probs: dict[int, float]

    def __post_init__(self):
        total = sum(self.probs.values())
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"probabilities sum to {total!r}")

    def __getitem__(self, k: int) -> float:
        return self.probs.get(k, 0.0)

    @property
    def support(self) -> list[int]:
        return sorted(k for k, p in self.probs.items() if p > 0)


def _particle_outcomes(offspring: OffspringLaw, site: int, omega: float):
    """Every (children positions, probability) for one particle: each child's stay/move listed separately."""
    out = []
    for k, pk in enumerate(offspring.probs):
        if pk == 0.0:
            continue
        for moves in itertools.product((0, 1), repeat=k):
            prob = pk
            for mv in moves:
                prob *= (1.0 - omega) if mv else omega
            out.append((tuple(site + mv for mv in moves), prob))
    return out


def enumerate_minimal_distribution(offspring: OffspringLaw, env_prefix, n: int,
                                   node_budget: int = NODE_BUDGET) -> ExactDistribution:
    """Exact law of ``M_n`` by summing over every branching and movement outcome.

    ``env_prefix`` must cover sites ``0..n-1`` (the only sites a particle
    can occupy before step ``n``).
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if n > MAX_ENUMERATION_DEPTH:
        raise EnumerationTooLarge(f"enumeration limited to n <= {MAX_ENUMERATION_DEPTH}")
    if n and len(env_prefix) < n:
        raise ValueError(f"environment prefix must cover sites 0..{n - 1}")
    states: dict[tuple[int, ...], float] = {(0,): 1.0}
    nodes = 0
    cache: dict[int, list] = {}
    for _ in range(n):
        nxt: dict[tuple[int, ...], float] = defaultdict(float)
        for state, p_state in states.items():
            per_particle = []
            for site in state:
                if site not in cache:
                    cache[site] = _particle_outcomes(offspring, site, float(env_prefix[site]))
                per_particle.append(cache[site])
            for combo in itertools.product(*per_particle):
                nodes += 1
                if nodes > node_budget:
                    raise EnumerationTooLarge(f"more than {node_budget} outcomes")
                prob = p_state
                children = []
                for pos, p in combo:
                    prob *= p
                    children.extend(pos)
                nxt[tuple(sorted(children))] += prob
        states = nxt
    law: dict[int, float] = defaultdict(float)
    for state, p in states.items():
        law[min(state)] += p
    return ExactDistribution(dict(law))


def y_pgf_fixed_point(offspring: OffspringLaw, omega: float, s: float, tol: float = 1e-15,
                      max_iter: int = 1_000_000) -> float:
    """Generating function of the jump-children count ``Y`` at ``s``.

    Iterates ``f <- phi((1 - omega) s + omega f)`` upward from ``f = 0``; the
    monotone limit is the smallest fixed point, which is the pgf.
    """
    if offspring.mean * omega >= 1.0:
        raise ValueError(f"m*omega = {offspring.mean * omega!r} >= 1")
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s={s!r} outside [0, 1]")
    f = 0.0
    for _ in range(max_iter):
        nxt = pgf(offspring, (1.0 - omega) * s + omega * f)
        if abs(nxt - f) <= tol:
            return nxt
        f = nxt
    raise RuntimeError("fixed-point iteration did not converge")


def mean_Y(m: float, omega: float) -> float:
    if m * omega >= 1.0:
        raise ValueError(f"m*omega = {m * omega!r} >= 1")
    return m * (1.0 - omega) / (1.0 - m * omega)
