"""Forward simulation of the branching random walk in a site environment.

Every particle at site ``i`` reproduces according to the offspring law and
each child independently stays at ``i`` with probability ``omega_i`` or
steps to ``i + 1``.  Two engines:

* :func:`simulate_tree` keeps the full genealogy (needed by the Bramson
  transform) and is limited by ``population_cap``;
* :func:`simulate_counts` evolves per-site occupation numbers, switching
  large sites to a deterministic log-mass flow so horizons in the thousands
  are reachable.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from brwre import kernels
from brwre.environment import EnvironmentRealization
from brwre.offspring import OffspringLaw

ROOT = -1
DEFAULT_THRESHOLD = 2**20


class CapExceeded(RuntimeError):
    """Tree mode population grew beyond the cap; switch to count mode."""

    def __init__(self, generation: int, size: int, cap: int):
        super().__init__(f"generation {generation} has {size} particles, above the cap {cap}")
        self.generation = generation
        self.size = size
        self.cap = cap


class HorizonError(IndexError):
    """Step requested beyond what was simulated."""


@dataclass(frozen=True)
class ParticleRecord:
    id: int
    parent: int
    generation: int
    position: int


@dataclass
class Genealogy:
    """All particles up to ``horizon``, stored column-wise in generation order.

    Particle ids are row indices.  Generation ``n`` occupies rows
    ``offsets[n]:offsets[n + 1]``.
    """

    parent: np.ndarray
    generation: np.ndarray
    position: np.ndarray
    offsets: np.ndarray
    omegas: np.ndarray
    seed: int | None = None

    @property
    def horizon(self) -> int:
        return len(self.offsets) - 2

    def __len__(self) -> int:
        return len(self.parent)

    def record(self, i: int) -> ParticleRecord:
        return ParticleRecord(int(i), int(self.parent[i]), int(self.generation[i]), int(self.position[i]))

    def records(self) -> Iterable[ParticleRecord]:
        for i in range(len(self)):
            yield self.record(i)

    def positions_at(self, n: int) -> np.ndarray:
        if not 0 <= n <= self.horizon:
            raise HorizonError(f"generation {n} outside 0..{self.horizon}")
        return self.position[self.offsets[n]:self.offsets[n + 1]]

    def generation_sizes(self) -> np.ndarray:
        return np.diff(self.offsets)

    def site_counts(self, n: int) -> dict[int, int]:
        sites, counts = np.unique(self.positions_at(n), return_counts=True)
        return {int(j): int(c) for j, c in zip(sites, counts)}

    def minimal_trajectory(self) -> "MinTrajectory":
        return MinTrajectory(np.array([self.positions_at(n).min() for n in range(self.horizon + 1)]))

    def tobytes(self) -> bytes:
        return b"".join(a.tobytes() for a in (self.parent, self.generation, self.position, self.offsets))


@dataclass
class MinTrajectory:
    """``M_0, ..., M_n``: nondecreasing, starts at 0, ``M_k <= k``."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int64)

    def __getitem__(self, n):
        return self.values[n]

    def __len__(self) -> int:
        return len(self.values)

    @property
    def horizon(self) -> int:
        return len(self.values) - 1


def _check_env(env, n_steps: int) -> np.ndarray:
    omegas = np.asarray(env.omegas if isinstance(env, EnvironmentRealization) else env, dtype=np.float64)
    if len(omegas) < n_steps + 1:
        raise ValueError(f"environment has {len(omegas)} sites; need at least n_steps + 1 = {n_steps + 1}")
    return omegas


def simulate_tree(
    offspring: OffspringLaw,
    env,
    rng: np.random.Generator,
    n_steps: int,
    population_cap: int = 10**6,
    stop_when_cleared: int | None = None,
) -> Genealogy:
    """Exact genealogy for ``n_steps`` generations.

    Per generation, offspring counts are drawn for all particles first and
    the stay/move uniforms for all children second; the uniforms therefore
    do not depend on ``omega`` (common-random-number coupling across
    environments).  ``stop_when_cleared=j`` ends the run early at the first
    generation with no particle at a site ``<= j``.
    """
    if population_cap < 1:
        raise ValueError("population_cap must be >= 1")
    omegas = _check_env(env, n_steps)
    probs = offspring.as_array()
    parents = [np.array([ROOT], dtype=np.int64)]
    positions = [np.zeros(1, dtype=np.int64)]
    offsets = [0, 1]
    for g in range(1, n_steps + 1):
        pos = positions[-1]
        k = rng.choice(len(probs), size=len(pos), p=probs)
        total = int(k.sum())
        if total > population_cap:
            raise CapExceeded(g, total, population_cap)
        local_parent = np.repeat(np.arange(len(pos), dtype=np.int64), k)
        ppos = pos[local_parent]
        move = rng.random(total) >= omegas[ppos]
        parents.append(local_parent + offsets[-2])
        positions.append(ppos + move)
        offsets.append(offsets[-1] + total)
        if stop_when_cleared is not None and positions[-1].min() > stop_when_cleared:
            break
    offs = np.asarray(offsets, dtype=np.int64)
    gen = np.repeat(np.arange(len(offs) - 1, dtype=np.int64), np.diff(offs))
    return Genealogy(
        parent=np.concatenate(parents),
        generation=gen,
        position=np.concatenate(positions),
        offsets=offs,
        omegas=omegas,
    )


@dataclass(frozen=True)
class Exact:
    count: int


@dataclass(frozen=True)
class Saturated:
    log_mass: float

    @property
    def mass(self) -> float:
        return float(np.exp(self.log_mass))


Count = Union[Exact, Saturated]


@dataclass
class SiteCountsState:
    """Occupation numbers at one step, for sites ``offset .. offset + len - 1``."""

    step: int
    offset: int
    exact: np.ndarray
    saturated: np.ndarray
    log_mass: np.ndarray
    threshold: int

    @property
    def min_site(self) -> int:
        return self.offset

    def counts(self) -> dict[int, Count]:
        out: dict[int, Count] = {}
        for i, (c, s, lm) in enumerate(zip(self.exact, self.saturated, self.log_mass)):
            if s:
                out[self.offset + i] = Saturated(float(lm))
            elif c > 0:
                out[self.offset + i] = Exact(int(c))
        return out

    @property
    def all_exact(self) -> bool:
        return not self.saturated.any()

    def total_exact(self) -> int:
        if not self.all_exact:
            raise ValueError("state holds saturated sites")
        return int(self.exact.sum())


@dataclass
class CountsRun:
    states: list[SiteCountsState]
    trajectory: MinTrajectory
    diagnostics: dict = field(default_factory=dict)


def simulate_counts(
    offspring: OffspringLaw,
    env,
    rng: np.random.Generator,
    n_steps: int,
    threshold: int = DEFAULT_THRESHOLD,
    record_steps: Sequence[int] = (),
    prune: bool = True,
) -> CountsRun:
    """Site-count evolution with exact small counts and log-mass large ones.

    A site holding ``c < threshold`` particles draws the total children of
    ``c`` parents exactly (multinomial over offspring sizes), then the
    stayers as ``Binomial(total, omega_j)``.  A saturated site with log-mass
    ``l`` sends ``l + log(m omega_j)`` to itself and ``l + log(m (1 - omega_j))``
    to ``j + 1``.  Contributions meeting at a site are combined by
    log-sum-exp; merged mass below ``threshold / 2`` is rounded back to an
    exact count.  Site ``j`` draws only from its own generator, spawned from
    ``rng``.

    With ``prune`` set, sites to the right of a saturated site that cannot
    drop below ``threshold / 2`` before ``n_steps`` are discarded: they can
    never hold the minimum.
    """
    if threshold < 2:
        raise ValueError("threshold must be >= 2")
    omegas = _check_env(env, n_steps)[: n_steps + 1]
    m = offspring.mean
    with np.errstate(divide="ignore"):
        log_stay = np.log(m * omegas)
        log_move = np.log(m * (1.0 - omegas))
    site_rngs = rng.spawn(n_steps + 1)
    minima, snaps, diag = kernels.run_counts(
        offspring.as_array(), omegas, log_stay, log_move, int(n_steps), int(threshold),
        site_rngs, sorted(set(int(s) for s in record_steps)), bool(prune),
    )
    states = [
        SiteCountsState(step, lo, ex, s.astype(bool), lm, threshold)
        for step, lo, ex, s, lm in snaps
    ]
    return CountsRun(states, MinTrajectory(minima), diag)


def minimal_position(source, n: int) -> int:
    """Smallest occupied site at step ``n`` of a genealogy, trajectory, counts run or state."""
    if isinstance(source, Genealogy):
        return int(source.positions_at(n).min())
    if isinstance(source, CountsRun):
        source = source.trajectory
    if isinstance(source, SiteCountsState):
        if n != source.step:
            raise HorizonError(f"state is at step {source.step}, not {n}")
        return source.min_site
    if isinstance(source, MinTrajectory):
        if not 0 <= n <= source.horizon:
            raise HorizonError(f"step {n} outside 0..{source.horizon}")
        return int(source[n])
    raise TypeError(f"cannot read a minimal position from {type(source).__name__}")
