"""Location-to-time transformation of the branching random walk.

Particles that jump from site ``j - 1`` to site ``j`` form generation ``j``
of a new branching random walk whose "positions" are the original jump
generations.  ``Y_j`` counts them and ``L_j`` is the latest such jump; the
minimal position of the original walk is recovered from the ``L_j`` as
``M_n = max{j : L_j <= n}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from brwre import kernels
from brwre.offspring import CENSORED, OffspringLaw, SiteGWLaw, sample_extinction_times
from brwre.simulate import CapExceeded, Genealogy, MinTrajectory, _check_env

# a stayer tree at a subcritical site outliving this many generations is a bug, not a sample
_SUBCRITICAL_CAP = 10**7


class MalformedGenealogy(ValueError):
    pass


@dataclass
class TransformedProcess:
    """Jump lists per site ``j >= 1``: particle ids and jump generations, sorted by (generation, id).

    ``family_sizes[j]`` (direct simulation only) holds ``Y(nu)`` for every
    particle ``nu`` of generation ``j - 1``, in id order.
    """

    jumps: dict[int, tuple[np.ndarray, np.ndarray]]
    horizon: int | None = None
    family_sizes: dict[int, np.ndarray] = field(default_factory=dict)
    displacements: dict[int, np.ndarray] = field(default_factory=dict)

    @classmethod
    def from_generations(cls, jump_gens: dict[int, list[int]], horizon: int | None = None):
        """Hand-built process; ids are assigned in list order."""
        jumps, nxt = {}, 1
        for j in sorted(jump_gens):
            gens = np.asarray(sorted(jump_gens[j]), dtype=np.int64)
            jumps[j] = (np.arange(nxt, nxt + len(gens), dtype=np.int64), gens)
            nxt += len(gens)
        return cls(jumps, horizon)

    @property
    def n_sites(self) -> int:
        return max((j for j, (ids, _) in self.jumps.items() if len(ids)), default=0)

    def Y(self, j: int) -> int:
        return len(self.jumps[j][0]) if j in self.jumps else 0

    def tau(self, j: int) -> np.ndarray:
        return self.jumps[j][1] if j in self.jumps else np.empty(0, dtype=np.int64)

    def L(self, j: int) -> int | None:
        """Latest jump generation into ``j`` (``0`` for the root site, ``None`` if no jump seen)."""
        if j == 0:
            return 0
        t = self.tau(j)
        return int(t[-1]) if len(t) else None

    def tau_first(self, j: int) -> int | None:
        t = self.tau(j)
        return int(t[0]) if len(t) else None

    def rows(self):
        """``(site, Y, L, tau_first, tau_last)`` for every site with at least one jump."""
        for j in range(1, self.n_sites + 1):
            t = self.tau(j)
            if len(t):
                yield j, len(t), int(t[-1]), int(t[0]), int(t[-1])


def extract(genealogy: Genealogy) -> TransformedProcess:
    par = genealogy.parent[1:]
    child = np.arange(1, len(genealogy), dtype=np.int64)
    if len(child) and (par.min() < 0 or np.any(par >= child)):
        raise MalformedGenealogy("parent ids must precede their children")
    disp = genealogy.position[child] - genealogy.position[par]
    if np.any((disp != 0) & (disp != 1)):
        bad = int(child[(disp != 0) & (disp != 1)][0])
        raise MalformedGenealogy(f"particle {bad} moved by {int(disp[child == bad][0])}, not 0 or 1")
    if np.any(genealogy.generation[child] != genealogy.generation[par] + 1):
        raise MalformedGenealogy("child generation must be parent generation + 1")
    jumpers = child[disp == 1]
    sites = genealogy.position[jumpers]
    gens = genealogy.generation[jumpers]
    order = np.lexsort((jumpers, gens, sites))
    jumpers, sites, gens = jumpers[order], sites[order], gens[order]
    jumps = {}
    if len(sites):
        cuts = np.flatnonzero(np.diff(sites)) + 1
        for ids, g in zip(np.split(jumpers, cuts), np.split(gens, cuts)):
            jumps[int(genealogy.position[ids[0]])] = (ids, g)
    return TransformedProcess(jumps, genealogy.horizon)


def recount_Y(genealogy: Genealogy) -> dict[int, int]:
    """Brute-force ``Y_j``: scan every (parent, child) pair."""
    out: dict[int, int] = {}
    for i in range(1, len(genealogy)):
        p = int(genealogy.parent[i])
        if genealogy.position[i] == genealogy.position[p] + 1:
            j = int(genealogy.position[i])
            out[j] = out.get(j, 0) + 1
    return out


def spawn_jump_children(offspring: OffspringLaw, omega: float, rng: np.random.Generator,
                        size: int):
    """Jump children of ``size`` independent particles at a site with stay probability ``omega``.

    Returns ``(parent_idx, displacement)`` arrays, one entry per child,
    grouped generation-major; the displacement is the within-site generation
    at which the child jumped.
    """
    if offspring.mean * omega >= 1.0:
        raise ValueError(f"m*omega = {offspring.mean * omega!r} >= 1: jump count is not a.s. finite")
    times, roots, gens, counts = kernels.stayer_gw(
        offspring.as_array(), float(omega), int(size), _SUBCRITICAL_CAP,
        kernels.DEFAULT_SURVIVAL_BOUND, rng, True,
    )
    if np.any(times == CENSORED):
        raise RuntimeError("subcritical stayer process failed to die out")
    return np.repeat(roots, counts), np.repeat(gens, counts)


def sample_first_generation(offspring: OffspringLaw, omega: float, rng: np.random.Generator,
                            size: int):
    """``(Y, max tau)`` for ``size`` independent roots of the time-indexed walk."""
    parent, disp = spawn_jump_children(offspring, omega, rng, size)
    y = np.bincount(parent, minlength=size)
    last = np.zeros(size, dtype=np.int64)
    np.maximum.at(last, parent, disp)
    return y, last


def simulate_time_brw(offspring: OffspringLaw, env, rng: np.random.Generator, n_sites: int,
                      population_cap: int = 10**6) -> TransformedProcess:
    """Build the time-indexed walk directly, site by site.

    Every generation-``j`` particle runs its own stayer process under
    ``omega_j``; a child jumping out at within-site generation ``g`` lands at
    position (parent position + ``g``).
    """
    if n_sites < 1:
        raise ValueError("n_sites must be >= 1")
    omegas = _check_env(env, n_sites - 1)
    positions = np.zeros(1, dtype=np.int64)
    next_id = 1
    jumps, families, disps = {}, {}, {}
    for j in range(n_sites):
        parent, disp = spawn_jump_children(offspring, omegas[j], rng, len(positions))
        if len(parent) > population_cap:
            raise CapExceeded(j + 1, len(parent), population_cap)
        child_pos = positions[parent] + disp
        ids = np.arange(next_id, next_id + len(parent), dtype=np.int64)
        next_id += len(parent)
        order = np.lexsort((ids, child_pos))
        jumps[j + 1] = (ids[order], child_pos[order])
        families[j + 1] = np.bincount(parent, minlength=len(positions))
        disps[j + 1] = disp[order]
        positions = child_pos[order]
    return TransformedProcess(jumps, None, families, disps)


def k_n(tp: TransformedProcess, n: int) -> int:
    """Largest ``j`` with ``L_1, ..., L_j <= n``; unseen sites count as ``L = +inf``."""
    j = 0
    while True:
        nxt = tp.L(j + 1)
        if nxt is None or nxt > n:
            return j
        j += 1


class KnCheck(NamedTuple):
    n: int
    k_n: int
    M_n: int
    verdict: str  # "pass", "fail" or "censored"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def k_n_relation(tp: TransformedProcess, minimal: MinTrajectory, n: int) -> KnCheck:
    """Check ``k_n = M_n``.

    The comparison needs ``L_{M_n + 1}`` to be final, i.e. site ``M_n`` empty
    by the horizon; otherwise the verdict is ``"censored"``.
    """
    horizon = minimal.horizon
    if not 0 <= n <= horizon:
        raise IndexError(f"n={n} outside 0..{horizon}")
    m_n = int(minimal[n])
    k = k_n(tp, n)
    if n >= horizon or minimal[horizon] <= m_n:
        return KnCheck(n, k, m_n, "censored")
    return KnCheck(n, k, m_n, "pass" if k == m_n else "fail")


class LowerBound(NamedTuple):
    total: int
    n_sites: int
    censored: int
    times: np.ndarray

    @property
    def per_site(self) -> float:
        return self.total / self.n_sites


def lower_bound_sum_T(offspring: OffspringLaw, env, rng: np.random.Generator, n_sites: int,
                      horizon_cap: int = 10**6) -> LowerBound:
    """Sum of independent stayer extinction times ``T_0 + ... + T_{n-1}``.

    Censored times enter at ``horizon_cap``, so the sum stays a lower bound.
    Sites sharing an ``omega`` value are sampled in one batch, in increasing
    ``omega`` order.
    """
    if n_sites < 1:
        raise ValueError("n_sites must be >= 1")
    omegas = _check_env(env, n_sites - 1)[:n_sites]
    times = np.empty(n_sites, dtype=np.int64)
    for w in np.unique(omegas):
        idx = np.flatnonzero(omegas == w)
        times[idx] = sample_extinction_times(SiteGWLaw(offspring, float(w)), rng, len(idx), horizon_cap)
    censored = times == CENSORED
    times[censored] = horizon_cap
    return LowerBound(int(times.sum()), n_sites, int(censored.sum()), times)
