"""Replica orchestration, convergence summaries and simulator-vs-oracle checks."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats

from brwre.bramson import sample_first_generation
from brwre.config import ExperimentConfig, environment_seed_sequence, replica_seed_sequence
from brwre.environment import EnvironmentRealization, Regime, RegimeKind, classify, sample_environment
from brwre.offspring import SiteGWLaw, extinction_cdf, sample_extinction_times
from brwre.oracle import enumerate_minimal_distribution, mean_Y, y_pgf_fixed_point
from brwre.simulate import simulate_counts, simulate_tree
from brwre.velocity import velocity

CSV_HEADER = ("replica", "n", "M_n", "ratio")


class ReplicaError(RuntimeError):
    def __init__(self, index: int, cause: Exception):
        super().__init__(f"replica {index}: {cause}")
        self.index = index
        self.cause = cause


class ExpectationError(AssertionError):
    pass


class ReplicaResult(NamedTuple):
    index: int
    minima: tuple[int, ...]  # M_n at each checkpoint
    diagnostics: dict


def quenched_environment(config: ExperimentConfig) -> EnvironmentRealization:
    seed = config.env_seed if config.env_seed is not None else config.seed
    rng = np.random.default_rng(environment_seed_sequence(seed))
    return sample_environment(config.env, config.n + 1, rng, seed)


def run_replica(config: ExperimentConfig, index: int, env: EnvironmentRealization | None = None) -> ReplicaResult:
    """One replica; ``env=None`` samples a fresh environment from the replica's own stream."""
    env_ss, sim_ss = replica_seed_sequence(config.seed, index).spawn(2)
    if env is None:
        env = sample_environment(config.env, config.n + 1, np.random.default_rng(env_ss))
    rng = np.random.default_rng(sim_ss)
    try:
        if config.mode == "tree":
            gen = simulate_tree(config.offspring, env, rng, config.n, config.population_cap)
            traj = gen.minimal_trajectory()
            diag = {"max_generation_size": int(gen.generation_sizes().max())}
        else:
            run = simulate_counts(config.offspring, env, rng, config.n, config.threshold, prune=config.prune)
            traj = run.trajectory
            diag = dict(run.diagnostics)
    except Exception as exc:
        raise ReplicaError(index, exc) from exc
    return ReplicaResult(index, tuple(int(traj[c]) for c in config.checkpoints), diag)


def _run_one(args):
    return run_replica(*args)


def run_replicas(config: ExperimentConfig, jobs: int = 1) -> list[ReplicaResult]:
    """All replicas in index order.  Results do not depend on ``jobs``."""
    env = quenched_environment(config) if config.environment == "quenched" else None
    tasks = [(config, i, env) for i in range(config.replicas)]
    if jobs <= 1 or config.replicas == 1:
        return [_run_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, tasks))


@dataclass(frozen=True)
class CheckpointStats:
    n: int
    mean: float
    median: float
    se: float
    abs_error: float | None = None


@dataclass
class ConvergenceSummary:
    checkpoints: list[CheckpointStats]
    replicas: int
    regime: Regime
    gamma: float | None
    stable_fraction: float      # M_n equal at first and last checkpoint
    increasing_fraction: float  # M_n strictly larger at last checkpoint
    diagnostics: dict = field(default_factory=dict)

    def at(self, n: int) -> CheckpointStats:
        for cp in self.checkpoints:
            if cp.n == n:
                return cp
        raise KeyError(n)

    def as_dict(self) -> dict:
        return {
            "regime": self.regime.kind.value,
            "omega_max": self.regime.omega_max,
            "one_over_m": self.regime.one_over_m,
            "mass_at_one_over_m": self.regime.mass_at_one_over_m,
            "gamma": self.gamma,
            "replicas": self.replicas,
            "stable_fraction": self.stable_fraction,
            "increasing_fraction": self.increasing_fraction,
            "checkpoints": [cp.__dict__.copy() for cp in self.checkpoints],
            "diagnostics": self.diagnostics,
        }


def csv_rows(config: ExperimentConfig, results: list[ReplicaResult]) -> list[tuple]:
    rows = []
    for res in results:
        for n, m_n in zip(config.checkpoints, res.minima):
            rows.append((res.index, n, m_n, repr(m_n / n)))
    return rows


def summarize(config: ExperimentConfig, results: list[ReplicaResult]) -> ConvergenceSummary:
    regime = classify(config.env, config.offspring)
    gamma = velocity(config.offspring, config.env).gamma if regime.kind is RegimeKind.SUBCRITICAL else None
    minima = np.array([r.minima for r in results], dtype=np.int64).reshape(len(results), len(config.checkpoints))
    cps = []
    for col, n in enumerate(config.checkpoints):
        ratio = minima[:, col] / n
        se = float(ratio.std(ddof=1) / math.sqrt(len(ratio))) if len(ratio) > 1 else 0.0
        mean = float(ratio.mean())
        cps.append(CheckpointStats(n, mean, float(np.median(ratio)), se,
                                   abs(mean - gamma) if gamma is not None else None))
    diag: dict = {}
    for r in results:
        for k, v in r.diagnostics.items():
            diag[k] = max(diag.get(k, v), v) if k.startswith("max") else diag.get(k, 0) + v
    return ConvergenceSummary(
        checkpoints=cps,
        replicas=len(results),
        regime=regime,
        gamma=gamma,
        stable_fraction=float(np.mean(minima[:, -1] == minima[:, 0])),
        increasing_fraction=float(np.mean(minima[:, -1] > minima[:, 0])),
        diagnostics=diag,
    )


def run_convergence(config: ExperimentConfig, jobs: int = 1) -> tuple[ConvergenceSummary, list[tuple]]:
    results = run_replicas(config, jobs)
    return summarize(config, results), csv_rows(config, results)


def check_regime(config: ExperimentConfig) -> Regime:
    regime = classify(config.env, config.offspring)
    want = config.expect_regime
    if want is not None and want.lower() != regime.kind.value.lower():
        raise ExpectationError(f"expected regime {want}, got {regime.kind.value}")
    return regime


def classify_report(config: ExperimentConfig) -> str:
    regime = check_regime(config)
    lines = [regime.kind.value]
    if regime.kind is RegimeKind.CRITICAL:
        lines[0] += f", atom at 1/m: {str(regime.mass_at_one_over_m).lower()}"
    elif regime.kind is RegimeKind.SUBCRITICAL:
        lines[0] += f", gamma={velocity(config.offspring, config.env).gamma!r}"
    lines.append(f"omega_max={regime.omega_max!r}")
    lines.append(f"one_over_m={regime.one_over_m!r}")
    lines.append(f"mass_at_one_over_m={str(regime.mass_at_one_over_m).lower()}")
    return "\n".join(lines)


# ---------------------------------------------------------------- oracle checks

class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def within_se(observed: np.ndarray, target: float, k: float = 3.0) -> tuple[bool, float, float]:
    mean = float(np.mean(observed))
    se = float(np.std(observed, ddof=1) / math.sqrt(len(observed)))
    return abs(mean - target) <= k * se, mean, se


def binomial_check(hits: int, size: int, p: float, k: float = 3.0) -> tuple[bool, float, float]:
    phat = hits / size
    se = math.sqrt(p * (1 - p) / size)
    return abs(phat - p) <= k * se, phat, se


def chisquare_against(observed: dict[int, int], expected: dict[int, float], size: int) -> float:
    """Goodness-of-fit p-value; outcomes with expected count below 5 are pooled."""
    keys = sorted(set(expected) | set(observed))
    obs, exp, pool_o, pool_e = [], [], 0, 0.0
    for k in keys:
        e = expected.get(k, 0.0) * size
        if e < 5:
            pool_o += observed.get(k, 0)
            pool_e += e
        else:
            obs.append(observed.get(k, 0))
            exp.append(e)
    if pool_e > 0 or pool_o > 0:
        obs.append(pool_o)
        exp.append(pool_e)
    if len(obs) < 2:
        return 1.0
    return float(stats.chisquare(obs, exp).pvalue)


def empirical_minimal_law(config: ExperimentConfig, omegas, n: int, size: int, rng) -> dict[int, int]:
    counts: dict[int, int] = {}
    for _ in range(size):
        gen = simulate_tree(config.offspring, omegas, rng, n, config.population_cap)
        m = int(gen.positions_at(n).min())
        counts[m] = counts.get(m, 0) + 1
    return counts


def oracle_checks(config: ExperimentConfig, samples: int = 20_000, alpha: float = 0.01) -> list[CheckResult]:
    """Cross-check the simulators against the exact oracles for the configured laws."""
    rng = np.random.default_rng(replica_seed_sequence(config.seed, -1))
    out = []
    env = quenched_environment(config.with_overrides(n=max(config.n, 3)))
    for n in (1, 2):
        exact = enumerate_minimal_distribution(config.offspring, env.omegas, n)
        counts = empirical_minimal_law(config, env.omegas, n, samples, rng)
        pval = chisquare_against(counts, exact.probs, samples)
        out.append(CheckResult(f"M_{n} law vs enumeration", pval >= alpha, f"chi-square p={pval:.4g}"))
    m = config.offspring.mean
    for w in config.env.support:
        site = SiteGWLaw(config.offspring, w)
        times = sample_extinction_times(site, rng, samples, 10**6)
        for k in (1, 2, 5):
            ok, phat, se = binomial_check(int(np.sum((times >= 0) & (times <= k))), samples, extinction_cdf(site, k))
            out.append(CheckResult(f"P(T<={k}) at omega={w}", ok, f"empirical {phat:.6f} vs {extinction_cdf(site, k):.6f} (se {se:.2g})"))
        if m * w >= 1.0:
            continue
        y, _ = sample_first_generation(config.offspring, w, rng, samples)
        ok, mean, se = within_se(y, mean_Y(m, w))
        out.append(CheckResult(f"mean Y at omega={w}", ok, f"empirical {mean:.6f} vs {mean_Y(m, w):.6f} (se {se:.2g})"))
        target = y_pgf_fixed_point(config.offspring, w, 0.5)
        ok, mean, se = within_se(0.5 ** y, target)
        out.append(CheckResult(f"pgf of Y at s=0.5, omega={w}", ok, f"empirical {mean:.6f} vs {target:.6f} (se {se:.2g})"))
    return out
