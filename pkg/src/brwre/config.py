"""Experiment configuration: TOML with ``[offspring]``, ``[env]`` and ``[run]`` tables.

Example::

    [offspring]
    probs = [[1, 0.5], [2, 0.5]]      # (k, p_k) pairs

    [env]
    support = [0.2, 0.4]
    weights = [0.5, 0.5]
    delta = 0.01

    [run]
    mode = "counts"
    n = 2000
    checkpoints = [250, 500, 1000, 2000]
    replicas = 50
    seed = 1
"""
from __future__ import annotations

import hashlib
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

from brwre.environment import EnvironmentLaw
from brwre.offspring import LawError, OffspringLaw
from brwre.simulate import DEFAULT_THRESHOLD

MODES = ("tree", "counts")
ENV_MODES = ("annealed", "quenched")
REGIMES = ("supercritical", "critical", "subcritical")


class ConfigError(ValueError):
    pass


def default_checkpoints(n: int) -> tuple[int, ...]:
    return tuple(sorted({max(1, n // 8), max(1, n // 4), max(1, n // 2), n}))


@dataclass(frozen=True)
class ExperimentConfig:
    offspring: OffspringLaw
    env: EnvironmentLaw
    n: int = 100
    checkpoints: tuple[int, ...] = ()
    replicas: int = 1
    seed: int = 0
    mode: str = "counts"
    threshold: int = DEFAULT_THRESHOLD
    environment: str = "annealed"
    env_seed: int | None = None
    expect_regime: str | None = None
    population_cap: int = 10**6
    horizon_cap: int = 10**6
    prune: bool = True
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"run.mode must be one of {MODES}, got {self.mode!r}")
        if self.environment not in ENV_MODES:
            raise ConfigError(f"run.environment must be one of {ENV_MODES}, got {self.environment!r}")
        if self.expect_regime is not None and self.expect_regime.lower() not in REGIMES:
            raise ConfigError(f"run.expect_regime must be one of {REGIMES}")
        if self.n < 1:
            raise ConfigError("run.n must be >= 1")
        if self.replicas < 1:
            raise ConfigError("run.replicas must be >= 1")
        if self.threshold < 2:
            raise ConfigError("run.threshold must be >= 2")
        if not self.checkpoints:
            object.__setattr__(self, "checkpoints", default_checkpoints(self.n))
        cps = tuple(sorted(set(int(c) for c in self.checkpoints)))
        if cps[0] < 1 or cps[-1] > self.n:
            raise ConfigError(f"checkpoints must lie in [1, {self.n}]")
        object.__setattr__(self, "checkpoints", cps)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        if "n" in kw and "checkpoints" not in kw:
            kept = tuple(c for c in self.checkpoints if c < kw["n"])
            kw["checkpoints"] = kept + (kw["n"],) if kept else default_checkpoints(kw["n"])
        try:
            return replace(self, **kw)
        except LawError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        env = {"support": list(self.env.support), "weights": list(self.env.weights), "delta": self.env.delta}
        if self.env_seed is not None:
            env["seed"] = self.env_seed
        run = {
            "mode": self.mode,
            "n": self.n,
            "checkpoints": list(self.checkpoints),
            "replicas": self.replicas,
            "seed": self.seed,
            "threshold": self.threshold,
            "environment": self.environment,
            "population_cap": self.population_cap,
            "horizon_cap": self.horizon_cap,
            "prune": self.prune,
        }
        if self.expect_regime is not None:
            run["expect_regime"] = self.expect_regime
        return {"offspring": {"probs": self.offspring.to_pairs()}, "env": env, "run": run}

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())


def from_dict(data: dict) -> ExperimentConfig:
    try:
        off = data["offspring"]
        env = data["env"]
    except KeyError as exc:
        raise ConfigError(f"missing section [{exc.args[0]}]") from None
    run = dict(data.get("run", {}))
    try:
        offspring = OffspringLaw.from_pairs(off["probs"])
        env_law = EnvironmentLaw.from_pairs(env["support"], env.get("weights"), env.get("delta", 1e-6))
    except KeyError as exc:
        raise ConfigError(f"missing key {exc.args[0]!r}") from None
    except (LawError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    known = {
        "n", "checkpoints", "replicas", "seed", "mode", "threshold", "environment",
        "expect_regime", "population_cap", "horizon_cap", "prune",
    }
    unknown = set(run) - known
    if unknown:
        raise ConfigError(f"unknown [run] keys: {sorted(unknown)}")
    if "checkpoints" in run:
        run["checkpoints"] = tuple(run["checkpoints"])
    try:
        return ExperimentConfig(offspring=offspring, env=env_law, env_seed=env.get("seed"), **run)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def loads(text: str) -> ExperimentConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc
    return from_dict(data)


def load(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return loads(text)


def _entropy(*parts) -> int:
    digest = hashlib.sha256(":".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:16], "little")


def replica_seed_sequence(master_seed: int, index: int) -> np.random.SeedSequence:
    """Stream for one replica: SHA-256 of (master seed, index), so replica ``i`` is stable when ``R`` changes."""
    return np.random.SeedSequence(_entropy("replica", master_seed, index))


def environment_seed_sequence(seed: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(_entropy("environment", seed))
