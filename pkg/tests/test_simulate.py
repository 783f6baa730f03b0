import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from brwre.environment import EnvironmentLaw, EnvironmentRealization, sample_environment
from brwre.offspring import OffspringLaw
from brwre.simulate import (
    ROOT,
    CapExceeded,
    HorizonError,
    minimal_position,
    simulate_counts,
    simulate_tree,
)
from conftest import binomial_ok, within_se

BINARY = OffspringLaw.binary()
HALF = EnvironmentRealization.constant(0.5, 64)
HUGE_C = 2**40


def chisq_two_sample(a, b):
    keys = sorted(set(a) | set(b))
    table = np.array([[a.count(k) for k in keys], [b.count(k) for k in keys]])
    table = table[:, table.sum(axis=0) >= 10]
    return stats.chi2_contingency(table).pvalue


class TestTree:
    def test_binary_population(self, rng):
        g = simulate_tree(BINARY, HALF, rng, 10)
        assert g.generation_sizes()[-1] == 1024
        assert sum(g.site_counts(10).values()) == 1024

    def test_deterministic(self, half_half):
        a = simulate_tree(half_half, HALF, np.random.default_rng(4), 12)
        b = simulate_tree(half_half, HALF, np.random.default_rng(4), 12)
        assert a.tobytes() == b.tobytes()

    def test_mean_population(self, half_half, rng):
        z = [simulate_tree(half_half, HALF, rng, 10).generation_sizes()[-1] for _ in range(1000)]
        assert within_se(z, 1.5**10)

    def test_record_invariants(self, half_half, rng):
        env = sample_environment(EnvironmentLaw.from_pairs([0.2, 0.7]), 21, rng)
        g = simulate_tree(half_half, env, rng, 20)
        root = g.record(0)
        assert (root.parent, root.generation, root.position) == (ROOT, 0, 0)
        for r in list(g.records())[1:]:
            p = g.record(r.parent)
            assert r.position - p.position in (0, 1)
            assert r.generation == p.generation + 1
        sizes = g.generation_sizes()
        assert sizes[0] == 1 and np.all(np.diff(sizes) >= 0)
        traj = g.minimal_trajectory()
        for n in range(21):
            pos = g.positions_at(n)
            assert pos.min() == traj[n] == minimal_position(g, n)
            assert pos.max() <= n
        assert traj[0] == 0 and np.all(np.diff(traj.values) >= 0)

    def test_cap(self, rng):
        with pytest.raises(CapExceeded) as exc:
            simulate_tree(BINARY, HALF, rng, 20, population_cap=1000)
        assert exc.value.generation == 10

    def test_environment_too_short(self, rng):
        with pytest.raises(ValueError):
            simulate_tree(BINARY, np.full(5, 0.5), rng, 5)

    def test_stop_when_cleared(self, rng):
        g = simulate_tree(BINARY, np.full(40, 0.25), rng, 39, stop_when_cleared=0)
        assert g.positions_at(g.horizon).min() >= 1
        assert g.positions_at(g.horizon - 1).min() == 0

    @given(st.integers(0, 2**32), st.floats(0.0, 0.3))
    def test_raising_omega_never_increases_minimum(self, seed, bump):
        env = sample_environment(EnvironmentLaw.from_pairs([0.2, 0.5]), 13, np.random.default_rng(seed))
        base = simulate_tree(BINARY, env, np.random.default_rng(seed), 12).minimal_trajectory()
        raised = simulate_tree(BINARY, env.omegas + bump, np.random.default_rng(seed), 12).minimal_trajectory()
        assert np.all(raised.values <= base.values)


class TestCounts:
    def test_matches_tree_law(self):
        rng = np.random.default_rng(8)
        tree = [int(simulate_tree(BINARY, HALF, rng, 6).positions_at(6).min()) for _ in range(10_000)]
        cnt = [int(simulate_counts(BINARY, HALF, rng, 6, HUGE_C).trajectory[6]) for _ in range(10_000)]
        assert chisq_two_sample(tree, cnt) > 0.01

    def test_first_step(self):
        rng = np.random.default_rng(9)
        hits = sum(int(simulate_counts(BINARY, HALF, rng, 1).trajectory[1]) for _ in range(100_000))
        assert binomial_ok(hits, 100_000, 0.25)

    def test_exact_mode_growth(self, half_half, rng):
        ratios = []
        for _ in range(3000):
            run = simulate_counts(half_half, HALF, rng, 6, HUGE_C, record_steps=(5, 6))
            a, b = run.states
            assert a.all_exact and b.all_exact
            ratios.append(b.total_exact() / a.total_exact())
        assert within_se(ratios, 1.5)

    def test_state_invariants(self, half_half, rng):
        env = sample_environment(EnvironmentLaw.from_pairs([0.2, 0.4]), 401, rng)
        c = 2**10
        run = simulate_counts(half_half, env, rng, 400, c, record_steps=range(0, 401, 25))
        assert np.all(np.diff(run.trajectory.values) >= 0)
        assert run.trajectory[0] == 0 and np.all(run.trajectory.values <= np.arange(401))
        assert any(not s.all_exact for s in run.states)
        for s in run.states:
            assert s.min_site == run.trajectory[s.step]
            assert np.all(s.exact[~s.saturated] < c)
            assert np.all(s.log_mass[s.saturated] >= math.log(c / 2))
            counts = s.counts()
            assert min(counts) == s.min_site
        with pytest.raises(ValueError):
            run.states[-1].total_exact()

    def test_pruning_is_exact(self, half_half):
        env = sample_environment(EnvironmentLaw.from_pairs([0.2, 0.4]), 801, np.random.default_rng(2))
        a = simulate_counts(half_half, env, np.random.default_rng(3), 800, 2**12, prune=True)
        b = simulate_counts(half_half, env, np.random.default_rng(3), 800, 2**12, prune=False)
        assert np.array_equal(a.trajectory.values, b.trajectory.values)
        assert a.diagnostics["prunes"] > 0 and b.diagnostics["prunes"] == 0

    def test_threshold_validation(self, rng):
        with pytest.raises(ValueError):
            simulate_counts(BINARY, HALF, rng, 3, threshold=1)

    def test_annealed_self_averaging(self, half_half):
        law = EnvironmentLaw.from_pairs([0.2, 0.4])
        ratios = {100: [], 1000: []}
        for r in range(40):
            rng = np.random.default_rng([7, r])
            env = sample_environment(law, 1001, rng)
            traj = simulate_counts(half_half, env, rng, 1000).trajectory
            for n in ratios:
                ratios[n].append(traj[n] / n)
        assert np.var(ratios[1000]) < np.var(ratios[100])

    def test_quenched_replicas_share_environment(self, half_half):
        env = sample_environment(EnvironmentLaw.from_pairs([0.2, 0.4]), 201, np.random.default_rng(1))
        a = simulate_counts(half_half, env, np.random.default_rng(1), 200).trajectory
        b = simulate_counts(half_half, env, np.random.default_rng(2), 200).trajectory
        assert not np.array_equal(a.values, b.values)


class TestMinimalPosition:
    def test_sources(self, rng):
        g = simulate_tree(BINARY, HALF, rng, 5)
        traj = g.minimal_trajectory()
        run = simulate_counts(BINARY, HALF, rng, 5, record_steps=[3])
        assert minimal_position(g, 0) == minimal_position(traj, 0) == minimal_position(run, 0) == 0
        assert minimal_position(run.states[0], 3) == run.trajectory[3]
        for bad in ((g, 6), (traj, -1), (run.states[0], 2)):
            with pytest.raises(HorizonError):
                minimal_position(*bad)
        with pytest.raises(TypeError):
            minimal_position([0, 1], 0)

    def test_second_step_law(self):
        rng = np.random.default_rng(10)
        m2 = np.array([simulate_tree(BINARY, HALF, rng, 2).positions_at(2).min() for _ in range(100_000)])
        for k, p in {0: 0.609375, 1: 0.375, 2: 0.015625}.items():
            assert binomial_ok(int(np.sum(m2 == k)), len(m2), p), k
