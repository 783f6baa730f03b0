import pytest
from hypothesis import given
from hypothesis import strategies as st

from brwre.config import (
    ConfigError,
    ExperimentConfig,
    default_checkpoints,
    from_dict,
    load,
    loads,
    replica_seed_sequence,
)
from brwre.environment import EnvironmentLaw
from brwre.offspring import OffspringLaw

BASE = """
[offspring]
probs = [[1, 0.5], [2, 0.5]]

[env]
support = [0.2, 0.4]
"""


def test_defaults():
    cfg = loads(BASE)
    assert cfg.mode == "counts" and cfg.environment == "annealed"
    assert cfg.checkpoints == default_checkpoints(cfg.n) == (12, 25, 50, 100)
    assert cfg.env.weights == (0.5, 0.5)


@given(
    n=st.integers(8, 10**5),
    replicas=st.integers(1, 500),
    seed=st.integers(0, 2**63 - 1),
    mode=st.sampled_from(["tree", "counts"]),
    environment=st.sampled_from(["annealed", "quenched"]),
    regime=st.sampled_from([None, "subcritical", "Critical"]),
    env_seed=st.one_of(st.none(), st.integers(0, 2**32)),
    w=st.floats(0.01, 0.99),
)
def test_roundtrip(n, replicas, seed, mode, environment, regime, env_seed, w):
    cfg = ExperimentConfig(
        offspring=OffspringLaw.from_pairs([[1, w], [3, 1 - w]]),
        env=EnvironmentLaw.from_pairs([0.1, w / 2 + 0.3], [0.3, 0.7], delta=0.001),
        n=n, replicas=replicas, seed=seed, mode=mode, environment=environment,
        expect_regime=regime, env_seed=env_seed, checkpoints=(1, n // 3 + 1, n),
    )
    again = loads(cfg.dumps())
    assert again == cfg
    assert again.dumps() == cfg.dumps()


@pytest.mark.parametrize("text, match", [
    ("[env]\nsupport=[0.2]\n", "offspring"),
    ("[offspring]\nprobs=[[1,0.5],[2,0.5]]\n", "env"),
    (BASE + "[run]\nn = 0\n", "n"),
    (BASE + "[run]\nreplicas = 0\n", "replicas"),
    (BASE + "[run]\nn = 10\ncheckpoints = [5, 11]\n", "checkpoints"),
    (BASE + "[run]\nmode = 'fast'\n", "mode"),
    (BASE + "[run]\nenvironment = 'fixed'\n", "environment"),
    (BASE + "[run]\nexpect_regime = 'hot'\n", "expect_regime"),
    (BASE + "[run]\nbogus = 1\n", "unknown"),
    ("[offspring]\nprobs=[[0, 0.5],[2,0.5]]\n[env]\nsupport=[0.2]\n", "p_0"),
    ("[offspring]\nprobs=[[1,0.5],[2,0.5]]\n[env]\nsupport=[1.2]\n", "must lie in"),
    ("not toml [", "TOML"),
])
def test_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        loads(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load(tmp_path / "nope.toml")


def test_override_n():
    cfg = loads(BASE + "[run]\nn = 2000\ncheckpoints = [250, 500, 1000, 2000]\n")
    assert cfg.with_overrides(n=600).checkpoints == (250, 500, 600)
    assert cfg.with_overrides(n=100).checkpoints == (12, 25, 50, 100)
    assert cfg.with_overrides(seed=None) == cfg


def test_replica_seeds_stable():
    a = [replica_seed_sequence(5, i).generate_state(4).tolist() for i in range(10)]
    b = [replica_seed_sequence(5, i).generate_state(4).tolist() for i in range(20)]
    assert a == b[:10]
    assert len({tuple(x) for x in b}) == 20
    assert replica_seed_sequence(6, 0).generate_state(4).tolist() != a[0]


def test_from_dict_type_errors():
    with pytest.raises(ConfigError):
        from_dict({"offspring": {"probs": "x"}, "env": {"support": [0.2]}})
