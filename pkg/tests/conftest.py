import numpy as np
import pytest
from hypothesis import settings

from brwre.environment import EnvironmentLaw
from brwre.offspring import OffspringLaw

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def binary():
    return OffspringLaw.binary()


@pytest.fixture
def half_half():
    return OffspringLaw.from_pairs([[1, 0.5], [2, 0.5]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def sub_env():
    return EnvironmentLaw.from_pairs([0.2, 0.4], [0.5, 0.5])


def within_se(samples, target, k=3.0):
    samples = np.asarray(samples, dtype=float)
    se = samples.std(ddof=1) / np.sqrt(len(samples))
    return abs(samples.mean() - target) <= k * se


def binomial_ok(hits, size, p, k=3.0):
    return abs(hits / size - p) <= k * np.sqrt(p * (1 - p) / size)


ACCEPTANCE_LINES = []


def report(label, passed, detail):
    """Record one acceptance line; it is printed now and again in the terminal summary."""
    line = f"{'PASS' if passed else 'FAIL'} {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
