import numpy as np
import pytest

from simtreerank.pairs import PairBatch


def random_batch(rng, n=60, q=2, transform="diag", pos_rate=0.5, shift=0.8):
    """Raw pairs in [0,1]^q whose positives sit closer together, featurized."""
    from simtreerank.pairs import pairs_from_raw
    z = np.where(rng.random(n) < pos_rate, 1, -1)
    if np.all(z == 1):
        z[0] = -1
    if np.all(z == -1):
        z[0] = 1
    x = rng.random((n, q))
    noise = rng.normal(scale=0.3, size=(n, q))
    xp = np.clip(x + np.where(z[:, None] == 1, 0.3, 1.0) * noise + shift * rng.random((n, q)) * (z[:, None] == -1), 0, 1)
    return pairs_from_raw(x, xp, z, transform)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def make_batch():
    return random_batch


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
