import numpy as np
import pytest

from rpsgmm import FitConfig, generate_synthetic, SyntheticSpec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_synth():
    return generate_synthetic(SyntheticSpec(n_per_class=4, noise=1.0, seed=3))


@pytest.fixture(scope="session")
def quick_config():
    return FitConfig(n_components=3, n_init=2, max_iter=50, seed=7)


def assert_em_monotone(meta, rel=1e-8):
    resets = set(meta.reset_iters)
    h = meta.history
    for t in range(1, len(h)):
        if t in resets:
            continue
        assert h[t] >= h[t - 1] - rel * abs(h[t - 1]), (t, h[t - 1], h[t])


_VERDICTS = {}


@pytest.fixture(scope="session")
def verdict():
    """Record ``(criterion, status, detail)``; printed in the terminal summary."""
    def record(number, ok, detail):
        status = ok if isinstance(ok, str) else ("PASS" if ok else "FAIL")
        line = f"criterion {number}: {status}  {detail}"
        _VERDICTS[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        terminalreporter.write_line(_VERDICTS[number])
