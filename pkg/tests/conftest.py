import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

NOISE = 10 ** (-12.4)


def random_hermitian(rng, n, scale=1.0):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * 0.5 * (A + A.conj().T)


def random_channels(rng, K, n, gain=1e-10):
    return np.sqrt(gain / 2) * (rng.standard_normal((K, n)) + 1j * rng.standard_normal((K, n)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: end-to-end acceptance criteria (slow)")
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def verdict(request, capsys):
    """Record one PASS/FAIL line for an acceptance criterion, print it, then assert."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def _record(label, ok, detail):
        tag = "N/A" if ok is None else "PASS" if ok else "FAIL"
        line = f"{tag} {label}: {detail}"
        lines.append(line)
        with capsys.disabled():
            print("\n" + line)
        if ok is None:
            pytest.skip(line)
        assert ok, line

    return _record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
