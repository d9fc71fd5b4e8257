import numpy as np
import pytest

from flagdd.afdm import add_cpp, strip_cpp
from flagdd.channel import ChannelRealization, apply_channel, complex_normal, noise_variance
from flagdd.sequences import default_flag

PREFIX = 8


@pytest.fixture(scope="session")
def flag127():
    return default_flag(127)


def receive(flag, chan: ChannelRealization, snr_db=np.inf, rng=None, prefix=PREFIX):
    """Received preamble body scaled back to unit energy, as the experiments build it."""
    n = flag.length
    burst = add_cpp(np.sqrt(n) * flag.samples, prefix)
    r = strip_cpp(apply_channel(burst, chan, prefix), prefix)
    n0 = noise_variance(snr_db)
    if n0 > 0:
        r = r + np.sqrt(n0) * complex_normal(n, rng)
    return r / np.sqrt(n)


#: one line per acceptance criterion, filled by test_acceptance and printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
