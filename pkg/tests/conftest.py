import numpy as np
import pytest
from hypothesis import strategies as st

from jcbound.state import SymmetricState


@st.composite
def symmetric_states(draw, min_n=2, max_n=6, normalized=False):
    N = draw(st.integers(min_n, max_n))
    unit = st.floats(0.0, 1.0, allow_nan=False, allow_subnormal=False)
    a = np.array(draw(st.lists(unit, min_size=N, max_size=N)))
    b = np.array(draw(st.lists(unit, min_size=N, max_size=N)))
    if a.sum() + b.sum() == 0:
        a[0] = 1.0
    frac = np.array(draw(st.lists(unit, min_size=N - 1, max_size=N - 1)))
    phase = np.array(draw(st.lists(st.floats(0, 2 * np.pi), min_size=N - 1, max_size=N - 1)))
    c = np.sqrt(a[1:] * b[:-1]) * frac * np.exp(1j * phase)
    s = SymmetricState(a, b, c)
    return s.normalized() if normalized else s


def random_state(rng, N, normalized=True):
    pops = rng.dirichlet(np.ones(2 * N))
    a, b = pops[:N], pops[N:]
    c = np.sqrt(a[1:] * b[:-1]) * rng.random(N - 1) * np.exp(2j * np.pi * rng.random(N - 1))
    s = SymmetricState(a, b, c)
    return s if normalized else SymmetricState(3 * a, 3 * b, 3 * c)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def record_acceptance(label: str, ok: bool, detail: str) -> str:
    line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
