import numpy as np
import pytest
from hypothesis import strategies as st

from nctorus.algebra import TorusElement

THETA = 0.3183098861837907

# criterion -> (passed, detail); filled by test_acceptance, printed at the end
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {detail}")


def random_element(rng, theta, radius, scale=1.0, normalize=False):
    size = 2 * radius + 1
    data = rng.normal(size=(size, size)) + 1j * rng.normal(size=(size, size))
    data *= scale
    if normalize:
        data /= np.abs(data).sum()
    return TorusElement.from_array(theta, data, -radius, -radius)


@st.composite
def elements(draw, theta=THETA, max_radius=3):
    r = draw(st.integers(0, max_radius))
    size = 2 * r + 1
    vals = draw(st.lists(st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False),
                         min_size=size * size, max_size=size * size))
    data = np.array(vals, dtype=complex).reshape(size, size)
    return TorusElement.from_array(theta, data, -r, -r)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
