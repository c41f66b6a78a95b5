import numpy as np
import pytest
from hypothesis import strategies as st

from fetransform.geometry import DegenerateTriangle, Triangle

MAX_ASPECT = 20.0


def aspect_ratio(v):
    v = np.asarray(v, dtype=float)
    e = [np.linalg.norm(v[i] - v[j]) for i, j in ((1, 2), (0, 2), (0, 1))]
    twice_area = abs((v[1, 0] - v[0, 0]) * (v[2, 1] - v[0, 1]) - (v[1, 1] - v[0, 1]) * (v[2, 0] - v[0, 0]))
    return max(e) ** 2 / twice_area if twice_area > 0 else np.inf


def random_triangle(rng, scale=1.0, max_aspect=MAX_ASPECT):
    """Nondegenerate triangle with shuffled global vertex ids."""
    while True:
        v = rng.uniform(-scale, scale, (3, 2)) + rng.uniform(-3, 3, 2)
        if aspect_ratio(v) <= max_aspect:
            ids = tuple(int(i) for i in rng.permutation(3) + rng.integers(0, 50))
            return Triangle(v, ids)


@st.composite
def triangles(draw, max_aspect=MAX_ASPECT):
    coord = st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False)
    v = np.array([[draw(coord), draw(coord)] for _ in range(3)])
    scale = draw(st.sampled_from([1e-2, 1.0, 10.0]))
    v = v * scale
    from hypothesis import assume

    assume(aspect_ratio(v) <= max_aspect)
    perm = draw(st.permutations([0, 1, 2]))
    try:
        return Triangle(v, tuple(perm))
    except DegenerateTriangle:
        assume(False)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
