from __future__ import annotations

from collections import deque
from contextlib import contextmanager

import numpy as np
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

# One line per headline acceptance check (see test_acceptance.py); the
# terminal summary prints them as a scorecard after the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    del exitstatus, config
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@contextmanager
def criterion(tag: str, detail: str):
    """Record one scorecard line for the terminal summary; re-raises failures.

    The body may drop measured numbers into the yielded dict; they are
    appended to the line in parentheses.
    """
    info: dict[str, str] = {}
    try:
        yield info
    except BaseException:
        ACCEPTANCE_LINES.append(_scorecard_line(tag, "FAIL", detail, info))
        raise
    ACCEPTANCE_LINES.append(_scorecard_line(tag, "PASS", detail, info))


def _scorecard_line(tag: str, status: str, detail: str, info: dict[str, str]) -> str:
    extra = ", ".join(f"{k}={v}" for k, v in info.items())
    return f"{tag} {status}: {detail}" + (f" ({extra})" if extra else "")


@st.composite
def field_values(draw, ndims=(2,), max_side=6):
    """Small random grids; half the draws are coarsely quantized so ties
    and plateaus get exercised as hard as generic values."""
    nd = draw(st.sampled_from(ndims))
    shape = tuple(draw(st.integers(2, max_side)) for _ in range(nd))
    if draw(st.booleans()):
        elements = st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0])
    else:
        elements = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
    return draw(hnp.arrays(np.float64, shape, elements=elements))


@st.composite
def mask_values(draw, ndims=(2,), max_side=8):
    nd = draw(st.sampled_from(ndims))
    shape = tuple(draw(st.integers(2, max_side)) for _ in range(nd))
    return draw(hnp.arrays(np.bool_, shape))


def grid_neighbors(idx, shape):
    for axis in range(len(shape)):
        for step in (-1, 1):
            nxt = list(idx)
            nxt[axis] += step
            if 0 <= nxt[axis] < shape[axis]:
                yield tuple(nxt)


def mask_path_exists(bits: np.ndarray, src, dst) -> bool:
    """BFS over set pixels with axis adjacency; the connectivity oracle."""
    if not (bits[src] and bits[dst]):
        return False
    seen = {src}
    queue = deque([src])
    while queue:
        cur = queue.popleft()
        if cur == dst:
            return True
        for nxt in grid_neighbors(cur, bits.shape):
            if bits[nxt] and nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return False


def random_fields(rng, count, max_side, ndim):
    """Deterministic batch of random fields, mixing smooth and quantized."""
    out = []
    for i in range(count):
        shape = tuple(int(rng.integers(2, max_side + 1)) for _ in range(ndim))
        if i % 3 == 2:
            vals = rng.integers(0, 5, size=shape).astype(np.float64) / 4.0
        else:
            vals = rng.random(shape)
        out.append(vals)
    return out
