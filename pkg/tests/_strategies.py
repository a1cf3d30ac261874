"""Shared hypothesis strategies."""
import numpy as np
from hypothesis import strategies as st

from su2depol.states import random_state

seeds = st.integers(min_value=0, max_value=2**32 - 1)
finite = dict(allow_nan=False, allow_infinity=False)


@st.composite
def rotation_vectors(draw, max_norm=np.pi):
    direction = np.array(draw(st.tuples(*[st.floats(-1, 1, **finite)] * 3)))
    norm = np.linalg.norm(direction)
    if norm < 1e-3:
        direction = np.array([0.0, 0.0, 1.0])
        norm = 1.0
    return direction / norm * draw(st.floats(0, max_norm, **finite))


@st.composite
def points(draw):
    return draw(st.floats(0, np.pi, **finite)), draw(st.floats(0, 2 * np.pi, exclude_max=True, **finite))


@st.composite
def states(draw, n_max=4, n_min=0, multi=True):
    """Random density states; with ``multi`` they may mix several sectors."""
    seed = draw(seeds)
    if multi:
        ns = draw(st.sets(st.integers(n_min, n_max), min_size=1, max_size=3))
    else:
        ns = {draw(st.integers(n_min, n_max))}
    return random_state(sorted(ns), np.random.default_rng(seed))
