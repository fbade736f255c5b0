import os

from hypothesis import HealthCheck, settings, strategies as st

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@st.composite
def compositions(draw, n, max_parts=4):
    """A random composition of n into at most ``max_parts`` positive parts."""
    parts = []
    left = n
    while left and len(parts) < max_parts - 1:
        p = draw(st.integers(1, left))
        parts.append(p)
        left -= p
    if left:
        parts.append(left)
    return tuple(parts)


@st.composite
def margins(draw, n_min=2, n_max=7, max_parts=4):
    n = draw(st.integers(n_min, n_max))
    return draw(compositions(n, max_parts)), draw(compositions(n, max_parts))
