import os

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from glarefuse.geometry import Box

settings.register_profile(
    "default", max_examples=100, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("thorough", max_examples=1000, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

coord = st.floats(min_value=0.0, max_value=100.0, allow_nan=False, width=32)
extent = st.floats(min_value=0.5, max_value=40.0, allow_nan=False, width=32)
score = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


@st.composite
def boxes(draw, labels=(0,)):
    x, y, w, h = draw(coord), draw(coord), draw(extent), draw(extent)
    return Box(x, y, x + w, y + h, score=draw(score), label=draw(st.sampled_from(labels)))
