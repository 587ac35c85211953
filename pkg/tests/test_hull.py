import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from majorant.bessel import PathGrid
from majorant.hull import HorizonError, convex_minorant, first_vertex_after


def test_linear_path_single_segment():
    pl = convex_minorant(PathGrid([0.0, 1.0, 2.0], [0.0, 1.0, 2.0]))
    assert len(pl.breakpoints) == 2
    assert pl(1.5) == pytest.approx(1.5)


def test_vee_shape():
    pl = convex_minorant(PathGrid([0.0, 1.0, 2.0], [0.0, -1.0, 0.0]))
    assert np.allclose(pl.breakpoints, [0.0, 1.0, 2.0])
    assert np.allclose(pl.slopes, [-1.0, 1.0])


def test_rejects_short_path():
    with pytest.raises(ValueError):
        convex_minorant(PathGrid([0.0], [0.0]))


def test_below_path_and_touching(gen):
    times = np.linspace(0.0, 1.0, 200)
    vals = np.cumsum(gen.standard_normal(200)) * 0.1
    pl = convex_minorant(PathGrid(times, vals))
    assert np.all(pl(times) <= vals + 1e-12)
    for b, v in zip(pl.breakpoints, pl.values):
        assert v == vals[np.searchsorted(times, b)]
    assert np.all(np.diff(pl.slopes) > 0)


def test_idempotent(gen):
    times = np.linspace(0.0, 1.0, 500)
    vals = np.cumsum(gen.standard_normal(500)) * 0.05
    pl = convex_minorant(PathGrid(times, vals))
    pl2 = convex_minorant(PathGrid(pl.breakpoints, pl.values))
    assert np.array_equal(pl.breakpoints, pl2.breakpoints)
    assert np.array_equal(pl.values, pl2.values)


@given(st.lists(st.floats(-50, 50), min_size=2, max_size=60))
@settings(max_examples=200, deadline=None)
def test_hull_properties_random(ys):
    xs = np.arange(len(ys), dtype=float)
    pl = convex_minorant(PathGrid(xs, np.array(ys)))
    assert np.all(pl(xs) <= np.array(ys) + 1e-9)
    if len(pl.slopes) > 1:
        assert np.all(np.diff(pl.slopes) > 0)
    assert pl.breakpoints[0] == xs[0] and pl.breakpoints[-1] == xs[-1]


class TestFirstVertexAfter:
    def setup_method(self):
        self.pl = convex_minorant(PathGrid([0.0, 1.0, 2.0], [0.0, -1.0, 0.0]))

    def test_interior(self):
        assert first_vertex_after(self.pl, 0.5) == 1.0

    def test_at_vertex_strict(self):
        assert first_vertex_after(self.pl, 1.0) == 2.0

    def test_beyond_last(self):
        with pytest.raises(HorizonError):
            first_vertex_after(self.pl, 2.0)

    def test_before_span(self):
        with pytest.raises(HorizonError):
            first_vertex_after(self.pl, -0.5)
