import math

import numpy as np
import pytest

from maxchar.geometry import (Box, UniformGrid, as_point, ball_volume,
                              point_segment_distance, segment_ball_chord,
                              segment_ball_chords_at, segment_box_overlap)


def test_ball_volume_closed_forms():
    assert ball_volume(1, 3.0) == 6.0
    assert ball_volume(2, 1.0) == pytest.approx(math.pi)
    assert ball_volume(2, 2.0) == pytest.approx(4.0 * math.pi)


def test_as_point_coercion_and_validation():
    assert as_point(1.5, 1) == (1.5,)
    assert as_point((1.0, 2.0), 2) == (1.0, 2.0)
    with pytest.raises(ValueError):
        as_point((1.0,), 2)
    with pytest.raises(ValueError):
        as_point(float("nan"), 1)


class TestBox:
    def test_containment_is_closed(self):
        box = Box((0.0, 0.0), (1.0, 2.0))
        inside = box.contains_points([[0.0, 0.0], [1.0, 2.0], [0.5, 1.0],
                                      [1.0001, 1.0]])
        assert inside.tolist() == [True, True, True, False]

    def test_contains_box(self):
        outer = Box((0.0,), (10.0,))
        assert outer.contains_box(Box((1.0,), (9.0,)))
        assert outer.contains_box(outer)
        assert not outer.contains_box(Box((-1.0,), (5.0,)))

    def test_diameter(self):
        assert Box((0.0, 0.0), (3.0, 4.0)).diameter() == 5.0

    def test_empty_box_rejected(self):
        with pytest.raises(ValueError):
            Box((1.0,), (0.0,))


class TestUniformGrid:
    def test_axis_and_points_1d(self):
        g = UniformGrid((0.0,), 0.5, (5,))
        assert np.allclose(g.axis(0), [0.0, 0.5, 1.0, 1.5, 2.0])
        assert g.points().shape == (5, 1)
        assert g.node_count == 5
        assert g.cell_volume == 0.5

    def test_points_2d_row_major(self):
        g = UniformGrid((0.0, 0.0), 1.0, (2, 3))
        pts = g.points()
        assert pts.shape == (6, 2)
        # first axis varies slowest
        assert pts[0].tolist() == [0.0, 0.0]
        assert pts[2].tolist() == [0.0, 2.0]
        assert pts[3].tolist() == [1.0, 0.0]

    def test_span_nodes_endpoints(self):
        g = UniformGrid.span_nodes([-1.0], [1.0], 0.25)
        ax = g.axis(0)
        assert ax[0] == -1.0 and ax[-1] == 1.0
        assert g.extents == (9,)

    def test_cover_cells_centers(self):
        g = UniformGrid.cover_cells([0.0], [1.0], 0.25)
        assert g.extents == (4,)
        assert np.allclose(g.axis(0), [0.125, 0.375, 0.625, 0.875])
        cb = g.cell_box()
        assert cb.lo == (0.0,) and cb.hi == (1.0,)

    def test_validation(self):
        with pytest.raises(ValueError):
            UniformGrid((0.0,), -1.0, (4,))
        with pytest.raises(ValueError):
            UniformGrid((0.0,), 1.0, (0,))
        with pytest.raises(ValueError):
            UniformGrid((0.0, 0.0), 1.0, (4,))


class TestSegmentGeometry:
    def test_full_and_partial_chords(self):
        a = np.array([-1.0, 0.0])
        b = np.array([1.0, 0.0])
        c = np.array([0.0, 0.0])
        assert segment_ball_chord(a, b, c, 2.0)[0] == pytest.approx(2.0)
        assert segment_ball_chord(a, b, c, 0.5)[0] == pytest.approx(1.0)

    def test_offset_chord_closed_form(self):
        # horizontal segment against a ball centered 0.8 above it
        a = np.array([-2.0, 0.0])
        b = np.array([2.0, 0.0])
        c = np.array([0.0, 0.8])
        expected = 2.0 * math.sqrt(1.0 - 0.64)
        assert segment_ball_chord(a, b, c, 1.0)[0] == pytest.approx(expected)

    def test_disjoint_is_zero(self):
        a = np.array([-1.0, 0.0])
        b = np.array([1.0, 0.0])
        assert segment_ball_chord(a, b, np.array([0.0, 2.0]), 1.0)[0] == 0.0

    def test_many_centers_matches_single(self):
        a = np.array([-1.0, -0.5])
        b = np.array([1.5, 1.0])
        centers = np.array([[0.0, 0.0], [1.0, 1.0], [-2.0, 0.0]])
        radii = np.array([0.7, 1.1, 0.4])
        multi = segment_ball_chords_at(a, b, centers, radii)
        for i in range(3):
            single = segment_ball_chord(a, b, centers[i], radii[i])[0]
            assert multi[i] == pytest.approx(single)

    def test_segment_box_overlap(self):
        box = Box((0.0, 0.0), (1.0, 1.0))
        diag = segment_box_overlap(np.array([-1.0, -1.0]),
                                   np.array([2.0, 2.0]), box)
        assert diag == pytest.approx(math.sqrt(2.0))
        assert segment_box_overlap(np.array([2.0, 0.0]),
                                   np.array([3.0, 1.0]), box) == 0.0

    def test_point_segment_distance(self):
        a = np.array([0.0, 0.0])
        b = np.array([1.0, 0.0])
        pts = np.array([[0.5, 1.0], [-1.0, 0.0], [2.0, 0.0]])
        d = point_segment_distance(pts, a, b)
        assert np.allclose(d, [1.0, 1.0, 1.0])
