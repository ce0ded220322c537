from __future__ import annotations

import math
import xml.etree.ElementTree as ET

import pytest

from cglogo.grammar import parse_image
from cglogo.render import DegenerateArc, render_svg, trace_image


def _square_image(turn="0.750"):
    token = f"line_normal_0.300-{turn}"
    return parse_image([[token] * 4])


class TestGeometry:
    def test_square_closes(self):
        states = trace_image(_square_image(), scale=100.0)
        end = states[-1]
        assert math.hypot(end.x, end.y) < 1e-6

    def test_right_square_closes(self):
        states = trace_image(_square_image("0.250"), scale=100.0)
        end = states[-1]
        assert math.hypot(end.x, end.y) < 1e-6

    def test_two_half_circles_close(self):
        image = parse_image(
            [["arc_normal_0.500_0.750-0.500", "arc_normal_0.500_0.750-0.500"]]
        )
        states = trace_image(image, scale=100.0)
        end = states[-1]
        assert math.hypot(end.x, end.y) < 1e-6
        assert end.heading == pytest.approx(360.0)

    def test_line_advance_along_heading(self):
        image = parse_image([["line_normal_1.000-0.500"]])
        (state,) = trace_image(image, scale=100.0)
        assert (state.x, state.y) == pytest.approx((0.0, 100.0))  # starts heading up

    def test_left_semicircle_lands_left(self):
        # Sweep +180 on radius r ends 2r to the left of the start.
        image = parse_image([["arc_normal_0.500_0.750-0.500"]])
        (state,) = trace_image(image, scale=100.0)
        assert (state.x, state.y) == pytest.approx((-100.0, 0.0))
        assert state.heading == pytest.approx(180.0)

    def test_right_semicircle_lands_right(self):
        image = parse_image([["arc_normal_0.500_0.250-0.500"]])
        (state,) = trace_image(image, scale=100.0)
        assert (state.x, state.y) == pytest.approx((100.0, 0.0))
        assert state.heading == pytest.approx(-180.0)

    def test_turn_applied_after_action(self):
        image = parse_image([["line_normal_0.500-0.750", "line_normal_0.500-0.500"]])
        states = trace_image(image, scale=100.0)
        assert (states[1].x, states[1].y) == pytest.approx((-50.0, 50.0))


class TestSvg:
    def test_worked_image_is_wellformed(self, positive_image):
        doc = render_svg(positive_image, canvas_size=512, scale=120.0)
        root = ET.fromstring(doc)
        assert root.tag.endswith("svg")
        paths = [el for el in root.iter() if el.tag.endswith("path")]
        assert len(paths) == 14
        for el in paths:
            for field in el.attrib["d"].replace("M", " ").replace("L", " ") \
                    .replace("A", " ").split():
                assert math.isfinite(float(field))

    def test_determinism(self, positive_image):
        a = render_svg(positive_image, 512, 120.0)
        b = render_svg(positive_image, 512, 120.0)
        assert a == b

    def test_shapes_are_separate_groups(self):
        image = parse_image([["line_normal_0.300-0.500"], ["line_normal_0.400-0.500"]])
        doc = render_svg(image)
        assert doc.count('<g class="shape">') == 2

    def test_style_classes_present(self, negative_image):
        doc = render_svg(negative_image)
        assert 'class="style-zigzag"' in doc
        assert ".style-zigzag" in doc

    def test_bad_canvas(self, positive_image):
        with pytest.raises(ValueError):
            render_svg(positive_image, canvas_size=0)
        with pytest.raises(ValueError):
            render_svg(positive_image, canvas_size=512, scale=0)

    def test_degenerate_arc_warns(self):
        image = parse_image([["arc_normal_0.000_0.750-0.500"]])
        with pytest.warns(DegenerateArc):
            doc = render_svg(image)
        assert "<path" in doc

    def test_full_circle_rendered_as_two_arcs(self):
        image = parse_image([["arc_normal_0.500_1.000-0.500"]])
        doc = render_svg(image)
        assert doc.count("A ") == 2
