"""Turtle-graphics interpreter emitting SVG for visual validation.

The turtle starts at the canvas center heading up; positive angles turn
counterclockwise. A line advances by length * scale; an arc follows a
circle of radius * scale through its sweep angle (positive sweeps curve
left) and leaves the heading rotated by the sweep. After every action the
turtle additionally rotates by the action's turn angle.

Stroke styles are not drawn as decorative glyphs; every action is a plain
stroke carrying a CSS class named after its style. Output is deterministic
byte-for-byte for a given image.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .grammar import BongardImage, LineAction, sweep_to_degrees, turn_to_degrees


class DegenerateArc(UserWarning):
    """Radius-zero arc with a nonzero sweep; rendered as a point."""


@dataclass
class TurtleState:
    x: float
    y: float
    heading: float  # degrees, 0 = up, counterclockwise positive


def _unit(heading: float) -> tuple[float, float]:
    rad = math.radians(heading)
    return (-math.sin(rad), math.cos(rad))


def _fmt(v: float) -> str:
    if v == 0:
        v = 0.0  # avoid "-0.0000"
    return f"{v:.4f}"


class _Path:
    """Collects one action's path data in math coordinates (y up)."""

    def __init__(self, cx: float, cy: float):
        self.cx = cx
        self.cy = cy
        self.parts: list[str] = []

    def _pt(self, x: float, y: float) -> str:
        return f"{_fmt(self.cx + x)} {_fmt(self.cy - y)}"

    def move(self, x: float, y: float):
        self.parts.append(f"M {self._pt(x, y)}")

    def line(self, x: float, y: float):
        self.parts.append(f"L {self._pt(x, y)}")

    def arc(self, r: float, sweep: float, x: float, y: float):
        # Flipping y preserves visual orientation, so a positive
        # (counterclockwise) sweep is SVG sweep-flag 0.
        large = 1 if abs(sweep) > 180 else 0
        flag = 0 if sweep > 0 else 1
        self.parts.append(f"A {_fmt(r)} {_fmt(r)} 0 {large} {flag} {self._pt(x, y)}")

    @property
    def d(self) -> str:
        return " ".join(self.parts)


def _step(state: TurtleState, action, scale: float) -> list[tuple[float, ...]]:
    """Advance the turtle; return arc/line segments as drawing ops."""
    ops = []
    if isinstance(action, LineAction):
        dx, dy = _unit(state.heading)
        length = action.length * scale
        state.x += dx * length
        state.y += dy * length
        ops.append(("L", state.x, state.y))
    else:
        sweep = sweep_to_degrees(action.sweep_norm).degrees
        r = action.radius * scale
        if sweep != 0 and r == 0:
            # Zero-length segment; visible as a dot via the round linecap.
            warnings.warn("arc with zero radius and nonzero sweep", DegenerateArc)
            ops.append(("L", state.x, state.y))
            state.heading += sweep
        elif sweep != 0:
            side = 1.0 if sweep > 0 else -1.0
            ccx, ccy = _unit(state.heading + 90 * side)
            cx = state.x + r * ccx
            cy = state.y + r * ccy
            # Split sweeps over 180 degrees so endpoints never coincide
            # with the start (a full circle would otherwise collapse).
            halves = [sweep / 2, sweep / 2] if abs(sweep) > 180 else [sweep]
            angle = state.heading - 90 * side
            for part in halves:
                angle += part
                ex, ey = _unit(angle)
                state.x = cx + r * ex
                state.y = cy + r * ey
                ops.append(("A", r, part, state.x, state.y))
            state.heading += sweep
    state.heading += turn_to_degrees(action.turn_norm).degrees
    return ops


def trace_image(image: BongardImage, scale: float) -> list[TurtleState]:
    """Turtle states after each action, starting from the origin. Test aid."""
    state = TurtleState(0.0, 0.0, 0.0)
    out = []
    for shape in image.shapes:
        for action in shape.actions:
            _step(state, action, scale)
            out.append(TurtleState(state.x, state.y, state.heading))
    return out


def render_svg(image: BongardImage, canvas_size: int = 512, scale: float = 160.0) -> str:
    """Render an image to an SVG 1.1 document.

    Each shape is a <g> of per-action <path> elements classed by stroke
    style; consecutive actions share endpoints, separate shapes restart at
    the pen position without a connecting segment.
    """
    if canvas_size <= 0:
        raise ValueError("canvas_size must be positive")
    if scale <= 0:
        raise ValueError("scale must be positive")

    center = canvas_size / 2
    state = TurtleState(0.0, 0.0, 0.0)
    styles: list[str] = []
    groups: list[str] = []
    for shape in image.shapes:
        paths = []
        for action in shape.actions:
            start = (state.x, state.y)
            ops = _step(state, action, scale)
            path = _Path(center, center)
            path.move(*start)
            for op in ops:
                if op[0] == "L":
                    path.line(op[1], op[2])
                else:
                    _, r, part, ex, ey = op
                    path.arc(r, part, ex, ey)
            if action.style not in styles:
                styles.append(action.style)
            paths.append(f'    <path class="style-{action.style}" d="{path.d}"/>')
        groups.append('  <g class="shape">\n' + "\n".join(paths) + "\n  </g>")

    css = "\n".join(
        f"    .style-{s} {{ stroke: black; fill: none; stroke-width: 2; "
        "stroke-linecap: round; }" for s in styles
    )
    body = "\n".join(groups)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{canvas_size}" height="{canvas_size}" '
        f'viewBox="0 0 {canvas_size} {canvas_size}">\n'
        f"  <style>\n{css}\n  </style>\n"
        f"{body}\n"
        f"</svg>\n"
    )
