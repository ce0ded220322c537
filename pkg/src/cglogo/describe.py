"""Deterministic natural-language rendering of action programs.

Each image renders to a fixed text block:

    To draw figure 1, follow these steps:
    Step 1: draw a normal line of 0.300 units. Then, continue straight without turning.
    Step 2: draw a zigzag arc with a radius of 0.500 and sweeping 90.0 degrees. ...
    ...
    The figure is now complete.

Lines are separated by single newlines; step numbering is continuous
across the shapes of an image. Lengths and radii print with three
decimals, angles with one decimal rounded half away from zero. The sweep
angle prints as a magnitude, so the inverse parser assumes
counterclockwise sweeps (normalized field >= 0.5), which is how the
corpus encodes arcs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .grammar import (
    ArcAction,
    BasicAction,
    BongardImage,
    LineAction,
    OneStrokeShape,
    sweep_tenths,
    turn_tenths,
)

HEADER_TEMPLATE = "To draw figure {i}, follow these steps:"
FOOTER = "The figure is now complete."
NO_TURN_CLAUSE = " Then, continue straight without turning."

_HEADER_RE = re.compile(r"To draw figure (\d+), follow these steps:\Z")
_LINE_STEP_RE = re.compile(
    r"Step (\d+): draw a ([a-z_]+) line of ([01]\.\d{3}) units\.(.*)\Z"
)
_ARC_STEP_RE = re.compile(
    r"Step (\d+): draw a ([a-z_]+) arc with a radius of ([01]\.\d{3})"
    r" and sweeping (\d+\.\d) degrees\.(.*)\Z"
)
_TURN_CLAUSE_RE = re.compile(r" After that, turn (left|right) by (\d+\.\d) degrees\.\Z")


class TemplateMismatch(Exception):
    """Description text that does not match the rendering template."""

    def __init__(self, message: str, line_number: int):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


@dataclass(frozen=True)
class ActionDescription:
    figure_index: int
    lines: tuple[str, ...]  # header, one line per step, footer

    @property
    def text(self) -> str:
        return "\n".join(self.lines)


def _fmt_tenths(tenths: int) -> str:
    tenths = abs(tenths)
    return f"{tenths // 10}.{tenths % 10}"


def _fmt_milli(value: int) -> str:
    return f"{value // 1000}.{value % 1000:03d}"


def _turn_clause(turn_milli: int) -> str:
    if turn_milli == 500:
        return NO_TURN_CLAUSE
    tenths = turn_tenths(turn_milli)
    word = "left" if tenths > 0 else "right"
    return f" After that, turn {word} by {_fmt_tenths(tenths)} degrees."


def _step_line(k: int, action: BasicAction) -> str:
    if isinstance(action, LineAction):
        body = f"Step {k}: draw a {action.style} line of {_fmt_milli(action.length_milli)} units."
    else:
        body = (
            f"Step {k}: draw a {action.style} arc with a radius of "
            f"{_fmt_milli(action.radius_milli)} and sweeping "
            f"{_fmt_tenths(sweep_tenths(action.sweep_milli))} degrees."
        )
    return body + _turn_clause(action.turn_milli)


def render_description(image: BongardImage, figure_index: int = 1) -> ActionDescription:
    """Render an image as its stepwise English drawing procedure."""
    lines = [HEADER_TEMPLATE.format(i=figure_index)]
    k = 0
    for shape in image.shapes:
        for action in shape.actions:
            k += 1
            lines.append(_step_line(k, action))
    lines.append(FOOTER)
    return ActionDescription(figure_index, tuple(lines))


def _recover_turn(clause: str, line_number: int) -> int:
    if clause == NO_TURN_CLAUSE:
        return 500
    m = _TURN_CLAUSE_RE.match(clause)
    if not m:
        raise TemplateMismatch(f"unrecognized turn clause {clause!r}", line_number)
    word, deg = m.groups()
    tenths = int(deg.replace(".", ""))
    if tenths == 0:
        raise TemplateMismatch("zero-degree turn should be the straight clause", line_number)
    # Invert tenths = (t - 500) * 18 / 5 to the nearest thousandth. The
    # forward rounding error is < 0.14 thousandths, so recovery is exact.
    delta = _round_half_away(tenths * 5, 18)
    return 500 + delta if word == "left" else 500 - delta


def _round_half_away(num: int, den: int) -> int:
    return (2 * num + den) // (2 * den)


def _milli_from_text(text: str) -> int:
    return int(text[0]) * 1000 + int(text[2:])


def parse_description(text: str) -> BongardImage:
    """Parse a rendered description back into a single-shape image.

    Accepts exactly the output of render_description (a trailing newline
    and CRLF line endings are tolerated). Turn angles are recovered to the
    nearest thousandth; sweeps are assumed counterclockwise.
    """
    lines = text.replace("\r\n", "\n").rstrip("\n").split("\n")
    if not lines or not _HEADER_RE.match(lines[0]):
        raise TemplateMismatch("missing or malformed header", 1)
    if len(lines) < 3:
        raise TemplateMismatch("description has no steps", len(lines))
    if lines[-1] != FOOTER:
        raise TemplateMismatch("missing footer", len(lines))

    actions: list[BasicAction] = []
    for idx, line in enumerate(lines[1:-1], start=2):
        m = _LINE_STEP_RE.match(line)
        if m:
            step, style, length, clause = m.groups()
            action: BasicAction = LineAction(
                style, _milli_from_text(length), _recover_turn(clause, idx)
            )
        else:
            m = _ARC_STEP_RE.match(line)
            if not m:
                raise TemplateMismatch(f"unrecognized step line {line!r}", idx)
            step, style, radius, sweep_deg, clause = m.groups()
            sweep_milli = 500 + _round_half_away(int(sweep_deg.replace(".", "")) * 5, 36)
            action = ArcAction(
                style, _milli_from_text(radius), sweep_milli, _recover_turn(clause, idx)
            )
        if int(step) != idx - 1:
            raise TemplateMismatch(f"expected step {idx - 1}, saw {step}", idx)
        actions.append(action)
    return BongardImage((OneStrokeShape(tuple(actions)),))
