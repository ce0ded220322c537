"""Typed LOGO-style action programs with bit-exact parsing and serialization.

Token grammar:

    action   = line | arc
    line     = "line_" STYLE "_" NUM "-" NUM          // length, turn
    arc      = "arc_" STYLE "_" NUM "_" NUM "-" NUM   // radius, sweep, turn
    STYLE    = [a-z_]+                                 // may contain underscores
    NUM      = ("0" | "1") "." digit digit digit       // in [0.000, 1.000]

All numeric fields are normalized into [0, 1] and carry exactly three
fraction digits. They are stored internally as integer thousandths so that
serialization reproduces the source token byte-for-byte; convert to float
only for geometry.

Angle conventions: a turn field t maps to (t - 0.5) * 360 degrees, an arc
sweep field s maps to (s - 0.5) * 720 degrees. Positive degrees mean a left
turn (counterclockwise), negative a right turn.

A program is nested: an image holds one or more one-stroke shapes, each a
non-empty sequence of line/arc actions. Programs are compared syntactically;
two different programs drawing the same figure are distinct values.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass

KNOWN_STYLES = frozenset({"normal", "zigzag", "triangle", "square", "circle"})

_STYLE_RE = re.compile(r"[a-z_]+\Z")
_NUM_RE = re.compile(r"[01]\.[0-9]{3}\Z")

MILLI_MAX = 1000  # fields live in [0, 1000] thousandths


class GrammarError(Exception):
    """Base class for action-program errors."""


class MalformedToken(GrammarError):
    """A token that does not match the action grammar.

    ``offset`` is the byte offset of the faulty component within the token.
    ``shape_index``/``action_index`` are filled in when the token was part
    of a nested program.
    """

    def __init__(self, message: str, token: str, offset: int = 0):
        self.token = token
        self.offset = offset
        self.shape_index: int | None = None
        self.action_index: int | None = None
        super().__init__(f"{message} (offset {offset} in {token!r})")

    def at(self, shape_index: int, action_index: int | None = None) -> "MalformedToken":
        self.shape_index = shape_index
        self.action_index = action_index
        return self


class EmptyShapeError(GrammarError):
    """An image with no shapes, or a shape with no actions."""


class OutOfRangeError(GrammarError):
    """A normalized value outside [0, 1]."""


@dataclass(frozen=True)
class LineAction:
    style: str
    length_milli: int  # thousandths, 0..1000
    turn_milli: int

    @property
    def length(self) -> float:
        return self.length_milli / 1000

    @property
    def turn_norm(self) -> float:
        return self.turn_milli / 1000


@dataclass(frozen=True)
class ArcAction:
    style: str
    radius_milli: int
    sweep_milli: int
    turn_milli: int

    @property
    def radius(self) -> float:
        return self.radius_milli / 1000

    @property
    def sweep_norm(self) -> float:
        return self.sweep_milli / 1000

    @property
    def turn_norm(self) -> float:
        return self.turn_milli / 1000


BasicAction = LineAction | ArcAction


@dataclass(frozen=True)
class OneStrokeShape:
    actions: tuple[BasicAction, ...]

    def __post_init__(self):
        if not self.actions:
            raise EmptyShapeError("shape has no actions")


@dataclass(frozen=True)
class BongardImage:
    shapes: tuple[OneStrokeShape, ...]

    def __post_init__(self):
        if not self.shapes:
            raise EmptyShapeError("image has no shapes")

    @property
    def actions(self) -> list[BasicAction]:
        """All actions in drawing order, across shapes."""
        return [a for shape in self.shapes for a in shape.actions]


@dataclass(frozen=True)
class DegreeValue:
    """Signed angle in degrees; positive = left turn, negative = right."""

    degrees: float

    @property
    def direction(self) -> str:
        if self.degrees > 0:
            return "left"
        if self.degrees < 0:
            return "right"
        return "straight"


def _parse_milli(field: str, token: str, offset: int) -> int:
    if not _NUM_RE.match(field):
        raise MalformedToken("numeric field must be [01].ddd", token, offset)
    value = int(field[0]) * 1000 + int(field[2:])
    if value > MILLI_MAX:
        raise MalformedToken("numeric field outside [0, 1]", token, offset)
    return value


def _check_style(style: str, token: str, offset: int) -> str:
    if not style or not _STYLE_RE.match(style):
        raise MalformedToken("style must be lowercase letters/underscores", token, offset)
    return style


def parse_action(token: str) -> BasicAction:
    """Parse a single action token.

    Raises MalformedToken (with the byte offset of the fault) on wrong
    arity, an unknown kind prefix, a non-numeric field, or a field outside
    [0, 1]. Unknown style words parse fine; see validate_image.
    """
    parts = token.split("_")
    kind = parts[0]
    if kind == "line":
        # line_STYLE_LENGTH-TURN; STYLE may itself contain underscores,
        # so the numeric pair is always the last segment.
        if len(parts) < 3:
            raise MalformedToken("line token needs style and numeric fields", token, 0)
        tail = parts[-1]
        style = "_".join(parts[1:-1])
        style_off = len("line_")
        _check_style(style, token, style_off)
        tail_off = style_off + len(style) + 1
        nums = tail.split("-")
        if len(nums) != 2:
            raise MalformedToken("line token needs LENGTH-TURN", token, tail_off)
        length = _parse_milli(nums[0], token, tail_off)
        turn = _parse_milli(nums[1], token, tail_off + len(nums[0]) + 1)
        return LineAction(style, length, turn)
    if kind == "arc":
        # arc_STYLE_RADIUS_SWEEP-TURN. The radius comes first: the worked
        # token/description pairs fix the order (0.500 radius, 0.625 sweep).
        if len(parts) < 4:
            raise MalformedToken("arc token needs style and three numeric fields", token, 0)
        style = "_".join(parts[1:-2])
        style_off = len("arc_")
        _check_style(style, token, style_off)
        radius_field = parts[-2]
        tail = parts[-1]
        radius_off = style_off + len(style) + 1
        radius = _parse_milli(radius_field, token, radius_off)
        tail_off = radius_off + len(radius_field) + 1
        nums = tail.split("-")
        if len(nums) != 2:
            raise MalformedToken("arc token needs SWEEP-TURN", token, tail_off)
        sweep = _parse_milli(nums[0], token, tail_off)
        turn = _parse_milli(nums[1], token, tail_off + len(nums[0]) + 1)
        return ArcAction(style, radius, sweep, turn)
    raise MalformedToken(f"unknown action kind {kind!r}", token, 0)


def _fmt_milli(value: int) -> str:
    return f"{value // 1000}.{value % 1000:03d}"


def serialize_action(action: BasicAction) -> str:
    """Serialize an action back to its token form (inverse of parse_action)."""
    if isinstance(action, LineAction):
        return (
            f"line_{action.style}_{_fmt_milli(action.length_milli)}"
            f"-{_fmt_milli(action.turn_milli)}"
        )
    return (
        f"arc_{action.style}_{_fmt_milli(action.radius_milli)}"
        f"_{_fmt_milli(action.sweep_milli)}-{_fmt_milli(action.turn_milli)}"
    )


def parse_image(shapes: list[list[str]]) -> BongardImage:
    """Parse a nested token list (one list of tokens per shape).

    MalformedToken errors are re-raised annotated with the shape and action
    indices of the offending token.
    """
    if not shapes:
        raise EmptyShapeError("image has no shapes")
    parsed_shapes = []
    for si, shape_tokens in enumerate(shapes):
        if not shape_tokens:
            raise EmptyShapeError(f"shape {si} has no actions")
        actions = []
        for ai, token in enumerate(shape_tokens):
            try:
                actions.append(parse_action(token))
            except MalformedToken as err:
                raise err.at(si, ai)
        parsed_shapes.append(OneStrokeShape(tuple(actions)))
    return BongardImage(tuple(parsed_shapes))


def serialize_image(image: BongardImage) -> list[list[str]]:
    return [[serialize_action(a) for a in shape.actions] for shape in image.shapes]


def validate_image(image: BongardImage) -> list[str]:
    """Return warnings for style tokens outside the known vocabulary."""
    warnings = []
    for si, shape in enumerate(image.shapes):
        for ai, action in enumerate(shape.actions):
            if action.style not in KNOWN_STYLES:
                warnings.append(f"shape {si} action {ai}: unknown style {action.style!r}")
    return warnings


def turn_to_degrees(turn_norm: float) -> DegreeValue:
    """Map a normalized turn field to degrees: (t - 0.5) * 360.

    0.5 is straight ahead; 1.0 is a full left half-turn (+180), 0.0 a full
    right half-turn (-180).
    """
    if not 0.0 <= turn_norm <= 1.0:
        raise OutOfRangeError(f"turn value {turn_norm} outside [0, 1]")
    return DegreeValue((turn_norm - 0.5) * 360.0)


def sweep_to_degrees(sweep_norm: float) -> DegreeValue:
    """Map a normalized arc sweep field to degrees: (s - 0.5) * 720.

    The x720 scale (range +/-360) is the unique affine map consistent with
    the published field/description pairs, e.g. 0.625 -> 90 degrees.
    """
    if not 0.0 <= sweep_norm <= 1.0:
        raise OutOfRangeError(f"sweep value {sweep_norm} outside [0, 1]")
    return DegreeValue((sweep_norm - 0.5) * 720.0)


def turn_tenths(turn_milli: int) -> int:
    """Turn angle in exact tenths of a degree, rounded half away from zero.

    Works in integers end to end: (t - 500) thousandths scale to degrees by
    360/1000, i.e. tenths = (t - 500) * 18 / 5.
    """
    return _div_round_half_away((turn_milli - 500) * 18, 5)


def sweep_tenths(sweep_milli: int) -> int:
    """Arc sweep in exact tenths of a degree (scale 720/1000)."""
    return _div_round_half_away((sweep_milli - 500) * 36, 5)


def _div_round_half_away(num: int, den: int) -> int:
    if num < 0:
        return -_div_round_half_away(-num, den)
    return (2 * num + den) // (2 * den)


def random_action(rng: random.Random) -> BasicAction:
    """Draw a random well-formed action (for fuzz and property tests)."""
    style = rng.choice(sorted(KNOWN_STYLES))
    if rng.random() < 0.5:
        return LineAction(style, rng.randint(0, 1000), rng.randint(0, 1000))
    return ArcAction(style, rng.randint(0, 1000), rng.randint(0, 1000), rng.randint(0, 1000))
