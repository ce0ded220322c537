"""Extraction of the constrained JSON answer from raw model output.

Models are asked to answer with a single JSON object holding Analysis,
Rule, Test Image, and Conclusion keys. Real outputs arrive wrapped in
code fences, prose, or reasoning traces, so extraction scans for the
first balanced JSON object that carries a Conclusion key and normalizes
its value. Anything that fails to yield a pos/neg verdict is a
ParseFailure, which downstream scoring counts as incorrect (never drops).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

_KEYS = ("Analysis", "Rule", "Test Image", "Conclusion")

# Bounded synonym sets; anything else is a failure by design.
_POS_WORDS = {"pos", "positive"}
_NEG_WORDS = {"neg", "negative"}


class ParseFailure(Exception):
    """No usable conclusion in the raw output. Carries the text's hash."""

    def __init__(self, message: str, raw: str):
        self.raw_hash = hashlib.sha256(raw.encode()).hexdigest()
        super().__init__(f"{message} (raw sha256 {self.raw_hash[:12]})")


@dataclass(frozen=True)
class ParsedAnswer:
    analysis: str
    rule: str
    test_image: str
    conclusion: str  # "pos" | "neg"

    def to_json(self) -> str:
        return json.dumps(
            {
                "Analysis": self.analysis,
                "Rule": self.rule,
                "Test Image": self.test_image,
                "Conclusion": self.conclusion,
            }
        )


def _scan_balanced(text: str, start: int) -> int | None:
    """End index (exclusive) of the balanced object opening at start."""
    depth = 0
    in_string = False
    escaped = False
    for j in range(start, len(text)):
        ch = text[j]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return j + 1
    return None


def _balanced_objects(text: str):
    """Yield balanced {...} candidates in order of their opening brace.

    Candidates may nest; a Conclusion buried inside a wrapper object is
    still found once the wrapper itself is rejected.
    """
    i = 0
    while i < len(text):
        if text[i] == "{":
            end = _scan_balanced(text, i)
            if end is not None:
                yield text[i:end]
        i += 1


def _lookup(obj: dict, key: str) -> str | None:
    for k, v in obj.items():
        if isinstance(k, str) and k.strip().lower() == key.lower():
            return v if isinstance(v, str) else json.dumps(v)
    return None


def _normalize_conclusion(value: str, dialect: str) -> str | None:
    word = value.strip().lower()
    if dialect == "cat":
        # Listing-style visual outputs say cat_2 (positive) / cat_1
        # (negative), sometimes with the parenthetical attached.
        if word.startswith("cat_2"):
            return "pos"
        if word.startswith("cat_1"):
            return "neg"
    if word in _POS_WORDS:
        return "pos"
    if word in _NEG_WORDS:
        return "neg"
    return None


def extract_answer(raw: str, dialect: str = "pos-neg") -> ParsedAnswer:
    """Pull the structured answer out of raw model text.

    dialect "pos-neg" expects pos/neg conclusions; "cat" additionally maps
    cat_2 -> pos and cat_1 -> neg. The first balanced JSON object that has
    a Conclusion key wins; missing other keys default to empty strings.

    Raises ParseFailure when no balanced object yields a usable verdict.
    """
    for candidate in _balanced_objects(raw):
        try:
            obj = json.loads(candidate)
        except json.JSONDecodeError:
            continue
        if not isinstance(obj, dict):
            continue
        conclusion_text = _lookup(obj, "Conclusion")
        if conclusion_text is None:
            continue
        conclusion = _normalize_conclusion(conclusion_text, dialect)
        if conclusion is None:
            raise ParseFailure(f"unrecognized conclusion {conclusion_text!r}", raw)
        return ParsedAnswer(
            analysis=_lookup(obj, "Analysis") or "",
            rule=_lookup(obj, "Rule") or "",
            test_image=_lookup(obj, "Test Image") or "",
            conclusion=conclusion,
        )
    raise ParseFailure("no JSON object with a Conclusion key", raw)
