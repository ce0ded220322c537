"""Componential-grammatical evaluation pipeline for Bongard-LOGO.

Parse and serialize LOGO-style action programs, render them as
deterministic English action descriptions and SVG drawings, assemble
prompts for every experimental condition, run them against chat-model
backends or the built-in offline reasoner, and aggregate the results.
"""

from .grammar import (
    ArcAction,
    BasicAction,
    BongardImage,
    LineAction,
    OneStrokeShape,
    parse_action,
    parse_image,
    serialize_action,
    serialize_image,
    sweep_to_degrees,
    turn_to_degrees,
)
from .describe import ActionDescription, parse_description, render_description
from .dataset import BongardProblem, Corpus, Split, SubsetSpec, load_corpus, sample_subset
from .prompt import Condition, PromptBundle, build_bundle, parse_condition
from .response import ParsedAnswer, ParseFailure, extract_answer

__version__ = "0.1.0"

__all__ = [
    "ActionDescription",
    "ArcAction",
    "BasicAction",
    "BongardImage",
    "BongardProblem",
    "Condition",
    "Corpus",
    "LineAction",
    "OneStrokeShape",
    "ParseFailure",
    "ParsedAnswer",
    "PromptBundle",
    "Split",
    "SubsetSpec",
    "build_bundle",
    "extract_answer",
    "load_corpus",
    "parse_action",
    "parse_condition",
    "parse_description",
    "parse_image",
    "render_description",
    "sample_subset",
    "serialize_action",
    "serialize_image",
    "sweep_to_degrees",
    "turn_to_degrees",
]
