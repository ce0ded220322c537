from __future__ import annotations

from pathlib import Path

import pytest

from cglogo.dataset import fixture_corpus_root, load_corpus
from cglogo.grammar import parse_image

DATA_DIR = Path(__file__).parent / "data"

# The two published worked programs (one shape of 14 actions each).
NEGATIVE_TOKENS = [
    "line_normal_0.300-0.500",
    "line_normal_0.424-0.875",
    "line_normal_0.300-0.875",
    "line_normal_0.800-0.167",
    "line_normal_0.800-0.833",
    "line_normal_0.800-0.833",
    "line_normal_0.200-0.500",
    "arc_zigzag_0.500_0.625-0.500",
    "line_normal_0.400-0.500",
    "arc_triangle_0.500_0.625-0.500",
    "line_normal_0.200-0.500",
    "arc_triangle_0.500_0.625-0.500",
    "line_triangle_0.400-0.500",
    "arc_normal_0.500_0.625-0.500",
]
POSITIVE_TOKENS = [
    "line_normal_1.000-0.500",
    "line_normal_0.283-0.875",
    "line_normal_0.200-0.875",
    "line_normal_0.583-0.086",
    "line_normal_0.500-0.664",
    "line_normal_0.500-0.750",
    "line_square_0.200-0.500",
    "arc_triangle_0.500_0.625-0.500",
    "line_normal_0.400-0.500",
    "arc_square_0.500_0.625-0.500",
    "line_circle_0.200-0.500",
    "arc_normal_0.500_0.625-0.500",
    "line_triangle_0.400-0.500",
    "arc_triangle_0.500_0.625-0.500",
]
ALL_WORKED_TOKENS = NEGATIVE_TOKENS + POSITIVE_TOKENS

WORKED_CONCEPT = "unbalanced trapezoid right_triangle AND uneven band four arcs"
WORKED_PROBLEM_ID = "bd_band_0000"


def golden_description(name: str) -> str:
    return (DATA_DIR / f"a1_{name}_description.txt").read_text(encoding="utf-8").rstrip("\n")


@pytest.fixture(scope="session")
def negative_image():
    return parse_image([NEGATIVE_TOKENS])


@pytest.fixture(scope="session")
def positive_image():
    return parse_image([POSITIVE_TOKENS])


@pytest.fixture(scope="session")
def fixture_corpus():
    return load_corpus(fixture_corpus_root())


@pytest.fixture(scope="session")
def worked_problem(fixture_corpus):
    # held-out-pos keeps both worked programs in the support sets
    # (pos[0] and neg[0]) and gives a deterministic gold label.
    return fixture_corpus.problem(WORKED_PROBLEM_ID, policy="held-out-pos")


def make_record(
    problem_id="p0",
    split="ff",
    condition="ap",
    model="m0",
    predicted="pos",
    gold="pos",
    failure=None,
):
    correct = failure is None and predicted == gold
    return {
        "problem_id": problem_id,
        "split": split,
        "condition": condition,
        "model": model,
        "seed": 0,
        "predicted": None if failure else predicted,
        "failure": failure,
        "gold": gold,
        "correct": correct,
        "latency_s": 0.0,
        "raw_sha256": "",
        "timestamp": "2026-01-01T00:00:00+00:00",
    }
