from __future__ import annotations

import hashlib
from pathlib import Path

import pytest

from cglogo.prompt import (
    AD,
    AP,
    IMAGE,
    Condition,
    ImageFileMissing,
    InvalidCondition,
    MissingConcept,
    USER_CLOSING,
    attach_images,
    build_bundle,
    build_system_prompt,
    build_user_prompt,
    parse_condition,
)

TEMPLATE_DIR = Path("src/cglogo/templates")

# Frozen audit hashes: a template edit must be deliberate and show up here.
TEMPLATE_SHA256 = {
    "cg_system.txt": "ce22045b06a1a29ba28370939491a8e785d819e23bfcfedcce736b7f1a57a8fb",
    "grounded_ad_system.txt": "fc199df596b71aea131975cc987979811bfe78ae6addc52ce34c98dd84d76c11",
    "grounded_ap_system.txt": "7e20921ae0b32cf304ae10f2baec7603c15123fd42c204bafd3671e96ac42dfa",
    "grounded_base_system.txt": "499edc2390bde5fb4bfb4bbbd78dac17baf6c1116c1f6683f45e54d89e01088c",
    "minimal_system.txt": "ffcdc62d3295ca028117df47461924d98631241b0230c1dd0919c86ee256339d",
    "visual_system.txt": "856fa8e195ef4829406a422400c80b38ba0f80a3267417a9e7f8a071c348a1df",
}


def test_templates_unchanged():
    for name, digest in TEMPLATE_SHA256.items():
        data = (Path(__file__).parent.parent / TEMPLATE_DIR / name).read_bytes()
        assert hashlib.sha256(data).hexdigest() == digest, f"{name} changed"


def test_system_prompts_byte_identical_to_templates():
    pairs = {
        "cg_system.txt": Condition(AD),
        "minimal_system.txt": Condition(AP, context="minimal"),
        "grounded_ap_system.txt": Condition(AP, grounding="query-image"),
        "grounded_ad_system.txt": Condition(AD, grounding="query-image"),
        "grounded_base_system.txt": Condition(AP, context="minimal",
                                              grounding="query-image"),
    }
    for name, cond in pairs.items():
        stored = (Path(__file__).parent.parent / TEMPLATE_DIR / name) \
            .read_text(encoding="utf-8").rstrip("\n")
        assert build_system_prompt(cond) == stored


class TestCondition:
    def test_parse_round_trip(self):
        for spec in ("ap", "ad", "image", "ap+concept", "ap,minimal", "ad,grounded",
                     "ap+concept,grounded", "ap,shuffle-cat:7", "ad,shuffle-seq:12"):
            cond = parse_condition(spec.replace("+concept", ",concept"))
            assert cond.fingerprint() == spec

    def test_seed_resolution(self):
        cond = parse_condition("ap,shuffle-cat")
        assert cond.perturbation_seed is None
        assert cond.resolve_seed(99).fingerprint() == "ap,shuffle-cat:99"
        pinned = parse_condition("ap,shuffle-cat:3")
        assert pinned.resolve_seed(99).perturbation_seed == 3

    def test_image_excludes_symbolic_knobs(self):
        with pytest.raises(InvalidCondition):
            Condition(IMAGE, concept_conditioned=True)
        with pytest.raises(InvalidCondition):
            Condition(IMAGE, context="minimal")
        with pytest.raises(InvalidCondition):
            Condition(IMAGE, perturbation="categories")

    def test_unknown_flags(self):
        with pytest.raises(InvalidCondition):
            parse_condition("ap,bogus")
        with pytest.raises(InvalidCondition):
            parse_condition("apx")

    def test_dialect(self):
        assert Condition(IMAGE).dialect == "cat"
        assert Condition(AP).dialect == "pos-neg"


class TestSystemPrompt:
    def test_cg_template_for_symbolic_full(self):
        text = build_system_prompt(Condition(AD))
        assert "You will NOT be shown any images." in text
        assert build_system_prompt(Condition(AP)) == text  # same family

    def test_minimal_has_no_formalism_explanation(self):
        text = build_system_prompt(Condition(AP, context="minimal"))
        assert "Input Context" not in text
        assert text.startswith("**Your Task and Required Output:**")

    def test_concept_line_inserted_once_before_task_block(self, worked_problem):
        cond = Condition(AP, concept_conditioned=True)
        text = build_system_prompt(cond, worked_problem.concept)
        line = f"Here is the overall concept behind the positive samples: {worked_problem.concept}"
        assert text.count("Here is the overall concept behind") == 1
        assert line in text
        assert text.index(line) < text.index("**Your Task and Required Output:**")

    def test_concept_never_otherwise(self):
        for cond in (Condition(AP), Condition(AD), Condition(AP, context="minimal"),
                     Condition(IMAGE)):
            assert "overall concept behind" not in build_system_prompt(cond, "spare")

    def test_missing_concept(self):
        with pytest.raises(MissingConcept):
            build_system_prompt(Condition(AP, concept_conditioned=True), None)

    def test_grounded_templates(self):
        ap = build_system_prompt(Condition(AP, grounding="query-image"))
        ad = build_system_prompt(Condition(AD, grounding="query-image"))
        base = build_system_prompt(Condition(AP, context="minimal", grounding="query-image"))
        assert "line_TYPE_LENGTH-TURNANGLE" in ap
        assert "both its action program and the final rendered image" in ad
        assert base.startswith("**Your Task and Required Output:**")
        assert "referencing the provided png image" in base

    def test_visual_template(self):
        text = build_system_prompt(Condition(IMAGE))
        assert "presented with 13 images" in text
        assert "The first 6 images are labeled 'cat_2'" in text
        assert "{" in text and text.count("{") == text.count("}")  # balanced braces


class TestUserPrompt:
    def test_ap_structure(self, worked_problem):
        text = build_user_prompt(worked_problem, Condition(AP))
        assert text.startswith("POSITIVE SET (6 descriptions):\n")
        assert "\n\nNEGATIVE SET (6 descriptions):\n" in text
        assert "\n\nQUERY (1 description):\n" in text
        assert text.endswith(USER_CLOSING)
        # 13 bracketed token lists in fixed order
        assert text.count('[["') == 13 or text.count("[[") >= 13

    def test_ap_blocks_in_order(self, worked_problem):
        import json

        from cglogo.grammar import serialize_image

        text = build_user_prompt(worked_problem, Condition(AP))
        first = json.dumps(serialize_image(worked_problem.positives[0]))
        seventh = json.dumps(serialize_image(worked_problem.negatives[0]))
        last = json.dumps(serialize_image(worked_problem.query))
        assert text.index(first) < text.index(seventh) < text.index(last)

    def test_ad_embeds_golden_descriptions(self, worked_problem):
        from conftest import golden_description

        text = build_user_prompt(worked_problem, Condition(AD))
        assert golden_description("positive") in text
        assert golden_description("negative") in text

    def test_ad_has_thirteen_blocks(self, worked_problem):
        text = build_user_prompt(worked_problem, Condition(AD))
        assert text.count("To draw figure 1, follow these steps:") == 13
        assert text.count("The figure is now complete.") == 13

    def test_image_placeholders(self, worked_problem):
        text = build_user_prompt(worked_problem, Condition(IMAGE))
        for k in range(1, 14):
            assert f"[Image {k}]" in text

    def test_perturbed_composition_keeps_gold(self, worked_problem):
        from cglogo.perturb import shuffle_query_sequence

        shuffled = shuffle_query_sequence(worked_problem, 4)
        assert shuffled.gold == worked_problem.gold
        text = build_user_prompt(shuffled, Condition(AP, perturbation="query-sequence",
                                                     perturbation_seed=4))
        assert text.count("[[") >= 13


class TestAttachments:
    def _make_images(self, root, problem_id, names):
        base = root / problem_id
        base.mkdir(parents=True)
        for name in names:
            (base / name).write_bytes(b"\x89PNG\r\n\x1a\nstub")

    def test_symbolic_empty(self, worked_problem):
        assert attach_images(worked_problem, Condition(AP), "/nowhere") == ()

    def test_grounded_single(self, worked_problem, tmp_path):
        self._make_images(tmp_path, worked_problem.id, ["query.png"])
        atts = attach_images(worked_problem, Condition(AP, grounding="query-image"), tmp_path)
        assert len(atts) == 1 and atts[0].role == "query"

    def test_visual_thirteen(self, worked_problem, tmp_path):
        names = [f"pos_{i}.png" for i in range(1, 7)]
        names += [f"neg_{i}.png" for i in range(1, 7)]
        names += ["query.png"]
        self._make_images(tmp_path, worked_problem.id, names)
        atts = attach_images(worked_problem, Condition(IMAGE), tmp_path)
        assert len(atts) == 13
        assert [a.role for a in atts] == ["pos"] * 6 + ["neg"] * 6 + ["query"]

    def test_missing_png(self, worked_problem, tmp_path):
        with pytest.raises(ImageFileMissing):
            attach_images(worked_problem, Condition(IMAGE), tmp_path)

    def test_bundle_invariant(self, worked_problem, tmp_path):
        bundle = build_bundle(worked_problem, Condition(AP))
        assert bundle.images == ()
        self._make_images(tmp_path, worked_problem.id, ["query.png"])
        grounded = build_bundle(
            worked_problem, Condition(AP, grounding="query-image"), tmp_path
        )
        assert len(grounded.images) == 1
