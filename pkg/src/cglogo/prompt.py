"""Prompt assembly for every experimental condition.

A Condition names the regime a run uses: symbolic representation (action
programs or action descriptions) or raw images, optional concept
conditioning, full or minimal context, optional query-image grounding,
and optional structure-breaking perturbation. System prompts come
verbatim from versioned template files; the user prompt always presents
the 13 examples in the fixed order pos x6, neg x6, query.
"""

from __future__ import annotations

import functools
import json
import re
from dataclasses import dataclass, replace
from pathlib import Path

from .dataset import BongardProblem
from .describe import render_description
from .grammar import BongardImage, serialize_image

AP, AD, IMAGE = "ap", "ad", "image"

CONCEPT_LINE = "Here is the overall concept behind the positive samples: {concept}"
_TASK_BLOCK = "**Your Task and Required Output:**"

USER_CLOSING = "Classify the query as 'positive' or 'negative'. Respond with JSON only."

_TEMPLATE_DIR = Path(__file__).parent / "templates"


class PromptError(Exception):
    pass


class InvalidCondition(PromptError):
    pass


class MissingConcept(PromptError):
    pass


class ImageFileMissing(PromptError):
    pass


@dataclass(frozen=True)
class Condition:
    representation: str  # ap | ad | image
    concept_conditioned: bool = False
    context: str = "full"  # full | minimal
    grounding: str = "none"  # none | query-image
    perturbation: str = "none"  # none | categories | query-sequence
    perturbation_seed: int | None = None

    def __post_init__(self):
        if self.representation not in (AP, AD, IMAGE):
            raise InvalidCondition(f"unknown representation {self.representation!r}")
        if self.context not in ("full", "minimal"):
            raise InvalidCondition(f"unknown context {self.context!r}")
        if self.grounding not in ("none", "query-image"):
            raise InvalidCondition(f"unknown grounding {self.grounding!r}")
        if self.perturbation not in ("none", "categories", "query-sequence"):
            raise InvalidCondition(f"unknown perturbation {self.perturbation!r}")
        if self.representation == IMAGE:
            # The visual baseline sends all 13 images; the symbolic-only
            # knobs have no defined meaning there.
            if self.concept_conditioned or self.context != "full" \
                    or self.grounding != "none" or self.perturbation != "none":
                raise InvalidCondition("image representation takes no symbolic variants")

    @property
    def wants_images(self) -> bool:
        return self.representation == IMAGE or self.grounding == "query-image"

    @property
    def dialect(self) -> str:
        """Answer dialect: the visual prompt asks for cat_1/cat_2."""
        return "cat" if self.representation == IMAGE else "pos-neg"

    def fingerprint(self) -> str:
        parts = [self.representation + ("+concept" if self.concept_conditioned else "")]
        if self.context == "minimal":
            parts.append("minimal")
        if self.grounding == "query-image":
            parts.append("grounded")
        if self.perturbation == "categories":
            parts.append(f"shuffle-cat:{self.perturbation_seed}")
        elif self.perturbation == "query-sequence":
            parts.append(f"shuffle-seq:{self.perturbation_seed}")
        return ",".join(parts)

    def resolve_seed(self, run_seed: int) -> "Condition":
        if self.perturbation != "none" and self.perturbation_seed is None:
            return replace(self, perturbation_seed=run_seed)
        return self


def parse_condition(spec: str) -> Condition:
    """Parse the condition mini-syntax.

    ap|ad|image [,concept] [,minimal] [,grounded] [,shuffle-cat:SEED|shuffle-seq:SEED]
    """
    parts = [p.strip() for p in spec.lower().split(",") if p.strip()]
    if not parts:
        raise InvalidCondition("empty condition spec")
    kwargs: dict = {"representation": parts[0]}
    for part in parts[1:]:
        if part == "concept":
            kwargs["concept_conditioned"] = True
        elif part == "minimal":
            kwargs["context"] = "minimal"
        elif part == "grounded":
            kwargs["grounding"] = "query-image"
        elif part.startswith(("shuffle-cat", "shuffle-seq")):
            name, _, seed = part.partition(":")
            kwargs["perturbation"] = "categories" if name == "shuffle-cat" else "query-sequence"
            if seed:
                try:
                    kwargs["perturbation_seed"] = int(seed)
                except ValueError:
                    raise InvalidCondition(f"bad perturbation seed {seed!r}") from None
        else:
            raise InvalidCondition(f"unknown condition flag {part!r}")
    return Condition(**kwargs)


@dataclass(frozen=True)
class Attachment:
    role: str  # pos | neg | query
    index: int  # 1-based within role; 0 for query
    path: Path


@dataclass(frozen=True)
class PromptBundle:
    system: str
    user: str
    images: tuple[Attachment, ...] = ()


@functools.lru_cache(maxsize=None)
def _template(name: str) -> str:
    return (_TEMPLATE_DIR / f"{name}.txt").read_text(encoding="utf-8").rstrip("\n")


def _insert_concept(template: str, concept: str) -> str:
    line = CONCEPT_LINE.format(concept=concept)
    if _TASK_BLOCK not in template:
        raise PromptError("template has no task block to anchor the concept line")
    return template.replace(_TASK_BLOCK, f"{line}\n\n{_TASK_BLOCK}", 1)


def build_system_prompt(condition: Condition, concept: str | None = None) -> str:
    """Return the verbatim system prompt for a condition.

    Concept conditioning inserts exactly one concept line right before the
    task/output block of the selected template.
    """
    if condition.representation == IMAGE:
        text = _template("visual_system")
        return text.replace("{n + m + 1}", "13").replace("{n}", "6").replace("{m}", "6")
    if condition.grounding == "query-image":
        if condition.context == "minimal":
            text = _template("grounded_base_system")
        elif condition.representation == AP:
            text = _template("grounded_ap_system")
        else:
            text = _template("grounded_ad_system")
    elif condition.context == "minimal":
        text = _template("minimal_system")
    else:
        text = _template("cg_system")
    if condition.concept_conditioned:
        if not concept:
            raise MissingConcept("condition is concept-conditioned but the concept is absent")
        text = _insert_concept(text, concept)
    return text


def _render_item(image: BongardImage, representation: str) -> str:
    if representation == AP:
        return json.dumps(serialize_image(image))
    return render_description(image, figure_index=1).text


def build_user_prompt(problem: BongardProblem, condition: Condition) -> str:
    """Assemble the fixed-order user prompt: pos x6, neg x6, query."""
    rep = condition.representation
    if rep == IMAGE:
        pos = [f"[Image {i}]" for i in range(1, 7)]
        neg = [f"[Image {i}]" for i in range(7, 13)]
        query = ["[Image 13]"]
    else:
        pos = [_render_item(img, rep) for img in problem.positives]
        neg = [_render_item(img, rep) for img in problem.negatives]
        query = [_render_item(problem.query, rep)]
    sep = "\n\n" if rep == AD else "\n"
    return (
        "POSITIVE SET (6 descriptions):\n" + sep.join(pos)
        + "\n\nNEGATIVE SET (6 descriptions):\n" + sep.join(neg)
        + "\n\nQUERY (1 description):\n" + sep.join(query)
        + f"\n\n{USER_CLOSING}"
    )


def attach_images(
    problem: BongardProblem, condition: Condition, image_root: str | Path
) -> tuple[Attachment, ...]:
    """Resolve the PNG attachments a condition needs.

    Layout under image_root: {problem_id}/pos_1.png .. pos_6.png,
    neg_1.png .. neg_6.png, query.png. The visual condition sends all 13,
    grounded conditions exactly the query.
    """
    if not condition.wants_images:
        return ()
    base = Path(image_root) / problem.id
    wanted: list[tuple[str, int, str]] = []
    if condition.representation == IMAGE:
        wanted += [("pos", i, f"pos_{i}.png") for i in range(1, 7)]
        wanted += [("neg", i, f"neg_{i}.png") for i in range(1, 7)]
    wanted.append(("query", 0, "query.png"))
    attachments = []
    for role, index, name in wanted:
        path = base / name
        if not path.exists():
            raise ImageFileMissing(f"{problem.id}: missing image file {path}")
        attachments.append(Attachment(role, index, path))
    return tuple(attachments)


def build_bundle(
    problem: BongardProblem, condition: Condition, image_root: str | Path | None = None
) -> PromptBundle:
    system = build_system_prompt(condition, problem.concept)
    user = build_user_prompt(problem, condition)
    images: tuple[Attachment, ...] = ()
    if condition.wants_images:
        if image_root is None:
            raise ImageFileMissing("condition needs images but no image root was given")
        images = attach_images(problem, condition, image_root)
    return PromptBundle(system=system, user=user, images=images)


def assert_single_concept_line(text: str) -> int:
    """Count concept lines (template audit helper)."""
    return len(re.findall(r"^Here is the overall concept behind the positive samples: ",
                          text, flags=re.M))
