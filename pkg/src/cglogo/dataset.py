"""Corpus ingestion, canonical storage, query selection, and subset sampling.

Canonical on-disk form: one JSON document per evaluation split (ff.json,
bd.json, hd_comb.json, hd_novel.json) mapping problem id to
{"concept": str|null, "pos": [image...], "neg": [image...]}, where an
image is a nested token array (one list of action tokens per shape). An
import adapter maps the upstream action-program layout into this form so
the rest of the pipeline never sees upstream schema drift.

Each raw record carries at least 7 images per class; the first 6 become
the support set and a query policy picks the held-out query and its gold
label. Subset sampling is a pure function of (ids sorted lexicographically,
seed) so manifests are platform-independent.
"""

from __future__ import annotations

import enum
import hashlib
import json
import random
from dataclasses import dataclass
from pathlib import Path

from .grammar import BongardImage, parse_image, serialize_image

SUPPORT_SIZE = 6
QUERY_POLICIES = ("held-out-pos", "held-out-neg", "coin", "both")

# Published size of the upstream distribution (total problems per family;
# the 4,400 are the human-designed problems covering both HD splits).
UPSTREAM_PROBLEM_COUNTS = {"ff": 3600, "bd": 4000, "hd": 4400}


class DatasetError(Exception):
    pass


class MissingFile(DatasetError):
    pass


class SchemaMismatch(DatasetError):
    def __init__(self, message: str, path: str, trail: str = ""):
        self.path = path
        self.trail = trail
        where = f"{path}:{trail}" if trail else path
        super().__init__(f"{where}: {message}")


class InsufficientImages(DatasetError):
    pass


class CountExceedsSplit(DatasetError):
    pass


class Split(str, enum.Enum):
    FF = "ff"
    BD = "bd"
    HD_COMB = "hd_comb"
    HD_NOVEL = "hd_novel"

    @property
    def filename(self) -> str:
        return f"{self.value}.json"


@dataclass(frozen=True)
class RawProblem:
    """An ingested problem before query selection: >= 7 images per class."""

    id: str
    split: Split
    concept: str | None
    pos: tuple[BongardImage, ...]
    neg: tuple[BongardImage, ...]


@dataclass(frozen=True)
class BongardProblem:
    id: str
    split: Split
    concept: str | None
    positives: tuple[BongardImage, ...]
    negatives: tuple[BongardImage, ...]
    query: BongardImage
    gold: str  # "pos" or "neg"

    def __post_init__(self):
        if len(self.positives) != SUPPORT_SIZE or len(self.negatives) != SUPPORT_SIZE:
            raise ValueError("support sets must hold exactly 6 images each")
        if self.gold not in ("pos", "neg"):
            raise ValueError(f"gold label must be pos or neg, got {self.gold!r}")

    def validate_disjoint(self) -> None:
        """Check the query is not one of the support images.

        Enforced where problems enter the system (select_query); kept out
        of construction so perturbed copies stay cheap.
        """
        qtokens = serialize_image(self.query)
        for img in self.positives + self.negatives:
            if serialize_image(img) == qtokens:
                raise ValueError(f"{self.id}: query image duplicates a support image")


@dataclass(frozen=True)
class SubsetSpec:
    per_split: int = 500
    seed: int = 0


def stable_seed(*parts) -> int:
    """64-bit seed derived from the SHA-256 of the joined parts.

    Used wherever reproducibility must not depend on process hash
    randomization or execution order.
    """
    text = "|".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def select_query(raw: RawProblem, policy: str = "coin", seed: int = 0) -> BongardProblem:
    """Hold out one image as the query; the first 6 per class are support.

    policy "held-out-pos"/"held-out-neg" forces the query class; "coin"
    flips a per-problem coin derived from (seed, problem id).
    """
    if len(raw.pos) < SUPPORT_SIZE + 1 or len(raw.neg) < SUPPORT_SIZE + 1:
        raise InsufficientImages(
            f"{raw.id}: need at least 7 images per class, "
            f"got {len(raw.pos)} pos / {len(raw.neg)} neg"
        )
    if policy == "coin":
        rng = random.Random(stable_seed(seed, raw.id, "query-coin"))
        policy = "held-out-pos" if rng.random() < 0.5 else "held-out-neg"
    if policy == "held-out-pos":
        query, gold = raw.pos[SUPPORT_SIZE], "pos"
    elif policy == "held-out-neg":
        query, gold = raw.neg[SUPPORT_SIZE], "neg"
    else:
        raise ValueError(f"unknown query policy {policy!r}")
    problem = BongardProblem(
        id=raw.id,
        split=raw.split,
        concept=raw.concept,
        positives=raw.pos[:SUPPORT_SIZE],
        negatives=raw.neg[:SUPPORT_SIZE],
        query=query,
        gold=gold,
    )
    problem.validate_disjoint()
    return problem


def _parse_record(problem_id: str, record, path: str) -> tuple[str | None, list, list]:
    if isinstance(record, dict):
        if "pos" not in record or "neg" not in record:
            raise SchemaMismatch("record needs pos and neg keys", path, problem_id)
        return record.get("concept"), record["pos"], record["neg"]
    if isinstance(record, list) and len(record) == 2:
        return None, record[0], record[1]
    raise SchemaMismatch("record must be {concept,pos,neg} or [pos, neg]", path, problem_id)


def _parse_images(items, path: str, trail: str) -> tuple[BongardImage, ...]:
    if not isinstance(items, list) or not items:
        raise SchemaMismatch("expected a non-empty image list", path, trail)
    images = []
    for i, nested in enumerate(items):
        if not isinstance(nested, list):
            raise SchemaMismatch("image must be a nested token array", path, f"{trail}[{i}]")
        # Flat token lists (a single-shape image without the shape level)
        # are accepted and wrapped.
        if nested and isinstance(nested[0], str):
            nested = [nested]
        images.append(parse_image(nested))
    return tuple(images)


class Corpus:
    """Immutable set of raw problems, grouped by split and ordered by id."""

    def __init__(self, problems: dict[Split, dict[str, RawProblem]]):
        self._by_split = {
            split: dict(sorted(records.items())) for split, records in problems.items()
        }
        self._by_id = {p.id: p for records in self._by_split.values() for p in records.values()}

    def splits(self) -> list[Split]:
        return [s for s in Split if self._by_split.get(s)]

    def ids(self, split: Split) -> list[str]:
        return list(self._by_split.get(split, {}))

    def counts(self) -> dict[str, int]:
        return {s.value: len(self._by_split.get(s, {})) for s in Split}

    def raw(self, problem_id: str) -> RawProblem:
        try:
            return self._by_id[problem_id]
        except KeyError:
            raise MissingFile(f"unknown problem id {problem_id!r}") from None

    def problem(self, problem_id: str, policy: str = "coin", seed: int = 0) -> BongardProblem:
        return select_query(self.raw(problem_id), policy, seed)

    def save(self, root: str | Path) -> None:
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        for split in Split:
            records = self._by_split.get(split, {})
            doc = {
                pid: {
                    "concept": p.concept,
                    "pos": [serialize_image(img) for img in p.pos],
                    "neg": [serialize_image(img) for img in p.neg],
                }
                for pid, p in records.items()
            }
            (root / split.filename).write_text(
                json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8"
            )


def load_corpus(root: str | Path) -> Corpus:
    """Load a canonical corpus directory (one JSON per split)."""
    root = Path(root)
    if not root.is_dir():
        raise MissingFile(f"corpus directory not found: {root}")
    problems: dict[Split, dict[str, RawProblem]] = {}
    found = False
    for split in Split:
        path = root / split.filename
        if not path.exists():
            continue
        found = True
        doc = _load_json(path)
        if not isinstance(doc, dict):
            raise SchemaMismatch("split document must map problem id to record", str(path))
        records = {}
        for pid, record in doc.items():
            concept, pos, neg = _parse_record(pid, record, str(path))
            records[pid] = RawProblem(
                id=pid,
                split=split,
                concept=concept,
                pos=_parse_images(pos, str(path), f"{pid}.pos"),
                neg=_parse_images(neg, str(path), f"{pid}.neg"),
            )
        problems[split] = records
    if not found:
        raise MissingFile(f"no split files ({Split.FF.filename}, ...) under {root}")
    return Corpus(problems)


def _load_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise SchemaMismatch(f"invalid JSON: {err}", str(path)) from err


# Upstream layouts name their action-program files by problem family; the
# human-designed family covers both HD splits, told apart by id.
_UPSTREAM_FILES = {
    "ff_action_programs.json": (Split.FF,),
    "bd_action_programs.json": (Split.BD,),
    "hd_action_programs.json": (Split.HD_COMB, Split.HD_NOVEL),
    "hd_comb_action_programs.json": (Split.HD_COMB,),
    "hd_novel_action_programs.json": (Split.HD_NOVEL,),
}


@dataclass(frozen=True)
class ImportReport:
    counts: dict[str, int]
    files: tuple[str, ...]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def matches_upstream_statistics(self) -> bool:
        """True when per-family totals equal the published distribution."""
        hd = self.counts.get("hd_comb", 0) + self.counts.get("hd_novel", 0)
        return (
            self.counts.get("ff", 0) == UPSTREAM_PROBLEM_COUNTS["ff"]
            and self.counts.get("bd", 0) == UPSTREAM_PROBLEM_COUNTS["bd"]
            and hd == UPSTREAM_PROBLEM_COUNTS["hd"]
        )


def import_corpus(root: str | Path) -> tuple[Corpus, ImportReport]:
    """Ingest an upstream action-program directory into a Corpus.

    Recognizes {ff,bd,hd[,hd_comb,hd_novel]}_action_programs.json files;
    records may be {concept,pos,neg} objects or bare [pos, neg] pairs.
    When a combined hd file is present, ids containing "novel" land in
    HD_NOVEL, the rest in HD_COMB.
    """
    root = Path(root)
    if not root.is_dir():
        raise MissingFile(f"upstream directory not found: {root}")
    problems: dict[Split, dict[str, RawProblem]] = {s: {} for s in Split}
    seen_files = []
    for name, targets in _UPSTREAM_FILES.items():
        path = root / name
        if not path.exists():
            continue
        seen_files.append(name)
        doc = _load_json(path)
        if not isinstance(doc, dict):
            raise SchemaMismatch("expected problem-id mapping", str(path))
        for pid, record in sorted(doc.items()):
            concept, pos, neg = _parse_record(pid, record, str(path))
            if len(targets) == 1:
                split = targets[0]
            else:
                split = Split.HD_NOVEL if "novel" in pid else Split.HD_COMB
            problems[split][pid] = RawProblem(
                id=pid,
                split=split,
                concept=concept,
                pos=_parse_images(pos, str(path), f"{pid}.pos"),
                neg=_parse_images(neg, str(path), f"{pid}.neg"),
            )
    if not seen_files:
        raise MissingFile(f"no *_action_programs.json files under {root}")
    corpus = Corpus(problems)
    return corpus, ImportReport(counts=corpus.counts(), files=tuple(seen_files))


def sample_subset(corpus: Corpus, spec: SubsetSpec) -> list[str]:
    """Draw per-split ids uniformly without replacement, deterministically.

    The draw happens over ids sorted lexicographically, with a per-split
    RNG derived from (seed, split), so the result is independent of load
    order and platform.
    """
    if spec.per_split < 0:
        raise ValueError("per_split must be nonnegative")
    subset = []
    for split in corpus.splits():
        ids = corpus.ids(split)
        if spec.per_split > len(ids):
            raise CountExceedsSplit(
                f"{split.value}: requested {spec.per_split} of {len(ids)} problems"
            )
        rng = random.Random(stable_seed(spec.seed, split.value, "subset"))
        subset.extend(rng.sample(ids, spec.per_split))
    return subset


def write_manifest(path: str | Path, ids: list[str], spec: SubsetSpec) -> None:
    doc = {"seed": spec.seed, "per_split": spec.per_split, "ids": ids}
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_manifest(path: str | Path) -> list[str]:
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"manifest not found: {path}")
    doc = _load_json(path)
    if not isinstance(doc, dict) or "ids" not in doc:
        raise SchemaMismatch("manifest must contain an ids list", str(path))
    return list(doc["ids"])


def fixture_corpus_root() -> Path:
    """Path of the bundled 8-problem sample corpus."""
    return Path(__file__).parent / "fixtures" / "corpus"
