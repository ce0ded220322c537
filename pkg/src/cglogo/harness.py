"""Run orchestration: condition x backend x subset into an append-only log.

One JSONL record per (problem, condition, model), flushed as soon as it
is produced, so a crashed run resumes by rerunning the same spec:
already-logged tuples are skipped without touching the backend. The gold
label always comes from the unperturbed problem; perturbations apply
before prompt construction so perturbed prompts are exactly what the
answer source sees.

Problems are dispatched concurrently up to the backend's in-flight
limit; a single thread consumes results and writes the log, so aggregate
accuracy is independent of completion order and parallelism.
"""

from __future__ import annotations

import concurrent.futures
import datetime
import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .backend import BackendConfig, BackendError, make_backend
from .dataset import QUERY_POLICIES, Corpus, MissingFile, load_corpus, load_manifest
from .perturb import shuffle_categories, shuffle_query_sequence
from .prompt import Condition, MissingConcept, build_bundle
from .response import ParseFailure, extract_answer


@dataclass(frozen=True)
class RunSpec:
    condition: Condition
    backend: BackendConfig
    corpus_path: str
    manifest_path: str
    log_path: str
    run_seed: int = 0
    query_policy: str = "coin"
    image_root: str | None = None


@dataclass(frozen=True)
class EvalRecord:
    problem_id: str
    split: str
    condition: str
    model: str
    seed: int
    predicted: str | None  # None on failure
    failure: str | None  # None | "parse" | "transport"
    gold: str
    correct: bool
    latency_s: float
    raw_sha256: str
    timestamp: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass
class RunSummary:
    attempted: int = 0
    completed: int = 0
    skipped: int = 0
    parse_failures: int = 0
    transport_failures: int = 0
    accuracy: float | None = None

    def as_dict(self) -> dict:
        return dict(vars(self))


def read_log(path: str | Path) -> list[dict]:
    records = []
    path = Path(path)
    if not path.exists():
        return records
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def _expand_items(manifest: list[str], policy: str) -> list[tuple[str, str, str]]:
    """(record id, corpus problem id, effective policy) per evaluation item.

    The "both" policy evaluates each problem twice, once per held-out
    query, under suffixed record ids.
    """
    if policy == "both":
        return [
            (f"{pid}#{side}", pid, f"held-out-{side}")
            for pid in manifest
            for side in ("pos", "neg")
        ]
    return [(pid, pid, policy) for pid in manifest]


def _evaluate_one(
    corpus: Corpus, spec: RunSpec, condition: Condition, backend,
    record_id: str, problem_id: str, policy: str,
) -> EvalRecord:
    problem = corpus.problem(problem_id, policy=policy, seed=spec.run_seed)
    gold = problem.gold
    if condition.perturbation == "categories":
        problem = shuffle_categories(problem, condition.perturbation_seed)
    elif condition.perturbation == "query-sequence":
        problem = shuffle_query_sequence(problem, condition.perturbation_seed)

    bundle = build_bundle(problem, condition, spec.image_root)
    predicted: str | None = None
    failure: str | None = None
    latency = 0.0
    raw_hash = ""
    try:
        answer = backend.complete(bundle)
        latency = answer.latency_s
        raw_hash = answer.sha256
        try:
            predicted = extract_answer(answer.text, condition.dialect).conclusion
        except ParseFailure as err:
            failure = "parse"
            raw_hash = err.raw_hash
    except BackendError:
        failure = "transport"

    return EvalRecord(
        problem_id=record_id,
        split=problem.split.value,
        condition=condition.fingerprint(),
        model=spec.backend.model,
        seed=spec.run_seed,
        predicted=predicted,
        failure=failure,
        gold=gold,
        correct=predicted == gold,
        latency_s=round(latency, 6),
        raw_sha256=raw_hash,
        timestamp=datetime.datetime.now(datetime.timezone.utc).isoformat(),
    )


def run(spec: RunSpec) -> RunSummary:
    """Evaluate every manifest problem under the spec's condition.

    Fatal configuration problems (missing corpus/manifest, bad condition)
    raise before any backend call; per-problem transport errors become
    records marked as transport failures and scored incorrect.
    """
    corpus = load_corpus(spec.corpus_path)
    manifest = load_manifest(spec.manifest_path)
    if spec.query_policy not in QUERY_POLICIES:
        raise ValueError(f"unknown query policy {spec.query_policy!r}")
    condition = spec.condition.resolve_seed(spec.run_seed)
    backend = make_backend(spec.backend)
    fingerprint = condition.fingerprint()

    done = {
        (r["problem_id"], r["condition"], r["model"])
        for r in read_log(spec.log_path)
    }
    known = {p for s in corpus.splits() for p in corpus.ids(s)}
    missing = [pid for pid in manifest if pid not in known]
    if missing:
        raise MissingFile(f"manifest ids not in corpus: {missing[:5]}")
    if condition.concept_conditioned:
        # Config-class error: surface before the first backend call.
        conceptless = [pid for pid in manifest if not corpus.raw(pid).concept]
        if conceptless:
            raise MissingConcept(
                f"concept-conditioned run but problems lack concepts: {conceptless[:5]}"
            )

    summary = RunSummary()
    pending = []
    for record_id, pid, policy in _expand_items(manifest, spec.query_policy):
        if (record_id, fingerprint, spec.backend.model) in done:
            summary.skipped += 1
        else:
            pending.append((record_id, pid, policy))

    log_path = Path(spec.log_path)
    log_path.parent.mkdir(parents=True, exist_ok=True)
    workers = max(1, spec.backend.max_inflight)
    with log_path.open("a", encoding="utf-8") as log, \
            concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_evaluate_one, corpus, spec, condition, backend,
                        record_id, pid, policy)
            for record_id, pid, policy in pending
        ]
        for future in concurrent.futures.as_completed(futures):
            record = future.result()
            log.write(record.to_json() + "\n")
            log.flush()
            summary.attempted += 1
            summary.completed += 1
            if record.failure == "parse":
                summary.parse_failures += 1
            elif record.failure == "transport":
                summary.transport_failures += 1

    wanted = {rid for rid, _, _ in _expand_items(manifest, spec.query_policy)}
    relevant = [
        r for r in read_log(spec.log_path)
        if r["condition"] == fingerprint and r["model"] == spec.backend.model
        and r["problem_id"] in wanted
    ]
    if relevant:
        summary.accuracy = 100.0 * sum(r["correct"] for r in relevant) / len(relevant)
    return summary
