"""Command-line entry point for the evaluation pipeline.

Subcommands: import, sample, parse, describe, render-svg, perturb,
prompt, run, report. Usage errors exit 2, runtime errors exit 1. Where
stdout is documented as machine-parseable it is JSON.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import analysis, harness
from .backend import BackendConfig, BackendError
from .dataset import (
    DatasetError,
    SubsetSpec,
    import_corpus,
    load_corpus,
    sample_subset,
    write_manifest,
)
from .describe import render_description
from .grammar import GrammarError, parse_action, serialize_image
from .perturb import shuffle_categories, shuffle_query_sequence
from .prompt import PromptError, build_bundle, parse_condition
from .render import render_svg

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib


def _load_problem(args):
    corpus = load_corpus(args.corpus)
    return corpus.problem(args.problem_id, policy=args.policy, seed=args.seed)


def _problem_json(problem) -> dict:
    return {
        "id": problem.id,
        "split": problem.split.value,
        "concept": problem.concept,
        "pos": [serialize_image(img) for img in problem.positives],
        "neg": [serialize_image(img) for img in problem.negatives],
        "query": serialize_image(problem.query),
        "gold": problem.gold,
    }


def cmd_import(args) -> int:
    corpus, report = import_corpus(args.root)
    corpus.save(args.out)
    print(json.dumps({"counts": report.counts, "total": report.total,
                      "files": list(report.files)}))
    return 0


def cmd_sample(args) -> int:
    corpus = load_corpus(args.corpus)
    spec = SubsetSpec(per_split=args.per_split, seed=args.seed)
    ids = sample_subset(corpus, spec)
    write_manifest(args.out, ids, spec)
    print(json.dumps({"ids": len(ids), "out": str(args.out)}))
    return 0


def cmd_parse(args) -> int:
    for token in args.tokens:
        action = parse_action(token)
        doc = dataclasses.asdict(action)
        doc["kind"] = type(action).__name__.removesuffix("Action").lower()
        print(json.dumps(doc))
    return 0


def cmd_describe(args) -> int:
    problem = _load_problem(args)
    images = {"query": problem.query}
    if args.all:
        images = {f"pos_{i + 1}": img for i, img in enumerate(problem.positives)}
        images.update({f"neg_{i + 1}": img for i, img in enumerate(problem.negatives)})
        images["query"] = problem.query
    for name, image in images.items():
        print(f"# {name}")
        print(json.dumps(serialize_image(image)))
        print(render_description(image).text)
    return 0


def cmd_render_svg(args) -> int:
    problem = _load_problem(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = {f"pos_{i + 1}.svg": img for i, img in enumerate(problem.positives)}
    files.update({f"neg_{i + 1}.svg": img for i, img in enumerate(problem.negatives)})
    files["query.svg"] = problem.query
    for name, image in files.items():
        (out / name).write_text(render_svg(image), encoding="utf-8")
    print(json.dumps({"written": len(files), "dir": str(out)}))
    return 0


def cmd_perturb(args) -> int:
    problem = _load_problem(args)
    if args.mode == "categories":
        perturbed = shuffle_categories(problem, args.seed)
    else:
        perturbed = shuffle_query_sequence(problem, args.seed)
    print(json.dumps(_problem_json(perturbed)))
    return 0


def cmd_prompt(args) -> int:
    problem = _load_problem(args)
    condition = parse_condition(args.condition).resolve_seed(args.seed)
    if condition.perturbation == "categories":
        problem = shuffle_categories(problem, condition.perturbation_seed)
    elif condition.perturbation == "query-sequence":
        problem = shuffle_query_sequence(problem, condition.perturbation_seed)
    bundle = build_bundle(problem, condition, args.image_root)
    print(json.dumps({
        "condition": condition.fingerprint(),
        "system": bundle.system,
        "user": bundle.user,
        "images": [str(att.path) for att in bundle.images],
    }))
    return 0


def _run_spec_from_toml(path: str, cache_dir: str | None) -> harness.RunSpec:
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    try:
        run_doc = doc["run"]
        backend_doc = dict(doc["backend"])
    except KeyError as err:
        raise ValueError(f"run config missing section {err}") from err
    if cache_dir:
        backend_doc["cache_dir"] = cache_dir
    return harness.RunSpec(
        condition=parse_condition(run_doc["condition"]),
        backend=BackendConfig.from_dict(backend_doc),
        corpus_path=run_doc["corpus"],
        manifest_path=run_doc["manifest"],
        log_path=run_doc["log"],
        run_seed=int(run_doc.get("seed", 0)),
        query_policy=run_doc.get("query_policy", "coin"),
        image_root=run_doc.get("image_root"),
    )


def cmd_run(args) -> int:
    spec = _run_spec_from_toml(args.config, args.cache_dir)
    summary = harness.run(spec)
    print(json.dumps(summary.as_dict()))
    return 0


def cmd_report(args) -> int:
    records = []
    for log in args.logs:
        records.extend(harness.read_log(log))
    names = [n.strip() for n in args.tables.split(",") if n.strip()]
    reports = []
    for name in names:
        builder = analysis.REPORT_BUILDERS.get(name)
        if builder is None:
            raise ValueError(
                f"unknown table {name!r}; choose from {sorted(analysis.REPORT_BUILDERS)}"
            )
        reports.append(builder(records))
    fmt = {"md": "markdown"}.get(args.format, args.format)
    written = analysis.emit_report(reports, fmt, args.out)
    print(json.dumps({"written": [str(p) for p in written]}))
    return 0


def _add_problem_args(sub):
    sub.add_argument("problem_id")
    sub.add_argument("--corpus", required=True)
    sub.add_argument("--policy", default="coin", help="query policy (default coin)")
    sub.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cglogo",
        description="Componential-grammatical evaluation pipeline for Bongard-LOGO",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("import", help="ingest an upstream corpus")
    sub.add_argument("root")
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=cmd_import)

    sub = subs.add_parser("sample", help="draw a seeded evaluation subset")
    sub.add_argument("--corpus", required=True)
    sub.add_argument("--per-split", type=int, default=500)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=cmd_sample)

    sub = subs.add_parser("parse", help="parse action tokens")
    sub.add_argument("tokens", nargs="+")
    sub.set_defaults(func=cmd_parse)

    sub = subs.add_parser("describe", help="print program and description forms")
    _add_problem_args(sub)
    sub.add_argument("--all", action="store_true", help="include the support images")
    sub.set_defaults(func=cmd_describe)

    sub = subs.add_parser("render-svg", help="render a problem's images to SVG")
    _add_problem_args(sub)
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=cmd_render_svg)

    sub = subs.add_parser("perturb", help="apply a randomization control")
    _add_problem_args(sub)
    sub.add_argument("--mode", choices=("categories", "sequence"), required=True)
    sub.set_defaults(func=cmd_perturb)

    sub = subs.add_parser("prompt", help="print the exact prompt bundle")
    _add_problem_args(sub)
    sub.add_argument("--condition", required=True)
    sub.add_argument("--image-root")
    sub.set_defaults(func=cmd_prompt)

    sub = subs.add_parser("run", help="execute a run spec")
    sub.add_argument("--config", required=True)
    sub.add_argument("--cache-dir")
    sub.set_defaults(func=cmd_run)

    sub = subs.add_parser("report", help="aggregate record logs into tables")
    sub.add_argument("--logs", nargs="+", required=True)
    sub.add_argument(
        "--tables", default="table1,fig2,grounded,shuffle,asymmetry",
        help="comma list: table1,fig2,grounded,shuffle,asymmetry",
    )
    sub.add_argument("--format", choices=("md", "csv"), default="md")
    sub.add_argument("--out", default="reports")
    sub.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GrammarError, DatasetError, PromptError, BackendError,
            analysis.AnalysisError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
