"""Aggregation of evaluation records and published per-model fixtures.

Produces grouped accuracy tables, per-model deltas against the
minimal-context baseline, mean +/- sample standard deviation summaries,
and the correctness-by-class chi-square test. The published per-model
result tables ship as versioned CSV fixtures so this layer is fully
testable with zero model calls.

Conventions: accuracy = 100 * correct / n; std uses the n-1 denominator;
the human-designed (hd) category is the mean of the hd_comb and hd_novel
split accuracies; display rounding is one decimal, half away from zero,
applied only at emission. Parse failures count as incorrect and their
rate is reported as its own column, never silently folded.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

_FIXTURE_DIR = Path(__file__).parent / "fixtures"

CATEGORIES = ("ff", "bd", "hd")
SPLITS = ("ff", "bd", "hd_comb", "hd_novel")
DELTA_NAMES = ("ad-base", "ap-base", "concept-on-ap")


class AnalysisError(Exception):
    pass


class EmptyGroup(AnalysisError):
    pass


class ModelSetMismatch(AnalysisError):
    pass


class GroupTooSmall(AnalysisError):
    pass


class DegenerateMarginal(AnalysisError):
    pass


class MissingClass(AnalysisError):
    pass


def round1(value: float) -> float:
    """One-decimal display rounding, ties away from zero."""
    return float(Decimal(repr(value)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def fmt1(value: float) -> str:
    return f"{round1(value):.1f}"


# ---------------------------------------------------------------------------
# Record-level aggregation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResultRow:
    n: int
    correct: int
    parse_failures: int

    @property
    def accuracy(self) -> float:
        return 100.0 * self.correct / self.n

    @property
    def parse_failure_rate(self) -> float:
        return 100.0 * self.parse_failures / self.n


@dataclass(frozen=True)
class ResultTable:
    group_by: tuple[str, ...]
    rows: dict[tuple, ResultRow]


def accuracy_table(records: list[dict], group_by: tuple[str, ...]) -> ResultTable:
    """Group records by the given keys and compute per-group accuracy."""
    if not records:
        raise EmptyGroup("no records to aggregate")
    buckets: dict[tuple, list[dict]] = {}
    for record in records:
        key = tuple(record[k] for k in group_by)
        buckets.setdefault(key, []).append(record)
    rows = {
        key: ResultRow(
            n=len(items),
            correct=sum(bool(r["correct"]) for r in items),
            parse_failures=sum(r.get("failure") == "parse" for r in items),
        )
        for key, items in sorted(buckets.items())
    }
    return ResultTable(group_by, rows)


def category_accuracy(records: list[dict], category: str) -> float:
    """Accuracy for a category; hd averages its two split accuracies."""
    if category == "hd":
        parts = [category_accuracy(records, s) for s in ("hd_comb", "hd_novel")]
        return sum(parts) / len(parts)
    subset = [r for r in records if r["split"] == category]
    if not subset:
        raise EmptyGroup(f"no records for split {category}")
    return 100.0 * sum(bool(r["correct"]) for r in subset) / len(subset)


# ---------------------------------------------------------------------------
# Per-model accuracy tables (published fixtures or log-derived)
# ---------------------------------------------------------------------------

class ModelTable:
    """Accuracies keyed by (model, condition, split).

    Conditions: base (minimal-context), ad, ap, ad+c, ap+c. The derived
    hd category is the mean of hd_comb and hd_novel.
    """

    def __init__(self, values: dict[tuple[str, str, str], float]):
        self._values = dict(values)
        self.models = sorted({m for m, _, _ in values})

    def value(self, model: str, condition: str, category: str) -> float:
        if category == "hd":
            return (
                self.value(model, condition, "hd_comb")
                + self.value(model, condition, "hd_novel")
            ) / 2
        try:
            return self._values[(model, condition, category)]
        except KeyError:
            raise ModelSetMismatch(
                f"no value for model={model} condition={condition} split={category}"
            ) from None

    def has(self, model: str, condition: str, category: str) -> bool:
        try:
            self.value(model, condition, category)
            return True
        except ModelSetMismatch:
            return False

    def pooled(self, condition: str, category: str) -> float:
        """Mean accuracy across all models (each model weighs equally)."""
        if not self.models:
            raise EmptyGroup("model table is empty")
        return statistics.fmean(self.value(m, condition, category) for m in self.models)


def load_model_table(path: str | Path | None = None) -> ModelTable:
    """Load a tidy model,condition,split,accuracy CSV (bundled by default)."""
    path = Path(path) if path else _FIXTURE_DIR / "model_results.csv"
    values = {}
    with path.open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            values[(row["model"], row["condition"], row["split"])] = float(row["accuracy"])
    if not values:
        raise EmptyGroup(f"no rows in {path}")
    return ModelTable(values)


def load_grounded_table(path: str | Path | None = None) -> ModelTable:
    return load_model_table(path or _FIXTURE_DIR / "grounded_results.csv")


def load_shuffle_table(path: str | Path | None = None) -> ModelTable:
    """Shuffle fixture; conditions are shuffle-cat and shuffle-seq."""
    return load_model_table(path or _FIXTURE_DIR / "shuffle_results.csv")


@dataclass(frozen=True)
class DeltaTable:
    """Per-model percentage-point changes between symbolic conditions.

    ad-base and ap-base measure gains over the minimal-context baseline;
    concept-on-ap is the increment from ap to ap+c.
    """

    values: dict[tuple[str, str, str], float]  # (model, category, delta)
    models: tuple[str, ...]

    def value(self, model: str, category: str, delta: str) -> float:
        return self.values[(model, category, delta)]

    def mean(self, category: str, delta: str) -> float:
        return statistics.fmean(self.value(m, category, delta) for m in self.models)


def delta_table(table: ModelTable, categories: tuple[str, ...] = CATEGORIES) -> DeltaTable:
    pairs = {"ad-base": ("ad", "base"), "ap-base": ("ap", "base"),
             "concept-on-ap": ("ap+c", "ap")}
    values = {}
    for model in table.models:
        for category in categories:
            for name, (hi, lo) in pairs.items():
                values[(model, category, name)] = (
                    table.value(model, hi, category) - table.value(model, lo, category)
                )
    return DeltaTable(values, tuple(table.models))


def grouped_mean_std(values: list[float]) -> tuple[float, float]:
    """Arithmetic mean and sample (n-1) standard deviation."""
    if len(values) < 2:
        raise GroupTooSmall(f"need at least 2 values, got {len(values)}")
    return statistics.fmean(values), statistics.stdev(values)


# ---------------------------------------------------------------------------
# Chi-square and class asymmetry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Contingency2x2:
    """Counts [[a, b], [c, d]], rows = correct/incorrect, cols = pos/neg."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if min(self.a, self.b, self.c, self.d) < 0:
            raise ValueError("contingency counts must be nonnegative")


def chi_square(table: Contingency2x2) -> float:
    """Pearson statistic, df = 1, no continuity correction."""
    a, b, c, d = table.a, table.b, table.c, table.d
    n = a + b + c + d
    r1, r2, c1, c2 = a + b, c + d, a + c, b + d
    if min(r1, r2, c1, c2) == 0:
        raise DegenerateMarginal("all marginals must be positive")
    stat = 0.0
    for observed, row, col in ((a, r1, c1), (b, r1, c2), (c, r2, c1), (d, r2, c2)):
        expected = row * col / n
        stat += (observed - expected) ** 2 / expected
    return stat


@dataclass(frozen=True)
class ClassAsymmetry:
    split: str
    acc_pos: float
    acc_neg: float
    predicted_pos: int
    predicted_neg: int
    chi_square: float


def class_asymmetry(records: list[dict], split: str) -> ClassAsymmetry:
    """Accuracy conditioned on gold class, plus the correctness chi-square.

    Parse failures stay in their gold class as incorrect answers; the
    predicted-label histogram counts actual predictions only.
    """
    subset = [r for r in records if r["split"] == split]
    pos = [r for r in subset if r["gold"] == "pos"]
    neg = [r for r in subset if r["gold"] == "neg"]
    if not pos or not neg:
        raise MissingClass(f"split {split} lacks one of the gold classes")
    correct_pos = sum(bool(r["correct"]) for r in pos)
    correct_neg = sum(bool(r["correct"]) for r in neg)
    table = Contingency2x2(
        a=correct_pos, b=correct_neg,
        c=len(pos) - correct_pos, d=len(neg) - correct_neg,
    )
    return ClassAsymmetry(
        split=split,
        acc_pos=100.0 * correct_pos / len(pos),
        acc_neg=100.0 * correct_neg / len(neg),
        predicted_pos=sum(r.get("predicted") == "pos" for r in subset),
        predicted_neg=sum(r.get("predicted") == "neg" for r in subset),
        chi_square=chi_square(table),
    )


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Report:
    name: str
    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]


def emit_report(reports: list[Report], fmt: str, out_dir: str | Path) -> list[Path]:
    """Write one file per report; output is deterministic byte-for-byte."""
    if fmt not in ("markdown", "md", "csv"):
        raise ValueError(f"unknown report format {fmt!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for report in reports:
        if fmt == "csv":
            path = out_dir / f"{report.name}.csv"
            lines = [",".join(report.header)]
            lines += [",".join(row) for row in report.rows]
        else:
            path = out_dir / f"{report.name}.md"
            lines = ["| " + " | ".join(report.header) + " |",
                     "|" + "---|" * len(report.header)]
            lines += ["| " + " | ".join(row) + " |" for row in report.rows]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(path)
    return written


def _family(fingerprint: str) -> str | None:
    """Map a condition fingerprint to its symbolic family, if any."""
    if fingerprint == "ap,minimal":
        return "base"
    if fingerprint == "ap":
        return "ap"
    if fingerprint == "ad":
        return "ad"
    if fingerprint == "ap+concept":
        return "ap+c"
    if fingerprint == "ad+concept":
        return "ad+c"
    return None


def model_table_from_records(records: list[dict]) -> ModelTable:
    """Per-model accuracy table over the symbolic condition families."""
    values = {}
    grouped = accuracy_table(records, ("model", "condition", "split"))
    for (model, fingerprint, split), row in grouped.rows.items():
        family = _family(fingerprint)
        if family:
            values[(model, family, split)] = row.accuracy
    if not values:
        raise EmptyGroup("no records in the symbolic condition families")
    return ModelTable(values)


def condition_report(records: list[dict]) -> Report:
    """Accuracy per condition with FF/BD/HD columns (the headline layout)."""
    grouped = accuracy_table(records, ("condition",))
    rows = []
    for (condition,), row in grouped.rows.items():
        subset = [r for r in records if r["condition"] == condition]
        cells = [condition]
        for category in CATEGORIES:
            try:
                cells.append(fmt1(category_accuracy(subset, category)))
            except EmptyGroup:
                cells.append("--")
        cells.append(str(row.n))
        cells.append(fmt1(row.parse_failure_rate))
        rows.append(tuple(cells))
    return Report(
        name="table1",
        header=("condition", "ff", "bd", "hd", "n", "parse_fail_pct"),
        rows=tuple(rows),
    )


def delta_report(records: list[dict]) -> Report:
    """Per-model deltas from logs, in the per-model-change layout."""
    rows = []
    try:
        table = model_table_from_records(records)
        categories = [
            c for c in CATEGORIES
            if all(table.has(m, cond, c) for m in table.models
                   for cond in ("base", "ad", "ap", "ap+c"))
        ]
        if categories:
            deltas = delta_table(table, tuple(categories))
            for model in deltas.models:
                for category in categories:
                    rows.append((model, category,
                                 *(fmt1(deltas.value(model, category, d)) for d in DELTA_NAMES)))
            for category in categories:
                rows.append(("MEAN", category,
                             *(fmt1(deltas.mean(category, d)) for d in DELTA_NAMES)))
    except (EmptyGroup, ModelSetMismatch):
        pass
    return Report(
        name="fig2",
        header=("model", "category", *DELTA_NAMES),
        rows=tuple(rows),
    )


def _mean_std_report(records: list[dict], name: str, match) -> Report:
    """mean +/- sample std across models for matching conditions."""
    rows = []
    conditions = sorted({r["condition"] for r in records if match(r["condition"])})
    for condition in conditions:
        subset = [r for r in records if r["condition"] == condition]
        models = sorted({r["model"] for r in subset})
        for category in CATEGORIES:
            values = []
            for model in models:
                mine = [r for r in subset if r["model"] == model]
                try:
                    values.append(category_accuracy(mine, category))
                except EmptyGroup:
                    pass
            if not values:
                continue
            if len(values) >= 2:
                mean, std = grouped_mean_std(values)
                rows.append((condition, category, fmt1(mean), fmt1(std), str(len(values))))
            else:
                rows.append((condition, category, fmt1(values[0]), "--", "1"))
    return Report(
        name=name,
        header=("condition", "category", "mean", "std", "models"),
        rows=tuple(rows),
    )


def grounded_report(records: list[dict]) -> Report:
    return _mean_std_report(records, "grounded", lambda c: "grounded" in c)


def shuffle_report(records: list[dict]) -> Report:
    return _mean_std_report(records, "shuffle", lambda c: "shuffle-" in c)


def asymmetry_report(records: list[dict]) -> Report:
    rows = []
    for split in SPLITS:
        try:
            asym = class_asymmetry(records, split)
        except (MissingClass, DegenerateMarginal):
            continue
        rows.append((split, fmt1(asym.acc_pos), fmt1(asym.acc_neg),
                     str(asym.predicted_pos), str(asym.predicted_neg),
                     f"{asym.chi_square:.4f}"))
    return Report(
        name="asymmetry",
        header=("split", "acc_pos", "acc_neg", "predicted_pos", "predicted_neg", "chi_square"),
        rows=tuple(rows),
    )


REPORT_BUILDERS = {
    "table1": condition_report,
    "fig2": delta_report,
    "grounded": grounded_report,
    "shuffle": shuffle_report,
    "asymmetry": asymmetry_report,
}
