"""Model Facts label data model, structural validation, and completeness scoring.

The label is a one-page, consumer-facing summary of an ML model: what it is
for, how accurate it is, which demographic groups its test data covered, and
when not to trust it.  Every quantitative cell is wrapped in a provenance
state so that missing data is reported honestly instead of being omitted.

All types are immutable after construction.  Constructors enforce only
structural shape; numeric range rules are the validator's job, so that an
out-of-range label can still be loaded, inspected, and reported on.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Any, Iterator

if TYPE_CHECKING:
    from .render import RenderBudget

SCHEMA_VERSION = "1.0"
SUPPORTED_SCHEMA_VERSIONS = frozenset({"1.0"})


class ProvenanceState(Enum):
    """Where a label cell's value stands with respect to the underlying data."""

    REPORTED = "reported"
    AVAILABLE_UNREPORTED = "available_unreported"
    UNKNOWN_AVAILABILITY = "unknown_availability"
    NOT_COLLECTED = "not_collected"


# Render color per state; REPORTED cells carry no color.
PROVENANCE_COLORS: dict[ProvenanceState, str | None] = {
    ProvenanceState.REPORTED: None,
    ProvenanceState.AVAILABLE_UNREPORTED: "green",
    ProvenanceState.UNKNOWN_AVAILABILITY: "yellow",
    ProvenanceState.NOT_COLLECTED: "red",
}


@dataclass(frozen=True)
class Provenance:
    """A cell value tagged with exactly one provenance state.

    Only REPORTED carries a value; the other three states are value-less
    markers (data exists but was not published, availability is unknown, or
    the data was never collected).
    """

    state: ProvenanceState
    value: Any = None

    def __post_init__(self):
        if self.state is ProvenanceState.REPORTED:
            if self.value is None:
                raise ValueError("a reported cell must carry a value")
        elif self.value is not None:
            raise ValueError(f"state {self.state.value} cannot carry a value")

    @classmethod
    def reported(cls, value: Any) -> "Provenance":
        return cls(ProvenanceState.REPORTED, value)

    @classmethod
    def available_unreported(cls) -> "Provenance":
        return cls(ProvenanceState.AVAILABLE_UNREPORTED)

    @classmethod
    def unknown_availability(cls) -> "Provenance":
        return cls(ProvenanceState.UNKNOWN_AVAILABILITY)

    @classmethod
    def not_collected(cls) -> "Provenance":
        return cls(ProvenanceState.NOT_COLLECTED)

    @property
    def is_reported(self) -> bool:
        return self.state is ProvenanceState.REPORTED

    @property
    def color(self) -> str | None:
        return PROVENANCE_COLORS[self.state]


class ModelType(Enum):
    BALANCED_CLASSIFICATION = "balanced_classification"
    IMBALANCED_CLASSIFICATION = "imbalanced_classification"
    REGRESSION = "regression"

    @property
    def display_name(self) -> str:
        return {
            ModelType.BALANCED_CLASSIFICATION: "Balanced Classification",
            ModelType.IMBALANCED_CLASSIFICATION: "Imbalanced Classification",
            ModelType.REGRESSION: "Regression",
        }[self]

    @property
    def is_classification(self) -> bool:
        return self is not ModelType.REGRESSION


@dataclass(frozen=True)
class PartialDate:
    """A calendar date at year, year-month, or full precision."""

    year: int
    month: int | None = None
    day: int | None = None

    def __post_init__(self):
        if not 1 <= self.year <= 9999:
            raise ValueError(f"year {self.year} out of range")
        if self.month is None and self.day is not None:
            raise ValueError("a day requires a month")
        if self.month is not None and not 1 <= self.month <= 12:
            raise ValueError(f"month {self.month} out of range")
        if self.day is not None:
            import calendar

            last = calendar.monthrange(self.year, self.month)[1]
            if not 1 <= self.day <= last:
                raise ValueError(f"day {self.day} out of range for {self.year}-{self.month:02d}")

    def isoformat(self) -> str:
        if self.month is None:
            return f"{self.year:04d}"
        if self.day is None:
            return f"{self.year:04d}-{self.month:02d}"
        return f"{self.year:04d}-{self.month:02d}-{self.day:02d}"

    def sort_key(self) -> tuple[int, int, int]:
        """Earliest calendar day this partial date could denote."""
        return (self.year, self.month or 1, self.day or 1)

    def __str__(self) -> str:
        return self.isoformat()


@dataclass(frozen=True)
class DateRange:
    """Inclusive date interval; endpoints may carry reduced precision."""

    start: PartialDate
    end: PartialDate

    def __post_init__(self):
        if self.start.sort_key() > self.end.sort_key():
            raise ValueError(f"range start {self.start} is after end {self.end}")

    def isoformat(self) -> str:
        if self.start == self.end:
            return self.start.isoformat()
        return f"{self.start.isoformat()} to {self.end.isoformat()}"


@dataclass(frozen=True)
class ApplicationInfo:
    application: str
    model_type: ModelType
    model_train_date: PartialDate
    test_data_range: DateRange

    def __post_init__(self):
        if not self.application.strip():
            raise ValueError("application text must be non-empty")


@dataclass(frozen=True)
class MetricValue:
    """A named metric with a raw score and a percent-over-baseline, each provenanced."""

    name: str
    raw_score: Provenance
    pct_over_baseline: Provenance


@dataclass(frozen=True)
class AccuracySection:
    optimized: MetricValue
    standard: MetricValue


@dataclass(frozen=True)
class DatasetInfo:
    sample_count: Provenance
    train_pct: Provenance
    test_pct: Provenance


@dataclass(frozen=True)
class PctTarget:
    """Share of a group whose truth is the positive class, in percent."""

    pct: float


@dataclass(frozen=True)
class MeanStd:
    """Mean and population standard deviation of a group's target variable."""

    mean: float
    std: float


@dataclass(frozen=True)
class DemographicGroupRow:
    group_name: str
    pct_in_test: Provenance
    group_accuracy: Provenance
    target_stat: Provenance  # reported value is a PctTarget or MeanStd

    @classmethod
    def all_not_collected(cls, group_name: str) -> "DemographicGroupRow":
        nc = Provenance.not_collected
        return cls(group_name, nc(), nc(), nc())


@dataclass(frozen=True)
class DemographicCategory:
    category_name: str
    rows: tuple[DemographicGroupRow, ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))


# Canonical demographic layout.  Labels must carry these three categories,
# each opening with these rows in this order; extensions are appended after.
CANONICAL_CATEGORIES: dict[str, tuple[str, ...]] = {
    "Race": ("Asian", "Hispanic", "Black", "White", "Other"),
    "Gender": ("Female", "Male", "Trans Female", "Trans Male", "Nonbinary", "Other"),
    "Age": ("<17", "18-24", "25-34", "35-49", "50+"),
}
CANONICAL_CATEGORY_ORDER = ("Race", "Gender", "Age")


def canonical_groups(category_name: str) -> tuple[str, ...] | None:
    """Canonical row names for a category, or None for extension categories."""
    return CANONICAL_CATEGORIES.get(category_name)


@dataclass(frozen=True)
class ModelFactsLabel:
    application: ApplicationInfo
    accuracy: AccuracySection
    dataset: DatasetInfo
    demographics: tuple[DemographicCategory, ...]
    warnings: tuple[str, ...]
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self):
        object.__setattr__(self, "demographics", tuple(self.demographics))
        object.__setattr__(self, "warnings", tuple(self.warnings))

    def category(self, name: str) -> DemographicCategory | None:
        for cat in self.demographics:
            if cat.category_name == name:
                return cat
        return None


def iter_provenance_cells(label: ModelFactsLabel) -> Iterator[tuple[str, Provenance]]:
    """Yield every provenance-bearing cell as (field path, cell), in label order.

    The cell set is fixed: the four accuracy cells, the three dataset cells,
    and the three stat cells of every demographic row.
    """
    acc = label.accuracy
    yield "accuracy.optimized.raw_score", acc.optimized.raw_score
    yield "accuracy.optimized.pct_over_baseline", acc.optimized.pct_over_baseline
    yield "accuracy.standard.raw_score", acc.standard.raw_score
    yield "accuracy.standard.pct_over_baseline", acc.standard.pct_over_baseline
    yield "dataset.sample_count", label.dataset.sample_count
    yield "dataset.train_pct", label.dataset.train_pct
    yield "dataset.test_pct", label.dataset.test_pct
    for cat in label.demographics:
        for row in cat.rows:
            base = f"demographics.{cat.category_name}.{row.group_name}"
            yield f"{base}.pct_in_test", row.pct_in_test
            yield f"{base}.group_accuracy", row.group_accuracy
            yield f"{base}.target_stat", row.target_stat


class ViolationCode(Enum):
    APPLICATION_TOO_LONG = "APPLICATION_TOO_LONG"
    PAGE_OVERFLOW = "PAGE_OVERFLOW"
    NON_NORMALIZED_METRIC = "NON_NORMALIZED_METRIC"
    MISSING_CANONICAL_CATEGORY = "MISSING_CANONICAL_CATEGORY"
    STANDARD_METRIC_MISMATCH = "STANDARD_METRIC_MISMATCH"
    SPLIT_INCONSISTENT = "SPLIT_INCONSISTENT"
    VALUE_OUT_OF_RANGE = "VALUE_OUT_OF_RANGE"


@dataclass(frozen=True)
class Violation:
    code: ViolationCode
    message: str
    location: str


# Period-bearing abbreviations that do not terminate a sentence.
_ABBREVIATIONS = (
    "U.S.A.",
    "U.S.",
    "U.K.",
    "E.U.",
    "e.g.",
    "i.e.",
    "etc.",
    "vs.",
    "cf.",
    "Dr.",
    "Mr.",
    "Mrs.",
    "Ms.",
    "St.",
    "No.",
)

_TERMINATORS = re.compile(r"[.!?]")


def sentence_terminator_count(text: str) -> int:
    """Count sentence terminators, ignoring periods inside known abbreviations."""
    for abbr in _ABBREVIATIONS:
        text = text.replace(abbr, "\x00" * len(abbr))
    return len(_TERMINATORS.findall(text))


_MAX_APPLICATION_CHARS = 200

# Raw-score ranges by metric name (case-insensitive): (low, high) or None for
# unbounded below.  Metrics absent from this map have no range rule.
_SCORE_RANGES: dict[str, tuple[float | None, float]] = {
    "accuracy": (0.0, 1.0),
    "f1": (0.0, 1.0),
    "auc": (0.0, 1.0),
    "precision": (0.0, 1.0),
    "recall": (0.0, 1.0),
    "r2": (None, 1.0),
}


def _metric_range_violations(mv: MetricValue, path: str) -> list[Violation]:
    out = []
    rng = _SCORE_RANGES.get(mv.name.lower().replace("-", "").replace("_", ""))
    if rng is not None and mv.raw_score.is_reported:
        low, high = rng
        v = mv.raw_score.value
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            out.append(Violation(ViolationCode.VALUE_OUT_OF_RANGE,
                                 f"{mv.name} raw score must be a number", f"{path}.raw_score"))
        elif (low is not None and v < low) or v > high:
            bounds = f"[{low}, {high}]" if low is not None else f"(-inf, {high}]"
            out.append(Violation(ViolationCode.VALUE_OUT_OF_RANGE,
                                 f"{mv.name} raw score {v} outside {bounds}", f"{path}.raw_score"))
    return out


def _pct_violation(cell: Provenance, path: str, what: str) -> Violation | None:
    if not cell.is_reported:
        return None
    v = cell.value
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not 0.0 <= v <= 100.0:
        return Violation(ViolationCode.VALUE_OUT_OF_RANGE,
                         f"{what} {v!r} outside [0, 100]", path)
    return None


def validate_label(label: ModelFactsLabel, budget: "RenderBudget | None" = None) -> list[Violation]:
    """Check a label against every publishability rule.

    Returns all violated rules, ordered by field path; an empty list means
    the label is publishable.  Honest gaps (non-Reported provenance states)
    are never violations; only broken structure or out-of-range values are.
    """
    from .render import RenderBudget, render_text

    if budget is None:
        budget = RenderBudget()
    violations: list[Violation] = []

    # Application: at most one sentence, bounded length.
    app = label.application.application
    n_terms = sentence_terminator_count(app)
    if len(app) > _MAX_APPLICATION_CHARS or n_terms > 1:
        violations.append(Violation(
            ViolationCode.APPLICATION_TOO_LONG,
            f"application is {len(app)} chars with {n_terms} sentence terminators "
            f"(limit {_MAX_APPLICATION_CHARS} chars, 1 terminator)",
            "application.application"))

    # One-page budget on the text rendering.
    n_lines = render_text(label, budget).count("\n")
    if n_lines > budget.max_lines:
        violations.append(Violation(
            ViolationCode.PAGE_OVERFLOW,
            f"text rendering is {n_lines} lines; budget is {budget.max_lines}",
            "label"))

    # Every reported metric needs a normalized representation.
    for side, mv in (("optimized", label.accuracy.optimized), ("standard", label.accuracy.standard)):
        path = f"accuracy.{side}"
        if mv.raw_score.is_reported:
            v = mv.raw_score.value
            in_unit = isinstance(v, (int, float)) and not isinstance(v, bool) and 0.0 <= v <= 1.0
            if not in_unit and not mv.pct_over_baseline.is_reported:
                violations.append(Violation(
                    ViolationCode.NON_NORMALIZED_METRIC,
                    f"{mv.name} raw score {v!r} is not in [0, 1] and no percentage accompanies it",
                    path))
        violations.extend(_metric_range_violations(mv, path))

    # Standard metric must match the model type's mandate.
    from .metrics import select_standard_metric

    mandated = select_standard_metric(label.application.model_type)
    if label.accuracy.standard.name != mandated:
        violations.append(Violation(
            ViolationCode.STANDARD_METRIC_MISMATCH,
            f"standard metric is '{label.accuracy.standard.name}' but "
            f"{label.application.model_type.display_name} mandates '{mandated}'",
            "accuracy.standard.name"))

    # Canonical categories present, each opening with its canonical rows.
    present = {cat.category_name: cat for cat in label.demographics}
    for name in CANONICAL_CATEGORY_ORDER:
        cat = present.get(name)
        if cat is None:
            violations.append(Violation(
                ViolationCode.MISSING_CANONICAL_CATEGORY,
                f"canonical category '{name}' is missing",
                f"demographics.{name}"))
            continue
        canon = CANONICAL_CATEGORIES[name]
        head = tuple(row.group_name for row in cat.rows[:len(canon)])
        if head != canon:
            violations.append(Violation(
                ViolationCode.MISSING_CANONICAL_CATEGORY,
                f"category '{name}' must open with rows {list(canon)}",
                f"demographics.{name}"))

    # Dataset ranges and split consistency.
    ds = label.dataset
    if ds.sample_count.is_reported:
        v = ds.sample_count.value
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            violations.append(Violation(
                ViolationCode.VALUE_OUT_OF_RANGE,
                f"sample count {v!r} must be a nonnegative integer",
                "dataset.sample_count"))
    for part, cell in (("train_pct", ds.train_pct), ("test_pct", ds.test_pct)):
        v = _pct_violation(cell, f"dataset.{part}", f"{part}")
        if v:
            violations.append(v)
    if ds.train_pct.is_reported and ds.test_pct.is_reported:
        total = ds.train_pct.value + ds.test_pct.value
        if total > 100.0 + 1e-9:
            violations.append(Violation(
                ViolationCode.SPLIT_INCONSISTENT,
                f"train + test percentages sum to {total}, above 100",
                "dataset"))

    # Demographic cell ranges.
    for cat in label.demographics:
        for row in cat.rows:
            base = f"demographics.{cat.category_name}.{row.group_name}"
            v = _pct_violation(row.pct_in_test, f"{base}.pct_in_test", "test-data percentage")
            if v:
                violations.append(v)
            if row.group_accuracy.is_reported:
                acc = row.group_accuracy.value
                ok = isinstance(acc, (int, float)) and not isinstance(acc, bool) and 0.0 <= acc <= 1.0
                if not ok:
                    violations.append(Violation(
                        ViolationCode.VALUE_OUT_OF_RANGE,
                        f"group accuracy {acc!r} outside [0, 1]",
                        f"{base}.group_accuracy"))
            if row.target_stat.is_reported:
                t = row.target_stat.value
                if isinstance(t, PctTarget):
                    if not 0.0 <= t.pct <= 100.0:
                        violations.append(Violation(
                            ViolationCode.VALUE_OUT_OF_RANGE,
                            f"target percentage {t.pct} outside [0, 100]",
                            f"{base}.target_stat"))
                elif isinstance(t, MeanStd):
                    if t.std < 0:
                        violations.append(Violation(
                            ViolationCode.VALUE_OUT_OF_RANGE,
                            f"standard deviation {t.std} is negative",
                            f"{base}.target_stat"))

    violations.sort(key=lambda v: (v.location, v.code.value, v.message))
    return violations


@dataclass(frozen=True)
class CompletenessReport:
    """Share of provenance-bearing cells that carry a reported value."""

    reported_fraction: float
    tally: dict[ProvenanceState, int]

    @property
    def total_cells(self) -> int:
        return sum(self.tally.values())


def completeness(label: ModelFactsLabel) -> CompletenessReport:
    """Tally every provenance cell per state and compute the reported fraction."""
    tally = {state: 0 for state in ProvenanceState}
    for _, cell in iter_provenance_cells(label):
        tally[cell.state] += 1
    total = sum(tally.values())
    fraction = tally[ProvenanceState.REPORTED] / total if total else 0.0
    return CompletenessReport(reported_fraction=fraction, tally=tally)
