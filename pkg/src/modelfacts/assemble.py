"""Label assembly, cross-label comparison, and representation audits."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from .errors import DeclaredConflictError, NoOverlapError, SchemaError, ZeroBaselineError
from .ingest import DeclaredRow, LabelManifest, PredictionDataset
from .label import (
    CANONICAL_CATEGORY_ORDER,
    ApplicationInfo,
    AccuracySection,
    DatasetInfo,
    DemographicCategory,
    DemographicGroupRow,
    MeanStd,
    MetricValue,
    ModelFactsLabel,
    PctTarget,
    Provenance,
    canonical_groups,
    completeness,
)
from .metrics import (
    Direction,
    group_breakdown,
    majority_class_baseline,
    make_scorer,
    metric_direction,
    percent_over_baseline,
    select_standard_metric,
)

# Declared values may disagree with computed ones by at most this much,
# measured on normalized values (scores as-is, percentages divided by 100).
CONFLICT_TOLERANCE = 1e-6


def _conflict(path: str, declared: float, computed: float, scale: float = 1.0) -> None:
    if abs(declared - computed) / scale > CONFLICT_TOLERANCE:
        raise DeclaredConflictError(
            f"{path}: declared {declared!r} contradicts computed {computed!r}")


def _merge_cell(computed: Provenance, declared: Provenance | None, path: str,
                scale: float = 1.0) -> Provenance:
    """Computed wins; a declared reported value must agree, and declared
    states fill cells the dataset could not produce."""
    if computed.is_reported:
        if declared is not None and declared.is_reported:
            _check_value_conflict(path, declared.value, computed.value, scale)
        return computed
    return declared if declared is not None else computed


def _check_value_conflict(path: str, declared: Any, computed: Any, scale: float) -> None:
    if isinstance(declared, PctTarget) and isinstance(computed, PctTarget):
        _conflict(f"{path}.pct_target", declared.pct, computed.pct, scale=100.0)
    elif isinstance(declared, MeanStd) and isinstance(computed, MeanStd):
        _conflict(f"{path}.mean", declared.mean, computed.mean)
        _conflict(f"{path}.std", declared.std, computed.std)
    elif isinstance(declared, (int, float)) and isinstance(computed, (int, float)):
        _conflict(path, declared, computed, scale)
    else:
        raise DeclaredConflictError(
            f"{path}: declared {declared!r} has a different shape than computed {computed!r}")


def _standard_direction(name: str) -> Direction:
    return metric_direction(name) or Direction.MAXIMIZE


def generate_label(dataset: PredictionDataset, manifest: LabelManifest) -> ModelFactsLabel:
    """Assemble a label by computing every cell the dataset supports.

    Declared manifest cells fill the holes computation cannot reach (splits,
    absent demographic columns, a standard score without predictions) and are
    cross-checked against computed values: a declared number that contradicts
    its computed counterpart is an error, not a silent override.
    """
    scorer = make_scorer(manifest.optimized_name, dataset.positive_class)
    optimized_raw = scorer(dataset.records)
    if manifest.optimized_raw is not None and manifest.optimized_raw.is_reported:
        _conflict("optimized_metric.raw", manifest.optimized_raw.value, optimized_raw)

    if manifest.baseline is not None:
        pct = percent_over_baseline(optimized_raw, manifest.baseline, manifest.optimized_direction)
        if manifest.optimized_pct_over is not None and manifest.optimized_pct_over.is_reported:
            _conflict("optimized_metric.pct_over_baseline",
                      manifest.optimized_pct_over.value, pct, scale=100.0)
        optimized_pct = Provenance.reported(pct)
    elif manifest.baseline_policy == "majority-class":
        baseline = majority_class_baseline(dataset, manifest.optimized_name)
        optimized_pct = Provenance.reported(
            percent_over_baseline(optimized_raw, baseline, manifest.optimized_direction))
    elif manifest.optimized_pct_over is not None:
        optimized_pct = manifest.optimized_pct_over
    else:
        optimized_pct = Provenance.not_collected()

    optimized = MetricValue(manifest.optimized_name,
                            Provenance.reported(optimized_raw), optimized_pct)
    standard = _standard_metric(dataset, manifest)

    info = DatasetInfo(
        sample_count=manifest.sample_count or Provenance.reported(dataset.n),
        train_pct=manifest.train_pct or Provenance.not_collected(),
        test_pct=manifest.test_pct or Provenance.not_collected(),
    )

    demographics = _assemble_demographics(dataset, manifest, scorer)

    return ModelFactsLabel(
        application=ApplicationInfo(
            application=manifest.application,
            model_type=manifest.model_type,
            model_train_date=manifest.model_train_date,
            test_data_range=manifest.test_data_range,
        ),
        accuracy=AccuracySection(optimized=optimized, standard=standard),
        dataset=info,
        demographics=tuple(demographics),
        warnings=manifest.warnings,
    )


def _standard_metric(dataset: PredictionDataset, manifest: LabelManifest) -> MetricValue:
    name = manifest.standard_name or select_standard_metric(manifest.model_type)
    computable = dataset.has_predictions
    raw_value = None
    if computable:
        raw_value = make_scorer(name, dataset.positive_class)(dataset.records)
        if manifest.standard_raw is not None and manifest.standard_raw.is_reported:
            _conflict("standard_metric.raw", manifest.standard_raw.value, raw_value)
        raw_cell = Provenance.reported(raw_value)
    else:
        raw_cell = manifest.standard_raw or Provenance.not_collected()

    if manifest.baseline_policy == "majority-class" and raw_value is not None:
        try:
            baseline = majority_class_baseline(dataset, name)
            pct_cell = Provenance.reported(
                percent_over_baseline(raw_value, baseline, _standard_direction(name)))
        except ZeroBaselineError:
            pct_cell = manifest.standard_pct_over or Provenance.not_collected()
    else:
        pct_cell = manifest.standard_pct_over or Provenance.not_collected()
    return MetricValue(name, raw_cell, pct_cell)


def _assemble_demographics(dataset: PredictionDataset, manifest: LabelManifest,
                           scorer) -> list[DemographicCategory]:
    order = list(CANONICAL_CATEGORY_ORDER)
    for name in list(dataset.attribute_schema) + list(manifest.demographics):
        if name not in order:
            order.append(name)

    categories = []
    for name in order:
        declared = manifest.demographics.get(name, {})
        if name in dataset.attribute_schema:
            computed = group_breakdown(dataset, name, scorer)
            rows = [_merge_row(row, declared.get(row.group_name), f"demographics.{name}")
                    for row in computed]
            seen = {row.group_name for row in computed}
            rows += [_declared_row(group, cells)
                     for group, cells in declared.items() if group not in seen]
        else:
            rows = _declared_category_rows(name, declared)
            if rows is None:
                continue
        categories.append(DemographicCategory(name, tuple(rows)))
    return categories


def _declared_category_rows(name: str, declared: dict[str, DeclaredRow]) -> list[DemographicGroupRow] | None:
    canon = canonical_groups(name)
    if canon is None and not declared:
        return None
    groups = list(canon) if canon is not None else []
    groups += [g for g in declared if g not in groups]
    return [_declared_row(group, declared.get(group)) for group in groups]


def _declared_row(group: str, cells: DeclaredRow | None) -> DemographicGroupRow:
    if cells is None:
        return DemographicGroupRow.all_not_collected(group)
    return DemographicGroupRow(
        group_name=group,
        pct_in_test=cells["pct_in_test"],
        group_accuracy=cells["accuracy"],
        target_stat=cells["target"],
    )


def _merge_row(computed: DemographicGroupRow, declared: DeclaredRow | None,
               path: str) -> DemographicGroupRow:
    if declared is None:
        return computed
    base = f"{path}.{computed.group_name}"
    return DemographicGroupRow(
        group_name=computed.group_name,
        pct_in_test=_merge_cell(computed.pct_in_test, declared.get("pct_in_test"),
                                f"{base}.pct_in_test", scale=100.0),
        group_accuracy=_merge_cell(computed.group_accuracy, declared.get("accuracy"),
                                   f"{base}.accuracy"),
        target_stat=_merge_cell(computed.target_stat, declared.get("target"),
                                f"{base}.target"),
    )


def build_declared_label(manifest: LabelManifest) -> ModelFactsLabel:
    """Assemble a label purely from declarations, with no dataset.

    Used for retrospective labels reconstructed from published results.  The
    manifest must cover every cell: accuracy values, dataset size and split,
    and all three canonical demographic categories, each with an explicit
    provenance state.
    """
    def require(cell: Provenance | None, path: str) -> Provenance:
        if cell is None:
            raise SchemaError(path, "required for a declared label")
        return cell

    optimized_raw = require(manifest.optimized_raw, "optimized_metric.raw")
    optimized_pct = manifest.optimized_pct_over
    if optimized_pct is None and manifest.baseline is not None and optimized_raw.is_reported:
        optimized_pct = Provenance.reported(percent_over_baseline(
            optimized_raw.value, manifest.baseline, manifest.optimized_direction))
    optimized = MetricValue(manifest.optimized_name, optimized_raw,
                            require(optimized_pct, "optimized_metric.pct_over_baseline"))

    standard_name = manifest.standard_name or select_standard_metric(manifest.model_type)
    standard = MetricValue(
        standard_name,
        require(manifest.standard_raw, "standard_metric.raw"),
        require(manifest.standard_pct_over, "standard_metric.pct_over_baseline"),
    )

    info = DatasetInfo(
        sample_count=require(manifest.sample_count, "dataset.count"),
        train_pct=require(manifest.train_pct, "dataset.train_pct"),
        test_pct=require(manifest.test_pct, "dataset.test_pct"),
    )

    categories = []
    for name in CANONICAL_CATEGORY_ORDER:
        if name not in manifest.demographics:
            raise SchemaError(f"demographics.{name}", "required for a declared label")
    order = list(CANONICAL_CATEGORY_ORDER)
    order += [name for name in manifest.demographics if name not in order]
    for name in order:
        rows = _declared_category_rows(name, manifest.demographics.get(name, {}))
        if rows is not None:
            categories.append(DemographicCategory(name, tuple(rows)))

    return ModelFactsLabel(
        application=ApplicationInfo(
            application=manifest.application,
            model_type=manifest.model_type,
            model_train_date=manifest.model_train_date,
            test_data_range=manifest.test_data_range,
        ),
        accuracy=AccuracySection(optimized=optimized, standard=standard),
        dataset=info,
        demographics=tuple(categories),
        warnings=manifest.warnings,
    )


@dataclass(frozen=True)
class ComparisonEntry:
    identifier: str
    optimized: MetricValue
    standard: MetricValue
    completeness: float


@dataclass(frozen=True)
class ComparisonReport:
    entries: tuple[ComparisonEntry, ...]
    ranking: tuple[str, ...]
    caveats: tuple[str, ...]


def _normalized_text(text: str) -> str:
    return " ".join(text.split()).lower()


def compare_labels(labels: Sequence[tuple[str, ModelFactsLabel]]) -> ComparisonReport:
    """Rank labels by optimized raw score and surface comparability caveats.

    Ranking is a total order: direction-aware on the optimized metric, with
    non-reported scores last and ties broken by identifier, so permuting the
    input never changes the result.  Caveats flag comparisons the scores do
    not support: differing applications, differing dataset sizes, or metrics
    optimized in different directions.
    """
    if not labels:
        raise ValueError("compare_labels needs at least one label")
    identifiers = [ident for ident, _ in labels]
    if len(set(identifiers)) != len(identifiers):
        raise ValueError("label identifiers must be unique")

    entries = tuple(
        ComparisonEntry(
            identifier=ident,
            optimized=label.accuracy.optimized,
            standard=label.accuracy.standard,
            completeness=completeness(label).reported_fraction,
        )
        for ident, label in labels
    )

    caveats: list[str] = []
    directions = {e.identifier: metric_direction(e.optimized.name) for e in entries}
    known = {d for d in directions.values() if d is not None}
    if None in directions.values():
        unnamed = sorted(i for i, d in directions.items() if d is None)
        caveats.append(f"optimized metric direction is unknown for {', '.join(unnamed)}; "
                       "ranked as if maximized")
    if len(known) > 1:
        caveats.append("labels optimize metrics in different directions; "
                       "ranking assumes higher raw scores are better")

    apps = {_normalized_text(label.application.application) for _, label in labels}
    if len(apps) > 1:
        caveats.append("applications differ; raw scores are only comparable for models "
                       "tested on the same dataset and application")
    counts = {label.dataset.sample_count.value
              for _, label in labels if label.dataset.sample_count.is_reported}
    if len(counts) > 1:
        caveats.append("reported dataset sizes differ; the labels do not describe "
                       "the same test data")

    ascending = known == {Direction.MINIMIZE}

    def sort_key(entry: ComparisonEntry):
        cell = entry.optimized.raw_score
        if not cell.is_reported:
            return (1, 0.0, entry.identifier)
        value = cell.value if ascending else -cell.value
        return (0, value, entry.identifier)

    ranking = tuple(e.identifier for e in sorted(entries, key=sort_key))
    return ComparisonReport(entries=entries, ranking=ranking, caveats=tuple(caveats))


@dataclass(frozen=True)
class ReferencePopulation:
    """Known demographic distribution to audit a label's test data against."""

    name: str
    distributions: dict[str, dict[str, float]] = field(default_factory=dict)

    def __post_init__(self):
        for category, groups in self.distributions.items():
            total = sum(groups.values())
            if abs(total - 100.0) > 0.1:
                raise ValueError(
                    f"reference category '{category}' percentages sum to {total}, not 100")


def load_reference_population(doc: str | bytes | Mapping[str, Any]) -> ReferencePopulation:
    """Parse a reference population document: {name, categories: {cat: {group: pct}}}."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise SchemaError("(document)", f"invalid JSON: {exc}") from None
    if not isinstance(doc, Mapping):
        raise SchemaError("(document)", "reference population must be a JSON object")
    unknown = set(doc) - {"name", "categories"}
    if unknown:
        raise SchemaError("(top level)", f"unknown keys {sorted(unknown)}")
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        raise SchemaError("name", "must be a non-empty string")
    categories = doc.get("categories")
    if not isinstance(categories, Mapping) or not categories:
        raise SchemaError("categories", "must be a non-empty object")
    distributions: dict[str, dict[str, float]] = {}
    for category, groups in categories.items():
        if not isinstance(groups, Mapping) or not groups:
            raise SchemaError(f"categories.{category}", "must be a non-empty object")
        parsed: dict[str, float] = {}
        for group, pct in groups.items():
            if isinstance(pct, bool) or not isinstance(pct, (int, float)):
                raise SchemaError(f"categories.{category}.{group}", "must be a number")
            parsed[group] = float(pct)
        distributions[category] = parsed
    try:
        return ReferencePopulation(name=name, distributions=distributions)
    except ValueError as exc:
        raise SchemaError("categories", str(exc)) from None


def load_reference_population_file(path: str | Path) -> ReferencePopulation:
    return load_reference_population(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class AuditEntry:
    category: str
    group: str
    label_pct: Provenance
    reference_pct: float
    gap_pp: float | None  # None when the label share is not reported
    flagged: bool


@dataclass(frozen=True)
class AuditReport:
    reference_name: str
    threshold_pp: float
    entries: tuple[AuditEntry, ...]
    disparity: dict[str, float | None] = field(default_factory=dict)
    notes: tuple[str, ...] = ()

    @property
    def flagged(self) -> tuple[AuditEntry, ...]:
        return tuple(e for e in self.entries if e.flagged)


def representation_audit(label: ModelFactsLabel, reference: ReferencePopulation,
                         threshold_pp: float = 5.0) -> AuditReport:
    """Compare the label's test-data shares against a reference population.

    Each matched group gets a signed gap in percentage points (label minus
    reference) and is flagged when the absolute gap exceeds the threshold.
    Groups without a reported share are unauditable, never flagged, and
    noted, since unreported demographics may hide representation bias.
    """
    ref_by_lower = {cat.lower(): cat for cat in reference.distributions}
    matched = [cat for cat in label.demographics if cat.category_name.lower() in ref_by_lower]
    if not matched:
        raise NoOverlapError(
            f"reference '{reference.name}' shares no demographic category with the label")

    entries: list[AuditEntry] = []
    notes: list[str] = []
    for category in matched:
        ref_groups = reference.distributions[ref_by_lower[category.category_name.lower()]]
        ref_lower = {g.lower(): g for g in ref_groups}
        unauditable = 0
        audited = 0
        for row in category.rows:
            ref_name = ref_lower.get(row.group_name.lower())
            if ref_name is None:
                continue
            audited += 1
            ref_pct = ref_groups[ref_name]
            if row.pct_in_test.is_reported:
                gap = row.pct_in_test.value - ref_pct
                flagged = abs(gap) > threshold_pp
            else:
                gap = None
                flagged = False
                unauditable += 1
            entries.append(AuditEntry(
                category=category.category_name,
                group=row.group_name,
                label_pct=row.pct_in_test,
                reference_pct=ref_pct,
                gap_pp=gap,
                flagged=flagged,
            ))
        if unauditable:
            notes.append(
                f"{category.category_name}: {unauditable} of {audited} groups have no "
                "reported test share; potential for unreported biases")

    disparity: dict[str, float | None] = {}
    for category in label.demographics:
        accuracies = [row.group_accuracy.value for row in category.rows
                      if row.group_accuracy.is_reported]
        disparity[category.category_name] = (
            max(accuracies) - min(accuracies) if len(accuracies) >= 2 else None)

    return AuditReport(
        reference_name=reference.name,
        threshold_pp=threshold_pp,
        entries=tuple(entries),
        disparity=disparity,
        notes=tuple(notes),
    )
