"""Audit orchestration: word and category audits, reports, comparisons.

The engine never touches a model checkpoint.  Callers hand it caption
vectors that were encoded elsewhere; everything after that point is
deterministic numpy work, so two runs over the same files produce the
same numbers.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import __version__
from .errors import AlignmentError, ComparabilityError, DomainError, VlbiasError
from .metrics import (
    GroupDistribution,
    GroupMask,
    casc,
    gender_labels,
    group_distribution,
    group_mask,
    intersection_labels,
    mean_topk_similarity,
    normalized_entropy,
    race_labels,
    relevance_score,
    similarity_vector,
    topk,
)
from .store import GENDERS, RACES, Gender, LabeledEmbeddings, Race
from .taxonomy import (
    Caption,
    Category,
    TaxonomyCategory,
    TaxonomyWord,
    WordKind,
    render_caption,
)

AXES = ("race", "gender", "race_gender")

# Axes whose per-word entropies get averaged into the category summary.
_MEAN_AXES = ("race", "gender")

_AXIS_GROUP_BY = {
    "race": ("race",),
    "gender": ("gender",),
    "race_gender": ("race", "gender"),
}


def labels_for_axis(axis: str) -> list[str]:
    if axis == "race":
        return race_labels()
    if axis == "gender":
        return gender_labels()
    if axis == "race_gender":
        return intersection_labels()
    raise DomainError(f"unknown axis {axis!r}")


def all_group_labels() -> list[str]:
    return race_labels() + gender_labels() + intersection_labels()


def masks_for_all_groups(metadata) -> dict[str, GroupMask]:
    """One mask per race, gender, and race-gender intersection."""
    masks: dict[str, GroupMask] = {}
    for race in RACES:
        masks[race.value] = group_mask(metadata, race=race)
    for gender in GENDERS:
        masks[gender.value] = group_mask(metadata, gender=gender)
    for race in RACES:
        for gender in GENDERS:
            masks[f"{race.value}{gender.value}"] = group_mask(
                metadata, race=race, gender=gender
            )
    return masks


@dataclass
class WordAudit:
    """Everything the engine measures for a single caption."""

    caption: Caption
    k: int
    casc_by_group: dict[str, float]
    retrieval_distributions: dict[str, GroupDistribution]
    normalized_entropies: dict[str, float]
    relevance: Optional[float] = None

    def __post_init__(self):
        missing = [lab for lab in all_group_labels() if lab not in self.casc_by_group]
        if missing:
            raise DomainError(f"casc_by_group is missing {missing[:3]}...")
        for axis, value in self.normalized_entropies.items():
            if not (0.0 <= value <= 1.0):
                raise DomainError(f"entropy {value} on axis {axis} outside [0, 1]")


@dataclass
class CategoryAudit:
    category: Category
    word_audits: list[WordAudit]
    mean_entropy_by_axis: dict[str, float]


@dataclass
class ModelAuditReport:
    model_name: str
    dataset_name: str
    k: int
    categories: list[CategoryAudit]
    created_at: str
    engine_version: str
    config: Optional[dict] = None

    def __post_init__(self):
        if self.k < 1:
            raise DomainError(f"k must be at least 1, got {self.k}")
        names = [c.category for c in self.categories]
        if len(set(names)) != len(names):
            raise DomainError("duplicate category in report")


def run_word_audit(caption_vec: np.ndarray,
                   caption: Caption,
                   data: LabeledEmbeddings,
                   k: int = 100,
                   axes: Sequence[str] = AXES,
                   baseline_means: Optional[Sequence[float]] = None,
                   masks: Optional[dict[str, GroupMask]] = None) -> WordAudit:
    """Audit one caption against a labeled image set.

    The similarity vector is computed once and reused for the effect
    sizes, the retrieval distributions, and the relevance score.
    """
    if masks is None:
        masks = masks_for_all_groups(data.metadata)
    try:
        sims = similarity_vector(caption_vec, data.embeddings)
        casc_by_group = {label: casc(sims, mask) for label, mask in masks.items()}
        retrieved = [idx for idx, _ in topk(sims, k)]
        distributions: dict[str, GroupDistribution] = {}
        entropies: dict[str, float] = {}
        for axis in axes:
            dist = group_distribution(retrieved, data.metadata, _AXIS_GROUP_BY[axis])
            distributions[axis] = dist
            entropies[axis] = normalized_entropy(dist)
        relevance = None
        if baseline_means is not None:
            relevance = relevance_score(mean_topk_similarity(sims, k), baseline_means)
    except VlbiasError as exc:
        raise type(exc)(f"caption {caption.text!r}: {exc}") from exc
    return WordAudit(
        caption=caption,
        k=k,
        casc_by_group=casc_by_group,
        retrieval_distributions=distributions,
        normalized_entropies=entropies,
        relevance=relevance,
    )


def _category_from_word_audits(category: Category,
                               word_audits: list[WordAudit]) -> CategoryAudit:
    means: dict[str, float] = {}
    for axis in _MEAN_AXES:
        values = [
            wa.normalized_entropies[axis]
            for wa in word_audits
            if axis in wa.normalized_entropies
        ]
        if values:
            means[axis] = float(np.mean(np.asarray(values, dtype=np.float64)))
    return CategoryAudit(category=category, word_audits=word_audits,
                         mean_entropy_by_axis=means)


def run_category_audit(category: TaxonomyCategory,
                       caption_vecs: np.ndarray,
                       data: LabeledEmbeddings,
                       k: int = 100,
                       axes: Sequence[str] = AXES,
                       baseline_means: Optional[Sequence[float]] = None,
                       threads: int = 1,
                       masks: Optional[dict[str, GroupMask]] = None) -> CategoryAudit:
    """Audit every word of one category, preserving word order."""
    caption_vecs = np.asarray(caption_vecs)
    if caption_vecs.shape[0] != len(category.words):
        raise AlignmentError(
            f"category {category.name.value} has {len(category.words)} words "
            f"but {caption_vecs.shape[0]} caption vectors"
        )
    if masks is None:
        masks = masks_for_all_groups(data.metadata)
    captions = [render_caption(w, category.name) for w in category.words]

    def one(i: int) -> WordAudit:
        return run_word_audit(caption_vecs[i], captions[i], data, k=k, axes=axes,
                              baseline_means=baseline_means, masks=masks)

    if threads > 1 and len(captions) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            word_audits = list(pool.map(one, range(len(captions))))
    else:
        word_audits = [one(i) for i in range(len(captions))]
    return _category_from_word_audits(category.name, word_audits)


def run_audit(taxonomy: list[TaxonomyCategory],
              caption_vecs: np.ndarray,
              data: LabeledEmbeddings,
              model_name: str,
              dataset_name: str,
              k: int = 100,
              axes: Sequence[str] = AXES,
              baseline_means: Optional[Sequence[float]] = None,
              threads: int = 1,
              config: Optional[dict] = None) -> ModelAuditReport:
    """Audit a whole taxonomy; caption vector rows follow taxonomy order."""
    caption_vecs = np.asarray(caption_vecs)
    total_words = sum(len(c.words) for c in taxonomy)
    if caption_vecs.shape[0] != total_words:
        raise AlignmentError(
            f"taxonomy renders {total_words} captions but "
            f"{caption_vecs.shape[0]} caption vectors were supplied"
        )
    masks = masks_for_all_groups(data.metadata)
    categories = []
    row = 0
    for cat in taxonomy:
        block = caption_vecs[row:row + len(cat.words)]
        row += len(cat.words)
        categories.append(run_category_audit(
            cat, block, data, k=k, axes=axes,
            baseline_means=baseline_means, threads=threads, masks=masks,
        ))
    return ModelAuditReport(
        model_name=model_name,
        dataset_name=dataset_name,
        k=k,
        categories=categories,
        created_at=datetime.now(timezone.utc).isoformat(),
        engine_version=__version__,
        config=config,
    )


@dataclass
class IntersectionalGrid:
    """Per-word values over the 14 race-gender intersections."""

    words: list[str]
    group_labels: list[str]
    metric: str
    values: list[list[float]]


def intersectional_grid(caption_vecs: np.ndarray,
                        captions: Sequence[Caption],
                        data: LabeledEmbeddings,
                        metric: str = "casc",
                        k: int = 100) -> IntersectionalGrid:
    """Word-by-intersection matrix of either effect sizes or top-k shares."""
    if metric not in ("casc", "topk_share"):
        raise DomainError(f"unknown grid metric {metric!r}")
    if len(captions) == 0:
        raise DomainError("grid needs at least one caption")
    caption_vecs = np.asarray(caption_vecs)
    if caption_vecs.shape[0] != len(captions):
        raise AlignmentError(
            f"{len(captions)} captions but {caption_vecs.shape[0]} vectors"
        )
    labels = intersection_labels()
    masks: dict[str, GroupMask] = {}
    if metric == "casc":
        for race in RACES:
            for gender in GENDERS:
                masks[f"{race.value}{gender.value}"] = group_mask(
                    data.metadata, race=race, gender=gender
                )
    rows = []
    for i, caption in enumerate(captions):
        try:
            sims = similarity_vector(caption_vecs[i], data.embeddings)
            if metric == "casc":
                rows.append([casc(sims, masks[label]) for label in labels])
            else:
                retrieved = [idx for idx, _ in topk(sims, k)]
                dist = group_distribution(retrieved, data.metadata,
                                          ("race", "gender"))
                rows.append(list(dist.probabilities))
        except VlbiasError as exc:
            raise type(exc)(f"caption {caption.text!r}: {exc}") from exc
    return IntersectionalGrid(
        words=[c.source_word.text for c in captions],
        group_labels=labels,
        metric=metric,
        values=rows,
    )


def top_word_per_group(category_audit: CategoryAudit,
                       group_label: str) -> tuple[str, float]:
    """The category word most associated with one group, ties to the
    earlier word in taxonomy order."""
    if not category_audit.word_audits:
        raise DomainError("category audit holds no words")
    best_word = None
    best_value = None
    for wa in category_audit.word_audits:
        value = wa.casc_by_group[group_label]
        if best_value is None or value > best_value:
            best_word = wa.caption.source_word.text
            best_value = value
    return best_word, best_value


# ---------------------------------------------------------------------------
# Cross-model comparison


@dataclass
class ComparisonTable:
    """Mean entropies per category and axis, one column per model."""

    dataset_name: str
    k: int
    model_names: list[str]
    rows: list[dict] = field(default_factory=list)
    # each row: {"category": str, "axis": str, "values": {model: float}}

    def to_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["category", "axis", *self.model_names])
            for row in self.rows:
                writer.writerow([
                    row["category"], row["axis"],
                    *[_format_cell(row["values"].get(m)) for m in self.model_names],
                ])


def _format_cell(value) -> str:
    return "" if value is None else repr(value)


def compare_models(reports: Sequence[ModelAuditReport]) -> ComparisonTable:
    """Line up category mean entropies across models.

    All reports must describe the same dataset at the same retrieval
    depth; columns are ordered by model name.
    """
    if not reports:
        raise ComparabilityError("no reports to compare")
    datasets = {r.dataset_name for r in reports}
    if len(datasets) > 1:
        raise ComparabilityError(f"reports span datasets {sorted(datasets)}")
    ks = {r.k for r in reports}
    if len(ks) > 1:
        raise ComparabilityError(f"reports mix retrieval depths {sorted(ks)}")
    ordered = sorted(reports, key=lambda r: r.model_name)

    categories: list[Category] = []
    for report in ordered:
        for cat in report.categories:
            if cat.category not in categories:
                categories.append(cat.category)

    rows = []
    for category in categories:
        for axis in _MEAN_AXES:
            values = {}
            for report in ordered:
                for cat in report.categories:
                    if cat.category is category and axis in cat.mean_entropy_by_axis:
                        values[report.model_name] = cat.mean_entropy_by_axis[axis]
            if values:
                rows.append({"category": category.value, "axis": axis,
                             "values": values})
    return ComparisonTable(
        dataset_name=ordered[0].dataset_name,
        k=ordered[0].k,
        model_names=[r.model_name for r in ordered],
        rows=rows,
    )


# ---------------------------------------------------------------------------
# Serialization

def _caption_to_dict(caption: Caption) -> dict:
    return {
        "text": caption.text,
        "word": caption.source_word.text,
        "kind": caption.source_word.kind.value,
        "category": caption.category.value if caption.category else None,
    }


def _caption_from_dict(obj: dict) -> Caption:
    return Caption(
        text=obj["text"],
        source_word=TaxonomyWord(text=obj["word"], kind=WordKind(obj["kind"])),
        category=Category(obj["category"]) if obj.get("category") else None,
    )


def _distribution_to_dict(dist: GroupDistribution) -> dict:
    return {"group_labels": dist.group_labels, "probabilities": dist.probabilities}


def _word_audit_to_dict(wa: WordAudit) -> dict:
    out = {
        "caption": _caption_to_dict(wa.caption),
        "k": wa.k,
        "casc_by_group": wa.casc_by_group,
        "retrieval_distributions": {
            axis: _distribution_to_dict(d)
            for axis, d in wa.retrieval_distributions.items()
        },
        "normalized_entropies": wa.normalized_entropies,
    }
    if wa.relevance is not None:
        out["relevance"] = wa.relevance
    return out


def _word_audit_from_dict(obj: dict) -> WordAudit:
    return WordAudit(
        caption=_caption_from_dict(obj["caption"]),
        k=obj["k"],
        casc_by_group=dict(obj["casc_by_group"]),
        retrieval_distributions={
            axis: GroupDistribution(group_labels=list(d["group_labels"]),
                                    probabilities=list(d["probabilities"]))
            for axis, d in obj["retrieval_distributions"].items()
        },
        normalized_entropies=dict(obj["normalized_entropies"]),
        relevance=obj.get("relevance"),
    )


def report_to_dict(report: ModelAuditReport) -> dict:
    return {
        "model_name": report.model_name,
        "dataset_name": report.dataset_name,
        "k": report.k,
        "created_at": report.created_at,
        "engine_version": report.engine_version,
        "config": report.config,
        "categories": [
            {
                "category": cat.category.value,
                "mean_entropy_by_axis": cat.mean_entropy_by_axis,
                "word_audits": [_word_audit_to_dict(wa) for wa in cat.word_audits],
            }
            for cat in report.categories
        ],
    }


def report_from_dict(obj: dict) -> ModelAuditReport:
    return ModelAuditReport(
        model_name=obj["model_name"],
        dataset_name=obj["dataset_name"],
        k=obj["k"],
        created_at=obj["created_at"],
        engine_version=obj["engine_version"],
        config=obj.get("config"),
        categories=[
            CategoryAudit(
                category=Category(cat["category"]),
                word_audits=[_word_audit_from_dict(wa) for wa in cat["word_audits"]],
                mean_entropy_by_axis=dict(cat["mean_entropy_by_axis"]),
            )
            for cat in obj["categories"]
        ],
    )


def write_report_json(report: ModelAuditReport, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh, indent=1)
        fh.write("\n")


def load_report(path: Union[str, Path]) -> ModelAuditReport:
    with open(path, "r", encoding="utf-8") as fh:
        return report_from_dict(json.load(fh))


REPORT_CSV_COLUMNS = ["model", "dataset", "category", "word", "axis",
                      "group", "metric", "value"]


def _axis_for_group_label(label: str) -> str:
    if label in race_labels():
        return "race"
    if label in gender_labels():
        return "gender"
    return "race_gender"


def write_report_csv(report: ModelAuditReport, path: Union[str, Path]) -> None:
    """Flatten a report to one value per row for spreadsheet-side work."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_CSV_COLUMNS)
        base = [report.model_name, report.dataset_name]
        for cat in report.categories:
            cname = cat.category.value
            for wa in cat.word_audits:
                word = wa.caption.source_word.text
                for label, value in wa.casc_by_group.items():
                    writer.writerow(base + [cname, word,
                                            _axis_for_group_label(label),
                                            label, "casc", repr(value)])
                for axis, dist in wa.retrieval_distributions.items():
                    for label, p in zip(dist.group_labels, dist.probabilities):
                        writer.writerow(base + [cname, word, axis, label,
                                                "topk_share", repr(p)])
                for axis, value in wa.normalized_entropies.items():
                    writer.writerow(base + [cname, word, axis, "",
                                            "normalized_entropy", repr(value)])
                if wa.relevance is not None:
                    writer.writerow(base + [cname, word, "", "",
                                            "relevance", repr(wa.relevance)])
            for axis, value in cat.mean_entropy_by_axis.items():
                writer.writerow(base + [cname, "", axis, "",
                                        "mean_normalized_entropy", repr(value)])
