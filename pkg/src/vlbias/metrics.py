"""Numeric kernels: similarity, association effect size, retrieval, entropy.

Everything here takes plain numpy arrays plus the store's metadata records
and runs in float64 regardless of how the inputs were stored.  None of
these functions draws random numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    DegenerateDistributionError,
    DimError,
    DomainError,
    EmptyRetrievalError,
    StateError,
)
from .store import GENDERS, RACES, DemographicRecord, EmbeddingSet, Gender, Race

# Partitioning only bounds memory; results do not depend on it.
_BLOCK_ROWS = 8192


def race_labels() -> list[str]:
    return [r.value for r in RACES]


def gender_labels() -> list[str]:
    return [g.value for g in GENDERS]


def intersection_labels() -> list[str]:
    """Race-major crossing, e.g. WhiteMale, WhiteFemale, BlackMale, ..."""
    return [f"{r.value}{g.value}" for r in RACES for g in GENDERS]


def similarity_vector(caption_vec: np.ndarray, images: EmbeddingSet) -> np.ndarray:
    """Cosine similarity of one caption vector against every image row.

    Both sides must already be unit-norm; the product is then the cosine.
    Accumulation runs in float64 block by block, and the output is clipped
    to [-1, 1] to absorb float32 storage jitter.
    """
    caption_vec = np.asarray(caption_vec, dtype=np.float64).reshape(-1)
    if caption_vec.size != images.dim:
        raise DimError(
            f"caption vector has {caption_vec.size} dims, images have {images.dim}"
        )
    if not images.normalized:
        raise StateError("image set is not normalized; run l2_normalize first")
    norm = float(np.linalg.norm(caption_vec))
    if abs(norm - 1.0) > 1e-5:
        raise StateError(f"caption vector norm is {norm:.6f}, expected 1.0")

    out = np.empty(images.count, dtype=np.float64)
    for start in range(0, images.count, _BLOCK_ROWS):
        stop = min(start + _BLOCK_ROWS, images.count)
        block = images.vectors[start:stop].astype(np.float64, copy=False)
        out[start:stop] = block @ caption_vec
    np.clip(out, -1.0, 1.0, out=out)
    return out


@dataclass(frozen=True)
class GroupMask:
    """A named subset of dataset rows."""

    selector: str
    member_indices: np.ndarray

    def __post_init__(self):
        indices = np.asarray(self.member_indices, dtype=np.int64)
        if indices.size == 0:
            raise DomainError(f"group {self.selector!r} selects no rows")
        if indices.min() < 0:
            raise DomainError(f"group {self.selector!r} has negative indices")
        if np.unique(indices).size != indices.size:
            raise DomainError(f"group {self.selector!r} repeats indices")
        object.__setattr__(self, "member_indices", np.sort(indices))


def group_mask(metadata: Sequence[DemographicRecord],
               race: Optional[Race] = None,
               gender: Optional[Gender] = None) -> GroupMask:
    """Build the mask of rows matching every given attribute."""
    if race is None and gender is None:
        raise DomainError("select at least one of race, gender")
    indices = [
        i for i, rec in enumerate(metadata)
        if (race is None or rec.race is race)
        and (gender is None or rec.gender is gender)
    ]
    parts = []
    if race is not None:
        parts.append(race.value)
    if gender is not None:
        parts.append(gender.value)
    return GroupMask(selector="".join(parts), member_indices=np.array(indices))


def casc(similarities: np.ndarray, group: GroupMask) -> float:
    """Standardized association between a caption and a demographic group.

    Mean similarity inside the group minus mean outside, divided by the
    population standard deviation of all similarities.  Positive values
    mean the caption sits closer to this group than to everyone else.
    """
    sims = np.asarray(similarities, dtype=np.float64).reshape(-1)
    n = sims.size
    members = group.member_indices
    if members.size and int(members.max()) >= n:
        raise DomainError(
            f"group {group.selector!r} indexes row {int(members.max())} "
            f"but there are only {n} similarities"
        )
    if members.size >= n:
        raise DomainError(
            f"group {group.selector!r} covers every row, complement is empty"
        )
    std = float(sims.std())
    if std < 1e-12:
        raise DegenerateDistributionError(
            f"similarity spread {std:.3e} is too small to standardize"
        )
    inside = np.zeros(n, dtype=bool)
    inside[members] = True
    mean_in = float(sims[inside].mean())
    mean_out = float(sims[~inside].mean())
    return (mean_in - mean_out) / std


def topk(similarities: np.ndarray, k: int) -> list[tuple[int, float]]:
    """Indices and scores of the k largest similarities.

    Exact selection: descending score, ties broken by ascending row index,
    so the output is reproducible across runs and machines.  Returns all
    rows when k exceeds the row count.
    """
    if k < 1:
        raise DomainError(f"k must be at least 1, got {k}")
    sims = np.asarray(similarities, dtype=np.float64).reshape(-1)
    n = sims.size
    take = min(k, n)
    if take == 0:
        return []
    if take == n:
        chosen = np.arange(n)
    else:
        candidates = np.argpartition(-sims, take - 1)[:take]
        threshold = sims[candidates].min()
        above = np.flatnonzero(sims > threshold)
        # flatnonzero returns ascending indices, which is exactly the
        # tie-break order for rows sitting at the threshold value.
        at = np.flatnonzero(sims == threshold)[: take - above.size]
        chosen = np.concatenate([above, at])
    order = np.lexsort((chosen, -sims[chosen]))
    ranked = chosen[order]
    return [(int(i), float(sims[i])) for i in ranked]


@dataclass
class GroupDistribution:
    """Probabilities over a fixed, ordered label set."""

    group_labels: list[str]
    probabilities: list[float]

    def __post_init__(self):
        if len(self.group_labels) != len(self.probabilities):
            raise DomainError("labels and probabilities differ in length")
        for p in self.probabilities:
            if not (0.0 <= p <= 1.0):
                raise DomainError(f"probability {p} outside [0, 1]")
        total = math.fsum(self.probabilities)
        if abs(total - 1.0) > 1e-9:
            raise DomainError(f"probabilities sum to {total}, expected 1")

    def argmax_label(self) -> str:
        best = max(range(len(self.probabilities)),
                   key=lambda i: (self.probabilities[i], -i))
        return self.group_labels[best]


def _labels_and_keys(group_by: frozenset[str]):
    if group_by == frozenset({"race"}):
        return race_labels(), lambda rec: rec.race.value
    if group_by == frozenset({"gender"}):
        return gender_labels(), lambda rec: rec.gender.value
    if group_by == frozenset({"race", "gender"}):
        return intersection_labels(), lambda rec: f"{rec.race.value}{rec.gender.value}"
    raise DomainError(f"cannot group by {sorted(group_by)!r}")


def group_distribution(retrieved: Sequence[int],
                       metadata: Sequence[DemographicRecord],
                       group_by: Iterable[str]) -> GroupDistribution:
    """Share of retrieved rows falling into each demographic group.

    Labels are fixed by the enum order regardless of the data, so absent
    groups show up as explicit zeros.
    """
    if len(retrieved) == 0:
        raise EmptyRetrievalError("cannot form a distribution over zero rows")
    labels, key = _labels_and_keys(frozenset(group_by))
    counts = dict.fromkeys(labels, 0)
    n = len(metadata)
    for idx in retrieved:
        if not 0 <= idx < n:
            raise DomainError(f"retrieved index {idx} outside 0..{n - 1}")
        counts[key(metadata[idx])] += 1
    total = len(retrieved)
    return GroupDistribution(
        group_labels=labels,
        probabilities=[counts[label] / total for label in labels],
    )


def normalized_entropy(distribution: GroupDistribution) -> float:
    """Shannon entropy scaled into [0, 1] by the label count.

    1 means the retrieval spread uniformly over the groups, 0 means it
    collapsed onto a single group.
    """
    n_labels = len(distribution.group_labels)
    if n_labels < 2:
        raise DomainError(f"need at least 2 labels, got {n_labels}")
    h = -math.fsum(p * math.log(p) for p in distribution.probabilities if p > 0.0)
    return h / math.log(n_labels)


def relevance_score(caption_mean: float, baseline_means: Sequence[float]) -> float:
    """Empirical CDF position of a caption's mean top-k similarity.

    The baseline is the same statistic computed for a large set of common
    words against the same image set; the score is the fraction of
    baseline entries strictly below the caption's value.
    """
    if len(baseline_means) == 0:
        raise DomainError("baseline is empty")
    baseline = np.asarray(baseline_means, dtype=np.float64)
    below = int(np.count_nonzero(baseline < caption_mean))
    return below / baseline.size


def mean_topk_similarity(similarities: np.ndarray, k: int) -> float:
    """Mean score over the top-k retrieved rows."""
    top = topk(similarities, k)
    if not top:
        raise EmptyRetrievalError("no rows to average")
    return float(np.mean([score for _, score in top]))
