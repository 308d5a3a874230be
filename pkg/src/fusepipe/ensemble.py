"""Two ensembling levels: feature fusion across extractor models and
majority voting across trained classifiers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import IncompleteReport, LengthMismatch, RowMisalignment
from .featureio import FeatureMatrix


@dataclass
class RankEntry:
    tag: str
    mean: float
    std: float
    rank: int


@dataclass
class ModelRanking:
    """Feature sets ordered by mean accuracy (desc), then std (asc), then
    name (asc)."""

    entries: list[RankEntry]

    def top(self, k: int) -> list[str]:
        return [e.tag for e in self.entries[:k]]


def rank_feature_sets(report) -> ModelRanking:
    """Mean accuracy of each feature-set row across all classifier columns
    of a single-model report."""
    _require_complete(report)
    entries = []
    for row in report.row_labels:
        vals = np.array([report.cells[(row, col)] for col in report.col_labels])
        entries.append(RankEntry(tag=row, mean=float(vals.mean()), std=float(vals.std()), rank=0))
    entries.sort(key=lambda e: (-e.mean, e.std, e.tag))
    for i, e in enumerate(entries):
        e.rank = i + 1
    return ModelRanking(entries=entries)


def rank_classifiers(report, k: int, top_sets: int | None = None) -> list[str]:
    """Classifier kinds ordered by mean accuracy over the report's
    feature-set rows (the table's Average row); the best k are returned.
    ``top_sets`` restricts the mean to the top-ranked rows."""
    _require_complete(report)
    if k > len(report.col_labels):
        raise ValueError(f"asked for top-{k} of {len(report.col_labels)} classifiers")
    if top_sets is None:
        rows = list(report.row_labels)
    else:
        ranking = rank_feature_sets(report)
        rows = ranking.top(min(top_sets, len(report.row_labels)))
    scored = []
    for col in report.col_labels:
        vals = np.array([report.cells[(row, col)] for row in rows])
        scored.append((col, float(vals.mean()), float(vals.std())))
    scored.sort(key=lambda t: (-t[1], t[2], t[0]))
    return [name for name, _, _ in scored[:k]]


def _require_complete(report):
    missing = [
        (r, c)
        for r in report.row_labels
        for c in report.col_labels
        if (r, c) not in report.cells
    ]
    if missing:
        raise IncompleteReport(f"missing cells: {missing[:5]}{'...' if len(missing) > 5 else ''}")


@dataclass
class FusionSet:
    tags: tuple[str, ...]
    fused_dim: int = 0

    @property
    def label(self) -> str:
        return "+".join(self.tags)


def enumerate_fusions(top3: list[str]) -> list[FusionSet]:
    """The three pairs and the triple of the top-3 tags, pairs first, in
    rank order: (1+2, 1+3, 2+3, 1+2+3)."""
    if len(top3) != 3:
        raise ValueError(f"expected exactly 3 tags, got {len(top3)}")
    a, b, c = top3
    return [FusionSet((a, b)), FusionSet((a, c)), FusionSet((b, c)), FusionSet((a, b, c))]


def fuse_features(sources: list[FeatureMatrix]) -> FeatureMatrix:
    """Column-wise concatenation of feature matrices over identical samples
    in identical order."""
    if not sources:
        raise ValueError("no sources to fuse")
    first = sources[0]
    for other in sources[1:]:
        if other.sample_ids != first.sample_ids:
            raise RowMisalignment(
                f"sample ids of {other.model_tag!r} do not match {first.model_tag!r}"
            )
    return FeatureMatrix(
        sample_ids=list(first.sample_ids),
        model_tag="+".join(s.model_tag for s in sources),
        values=np.hstack([s.values for s in sources]),
    )


@dataclass
class VotingEnsemble:
    """Classifier-level ensemble: member kinds with their CV ranks."""

    members: list[str]
    ranks: list[int]
    policy: str = "simple-majority"
    weights: list[float] | None = None

    def __post_init__(self):
        if len(self.members) < 2:
            raise ValueError("a voting ensemble needs at least 2 members")
        if self.policy not in ("simple-majority", "weighted"):
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.policy == "weighted":
            if self.weights is None or len(self.weights) != len(self.members):
                raise ValueError("weighted policy needs one positive weight per member")
            if any(w <= 0 for w in self.weights):
                raise ValueError("weights must be positive")

    @property
    def label(self) -> str:
        return "+".join(self.members)


def majority_vote(
    member_predictions: list[np.ndarray],
    ranks: list[int],
    policy: str = "simple-majority",
    weights: list[float] | None = None,
) -> np.ndarray:
    """Per-sample modal label across members.

    A modal tie goes to the tied label predicted by the best-ranked member
    among those voting for a tied label (rank 1 is best).  The weighted
    policy multiplies each member's vote by its positive weight before the
    same rule applies.
    """
    if not member_predictions:
        raise LengthMismatch("no member predictions")
    preds = [np.asarray(p, dtype=np.int64) for p in member_predictions]
    n = len(preds[0])
    if any(len(p) != n for p in preds):
        raise LengthMismatch("members predicted different sample counts")
    if len(ranks) != len(preds):
        raise LengthMismatch("one rank per member required")
    if policy == "weighted":
        if weights is None or len(weights) != len(preds) or any(w <= 0 for w in weights):
            raise ValueError("weighted policy needs one positive weight per member")
        w = np.asarray(weights, dtype=np.float64)
    else:
        w = np.ones(len(preds))

    stacked = np.stack(preds, axis=0)  # (m, n)
    n_labels = int(stacked.max()) + 1 if n else 1
    scores = np.zeros((n, n_labels))
    for m in range(len(preds)):
        scores[np.arange(n), stacked[m]] += w[m]

    out = np.empty(n, dtype=np.int64)
    best = scores.max(axis=1) if n else np.zeros(0)
    member_order = np.argsort(np.asarray(ranks), kind="stable")  # best rank first
    for i in range(n):
        tied = np.flatnonzero(scores[i] == best[i])
        if len(tied) == 1:
            out[i] = tied[0]
            continue
        for m in member_order:
            if stacked[m, i] in tied:
                out[i] = stacked[m, i]
                break
    return out
