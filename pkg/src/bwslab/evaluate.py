"""Official evaluation metrics and reports.

Per emotion: Pearson and Spearman correlation between predicted and gold
scores, plus the same two metrics restricted to instances with gold >= 0.5.
The bottom-line number is the macro average of per-emotion Pearson values.
Constant inputs raise a typed error instead of propagating NaN, since a NaN
would silently poison macro averages.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .corpus import Dataset, SubmissionRow

HIGH_RANGE_THRESHOLD = 0.5


class UndefinedCorrelationError(ValueError):
    """Correlation is undefined (constant input or fewer than two points)."""


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    return arr


def pearson(a, b) -> float:
    """Product-moment correlation of two equal-length vectors."""
    x = _as_vector(a, "a")
    y = _as_vector(b, "b")
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} vs {y.shape[0]}")
    if x.shape[0] < 2:
        raise UndefinedCorrelationError("need at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    denom = math.sqrt(float(dx @ dx)) * math.sqrt(float(dy @ dy))
    if denom == 0.0:
        raise UndefinedCorrelationError("correlation undefined for a constant vector")
    return float(dx @ dy) / denom


def average_ranks(values) -> np.ndarray:
    """1-based ranks; ties share the mean of the rank positions they span."""
    x = _as_vector(values, "values")
    n = x.shape[0]
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(n, dtype=np.float64)
    i = 0
    while i < n:
        j = i
        while j < n and x[order[j]] == x[order[i]]:
            j += 1
        ranks[order[i:j]] = 0.5 * (i + j - 1) + 1.0
        i = j
    return ranks


def spearman(a, b) -> float:
    """Rank correlation: Pearson over average-ranked values."""
    x = _as_vector(a, "a")
    y = _as_vector(b, "b")
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} vs {y.shape[0]}")
    if x.shape[0] < 2:
        raise UndefinedCorrelationError("need at least 2 points")
    return pearson(average_ranks(x), average_ranks(y))


@dataclass(frozen=True)
class EmotionMetrics:
    pearson: float
    spearman: float
    pearson_ge05: float | None
    spearman_ge05: float | None
    n: int
    n_ge05: int


@dataclass
class EvalReport:
    per_emotion: dict[str, EmotionMetrics] = field(default_factory=dict)

    def _macro(self, attr: str) -> float | None:
        values = []
        for emotion, m in sorted(self.per_emotion.items()):
            v = getattr(m, attr)
            if v is None:
                warnings.warn(
                    f"{attr} absent for {emotion}; skipped in the macro average",
                    stacklevel=3,
                )
            else:
                values.append(v)
        return sum(values) / len(values) if values else None

    @property
    def macro_pearson(self) -> float | None:
        return self._macro("pearson")

    @property
    def macro_spearman(self) -> float | None:
        return self._macro("spearman")

    @property
    def macro_pearson_ge05(self) -> float | None:
        return self._macro("pearson_ge05")

    @property
    def macro_spearman_ge05(self) -> float | None:
        return self._macro("spearman_ge05")

    def to_tsv(self) -> str:
        header = "emotion\tpearson\tspearman\tpearson_ge05\tspearman_ge05\tn\tn_ge05"
        fmt = lambda v: "NA" if v is None else f"{v:.6f}"  # noqa: E731
        lines = [header]
        for emotion, m in sorted(self.per_emotion.items()):
            lines.append(
                f"{emotion}\t{fmt(m.pearson)}\t{fmt(m.spearman)}"
                f"\t{fmt(m.pearson_ge05)}\t{fmt(m.spearman_ge05)}\t{m.n}\t{m.n_ge05}"
            )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            lines.append(
                "macro-avg"
                f"\t{fmt(self.macro_pearson)}\t{fmt(self.macro_spearman)}"
                f"\t{fmt(self.macro_pearson_ge05)}\t{fmt(self.macro_spearman_ge05)}"
                f"\t{sum(m.n for m in self.per_emotion.values())}"
                f"\t{sum(m.n_ge05 for m in self.per_emotion.values())}"
            )
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        rows = self.to_tsv().strip().split("\n")
        cells = [r.split("\t") for r in rows]
        widths = [max(len(c[i]) for c in cells) for i in range(len(cells[0]))]
        return "\n".join(
            "  ".join(c[i].ljust(widths[i]) for i in range(len(widths))) for c in cells
        ) + "\n"


def _metrics_for(gold: np.ndarray, pred: np.ndarray) -> EmotionMetrics:
    r = pearson(gold, pred)
    rho = spearman(gold, pred)
    mask = gold >= HIGH_RANGE_THRESHOLD
    n_hi = int(mask.sum())
    if n_hi >= 2:
        r_hi = pearson(gold[mask], pred[mask])
        rho_hi = spearman(gold[mask], pred[mask])
    else:
        r_hi = rho_hi = None
    return EmotionMetrics(
        pearson=r,
        spearman=rho,
        pearson_ge05=r_hi,
        spearman_ge05=rho_hi,
        n=int(gold.shape[0]),
        n_ge05=n_hi,
    )


def evaluate_submission(gold: Dataset, rows: list[SubmissionRow]) -> EvalReport:
    """Score one emotion's submission rows against its gold dataset.

    The submission must cover exactly the gold id set with matching emotions;
    offenders are listed in the raised error.
    """
    by_id = {}
    problems = []
    for row in rows:
        if row.id in by_id:
            problems.append(f"duplicate id {row.id!r}")
        by_id[row.id] = row
        if row.emotion != gold.emotion:
            problems.append(f"id {row.id!r}: emotion {row.emotion!r} != gold {gold.emotion!r}")
    gold_ids = set(gold.ids())
    for tid in sorted(gold_ids - set(by_id)):
        problems.append(f"missing id {tid!r}")
    for tid in sorted(set(by_id) - gold_ids):
        problems.append(f"extra id {tid!r}")
    if problems:
        raise ValueError("submission does not align with gold:\n" + "\n".join(problems))
    gold_scores = []
    pred_scores = []
    for tw in gold:
        if tw.gold_score is None:
            raise ValueError(f"gold dataset has no score for id {tw.id!r}")
        gold_scores.append(tw.gold_score)
        pred_scores.append(by_id[tw.id].score)
    report = EvalReport()
    assert gold.emotion is not None
    report.per_emotion[gold.emotion] = _metrics_for(
        np.asarray(gold_scores), np.asarray(pred_scores)
    )
    return report


def evaluate_many(pairs: list[tuple[Dataset, list[SubmissionRow]]]) -> EvalReport:
    """Evaluate several (gold dataset, submission rows) pairs into one report."""
    report = EvalReport()
    for gold, rows in pairs:
        if gold.emotion in report.per_emotion:
            raise ValueError(f"emotion {gold.emotion!r} appears twice")
        sub = evaluate_submission(gold, rows)
        report.per_emotion.update(sub.per_emotion)
    return report


@dataclass
class AblationTable:
    """Per-feature-set Pearson correlations, one row per configuration."""

    emotions: list[str]
    rows: list[tuple[str, dict[str, float], float]]  # (label, per-emotion r, avg)

    def to_tsv(self) -> str:
        lines = ["features\t" + "\t".join(self.emotions) + "\tavg"]
        for label, per, avg in self.rows:
            cells = [f"{per[e]:.4f}" for e in self.emotions]
            lines.append(f"{label}\t" + "\t".join(cells) + f"\t{avg:.4f}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        rows = self.to_tsv().strip().split("\n")
        cells = [r.split("\t") for r in rows]
        widths = [max(len(c[i]) for c in cells) for i in range(len(cells[0]))]
        return "\n".join(
            "  ".join(c[i].ljust(widths[i]) for i in range(len(widths))) for c in cells
        ) + "\n"


def ablation_run(
    splits: dict[str, tuple[Dataset, Dataset]],
    configs: list,
    resources,
    C: float = 1.0,
    epsilon: float = 0.1,
) -> AblationTable:
    """Train and score each feature configuration on each emotion's split.

    splits maps emotion -> (train, test) datasets with gold scores; configs
    are FeatureConfig instances (or labels parseable into them).
    """
    from .features import FeatureConfig, FeatureSpace
    from .regress import predict, train

    emotions = sorted(splits)
    rows = []
    for config in configs:
        if isinstance(config, str):
            config = FeatureConfig.parse(config)
        per: dict[str, float] = {}
        for emotion in emotions:
            train_ds, test_ds = splits[emotion]
            y_train = [tw.gold_score for tw in train_ds]
            y_test = [tw.gold_score for tw in test_ds]
            if any(v is None for v in y_train) or any(v is None for v in y_test):
                raise ValueError(f"{emotion}: ablation needs gold scores on both splits")
            space = FeatureSpace.fit(train_ds, config, resources)
            model = train(space.transform(train_ds), y_train, C=C, epsilon=epsilon)
            per[emotion] = pearson(y_test, predict(model, space.transform(test_ds)))
        avg = sum(per.values()) / len(per) if per else float("nan")
        rows.append((config.label, per, avg))
    return AblationTable(emotions=emotions, rows=rows)
