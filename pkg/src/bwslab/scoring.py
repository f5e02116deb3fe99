"""Turn best-worst responses into item intensity scores.

For each item t, the raw score is

    (#times t chosen best - #times t chosen worst) / #judgments on tuples containing t

which lives in [-1, 1]; the published scale is the affine map (raw + 1) / 2
into [0, 1]. With the full design annotated by three annotators, every item
has exactly 8 x 3 = 24 judgments. Split-half reliability re-scores two random
halves of the annotations and correlates them, averaged over many splits.
"""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass
from pathlib import Path

from .evaluate import pearson, spearman
from .tuples import Tuple4, TupleSet


class InvalidResponseError(ValueError):
    """A response whose best/worst selections are impossible for its tuple."""


class UnknownTupleError(KeyError):
    """A response references a tuple id absent from the tuple set."""


@dataclass(frozen=True)
class BwsResponse:
    tuple_id: str
    annotator_id: str
    best: str
    worst: str
    is_gold: bool = False
    gold_correct: bool | None = None

    def __post_init__(self) -> None:
        if self.best == self.worst:
            raise InvalidResponseError(
                f"tuple {self.tuple_id}: best and worst are both {self.best!r}"
            )
        if self.is_gold != (self.gold_correct is not None):
            raise ValueError("gold_correct must be present exactly for gold responses")


@dataclass(frozen=True)
class ScoreEntry:
    raw: float
    scaled: float
    n_judgments: int


@dataclass(frozen=True)
class ScoreTable:
    emotion: str | None
    entries: dict[str, ScoreEntry]

    def scaled(self, item_id: str) -> float:
        return self.entries[item_id].scaled

    def items_by_score(self) -> list[tuple[str, ScoreEntry]]:
        return sorted(self.entries.items(), key=lambda kv: (-kv[1].scaled, kv[0]))


def implied_pair_orders(tup: Tuple4, best: str, worst: str) -> set[tuple[str, str]]:
    """The five orderings one best-worst judgment reveals on a 4-tuple.

    best > x for each of the three other items, and x > worst for the two
    items that are neither best nor worst.
    """
    if best == worst:
        raise InvalidResponseError(f"tuple {tup.tuple_id}: best equals worst ({best!r})")
    members = set(tup.item_ids)
    for label, item in (("best", best), ("worst", worst)):
        if item not in members:
            raise InvalidResponseError(
                f"tuple {tup.tuple_id}: {label} item {item!r} is not in the tuple"
            )
    pairs = {(best, other) for other in members if other != best}
    pairs |= {(other, worst) for other in members if other not in (best, worst)}
    return pairs


def _check_response(resp: BwsResponse, by_id: dict[str, Tuple4]) -> Tuple4:
    if resp.tuple_id not in by_id:
        raise UnknownTupleError(resp.tuple_id)
    tup = by_id[resp.tuple_id]
    members = set(tup.item_ids)
    if resp.best not in members or resp.worst not in members:
        raise InvalidResponseError(
            f"tuple {resp.tuple_id}: response items ({resp.best!r}, {resp.worst!r}) "
            f"are not both in the tuple"
        )
    return tup


def compute_scores(
    tuples: TupleSet,
    responses: list[BwsResponse],
    include_gold: bool = False,
    emotion: str | None = None,
) -> ScoreTable:
    """Count-based scoring of best-worst responses.

    Gold-question responses duplicate internally answered tuples and are
    excluded unless include_gold is set. Items with zero judgments are simply
    absent from the table.
    """
    by_id = tuples.by_id()
    n_judged: dict[str, int] = {}
    n_best: dict[str, int] = {}
    n_worst: dict[str, int] = {}
    for resp in responses:
        tup = _check_response(resp, by_id)
        if resp.is_gold and not include_gold:
            continue
        for item in tup.item_ids:
            n_judged[item] = n_judged.get(item, 0) + 1
        n_best[resp.best] = n_best.get(resp.best, 0) + 1
        n_worst[resp.worst] = n_worst.get(resp.worst, 0) + 1
    entries = {}
    for item, n in n_judged.items():
        raw = (n_best.get(item, 0) - n_worst.get(item, 0)) / n
        entries[item] = ScoreEntry(raw=raw, scaled=(raw + 1.0) / 2.0, n_judgments=n)
    return ScoreTable(emotion=emotion, entries=entries)


def _derive_rng(seed: int, iteration: int) -> random.Random:
    return random.Random((seed + 0x9E3779B1 * (iteration + 1)) % (1 << 63))


@dataclass(frozen=True)
class ShrResult:
    pearson: float
    spearman: float
    iterations: int


def split_half_reliability(
    tuples: TupleSet,
    responses: list[BwsResponse],
    iterations: int = 100,
    seed: int = 0,
    include_gold: bool = False,
) -> ShrResult:
    """Mean correlation between scores from two random halves of the responses.

    Each tuple's responses are shuffled and cut into two non-empty bins of
    floor and ceil halves (for three responses: one and two). Which bin takes
    the heavier share is decided once per iteration, so two bins built from
    identical annotations score identically. Scores are computed per bin and
    correlated over the items present in both. The per-iteration RNG is
    derived from (seed, iteration), so runs are reproducible and iterations
    independent.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    scoreable = [r for r in responses if include_gold or not r.is_gold]
    by_tuple: dict[str, list[BwsResponse]] = {}
    by_id = tuples.by_id()
    for resp in scoreable:
        _check_response(resp, by_id)
        by_tuple.setdefault(resp.tuple_id, []).append(resp)
    for tid, group in sorted(by_tuple.items()):
        if len(group) < 2:
            raise ValueError(f"tuple {tid} has {len(group)} response(s); need >= 2 to split")

    r_sum = 0.0
    rho_sum = 0.0
    for it in range(iterations):
        rng = _derive_rng(seed, it)
        heavy_first = rng.random() < 0.5
        half_a: list[BwsResponse] = []
        half_b: list[BwsResponse] = []
        for tid in sorted(by_tuple):
            group = list(by_tuple[tid])
            rng.shuffle(group)
            cut = (len(group) + 1) // 2 if heavy_first else len(group) // 2
            half_a.extend(group[:cut])
            half_b.extend(group[cut:])
        ta = compute_scores(tuples, half_a, include_gold=include_gold)
        tb = compute_scores(tuples, half_b, include_gold=include_gold)
        common = sorted(set(ta.entries) & set(tb.entries))
        va = [ta.entries[i].scaled for i in common]
        vb = [tb.entries[i].scaled for i in common]
        r_sum += pearson(va, vb)
        rho_sum += spearman(va, vb)
    return ShrResult(
        pearson=r_sum / iterations, spearman=rho_sum / iterations, iterations=iterations
    )


RESPONSE_CSV_HEADER = [
    "tuple_id",
    "annotator_id",
    "best",
    "worst",
    "is_gold",
    "gold_correct",
    "timestamp",
]


def responses_to_csv(
    responses: list[BwsResponse], timestamps: list[str] | None = None
) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(RESPONSE_CSV_HEADER)
    for i, r in enumerate(responses):
        ts = timestamps[i] if timestamps else ""
        writer.writerow(
            [
                r.tuple_id,
                r.annotator_id,
                r.best,
                r.worst,
                "true" if r.is_gold else "false",
                "" if r.gold_correct is None else ("true" if r.gold_correct else "false"),
                ts,
            ]
        )
    return buf.getvalue()


def write_responses_csv(
    responses: list[BwsResponse], path: str | Path, timestamps: list[str] | None = None
) -> None:
    Path(path).write_text(responses_to_csv(responses, timestamps), encoding="utf-8")


def _parse_bool(token: str, lineno: int, field_name: str) -> bool:
    t = token.strip().lower()
    if t in ("true", "1", "yes"):
        return True
    if t in ("false", "0", "no", ""):
        return False
    raise ValueError(f"line {lineno}: bad boolean {token!r} for {field_name}")


def read_responses_csv(path: str | Path) -> list[BwsResponse]:
    responses = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return []
        if [h.strip() for h in header] != RESPONSE_CSV_HEADER:
            raise ValueError(
                f"unexpected response header {header!r}; want {RESPONSE_CSV_HEADER!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(RESPONSE_CSV_HEADER):
                raise ValueError(f"line {lineno}: expected {len(RESPONSE_CSV_HEADER)} fields")
            tid, annotator, best, worst, gold_tok, correct_tok, _ts = row
            is_gold = _parse_bool(gold_tok, lineno, "is_gold")
            gold_correct = (
                _parse_bool(correct_tok, lineno, "gold_correct") if is_gold else None
            )
            responses.append(
                BwsResponse(
                    tuple_id=tid,
                    annotator_id=annotator,
                    best=best,
                    worst=worst,
                    is_gold=is_gold,
                    gold_correct=gold_correct,
                )
            )
    return responses
