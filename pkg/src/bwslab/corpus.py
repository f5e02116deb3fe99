"""Corpus data model and TSV I/O for tweet emotion-intensity datasets.

A corpus file is a UTF-8, LF-terminated TSV with four columns per line:

    id<TAB>text<TAB>emotion<TAB>score

Unlabeled instances carry the literal score sentinel ``NONE``. Submission
files use the identical layout. Tweets whose id ends in ``-nqt`` are treated
as hashtag-stripped copies paired with the tweet whose id precedes the
suffix; this convention is how pair links survive the four-column format.
"""

from __future__ import annotations

import dataclasses
import math
import random
import re
from dataclasses import dataclass
from pathlib import Path

EMOTIONS = ("anger", "fear", "joy", "sadness")

SCORE_SENTINEL = "NONE"

# Suffix appended to an id when a stripped copy of the tweet is created.
NQT_ID_SUFFIX = "-nqt"


class CorpusError(ValueError):
    """Raised for malformed corpus or submission files."""


class SubmissionFormatError(ValueError):
    """Raised when a submission fails the format check."""


@dataclass(frozen=True)
class Tweet:
    """One corpus instance.

    kind is "QT" for ordinary instances, "HQT" for a tweet whose trailing
    hashtag segment contained a query term, and "NQT" for the copy of an HQT
    tweet with that hashtag removed. pair_id links an NQT copy to its source.
    """

    id: str
    text: str
    emotion: str
    gold_score: float | None = None
    kind: str = "QT"
    pair_id: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("tweet id must be nonempty")
        if self.emotion not in EMOTIONS:
            raise ValueError(f"unknown emotion {self.emotion!r}")
        if self.gold_score is not None:
            if not math.isfinite(self.gold_score) or not 0.0 <= self.gold_score <= 1.0:
                raise ValueError(f"gold score {self.gold_score} outside [0, 1]")
        if self.kind not in ("QT", "HQT", "NQT"):
            raise ValueError(f"unknown tweet kind {self.kind!r}")
        if (self.kind == "NQT") != (self.pair_id is not None):
            raise ValueError("pair_id must be present exactly when kind is NQT")


@dataclass(frozen=True)
class Dataset:
    """An ordered, single-emotion collection of tweets with unique ids."""

    emotion: str | None
    tweets: tuple[Tweet, ...]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for tw in self.tweets:
            if tw.id in seen:
                raise ValueError(f"duplicate tweet id {tw.id!r}")
            seen.add(tw.id)
            if tw.emotion != self.emotion:
                raise ValueError(
                    f"tweet {tw.id!r} has emotion {tw.emotion!r}, dataset is {self.emotion!r}"
                )

    def __len__(self) -> int:
        return len(self.tweets)

    def __iter__(self):
        return iter(self.tweets)

    def ids(self) -> list[str]:
        return [tw.id for tw in self.tweets]

    def by_id(self) -> dict[str, Tweet]:
        return {tw.id: tw for tw in self.tweets}


@dataclass(frozen=True)
class SubmissionRow:
    id: str
    text: str
    emotion: str
    score: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.score):
            raise ValueError(f"submission score for {self.id!r} is not finite")


def _parse_score(token: str, lineno: int, *, expect_gold: bool) -> float | None:
    if token == SCORE_SENTINEL:
        if expect_gold:
            raise CorpusError(f"line {lineno}: score sentinel {SCORE_SENTINEL!r} in a gold file")
        return None
    try:
        value = float(token)
    except ValueError:
        raise CorpusError(f"line {lineno}: unparseable score {token!r}") from None
    if not math.isfinite(value) or not 0.0 <= value <= 1.0:
        raise CorpusError(f"line {lineno}: score {token} outside [0, 1]")
    return value


def _split_line(line: str, lineno: int) -> tuple[str, str, str, str]:
    cols = line.split("\t")
    if len(cols) != 4:
        raise CorpusError(f"line {lineno}: expected 4 tab-separated columns, got {len(cols)}")
    return cols[0], cols[1], cols[2], cols[3]


def parse_corpus(path: str | Path, expect_gold: bool = True, link_pairs: bool = True) -> Dataset:
    """Read a four-column corpus TSV into a Dataset.

    With expect_gold=False the score column may hold the ``NONE`` sentinel and
    those tweets carry no gold score. link_pairs re-derives HQT/NQT pairing
    from the ``-nqt`` id convention.
    """
    text = Path(path).read_text(encoding="utf-8")
    tweets: list[Tweet] = []
    emotion: str | None = None
    seen: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line == "":
            raise CorpusError(f"line {lineno}: blank line")
        tid, body, emo, score_tok = _split_line(line, lineno)
        if not tid:
            raise CorpusError(f"line {lineno}: empty id")
        if tid in seen:
            raise CorpusError(f"line {lineno}: duplicate id {tid!r}")
        seen.add(tid)
        if emo not in EMOTIONS:
            raise CorpusError(f"line {lineno}: unknown emotion token {emo!r}")
        if emotion is None:
            emotion = emo
        elif emo != emotion:
            raise CorpusError(f"line {lineno}: emotion {emo!r} differs from file emotion {emotion!r}")
        score = _parse_score(score_tok, lineno, expect_gold=expect_gold)
        tweets.append(Tweet(id=tid, text=body, emotion=emo, gold_score=score))
    if link_pairs:
        tweets = _link_pairs(tweets)
    return Dataset(emotion=emotion, tweets=tuple(tweets))


def _link_pairs(tweets: list[Tweet]) -> list[Tweet]:
    ids = {tw.id for tw in tweets}
    out: list[Tweet] = []
    hqt_ids = {
        tw.id[: -len(NQT_ID_SUFFIX)]
        for tw in tweets
        if tw.id.endswith(NQT_ID_SUFFIX) and tw.id[: -len(NQT_ID_SUFFIX)] in ids
    }
    for tw in tweets:
        if tw.id.endswith(NQT_ID_SUFFIX) and tw.id[: -len(NQT_ID_SUFFIX)] in ids:
            out.append(dataclasses.replace(tw, kind="NQT", pair_id=tw.id[: -len(NQT_ID_SUFFIX)]))
        elif tw.id in hqt_ids:
            out.append(dataclasses.replace(tw, kind="HQT"))
        else:
            out.append(tw)
    return out


def _format_score(score: float | None) -> str:
    return SCORE_SENTINEL if score is None else repr(score)


def write_corpus(ds: Dataset, path: str | Path) -> None:
    """Write a Dataset back to the four-column TSV format (LF endings)."""
    lines = [f"{tw.id}\t{tw.text}\t{tw.emotion}\t{_format_score(tw.gold_score)}" for tw in ds]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


_HASHTAG_WORD = re.compile(r"#\w+\Z")


def _is_hashtag_token(token: str) -> bool:
    return bool(_HASHTAG_WORD.match(token))


def strip_trailing_hashtag_query(tweet: Tweet, query_terms: set[str]) -> Tweet | None:
    """Create the hashtag-stripped copy of a tweet, if it qualifies.

    Qualification: the tweet ends in a run of tokens that are all hashtags,
    and at least one of those hashtags is #<query term>. The copy drops every
    such hashtag, normalizes whitespace, gets id ``<source id>-nqt``, kind
    NQT, and pair_id pointing at the source. Returns None when the tweet does
    not qualify (including when stripping would leave no text).
    """
    tokens = tweet.text.split()
    start = len(tokens)
    while start > 0 and _is_hashtag_token(tokens[start - 1]):
        start -= 1
    trailing = range(start, len(tokens))
    hits = [i for i in trailing if tokens[i][1:].lower() in query_terms]
    if not hits:
        return None
    kept = [tok for i, tok in enumerate(tokens) if i not in set(hits)]
    if not kept:
        return None
    return dataclasses.replace(
        tweet,
        id=tweet.id + NQT_ID_SUFFIX,
        text=" ".join(kept),
        kind="NQT",
        pair_id=tweet.id,
    )


def add_stripped_copies(ds: Dataset, query_terms: set[str]) -> Dataset:
    """Append NQT copies for every qualifying tweet and re-kind their sources."""
    out: list[Tweet] = []
    copies: list[Tweet] = []
    for tw in ds:
        copy = strip_trailing_hashtag_query(tw, query_terms)
        if copy is None:
            out.append(tw)
        else:
            out.append(dataclasses.replace(tw, kind="HQT"))
            copies.append(copy)
    return Dataset(emotion=ds.emotion, tweets=tuple(out + copies))


def partition_dataset(
    ds: Dataset, fractions: tuple[float, float, float], seed: int
) -> tuple[Dataset, Dataset, Dataset]:
    """Split a dataset into train/dev/test keeping HQT/NQT pairs together.

    Pairs are shuffled as indivisible units and the shuffled order is cut at
    the rounded cumulative-fraction boundaries, so split sizes match the
    fractions to within one pair.
    """
    f_train, f_dev, f_test = fractions
    if min(f_train, f_dev, f_test) < 0 or abs(f_train + f_dev + f_test - 1.0) > 1e-9:
        raise ValueError("fractions must be non-negative and sum to 1")
    by_id = ds.by_id()
    units: dict[str, list[Tweet]] = {}
    order: list[str] = []
    for tw in ds:
        anchor = tw.pair_id if tw.kind == "NQT" else tw.id
        if tw.kind == "NQT":
            if tw.pair_id not in by_id:
                raise ValueError(f"tweet {tw.id!r} has dangling pair_id {tw.pair_id!r}")
        if anchor not in units:
            units[anchor] = []
            order.append(anchor)
        units[anchor].append(tw)

    rng = random.Random(seed)
    rng.shuffle(order)

    n = len(ds)
    b1 = round(f_train * n)
    b2 = round((f_train + f_dev) * n)
    assignment: dict[str, int] = {}
    cum = 0
    for anchor in order:
        split = 0 if cum < b1 else (1 if cum < b2 else 2)
        for tw in units[anchor]:
            assignment[tw.id] = split
        cum += len(units[anchor])

    splits: tuple[list[Tweet], list[Tweet], list[Tweet]] = ([], [], [])
    for tw in ds:  # keep original corpus order inside each split
        splits[assignment[tw.id]].append(tw)
    return tuple(Dataset(emotion=ds.emotion, tweets=tuple(part)) for part in splits)  # type: ignore[return-value]


def write_submission(rows: list[SubmissionRow], path: str | Path) -> None:
    lines = [f"{r.id}\t{r.text}\t{r.emotion}\t{r.score!r}" for r in rows]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def read_submission(path: str | Path) -> list[SubmissionRow]:
    """Strict submission reader; use check_submission_format for diagnostics."""
    rows: list[SubmissionRow] = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        tid, body, emo, score_tok = _split_line(line, lineno)
        if emo not in EMOTIONS:
            raise CorpusError(f"line {lineno}: unknown emotion token {emo!r}")
        try:
            score = float(score_tok)
        except ValueError:
            raise CorpusError(f"line {lineno}: unparseable score {score_tok!r}") from None
        rows.append(SubmissionRow(id=tid, text=body, emotion=emo, score=score))
    return rows


@dataclass
class FormatReport:
    """Outcome of checking a submission file against a gold dataset."""

    problems: list[str]
    missing_ids: list[str]
    extra_ids: list[str]
    n_rows: int

    @property
    def ok(self) -> bool:
        return not self.problems

    def summary(self) -> str:
        if self.ok:
            return f"OK: {self.n_rows} rows cover the gold id set exactly"
        return "\n".join(self.problems)


def check_submission_format(path: str | Path, gold: Dataset) -> FormatReport:
    """Validate a submission file: coverage of the gold ids, parseable scores,
    matching emotions, and the four-column shape. Collects every problem
    rather than stopping at the first."""
    problems: list[str] = []
    seen: dict[str, int] = {}
    gold_ids = set(gold.ids())
    n_rows = 0
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        cols = line.split("\t")
        if len(cols) != 4:
            problems.append(f"line {lineno}: expected 4 tab-separated columns, got {len(cols)}")
            continue
        n_rows += 1
        tid, _body, emo, score_tok = cols
        if tid in seen:
            problems.append(f"line {lineno}: duplicate id {tid!r} (first seen line {seen[tid]})")
        else:
            seen[tid] = lineno
        if tid not in gold_ids:
            problems.append(f"line {lineno}: extra id {tid!r} not in the gold set")
        if emo != gold.emotion:
            problems.append(f"line {lineno}: emotion {emo!r} does not match gold {gold.emotion!r}")
        try:
            value = float(score_tok)
            if not math.isfinite(value):
                raise ValueError
        except ValueError:
            problems.append(f"line {lineno}: unparseable score {score_tok!r}")
    missing = sorted(gold_ids - set(seen))
    extra = sorted(set(seen) - gold_ids)
    for tid in missing:
        problems.append(f"missing id {tid!r}")
    return FormatReport(problems=problems, missing_ids=missing, extra_ids=extra, n_rows=n_rows)


def load_query_terms(path: str | Path) -> set[str]:
    """Query-term list: one lowercase word per line; blanks ignored."""
    terms = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        word = line.strip().lower()
        if word:
            terms.add(word)
    return terms
