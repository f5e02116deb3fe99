"""Annotation collection service: assignment, gold-question quality control,
lockout, and an append-only event log.

State transitions are event-sourced. Every mutation is described by a JSON
event that is first applied to in-memory state and then appended to a
newline-delimited log, so restarting the service and replaying the log
reconstructs the exact same state. Randomized decisions (gold-or-not, tuple
choice, display order) are drawn from an RNG derived from (task seed,
assignment sequence number) and recorded inside the event, which keeps replay
deterministic without persisting RNG internals.

Quality control: roughly gold_rate of assignments are gold questions with
known acceptable answers. A wrong gold answer is reported to the annotator
immediately. Once an annotator has seen at least min_gold_before_lockout gold
questions and their accuracy drops below the threshold, they are locked out,
every response they contributed is discarded, and the affected tuples rejoin
the assignment queue until they reach the target number of retained
responses.
"""

from __future__ import annotations

import datetime as _dt
import json
import random
import secrets
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import EMOTIONS
from .scoring import BwsResponse, responses_to_csv
from .tuples import Tuple4, TupleSet

ACCURACY_THRESHOLD = 0.70


class ServiceError(Exception):
    """Base class for annotation-service errors."""


class UnknownTaskError(ServiceError, KeyError):
    pass


class LockedOutError(ServiceError):
    """The annotator fell below the gold-question accuracy threshold."""


class ProtocolError(ServiceError):
    """Submit for a tuple that is not the annotator's current assignment."""


class InvalidSelectionError(ServiceError, ValueError):
    """best/worst selections that are impossible for the assigned tuple."""


class InvalidSessionError(ServiceError):
    pass


@dataclass(frozen=True)
class GoldKey:
    tuple_id: str
    acceptable_best: frozenset[str]
    acceptable_worst: frozenset[str]

    def __post_init__(self) -> None:
        if not self.acceptable_best or not self.acceptable_worst:
            raise ValueError(f"gold key {self.tuple_id}: acceptable sets must be nonempty")
        if self.acceptable_best & self.acceptable_worst:
            raise ValueError(f"gold key {self.tuple_id}: best and worst sets overlap")


@dataclass
class TaskConfig:
    target_responses_per_tuple: int = 3
    gold_rate: float = 0.05
    min_gold_before_lockout: int = 4
    accuracy_threshold: float = ACCURACY_THRESHOLD
    seed: int = 0

    def validate(self) -> None:
        if self.target_responses_per_tuple < 1:
            raise ValueError("target_responses_per_tuple must be >= 1")
        if not 0.0 <= self.gold_rate <= 1.0:
            raise ValueError("gold_rate must be in [0, 1]")
        if self.min_gold_before_lockout < 1:
            raise ValueError("min_gold_before_lockout must be >= 1")
        if not 0.0 < self.accuracy_threshold <= 1.0:
            raise ValueError("accuracy_threshold must be in (0, 1]")


@dataclass
class Assignment:
    tuple_id: str
    is_gold: bool
    display: tuple[str, ...]


@dataclass
class AnnotatorState:
    annotator_id: str
    gold_seen: int = 0
    gold_correct: int = 0
    locked: bool = False
    n_responses: int = 0
    seen: set[str] = field(default_factory=set)
    active: Assignment | None = None

    @property
    def accuracy(self) -> float | None:
        return self.gold_correct / self.gold_seen if self.gold_seen else None


@dataclass
class StoredResponse:
    annotator_id: str
    tuple_id: str
    best: str
    worst: str
    is_gold: bool
    gold_correct: bool | None
    timestamp: str
    discarded: bool = False


@dataclass
class Verdict:
    accepted: bool
    gold_feedback: dict | None
    accuracy: float | None
    locked: bool

    def to_json(self) -> dict:
        return {
            "accepted": self.accepted,
            "gold_feedback": self.gold_feedback,
            "accuracy": self.accuracy,
            "locked": self.locked,
        }


EMOTION_ADJECTIVE = {
    "anger": "angry",
    "fear": "fearful",
    "joy": "joyful",
    "sadness": "sad",
}


def questionnaire_html(emotion: str) -> str:
    """Instruction block shown above every tuple, parameterized by emotion."""
    adj = EMOTION_ADJECTIVE[emotion]
    return f"""<div class="questionnaire">
<h2>How {adj} does each speaker sound?</h2>
<p>Below are four tweets from four different speakers. Reading each tweet,
judge how {adj} its speaker probably felt while writing it, then answer the
two questions.</p>
<ul>
<li>Rate the speaker of the tweet, not anyone the tweet talks about or to.</li>
<li>If two speakers seem equally {adj}, pick whichever one; do not agonize.</li>
<li>Go with your first impression; there is no need to overthink.</li>
</ul>
<p class="question">Q1. Which of the four speakers is likely the MOST {adj}?</p>
<p class="question">Q2. Which of the four speakers is likely the LEAST {adj}?</p>
</div>"""


def _now_iso() -> str:
    return _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def _derive_rng(seed: int, sequence: int) -> random.Random:
    return random.Random((seed + 0x9E3779B1 * (sequence + 1)) % (1 << 63))


class AnnotationTask:
    """One emotion's annotation effort over a fixed tuple set."""

    def __init__(
        self,
        task_id: str,
        emotion: str,
        tuples: TupleSet,
        items: dict[str, str],
        gold_keys: list[GoldKey],
        config: TaskConfig,
    ):
        config.validate()
        if emotion not in EMOTIONS:
            raise ValueError(f"unknown emotion {emotion!r}")
        by_id = tuples.by_id()
        for item in tuples.item_universe:
            if item not in items:
                raise ValueError(f"tuple set references item {item!r} with no text")
        for gk in gold_keys:
            if gk.tuple_id not in by_id:
                raise ValueError(f"gold key references unknown tuple {gk.tuple_id!r}")
            members = set(by_id[gk.tuple_id].item_ids)
            if not gk.acceptable_best <= members or not gk.acceptable_worst <= members:
                raise ValueError(f"gold key {gk.tuple_id}: acceptable ids outside the tuple")
        self.task_id = task_id
        self.emotion = emotion
        self.tuples = by_id
        self.tuple_order = sorted(by_id)
        self.items = dict(items)
        self.gold_keys = {gk.tuple_id: gk for gk in gold_keys}
        self.config = config
        self.lock = threading.RLock()
        self.annotators: dict[str, AnnotatorState] = {}
        self.responses: list[StoredResponse] = []
        self.response_index: dict[tuple[str, str], StoredResponse] = {}
        self.retained: dict[str, int] = {tid: 0 for tid in by_id}
        # Outstanding non-gold assignments per tuple: they reserve a retained
        # slot so concurrent annotators cannot over-fill a tuple.
        self.pending: dict[str, int] = {tid: 0 for tid in by_id}
        self.assign_seq = 0

    # -- helpers -------------------------------------------------------------

    def annotator(self, annotator_id: str) -> AnnotatorState:
        if annotator_id not in self.annotators:
            self.annotators[annotator_id] = AnnotatorState(annotator_id=annotator_id)
        return self.annotators[annotator_id]

    def _verdict_for(self, resp: StoredResponse, st: AnnotatorState) -> Verdict:
        feedback = None
        if resp.is_gold:
            feedback = {
                "correct": bool(resp.gold_correct),
                "message": (
                    "Gold question answered correctly."
                    if resp.gold_correct
                    else "Gold question answered incorrectly; this tuple had a "
                    "known acceptable answer."
                ),
            }
        return Verdict(
            accepted=True, gold_feedback=feedback, accuracy=st.accuracy, locked=st.locked
        )

    # -- event application (shared by live path and replay) -------------------

    def _clear_active(self, st: AnnotatorState) -> None:
        if st.active is not None and not st.active.is_gold:
            self.pending[st.active.tuple_id] -= 1
        st.active = None

    def apply_event(self, ev: dict) -> None:
        kind = ev["type"]
        if kind == "assign":
            st = self.annotator(ev["annotator_id"])
            st.active = Assignment(
                tuple_id=ev["tuple_id"], is_gold=ev["is_gold"], display=tuple(ev["display"])
            )
            st.seen.add(ev["tuple_id"])
            if not ev["is_gold"]:
                self.pending[ev["tuple_id"]] += 1
            self.assign_seq += 1
        elif kind == "response":
            st = self.annotator(ev["annotator_id"])
            resp = StoredResponse(
                annotator_id=ev["annotator_id"],
                tuple_id=ev["tuple_id"],
                best=ev["best"],
                worst=ev["worst"],
                is_gold=ev["is_gold"],
                gold_correct=ev["gold_correct"],
                timestamp=ev["ts"],
            )
            self.responses.append(resp)
            self.response_index[(resp.annotator_id, resp.tuple_id)] = resp
            self._clear_active(st)
            st.n_responses += 1
            if resp.is_gold:
                st.gold_seen += 1
                st.gold_correct += int(bool(resp.gold_correct))
            else:
                self.retained[resp.tuple_id] += 1
        elif kind == "lockout":
            st = self.annotator(ev["annotator_id"])
            st.locked = True
            self._clear_active(st)
            for resp in self.responses:
                if resp.annotator_id == st.annotator_id and not resp.discarded:
                    resp.discarded = True
                    if not resp.is_gold:
                        self.retained[resp.tuple_id] -= 1
        else:
            raise ValueError(f"unknown task event type {kind!r}")

    # -- snapshots -------------------------------------------------------------

    def snapshot(self) -> dict:
        """Canonical state view used to verify replay equivalence."""
        return {
            "task_id": self.task_id,
            "emotion": self.emotion,
            "assign_seq": self.assign_seq,
            "retained": dict(sorted(self.retained.items())),
            "pending": dict(sorted(self.pending.items())),
            "annotators": {
                aid: {
                    "gold_seen": st.gold_seen,
                    "gold_correct": st.gold_correct,
                    "locked": st.locked,
                    "n_responses": st.n_responses,
                    "seen": sorted(st.seen),
                    "active": (
                        None
                        if st.active is None
                        else [st.active.tuple_id, st.active.is_gold, list(st.active.display)]
                    ),
                }
                for aid, st in sorted(self.annotators.items())
            },
            "responses": [
                [
                    r.annotator_id,
                    r.tuple_id,
                    r.best,
                    r.worst,
                    r.is_gold,
                    r.gold_correct,
                    r.discarded,
                    r.timestamp,
                ]
                for r in self.responses
            ],
        }

    def status(self) -> dict:
        target = self.config.target_responses_per_tuple
        done = sum(min(c, target) for c in self.retained.values())
        return {
            "task_id": self.task_id,
            "emotion": self.emotion,
            "n_tuples": len(self.tuples),
            "target_responses_per_tuple": target,
            "retained_responses": dict(sorted(self.retained.items())),
            "completion": done / (target * len(self.tuples)) if self.tuples else 1.0,
            "complete": all(c >= target for c in self.retained.values()),
            "annotators": {
                aid: {
                    "responses": st.n_responses,
                    "gold_seen": st.gold_seen,
                    "gold_correct": st.gold_correct,
                    "accuracy": st.accuracy,
                    "locked": st.locked,
                }
                for aid, st in sorted(self.annotators.items())
            },
        }


class AnnotationService:
    """Task registry plus the live operation entry points.

    With a data_dir, every event is appended to ``sessions.jsonl`` or
    ``task-<id>.jsonl`` under it, and ``AnnotationService.load`` rebuilds the
    whole service by replay.
    """

    def __init__(self, data_dir: str | Path | None = None):
        self.data_dir = Path(data_dir) if data_dir is not None else None
        if self.data_dir is not None:
            self.data_dir.mkdir(parents=True, exist_ok=True)
        self.tasks: dict[str, AnnotationTask] = {}
        self.sessions: dict[str, str] = {}  # token -> annotator_id
        self._lock = threading.RLock()

    # -- persistence -----------------------------------------------------------

    def _append(self, filename: str, ev: dict) -> None:
        if self.data_dir is None:
            return
        with open(self.data_dir / filename, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(ev, separators=(",", ":")) + "\n")

    @classmethod
    def load(cls, data_dir: str | Path) -> "AnnotationService":
        service = cls(data_dir=None)
        service.data_dir = Path(data_dir)
        service.data_dir.mkdir(parents=True, exist_ok=True)
        sessions = service.data_dir / "sessions.jsonl"
        if sessions.exists():
            for line in sessions.read_text(encoding="utf-8").splitlines():
                ev = json.loads(line)
                service.sessions[ev["token"]] = ev["annotator_id"]
        for path in sorted(service.data_dir.glob("task-*.jsonl")):
            task = None
            for line in path.read_text(encoding="utf-8").splitlines():
                ev = json.loads(line)
                if ev["type"] == "task":
                    task = service._build_task(ev)
                    service.tasks[task.task_id] = task
                else:
                    assert task is not None, f"{path}: event before task creation"
                    task.apply_event(ev)
        return service

    @staticmethod
    def _build_task(ev: dict) -> AnnotationTask:
        tuple_objs = tuple(
            Tuple4(tuple_id=tid, item_ids=tuple(ids)) for tid, ids in ev["tuples"]
        )
        tuples = TupleSet(
            tuples=tuple_objs,
            item_universe=frozenset(i for t in tuple_objs for i in t.item_ids),
            seed=ev["config"]["seed"],
        )
        gold_keys = [
            GoldKey(
                tuple_id=tid,
                acceptable_best=frozenset(best),
                acceptable_worst=frozenset(worst),
            )
            for tid, best, worst in ev["gold_keys"]
        ]
        return AnnotationTask(
            task_id=ev["task_id"],
            emotion=ev["emotion"],
            tuples=tuples,
            items=dict(ev["items"]),
            gold_keys=gold_keys,
            config=TaskConfig(**ev["config"]),
        )

    # -- sessions ----------------------------------------------------------------

    def open_session(self, annotator_id: str) -> str:
        if not annotator_id or not annotator_id.strip():
            raise InvalidSessionError("annotator_id must be nonempty")
        with self._lock:
            token = secrets.token_hex(16)
            self.sessions[token] = annotator_id
            self._append("sessions.jsonl", {
                "type": "session",
                "token": token,
                "annotator_id": annotator_id,
                "ts": _now_iso(),
            })
            return token

    def annotator_for(self, token: str) -> str:
        try:
            return self.sessions[token]
        except KeyError:
            raise InvalidSessionError("unknown or expired session token") from None

    # -- task management -----------------------------------------------------------

    def create_task(
        self,
        task_id: str,
        emotion: str,
        tuples: TupleSet,
        items: dict[str, str],
        gold_keys: list[GoldKey],
        config: TaskConfig | None = None,
    ) -> AnnotationTask:
        config = config or TaskConfig()
        with self._lock:
            if task_id in self.tasks:
                raise ValueError(f"task {task_id!r} already exists")
            task = AnnotationTask(task_id, emotion, tuples, items, gold_keys, config)
            self.tasks[task_id] = task
            self._append(f"task-{task_id}.jsonl", {
                "type": "task",
                "task_id": task_id,
                "emotion": emotion,
                "items": items,
                "tuples": [[t.tuple_id, list(t.item_ids)] for t in tuples.tuples],
                "gold_keys": [
                    [gk.tuple_id, sorted(gk.acceptable_best), sorted(gk.acceptable_worst)]
                    for gk in gold_keys
                ],
                "config": {
                    "target_responses_per_tuple": config.target_responses_per_tuple,
                    "gold_rate": config.gold_rate,
                    "min_gold_before_lockout": config.min_gold_before_lockout,
                    "accuracy_threshold": config.accuracy_threshold,
                    "seed": config.seed,
                },
                "ts": _now_iso(),
            })
            return task

    def task(self, task_id: str) -> AnnotationTask:
        try:
            return self.tasks[task_id]
        except KeyError:
            raise UnknownTaskError(task_id) from None

    # -- the annotation loop ----------------------------------------------------------

    def next_assignment(self, task_id: str, annotator_id: str) -> Assignment | None:
        """The annotator's next tuple, or None when nothing is left for them.

        Re-serves the current assignment if one is pending. With probability
        gold_rate the assignment is a gold question the annotator has not
        seen; otherwise it is the unseen tuple with the fewest retained plus
        reserved responses (ties to the lowest tuple id), so concurrent
        annotators never over-fill a tuple.
        """
        task = self.task(task_id)
        with task.lock:
            st = task.annotator(annotator_id)
            if st.locked:
                raise LockedOutError(f"annotator {annotator_id!r} is locked out")
            if st.active is not None:
                return st.active
            rng = _derive_rng(task.config.seed, task.assign_seq)
            gold_pool = sorted(tid for tid in task.gold_keys if tid not in st.seen)
            target = task.config.target_responses_per_tuple
            open_pool = [
                tid
                for tid in task.tuple_order
                if tid not in st.seen
                and task.retained[tid] + task.pending[tid] < target
            ]
            open_pool.sort(key=lambda tid: (task.retained[tid] + task.pending[tid], tid))
            serve_gold = bool(gold_pool) and rng.random() < task.config.gold_rate
            if not serve_gold and not open_pool and gold_pool:
                serve_gold = True  # only gold questions remain for this annotator
            if serve_gold:
                tuple_id = rng.choice(gold_pool)
                is_gold = True
            elif open_pool:
                tuple_id = open_pool[0]
                is_gold = False
            else:
                return None
            display = list(task.tuples[tuple_id].item_ids)
            rng.shuffle(display)
            ev = {
                "type": "assign",
                "annotator_id": annotator_id,
                "tuple_id": tuple_id,
                "is_gold": is_gold,
                "display": display,
                "ts": _now_iso(),
            }
            task.apply_event(ev)
            self._append(f"task-{task_id}.jsonl", ev)
            return st.active

    def submit_response(
        self, task_id: str, annotator_id: str, tuple_id: str, best: str, worst: str
    ) -> Verdict:
        """Persist one judgment and return the immediate verdict.

        Double-submitting an already-answered tuple is idempotent (the first
        write wins); submitting a tuple that was never assigned is a protocol
        error. A wrong gold answer is reported in the verdict, and crossing
        the accuracy threshold locks the annotator out and discards all their
        work.
        """
        task = self.task(task_id)
        with task.lock:
            st = task.annotator(annotator_id)
            if st.locked:
                raise LockedOutError(f"annotator {annotator_id!r} is locked out")
            if st.active is None or st.active.tuple_id != tuple_id:
                prev = task.response_index.get((annotator_id, tuple_id))
                if prev is not None:
                    return task._verdict_for(prev, st)
                raise ProtocolError(
                    f"tuple {tuple_id!r} is not the current assignment of {annotator_id!r}"
                )
            members = set(task.tuples[tuple_id].item_ids)
            if best == worst:
                raise InvalidSelectionError("best and worst must differ")
            if best not in members or worst not in members:
                raise InvalidSelectionError(
                    f"selections ({best!r}, {worst!r}) are not both in tuple {tuple_id!r}"
                )
            is_gold = st.active.is_gold
            gold_correct = None
            if is_gold:
                key = task.gold_keys[tuple_id]
                gold_correct = best in key.acceptable_best and worst in key.acceptable_worst
            ev = {
                "type": "response",
                "annotator_id": annotator_id,
                "tuple_id": tuple_id,
                "best": best,
                "worst": worst,
                "is_gold": is_gold,
                "gold_correct": gold_correct,
                "ts": _now_iso(),
            }
            task.apply_event(ev)
            self._append(f"task-{task_id}.jsonl", ev)
            if (
                is_gold
                and st.gold_seen >= task.config.min_gold_before_lockout
                and (st.accuracy or 0.0) < task.config.accuracy_threshold
            ):
                lock_ev = {
                    "type": "lockout",
                    "annotator_id": annotator_id,
                    "ts": _now_iso(),
                }
                task.apply_event(lock_ev)
                self._append(f"task-{task_id}.jsonl", lock_ev)
            resp = task.response_index[(annotator_id, tuple_id)]
            return task._verdict_for(resp, st)

    # -- export / status ------------------------------------------------------------------

    def export_responses(self, task_id: str) -> str:
        """Retained responses as the scoring CSV (gold rows flagged)."""
        task = self.task(task_id)
        with task.lock:
            rows = []
            stamps = []
            for r in task.responses:
                if r.discarded:
                    continue
                rows.append(
                    BwsResponse(
                        tuple_id=r.tuple_id,
                        annotator_id=r.annotator_id,
                        best=r.best,
                        worst=r.worst,
                        is_gold=r.is_gold,
                        gold_correct=r.gold_correct,
                    )
                )
                stamps.append(r.timestamp)
            return responses_to_csv(rows, stamps)

    def task_status(self, task_id: str) -> dict:
        task = self.task(task_id)
        with task.lock:
            return task.status()

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "sessions": dict(sorted(self.sessions.items())),
                "tasks": {tid: t.snapshot() for tid, t in sorted(self.tasks.items())},
            }


def load_gold_keys(path: str | Path) -> list[GoldKey]:
    """Gold-key file: tuple_id<TAB>best1|best2<TAB>worst1 per line."""
    keys = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise ValueError(f"line {lineno}: expected tuple_id, best ids, worst ids")
        keys.append(
            GoldKey(
                tuple_id=cols[0],
                acceptable_best=frozenset(x for x in cols[1].split("|") if x),
                acceptable_worst=frozenset(x for x in cols[2].split("|") if x),
            )
        )
    return keys
