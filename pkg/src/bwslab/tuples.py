"""Generation and validation of 4-tuple annotation designs.

The design target: given N items, build 2N distinct 4-tuples such that every
item appears in exactly 8 tuples and no unordered pair of items co-occurs in
more than one tuple. Each item then co-occurs with 8 x 3 = 24 distinct
partners, which is why N >= 25 is a hard feasibility floor.

Construction is by the difference method over an abelian group of order N
(Z_N, or Z_a x Z_b when the cyclic group admits no solution, as happens for
N = 25 where the design is a perfect packing): two base blocks whose twelve
pairwise differences are pairwise distinct, involve no self-inverse element,
and are disjoint between the blocks are developed by all N translations.
Every design constraint then holds by construction. The base blocks are found
by seeded random sampling with an exhaustive sweep as backstop, and items are
mapped onto group elements by a seeded shuffle, so output still varies freely
with the seed. A randomized hill-climbing search remains as a last-resort
fallback, and exhausting it raises a search error that suggests a different
seed or item count.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

TUPLE_SIZE = 4
OCCURRENCES_PER_ITEM = 8
PARTNERS_PER_ITEM = OCCURRENCES_PER_ITEM * (TUPLE_SIZE - 1)
MIN_ITEMS = PARTNERS_PER_ITEM + 1

_BASE_BLOCK_TRIES = 20000
_EXHAUSTIVE_LIMIT = 600_000  # max candidate triples for the exhaustive sweep
_CLIMB_ITERS = 400_000


class DesignInfeasibleError(ValueError):
    """The requested design cannot exist for this number of items."""


class DesignSearchError(RuntimeError):
    """The randomized search failed within the allowed restarts."""


@dataclass(frozen=True)
class Tuple4:
    tuple_id: str
    item_ids: tuple[str, str, str, str]

    def __post_init__(self) -> None:
        if len(self.item_ids) != TUPLE_SIZE:
            raise ValueError(f"tuple {self.tuple_id!r} must have exactly {TUPLE_SIZE} items")
        if len(set(self.item_ids)) != TUPLE_SIZE:
            raise ValueError(f"tuple {self.tuple_id!r} has repeated items")


@dataclass(frozen=True)
class TupleSet:
    tuples: tuple[Tuple4, ...]
    item_universe: frozenset[str]
    seed: int | None

    def by_id(self) -> dict[str, Tuple4]:
        return {t.tuple_id: t for t in self.tuples}


class _Group:
    """Z_{n1} x Z_{n2} with elements encoded as indices in [0, n1*n2)."""

    def __init__(self, n1: int, n2: int):
        self.n1 = n1
        self.n2 = n2
        self.order = n1 * n2

    def add(self, a: int, b: int) -> int:
        a1, a2 = divmod(a, self.n2)
        b1, b2 = divmod(b, self.n2)
        return ((a1 + b1) % self.n1) * self.n2 + (a2 + b2) % self.n2

    def neg(self, a: int) -> int:
        a1, a2 = divmod(a, self.n2)
        return ((-a1) % self.n1) * self.n2 + (-a2) % self.n2

    def folded_diffs(self, block: tuple[int, ...]) -> list[int]:
        """Pairwise differences up to sign, canonicalized as min(d, -d)."""
        out = []
        for x, y in combinations(block, 2):
            d = self.add(y, self.neg(x))
            out.append(min(d, self.neg(d)))
        return out

    def block_ok(self, block: tuple[int, ...]) -> bool:
        ds = self.folded_diffs(block)
        if len(set(ds)) != 6:
            return False
        # A self-inverse difference (d == -d) covers each of its pairs twice
        # when developed, so it cannot be used at all.
        return all(d != self.neg(d) for d in ds)


def _find_base_blocks(
    group: _Group, rng: random.Random
) -> tuple[tuple[int, ...], tuple[int, ...]] | None:
    """Two base blocks with twelve pairwise-distinct usable differences."""
    n = group.order
    for _ in range(_BASE_BLOCK_TRIES):
        b1 = (0, *rng.sample(range(1, n), 3))
        if not group.block_ok(b1):
            continue
        b2 = (0, *rng.sample(range(1, n), 3))
        if not group.block_ok(b2):
            continue
        if not set(group.folded_diffs(b1)) & set(group.folded_diffs(b2)):
            return b1, b2
    if math.comb(n - 1, 3) > _EXHAUSTIVE_LIMIT:
        return None
    ok = [
        (0, a, b, c)
        for a, b, c in combinations(range(1, n), 3)
        if group.block_ok((0, a, b, c))
    ]
    rng.shuffle(ok)
    by_diffs: dict[frozenset[int], tuple[int, ...]] = {}
    for blk in ok:
        by_diffs.setdefault(frozenset(group.folded_diffs(blk)), blk)
    keys = list(by_diffs)
    for i, k1 in enumerate(keys):
        for k2 in keys[i:]:
            if not k1 & k2:
                return by_diffs[k1], by_diffs[k2]
    return None


def _groups_to_try(n: int) -> list[_Group]:
    """Cyclic group first, then increasingly balanced product groups."""
    shapes = [(1, n)]
    for a in range(2, int(math.isqrt(n)) + 1):
        if n % a == 0:
            shapes.append((a, n // a))
    return [_Group(a, b) for a, b in shapes]


def _develop(
    base: tuple[tuple[int, ...], tuple[int, ...]], group: _Group
) -> list[list[int]]:
    blocks = []
    for bb in base:
        for g in range(group.order):
            blocks.append([group.add(x, g) for x in bb])
    return blocks


def _climb(n: int, rng: random.Random) -> list[list[int]] | None:
    """Randomized hill climb: grow blocks one at a time, evicting at most one
    conflicting block per step. Last-resort fallback."""
    target = 2 * n

    def pkey(a: int, b: int) -> int:
        return a * n + b if a < b else b * n + a

    counts = [0] * n
    owner: dict[int, int] = {}
    blocks: dict[int, list[int]] = {}
    item_blocks: list[set[int]] = [set() for _ in range(n)]
    next_id = 0
    rejects = 0

    def remove_block(bid: int) -> None:
        items = blocks.pop(bid)
        for it in items:
            counts[it] -= 1
            item_blocks[it].discard(bid)
        for a, c in combinations(items, 2):
            del owner[pkey(a, c)]

    def add_block(cand: list[int]) -> None:
        nonlocal next_id
        bid = next_id
        next_id += 1
        blocks[bid] = cand
        for it in cand:
            counts[it] += 1
            item_blocks[it].add(bid)
        for a, c in combinations(cand, 2):
            owner[pkey(a, c)] = bid

    for _ in range(_CLIMB_ITERS):
        if len(blocks) == target:
            return list(blocks.values())
        live = [i for i in range(n) if counts[i] < OCCURRENCES_PER_ITEM]
        x = rng.choice(live)
        if rejects > 40:
            if item_blocks[x]:
                remove_block(rng.choice(sorted(item_blocks[x])))
            rejects = 0
            continue
        ys = [y for y in live if y != x and pkey(x, y) not in owner]
        if not ys:
            if item_blocks[x]:
                remove_block(rng.choice(sorted(item_blocks[x])))
            continue
        y = rng.choice(ys)
        zs = [
            z for z in live
            if z not in (x, y) and pkey(x, z) not in owner and pkey(y, z) not in owner
        ]
        if not zs:
            rejects += 1
            continue
        z = rng.choice(zs)
        ws = [
            w for w in live
            if w not in (x, y, z) and pkey(x, w) not in owner and pkey(y, w) not in owner
        ]
        if not ws:
            rejects += 1
            continue
        clean = [w for w in ws if pkey(z, w) not in owner]
        if clean:
            w = rng.choice(clean)
        else:
            w = rng.choice(ws)
            remove_block(owner[pkey(z, w)])
        add_block([x, y, z, w])
        rejects = 0
    return None


def _derive_seed(seed: int, restart: int) -> int:
    # Independent stream per restart; golden-ratio stride avoids overlap.
    return (seed + 0x9E3779B1 * (restart + 1)) % (1 << 63)


def _search(n: int, rng: random.Random) -> list[list[int]] | None:
    for group in _groups_to_try(n):
        base = _find_base_blocks(group, rng)
        if base is not None:
            return _develop(base, group)
    return _climb(n, rng)


def generate_tuples(items: list[str], seed: int, max_restarts: int = 50) -> TupleSet:
    """Build a full 2N-tuple design over the given items.

    Deterministic for a fixed (item order, seed, max_restarts). Raises
    DesignInfeasibleError below the 25-item floor and DesignSearchError when
    every restart dead-ends (try another seed, or more items).
    """
    n = len(items)
    if len(set(items)) != n:
        raise ValueError("item ids must be unique")
    if n < MIN_ITEMS:
        raise DesignInfeasibleError(
            f"{n} items cannot support the design: every item must co-occur with "
            f"{PARTNERS_PER_ITEM} distinct partners ({OCCURRENCES_PER_ITEM} tuples x "
            f"{TUPLE_SIZE - 1} partners, no pair repeated), so at least "
            f"{MIN_ITEMS} items are required"
        )
    for restart in range(max_restarts):
        rng = random.Random(_derive_seed(seed, restart))
        blocks = _search(n, rng)
        if blocks is None:
            continue
        # Group element -> item assignment is seeded, so designs vary with
        # the seed even though the development itself is structured.
        placed = list(items)
        rng.shuffle(placed)
        rng.shuffle(blocks)
        width = len(str(2 * n))
        tuples = []
        for k, blk in enumerate(blocks):
            rng.shuffle(blk)  # display position must carry no information
            tuples.append(
                Tuple4(tuple_id=f"t{k:0{width}d}", item_ids=tuple(placed[i] for i in blk))
            )
        return TupleSet(tuples=tuple(tuples), item_universe=frozenset(items), seed=seed)
    raise DesignSearchError(
        f"no valid design found for {n} items after {max_restarts} restarts; "
        f"try a different seed or a larger item set"
    )


def validate_tuple_set(ts: TupleSet) -> list[str]:
    """Check a tuple set against the design constraints; returns violations."""
    violations: list[str] = []
    n = len(ts.item_universe)
    expected = 2 * n
    if len(ts.tuples) != expected:
        violations.append(f"tuple count violation: {len(ts.tuples)} != {expected}")

    counts: dict[str, int] = {item: 0 for item in ts.item_universe}
    pair_first: dict[tuple[str, str], str] = {}
    seen_sets: dict[frozenset[str], str] = {}
    for t in ts.tuples:
        key = frozenset(t.item_ids)
        if key in seen_sets:
            violations.append(f"duplicate tuple: {t.tuple_id} repeats {seen_sets[key]}")
        else:
            seen_sets[key] = t.tuple_id
        for item in t.item_ids:
            if item not in counts:
                violations.append(f"tuple {t.tuple_id} uses item {item!r} outside the universe")
                counts[item] = 0
            counts[item] += 1
        for a, b in combinations(sorted(t.item_ids), 2):
            if (a, b) in pair_first:
                violations.append(
                    f"repeated pair ({a}, {b}): tuples {pair_first[(a, b)]} and {t.tuple_id}"
                )
            else:
                pair_first[(a, b)] = t.tuple_id

    for item in sorted(counts):
        if counts[item] != OCCURRENCES_PER_ITEM:
            violations.append(
                f"item {item} occurs {counts[item]} times, expected {OCCURRENCES_PER_ITEM}"
            )
    return violations


def write_tuples(ts: TupleSet, path: str | Path) -> None:
    """Tuple file format: tuple_id<TAB>id1<TAB>id2<TAB>id3<TAB>id4 per line."""
    lines = [f"{t.tuple_id}\t" + "\t".join(t.item_ids) for t in ts.tuples]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def read_tuples(path: str | Path) -> TupleSet:
    tuples: list[Tuple4] = []
    universe: set[str] = set()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        cols = line.split("\t")
        if len(cols) != TUPLE_SIZE + 1:
            raise ValueError(f"line {lineno}: expected tuple_id plus {TUPLE_SIZE} item ids")
        tuples.append(Tuple4(tuple_id=cols[0], item_ids=tuple(cols[1:])))
        universe.update(cols[1:])
    return TupleSet(tuples=tuple(tuples), item_universe=frozenset(universe), seed=None)
