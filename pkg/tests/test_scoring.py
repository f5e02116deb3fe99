from __future__ import annotations

import random

import pytest

from bwslab.evaluate import spearman
from bwslab.scoring import (
    BwsResponse,
    InvalidResponseError,
    UnknownTupleError,
    compute_scores,
    implied_pair_orders,
    read_responses_csv,
    split_half_reliability,
    write_responses_csv,
)
from bwslab.tuples import Tuple4, TupleSet

from conftest import simulate_annotations


def _tuple(*ids, tid="t1"):
    return Tuple4(tuple_id=tid, item_ids=tuple(ids))


# -- implied pair orders -----------------------------------------------------------


def test_implied_pairs_published_example():
    got = implied_pair_orders(_tuple("A", "B", "C", "D"), best="A", worst="D")
    assert got == {("A", "B"), ("A", "C"), ("A", "D"), ("B", "D"), ("C", "D")}


def test_implied_pairs_derived_case():
    got = implied_pair_orders(_tuple("P", "Q", "R", "S"), best="S", worst="P")
    assert got == {("S", "P"), ("S", "Q"), ("S", "R"), ("Q", "P"), ("R", "P")}
    assert len(got) == 5


def test_implied_pairs_best_equals_worst_rejected():
    with pytest.raises(InvalidResponseError):
        implied_pair_orders(_tuple("A", "B", "C", "D"), best="B", worst="B")


def test_implied_pairs_foreign_item_rejected():
    with pytest.raises(InvalidResponseError):
        implied_pair_orders(_tuple("A", "B", "C", "D"), best="Z", worst="A")


# -- compute_scores ----------------------------------------------------------------


def _design_around_item(x="X"):
    """8 tuples containing x with 24 distinct partners (full per-item design)."""
    tuples = []
    for k in range(8):
        partners = [f"p{k}{j}" for j in range(3)]
        tuples.append(Tuple4(tuple_id=f"t{k}", item_ids=(x, *partners)))
    universe = {i for t in tuples for i in t.item_ids}
    return TupleSet(tuples=tuple(tuples), item_universe=frozenset(universe), seed=None)


def _three_responses(tid, best, worst):
    return [
        BwsResponse(tuple_id=tid, annotator_id=f"a{j}", best=best, worst=worst)
        for j in range(3)
    ]


def test_always_best_scores_one():
    ts = _design_around_item()
    responses = []
    for t in ts.tuples:
        responses.extend(_three_responses(t.tuple_id, best="X", worst=t.item_ids[1]))
    table = compute_scores(ts, responses)
    entry = table.entries["X"]
    assert entry.n_judgments == 24
    assert entry.raw == 1.0
    assert entry.scaled == 1.0


def test_mixed_counts_derived_value():
    # X best in 12 of its 24 judgments, worst in 6: raw 0.25, scaled 0.625
    ts = _design_around_item()
    responses = []
    for k, t in enumerate(ts.tuples):
        others = [i for i in t.item_ids if i != "X"]
        if k < 4:
            responses.extend(_three_responses(t.tuple_id, best="X", worst=others[0]))
        elif k < 6:
            responses.extend(_three_responses(t.tuple_id, best=others[0], worst="X"))
        else:
            responses.extend(_three_responses(t.tuple_id, best=others[0], worst=others[1]))
    entry = compute_scores(ts, responses).entries["X"]
    assert entry.n_judgments == 24
    assert entry.raw == pytest.approx((12 - 6) / 24)
    assert entry.scaled == pytest.approx(0.625)


def test_scores_permutation_invariant_and_balanced():
    ts = _design_around_item()
    rng = random.Random(0)
    responses = []
    for t in ts.tuples:
        for j in range(3):
            best, worst = rng.sample(t.item_ids, 2)
            responses.append(
                BwsResponse(tuple_id=t.tuple_id, annotator_id=f"a{j}", best=best, worst=worst)
            )
    table1 = compute_scores(ts, responses)
    shuffled = responses[:]
    rng.shuffle(shuffled)
    table2 = compute_scores(ts, shuffled)
    assert table1.entries == table2.entries
    # every response contributes one best and one worst
    total = sum(e.raw * e.n_judgments for e in table1.entries.values())
    assert total == pytest.approx(0.0, abs=1e-9)
    for e in table1.entries.values():
        assert -1.0 <= e.raw <= 1.0
        assert 0.0 <= e.scaled <= 1.0
        assert e.scaled == pytest.approx((e.raw + 1) / 2)


def test_unknown_tuple_rejected():
    ts = _design_around_item()
    with pytest.raises(UnknownTupleError):
        compute_scores(ts, [BwsResponse(tuple_id="zz", annotator_id="a", best="X", worst="p00")])


def test_items_without_judgments_absent():
    ts = _design_around_item()
    t0 = ts.tuples[0]
    responses = _three_responses(t0.tuple_id, best="X", worst=t0.item_ids[1])
    table = compute_scores(ts, responses)
    assert set(table.entries) == set(t0.item_ids)


def test_gold_responses_excluded_by_default():
    ts = _design_around_item()
    t0 = ts.tuples[0]
    regular = _three_responses(t0.tuple_id, best="X", worst=t0.item_ids[1])
    gold = [
        BwsResponse(
            tuple_id=t0.tuple_id,
            annotator_id="g",
            best=t0.item_ids[1],
            worst="X",
            is_gold=True,
            gold_correct=False,
        )
    ]
    table = compute_scores(ts, regular + gold)
    assert table.entries["X"].n_judgments == 3
    assert table.entries["X"].raw == 1.0
    with_gold = compute_scores(ts, regular + gold, include_gold=True)
    assert with_gold.entries["X"].n_judgments == 4


# -- simulation oracle (built before the implementation, per the derived rule) -------


def test_noisefree_simulation_recovers_latent_ranking(design_50, latent_50):
    responses = simulate_annotations(design_50, latent_50)
    table = compute_scores(design_50, responses)
    items = sorted(latent_50)
    rho = spearman([latent_50[i] for i in items], [table.entries[i].scaled for i in items])
    assert rho >= 0.98


def test_corrupted_simulation_still_ranks_well(design_50, latent_50):
    responses = simulate_annotations(design_50, latent_50, corrupt_fraction=0.10, seed=23)
    table = compute_scores(design_50, responses)
    items = sorted(latent_50)
    rho = spearman([latent_50[i] for i in items], [table.entries[i].scaled for i in items])
    assert rho >= 0.90


# -- split-half reliability ------------------------------------------------------------


def test_shr_forced_identical_halves_is_exactly_one(design_50, latent_50):
    one = simulate_annotations(design_50, latent_50, annotators=1)
    doubled = one + [
        BwsResponse(
            tuple_id=r.tuple_id, annotator_id="copy", best=r.best, worst=r.worst
        )
        for r in one
    ]
    result = split_half_reliability(design_50, doubled, iterations=10, seed=3)
    assert result.pearson == pytest.approx(1.0, abs=1e-12)
    assert result.spearman == pytest.approx(1.0, abs=1e-12)


def test_shr_noisefree_three_annotators(design_50, latent_50):
    responses = simulate_annotations(design_50, latent_50)
    result = split_half_reliability(design_50, responses, iterations=100, seed=1)
    assert result.pearson >= 0.99
    assert result.spearman >= 0.99


def test_shr_deterministic_per_seed(design_50, latent_50):
    responses = simulate_annotations(design_50, latent_50, corrupt_fraction=0.3, seed=9)
    a = split_half_reliability(design_50, responses, iterations=20, seed=5)
    b = split_half_reliability(design_50, responses, iterations=20, seed=5)
    c = split_half_reliability(design_50, responses, iterations=20, seed=6)
    assert a == b
    assert a != c


def test_shr_undersized_tuple_named(design_50, latent_50):
    responses = simulate_annotations(design_50, latent_50)
    dropped = responses[1:]  # first tuple keeps 2 of 3; drop two more below
    tid = responses[0].tuple_id
    dropped = [r for r in dropped if r.tuple_id != tid] + [
        r for r in dropped if r.tuple_id == tid
    ][:1]
    with pytest.raises(ValueError, match=tid):
        split_half_reliability(design_50, dropped, iterations=2, seed=0)


# -- response csv ---------------------------------------------------------------------


def test_response_csv_roundtrip(tmp_path, design_50, latent_50):
    responses = simulate_annotations(design_50, latent_50)[:10]
    responses.append(
        BwsResponse(
            tuple_id=responses[0].tuple_id,
            annotator_id="g",
            best=responses[0].best,
            worst=responses[0].worst,
            is_gold=True,
            gold_correct=True,
        )
    )
    p = tmp_path / "r.csv"
    write_responses_csv(responses, p)
    back = read_responses_csv(p)
    assert back == responses


def test_response_csv_bad_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b,c\n", encoding="utf-8")
    with pytest.raises(ValueError, match="header"):
        read_responses_csv(p)
