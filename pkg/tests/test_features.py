from __future__ import annotations

import numpy as np
import pytest

from bwslab.corpus import Dataset, Tweet
from bwslab.features import (
    EmbeddingTable,
    FeatureConfig,
    FeatureMatrix,
    FeatureSpace,
    Lexicon,
    Resources,
    build_feature_matrix,
    char_ngrams,
    embedding_features,
    lexicon_features,
    load_embeddings,
    load_lexicon,
    word_ngrams,
)


def _ds(texts, emotion="joy"):
    return Dataset(
        emotion=emotion,
        tweets=tuple(
            Tweet(id=f"t{i}", text=t, emotion=emotion, gold_score=0.5)
            for i, t in enumerate(texts)
        ),
    )


# -- n-grams -------------------------------------------------------------------


def test_word_ngrams_mechanical_count():
    feats = word_ngrams(["so", "very", "happy"], 1, 4)
    assert len(feats) == 3 + 2 + 1  # unigrams, bigrams, one trigram
    assert feats["WN:1:so"] == 1.0
    assert feats["WN:2:very happy"] == 1.0
    assert feats["WN:3:so very happy"] == 1.0
    assert all(v == 1.0 for v in feats.values())


def test_word_ngrams_presence_semantics():
    feats = word_ngrams(["ha", "ha"], 1, 1)
    assert feats == {"WN:1:ha": 1.0}


def test_char_ngrams_enumeration():
    feats = char_ngrams("happy", 3, 5)
    grams = {k.split(":", 2)[2] for k in feats}
    assert grams == {"hap", "app", "ppy", "happ", "appy", "happy"}
    assert all(v == 1.0 for v in feats.values())


def test_ngram_range_validation():
    with pytest.raises(ValueError):
        word_ngrams(["a"], 3, 2)
    with pytest.raises(ValueError):
        char_ngrams("abc", 5, 3)


# -- embeddings ----------------------------------------------------------------


def _table():
    return EmbeddingTable(
        dimension=2,
        vectors={"a": np.array([1.0, 2.0]), "b": np.array([3.0, 4.0])},
    )


def test_embedding_average():
    out = embedding_features(["a", "b"], _table(), scheme="average")
    assert out.tolist() == [2.0, 3.0]


def test_embedding_add():
    out = embedding_features(["a", "b"], _table(), scheme="add")
    assert out.tolist() == [4.0, 6.0]


def test_embedding_all_oov_is_zero():
    out = embedding_features(["zz", "qq"], _table(), scheme="average")
    assert out.tolist() == [0.0, 0.0]


def test_embedding_single_token_equals_vector():
    out = embedding_features(["b"], _table(), scheme="average")
    assert out.tolist() == [3.0, 4.0]


def test_embedding_concat_first_k_zero_padded():
    out = embedding_features(["a", "zz", "b"], _table(), scheme="concat", first_k=4)
    assert out.tolist() == [1.0, 2.0, 0.0, 0.0, 3.0, 4.0, 0.0, 0.0]


def test_embedding_file_parsing(tmp_path):
    p = tmp_path / "emb.txt"
    p.write_text("2 3\nfoo 1 2 3\nbar 4 5 6\n", encoding="utf-8")
    table = load_embeddings(p)
    assert table.dimension == 3
    assert table.vectors["bar"].tolist() == [4.0, 5.0, 6.0]
    q = tmp_path / "emb2.txt"  # no header
    q.write_text("foo 1 2\nbar 3 4\n", encoding="utf-8")
    assert load_embeddings(q).dimension == 2


# -- lexicons ------------------------------------------------------------------


def _nominal():
    return Lexicon(
        name="nom",
        mode="nominal",
        classes=("joy", "anger"),
        entries={"happy": {"joy": 1.0}, "mad": {"anger": 1.0}},
    )


def _numeric():
    return Lexicon(
        name="num",
        mode="numeric",
        classes=("valence",),
        entries={"happy": {"valence": 0.8}, "sad": {"valence": -0.6}},
    )


def test_nominal_lexicon_counts():
    out = lexicon_features(["happy", "happy", "mad"], [_nominal()])
    assert out.tolist() == [2.0, 1.0]


def test_numeric_lexicon_sums():
    out = lexicon_features(["happy", "sad", "sad"], [_numeric()])
    assert out.tolist() == [pytest.approx(0.8 - 1.2)]


def test_lexicon_empty_tokens_zero():
    out = lexicon_features([], [_nominal(), _numeric()])
    assert out.tolist() == [0.0, 0.0, 0.0]


def test_lexicon_additivity_property():
    import random

    rng = random.Random(0)
    vocab = ["happy", "mad", "sad", "meh", "blah"]
    for _ in range(50):
        t1 = [rng.choice(vocab) for _ in range(rng.randint(0, 6))]
        t2 = [rng.choice(vocab) for _ in range(rng.randint(0, 6))]
        lhs = lexicon_features(t1 + t2, [_nominal(), _numeric()])
        rhs = lexicon_features(t1, [_nominal(), _numeric()]) + lexicon_features(
            t2, [_nominal(), _numeric()]
        )
        assert np.allclose(lhs, rhs)


def test_neg_prefix_stripping_flag():
    out = lexicon_features(["NEG-happy"], [_nominal()], strip_neg_prefix=True)
    assert out.tolist() == [1.0, 0.0]
    out = lexicon_features(["NEG-happy"], [_nominal()], strip_neg_prefix=False)
    assert out.tolist() == [0.0, 0.0]


def test_lexicon_file_parsing(tmp_path):
    p = tmp_path / "lex.tsv"
    p.write_text(
        "#mode=nominal\nhappy\tjoy\t1\nmad\tanger\t1\nglad\tjoy\t1\n", encoding="utf-8"
    )
    lex = load_lexicon(p)
    assert lex.mode == "nominal"
    assert lex.classes == ("joy", "anger")
    assert lex.entries["glad"] == {"joy": 1.0}
    bad = tmp_path / "bad.tsv"
    bad.write_text("happy\tjoy\t1\n", encoding="utf-8")
    with pytest.raises(ValueError, match="#mode="):
        load_lexicon(bad)


# -- feature space / matrix ------------------------------------------------------


def test_we_block_dimension_400():
    rng = np.random.default_rng(0)
    table = EmbeddingTable(
        dimension=400,
        vectors={"happy": rng.normal(size=400), "day": rng.normal(size=400)},
    )
    ds = _ds(["happy day", "day"])
    config = FeatureConfig(blocks=frozenset({"WE"}))
    _space, matrix = build_feature_matrix(ds, config, Resources(embeddings=table))
    assert matrix.dense.shape == (2, 400)
    assert matrix.sparse is None


def test_empty_config_rejected():
    assert FeatureConfig(blocks=frozenset()).label == ""  # construction is fine
    with pytest.raises(ValueError, match="no feature blocks selected"):
        build_feature_matrix(_ds(["x"]), FeatureConfig(blocks=frozenset()), Resources())


def test_unknown_block_rejected():
    with pytest.raises(ValueError, match="unknown feature blocks"):
        FeatureConfig(blocks=frozenset({"XX"}))


def test_missing_resource_for_selected_block():
    with pytest.raises(ValueError, match="no embedding table"):
        build_feature_matrix(_ds(["x"]), FeatureConfig.parse("WE"), Resources())
    with pytest.raises(ValueError, match="no lexicons"):
        build_feature_matrix(_ds(["x"]), FeatureConfig.parse("L"), Resources())


def test_fit_transform_freezes_vocabulary():
    train = _ds(["so very happy", "angry words here"])
    test = _ds(["completely unseen tokens", "so very happy"])
    config = FeatureConfig(blocks=frozenset({"WN", "L"}))
    res = Resources(lexicons=[_nominal()])
    space, train_m = build_feature_matrix(train, config, res)
    test_m = space.transform(test)
    assert test_m.sparse.shape[1] == train_m.sparse.shape[1]
    assert test_m.layout_digest == train_m.layout_digest
    # unseen-token row has no active sparse features
    assert test_m.sparse[0].nnz == 0
    assert test_m.sparse[1].nnz > 0


def test_negated_tokens_feed_word_ngrams():
    ds = _ds(["not happy ."])
    config = FeatureConfig(blocks=frozenset({"WN"}), word_n=(1, 1))
    space, matrix = build_feature_matrix(ds, config, Resources())
    assert "WN:1:NEG-happy" in space.sparse_names
    assert "WN:1:happy" not in space.sparse_names


def test_config_parse_and_label():
    config = FeatureConfig.parse("we + l")
    assert config.blocks == frozenset({"WE", "L"})
    assert config.label == "WE+L"
    assert FeatureConfig.parse("WN+CN+WE+L").label == "WN+CN+WE+L"


def test_matrix_rows_subset_and_io(tmp_path):
    ds = _ds(["so very happy", "angry words", "meh happy"])
    config = FeatureConfig(blocks=frozenset({"WN", "L"}), word_n=(1, 2))
    space, matrix = build_feature_matrix(ds, config, Resources(lexicons=[_nominal()]))
    sub = matrix.rows([2, 0])
    assert sub.n_rows == 2
    assert sub.layout_digest == matrix.layout_digest
    assert np.allclose(sub.dense[0], matrix.dense[2])
    p = tmp_path / "m.npz"
    matrix.save(p)
    back = FeatureMatrix.load(p)
    assert back.layout_digest == matrix.layout_digest
    assert np.allclose(back.dense, matrix.dense)
    assert (back.sparse != matrix.sparse).nnz == 0


def test_space_save_load_roundtrip(tmp_path):
    ds = _ds(["so very happy", "angry words here"])
    config = FeatureConfig(blocks=frozenset({"WN", "L", "WE"}))
    table = _table()
    res = Resources(lexicons=[_nominal(), _numeric()], embeddings=table)
    space, matrix = build_feature_matrix(ds, config, res)
    p = tmp_path / "space.json"
    space.save(p)
    loaded = FeatureSpace.load(p, embeddings=table)
    again = loaded.transform(ds)
    assert again.layout_digest == matrix.layout_digest
    assert np.allclose(again.dense, matrix.dense)
    with pytest.raises(ValueError, match="supply the embedding table"):
        FeatureSpace.load(p)
