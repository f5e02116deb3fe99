"""Feature extraction: n-grams, embedding aggregation, lexicon aggregation.

Feature blocks follow the usual codes: WN (presence of word 1-4 grams over
negation-marked tokens), CN (presence of character 3-5 grams over raw text),
WE (aggregated word embeddings), L (per-class lexicon counts or sums). Sparse
vocabulary is fixed when a FeatureSpace is fitted on training data and frozen
for every later transform, so dev/test never introduce columns.

Resource file formats:
  lexicon TSV   first line ``#mode=nominal`` or ``#mode=numeric``, then
                ``word<TAB>class<TAB>value`` (value "1" for nominal entries)
  embeddings    text, one ``word v1 ... vd`` per line; an optional leading
                ``count dim`` header line is auto-detected
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .corpus import Dataset
from .tokenizer import TokenSequence, default_negators, mark_negation, strip_neg, tokenize

BLOCK_CODES = ("WN", "CN", "WE", "L")


@dataclass(frozen=True)
class Lexicon:
    name: str
    mode: str  # "nominal" or "numeric"
    classes: tuple[str, ...]
    entries: dict[str, dict[str, float]]  # word -> class -> value

    def __post_init__(self) -> None:
        if self.mode not in ("nominal", "numeric"):
            raise ValueError(f"lexicon {self.name!r}: unknown mode {self.mode!r}")


def load_lexicon(path: str | Path, name: str | None = None) -> Lexicon:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("#mode="):
        raise ValueError(f"{path}: lexicon must start with '#mode=nominal|numeric'")
    mode = lines[0][len("#mode="):].strip()
    classes: list[str] = []
    entries: dict[str, dict[str, float]] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise ValueError(f"{path} line {lineno}: expected word<TAB>class<TAB>value")
        word, cls, value_tok = cols
        try:
            value = float(value_tok)
        except ValueError:
            raise ValueError(f"{path} line {lineno}: bad value {value_tok!r}") from None
        if cls not in classes:
            classes.append(cls)
        entries.setdefault(word.lower(), {})[cls] = value
    return Lexicon(
        name=name or path.stem, mode=mode, classes=tuple(classes), entries=entries
    )


@dataclass(frozen=True)
class EmbeddingTable:
    dimension: int
    vectors: dict[str, np.ndarray]

    def get(self, word: str) -> np.ndarray | None:
        return self.vectors.get(word)


def load_embeddings(path: str | Path) -> EmbeddingTable:
    path = Path(path)
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2:
                try:
                    int(parts[0]), int(parts[1])
                    continue  # word2vec-style "count dim" header
                except ValueError:
                    pass
            word, *values = parts
            vec = np.asarray([float(v) for v in values], dtype=np.float64)
            if dim is None:
                dim = vec.shape[0]
            elif vec.shape[0] != dim:
                raise ValueError(
                    f"{path} line {lineno}: vector of length {vec.shape[0]}, expected {dim}"
                )
            vectors[word] = vec
    if dim is None:
        raise ValueError(f"{path}: empty embedding file")
    return EmbeddingTable(dimension=dim, vectors=vectors)


def word_ngrams(tokens, n_min: int = 1, n_max: int = 4) -> dict[str, float]:
    """Presence features keyed WN:<n>:<gram> (value always 1.0)."""
    if n_min > n_max:
        raise ValueError("n_min must be <= n_max")
    toks = list(tokens)
    feats: dict[str, float] = {}
    for n in range(n_min, n_max + 1):
        for i in range(len(toks) - n + 1):
            feats[f"WN:{n}:" + " ".join(toks[i : i + n])] = 1.0
    return feats


def char_ngrams(text: str, n_min: int = 3, n_max: int = 5) -> dict[str, float]:
    """Presence features keyed CN:<n>:<gram> (value always 1.0)."""
    if n_min > n_max:
        raise ValueError("n_min must be <= n_max")
    feats: dict[str, float] = {}
    for n in range(n_min, n_max + 1):
        for i in range(len(text) - n + 1):
            feats[f"CN:{n}:" + text[i : i + n]] = 1.0
    return feats


def embedding_features(
    tokens, table: EmbeddingTable, scheme: str = "average", first_k: int = 10
) -> np.ndarray:
    """Aggregate word vectors: average, add, or concat of the first k tokens.

    Out-of-vocabulary tokens are skipped (zero-padded for concat); a tweet
    with no in-vocabulary tokens averages to the zero vector.
    """
    dim = table.dimension
    toks = list(tokens)
    if scheme in ("average", "add"):
        total = np.zeros(dim)
        hit = 0
        for tok in toks:
            vec = table.get(tok)
            if vec is not None:
                total += vec
                hit += 1
        if scheme == "average" and hit > 0:
            total /= hit
        return total
    if scheme == "concat":
        out = np.zeros(first_k * dim)
        for i, tok in enumerate(toks[:first_k]):
            vec = table.get(tok)
            if vec is not None:
                out[i * dim : (i + 1) * dim] = vec
        return out
    raise ValueError(f"unknown embedding scheme {scheme!r}")


def lexicon_features(tokens, lexicons, strip_neg_prefix: bool = True) -> np.ndarray:
    """One value per lexicon class: match counts (nominal) or value sums
    (numeric). NEG-prefixed tokens match on their unprefixed form only when
    strip_neg_prefix is set."""
    values: list[float] = []
    toks = [strip_neg(t) if strip_neg_prefix else t for t in tokens]
    for lex in lexicons:
        acc = {cls: 0.0 for cls in lex.classes}
        for tok in toks:
            entry = lex.entries.get(tok)
            if not entry:
                continue
            for cls, value in entry.items():
                acc[cls] += 1.0 if lex.mode == "nominal" else value
        values.extend(acc[cls] for cls in lex.classes)
    return np.asarray(values, dtype=np.float64)


def lexicon_class_names(lexicons) -> list[str]:
    return [f"L:{lex.name}:{cls}" for lex in lexicons for cls in lex.classes]


@dataclass(frozen=True)
class FeatureConfig:
    """Which blocks to extract and how."""

    blocks: frozenset[str]
    word_n: tuple[int, int] = (1, 4)
    char_n: tuple[int, int] = (3, 5)
    embedding_scheme: str = "average"
    concat_first_k: int = 10
    lowercase: bool = True
    negation: bool = True
    strip_neg_for_lexicons: bool = True

    def __post_init__(self) -> None:
        unknown = self.blocks - set(BLOCK_CODES)
        if unknown:
            raise ValueError(f"unknown feature blocks {sorted(unknown)}")

    @classmethod
    def parse(cls, label: str) -> "FeatureConfig":
        """Parse a label like "WE+L" or "WN + CN"."""
        parts = [p.strip().upper() for p in label.split("+") if p.strip()]
        return cls(blocks=frozenset(parts))

    @property
    def label(self) -> str:
        return "+".join(c for c in BLOCK_CODES if c in self.blocks)


@dataclass
class Resources:
    lexicons: list[Lexicon] = field(default_factory=list)
    embeddings: EmbeddingTable | None = None
    negators: frozenset[str] | None = None


@dataclass
class FeatureMatrix:
    """Per-row sparse presence features plus named dense blocks."""

    sparse: sp.csr_matrix | None
    dense: np.ndarray | None
    sparse_names: tuple[str, ...]
    dense_blocks: tuple[tuple[str, int], ...]

    @property
    def n_rows(self) -> int:
        if self.sparse is not None:
            return self.sparse.shape[0]
        assert self.dense is not None
        return self.dense.shape[0]

    @property
    def width(self) -> int:
        w = 0
        if self.sparse is not None:
            w += self.sparse.shape[1]
        if self.dense is not None:
            w += self.dense.shape[1]
        return w

    @property
    def layout_digest(self) -> str:
        payload = json.dumps(
            {"sparse": list(self.sparse_names), "dense": [list(b) for b in self.dense_blocks]},
            separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    def rows(self, indices) -> "FeatureMatrix":
        idx = np.asarray(indices, dtype=np.int64)
        return FeatureMatrix(
            sparse=self.sparse[idx] if self.sparse is not None else None,
            dense=self.dense[idx] if self.dense is not None else None,
            sparse_names=self.sparse_names,
            dense_blocks=self.dense_blocks,
        )

    def save(self, path: str | Path) -> None:
        data: dict[str, np.ndarray] = {
            "meta": np.asarray(
                [json.dumps({"sparse": list(self.sparse_names),
                             "dense": [list(b) for b in self.dense_blocks]})]
            )
        }
        if self.sparse is not None:
            data["s_data"] = self.sparse.data
            data["s_indices"] = self.sparse.indices
            data["s_indptr"] = self.sparse.indptr
            data["s_shape"] = np.asarray(self.sparse.shape)
        if self.dense is not None:
            data["dense"] = self.dense
        np.savez_compressed(path, **data)

    @classmethod
    def load(cls, path: str | Path) -> "FeatureMatrix":
        with np.load(path, allow_pickle=False) as npz:
            meta = json.loads(str(npz["meta"][0]))
            sparse = None
            if "s_data" in npz:
                sparse = sp.csr_matrix(
                    (npz["s_data"], npz["s_indices"], npz["s_indptr"]),
                    shape=tuple(npz["s_shape"]),
                )
            dense = npz["dense"] if "dense" in npz else None
        return cls(
            sparse=sparse,
            dense=dense,
            sparse_names=tuple(meta["sparse"]),
            dense_blocks=tuple((n, s) for n, s in meta["dense"]),
        )


class FeatureSpace:
    """Fitted feature layout: frozen sparse vocabulary plus dense block plan.

    Fit once on training data, then transform any dataset into matrices with
    the identical column layout.
    """

    def __init__(self, config: FeatureConfig, resources: Resources,
                 sparse_names: tuple[str, ...]):
        self.config = config
        self.resources = resources
        self.sparse_names = sparse_names
        self._column = {name: i for i, name in enumerate(sparse_names)}
        self.dense_blocks = self._plan_dense()
        if not config.blocks:
            raise ValueError("no feature blocks selected")

    def _plan_dense(self) -> tuple[tuple[str, int], ...]:
        blocks: list[tuple[str, int]] = []
        cfg = self.config
        if "WE" in cfg.blocks:
            if self.resources.embeddings is None:
                raise ValueError("WE block selected but no embedding table loaded")
            dim = self.resources.embeddings.dimension
            size = dim * cfg.concat_first_k if cfg.embedding_scheme == "concat" else dim
            blocks.append((f"WE:{cfg.embedding_scheme}", size))
        if "L" in cfg.blocks:
            if not self.resources.lexicons:
                raise ValueError("L block selected but no lexicons loaded")
            for name in lexicon_class_names(self.resources.lexicons):
                blocks.append((name, 1))
        return tuple(blocks)

    # -- per-tweet pieces ---------------------------------------------------

    def _token_views(self, text: str) -> tuple[TokenSequence, TokenSequence]:
        base = tokenize(text, lowercase=self.config.lowercase)
        if self.config.negation:
            negators = self.resources.negators or default_negators()
            marked = mark_negation(base, negators)
        else:
            marked = base
        return base, marked

    def sparse_features(self, text: str) -> dict[str, float]:
        cfg = self.config
        feats: dict[str, float] = {}
        if "WN" in cfg.blocks:
            _base, marked = self._token_views(text)
            feats.update(word_ngrams(marked.tokens, *cfg.word_n))
        if "CN" in cfg.blocks:
            feats.update(char_ngrams(text, *cfg.char_n))
        return feats

    def dense_features(self, text: str) -> np.ndarray:
        cfg = self.config
        parts: list[np.ndarray] = []
        if "WE" in cfg.blocks or "L" in cfg.blocks:
            base, marked = self._token_views(text)
        if "WE" in cfg.blocks:
            assert self.resources.embeddings is not None
            parts.append(
                embedding_features(
                    base.tokens,
                    self.resources.embeddings,
                    scheme=cfg.embedding_scheme,
                    first_k=cfg.concat_first_k,
                )
            )
        if "L" in cfg.blocks:
            parts.append(
                lexicon_features(
                    marked.tokens,
                    self.resources.lexicons,
                    strip_neg_prefix=cfg.strip_neg_for_lexicons,
                )
            )
        if not parts:
            return np.zeros(0)
        return np.concatenate(parts)

    # -- fit / transform ----------------------------------------------------

    @classmethod
    def fit(cls, ds: Dataset, config: FeatureConfig, resources: Resources) -> "FeatureSpace":
        probe = cls(config, resources, sparse_names=())
        vocab: set[str] = set()
        for tw in ds:
            vocab.update(probe.sparse_features(tw.text))
        return cls(config, resources, sparse_names=tuple(sorted(vocab)))

    def transform(self, ds: Dataset) -> FeatureMatrix:
        n = len(ds)
        has_sparse = bool({"WN", "CN"} & self.config.blocks)
        sparse = None
        if has_sparse:
            data: list[float] = []
            indices: list[int] = []
            indptr = [0]
            for tw in ds:
                feats = self.sparse_features(tw.text)
                cols = sorted(
                    self._column[name] for name in feats if name in self._column
                )
                indices.extend(cols)
                data.extend(1.0 for _ in cols)
                indptr.append(len(indices))
            sparse = sp.csr_matrix(
                (np.asarray(data), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
                shape=(n, len(self.sparse_names)),
            )
        dense = None
        dense_width = sum(size for _name, size in self.dense_blocks)
        if dense_width:
            dense = np.zeros((n, dense_width))
            for i, tw in enumerate(ds):
                dense[i] = self.dense_features(tw.text)
        return FeatureMatrix(
            sparse=sparse,
            dense=dense,
            sparse_names=self.sparse_names,
            dense_blocks=self.dense_blocks,
        )

    # -- persistence ----------------------------------------------------------

    def save(self, path: str | Path) -> None:
        """JSON snapshot: config, vocabulary, and lexicons. Embeddings are
        referenced by dimension only and must be re-supplied at load time."""
        cfg = self.config
        payload = {
            "version": 1,
            "config": {
                "blocks": sorted(cfg.blocks),
                "word_n": list(cfg.word_n),
                "char_n": list(cfg.char_n),
                "embedding_scheme": cfg.embedding_scheme,
                "concat_first_k": cfg.concat_first_k,
                "lowercase": cfg.lowercase,
                "negation": cfg.negation,
                "strip_neg_for_lexicons": cfg.strip_neg_for_lexicons,
            },
            "sparse_names": list(self.sparse_names),
            "embedding_dimension": (
                self.resources.embeddings.dimension if self.resources.embeddings else None
            ),
            "negators": sorted(self.resources.negators) if self.resources.negators else None,
            "lexicons": [
                {
                    "name": lex.name,
                    "mode": lex.mode,
                    "classes": list(lex.classes),
                    "entries": {w: dict(cv) for w, cv in lex.entries.items()},
                }
                for lex in self.resources.lexicons
            ],
        }
        Path(path).write_text(json.dumps(payload), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path, embeddings: EmbeddingTable | None = None) -> "FeatureSpace":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        c = payload["config"]
        config = FeatureConfig(
            blocks=frozenset(c["blocks"]),
            word_n=tuple(c["word_n"]),
            char_n=tuple(c["char_n"]),
            embedding_scheme=c["embedding_scheme"],
            concat_first_k=c["concat_first_k"],
            lowercase=c["lowercase"],
            negation=c["negation"],
            strip_neg_for_lexicons=c["strip_neg_for_lexicons"],
        )
        lexicons = [
            Lexicon(
                name=l["name"],
                mode=l["mode"],
                classes=tuple(l["classes"]),
                entries={w: dict(cv) for w, cv in l["entries"].items()},
            )
            for l in payload["lexicons"]
        ]
        want_dim = payload["embedding_dimension"]
        if "WE" in config.blocks:
            if embeddings is None:
                raise ValueError("feature space uses WE; supply the embedding table")
            if want_dim is not None and embeddings.dimension != want_dim:
                raise ValueError(
                    f"embedding dimension {embeddings.dimension} != fitted {want_dim}"
                )
        negators = frozenset(payload["negators"]) if payload["negators"] else None
        resources = Resources(lexicons=lexicons, embeddings=embeddings, negators=negators)
        return cls(config, resources, sparse_names=tuple(payload["sparse_names"]))


def build_feature_matrix(
    ds: Dataset,
    config: FeatureConfig,
    resources: Resources,
    space: FeatureSpace | None = None,
) -> tuple[FeatureSpace, FeatureMatrix]:
    """Fit (unless a fitted space is given) and transform in one call."""
    if space is None:
        space = FeatureSpace.fit(ds, config, resources)
    return space, space.transform(ds)
