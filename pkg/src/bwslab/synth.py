"""Bundled synthetic mini-corpus for pipeline smoke tests and demos.

Tweets are bags of filler words plus words from a planted numeric lexicon;
each tweet's gold score is an affine function of the summed planted values,
so the lexicon feature block carries the full signal by construction. Toy
embeddings leak the planted value in their first coordinate, giving the
embedding block a weaker but nonzero signal. Nothing here claims any
realistic text distribution; the point is an end-to-end pipeline with
learnable structure.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import EMOTIONS, Dataset, Tweet, write_corpus
from .features import EmbeddingTable, Lexicon

_FILLERS = [
    "the", "a", "my", "that", "today", "again", "really", "just", "still",
    "about", "this", "week", "morning", "thing", "people", "work", "home",
    "now", "then", "always", "maybe", "kind", "of", "it", "was", "is",
]

_INTENSE = {
    "anger": ["irritated", "annoyed", "grumpy", "cross", "mad", "fuming", "furious",
              "livid", "outraged", "seething"],
    "fear": ["uneasy", "nervous", "worried", "anxious", "alarmed", "scared",
             "frightened", "panicked", "terrified", "petrified"],
    "joy": ["content", "pleased", "glad", "cheerful", "happy", "delighted",
            "joyful", "thrilled", "elated", "ecstatic"],
    "sadness": ["down", "blue", "gloomy", "unhappy", "sad", "sorrowful",
                "mournful", "heartbroken", "devastated", "crushed"],
}

_EMBED_DIM = 10


@dataclass
class MiniCorpus:
    datasets: dict[str, Dataset]
    lexicon: Lexicon
    embeddings: EmbeddingTable

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        """Materialize corpus TSVs, the lexicon, and the embedding table."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths: dict[str, Path] = {}
        for emotion, ds in self.datasets.items():
            p = out / f"{emotion}.tsv"
            write_corpus(ds, p)
            paths[emotion] = p
        lex_path = out / "planted-lexicon.tsv"
        lines = [f"#mode={self.lexicon.mode}"]
        for word in sorted(self.lexicon.entries):
            for cls, value in self.lexicon.entries[word].items():
                lines.append(f"{word}\t{cls}\t{value!r}")
        lex_path.write_text("".join(l + "\n" for l in lines), encoding="utf-8")
        paths["lexicon"] = lex_path
        emb_path = out / "toy-embeddings.txt"
        emb_lines = [f"{len(self.embeddings.vectors)} {self.embeddings.dimension}"]
        for word in sorted(self.embeddings.vectors):
            vec = " ".join(f"{v:.6f}" for v in self.embeddings.vectors[word])
            emb_lines.append(f"{word} {vec}")
        emb_path.write_text("".join(l + "\n" for l in emb_lines), encoding="utf-8")
        paths["embeddings"] = emb_path
        return paths


def make_mini_corpus(n_per_emotion: int = 75, seed: int = 0) -> MiniCorpus:
    rng = random.Random(seed)
    value_of: dict[str, float] = {}
    for words in _INTENSE.values():
        for rank, word in enumerate(words):
            # Planted intensities from -0.30 (mild) to +0.30 (extreme).
            value_of[word] = round(-0.30 + 0.60 * rank / (len(words) - 1), 3)

    datasets: dict[str, Dataset] = {}
    for emotion in EMOTIONS:
        tweets = []
        for i in range(n_per_emotion):
            n_planted = rng.choice((1, 1, 2, 3))
            planted = rng.sample(_INTENSE[emotion], n_planted)
            fillers = rng.sample(_FILLERS, rng.randint(3, 7))
            words = fillers + planted
            rng.shuffle(words)
            total = sum(value_of[w] for w in planted)
            score = min(1.0, max(0.0, round(0.5 + total / 2.0, 4)))
            tweets.append(
                Tweet(
                    id=f"{emotion[:3]}{i:04d}",
                    text=" ".join(words),
                    emotion=emotion,
                    gold_score=score,
                )
            )
        datasets[emotion] = Dataset(emotion=emotion, tweets=tuple(tweets))

    entries = {word: {"intensity": value} for word, value in value_of.items()}
    lexicon = Lexicon(
        name="planted", mode="numeric", classes=("intensity",), entries=entries
    )

    nprng = np.random.default_rng(seed)
    vocab = sorted(set(_FILLERS) | set(value_of))
    vectors = {}
    for word in vocab:
        vec = nprng.normal(scale=0.3, size=_EMBED_DIM)
        vec[0] = value_of.get(word, 0.0) * 2.0 + nprng.normal(scale=0.05)
        vectors[word] = vec
    embeddings = EmbeddingTable(dimension=_EMBED_DIM, vectors=vectors)
    return MiniCorpus(datasets=datasets, lexicon=lexicon, embeddings=embeddings)
