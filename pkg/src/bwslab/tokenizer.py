"""Whitespace-first tweet tokenizer with negation scoping.

Splitting is on whitespace; hashtags, @-mentions, URLs, and emoticons survive
as single tokens, and a run of trailing punctuation is split off into its own
token ("scared!!" -> "scared", "!!"). Negation scoping prefixes every
non-punctuation token after a negator word with "NEG-" until the next
punctuation token. The 28-word negator list ships as a resource file and can
be swapped out.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

URL_RE = re.compile(r"(?:https?://|www\.)\S+\Z", re.IGNORECASE)
HASHTAG_RE = re.compile(r"#\w+\Z")
MENTION_RE = re.compile(r"@\w+\Z")

# Common western and a handful of eastern emoticons.
EMOTICON_RE = re.compile(
    r"""(?:
        [<>]?[:;=8][\-o'^*]?[()\[\]dDpP/\\|@3*{}]+   # :-) ;P =D :'( :/
      | [()\[\]dD/\\|{}]+[\-o'^*]?[:;=8][<>]?        # (-: \:
      | <3+                                          # hearts
      | \^_*\^ | [xX][dD]+ | -_+-                    # ^_^ xD -_-
    )\Z""",
    re.VERBOSE,
)

# Maximal run of trailing non-word characters (apostrophes inside words and
# all inner punctuation stay put).
_TRAILING_PUNCT_RE = re.compile(r"(.*?)([^\w\s]+)\Z", re.DOTALL)

_PUNCT_TOKEN_RE = re.compile(r"[^\w\s]+\Z")

NEG_PREFIX = "NEG-"


@dataclass(frozen=True)
class TokenSequence:
    """Tokens plus the original text they came from."""

    text: str
    tokens: tuple[str, ...]

    def __iter__(self):
        return iter(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)


def _is_protected(chunk: str) -> bool:
    return bool(
        URL_RE.match(chunk)
        or HASHTAG_RE.match(chunk)
        or MENTION_RE.match(chunk)
        or EMOTICON_RE.match(chunk)
    )


def _split_chunk(chunk: str) -> list[str]:
    if _is_protected(chunk):
        return [chunk]
    m = _TRAILING_PUNCT_RE.match(chunk)
    if m and m.group(1):
        return _split_chunk(m.group(1)) + [m.group(2)]
    return [chunk]


def tokenize(text: str, lowercase: bool = True) -> TokenSequence:
    tokens: list[str] = []
    for chunk in text.split():
        tokens.extend(_split_chunk(chunk))
    if lowercase:
        tokens = [t.lower() for t in tokens]
    return TokenSequence(text=text, tokens=tuple(tokens))


def is_punctuation_token(token: str) -> bool:
    return bool(_PUNCT_TOKEN_RE.match(token))


def load_negators(path: str | Path | None = None) -> frozenset[str]:
    """Load the negator word list (bundled resource unless a path is given)."""
    if path is None:
        text = resources.files("bwslab.resources").joinpath("negators.txt").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


_DEFAULT_NEGATORS: frozenset[str] | None = None


def default_negators() -> frozenset[str]:
    global _DEFAULT_NEGATORS
    if _DEFAULT_NEGATORS is None:
        _DEFAULT_NEGATORS = load_negators()
    return _DEFAULT_NEGATORS


def mark_negation(seq: TokenSequence, negators: frozenset[str] | None = None) -> TokenSequence:
    """Prefix tokens in negated scope with NEG-.

    Scope starts after a negator word and ends at the next punctuation token
    (or the end of the sequence). The negator itself is left unprefixed.
    """
    if negators is None:
        negators = default_negators()
    out: list[str] = []
    in_scope = False
    for token in seq.tokens:
        if token.lower() in negators:
            in_scope = True
            out.append(token)
        elif is_punctuation_token(token):
            in_scope = False
            out.append(token)
        elif in_scope:
            out.append(NEG_PREFIX + token)
        else:
            out.append(token)
    return TokenSequence(text=seq.text, tokens=tuple(out))


def strip_neg(token: str) -> str:
    return token[len(NEG_PREFIX):] if token.startswith(NEG_PREFIX) else token
