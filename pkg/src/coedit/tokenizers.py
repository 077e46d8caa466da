"""Pluggable tokenizers for token budgeting.

Counting is what matters here: blocks are sized in tokens of whichever
tokenizer the run is configured with. The default is a small deterministic
splitter so tests are hermetic; a byte-level BPE loader covers external
vocab/merges files when parity with a real model tokenizer is wanted.
"""

from __future__ import annotations

import json
import re
from functools import lru_cache
from pathlib import Path
from typing import Protocol, Sequence

_SPECIAL = re.compile(r"<(?:add|del|esc|\d+)>")
_SIMPLE = re.compile(r"[A-Za-z_]\w*|\d+|[^\sA-Za-z_0-9]|\s+")


class Tokenizer(Protocol):
    def tokenize(self, text: str) -> list[str]: ...

    def count(self, text: str) -> int: ...


class SimpleTokenizer:
    """Deterministic word/punctuation splitter; special markers stay atomic."""

    name = "simple"

    def tokenize(self, text: str) -> list[str]:
        out: list[str] = []
        pos = 0
        for m in _SPECIAL.finditer(text):
            out.extend(_SIMPLE.findall(text[pos : m.start()]))
            out.append(m.group())
            pos = m.end()
        out.extend(_SIMPLE.findall(text[pos:]))
        return out

    def count(self, text: str) -> int:
        return len(self.tokenize(text))


@lru_cache(maxsize=1)
def _byte_encoder() -> dict[int, str]:
    # standard printable remapping used by byte-level BPE vocabularies
    bs = (
        list(range(ord("!"), ord("~") + 1))
        + list(range(ord("\xa1"), ord("\xac") + 1))
        + list(range(ord("\xae"), ord("\xff") + 1))
    )
    cs = bs[:]
    n = 0
    for b in range(256):
        if b not in bs:
            bs.append(b)
            cs.append(256 + n)
            n += 1
    return dict(zip(bs, map(chr, cs)))


_PRETOKEN = re.compile(
    r"'s|'t|'re|'ve|'m|'ll|'d| ?[A-Za-z]+| ?[0-9]+| ?[^\sA-Za-z0-9]+|\s+(?!\S)|\s+"
)


class BpeTokenizer:
    """Byte-level BPE over a vocab.json + merges.txt pair.

    Follows the usual greedy lowest-rank merge loop; the pre-split regex
    is an ASCII approximation of the reference pattern.
    """

    def __init__(self, vocab: dict[str, int], merges: Sequence[tuple[str, str]], name: str = "bpe"):
        self.vocab = vocab
        self.ranks = {pair: i for i, pair in enumerate(merges)}
        self.name = name
        self._cache: dict[str, list[str]] = {}

    @classmethod
    def from_files(cls, vocab_path: str | Path, merges_path: str | Path) -> "BpeTokenizer":
        vocab = json.loads(Path(vocab_path).read_text(encoding="utf-8"))
        merges = []
        for line_text in Path(merges_path).read_text(encoding="utf-8").splitlines():
            if not line_text or line_text.startswith("#"):
                continue
            parts = line_text.split()
            if len(parts) == 2:
                merges.append((parts[0], parts[1]))
        return cls(vocab, merges, name=str(vocab_path))

    @classmethod
    def load(cls, path: str | Path) -> "BpeTokenizer":
        """Accept a vocab.json path or a directory containing vocab.json
        and merges.txt."""
        p = Path(path)
        if p.is_dir():
            return cls.from_files(p / "vocab.json", p / "merges.txt")
        return cls.from_files(p, p.with_name("merges.txt"))

    def _bpe(self, piece: str) -> list[str]:
        cached = self._cache.get(piece)
        if cached is not None:
            return cached
        word = list(piece)
        while len(word) > 1:
            pairs = {(word[i], word[i + 1]) for i in range(len(word) - 1)}
            best = min(pairs, key=lambda pr: self.ranks.get(pr, 1 << 30))
            if best not in self.ranks:
                break
            merged: list[str] = []
            i = 0
            while i < len(word):
                if i < len(word) - 1 and (word[i], word[i + 1]) == best:
                    merged.append(word[i] + word[i + 1])
                    i += 2
                else:
                    merged.append(word[i])
                    i += 1
            word = merged
        self._cache[piece] = word
        return word

    def tokenize(self, text: str) -> list[str]:
        enc = _byte_encoder()
        out: list[str] = []
        pos = 0
        for m in _SPECIAL.finditer(text):
            out.extend(self._tokenize_plain(text[pos : m.start()], enc))
            out.append(m.group())
            pos = m.end()
        out.extend(self._tokenize_plain(text[pos:], enc))
        return out

    def _tokenize_plain(self, text: str, enc: dict[int, str]) -> list[str]:
        out: list[str] = []
        for piece in _PRETOKEN.findall(text):
            mapped = "".join(enc[b] for b in piece.encode("utf-8"))
            out.extend(self._bpe(mapped))
        return out

    def count(self, text: str) -> int:
        return len(self.tokenize(text))


def load_tokenizer(spec: str | None) -> Tokenizer:
    """Resolve a tokenizer selector: None/"simple" or a vocab path."""
    if not spec or spec == "simple":
        return SimpleTokenizer()
    return BpeTokenizer.load(spec)
