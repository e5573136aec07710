"""Tokenized text values, word-edit tracking, and string-edit kernels.

The tokenizer splits on Unicode whitespace and then peels leading/trailing
punctuation runs off each chunk into separate tokens, so "idiots!!!" becomes
["idiots", "!!!"]. Interior punctuation (apostrophes, hyphens) stays inside
the word. Tokens carry character offsets and the inter-token text is kept, so
rendering an edited text reproduces the original spacing exactly.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field, replace


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch)[0] in ("P", "S")


def _is_attackable(token: str) -> bool:
    # Pure punctuation/digit tokens are never perturbed.
    return any(ch.isalpha() for ch in token)


@dataclass(frozen=True)
class Token:
    text: str
    offset: int
    attackable: bool


def tokenize(text: str) -> list[Token]:
    """Split ``text`` into word and punctuation tokens with char offsets.

    Deterministic; case preserved; empty input yields an empty list.
    Concatenating token texts with the skipped inter-token whitespace
    reproduces the input.
    """
    tokens: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        start = i
        while i < n and not text[i].isspace():
            i += 1
        chunk = text[start:i]
        # Peel a leading punctuation run, unless the chunk is all punctuation.
        lead = 0
        while lead < len(chunk) and _is_punct(chunk[lead]):
            lead += 1
        if lead == len(chunk):
            tokens.append(Token(chunk, start, False))
            continue
        trail = len(chunk)
        while trail > lead and _is_punct(chunk[trail - 1]):
            trail -= 1
        if lead:
            tokens.append(Token(chunk[:lead], start, False))
        core = chunk[lead:trail]
        tokens.append(Token(core, start + lead, _is_attackable(core)))
        if trail < len(chunk):
            tokens.append(Token(chunk[trail:], start + trail, False))
    return tokens


def is_single_word_token(s: str) -> bool:
    """True iff ``s`` survives tokenization as exactly itself.

    Word replacements must satisfy this or the edited text would re-tokenize
    into a different word list.
    """
    toks = tokenize(s)
    return len(toks) == 1 and toks[0].text == s and toks[0].attackable


@dataclass(frozen=True)
class WordEdit:
    """A single-word replacement; ``kind`` names the transformation that
    produced it ("" for hand-built edits)."""

    index: int
    original: str
    replacement: str
    kind: str = ""

    def __post_init__(self):
        if self.replacement == self.original:
            raise ValueError("edit must change the word")

    @property
    def is_character_edit(self) -> bool:
        return self.kind.startswith("char_")


@dataclass(frozen=True)
class AttackedText:
    """An immutable tokenized text with its edit history.

    ``words`` is always the tokenization of the rendered text. Edits are
    non-destructive: applying one returns a new value and leaves the input
    untouched, so texts can be shared freely between attack workers.
    """

    original_text: str
    words: tuple[str, ...]
    modified_indices: frozenset[int] = field(default_factory=frozenset)
    generation: int = 0
    _gaps: tuple[str, ...] = ()
    _attackable: tuple[bool, ...] = ()

    @classmethod
    def from_text(cls, text: str) -> "AttackedText":
        tokens = tokenize(text)
        gaps = []
        pos = 0
        for tok in tokens:
            gaps.append(text[pos:tok.offset])
            pos = tok.offset + len(tok.text)
        gaps.append(text[pos:])
        return cls(
            original_text=text,
            words=tuple(t.text for t in tokens),
            _gaps=tuple(gaps),
            _attackable=tuple(t.attackable for t in tokens),
        )

    @property
    def text(self) -> str:
        """The rendered current text."""
        parts = []
        for gap, word in zip(self._gaps, self.words):
            parts.append(gap)
            parts.append(word)
        parts.append(self._gaps[-1])
        return "".join(parts)

    @property
    def num_words(self) -> int:
        return len(self.words)

    def is_attackable(self, index: int) -> bool:
        return self._attackable[index]

    def attackable_indices(self) -> list[int]:
        return [i for i, a in enumerate(self._attackable) if a]

    def apply_edit(self, edit: WordEdit) -> "AttackedText":
        """Return a new text with ``edit`` applied; the receiver is unchanged."""
        if not 0 <= edit.index < len(self.words):
            raise ValueError(
                f"edit index {edit.index} out of range for {len(self.words)}-word text"
            )
        if self.words[edit.index] != edit.original:
            raise ValueError(
                f"edit expects {edit.original!r} at index {edit.index}, "
                f"found {self.words[edit.index]!r}"
            )
        if not is_single_word_token(edit.replacement):
            raise ValueError(
                f"replacement {edit.replacement!r} does not tokenize to a single word"
            )
        words = list(self.words)
        words[edit.index] = edit.replacement
        return replace(
            self,
            words=tuple(words),
            modified_indices=self.modified_indices | {edit.index},
            generation=self.generation + 1,
        )

    def text_with_word(self, index: int, word: str) -> str:
        """Rendered text with ``word`` spliced at ``index`` (probe string;
        no edit bookkeeping, so placeholders like "[UNK]" are allowed)."""
        parts = []
        for i, (gap, w) in enumerate(zip(self._gaps, self.words)):
            parts.append(gap)
            parts.append(word if i == index else w)
        parts.append(self._gaps[-1])
        return "".join(parts)

    def text_without_word(self, index: int) -> str:
        """Rendered text with the word at ``index`` dropped."""
        parts = []
        for i, (gap, w) in enumerate(zip(self._gaps, self.words)):
            parts.append(gap)
            if i != index:
                parts.append(w)
        parts.append(self._gaps[-1])
        return "".join(parts)


def perturbed_ratio(atext: AttackedText) -> float:
    """Fraction of seed words that have been edited.

    The denominator is the seed word count; single-word edits preserve the
    token count, so ``len(words)`` equals it for every descendant.
    """
    if not atext.words:
        raise ValueError("perturbed_ratio undefined for empty text")
    return len(atext.modified_indices) / len(atext.words)


def levenshtein(a: str, b: str) -> int:
    """Minimal number of character insertions/deletions/substitutions."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]
