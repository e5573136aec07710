"""Candidate generation: synonym swaps (embedding kNN, lexicon, MLM) and
single-character manipulations (insert, delete, adjacent swap, homoglyph),
plus composite unions.

All generators are deterministic and ordered; a candidate never equals the
word it replaces, and every replacement must survive tokenization as a single
word so the edited text renders and re-tokenizes consistently. Character
transforms skip words shorter than three characters.
"""

from __future__ import annotations

from .errors import CapabilityError
from .resources import CharMaps, EmbeddingStore, SynonymLexicon, is_stopword
from .text import AttackedText, WordEdit, is_single_word_token
from .victims import RemoteClient

MIN_CHAR_EDIT_LEN = 3
MLM_DEFAULT_TOP_K = 20


def copy_case(pattern: str, word: str) -> str:
    """Copy the capitalization shape of ``pattern`` onto ``word``."""
    if pattern.isupper() and len(pattern) > 1:
        return word.upper()
    if pattern[:1].isupper():
        return word[:1].upper() + word[1:].lower()
    return word.lower()


def _edits(index: int, original: str, replacements: list[str], kind: str) -> list[WordEdit]:
    out: list[WordEdit] = []
    seen: set[str] = set()
    for rep in replacements:
        if rep == original or rep in seen:
            continue
        if not is_single_word_token(rep):
            continue
        seen.add(rep)
        out.append(WordEdit(index=index, original=original, replacement=rep, kind=kind))
    return out


class Transformation:
    kind: str = ""
    is_word_level: bool = True  # character transforms flip this off

    def candidates(self, atext: AttackedText, index: int) -> list[WordEdit]:
        raise NotImplementedError

    def descriptor(self) -> dict:
        return {"kind": self.kind}


class EmbeddingKnnSwap(Transformation):
    """Swap with the n nearest embedding-space neighbors."""

    kind = "emb_knn"

    def __init__(self, store: EmbeddingStore, n: int = 20):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.store = store
        self.n = n

    def candidates(self, atext: AttackedText, index: int) -> list[WordEdit]:
        word = atext.words[index]
        neighbors = self.store.nearest_neighbors(word, self.n)
        return _edits(index, word, [copy_case(word, w) for w in neighbors], self.kind)

    def descriptor(self) -> dict:
        return {"kind": self.kind, "n": self.n}


class LexiconSwap(Transformation):
    """Swap with synonym-lexicon entries."""

    kind = "lexicon"

    def __init__(self, lexicon: SynonymLexicon):
        self.lexicon = lexicon

    def candidates(self, atext: AttackedText, index: int) -> list[WordEdit]:
        word = atext.words[index]
        syns = self.lexicon.synonyms(word)
        return _edits(index, word, [copy_case(word, s) for s in syns], self.kind)


class MlmSwap(Transformation):
    """Swap with fill-in words from the remote masked-LM endpoint."""

    kind = "mlm"

    def __init__(self, client: RemoteClient | None, top_k: int = MLM_DEFAULT_TOP_K):
        self.client = client
        self.top_k = top_k

    def candidates(self, atext: AttackedText, index: int) -> list[WordEdit]:
        if self.client is None:
            raise CapabilityError("MLM transformation requires a remote model server")
        word = atext.words[index]
        suggestions = self.client.mlm_candidates(atext.text, index, self.top_k)
        keep = [s for s in suggestions if s.isalpha() and s.casefold() != word.casefold()]
        return _edits(index, word, [copy_case(word, s) for s in keep], self.kind)

    def descriptor(self) -> dict:
        return {"kind": self.kind, "top_k": self.top_k}


class CharInsert(Transformation):
    """Insert one filler character at each interior position. The filler is
    the first keyboard neighbor of the preceding character, falling back to
    an apostrophe, so fan-out stays one candidate per position."""

    kind = "char_insert"
    is_word_level = False

    def __init__(self, charmaps: CharMaps):
        self.charmaps = charmaps

    def candidates(self, atext: AttackedText, index: int) -> list[WordEdit]:
        word = atext.words[index]
        if len(word) < MIN_CHAR_EDIT_LEN:
            return []
        variants = []
        for pos in range(1, len(word)):
            neighbors = self.charmaps.neighbors(word[pos - 1].lower())
            filler = neighbors[0] if neighbors else "'"
            variants.append(word[:pos] + filler + word[pos:])
        return _edits(index, word, variants, self.kind)


class CharDelete(Transformation):
    kind = "char_delete"
    is_word_level = False

    def candidates(self, atext: AttackedText, index: int) -> list[WordEdit]:
        word = atext.words[index]
        if len(word) < MIN_CHAR_EDIT_LEN:
            return []
        variants = [word[:pos] + word[pos + 1:] for pos in range(len(word))]
        return _edits(index, word, variants, self.kind)


class CharNeighborSwap(Transformation):
    """Transpose each adjacent character pair."""

    kind = "char_neighbor_swap"
    is_word_level = False

    def candidates(self, atext: AttackedText, index: int) -> list[WordEdit]:
        word = atext.words[index]
        if len(word) < MIN_CHAR_EDIT_LEN:
            return []
        variants = []
        for pos in range(len(word) - 1):
            if word[pos] != word[pos + 1]:
                variants.append(word[:pos] + word[pos + 1] + word[pos] + word[pos + 2:])
        return _edits(index, word, variants, self.kind)


class CharHomoglyph(Transformation):
    """Substitute one character with a visually similar one (or a keyboard
    neighbor when ``include_keyboard``), one substitution per candidate."""

    kind = "char_homoglyph"
    is_word_level = False

    def __init__(self, charmaps: CharMaps, include_keyboard: bool = False):
        self.charmaps = charmaps
        self.include_keyboard = include_keyboard

    def candidates(self, atext: AttackedText, index: int) -> list[WordEdit]:
        word = atext.words[index]
        if len(word) < MIN_CHAR_EDIT_LEN:
            return []
        variants = []
        for pos, ch in enumerate(word):
            subs = list(self.charmaps.homoglyph_variants(ch))
            if self.include_keyboard:
                subs.extend(self.charmaps.neighbors(ch.lower()))
            for sub in dict.fromkeys(subs):
                variants.append(word[:pos] + sub + word[pos + 1:])
        return _edits(index, word, variants, self.kind)

    def descriptor(self) -> dict:
        return {"kind": self.kind, "include_keyboard": self.include_keyboard}


class Composite(Transformation):
    """Deduplicated concatenation of member candidates, in member order."""

    kind = "composite"

    def __init__(self, members: list[Transformation]):
        kinds = [m.kind for m in members]
        if len(set(kinds)) < 2:
            raise ValueError("composite requires at least 2 distinct member kinds")
        self.members = members

    @property
    def is_word_level(self) -> bool:  # type: ignore[override]
        return any(m.is_word_level for m in self.members)

    def candidates(self, atext: AttackedText, index: int) -> list[WordEdit]:
        out: list[WordEdit] = []
        seen: set[str] = set()
        for member in self.members:
            for edit in member.candidates(atext, index):
                if edit.replacement in seen:
                    continue
                seen.add(edit.replacement)
                out.append(edit)
        return out

    def descriptor(self) -> dict:
        return {"kind": self.kind, "members": [m.descriptor() for m in self.members]}


def all_position_candidates(
    transformation: Transformation,
    atext: AttackedText,
    stopwords: frozenset[str],
) -> dict[int, list[WordEdit]]:
    """Candidates at every attackable position; stopwords, punctuation-only
    tokens, and positions with no candidates are omitted."""
    out: dict[int, list[WordEdit]] = {}
    for index in atext.attackable_indices():
        if is_stopword(atext.words[index], stopwords):
            continue
        cands = transformation.candidates(atext, index)
        if cands:
            out[index] = cands
    return out
