"""Loadable linguistic assets: embeddings with exact kNN, synonym lexicon,
POS dictionary, stopwords, and character maps.

All stores are immutable after load and safe for concurrent reads. File
formats are plain UTF-8 text, one record per line:

  embeddings      word v1 v2 ... vd
  synonyms        word<TAB>syn1,syn2,...
  pos dictionary  word<TAB>TAG          (first tag wins on duplicates)
  stopwords       word
  char maps       char<TAB>variants     (variants concatenated, no separator)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ResourceError

POS_TAGS = ("NOUN", "VERB", "ADJ", "ADV", "PRON", "OTHER")


def default_data_dir() -> Path:
    """The packaged fixture assets shipped next to this module."""
    return Path(__file__).resolve().parent / "data"


def _normalize(word: str) -> str:
    return word.casefold()


class EmbeddingStore:
    """Word -> dense vector map with exact cosine kNN.

    Lookup is case-insensitive; all vectors share one dimension and none are
    zero-length.
    """

    def __init__(self, vectors: dict[str, np.ndarray]):
        if vectors:
            dims = {v.shape[0] for v in vectors.values()}
            if len(dims) != 1:
                raise ResourceError(f"inconsistent embedding dimensions: {sorted(dims)}")
        self._vectors = {_normalize(w): np.asarray(v, dtype=np.float64) for w, v in vectors.items()}
        self._words = sorted(self._vectors)
        if self._words:
            self._matrix = np.stack([self._vectors[w] for w in self._words])
            norms = np.linalg.norm(self._matrix, axis=1)
            if np.any(norms == 0.0):
                raise ResourceError("embedding store contains a zero vector")
            self._unit = self._matrix / norms[:, None]
        else:
            self._matrix = None
            self._unit = None

    def __len__(self) -> int:
        return len(self._vectors)

    @property
    def dimension(self) -> int | None:
        return None if self._matrix is None else self._matrix.shape[1]

    def __contains__(self, word: str) -> bool:
        return _normalize(word) in self._vectors

    def vector(self, word: str) -> np.ndarray | None:
        return self._vectors.get(_normalize(word))

    def nearest_neighbors(self, word: str, n: int) -> list[str]:
        """Up to ``n`` vocabulary words by descending cosine similarity to
        ``word``; the query itself is excluded, ties break lexicographically,
        and an out-of-vocabulary query yields []."""
        if n < 1:
            raise ValueError("n must be >= 1")
        if not self._vectors:
            raise ResourceError("nearest_neighbors on an empty embedding store")
        query = self.vector(word)
        if query is None:
            return []
        q = query / np.linalg.norm(query)
        sims = self._unit @ q
        norm_word = _normalize(word)
        # Sort by (-similarity, word); self._words is already sorted, and a
        # stable sort on the similarity keeps the lexicographic tie-break.
        order = sorted(
            (i for i, w in enumerate(self._words) if w != norm_word),
            key=lambda i: (-sims[i], self._words[i]),
        )
        return [self._words[i] for i in order[:n]]


def load_embeddings(path: str | Path) -> EmbeddingStore:
    """Parse a textual word-vector file; malformed lines raise with their
    line number."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ResourceError(f"cannot read embeddings file {path}: {exc}") from exc
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ResourceError(f"{path}:{lineno}: expected 'word v1 ... vd'")
        word, rest = parts[0], parts[1:]
        try:
            vec = np.array([float(x) for x in rest], dtype=np.float64)
        except ValueError as exc:
            raise ResourceError(f"{path}:{lineno}: non-numeric vector component") from exc
        if dim is None:
            dim = vec.shape[0]
        elif vec.shape[0] != dim:
            raise ResourceError(
                f"{path}:{lineno}: dimension {vec.shape[0]} != {dim} from earlier lines"
            )
        vectors[word] = vec
    return EmbeddingStore(vectors)


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine similarity undefined for zero vectors")
    return float(np.dot(u, v) / (nu * nv))


def angular_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """1 - arccos(cos)/pi, in [0, 1]; equals 1 iff the vectors are positive
    scalar multiples."""
    cos = max(-1.0, min(1.0, cosine_similarity(u, v)))
    return 1.0 - math.acos(cos) / math.pi


@dataclass(frozen=True)
class SynonymLexicon:
    """Word -> deduplicated synonym list; a word is never its own synonym."""

    entries: dict[str, tuple[str, ...]]

    def synonyms(self, word: str) -> list[str]:
        return list(self.entries.get(_normalize(word), ()))


def load_synonyms(path: str | Path) -> SynonymLexicon:
    path = Path(path)
    entries: dict[str, tuple[str, ...]] = {}
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ResourceError(f"cannot read synonym lexicon {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip() or line.startswith("#"):
            continue
        if "\t" not in line:
            raise ResourceError(f"{path}:{lineno}: expected 'word<TAB>syn1,syn2,...'")
        word, syns = line.split("\t", 1)
        word = _normalize(word.strip())
        seen: list[str] = []
        for syn in syns.split(","):
            syn = _normalize(syn.strip())
            if syn and syn != word and syn not in seen:
                seen.append(syn)
        entries[word] = tuple(seen)
    return SynonymLexicon(entries)


@dataclass(frozen=True)
class PosDictionary:
    """Flat word -> tag lookup over a fixed six-tag set; unknown words are
    OTHER."""

    entries: dict[str, str]

    def tag(self, word: str) -> str:
        return self.entries.get(_normalize(word), "OTHER")


def load_pos_dictionary(path: str | Path) -> PosDictionary:
    path = Path(path)
    entries: dict[str, str] = {}
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ResourceError(f"cannot read POS dictionary {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ResourceError(f"{path}:{lineno}: expected 'word<TAB>TAG'")
        word, tag = _normalize(parts[0].strip()), parts[1].strip().upper()
        if tag not in POS_TAGS:
            raise ResourceError(f"{path}:{lineno}: unknown tag {tag!r}")
        entries.setdefault(word, tag)
    return PosDictionary(entries)


def load_stopwords(path: str | Path) -> frozenset[str]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ResourceError(f"cannot read stopword list {path}: {exc}") from exc
    return frozenset(_normalize(w.strip()) for w in lines if w.strip() and not w.startswith("#"))


@dataclass(frozen=True)
class CharMaps:
    """Homoglyph and keyboard-adjacency maps; no identity entries."""

    homoglyphs: dict[str, tuple[str, ...]]
    keyboard_neighbors: dict[str, tuple[str, ...]]

    def homoglyph_variants(self, ch: str) -> list[str]:
        return list(self.homoglyphs.get(ch, ()))

    def neighbors(self, ch: str) -> list[str]:
        return list(self.keyboard_neighbors.get(ch, ()))


def _load_char_map(path: str | Path) -> dict[str, tuple[str, ...]]:
    path = Path(path)
    out: dict[str, tuple[str, ...]] = {}
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ResourceError(f"cannot read character map {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or len(parts[0]) != 1:
            raise ResourceError(f"{path}:{lineno}: expected 'char<TAB>variants'")
        ch, variants = parts[0], parts[1]
        kept = tuple(dict.fromkeys(v for v in variants if v != ch))
        if not kept:
            raise ResourceError(f"{path}:{lineno}: identity-only entry for {ch!r}")
        out[ch] = kept
    return out


def load_char_maps(homoglyph_path: str | Path, keyboard_path: str | Path) -> CharMaps:
    return CharMaps(
        homoglyphs=_load_char_map(homoglyph_path),
        keyboard_neighbors=_load_char_map(keyboard_path),
    )


def is_stopword(word: str, stopwords: frozenset[str]) -> bool:
    return _normalize(word) in stopwords


@dataclass(frozen=True)
class ResourceBundle:
    """Everything the transformations and constraints read."""

    embeddings: EmbeddingStore
    synonyms: SynonymLexicon
    pos: PosDictionary
    stopwords: frozenset[str]
    charmaps: CharMaps
    path: str = ""

    @classmethod
    def load(cls, directory: str | Path | None = None) -> "ResourceBundle":
        """Load from ``directory``, defaulting to the packaged fixture set."""
        if directory is None:
            directory = default_data_dir()
        directory = Path(directory)
        return cls(
            embeddings=load_embeddings(directory / "embeddings.txt"),
            synonyms=load_synonyms(directory / "synonyms.tsv"),
            pos=load_pos_dictionary(directory / "pos.tsv"),
            stopwords=load_stopwords(directory / "stopwords.txt"),
            charmaps=load_char_maps(directory / "homoglyphs.tsv", directory / "keyboard.tsv"),
            path=str(directory),
        )


class MeanVectorEncoder:
    """Sentence encoder used when no remote encoder is configured: the
    dimension-wise mean of in-vocabulary word vectors. Texts with zero
    in-vocabulary words encode to None, which similarity constraints treat
    as a closed failure."""

    def __init__(self, store: EmbeddingStore):
        self._store = store

    def encode(self, texts: list[str]) -> list[np.ndarray | None]:
        from .text import tokenize  # local import to avoid a cycle at load time

        out: list[np.ndarray | None] = []
        for text in texts:
            vecs = [self._store.vector(t.text) for t in tokenize(text)]
            vecs = [v for v in vecs if v is not None]
            out.append(np.mean(vecs, axis=0) if vecs else None)
        return out
