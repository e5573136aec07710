"""Admissibility filters on perturbed texts.

``check_all`` evaluates constraints in their listed order and short-circuits
on the first failure; builtin recipes list them cheapest first so sentence
encoders are consulted last. Similarity constraints fail closed: missing
vectors reject the candidate rather than waving it through. A remote-encoder
transport failure raises TransportError, which is not a verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .resources import EmbeddingStore, PosDictionary, cosine_similarity, is_stopword
from .text import AttackedText, WordEdit, levenshtein


@dataclass(frozen=True)
class Verdict:
    ok: bool
    constraint: str = ""
    reason: str = ""

    @classmethod
    def passed(cls) -> "Verdict":
        return cls(True)

    @classmethod
    def failed(cls, constraint: str, reason: str) -> "Verdict":
        return cls(False, constraint, reason)


PASS = Verdict.passed()


class Constraint:
    name: str = ""

    def check(self, seed: AttackedText, candidate: AttackedText, last_edit: WordEdit) -> Verdict:
        raise NotImplementedError

    def descriptor(self) -> dict:
        return {"kind": self.name}


class MaxPerturbRatio(Constraint):
    """Cap on edited positions: at most max(1, floor(ratio * seed words)),
    so short seeds keep at least one admissible edit."""

    name = "max_ratio"

    def __init__(self, ratio: float):
        if not 0.0 < ratio <= 1.0:
            raise ValueError("ratio must be in (0, 1]")
        self.ratio = ratio

    def cap(self, seed: AttackedText) -> int:
        return max(1, math.floor(self.ratio * seed.num_words))

    def check(self, seed: AttackedText, candidate: AttackedText, last_edit: WordEdit) -> Verdict:
        cap = self.cap(seed)
        if len(candidate.modified_indices) > cap:
            return Verdict.failed(
                self.name,
                f"{len(candidate.modified_indices)} edited positions exceed cap {cap}")
        return PASS

    def descriptor(self) -> dict:
        return {"kind": self.name, "ratio": self.ratio}


class NoStopwordSwap(Constraint):
    name = "no_stopword_swap"

    def __init__(self, stopwords: frozenset[str]):
        self.stopwords = stopwords

    def check(self, seed: AttackedText, candidate: AttackedText, last_edit: WordEdit) -> Verdict:
        if is_stopword(last_edit.original, self.stopwords):
            return Verdict.failed(self.name, f"{last_edit.original!r} is a stopword")
        return PASS


class PosMatch(Constraint):
    """Replacement must keep the original's part of speech; OTHER matches
    only OTHER. Character edits bypass the check (their outputs are OOV by
    design, and character recipes carry no POS constraint)."""

    name = "pos_match"

    def __init__(self, pos: PosDictionary):
        self.pos = pos

    def check(self, seed: AttackedText, candidate: AttackedText, last_edit: WordEdit) -> Verdict:
        if last_edit.is_character_edit:
            return PASS
        tag_orig = self.pos.tag(last_edit.original)
        tag_new = self.pos.tag(last_edit.replacement)
        if tag_orig != tag_new:
            return Verdict.failed(
                self.name, f"{last_edit.original!r}({tag_orig}) -> "
                           f"{last_edit.replacement!r}({tag_new})")
        return PASS


class WordEmbeddingCosine(Constraint):
    """Cosine between the swapped words' vectors must exceed the threshold;
    an out-of-vocabulary word on either side fails closed."""

    name = "word_cos"

    def __init__(self, store: EmbeddingStore, threshold: float):
        self.store = store
        self.threshold = threshold

    def check(self, seed: AttackedText, candidate: AttackedText, last_edit: WordEdit) -> Verdict:
        u = self.store.vector(last_edit.original)
        v = self.store.vector(last_edit.replacement)
        if u is None or v is None:
            return Verdict.failed(self.name, "word vector missing (fails closed)")
        cos = cosine_similarity(u, v)
        if cos <= self.threshold:
            return Verdict.failed(self.name, f"cosine {cos:.4f} <= {self.threshold}")
        return PASS

    def descriptor(self) -> dict:
        return {"kind": self.name, "threshold": self.threshold}


class MaxEditDistance(Constraint):
    """Levenshtein distance between the rendered seed and candidate texts
    must stay strictly below the limit."""

    name = "edit_distance"

    def __init__(self, max_distance: int):
        if max_distance < 1:
            raise ValueError("max_distance must be >= 1")
        self.max_distance = max_distance

    def check(self, seed: AttackedText, candidate: AttackedText, last_edit: WordEdit) -> Verdict:
        dist = levenshtein(seed.text, candidate.text)
        if dist >= self.max_distance:
            return Verdict.failed(self.name, f"edit distance {dist} >= {self.max_distance}")
        return PASS

    def descriptor(self) -> dict:
        return {"kind": self.name, "max_distance": self.max_distance}


class SentenceSimilarity(Constraint):
    """Angular or cosine similarity between seed and candidate sentence
    encodings must reach the threshold. Uses whatever encoder is configured
    (mean word vectors by default, the remote /v1/encode when given); texts
    the encoder cannot embed fail closed."""

    def __init__(self, encoder, threshold: float, metric: str = "angular"):
        if metric not in ("angular", "cosine"):
            raise ValueError("metric must be 'angular' or 'cosine'")
        self.encoder = encoder
        self.threshold = threshold
        self.metric = metric

    @property
    def name(self) -> str:  # type: ignore[override]
        return f"sent_{self.metric}"

    def check(self, seed: AttackedText, candidate: AttackedText, last_edit: WordEdit) -> Verdict:
        if candidate.text == seed.text:
            return PASS
        a, b = self.encoder.encode([seed.text, candidate.text])
        if a is None or b is None:
            return Verdict.failed(self.name, "text not encodable (fails closed)")
        a, b = np.asarray(a), np.asarray(b)
        if not np.linalg.norm(a) or not np.linalg.norm(b):
            return Verdict.failed(self.name, "zero encoding (fails closed)")
        cos = cosine_similarity(a, b)
        if self.metric == "angular":
            sim = 1.0 - math.acos(max(-1.0, min(1.0, cos))) / math.pi
        else:
            sim = cos
        if sim < self.threshold:
            return Verdict.failed(self.name, f"{self.metric} similarity "
                                             f"{sim:.4f} < {self.threshold}")
        return PASS

    def descriptor(self) -> dict:
        return {"kind": self.name, "threshold": self.threshold}


def check_all(
    constraints: list[Constraint],
    seed: AttackedText,
    candidate: AttackedText,
    last_edit: WordEdit,
) -> Verdict:
    """First failure wins; an empty list passes."""
    for constraint in constraints:
        verdict = constraint.check(seed, candidate, last_edit)
        if not verdict.ok:
            return verdict
    return PASS
