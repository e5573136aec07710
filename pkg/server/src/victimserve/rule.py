"""Deterministic rule-based classifier, masked-LM, and encoder for mock mode.

Implements exactly the rule documented in protocol/README.md so the engine's
client tests and this server agree bit-for-bit: lexicon hit counts drive a
three-class softmax, MLM suggestions come from a fixed candidate list, and
encodings are hashed per-token vectors.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

DEFAULT_RULE_PATH = Path(__file__).resolve().parents[3] / "protocol" / "mock_rule.json"


def load_rule(path: str | Path | None = None) -> dict:
    rule_path = Path(path) if path else DEFAULT_RULE_PATH
    rule = json.loads(rule_path.read_text(encoding="utf-8"))
    rule["offensive_set"] = frozenset(rule["offensive_words"])
    rule["hate_set"] = frozenset(rule["hate_words"])
    return rule


def rule_tokens(text: str) -> list[str]:
    """Lowercase whitespace tokens with non-alphanumeric ASCII edges peeled."""
    out = []
    for raw in text.lower().split():
        start, end = 0, len(raw)
        while start < end and not (raw[start].isascii() and raw[start].isalnum()):
            start += 1
        while end > start and not (raw[end - 1].isascii() and raw[end - 1].isalnum()):
            end -= 1
        if end > start:
            out.append(raw[start:end])
    return out


def classify(rule: dict, text: str) -> list[float]:
    tokens = rule_tokens(text)
    off = sum(1 for t in tokens if t in rule["offensive_set"])
    hate = sum(1 for t in tokens if t in rule["hate_set"])
    logits = [1.0, 2.0 * off, 2.0 * hate]
    peak = max(logits)
    exps = [math.exp(z - peak) for z in logits]
    total = sum(exps)
    return [e / total for e in exps]


def word_at(text: str, index: int) -> str | None:
    """The word at an engine-tokenization position: whitespace split, then
    leading/trailing punctuation peeled into their own tokens."""
    import unicodedata

    words = []
    for chunk in text.split():
        lead = 0
        while lead < len(chunk) and unicodedata.category(chunk[lead])[0] in ("P", "S"):
            lead += 1
        if lead == len(chunk):
            words.append(chunk)
            continue
        trail = len(chunk)
        while trail > lead and unicodedata.category(chunk[trail - 1])[0] in ("P", "S"):
            trail -= 1
        if lead:
            words.append(chunk[:lead])
        words.append(chunk[lead:trail])
        if trail < len(chunk):
            words.append(chunk[trail:])
    if 0 <= index < len(words):
        return words[index]
    return None


def mlm_candidates(rule: dict, text: str, mask_index: int, top_k: int) -> list[str]:
    masked = (word_at(text, mask_index) or "").lower()
    out = []
    for candidate in rule["mlm_candidates"]:
        if candidate != masked:
            out.append(candidate)
        if len(out) == top_k:
            break
    return out


def encode(rule: dict, text: str) -> list[float]:
    dim = rule["encode_dim"]
    acc = [0.0] * dim
    for token in rule_tokens(text):
        for j in range(dim):
            digest = hashlib.blake2b(f"{token}:{j}".encode("utf-8"),
                                     digest_size=4).digest()
            acc[j] += (int.from_bytes(digest, "big") / 2 ** 31) - 1.0
    norm = math.sqrt(sum(x * x for x in acc))
    if norm == 0.0:
        return acc
    return [x / norm for x in acc]
