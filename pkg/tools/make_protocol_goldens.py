#!/usr/bin/env python3
"""Freeze the golden request/response pairs for the victim wire protocol.

Responses are computed from the mock rule documented in protocol/README.md;
both the engine client tests and the model-server conformance tests replay
these files.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
PROTOCOL = ROOT / "protocol"
RULE = json.loads((PROTOCOL / "mock_rule.json").read_text(encoding="utf-8"))


def rule_tokens(text: str) -> list[str]:
    out = []
    for raw in text.lower().split():
        # strip leading/trailing chars that are not ASCII letters/digits
        start, end = 0, len(raw)
        while start < end and not (raw[start].isascii() and raw[start].isalnum()):
            start += 1
        while end > start and not (raw[end - 1].isascii() and raw[end - 1].isalnum()):
            end -= 1
        token = raw[start:end]
        if token:
            out.append(token)
    return out


def mock_probs(text: str) -> list[float]:
    tokens = rule_tokens(text)
    off = sum(1 for t in tokens if t in set(RULE["offensive_words"]))
    hate = sum(1 for t in tokens if t in set(RULE["hate_words"]))
    logits = [1.0, 2.0 * off, 2.0 * hate]
    m = max(logits)
    exps = [math.exp(z - m) for z in logits]
    total = sum(exps)
    return [e / total for e in exps]


def encode_vector(text: str) -> list[float]:
    dim = RULE["encode_dim"]
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


def main() -> None:
    golden = PROTOCOL / "golden"
    golden.mkdir(exist_ok=True)

    (golden / "healthz.json").write_text(json.dumps({
        "request": {"method": "GET", "path": "/healthz"},
        "response": {"task": "multiclass", "labels": RULE["labels"], "mode": "mock"},
    }, indent=1) + "\n", encoding="utf-8")

    predict_texts = [
        "you are a wonderful person",
        "you are a stupid idiot honestly",
        "those people are vermin and scum",
        "folks some loser keeps posting trash",
    ]
    (golden / "predict_multiclass.json").write_text(json.dumps({
        "request": {"method": "POST", "path": "/v1/predict",
                    "body": {"texts": predict_texts}},
        "response": {"task": "multiclass", "labels": RULE["labels"],
                     "probs": [mock_probs(t) for t in predict_texts]},
    }, indent=1) + "\n", encoding="utf-8")

    mlm_text = "you are a stupid person honestly"
    (golden / "mlm.json").write_text(json.dumps({
        "request": {"method": "POST", "path": "/v1/mlm",
                    "body": {"text": mlm_text, "mask_index": 3, "top_k": 5}},
        "response": {"candidates": RULE["mlm_candidates"][:5]},
    }, indent=1) + "\n", encoding="utf-8")

    encode_texts = ["you are kind", "you are a stupid idiot"]
    (golden / "encode.json").write_text(json.dumps({
        "request": {"method": "POST", "path": "/v1/encode",
                    "body": {"texts": encode_texts}},
        "response": {"vectors": [encode_vector(t) for t in encode_texts]},
    }, indent=1) + "\n", encoding="utf-8")

    errors = {
        "batch_too_large": {
            "request": {"method": "POST", "path": "/v1/predict",
                        "body": {"texts": ["x"] * 33}},
            "status": 413,
        },
        "malformed_body": {
            "request": {"method": "POST", "path": "/v1/predict",
                        "body": {"nope": True}},
            "status": 400,
        },
    }
    (golden / "errors.json").write_text(json.dumps(errors, indent=1) + "\n",
                                        encoding="utf-8")
    print(f"golden pairs written to {golden}")


if __name__ == "__main__":
    main()
