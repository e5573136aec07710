"""Victim-model oracles: batch probability prediction with query accounting,
a trainable linear surrogate, and the HTTP client for remote victims.

An oracle never exposes more than probability rows (plus gradients when the
backend supports them). Query accounting is cache-aware: a text served from
cache never counts as a query, because the ledger proxies victim-model cost.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import sparse

from .errors import CapabilityError, DataError, TransportError
from .text import AttackedText

UNK_MARKER = "[UNK]"
MULTILABEL_THRESHOLD = 0.5
DEFAULT_FEATURE_BITS = 18
REMOTE_BATCH_CAP = 32
TOKEN_ENV_VAR = "ADVTOX_TOKEN"


class TaskType(str, Enum):
    BINARY = "binary"
    MULTICLASS = "multiclass"
    MULTILABEL = "multilabel"


@dataclass(frozen=True)
class TaskKind:
    """Task shape plus label order; index 0 is always the benign label."""

    task: TaskType
    label_names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "task", TaskType(self.task))
        object.__setattr__(self, "label_names", tuple(self.label_names))
        if not self.label_names:
            raise ValueError("label_names must be non-empty")
        if self.task == TaskType.BINARY and len(self.label_names) != 2:
            raise ValueError("binary task requires exactly 2 labels")
        if self.task != TaskType.BINARY and len(self.label_names) < 2:
            raise ValueError("need at least 2 labels")

    @property
    def num_labels(self) -> int:
        return len(self.label_names)

    @property
    def benign_index(self) -> int:
        return 0

    def toxic_indices(self) -> range:
        return range(1, len(self.label_names))


@dataclass(frozen=True)
class VictimOutput:
    """One probability row per input text."""

    task: TaskKind
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 2 or probs.shape[1] != self.task.num_labels:
            raise ValueError(f"expected (n, {self.task.num_labels}) probs, got {probs.shape}")
        if np.any(probs < -1e-9) or np.any(probs > 1 + 1e-9):
            raise ValueError("probabilities out of [0, 1]")
        if self.task.task != TaskType.MULTILABEL:
            sums = probs.sum(axis=1)
            if np.any(np.abs(sums - 1.0) > 1e-6):
                raise ValueError("rows must sum to 1 for binary/multiclass outputs")
        object.__setattr__(self, "probs", probs)

    def row(self, i: int) -> np.ndarray:
        return self.probs[i]


def decide_labels(task: TaskKind, row: np.ndarray) -> int | frozenset[int]:
    """Argmax (ties to the lowest index) for binary/multiclass; the set of
    labels with prob >= 0.5 for multilabel."""
    if task.task == TaskType.MULTILABEL:
        return frozenset(int(i) for i in np.nonzero(row >= MULTILABEL_THRESHOLD)[0])
    return int(np.argmax(row))


class QueryLedger:
    """Threadsafe query counter with a response cache. ``queries`` equals the
    number of cache misses since the last reset."""

    def __init__(self):
        self._lock = threading.Lock()
        self._cache: dict[str, np.ndarray] = {}
        self._queries = 0

    @property
    def queries(self) -> int:
        with self._lock:
            return self._queries

    def reset(self) -> None:
        with self._lock:
            self._cache.clear()
            self._queries = 0

    def lookup(self, text: str) -> np.ndarray | None:
        with self._lock:
            return self._cache.get(text)

    def record(self, texts: Sequence[str], rows: np.ndarray) -> None:
        with self._lock:
            for text, row in zip(texts, rows):
                if text not in self._cache:
                    self._queries += 1
                self._cache[text] = row


class VictimOracle:
    """Cache-aware prediction front end over a concrete model backend.

    ``fork()`` yields an oracle over the same backend with a fresh ledger, so
    per-seed query accounting stays independent of scheduling.
    """

    def __init__(self, task: TaskKind, ledger: QueryLedger | None = None):
        self.task = task
        self.ledger = ledger or QueryLedger()

    # --- backend surface -------------------------------------------------
    def _predict_uncached(self, texts: Sequence[str]) -> np.ndarray:
        raise NotImplementedError

    @property
    def supports_gradients(self) -> bool:
        return False

    def gradient_word_scores(self, atext: AttackedText) -> np.ndarray:
        raise CapabilityError(f"{type(self).__name__} does not expose gradients")

    def fork(self) -> "VictimOracle":
        raise NotImplementedError

    # --- shared behaviour -------------------------------------------------
    def predict(self, texts: Sequence[str]) -> VictimOutput:
        if not texts:
            raise ValueError("predict requires a non-empty batch")
        rows, _ = self._predict_capped(texts, max_new=None)
        return VictimOutput(self.task, np.stack(rows))

    def predict_capped(
        self, texts: Sequence[str], max_new: int
    ) -> tuple[list[np.ndarray], int]:
        """Predict until ``max_new`` cache misses would be exceeded.

        Returns the rows computed (a prefix of ``texts``) and how many of the
        inputs were served.
        """
        return self._predict_capped(texts, max_new=max_new)

    def _predict_capped(
        self, texts: Sequence[str], max_new: int | None
    ) -> tuple[list[np.ndarray], int]:
        rows: list[np.ndarray | None] = []
        pending: list[str] = []
        pending_pos: list[int] = []
        served = 0
        for text in texts:
            cached = self.ledger.lookup(text)
            if cached is None and text not in pending:
                if max_new is not None and len(pending) + 1 > max_new:
                    break
                pending.append(text)
            if cached is None:
                pending_pos.append(len(rows))
                rows.append(None)
            else:
                rows.append(cached)
            served += 1
        if pending:
            fresh = self._predict_uncached(pending)
            self.ledger.record(pending, fresh)
            by_text = {t: fresh[i] for i, t in enumerate(pending)}
            for pos in pending_pos:
                rows[pos] = by_text[texts[pos]]
        return [r for r in rows if r is not None], served

    def predict_one(self, text: str) -> np.ndarray:
        return self.predict([text]).row(0)

    def predicted_labels(self, text: str) -> int | frozenset[int]:
        return decide_labels(self.task, self.predict_one(text))


class CallableOracle(VictimOracle):
    """Adapter around any ``texts -> prob matrix`` function (used heavily in
    tests and for rule-based victims)."""

    def __init__(self, task: TaskKind, fn: Callable[[Sequence[str]], np.ndarray],
                 ledger: QueryLedger | None = None):
        super().__init__(task, ledger)
        self._fn = fn

    def _predict_uncached(self, texts: Sequence[str]) -> np.ndarray:
        return np.asarray(self._fn(texts), dtype=np.float64)

    def fork(self) -> "CallableOracle":
        return CallableOracle(self.task, self._fn)


# ---------------------------------------------------------------------------
# Trainable linear surrogate
# ---------------------------------------------------------------------------

def _hash_feature(key: str, bits: int) -> int:
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % (1 << bits)


def featurize(text: str, bits: int = DEFAULT_FEATURE_BITS) -> dict[int, float]:
    """Hashed lowercase unigram+bigram counts.

    Any whitespace token containing the reserved ``[unk]`` marker contributes
    nothing, including to bigrams, so UNK probes measure pure feature removal.
    """
    tokens = [t.casefold() for t in text.split()]
    marker = UNK_MARKER.casefold()
    counts: dict[int, float] = {}
    for tok in tokens:
        if marker in tok:
            continue
        idx = _hash_feature("u:" + tok, bits)
        counts[idx] = counts.get(idx, 0.0) + 1.0
    for left, right in zip(tokens, tokens[1:]):
        if marker in left or marker in right:
            continue
        idx = _hash_feature("b:" + left + " " + right, bits)
        counts[idx] = counts.get(idx, 0.0) + 1.0
    return counts


def _feature_matrix(texts: Sequence[str], bits: int) -> sparse.csr_matrix:
    data, indices, indptr = [], [], [0]
    for text in texts:
        counts = featurize(text, bits)
        for idx in sorted(counts):
            indices.append(idx)
            data.append(counts[idx])
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.array(data), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
        shape=(len(texts), 1 << bits),
    )


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


@dataclass
class TrainConfig:
    seed: int = 0
    epochs: int = 200
    learning_rate: float = 1.0
    l2: float = 1e-4
    holdout_fraction: float = 0.2
    feature_bits: int = DEFAULT_FEATURE_BITS


@dataclass
class HeldoutReport:
    accuracy: float
    macro_f1: float
    n_train: int
    n_heldout: int


class SurrogateModel(VictimOracle):
    """Logistic model over hashed unigram+bigram counts: softmax rows for
    binary/multiclass, one-vs-rest sigmoids for multilabel. Deterministic
    given its training seed, and gradient-transparent."""

    def __init__(self, task: TaskKind, weights: np.ndarray, bias: np.ndarray,
                 feature_bits: int = DEFAULT_FEATURE_BITS, seed: int = 0):
        super().__init__(task)
        weights = np.asarray(weights, dtype=np.float64)
        bias = np.asarray(bias, dtype=np.float64)
        if weights.shape != (task.num_labels, 1 << feature_bits):
            raise ValueError(f"weights shape {weights.shape} inconsistent with task/bits")
        if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(bias))):
            raise ValueError("model parameters must be finite")
        self.weights = weights
        self.bias = bias
        self.feature_bits = feature_bits
        self.seed = seed

    # --- prediction -------------------------------------------------------
    def _logits(self, texts: Sequence[str]) -> np.ndarray:
        X = _feature_matrix(texts, self.feature_bits)
        return X @ self.weights.T + self.bias

    def _predict_uncached(self, texts: Sequence[str]) -> np.ndarray:
        z = self._logits(texts)
        if self.task.task == TaskType.MULTILABEL:
            return _sigmoid(z)
        return _softmax(z)

    def fork(self) -> "SurrogateModel":
        clone = SurrogateModel(self.task, self.weights, self.bias, self.feature_bits, self.seed)
        return clone

    # --- gradients ----------------------------------------------------------
    @property
    def supports_gradients(self) -> bool:
        return True

    def _loss_and_feature_gradient(self, text: str) -> tuple[float, dict[int, float]]:
        """NLL of the current prediction and d(loss)/d(count_f) for the
        active features."""
        counts = featurize(text, self.feature_bits)
        z = self.bias.copy()
        for f, c in counts.items():
            z += c * self.weights[:, f]
        if self.task.task == TaskType.MULTILABEL:
            p = _sigmoid(z[None, :])[0]
            yhat = (p >= MULTILABEL_THRESHOLD).astype(np.float64)
            eps = 1e-12
            loss = -float(np.sum(yhat * np.log(p + eps) + (1 - yhat) * np.log(1 - p + eps)))
            dz = p - yhat
        else:
            p = _softmax(z[None, :])[0]
            yhat = int(np.argmax(p))
            loss = -float(np.log(p[yhat] + 1e-12))
            dz = p.copy()
            dz[yhat] -= 1.0
        grad = {f: float(np.dot(dz, self.weights[:, f])) for f in counts}
        return loss, grad

    def gradient_word_scores(self, atext: AttackedText) -> np.ndarray:
        """Per-word importance: the L1 norm of the loss gradient restricted
        to the hashed features the word's whitespace chunk activates."""
        rendered = atext.text
        _, grad = self._loss_and_feature_gradient(rendered)
        # Whitespace-chunk spans in the rendered text; feature keys casefold
        # the chunk, matching featurize().
        spans: list[tuple[int, int, str]] = []
        i = 0
        while i < len(rendered):
            if rendered[i].isspace():
                i += 1
                continue
            start = i
            while i < len(rendered) and not rendered[i].isspace():
                i += 1
            spans.append((start, i, rendered[start:i].casefold()))
        chunks = [c for _, _, c in spans]
        word_offsets = []
        cursor = 0
        for w in atext.words:
            start = rendered.index(w, cursor)
            word_offsets.append(start)
            cursor = start + len(w)
        scores = np.zeros(atext.num_words)
        for i, off in enumerate(word_offsets):
            chunk_idx = next((k for k, (s, e, _) in enumerate(spans) if s <= off < e), None)
            if chunk_idx is None:
                continue
            feats: list[int] = [_hash_feature("u:" + chunks[chunk_idx], self.feature_bits)]
            if chunk_idx > 0:
                feats.append(_hash_feature(
                    "b:" + chunks[chunk_idx - 1] + " " + chunks[chunk_idx], self.feature_bits))
            if chunk_idx + 1 < len(chunks):
                feats.append(_hash_feature(
                    "b:" + chunks[chunk_idx] + " " + chunks[chunk_idx + 1], self.feature_bits))
            scores[i] = sum(abs(grad.get(f, 0.0)) for f in feats)
        return scores


def train_surrogate(
    texts: Sequence[str],
    labels: Sequence[int] | Sequence[Sequence[int]],
    task: TaskKind,
    config: TrainConfig | None = None,
    sample_weights: Sequence[float] | None = None,
) -> tuple[SurrogateModel, HeldoutReport]:
    """Full-batch gradient descent on the (weighted) log loss.

    Deterministic given ``config.seed``: the holdout split, initialization,
    and update order never depend on anything else.
    """
    config = config or TrainConfig()
    if len(texts) == 0:
        raise DataError("training corpus is empty")
    n = len(texts)
    L = task.num_labels
    if task.task == TaskType.MULTILABEL:
        Y = np.asarray(labels, dtype=np.float64)
        if Y.shape != (n, L):
            raise DataError(f"multilabel targets must be (n, {L}), got {Y.shape}")
    else:
        y = np.asarray(labels, dtype=np.int64)
        if y.shape != (n,) or y.min() < 0 or y.max() >= L:
            raise DataError("labels inconsistent with task")
        Y = np.zeros((n, L))
        Y[np.arange(n), y] = 1.0

    w = np.ones(n) if sample_weights is None else np.asarray(sample_weights, dtype=np.float64)
    if w.shape != (n,):
        raise DataError("sample_weights length mismatch")

    rng = np.random.default_rng(config.seed)
    perm = rng.permutation(n)
    n_hold = int(round(n * config.holdout_fraction))
    hold_idx, train_idx = perm[:n_hold], perm[n_hold:]
    if len(train_idx) == 0:
        train_idx, hold_idx = perm, perm[:0]

    X = _feature_matrix([texts[i] for i in train_idx], config.feature_bits)
    Yt = Y[train_idx]
    wt = w[train_idx]
    total = wt.sum()
    if total <= 0:
        raise DataError("sample weights sum to zero")

    weights = np.zeros((L, 1 << config.feature_bits))
    bias = np.zeros(L)
    lr = config.learning_rate
    for _ in range(config.epochs):
        z = X @ weights.T + bias
        if task.task == TaskType.MULTILABEL:
            P = _sigmoid(z)
        else:
            P = _softmax(z)
        G = (P - Yt) * wt[:, None] / total
        grad_w = (X.T @ G).T
        grad_b = G.sum(axis=0)
        weights -= lr * (grad_w + config.l2 * weights)
        bias -= lr * grad_b

    model = SurrogateModel(task, weights, bias, config.feature_bits, config.seed)

    if len(hold_idx):
        hold_texts = [texts[i] for i in hold_idx]
        out = model.predict(hold_texts).probs
        if task.task == TaskType.MULTILABEL:
            pred = (out >= MULTILABEL_THRESHOLD).astype(int)
            truth = Y[hold_idx].astype(int)
            accuracy = float(np.mean(np.all(pred == truth, axis=1)))
            f1s = []
            for c in range(L):
                tp = int(np.sum((pred[:, c] == 1) & (truth[:, c] == 1)))
                fp = int(np.sum((pred[:, c] == 1) & (truth[:, c] == 0)))
                fn = int(np.sum((pred[:, c] == 0) & (truth[:, c] == 1)))
                f1s.append(2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0)
            macro_f1 = float(np.mean(f1s))
        else:
            pred = out.argmax(axis=1)
            truth = Y[hold_idx].argmax(axis=1)
            accuracy = float(np.mean(pred == truth))
            f1s = []
            for c in range(L):
                tp = int(np.sum((pred == c) & (truth == c)))
                fp = int(np.sum((pred == c) & (truth != c)))
                fn = int(np.sum((pred != c) & (truth == c)))
                f1s.append(2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0)
            macro_f1 = float(np.mean(f1s))
    else:
        accuracy, macro_f1 = float("nan"), float("nan")

    report = HeldoutReport(accuracy=accuracy, macro_f1=macro_f1,
                           n_train=len(train_idx), n_heldout=len(hold_idx))
    return model, report


# ---------------------------------------------------------------------------
# Model persistence (versioned textual parameter dump)
# ---------------------------------------------------------------------------

MODEL_FORMAT_VERSION = 1


def surrogate_to_doc(model: SurrogateModel) -> dict:
    """Sparse textual dump: header (task, dims, seed) plus the non-zero
    weight columns per label row. Floats round-trip exactly through repr."""
    rows = []
    for r in range(model.task.num_labels):
        nz = np.nonzero(model.weights[r])[0]
        rows.append({"cols": [int(c) for c in nz],
                     "vals": [float(model.weights[r, c]) for c in nz]})
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "task": model.task.task.value,
        "labels": list(model.task.label_names),
        "feature_bits": model.feature_bits,
        "seed": model.seed,
        "bias": [float(b) for b in model.bias],
        "weight_rows": rows,
    }


def surrogate_from_doc(doc: dict) -> SurrogateModel:
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise DataError(f"unsupported model format version {doc.get('format_version')}")
    try:
        task = TaskKind(TaskType(doc["task"]), tuple(doc["labels"]))
        bits = int(doc["feature_bits"])
        weights = np.zeros((task.num_labels, 1 << bits))
        for r, row in enumerate(doc["weight_rows"]):
            cols = np.asarray(row["cols"], dtype=np.int64)
            if len(cols):
                weights[r, cols] = np.asarray(row["vals"], dtype=np.float64)
        return SurrogateModel(task, weights, np.asarray(doc["bias"], dtype=np.float64),
                              bits, int(doc["seed"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise DataError(f"malformed model document: {exc}") from exc


def save_surrogate(model: SurrogateModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(surrogate_to_doc(model)), encoding="utf-8")


def load_surrogate(path: str | Path) -> SurrogateModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot load model file {path}: {exc}") from exc
    return surrogate_from_doc(doc)


# ---------------------------------------------------------------------------
# Remote victim client (wire protocol shared with the model server)
# ---------------------------------------------------------------------------

class RemoteClient:
    """HTTP client for the victim wire protocol: /v1/predict, /v1/mlm,
    /v1/encode, /healthz. Retries transient failures 3 times with
    exponential backoff, then raises TransportError with the raw body."""

    def __init__(self, base_url: str, token: str | None = None, timeout: float = 30.0,
                 transport=None, retry_delay: float = 0.2):
        import httpx

        headers = {}
        token = token or os.environ.get(TOKEN_ENV_VAR)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        self._client = httpx.Client(base_url=base_url, headers=headers,
                                    timeout=timeout, transport=transport)
        self._retry_delay = retry_delay

    def close(self) -> None:
        self._client.close()

    def _post(self, path: str, payload: dict) -> dict:
        import httpx

        last_err: Exception | None = None
        for attempt in range(3):
            try:
                resp = self._client.post(path, json=payload)
            except httpx.HTTPError as exc:
                last_err = exc
                time.sleep(self._retry_delay * (2 ** attempt))
                continue
            if resp.status_code == 200:
                try:
                    return resp.json()
                except ValueError as exc:
                    raise TransportError(
                        f"{path}: malformed JSON reply", response_body=resp.text) from exc
            last_err = TransportError(
                f"{path}: HTTP {resp.status_code}", response_body=resp.text)
            if 400 <= resp.status_code < 500 and resp.status_code != 429:
                raise last_err
            time.sleep(self._retry_delay * (2 ** attempt))
        if isinstance(last_err, TransportError):
            raise last_err
        raise TransportError(f"{path}: {last_err}")

    def healthz(self) -> dict:
        import httpx

        try:
            resp = self._client.get("/healthz")
        except httpx.HTTPError as exc:
            raise TransportError(f"/healthz: {exc}") from exc
        if resp.status_code != 200:
            raise TransportError(f"/healthz: HTTP {resp.status_code}", response_body=resp.text)
        return resp.json()

    def predict(self, texts: Sequence[str]) -> tuple[TaskKind, np.ndarray]:
        rows: list[list[float]] = []
        task: TaskKind | None = None
        for start in range(0, len(texts), REMOTE_BATCH_CAP):
            chunk = list(texts[start:start + REMOTE_BATCH_CAP])
            doc = self._post("/v1/predict", {"texts": chunk})
            try:
                task = TaskKind(TaskType(doc["task"]), tuple(doc["labels"]))
                batch = doc["probs"]
            except (KeyError, ValueError) as exc:
                raise TransportError("/v1/predict: malformed reply",
                                     response_body=json.dumps(doc)) from exc
            if len(batch) != len(chunk):
                raise TransportError("/v1/predict: row count mismatch",
                                     response_body=json.dumps(doc))
            rows.extend(batch)
        assert task is not None
        return task, np.asarray(rows, dtype=np.float64)

    def mlm_candidates(self, text: str, mask_index: int, top_k: int) -> list[str]:
        doc = self._post("/v1/mlm", {"text": text, "mask_index": mask_index, "top_k": top_k})
        try:
            return [str(c) for c in doc["candidates"]]
        except (KeyError, TypeError) as exc:
            raise TransportError("/v1/mlm: malformed reply",
                                 response_body=json.dumps(doc)) from exc

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        doc = self._post("/v1/encode", {"texts": list(texts)})
        try:
            vectors = np.asarray(doc["vectors"], dtype=np.float64)
        except (KeyError, ValueError) as exc:
            raise TransportError("/v1/encode: malformed reply",
                                 response_body=json.dumps(doc)) from exc
        if vectors.shape[0] != len(texts):
            raise TransportError("/v1/encode: row count mismatch", response_body=json.dumps(doc))
        return vectors


class RemoteOracle(VictimOracle):
    """Victim oracle backed by a RemoteClient. No gradient capability."""

    def __init__(self, client: RemoteClient, task: TaskKind | None = None):
        if task is None:
            meta = client.healthz()
            try:
                task = TaskKind(TaskType(meta["task"]), tuple(meta["labels"]))
            except (KeyError, ValueError) as exc:
                raise TransportError("/healthz: malformed reply",
                                     response_body=json.dumps(meta)) from exc
        super().__init__(task)
        self._client = client

    def _predict_uncached(self, texts: Sequence[str]) -> np.ndarray:
        task, probs = self._client.predict(texts)
        if task.label_names != self.task.label_names:
            raise TransportError("/v1/predict: label order changed mid-run")
        return probs

    def fork(self) -> "RemoteOracle":
        return RemoteOracle(self._client, self.task)


class RemoteEncoder:
    """Sentence encoder that defers to the remote /v1/encode endpoint."""

    def __init__(self, client: RemoteClient):
        self._client = client

    def encode(self, texts: list[str]) -> list[np.ndarray | None]:
        vectors = self._client.encode(texts)
        return [vectors[i] for i in range(len(texts))]
