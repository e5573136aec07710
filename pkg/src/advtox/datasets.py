"""Dataset ingestion (CSV / JSONL) and result persistence.

CSV schemas:
  binary/multiclass   text,label[,identity_*...]        label = name or index
  multilabel          text,<label columns>[,identity_*]  0/1 cells; a benign
                      column is optional and derived as "no toxic label set"
                      when absent

JSONL mirrors the same fields: {"text", "label"} or {"text", "labels"},
plus an optional {"identities": {group: bool}} object.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError
from .victims import TaskKind, TaskType

IDENTITY_PREFIX = "identity_"
RESULTS_SCHEMA_VERSION = 1
BENIGN_NAME = "benign"


@dataclass(frozen=True)
class DatasetRecord:
    text: str
    label: int | tuple[int, ...]
    identities: dict[str, bool] = field(default_factory=dict)


@dataclass
class Dataset:
    task: TaskKind
    records: list[DatasetRecord]

    def __len__(self) -> int:
        return len(self.records)

    def identity_groups(self) -> list[str]:
        groups: set[str] = set()
        for r in self.records:
            groups.update(r.identities)
        return sorted(groups)


def _parse_label_cell(value: str, task: TaskKind, where: str) -> int:
    value = value.strip()
    if value in task.label_names:
        return task.label_names.index(value)
    try:
        idx = int(value)
    except ValueError:
        raise DataError(f"{where}: label {value!r} is neither a label name nor an index") from None
    if not 0 <= idx < task.num_labels:
        raise DataError(f"{where}: label index {idx} out of range")
    return idx


def _parse_binary_cell(value: str, where: str) -> int:
    value = value.strip()
    if value in ("0", "1"):
        return int(value)
    raise DataError(f"{where}: expected 0/1, got {value!r}")


def _finish_multilabel(values: dict[str, int], task: TaskKind, where: str) -> tuple[int, ...]:
    names = task.label_names
    if BENIGN_NAME in values or names[0] in values:
        benign = values.get(names[0], values.get(BENIGN_NAME, 0))
    else:
        benign = 0 if any(values.get(n, 0) for n in names[1:]) else 1
    vec = [benign] + [values.get(n, 0) for n in names[1:]]
    if vec[0] == 1 and any(vec[1:]):
        raise DataError(f"{where}: benign flag set alongside toxic labels")
    return tuple(vec)


def _record_identities(row: dict[str, str], where: str) -> dict[str, bool]:
    out = {}
    for key, value in row.items():
        if key.startswith(IDENTITY_PREFIX):
            out[key[len(IDENTITY_PREFIX):]] = bool(_parse_binary_cell(value, where))
    return out


def load_dataset(path: str | Path, fmt: str, task: TaskKind) -> Dataset:
    """Load and validate a dataset against ``task``."""
    path = Path(path)
    if fmt == "csv":
        records = _load_csv(path, task)
    elif fmt == "jsonl":
        records = _load_jsonl(path, task)
    else:
        raise DataError(f"unknown dataset format {fmt!r} (expected csv or jsonl)")
    return Dataset(task=task, records=records)


def _load_csv(path: Path, task: TaskKind) -> list[DatasetRecord]:
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty file") from None
            rows = list(reader)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if len(set(header)) != len(header):
        dupes = sorted({h for h in header if header.count(h) > 1})
        raise DataError(f"{path}: duplicate header column(s) {dupes}")
    if "text" not in header:
        raise DataError(f"{path}: missing required column 'text'")
    records = []
    for lineno, cells in enumerate(rows, start=2):
        if len(cells) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} cells, got {len(cells)}")
        row = dict(zip(header, cells))
        where = f"{path}:{lineno}"
        text = row["text"]
        if not text.strip():
            raise DataError(f"{where}: empty text")
        identities = _record_identities(row, where)
        if task.task == TaskType.MULTILABEL:
            label_cols = [h for h in header
                          if h != "text" and not h.startswith(IDENTITY_PREFIX)]
            known = set(task.label_names) | {BENIGN_NAME}
            unknown = [c for c in label_cols if c not in known]
            if unknown:
                raise DataError(f"{path}: unknown label column(s) {unknown}")
            values = {c: _parse_binary_cell(row[c], where) for c in label_cols}
            label: int | tuple[int, ...] = _finish_multilabel(values, task, where)
        else:
            if "label" not in header:
                raise DataError(f"{path}: missing required column 'label'")
            label = _parse_label_cell(row["label"], task, where)
        records.append(DatasetRecord(text=text, label=label, identities=identities))
    return records


def _load_jsonl(path: Path, task: TaskKind) -> list[DatasetRecord]:
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    records = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        where = f"{path}:{lineno}"
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{where}: invalid JSON: {exc}") from exc
        if "text" not in obj or not str(obj["text"]).strip():
            raise DataError(f"{where}: missing or empty 'text'")
        identities = {str(k): bool(v) for k, v in (obj.get("identities") or {}).items()}
        if task.task == TaskType.MULTILABEL:
            if "labels" not in obj:
                raise DataError(f"{where}: missing 'labels'")
            vec = obj["labels"]
            if len(vec) == task.num_labels:
                label: int | tuple[int, ...] = tuple(int(v) for v in vec)
            elif len(vec) == task.num_labels - 1:
                toxic = tuple(int(v) for v in vec)
                label = (0 if any(toxic) else 1,) + toxic
            else:
                raise DataError(f"{where}: expected {task.num_labels} or "
                                f"{task.num_labels - 1} labels, got {len(vec)}")
        else:
            if "label" not in obj:
                raise DataError(f"{where}: missing 'label'")
            label = _parse_label_cell(str(obj["label"]), task, where)
        records.append(DatasetRecord(text=str(obj["text"]), label=label,
                                     identities=identities))
    return records


def infer_task(path: str | Path, fmt: str, task_type: TaskType) -> TaskKind:
    """Derive label names from a dataset file; the benign label always lands
    at index 0."""
    path = Path(path)
    if fmt == "csv":
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty file") from None
            rows = list(reader)
        if "text" not in header:
            raise DataError(f"{path}: missing required column 'text'")
        if task_type == TaskType.MULTILABEL:
            label_cols = [h for h in header
                          if h != "text" and not h.startswith(IDENTITY_PREFIX)]
            if not label_cols:
                raise DataError(f"{path}: no label columns to infer from")
            toxic = [c for c in label_cols if c != BENIGN_NAME]
            return TaskKind(task_type, (BENIGN_NAME, *toxic))
        if "label" not in header:
            raise DataError(f"{path}: missing required column 'label'")
        col = header.index("label")
        seen = sorted({cells[col].strip() for cells in rows if cells})
    else:
        objs = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()
                if line.strip()]
        if task_type == TaskType.MULTILABEL:
            raise DataError("cannot infer multilabel label names from JSONL; use CSV "
                            "or pass labels explicitly")
        seen = sorted({str(o.get("label", "")).strip() for o in objs})
    if BENIGN_NAME not in seen:
        raise DataError(f"{path}: cannot infer labels without a '{BENIGN_NAME}' value")
    names = (BENIGN_NAME, *[s for s in seen if s != BENIGN_NAME])
    if task_type == TaskType.BINARY and len(names) != 2:
        raise DataError(f"{path}: binary task needs exactly 2 labels, found {list(names)}")
    return TaskKind(task_type, names)


def result_to_dict(result) -> dict:
    """Serialize one SeedResult for the results JSONL file."""
    return {
        "schema_version": RESULTS_SCHEMA_VERSION,
        "index": result.index,
        "status": result.status.value,
        "seed_text": result.record.text,
        "final_text": result.final_text,
        "truth": list(result.record.label) if isinstance(result.record.label, tuple)
                 else result.record.label,
        "edits": [
            {"index": e.index, "original": e.original,
             "replacement": e.replacement, "kind": e.kind}
            for e in result.edits
        ],
        "queries": result.queries,
        "seed_score": result.seed_score,
        "final_score": result.final_score,
        "perturbed_ratio": result.perturbed_ratio,
    }


def save_results(results, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for result in results:
            fh.write(json.dumps(result_to_dict(result), sort_keys=True) + "\n")


def load_results(path: str | Path) -> list[dict]:
    path = Path(path)
    out = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        if obj.get("schema_version") != RESULTS_SCHEMA_VERSION:
            raise DataError(f"{path}:{lineno}: unsupported schema_version")
        out.append(obj)
    return out
