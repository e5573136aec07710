#!/usr/bin/env python3
"""Freeze the golden fixture run: toxictrap-default against the seed-42
surrogate over the 50-seed toxic set.

The frozen file pins per-seed outcomes (status, final text, queries, edits)
and the aggregate metrics; the test suite replays the run and requires exact
equality, then re-verifies every SUCCESS against the goal predicate and the
full constraint chain independently of search bookkeeping.
"""

from __future__ import annotations

import json
from pathlib import Path

from advtox.datasets import infer_task, load_dataset, result_to_dict
from advtox.recipes import builtin_recipe
from advtox.resources import ResourceBundle, default_data_dir
from advtox.runner import run_attacks
from advtox.victims import TrainConfig, train_surrogate

ROOT = Path(__file__).resolve().parent.parent
GOLDEN = ROOT / "tests" / "golden"


def main() -> None:
    data = default_data_dir()
    resources = ResourceBundle.load()
    task = infer_task(data / "corpus_multiclass.csv", "csv", "multiclass")
    corpus = load_dataset(data / "corpus_multiclass.csv", "csv", task)
    model, report = train_surrogate(
        [r.text for r in corpus.records], [r.label for r in corpus.records],
        task, TrainConfig(seed=42))
    seeds = load_dataset(data / "seeds_toxic_50.csv", "csv", task)
    recipe = builtin_recipe("toxictrap-default", task, resources)
    results, metrics = run_attacks(seeds, recipe, model, parallelism=1, rng_seed=0)

    doc = {
        "surrogate": {"seed": 42, "heldout_accuracy": report.accuracy,
                      "heldout_macro_f1": report.macro_f1},
        "recipe": recipe.descriptor(),
        "rng_seed": 0,
        "metrics": metrics.to_dict(),
        "results": [result_to_dict(r) for r in results],
    }
    GOLDEN.mkdir(exist_ok=True)
    (GOLDEN / "fixture_run.json").write_text(
        json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    print(f"golden run frozen: asr={metrics.asr} avg_queries={metrics.avg_queries}")


if __name__ == "__main__":
    main()
