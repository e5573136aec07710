"""Batch attack runner: fans seeds out to a bounded worker pool, keeps
per-seed query accounting independent of scheduling, and aggregates metrics.

Each seed gets a fork of the oracle (fresh ledger and cache) and an RNG
derived from (run seed, record index), so the result content is identical for
any parallelism degree.
"""

from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .datasets import Dataset, DatasetRecord
from .errors import DataError, TransportError
from .goals import GoalStatus, init_goal
from .metrics import RunMetrics, compute_metrics
from .recipes import AttackRecipe
from .search import (
    AttackResult,
    AttackStatus,
    Beam,
    Genetic,
    GreedyWir,
    beam_attack,
    genetic_attack,
    greedy_wir_attack,
)
from .text import AttackedText, WordEdit, perturbed_ratio
from .victims import VictimOracle


@dataclass
class SeedResult:
    index: int
    record: DatasetRecord
    status: AttackStatus
    final_text: str
    edits: list[WordEdit] = field(default_factory=list)
    queries: int = 0
    seed_score: float | None = None
    final_score: float | None = None
    perturbed_ratio: float = 0.0


def seed_rng(run_seed: int, index: int) -> random.Random:
    return random.Random(f"{run_seed}:{index}")


def attack_seed(
    record: DatasetRecord,
    index: int,
    recipe: AttackRecipe,
    oracle: VictimOracle,
    run_seed: int,
) -> SeedResult:
    """Attack one seed against a fresh fork of the oracle."""
    fork = oracle.fork()
    atext = AttackedText.from_text(record.text)
    try:
        state = init_goal(atext, record.label, fork, threshold=recipe.threshold)
        if state.status is GoalStatus.SKIPPED:
            return SeedResult(index=index, record=record, status=AttackStatus.SKIPPED,
                              final_text=record.text, queries=fork.ledger.queries)
        stopwords = _recipe_stopwords(recipe)
        search = recipe.search
        if isinstance(search, GreedyWir):
            result = greedy_wir_attack(
                state, recipe.goal, recipe.transformation, recipe.constraints,
                search.ranking, fork, recipe.budget, stopwords)
        elif isinstance(search, Beam):
            result = beam_attack(
                state, recipe.goal, recipe.transformation, recipe.constraints,
                search.width, fork, recipe.budget, stopwords)
        elif isinstance(search, Genetic):
            result = genetic_attack(
                state, recipe.goal, recipe.transformation, recipe.constraints,
                search.population, search.generations, search.mutation_rate,
                fork, recipe.budget, stopwords, seed_rng(run_seed, index))
        else:
            raise TypeError(f"unknown search strategy {search!r}")
    except TransportError:
        return SeedResult(index=index, record=record, status=AttackStatus.FAILED_TRANSPORT,
                          final_text=record.text, queries=fork.ledger.queries)
    return _to_seed_result(index, record, result)


def _to_seed_result(index: int, record: DatasetRecord, result: AttackResult) -> SeedResult:
    return SeedResult(
        index=index, record=record, status=result.status,
        final_text=result.final.text, edits=list(result.edits),
        queries=result.queries, seed_score=result.seed_score,
        final_score=result.final_score,
        perturbed_ratio=perturbed_ratio(result.final))


def _recipe_stopwords(recipe: AttackRecipe) -> frozenset[str]:
    for constraint in recipe.constraints:
        if constraint.name == "no_stopword_swap":
            return constraint.stopwords
    return frozenset()


def run_attacks(
    dataset: Dataset,
    recipe: AttackRecipe,
    oracle: VictimOracle,
    parallelism: int = 1,
    rng_seed: int = 0,
) -> tuple[list[SeedResult], RunMetrics]:
    """Attack every seed in the dataset; results come back ordered by input
    index regardless of worker scheduling."""
    if dataset.task.task != recipe.task_type:
        raise DataError(
            f"dataset task {dataset.task.task.value} does not match recipe "
            f"goal {recipe.task_type.value}")
    if oracle.task.label_names != dataset.task.label_names:
        raise DataError("oracle labels do not match dataset labels")
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")

    def work(pair: tuple[int, DatasetRecord]) -> SeedResult:
        index, record = pair
        return attack_seed(record, index, recipe, oracle, rng_seed)

    jobs = list(enumerate(dataset.records))
    if parallelism == 1:
        results = [work(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(work, jobs))
    results.sort(key=lambda r: r.index)
    return results, compute_metrics(results)
