"""Search strategies over the perturbation space: greedy word-importance
ranking (unk / del / weighted-saliency / gradient), beam search, and a
genetic baseline.

Each attack runs against a seed-scoped oracle (fresh ledger), so the query
budget and the reported query count are exact for that seed. A SUCCESS result
always carries a final text built from constraint-admissible edits on which
the goal predicate fired.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .constraints import Constraint, MaxPerturbRatio, check_all
from .goals import GoalFunction, GoalState, GoalStatus
from .resources import is_stopword
from .text import AttackedText, WordEdit
from .transforms import Transformation
from .victims import UNK_MARKER, VictimOracle


class Ranking(str, Enum):
    UNK = "unk"
    DEL = "del"
    WS = "ws"
    GRAD = "grad"


@dataclass(frozen=True)
class GreedyWir:
    ranking: Ranking = Ranking.UNK
    kind: str = "greedy_wir"


@dataclass(frozen=True)
class Beam:
    width: int = 8
    kind: str = "beam"

    def __post_init__(self):
        if self.width < 1:
            raise ValueError("beam width must be >= 1")


@dataclass(frozen=True)
class Genetic:
    population: int = 60
    generations: int = 20
    mutation_rate: float = 0.2
    kind: str = "genetic"

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if not 0.0 < self.mutation_rate < 1.0:
            raise ValueError("mutation_rate must be in (0, 1)")


SearchStrategy = GreedyWir | Beam | Genetic


class AttackStatus(str, Enum):
    SUCCESS = "success"
    FAILED_BUDGET = "failed_budget"
    FAILED_EXHAUSTED = "failed_exhausted"
    SKIPPED = "skipped"
    FAILED_TRANSPORT = "failed_transport"


@dataclass
class AttackResult:
    status: AttackStatus
    final: AttackedText
    queries: int
    edits: list[WordEdit] = field(default_factory=list)
    seed_score: float = 0.0
    final_score: float = 0.0


class _BudgetExhausted(Exception):
    pass


class _Run:
    """Shared bookkeeping for one attack: budget-capped scoring and the
    admissibility pipeline."""

    def __init__(self, state: GoalState, goal: GoalFunction, transformation: Transformation,
                 constraints: list[Constraint], oracle: VictimOracle, budget: int,
                 stopwords: frozenset[str]):
        if budget <= 0:
            raise ValueError("query budget must be positive")
        if state.status is not GoalStatus.SEARCHING:
            raise ValueError("attack requires a SEARCHING goal state")
        self.state = state
        self.goal = goal
        self.transformation = transformation
        self.constraints = constraints
        self.oracle = oracle
        self.budget = budget
        self.stopwords = stopwords
        self.seed = state.seed
        self.base_score = goal.check(state, state.seed_output).score
        self.cap = seed_edit_cap(constraints, state.seed)

    def remaining(self) -> int:
        return max(0, self.budget - self.oracle.ledger.queries)

    def scores(self, texts: list[str]) -> list[float]:
        """Heuristic scores for probe texts; raises once the budget is hit."""
        rows, served = self.oracle.predict_capped(texts, max_new=self.remaining())
        if served < len(texts):
            raise _BudgetExhausted
        return [self.goal.check(self.state, row).score for row in rows]

    def evaluate(self, candidates: list[tuple[WordEdit, AttackedText]]):
        """Score candidate texts; returns (results, truncated) where results
        align with the served prefix."""
        texts = [cand.text for _, cand in candidates]
        rows, served = self.oracle.predict_capped(texts, max_new=self.remaining())
        results = [self.goal.check(self.state, row) for row in rows]
        return results, served < len(texts)

    def admissible_edits(self, current: AttackedText, index: int):
        out = []
        for edit in self.transformation.candidates(current, index):
            cand = current.apply_edit(edit)
            if check_all(self.constraints, self.seed, cand, edit).ok:
                out.append((edit, cand))
        return out

    def attackable_positions(self, atext: AttackedText) -> list[int]:
        return [i for i in atext.attackable_indices()
                if not is_stopword(atext.words[i], self.stopwords)]

    def result(self, status: AttackStatus, final: AttackedText,
               edits: list[WordEdit], final_score: float) -> AttackResult:
        return AttackResult(status=status, final=final, queries=self.oracle.ledger.queries,
                            edits=edits, seed_score=self.base_score, final_score=final_score)


def seed_edit_cap(constraints: list[Constraint], seed: AttackedText) -> int:
    """Maximum number of edited positions the constraint set allows."""
    for c in constraints:
        if isinstance(c, MaxPerturbRatio):
            return c.cap(seed)
    return seed.num_words


def rank_words(
    ranking: Ranking,
    atext: AttackedText,
    state: GoalState,
    goal: GoalFunction,
    oracle: VictimOracle,
    transformation: Transformation,
    stopwords: frozenset[str],
    budget: int | None = None,
) -> list[int]:
    """Attackable word positions in descending importance.

    Importance is the change the probe induces in the heuristic score:
    unk/del use score(probe) - score(text); weighted saliency multiplies the
    softmax-normalized unk deltas by the best candidate gain; grad asks the
    oracle for gradient scores. Ties break toward the lower position.
    """
    run = _Run(state, goal, NullTransformation(), [], oracle,
               budget if budget is not None else 10 ** 9, stopwords)
    positions = [i for i in atext.attackable_indices()
                 if not is_stopword(atext.words[i], stopwords)]
    if not positions:
        return []
    if ranking is Ranking.GRAD:
        all_scores = oracle.gradient_word_scores(atext)
        importance = {i: float(all_scores[i]) for i in positions}
    elif ranking in (Ranking.UNK, Ranking.WS):
        base = run.scores([atext.text])[0]
        probes = [atext.text_with_word(i, UNK_MARKER) for i in positions]
        deltas = [s - base for s in run.scores(probes)]
        if ranking is Ranking.UNK:
            importance = dict(zip(positions, deltas))
        else:
            exp = np.exp(np.asarray(deltas) - max(deltas))
            saliency = exp / exp.sum()
            gains = []
            for i in positions:
                cands = transformation.candidates(atext, i)
                if not cands:
                    gains.append(0.0)
                    continue
                scores = run.scores([atext.apply_edit(e).text for e in cands])
                gains.append(max(s - base for s in scores))
            importance = {i: float(saliency[k] * gains[k]) for k, i in enumerate(positions)}
    elif ranking is Ranking.DEL:
        base = run.scores([atext.text])[0]
        probes = [atext.text_without_word(i) for i in positions]
        importance = {i: s - base for i, s in zip(positions, run.scores(probes))}
    else:
        raise ValueError(f"unknown ranking {ranking}")
    return sorted(positions, key=lambda i: (-importance[i], i))


class NullTransformation(Transformation):
    kind = "null"

    def candidates(self, atext: AttackedText, index: int) -> list[WordEdit]:
        return []


def greedy_wir_attack(
    state: GoalState,
    goal: GoalFunction,
    transformation: Transformation,
    constraints: list[Constraint],
    ranking: Ranking,
    oracle: VictimOracle,
    budget: int,
    stopwords: frozenset[str],
) -> AttackResult:
    """Visit positions in importance order; keep the best admissible edit at
    each only if it strictly improves the score; succeed the moment the goal
    predicate fires on an admissible candidate."""
    run = _Run(state, goal, transformation, constraints, oracle, budget, stopwords)
    current = run.seed
    current_score = run.base_score
    edits: list[WordEdit] = []
    try:
        order = rank_words(ranking, run.seed, state, goal, oracle, transformation,
                           stopwords, budget)
    except _BudgetExhausted:
        return run.result(AttackStatus.FAILED_BUDGET, current, edits, current_score)

    for position in order:
        if len(edits) >= run.cap:
            break
        candidates = run.admissible_edits(current, position)
        if not candidates:
            continue
        results, truncated = run.evaluate(candidates)
        winners = [(r, candidates[k]) for k, r in enumerate(results) if r.succeeded]
        if winners:
            best, (edit, cand) = max(winners, key=lambda pair: pair[0].score)
            return run.result(AttackStatus.SUCCESS, cand, edits + [edit], best.score)
        if truncated:
            return run.result(AttackStatus.FAILED_BUDGET, current, edits, current_score)
        best_k = max(range(len(results)), key=lambda k: results[k].score)
        if results[best_k].score > current_score:
            edit, cand = candidates[best_k]
            current, current_score = cand, results[best_k].score
            edits.append(edit)
    return run.result(AttackStatus.FAILED_EXHAUSTED, current, edits, current_score)


def beam_attack(
    state: GoalState,
    goal: GoalFunction,
    transformation: Transformation,
    constraints: list[Constraint],
    width: int,
    oracle: VictimOracle,
    budget: int,
    stopwords: frozenset[str],
) -> AttackResult:
    """Keep the ``width`` best-scoring admissible variants per depth; depth is
    capped by the perturbation-ratio constraint."""
    run = _Run(state, goal, transformation, constraints, oracle, budget, stopwords)
    beam: list[tuple[AttackedText, float, list[WordEdit]]] = [
        (run.seed, run.base_score, [])
    ]
    best_text, best_score, best_edits = run.seed, run.base_score, []
    for _ in range(run.cap):
        expansions: list[tuple[WordEdit, AttackedText, list[WordEdit]]] = []
        seen: set[str] = set()
        for member, _, member_edits in beam:
            for position in run.attackable_positions(member):
                if position in member.modified_indices:
                    continue
                for edit, cand in run.admissible_edits(member, position):
                    if cand.text in seen:
                        continue
                    seen.add(cand.text)
                    expansions.append((edit, cand, member_edits + [edit]))
        if not expansions:
            return run.result(AttackStatus.FAILED_EXHAUSTED, best_text, best_edits, best_score)
        results, truncated = run.evaluate([(e, c) for e, c, _ in expansions])
        winners = [(r, expansions[k]) for k, r in enumerate(results) if r.succeeded]
        if winners:
            best, (edit, cand, trail) = max(winners, key=lambda pair: pair[0].score)
            return run.result(AttackStatus.SUCCESS, cand, trail, best.score)
        if truncated:
            return run.result(AttackStatus.FAILED_BUDGET, best_text, best_edits, best_score)
        order = sorted(range(len(results)), key=lambda k: -results[k].score)
        beam = [(expansions[k][1], results[k].score, expansions[k][2])
                for k in order[:width]]
        if beam and beam[0][1] > best_score:
            best_text, best_score, best_edits = beam[0][0], beam[0][1], beam[0][2]
    return run.result(AttackStatus.FAILED_EXHAUSTED, best_text, best_edits, best_score)


def genetic_attack(
    state: GoalState,
    goal: GoalFunction,
    transformation: Transformation,
    constraints: list[Constraint],
    population: int,
    generations: int,
    mutation_rate: float,
    oracle: VictimOracle,
    budget: int,
    stopwords: frozenset[str],
    rng: random.Random,
) -> AttackResult:
    """Population search: fitness is the goal score, single-point crossover on
    edit sets, mutation applies one random admissible edit, elitism of one.
    Fully deterministic under the supplied rng."""
    run = _Run(state, goal, transformation, constraints, oracle, budget, stopwords)

    def random_edit(base: AttackedText) -> tuple[AttackedText, WordEdit] | None:
        positions = [p for p in run.attackable_positions(base)
                     if p not in base.modified_indices]
        if not positions or len(base.modified_indices) >= run.cap:
            return None
        for _ in range(8):
            position = rng.choice(positions)
            cands = transformation.candidates(base, position)
            if not cands:
                continue
            edit = rng.choice(cands)
            cand = base.apply_edit(edit)
            if check_all(constraints, run.seed, cand, edit).ok:
                return cand, edit
        return None

    def rebuild(edit_map: dict[int, WordEdit]) -> tuple[AttackedText, list[WordEdit]]:
        current, kept = run.seed, []
        for position in sorted(edit_map):
            if len(kept) >= run.cap:
                break
            edit = edit_map[position]
            if current.words[edit.index] != edit.original:
                continue
            cand = current.apply_edit(edit)
            if check_all(constraints, run.seed, cand, edit).ok:
                current, kept = cand, kept + [edit]
        return current, kept

    individuals: list[tuple[AttackedText, list[WordEdit]]] = []
    for _ in range(population):
        drawn = random_edit(run.seed)
        individuals.append((run.seed, []) if drawn is None else (drawn[0], [drawn[1]]))

    best_text, best_score, best_edits = run.seed, run.base_score, []
    for generation in range(generations + 1):
        results, truncated = run.evaluate([(None, text) for text, _ in individuals])
        winners = [(r, individuals[k]) for k, r in enumerate(results) if r.succeeded]
        if winners:
            best, (text, trail) = max(winners, key=lambda pair: pair[0].score)
            return run.result(AttackStatus.SUCCESS, text, trail, best.score)
        fitness = [r.score for r in results]
        if fitness:
            top = max(range(len(fitness)), key=lambda k: fitness[k])
            if fitness[top] > best_score:
                best_text, best_edits = individuals[top]
                best_score = fitness[top]
        if truncated:
            return run.result(AttackStatus.FAILED_BUDGET, best_text, best_edits, best_score)
        if generation == generations:
            break

        def tournament() -> int:
            a, b = rng.randrange(len(individuals)), rng.randrange(len(individuals))
            return a if fitness[a] >= fitness[b] else b

        elite = max(range(len(individuals)), key=lambda k: fitness[k])
        next_pop = [individuals[elite]]
        while len(next_pop) < population:
            p1 = individuals[tournament()][1]
            p2 = individuals[tournament()][1]
            merged = {e.index: e for e in p1}
            merged_b = {e.index: e for e in p2}
            pivot_pool = sorted(set(merged) | set(merged_b))
            if pivot_pool:
                pivot = rng.choice(pivot_pool)
                edit_map = {p: e for p, e in merged.items() if p < pivot}
                edit_map.update({p: e for p, e in merged_b.items() if p >= pivot})
            else:
                edit_map = {}
            child, kept = rebuild(edit_map)
            if rng.random() < mutation_rate:
                drawn = random_edit(child)
                if drawn is not None:
                    child, extra = drawn
                    kept = kept + [extra]
            next_pop.append((child, kept))
        individuals = next_pop
    return run.result(AttackStatus.FAILED_EXHAUSTED, best_text, best_edits, best_score)
