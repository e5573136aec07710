"""Goal functions: success predicates and the scalar heuristic scores that
steer the search toward benign predictions.

Binary/multiclass success means the candidate's argmax lands on the benign
label (index 0) for a seed that was predicted toxic. Multilabel success means
the benign probability clears the decision threshold while every toxic label
falls below it, simultaneously.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .text import AttackedText
from .victims import MULTILABEL_THRESHOLD, TaskKind, TaskType, VictimOracle, decide_labels


class GoalStatus(Enum):
    SUCCEEDED = "succeeded"
    SEARCHING = "searching"
    SKIPPED = "skipped"


@dataclass(frozen=True)
class GoalResult:
    succeeded: bool
    score: float
    output: np.ndarray


@dataclass(frozen=True)
class GoalState:
    """Per-seed attack state. Only seeds whose prediction is both correct and
    toxic enter SEARCHING; everything else is SKIPPED up front."""

    seed: AttackedText
    seed_output: np.ndarray
    task: TaskKind
    truth: int | tuple[int, ...]
    status: GoalStatus


class GoalFunction:
    """Success predicate + heuristic score for one task shape."""

    name: str = ""

    def check(self, state: GoalState, output_row: np.ndarray) -> GoalResult:
        raise NotImplementedError


class BenignArgmaxGoal(GoalFunction):
    """Binary/multiclass: fooled iff argmax is the benign index; the score is
    the benign probability itself. Argmax ties resolve to the lowest index,
    so an exact tie with benign counts as success."""

    name = "benign_argmax"

    def check(self, state: GoalState, output_row: np.ndarray) -> GoalResult:
        succeeded = int(np.argmax(output_row)) == state.task.benign_index
        return GoalResult(succeeded=succeeded, score=float(output_row[0]), output=output_row)


class BenignMultilabelGoal(GoalFunction):
    """Multilabel: fooled iff benign >= tau and every toxic label < tau.

    The heuristic score is the margin ``P_benign - max_t P_toxic``: maximal
    exactly when the predicate is most satisfied, strictly increasing in the
    benign probability and non-increasing in every toxic one.
    """

    name = "benign_multilabel"

    def __init__(self, threshold: float = MULTILABEL_THRESHOLD):
        self.threshold = threshold

    def check(self, state: GoalState, output_row: np.ndarray) -> GoalResult:
        benign = float(output_row[0])
        toxics = output_row[1:]
        succeeded = benign >= self.threshold and bool(np.all(toxics < self.threshold))
        score = benign - float(np.max(toxics)) if len(toxics) else benign
        return GoalResult(succeeded=succeeded, score=score, output=output_row)


def goal_for_task(task: TaskKind, threshold: float = MULTILABEL_THRESHOLD) -> GoalFunction:
    if task.task == TaskType.MULTILABEL:
        return BenignMultilabelGoal(threshold)
    return BenignArgmaxGoal()


def init_goal(
    seed: AttackedText,
    truth: int | tuple[int, ...],
    oracle: VictimOracle,
    threshold: float = MULTILABEL_THRESHOLD,
) -> GoalState:
    """Build the per-seed state, skipping seeds the victim already gets wrong
    or already calls benign (attacking those is meaningless)."""
    row = oracle.predict_one(seed.text)
    task = oracle.task
    skip = False
    if task.task == TaskType.MULTILABEL:
        truth_vec = tuple(int(v) for v in truth)  # aligned with label_names
        truth_set = frozenset(i for i, v in enumerate(truth_vec) if v)
        predicted = decide_labels(task, row)
        if truth_vec[0] == 1 or not (truth_set - {0}):
            skip = True  # seed itself is benign
        elif predicted != truth_set:
            skip = True
        elif row[0] >= threshold:
            skip = True  # already sneaking past the benign gate
        normalized_truth: int | tuple[int, ...] = truth_vec
    else:
        label = int(truth)
        predicted = decide_labels(task, row)
        if label == task.benign_index:
            skip = True
        elif predicted != label:
            skip = True
        normalized_truth = label
    return GoalState(
        seed=seed,
        seed_output=row,
        task=task,
        truth=normalized_truth,
        status=GoalStatus.SKIPPED if skip else GoalStatus.SEARCHING,
    )
