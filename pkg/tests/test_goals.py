import itertools

import numpy as np
import pytest

from advtox.goals import (
    BenignArgmaxGoal,
    BenignMultilabelGoal,
    GoalState,
    GoalStatus,
    goal_for_task,
    init_goal,
)
from advtox.text import AttackedText
from advtox.victims import CallableOracle, TaskKind, TaskType

MC3 = TaskKind(TaskType.MULTICLASS, ("benign", "offensive", "hate"))
ML = TaskKind(TaskType.MULTILABEL, ("benign", "t1", "t2", "t3"))


def fixed_oracle(task, row_map, default):
    def fn(texts):
        return np.stack([np.asarray(row_map.get(t, default), dtype=float)
                         for t in texts])
    return CallableOracle(task, fn)


def searching_state(task, seed_row):
    return GoalState(seed=AttackedText.from_text("seed text"),
                     seed_output=np.asarray(seed_row, dtype=float),
                     task=task, truth=1, status=GoalStatus.SEARCHING)


class TestInitGoal:
    def test_correct_toxic_seed_searches(self):
        oracle = fixed_oracle(MC3, {}, [0.1, 0.8, 0.1])
        state = init_goal(AttackedText.from_text("you are stupid"), 1, oracle)
        assert state.status is GoalStatus.SEARCHING
        assert np.allclose(state.seed_output, [0.1, 0.8, 0.1])

    def test_mispredicted_seed_skipped(self):
        oracle = fixed_oracle(MC3, {}, [0.8, 0.1, 0.1])
        state = init_goal(AttackedText.from_text("you are stupid"), 1, oracle)
        assert state.status is GoalStatus.SKIPPED

    def test_benign_seed_skipped(self):
        oracle = fixed_oracle(MC3, {}, [0.8, 0.1, 0.1])
        state = init_goal(AttackedText.from_text("lovely day"), 0, oracle)
        assert state.status is GoalStatus.SKIPPED

    def test_wrong_toxic_class_skipped(self):
        oracle = fixed_oracle(MC3, {}, [0.1, 0.8, 0.1])
        state = init_goal(AttackedText.from_text("hateful thing"), 2, oracle)
        assert state.status is GoalStatus.SKIPPED

    def test_multilabel_exact_set_match_required(self):
        oracle = fixed_oracle(ML, {}, [0.1, 0.9, 0.6, 0.1])
        ok = init_goal(AttackedText.from_text("x"), (0, 1, 1, 0), oracle)
        assert ok.status is GoalStatus.SEARCHING
        wrong = init_goal(AttackedText.from_text("x"), (0, 1, 0, 0), oracle)
        assert wrong.status is GoalStatus.SKIPPED

    def test_multilabel_benign_gate(self):
        # predicted set matches the truth set but benign already >= tau
        oracle = fixed_oracle(ML, {}, [0.6, 0.9, 0.1, 0.1])
        state = init_goal(AttackedText.from_text("x"), (0, 1, 0, 0), oracle)
        assert state.status is GoalStatus.SKIPPED

    def test_multilabel_benign_truth_skipped(self):
        oracle = fixed_oracle(ML, {}, [0.9, 0.1, 0.1, 0.1])
        state = init_goal(AttackedText.from_text("x"), (1, 0, 0, 0), oracle)
        assert state.status is GoalStatus.SKIPPED


class TestBenignArgmaxGoal:
    def test_success_and_score(self):
        goal = BenignArgmaxGoal()
        state = searching_state(MC3, [0.1, 0.1, 0.8])
        result = goal.check(state, np.array([0.6, 0.3, 0.1]))
        assert result.succeeded
        assert result.score == pytest.approx(0.6)

    def test_not_succeeded(self):
        goal = BenignArgmaxGoal()
        state = searching_state(MC3, [0.1, 0.1, 0.8])
        result = goal.check(state, np.array([0.4, 0.5, 0.1]))
        assert not result.succeeded
        assert result.score == pytest.approx(0.4)

    def test_tie_goes_to_benign(self):
        goal = BenignArgmaxGoal()
        state = searching_state(MC3, [0.0, 1.0, 0.0])
        result = goal.check(state, np.array([0.5, 0.5, 0.0]))
        assert result.succeeded

    def test_rescaling_invariance(self):
        goal = BenignArgmaxGoal()
        state = searching_state(MC3, [0.1, 0.8, 0.1])
        rng = np.random.default_rng(2)
        for _ in range(100):
            row = rng.random(3)
            row = row / row.sum()
            scale = rng.uniform(0.1, 10.0)
            rescaled = row * scale
            rescaled = rescaled / rescaled.sum()
            assert goal.check(state, row).succeeded == \
                goal.check(state, rescaled).succeeded


class TestBenignMultilabelGoal:
    def test_spec_examples(self):
        goal = BenignMultilabelGoal(0.5)
        task = TaskKind(TaskType.MULTILABEL, ("benign",) + tuple("abcde"))
        state = searching_state(task, [0.0, 1, 1, 1, 1, 1])
        ok = goal.check(state, np.array([0.9, 0.1, 0.2, 0.3, 0.05, 0.4]))
        assert ok.succeeded and ok.score == pytest.approx(0.5)
        partial = goal.check(state, np.array([0.9, 0.1, 0.2, 0.3, 0.05, 0.6]))
        assert not partial.succeeded and partial.score == pytest.approx(0.3)
        low_benign = goal.check(state, np.array([0.4, 0.1, 0.2, 0.3, 0.05, 0.4]))
        assert not low_benign.succeeded

    def test_truth_table_against_direct_predicate(self):
        # L = 3 toxic labels; all probability rows on the 0/0.25/0.5/0.75/1 grid
        goal = BenignMultilabelGoal(0.5)
        task = TaskKind(TaskType.MULTILABEL, ("benign", "t1", "t2", "t3"))
        state = searching_state(task, [0.0, 1, 1, 1])
        grid = [0.0, 0.25, 0.5, 0.75, 1.0]
        count = 0
        for row in itertools.product(grid, repeat=4):
            row = np.asarray(row)
            # direct coding of the goal equation: predicted benign AND no
            # toxic label predicted
            expected = (row[0] >= 0.5) and all(row[t] < 0.5 for t in (1, 2, 3))
            assert goal.check(state, row).succeeded == expected
            count += 1
        assert count == 5 ** 4

    def test_score_monotonicity(self):
        goal = BenignMultilabelGoal(0.5)
        task = TaskKind(TaskType.MULTILABEL, ("benign", "t1", "t2"))
        state = searching_state(task, [0.0, 1, 1])
        toxics = np.array([0.3, 0.6])
        benigns = np.linspace(0, 1, 21)
        scores = [goal.check(state, np.array([b, *toxics])).score for b in benigns]
        assert all(b2 > b1 for b1, b2 in zip(scores, scores[1:]))
        # non-increasing in each toxic prob
        for t_index in (1, 2):
            prev = None
            for t_val in np.linspace(0, 1, 21):
                row = np.array([0.7, 0.2, 0.2])
                row[t_index] = t_val
                score = goal.check(state, row).score
                if prev is not None:
                    assert score <= prev + 1e-12
                prev = score


def test_goal_for_task():
    assert isinstance(goal_for_task(MC3), BenignArgmaxGoal)
    assert isinstance(goal_for_task(ML), BenignMultilabelGoal)
