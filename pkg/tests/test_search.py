import random
import time

import numpy as np
import pytest

from attack_harness import (
    MC,
    TableTransformation,
    brute_force_del_ranking,
    brute_force_unk_ranking,
    brute_force_ws_ranking,
    exhaustive_success_exists,
    hill_climb_oracle,
    make_instance,
    make_prob_fn,
)

from advtox.constraints import MaxPerturbRatio
from advtox.goals import BenignArgmaxGoal, GoalStatus, init_goal
from advtox.search import (
    AttackStatus,
    Ranking,
    beam_attack,
    genetic_attack,
    greedy_wir_attack,
    rank_words,
)
from advtox.text import AttackedText
from advtox.victims import CallableOracle

GOAL = BenignArgmaxGoal()
NO_STOP = frozenset()


def flip_on_any_edit_oracle(seed_text):
    """Predicts the seed toxic and anything else benign."""
    def fn(texts):
        return np.stack([
            np.array([0.1, 0.8, 0.1]) if t == seed_text else np.array([0.9, 0.05, 0.05])
            for t in texts
        ])
    return CallableOracle(MC, fn)


def static_oracle():
    def fn(texts):
        return np.tile([0.1, 0.8, 0.1], (len(texts), 1))
    return CallableOracle(MC, fn)


def searching_state(atext, oracle):
    state = init_goal(atext, 1, oracle)
    assert state.status is GoalStatus.SEARCHING
    return state


class TestRankWords:
    def test_single_word(self):
        atext, truth, oracle, t = make_instance(1, max_words=1)
        state = searching_state(atext, oracle)
        assert rank_words(Ranking.UNK, atext, state, GOAL, oracle, t, NO_STOP) == [0]

    def test_equal_deltas_positional_order(self):
        atext = AttackedText.from_text("aa bb cc dd")
        oracle = static_oracle()
        state = searching_state(atext, oracle)
        order = rank_words(Ranking.UNK, atext, state, GOAL, oracle,
                           TableTransformation({}), NO_STOP)
        assert order == [0, 1, 2, 3]

    @pytest.mark.parametrize("ranking,oracle_fn", [
        (Ranking.UNK, brute_force_unk_ranking),
        (Ranking.DEL, brute_force_del_ranking),
    ])
    def test_matches_brute_force(self, ranking, oracle_fn):
        for seed in range(40):
            atext, truth, oracle, t = make_instance(seed)
            prob_fn = make_prob_fn(seed, atext.text)
            state = searching_state(atext, oracle.fork())
            got = rank_words(ranking, atext, state, GOAL, oracle.fork(), t, NO_STOP)
            expected = oracle_fn(atext, prob_fn, atext.attackable_indices())
            assert got == expected, f"instance {seed}"

    def test_ws_matches_brute_force(self):
        for seed in range(30):
            atext, truth, oracle, t = make_instance(seed)
            prob_fn = make_prob_fn(seed, atext.text)
            state = searching_state(atext, oracle.fork())
            got = rank_words(Ranking.WS, atext, state, GOAL, oracle.fork(), t, NO_STOP)
            expected = brute_force_ws_ranking(atext, prob_fn,
                                              atext.attackable_indices(), t)
            assert got == expected, f"instance {seed}"

    def test_grad_ranking_uses_oracle_scores(self, base_model):
        atext = AttackedText.from_text("look you are a stupid person honestly")
        state = init_goal(atext, base_model.task.label_names.index("offensive"),
                          base_model.fork())
        assert state.status is GoalStatus.SEARCHING
        order = rank_words(Ranking.GRAD, atext, state, GOAL, base_model.fork(),
                           TableTransformation({}), frozenset({"you", "are", "a"}))
        scores = base_model.gradient_word_scores(atext)
        positions = [i for i in atext.attackable_indices()
                     if atext.words[i] not in {"you", "are", "a"}]
        expected = sorted(positions, key=lambda i: (-scores[i], i))
        assert order == expected

    def test_grad_without_capability_errors(self):
        atext, truth, oracle, t = make_instance(5)
        state = searching_state(atext, oracle)
        from advtox.errors import CapabilityError

        with pytest.raises(CapabilityError):
            rank_words(Ranking.GRAD, atext, state, GOAL, oracle, t, NO_STOP)


class TestGreedy:
    def test_flip_mock_succeeds_with_one_edit(self):
        atext = AttackedText.from_text("one two three")
        oracle = flip_on_any_edit_oracle(atext.text)
        state = searching_state(atext, oracle)
        result = greedy_wir_attack(state, GOAL, TableTransformation(
            {0: ["uno"], 1: ["dos"], 2: ["tres"]}), [], Ranking.UNK, oracle,
            2000, NO_STOP)
        assert result.status is AttackStatus.SUCCESS
        assert len(result.edits) == 1
        assert result.queries == oracle.ledger.queries

    def test_static_mock_exhausts_without_edits(self):
        atext = AttackedText.from_text("one two three")
        oracle = static_oracle()
        state = searching_state(atext, oracle)
        result = greedy_wir_attack(state, GOAL, TableTransformation(
            {0: ["uno"], 1: ["dos"]}), [], Ranking.UNK, oracle, 2000, NO_STOP)
        assert result.status is AttackStatus.FAILED_EXHAUSTED
        assert result.edits == []

    def test_budget_never_exceeded(self):
        for budget in (1, 2, 3, 5, 8):
            atext, truth, oracle, t = make_instance(11)
            state = init_goal(atext, truth, oracle)
            if state.status is not GoalStatus.SEARCHING:
                continue
            result = greedy_wir_attack(state, GOAL, t, [], Ranking.UNK,
                                       oracle, budget, NO_STOP)
            assert oracle.ledger.queries <= budget
            assert result.queries <= budget

    def test_budget_precondition(self):
        atext, truth, oracle, t = make_instance(3)
        state = searching_state(atext, oracle)
        with pytest.raises(ValueError):
            greedy_wir_attack(state, GOAL, t, [], Ranking.UNK, oracle, 0, NO_STOP)

    def test_never_revisits_and_respects_cap(self):
        for seed in range(25):
            atext, truth, oracle, t = make_instance(seed, max_words=4)
            state = init_goal(atext, truth, oracle)
            if state.status is not GoalStatus.SEARCHING:
                continue
            constraints = [MaxPerturbRatio(0.5)]
            result = greedy_wir_attack(state, GOAL, t, constraints, Ranking.UNK,
                                       oracle, 10 ** 6, NO_STOP)
            positions = [e.index for e in result.edits]
            assert len(positions) == len(set(positions))
            assert len(result.edits) <= MaxPerturbRatio(0.5).cap(atext)

    def test_success_goal_holds_on_final(self):
        wins = 0
        for seed in range(60):
            atext, truth, oracle, t = make_instance(seed)
            state = init_goal(atext, truth, oracle)
            if state.status is not GoalStatus.SEARCHING:
                continue
            result = greedy_wir_attack(state, GOAL, t, [], Ranking.UNK,
                                       oracle, 10 ** 6, NO_STOP)
            if result.status is AttackStatus.SUCCESS:
                wins += 1
                row = oracle.fork().predict_one(result.final.text)
                assert int(np.argmax(row)) == 0
        assert wins > 5  # the synthetic family is attackable often enough


class TestBeam:
    def test_flip_mock_depth_one(self):
        atext = AttackedText.from_text("one two three")
        oracle = flip_on_any_edit_oracle(atext.text)
        state = searching_state(atext, oracle)
        result = beam_attack(state, GOAL, TableTransformation({1: ["dos"]}),
                             [], 4, oracle, 2000, NO_STOP)
        assert result.status is AttackStatus.SUCCESS
        assert len(result.edits) == 1

    def test_width_one_equals_hill_climb_oracle(self):
        agreements = 0
        for seed in range(40):
            atext, truth, oracle, t = make_instance(seed, max_words=3)
            constraints = [MaxPerturbRatio(1.0)]
            state = init_goal(atext, truth, oracle.fork())
            if state.status is not GoalStatus.SEARCHING:
                continue
            expected_status, expected_text = hill_climb_oracle(
                atext, truth, oracle, t, constraints)
            result = beam_attack(state, GOAL, t, constraints, 1,
                                 oracle.fork(), 10 ** 6, NO_STOP)
            got = ("success" if result.status is AttackStatus.SUCCESS else "failed")
            assert got == expected_status, f"instance {seed}"
            if got == "success":
                assert result.final.text == expected_text, f"instance {seed}"
            agreements += 1
        assert agreements >= 20

    def test_wide_beam_is_depth_one_breadth_first(self):
        # width >= number of admissible single edits: success iff some single
        # edit already satisfies the goal
        for seed in range(20):
            atext, truth, oracle, t = make_instance(seed, max_words=3)
            state = init_goal(atext, truth, oracle.fork())
            if state.status is not GoalStatus.SEARCHING:
                continue
            probe = oracle.fork()
            single_success = False
            for i in atext.attackable_indices():
                for e in t.candidates(atext, i):
                    row = probe.predict_one(atext.apply_edit(e).text)
                    if int(np.argmax(row)) == 0:
                        single_success = True
            result = beam_attack(state, GOAL, t, [MaxPerturbRatio(0.26)], 999,
                                 oracle.fork(), 10 ** 6, NO_STOP)
            # cap 1 edit: beam can only do depth 1
            assert (result.status is AttackStatus.SUCCESS) == single_success

    def test_budget(self):
        atext, truth, oracle, t = make_instance(17)
        state = searching_state(atext, oracle)
        result = beam_attack(state, GOAL, t, [], 4, oracle, 3, NO_STOP)
        assert oracle.ledger.queries <= 3
        assert result.status in (AttackStatus.FAILED_BUDGET, AttackStatus.SUCCESS)


class TestGenetic:
    def test_deterministic_under_seed(self):
        for seed in (3, 9, 21):
            atext, truth, oracle, t = make_instance(seed)
            results = []
            for _ in range(2):
                state = init_goal(atext, truth, oracle.fork())
                if state.status is not GoalStatus.SEARCHING:
                    break
                rng = random.Random(12345)
                results.append(genetic_attack(
                    state, GOAL, t, [], 6, 4, 0.3, oracle.fork(), 10 ** 6,
                    NO_STOP, rng))
            if len(results) == 2:
                a, b = results
                assert a.status == b.status
                assert a.final.text == b.final.text
                assert a.queries == b.queries

    def test_generations_zero_evaluates_initial_population(self):
        atext = AttackedText.from_text("one two three")
        oracle = flip_on_any_edit_oracle(atext.text)
        state = searching_state(atext, oracle)
        result = genetic_attack(state, GOAL, TableTransformation(
            {0: ["uno"], 1: ["dos"]}), [], 4, 0, 0.5, oracle, 2000, NO_STOP,
            random.Random(0))
        assert result.status is AttackStatus.SUCCESS  # flip mock: gen 0 win

    def test_flip_mock_succeeds_by_generation_one(self):
        atext = AttackedText.from_text("one two three four")
        oracle = flip_on_any_edit_oracle(atext.text)
        state = searching_state(atext, oracle)
        result = genetic_attack(state, GOAL, TableTransformation(
            {i: [f"r{i}"] for i in range(4)}), [], 6, 1, 0.4, oracle, 2000,
            NO_STOP, random.Random(7))
        assert result.status is AttackStatus.SUCCESS

    def test_static_oracle_fails(self):
        atext = AttackedText.from_text("one two three")
        oracle = static_oracle()
        state = searching_state(atext, oracle)
        result = genetic_attack(state, GOAL, TableTransformation(
            {0: ["uno"]}), [], 4, 2, 0.3, oracle, 2000, NO_STOP, random.Random(1))
        assert result.status is AttackStatus.FAILED_EXHAUSTED

    def test_population_validated(self):
        from advtox.search import Genetic

        with pytest.raises(ValueError):
            Genetic(population=1)
        with pytest.raises(ValueError):
            Genetic(mutation_rate=0.0)


class TestSoundness:
    def test_no_strategy_succeeds_when_exhaustive_search_finds_nothing(self):
        checked = 0
        for seed in range(160, 220):
            atext, truth, oracle, t = make_instance(seed, max_words=4,
                                                    max_candidates=3)
            constraints = [MaxPerturbRatio(0.5)]
            attackable = exhaustive_success_exists(atext, truth, oracle.fork(),
                                                   t, constraints)
            if attackable:
                continue
            checked += 1
            state = init_goal(atext, truth, oracle.fork())
            if state.status is not GoalStatus.SEARCHING:
                continue
            g = greedy_wir_attack(state, GOAL, t, constraints, Ranking.UNK,
                                  oracle.fork(), 10 ** 6, NO_STOP)
            assert g.status is not AttackStatus.SUCCESS

            state = init_goal(atext, truth, oracle.fork())
            b = beam_attack(state, GOAL, t, constraints, 4, oracle.fork(),
                            10 ** 6, NO_STOP)
            assert b.status is not AttackStatus.SUCCESS

            state = init_goal(atext, truth, oracle.fork())
            ga = genetic_attack(state, GOAL, t, constraints, 6, 3, 0.3,
                                oracle.fork(), 10 ** 6, NO_STOP, random.Random(2))
            assert ga.status is not AttackStatus.SUCCESS
        assert checked >= 5


class TestSearchOracleEquivalence:
    def test_unk_ranking_equals_brute_force_on_200_instances(self):
        start = time.monotonic()
        for seed in range(200):
            atext, truth, oracle, t = make_instance(seed, max_words=4,
                                                    max_candidates=3)
            prob_fn = make_prob_fn(seed, atext.text)
            state = init_goal(atext, truth, oracle.fork())
            assert state.status is GoalStatus.SEARCHING
            got = rank_words(Ranking.UNK, atext, state, GOAL, oracle.fork(),
                             t, NO_STOP)
            expected = brute_force_unk_ranking(atext, prob_fn,
                                               atext.attackable_indices())
            assert got == expected, f"instance {seed}"
        assert time.monotonic() - start < 5.0
