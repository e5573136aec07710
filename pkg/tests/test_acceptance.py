"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
report. Every tolerance is pinned here; nothing is deferred to calibration.
"""

import itertools
import json
import random
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from attack_harness import brute_force_unk_ranking, make_instance, make_prob_fn

from advtox.advtrain import AdvTrainConfig, adversarial_train
from advtox.constraints import check_all
from advtox.datasets import Dataset, infer_task, load_dataset, load_results, \
    save_results
from advtox.goals import BenignArgmaxGoal, BenignMultilabelGoal, GoalState, \
    GoalStatus, init_goal
from advtox.metrics import roc_auc
from advtox.recipes import builtin_recipe
from advtox.resources import ResourceBundle, default_data_dir
from advtox.runner import run_attacks
from advtox.search import AttackStatus, Ranking, rank_words
from advtox.text import AttackedText, levenshtein
from advtox.victims import TaskKind, TaskType, TrainConfig, train_surrogate

DATA = default_data_dir()

ADAPTED_RECIPES = ["a2t-toxic", "textfooler-toxic", "pwws-toxic",
                   "deepwordbug-toxic", "textbugger-toxic"]


def report(name: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    line = f"ACCEPTANCE {name}: {status}"
    if detail:
        line += f"  [{detail}]"
    print(line, file=sys.stderr)
    assert ok, line


@pytest.fixture(scope="module")
def fixture_setup():
    resources = ResourceBundle.load()
    task = infer_task(DATA / "corpus_multiclass.csv", "csv", "multiclass")
    corpus = load_dataset(DATA / "corpus_multiclass.csv", "csv", task)
    seeds = load_dataset(DATA / "seeds_toxic_50.csv", "csv", task)
    model, _ = train_surrogate(
        [r.text for r in corpus.records], [r.label for r in corpus.records],
        task, TrainConfig(seed=42))
    return resources, task, corpus, seeds, model


class TestAcceptance:
    def test_search_oracle_equivalence(self):
        """GREEDY_WIR(UNK) ranking equals the brute-force UNK-delta ranking on
        200 random small instances, in under 5 seconds."""
        goal = BenignArgmaxGoal()
        start = time.monotonic()
        mismatches = 0
        for seed in range(200):
            atext, truth, oracle, t = make_instance(seed, max_words=4,
                                                    max_candidates=3)
            prob_fn = make_prob_fn(seed, atext.text)
            state = init_goal(atext, truth, oracle.fork())
            assert state.status is GoalStatus.SEARCHING
            got = rank_words(Ranking.UNK, atext, state, goal, oracle.fork(),
                             t, frozenset())
            expected = brute_force_unk_ranking(atext, prob_fn,
                                               atext.attackable_indices())
            if got != expected:
                mismatches += 1
        elapsed = time.monotonic() - start
        report("search-oracle-equivalence", mismatches == 0 and elapsed < 5.0,
               f"200 instances, {mismatches} mismatches, {elapsed:.2f}s")

    def test_goal_truth_table(self):
        """check_multilabel matches a directly coded goal predicate on all
        5^4 grid points (3 toxic labels, threshold 0.5); zero tolerance."""
        goal = BenignMultilabelGoal(0.5)
        task = TaskKind(TaskType.MULTILABEL, ("benign", "t1", "t2", "t3"))
        state = GoalState(seed=AttackedText.from_text("seed"),
                          seed_output=np.array([0.0, 1.0, 1.0, 1.0]),
                          task=task, truth=(0, 1, 1, 1),
                          status=GoalStatus.SEARCHING)
        grid = [0.0, 0.25, 0.5, 0.75, 1.0]
        disagreements = 0
        points = 0
        for row in itertools.product(grid, repeat=4):
            row = np.asarray(row)
            expected = row[0] >= 0.5 and all(row[t] < 0.5 for t in (1, 2, 3))
            if goal.check(state, row).succeeded != expected:
                disagreements += 1
            points += 1
        report("goal-truth-table", points == 625 and disagreements == 0,
               f"{points} grid points, {disagreements} disagreements")

    def test_constraint_audit(self, fixture_setup):
        """Every SUCCESS in the 50-seed golden run re-verifies post hoc:
        constraint chain admissible at every step and the goal predicate holds
        on the final output. Zero violations allowed."""
        resources, task, corpus, seeds, model = fixture_setup
        recipe = builtin_recipe("toxictrap-default", task, resources)
        results, _ = run_attacks(seeds, recipe, model, rng_seed=0)
        violations = 0
        successes = 0
        for result in results:
            if result.status is not AttackStatus.SUCCESS:
                continue
            successes += 1
            seed_text = AttackedText.from_text(result.record.text)
            current = seed_text
            ok = True
            for edit in result.edits:
                candidate = current.apply_edit(edit)
                if not check_all(recipe.constraints, seed_text, candidate,
                                 edit).ok:
                    ok = False
                    break
                current = candidate
            if ok:
                row = model.fork().predict_one(current.text)
                ok = int(np.argmax(row)) == 0 and current.text == result.final_text
            if not ok:
                violations += 1
        report("constraint-audit", successes > 0 and violations == 0,
               f"{successes} successes audited, {violations} violations")

    def test_metric_arithmetic(self, fixture_setup, tmp_path):
        """Reported ASR / avg-queries / avg-%-perturbed equal an independent
        fold over the persisted results file exactly; roc_auc matches the
        all-pairs oracle within 1e-12 on 100 random instances."""
        resources, task, corpus, seeds, model = fixture_setup
        recipe = builtin_recipe("toxictrap-default", task, resources)
        results, metrics = run_attacks(seeds, recipe, model, rng_seed=0)
        path = tmp_path / "results.jsonl"
        save_results(results, path)
        rows = load_results(path)
        attempted = [r for r in rows
                     if r["status"] not in ("skipped", "failed_transport")]
        successes = [r for r in attempted if r["status"] == "success"]
        fold_asr = len(successes) / len(attempted)
        fold_queries = sum(r["queries"] for r in attempted) / len(attempted)
        fold_pct = 100.0 * sum(r["perturbed_ratio"] for r in successes) / \
            len(successes)
        exact = (fold_asr == metrics.asr and fold_queries == metrics.avg_queries
                 and fold_pct == metrics.avg_perturb_pct)

        rng = random.Random(99)
        max_err = 0.0
        for _ in range(100):
            n = rng.randrange(2, 201)
            truths = [rng.randrange(2) for _ in range(n)]
            if sum(truths) in (0, n):
                truths[0] = 1 - truths[0]
            scores = [rng.randrange(0, 12) / 11.0 for _ in range(n)]
            got = roc_auc(scores, truths)
            pos = [s for s, t in zip(scores, truths) if t == 1]
            neg = [s for s, t in zip(scores, truths) if t == 0]
            pairs = sum(1.0 if p > q else 0.5 if p == q else 0.0
                        for p in pos for q in neg)
            expected = pairs / (len(pos) * len(neg))
            max_err = max(max_err, abs(got - expected))
        report("metric-arithmetic", exact and max_err < 1e-12,
               f"fold exact={exact}, roc max err={max_err:.2e}")

    def test_adversarial_training_directionality(self, fixture_setup):
        """SAT with the unk-ranked default attack cuts that attack's ASR by at
        least 20 points against the retrained surrogate, while held-out clean
        accuracy moves by at most 5 points; the whole cycle stays under 5
        minutes."""
        resources, task, corpus, seeds, model = fixture_setup
        start = time.monotonic()
        recipe = builtin_recipe("toxictrap-default", task, resources)
        robust, rep = adversarial_train(corpus, AdvTrainConfig(
            attacks=[recipe], mix_weight=1.0, per_attack_budget=200, rounds=1,
            seed=42, train=TrainConfig(seed=42)))
        _, base_metrics = run_attacks(seeds, recipe, model, rng_seed=0)
        _, robust_metrics = run_attacks(seeds, recipe, robust, rng_seed=0)
        elapsed = time.monotonic() - start
        asr_drop = base_metrics.asr - robust_metrics.asr
        accuracy_drop = rep.clean_accuracy_before - rep.clean_accuracy_after
        ok = asr_drop >= 0.20 and accuracy_drop <= 0.05 and elapsed < 300
        report("adversarial-training-directionality", ok,
               f"asr {base_metrics.asr:.2f}->{robust_metrics.asr:.2f} "
               f"(drop {asr_drop:.2f}), clean accuracy "
               f"{rep.clean_accuracy_before:.3f}->{rep.clean_accuracy_after:.3f}, "
               f"{elapsed:.0f}s")

    def test_eat_unseen_attack_directionality(self, fixture_setup):
        """Leave-one-out over the five adapted recipes: the EAT model's ASR
        under the held-out recipe never exceeds the base model's ASR."""
        resources, task, corpus, seeds, model = fixture_setup
        recipes = {name: builtin_recipe(name, task, resources)
                   for name in ADAPTED_RECIPES}
        base_asr = {}
        for name, recipe in recipes.items():
            _, metrics = run_attacks(seeds, recipe, model, rng_seed=0)
            base_asr[name] = metrics.asr
        rows = []
        ok = True
        for held_out in ADAPTED_RECIPES:
            ensemble = [recipes[n] for n in ADAPTED_RECIPES if n != held_out]
            eat_model, _ = adversarial_train(corpus, AdvTrainConfig(
                attacks=ensemble, mix_weight=1.0, per_attack_budget=60,
                rounds=1, seed=42, train=TrainConfig(seed=42)))
            _, metrics = run_attacks(seeds, recipes[held_out], eat_model,
                                     rng_seed=0)
            rows.append(f"{held_out}: {metrics.asr:.2f}<={base_asr[held_out]:.2f}")
            if metrics.asr > base_asr[held_out]:
                ok = False
        report("eat-unseen-directionality", ok, "; ".join(rows))

    def test_pipeline_determinism(self, tmp_path):
        """Two CLI runs of the fixture pipeline (train, attack, advtrain,
        eval) with identical seeds produce byte-identical metrics files."""
        def pipeline(root: Path) -> list[Path]:
            def cli(*args):
                proc = subprocess.run([sys.executable, "-m", "advtox.cli",
                                       *args], capture_output=True, text=True)
                assert proc.returncode == 0, proc.stderr
            cli("train", "--task", "multiclass",
                "--dataset", str(DATA / "corpus_multiclass.csv"),
                "--out", str(root / "train"), "--seed", "42")
            cli("attack", "--dataset", str(DATA / "seeds_toxic_50.csv"),
                "--recipe", "toxictrap-default",
                "--model", str(root / "train" / "model.json"),
                "--out", str(root / "attack"), "--seed", "0")
            cli("advtrain", "--task", "multiclass",
                "--dataset", str(DATA / "corpus_multiclass.csv"),
                "--attacks", "toxictrap-default",
                "--out", str(root / "advtrain"), "--seed", "42",
                "--budget", "60")
            cli("eval", "--dataset", str(DATA / "seeds_toxic_50.csv"),
                "--model", str(root / "advtrain" / "robust_model.json"),
                "--recipes", "toxictrap-default,pwws-toxic",
                "--out", str(root / "eval"), "--seed", "0")
            return [root / "train" / "train_metrics.json",
                    root / "attack" / "metrics.json",
                    root / "attack" / "results.jsonl",
                    root / "advtrain" / "advtrain_report.json",
                    root / "eval" / "robustness_table.json"]

        first = pipeline(tmp_path / "run1")
        second = pipeline(tmp_path / "run2")
        mismatched = [a.name for a, b in zip(first, second)
                      if a.read_bytes() != b.read_bytes()]
        report("pipeline-determinism", not mismatched,
               f"{len(first)} artifacts compared" +
               (f", mismatched: {mismatched}" if mismatched else ""))

    def test_levenshtein_property_suite(self):
        """Agreement with an independent DP oracle on 10,000 random pairs
        (length <= 20) plus the triangle inequality on 1,000 triples."""
        def oracle(a: str, b: str) -> int:
            m, n = len(a), len(b)
            table = [[0] * (n + 1) for _ in range(m + 1)]
            for i in range(m + 1):
                table[i][0] = i
            for j in range(n + 1):
                table[0][j] = j
            for i in range(1, m + 1):
                for j in range(1, n + 1):
                    table[i][j] = min(table[i - 1][j] + 1, table[i][j - 1] + 1,
                                      table[i - 1][j - 1] + (a[i - 1] != b[j - 1]))
            return table[m][n]

        rng = random.Random(123)
        alphabet = "abcdefgh"
        mism = 0
        for _ in range(10_000):
            a = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 21)))
            b = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 21)))
            if levenshtein(a, b) != oracle(a, b):
                mism += 1
        triangle_violations = 0
        for _ in range(1_000):
            a, b, c = ("".join(rng.choice(alphabet)
                               for _ in range(rng.randrange(0, 21)))
                       for _ in range(3))
            if levenshtein(a, c) > levenshtein(a, b) + levenshtein(b, c):
                triangle_violations += 1
        report("levenshtein-property-suite",
               mism == 0 and triangle_violations == 0,
               f"10000 pairs ({mism} mismatches), "
               f"1000 triples ({triangle_violations} violations)")
