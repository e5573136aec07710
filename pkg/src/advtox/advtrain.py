"""Adversarial training for the built-in surrogate: SAT (one attack) and EAT
(an ensemble), plus robustness re-evaluation.

Each round attacks the current model over correctly-predicted toxic training
seeds, appends every successful adversarial text with its seed's original
labels, and retrains minimizing clean loss plus ``mix_weight`` times the
adversarial loss (realized as per-sample weights, which is equivalent for
this convex model).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datasets import Dataset
from .errors import ConfigError, DataError
from .recipes import AttackRecipe
from .runner import attack_seed
from .search import AttackStatus
from .victims import (
    MULTILABEL_THRESHOLD,
    SurrogateModel,
    TaskKind,
    TaskType,
    TrainConfig,
    VictimOracle,
    train_surrogate,
)


@dataclass
class AdvTrainConfig:
    attacks: list[AttackRecipe]
    mix_weight: float = 1.0
    per_attack_budget: int = 200
    rounds: int = 1
    seed: int = 0
    eval_fraction: float = 0.2
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if not self.attacks:
            raise ConfigError("adversarial training needs at least one attack")
        if self.mix_weight < 0:
            raise ConfigError("mix_weight must be non-negative")
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")

    @property
    def is_ensemble(self) -> bool:
        return len(self.attacks) > 1


@dataclass(frozen=True)
class AugmentedRecord:
    text: str
    label: int | tuple[int, ...]
    source_attack: str
    seed_index: int


@dataclass
class RoundReport:
    round: int
    added_per_attack: dict[str, int]
    total_adversarial: int
    clean_accuracy: float


@dataclass
class AdvTrainReport:
    attack_names: list[str]
    mode: str  # "sat" or "eat"
    mix_weight: float
    rounds: list[RoundReport]
    clean_accuracy_before: float
    clean_accuracy_after: float

    def to_dict(self) -> dict:
        return {
            "attack_names": self.attack_names,
            "mode": self.mode,
            "mix_weight": self.mix_weight,
            "clean_accuracy_before": self.clean_accuracy_before,
            "clean_accuracy_after": self.clean_accuracy_after,
            "rounds": [
                {"round": r.round, "added_per_attack": r.added_per_attack,
                 "total_adversarial": r.total_adversarial,
                 "clean_accuracy": r.clean_accuracy}
                for r in self.rounds
            ],
        }


def augment(
    dataset: Dataset,
    attacks: list[AttackRecipe],
    oracle: VictimOracle,
    per_attack_budget: int,
    rng_seed: int = 0,
) -> list[AugmentedRecord]:
    """Attack training seeds with each recipe until its budget of successful
    adversarial examples is met; labels are preserved from the seed."""
    augmented: list[AugmentedRecord] = []
    for recipe in attacks:
        if recipe.task_type != dataset.task.task:
            raise DataError(f"attack {recipe.name!r} targets {recipe.task_type.value}, "
                            f"dataset is {dataset.task.task.value}")
        wins = 0
        for index, record in enumerate(dataset.records):
            if wins >= per_attack_budget:
                break
            result = attack_seed(record, index, recipe, oracle, rng_seed)
            if result.status is AttackStatus.SUCCESS:
                wins += 1
                augmented.append(AugmentedRecord(
                    text=result.final_text, label=record.label,
                    source_attack=recipe.name, seed_index=index))
    return augmented


def _accuracy(model: SurrogateModel, texts: list[str], labels, task: TaskKind) -> float:
    probs = model.predict(texts).probs
    if task.task == TaskType.MULTILABEL:
        pred = (probs >= MULTILABEL_THRESHOLD).astype(int)
        truth = np.asarray(labels, dtype=int)
        return float(np.mean(np.all(pred == truth, axis=1)))
    pred = probs.argmax(axis=1)
    return float(np.mean(pred == np.asarray(labels, dtype=int)))


def adversarial_train(
    dataset: Dataset,
    config: AdvTrainConfig,
) -> tuple[SurrogateModel, AdvTrainReport]:
    """Generate-retrain loop. A held-out clean split (never attacked, never
    trained on) measures the prediction-performance guardrail before and
    after hardening. mix_weight 0 skips augmentation entirely, so the result
    is bitwise-identical to plain training."""
    if not dataset.records:
        raise DataError("training corpus is empty")
    task = dataset.task
    rng = np.random.default_rng(config.seed)
    perm = rng.permutation(len(dataset.records))
    n_eval = int(round(len(dataset.records) * config.eval_fraction))
    eval_idx, train_idx = perm[:n_eval], perm[n_eval:]
    if len(train_idx) == 0:
        raise DataError("no training records left after the eval split")
    train_records = [dataset.records[i] for i in train_idx]
    eval_records = [dataset.records[i] for i in eval_idx]
    train_dataset = Dataset(task=task, records=train_records)

    clean_texts = [r.text for r in train_records]
    clean_labels = [r.label for r in train_records]
    eval_texts = [r.text for r in eval_records]
    eval_labels = [r.label for r in eval_records]

    base_train = TrainConfig(**{**config.train.__dict__, "holdout_fraction": 0.0})

    def fit(adv: list[AugmentedRecord]) -> SurrogateModel:
        texts = clean_texts + [a.text for a in adv]
        labels = clean_labels + [a.label for a in adv]
        weights = [1.0] * len(clean_texts) + [config.mix_weight] * len(adv)
        model, _ = train_surrogate(texts, labels, task, base_train, sample_weights=weights)
        return model

    model = fit([])
    accuracy_before = _accuracy(model, eval_texts, eval_labels, task) if eval_records else float("nan")

    adversarial: list[AugmentedRecord] = []
    rounds: list[RoundReport] = []
    for round_no in range(1, config.rounds + 1):
        added_per_attack = {recipe.name: 0 for recipe in config.attacks}
        if config.mix_weight > 0:
            fresh = augment(train_dataset, config.attacks, model,
                            config.per_attack_budget, rng_seed=config.seed)
            for record in fresh:
                added_per_attack[record.source_attack] += 1
            adversarial.extend(fresh)
            model = fit(adversarial)
        accuracy_round = _accuracy(model, eval_texts, eval_labels, task) if eval_records else float("nan")
        rounds.append(RoundReport(round=round_no, added_per_attack=added_per_attack,
                                  total_adversarial=len(adversarial),
                                  clean_accuracy=accuracy_round))

    report = AdvTrainReport(
        attack_names=[r.name for r in config.attacks],
        mode="eat" if config.is_ensemble else "sat",
        mix_weight=config.mix_weight,
        rounds=rounds,
        clean_accuracy_before=accuracy_before,
        clean_accuracy_after=rounds[-1].clean_accuracy if rounds else accuracy_before,
    )
    return model, report


def evaluate_robustness(
    oracle: VictimOracle,
    recipes: list[AttackRecipe],
    eval_dataset: Dataset,
    parallelism: int = 1,
    rng_seed: int = 0,
    unseen: frozenset[str] = frozenset(),
) -> dict[str, dict]:
    """Attack the model with each recipe; the table marks recipes held out of
    training (the leave-one-out protocol) with unseen=true."""
    from .runner import run_attacks

    table: dict[str, dict] = {}
    for recipe in recipes:
        _, metrics = run_attacks(eval_dataset, recipe, oracle,
                                 parallelism=parallelism, rng_seed=rng_seed)
        table[recipe.name] = {
            "metrics": metrics.to_dict(),
            "unseen": recipe.name in unseen,
        }
    return table
