"""Engine operations behind the service surface.

Each operation takes a request model and returns a response model; the
FastAPI routes and the CLI thin client both call these, so results are
transport-independent. Every response carries the fully resolved request
(config + seed) for the reproducibility header of on-disk artifacts.
"""

from __future__ import annotations

from .. import __version__
from ..advtrain import AdvTrainConfig, adversarial_train, evaluate_robustness
from ..datasets import Dataset, DatasetRecord, result_to_dict
from ..errors import ConfigError, DataError
from ..metrics import bias_report, roc_auc
from ..recipes import (
    AttackRecipe,
    builtin_recipe,
    parse_recipe_config,
    recipe_from_document,
)
from ..resources import ResourceBundle
from ..runner import run_attacks
from ..victims import (
    MULTILABEL_THRESHOLD,
    RemoteClient,
    RemoteOracle,
    SurrogateModel,
    TaskKind,
    TaskType,
    TrainConfig,
    VictimOracle,
    surrogate_from_doc,
    surrogate_to_doc,
    train_surrogate,
)
from .schemas import (
    AdvTrainRequest,
    AdvTrainResponse,
    AttackRequest,
    AttackResponse,
    BiasRequest,
    BiasResponse,
    EvalRequest,
    EvalResponse,
    OracleSpec,
    RecipeSpec,
    RecordModel,
    TaskModel,
    TrainRequest,
    TrainResponse,
)


def task_from_model(task_model: TaskModel) -> TaskKind:
    try:
        return TaskKind(TaskType(task_model.task), tuple(task_model.labels))
    except ValueError as exc:
        raise DataError(str(exc)) from exc


def _parse_label(record: RecordModel, task: TaskKind, where: str):
    label = record.label
    if label is None:
        raise DataError(f"{where}: record has no label")
    if task.task == TaskType.MULTILABEL:
        if not isinstance(label, list):
            raise DataError(f"{where}: multilabel record needs a label vector")
        if len(label) == task.num_labels:
            return tuple(int(v) for v in label)
        if len(label) == task.num_labels - 1:
            toxic = tuple(int(v) for v in label)
            return (0 if any(toxic) else 1,) + toxic
        raise DataError(f"{where}: expected {task.num_labels} or "
                        f"{task.num_labels - 1} label entries")
    if isinstance(label, str):
        if label not in task.label_names:
            raise DataError(f"{where}: unknown label {label!r}")
        return task.label_names.index(label)
    if isinstance(label, int):
        if not 0 <= label < task.num_labels:
            raise DataError(f"{where}: label index {label} out of range")
        return label
    raise DataError(f"{where}: label must be an index or name")


def records_to_dataset(records: list[RecordModel], task: TaskKind) -> Dataset:
    out = []
    for i, record in enumerate(records):
        if not record.text.strip():
            raise DataError(f"record {i}: empty text")
        out.append(DatasetRecord(
            text=record.text,
            label=_parse_label(record, task, f"record {i}"),
            identities=dict(record.identities)))
    return Dataset(task=task, records=out)


class EngineOps:
    """Operations bound to a loaded resource bundle."""

    def __init__(self, resources: ResourceBundle):
        self.resources = resources

    # -- oracle / recipe resolution ---------------------------------------
    def resolve_oracle(self, spec: OracleSpec) -> tuple[VictimOracle, RemoteClient | None]:
        if (spec.surrogate is None) == (spec.remote_url is None):
            raise ConfigError("exactly one of surrogate model and remote URL is required")
        if spec.surrogate is not None:
            return surrogate_from_doc(spec.surrogate), None
        client = RemoteClient(spec.remote_url)
        return RemoteOracle(client), client

    def resolve_recipe(self, spec: RecipeSpec, task: TaskKind,
                       remote: RemoteClient | None,
                       threshold: float = MULTILABEL_THRESHOLD) -> AttackRecipe:
        if (spec.name is None) == (spec.config_text is None):
            raise ConfigError("recipe needs exactly one of: builtin name, config text")
        if spec.name is not None:
            return builtin_recipe(spec.name, task, self.resources, remote=remote,
                                  budget=spec.budget, threshold=threshold)
        doc = parse_recipe_config(spec.config_text)
        recipe = recipe_from_document(doc, self.resources, remote)
        if spec.budget is not None:
            recipe.budget = spec.budget
        return recipe

    # -- operations ---------------------------------------------------------
    def train(self, request: TrainRequest) -> TrainResponse:
        task = task_from_model(request.task)
        dataset = records_to_dataset(request.records, task)
        config = TrainConfig(
            seed=request.train.seed, epochs=request.train.epochs,
            learning_rate=request.train.learning_rate, l2=request.train.l2,
            holdout_fraction=request.train.holdout_fraction)
        model, report = train_surrogate(
            [r.text for r in dataset.records],
            [r.label for r in dataset.records], task, config)
        return TrainResponse(
            surrogate=surrogate_to_doc(model),
            report={"accuracy": report.accuracy, "macro_f1": report.macro_f1,
                    "n_train": report.n_train, "n_heldout": report.n_heldout},
            resolved=_resolved(request, drop=("records",)))

    def attack(self, request: AttackRequest) -> AttackResponse:
        oracle, remote = self.resolve_oracle(request.oracle)
        recipe = self.resolve_recipe(request.recipe, oracle.task, remote,
                                     threshold=request.threshold)
        dataset = records_to_dataset(request.records, oracle.task)
        results, metrics = run_attacks(dataset, recipe, oracle,
                                       parallelism=request.parallelism,
                                       rng_seed=request.seed)
        resolved = _resolved(request, drop=("records",))
        resolved["recipe_resolved"] = recipe.descriptor()
        resolved["task"] = {"task": oracle.task.task.value,
                            "labels": list(oracle.task.label_names)}
        return AttackResponse(
            results=[result_to_dict(r) for r in results],
            metrics=metrics.to_dict(), resolved=resolved)

    def advtrain(self, request: AdvTrainRequest) -> AdvTrainResponse:
        task = task_from_model(request.task)
        dataset = records_to_dataset(request.records, task)
        recipes = [self.resolve_recipe(spec, task, None) for spec in request.attacks]
        config = AdvTrainConfig(
            attacks=recipes, mix_weight=request.mix_weight,
            per_attack_budget=request.per_attack_budget, rounds=request.rounds,
            seed=request.seed,
            train=TrainConfig(
                seed=request.train.seed, epochs=request.train.epochs,
                learning_rate=request.train.learning_rate, l2=request.train.l2,
                holdout_fraction=request.train.holdout_fraction))
        model, report = adversarial_train(dataset, config)
        resolved = _resolved(request, drop=("records",))
        resolved["attacks_resolved"] = [r.descriptor() for r in recipes]
        return AdvTrainResponse(surrogate=surrogate_to_doc(model),
                                report=report.to_dict(), resolved=resolved)

    def eval(self, request: EvalRequest) -> EvalResponse:
        oracle, remote = self.resolve_oracle(request.oracle)
        recipes = [self.resolve_recipe(spec, oracle.task, remote)
                   for spec in request.recipes]
        dataset = records_to_dataset(request.records, oracle.task)
        table = evaluate_robustness(oracle, recipes, dataset,
                                    parallelism=request.parallelism,
                                    rng_seed=request.seed,
                                    unseen=frozenset(request.unseen))
        return EvalResponse(table=table, resolved=_resolved(request, drop=("records",)))

    def bias(self, request: BiasRequest) -> BiasResponse:
        """Identity-group bias metrics. Records carry a binary toxic truth
        (0 benign / 1 toxic), independent of the victim's label set; the
        toxicity score is 1 - P(benign)."""
        oracle, _ = self.resolve_oracle(request.oracle)
        texts: list[str] = []
        truths: list[int] = []
        for i, record in enumerate(request.records):
            if record.label not in (0, 1):
                raise DataError(f"record {i}: bias records need a binary truth (0/1)")
            texts.append(record.text)
            truths.append(int(record.label))
        groups = sorted({g for r in request.records for g in r.identities})
        if not groups:
            raise DataError(
                "bias evaluation needs identity flags (identity_<group> columns "
                "or an 'identities' object per record)")
        masks = {g: [bool(r.identities.get(g, False)) for r in request.records]
                 for g in groups}
        base = self._bias_table(oracle, texts, truths, masks)
        robust_table = None
        deltas = None
        if request.robust is not None:
            robust_model = surrogate_from_doc(request.robust)
            robust_table = self._bias_table(robust_model, texts, truths, masks)
            deltas = {
                group: {
                    metric: (
                        None
                        if base["groups"][group][metric] is None
                        or robust_table["groups"][group][metric] is None
                        else robust_table["groups"][group][metric] - base["groups"][group][metric])
                    for metric in ("subgroup_auc", "bpsn_auc")
                }
                for group in groups
            }
        return BiasResponse(base=base, robust=robust_table, deltas=deltas,
                            resolved=_resolved(request, drop=("records",)))

    def _bias_table(self, oracle: VictimOracle, texts: list[str],
                    truths: list[int], masks: dict[str, list[bool]]) -> dict:
        probs = oracle.predict(texts).probs
        scores = 1.0 - probs[:, 0]
        report = bias_report(scores, truths, masks)
        try:
            report["overall_auc"] = roc_auc(scores, truths)
        except ValueError:
            report["overall_auc"] = None
            report["undefined"].append("overall_auc")
        return report


def _resolved(request, drop: tuple[str, ...] = ()) -> dict:
    doc = request.model_dump(mode="json")
    for key in drop:
        doc.pop(key, None)
    doc["engine_version"] = __version__
    return doc
