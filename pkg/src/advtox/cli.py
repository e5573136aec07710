"""Command-line surface: attack runs, surrogate training, adversarial
training, robustness evaluation, bias reports, and the engine service.

The CLI is a thin client over the service operations: every subcommand builds
the same request model the HTTP API accepts and either executes it in-process
(default) or posts it to a running engine given via ``--service``. Artifacts
are written client-side, embed the resolved config and seed, and re-running a
command with identical inputs produces byte-identical metric files.

Exit codes: 0 success, 1 usage error, 2 data error, 3 transport error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__
from .datasets import infer_task, load_dataset
from .errors import CapabilityError, ConfigError, DataError, ResourceError, TransportError
from .resources import ResourceBundle
from .service.ops import EngineOps
from .service.schemas import (
    AdvTrainRequest,
    AttackRequest,
    BiasRequest,
    EvalRequest,
    OracleSpec,
    RecipeSpec,
    RecordModel,
    TaskModel,
    TrainRequest,
    TrainSettings,
)
from .victims import RemoteClient, RemoteOracle, TaskKind, TaskType, load_surrogate

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_TRANSPORT = 3


class _Client:
    """Dispatches requests in-process or to a remote engine service."""

    def __init__(self, service_url: str | None, resources_dir: str | None):
        self.service_url = service_url
        self._resources_dir = resources_dir
        self._ops: EngineOps | None = None

    def call(self, op: str, request, response_cls):
        if self.service_url is None:
            if self._ops is None:
                self._ops = EngineOps(ResourceBundle.load(self._resources_dir))
            return getattr(self._ops, op)(request)
        import httpx

        try:
            resp = httpx.post(f"{self.service_url.rstrip('/')}/v1/{op}",
                              json=request.model_dump(mode="json"), timeout=600.0)
        except httpx.HTTPError as exc:
            raise TransportError(f"engine service unreachable: {exc}") from exc
        if resp.status_code != 200:
            try:
                message = resp.json().get("error", resp.text)
            except ValueError:
                message = resp.text
            if resp.status_code == 502:
                raise TransportError(f"engine service: {message}")
            raise DataError(f"engine service: {message}")
        return response_cls.model_validate(resp.json())


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n",
                    encoding="utf-8")


def _write_results_jsonl(path: Path, results: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for row in results:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def _records_for(dataset) -> list[RecordModel]:
    return [
        RecordModel(
            text=r.text,
            label=list(r.label) if isinstance(r.label, tuple) else r.label,
            identities=r.identities)
        for r in dataset.records
    ]


def _oracle_task(model_path: str | None, remote_url: str | None) -> TaskKind:
    if model_path is not None:
        return load_surrogate(model_path).task
    client = RemoteClient(remote_url)
    try:
        return RemoteOracle(client).task
    finally:
        client.close()


def _oracle_spec(model_path: str | None, remote_url: str | None) -> OracleSpec:
    if (model_path is None) == (remote_url is None):
        raise ConfigError("exactly one of --model and --remote is required")
    if model_path is not None:
        return OracleSpec(surrogate=json.loads(Path(model_path).read_text(encoding="utf-8")))
    return OracleSpec(remote_url=remote_url)


def _recipe_spec(name: str | None, recipe_file: str | None,
                 budget: int | None) -> RecipeSpec:
    if (name is None) == (recipe_file is None):
        raise ConfigError("exactly one of --recipe and --recipe-file is required")
    if name is not None:
        return RecipeSpec(name=name, budget=budget)
    return RecipeSpec(config_text=Path(recipe_file).read_text(encoding="utf-8"),
                      budget=budget)


def _load_bias_dataset(path: str, fmt: str):
    """Bias datasets are parsed with their own label inventory (benign first)
    rather than the victim's, since only the benign/toxic split matters."""
    import csv as _csv

    if fmt == "csv":
        with open(path, newline="", encoding="utf-8") as fh:
            header = next(_csv.reader(fh), [])
        has_label_col = "label" in header
    else:
        has_label_col = True
    task_type = TaskType.MULTICLASS if has_label_col else TaskType.MULTILABEL
    task = infer_task(path, fmt, task_type)
    if task_type == TaskType.MULTICLASS and len(task.label_names) == 2:
        task = TaskKind(TaskType.BINARY, task.label_names)
    return load_dataset(path, fmt, task)


def _records_for_bias(dataset) -> list[RecordModel]:
    out = []
    for r in dataset.records:
        if isinstance(r.label, tuple):
            truth = int(any(r.label[1:]))
        else:
            truth = int(r.label != 0)
        out.append(RecordModel(text=r.text, label=truth, identities=r.identities))
    return out


def _metric_line(metrics: dict) -> str:
    asr = metrics.get("asr")
    q = metrics.get("avg_queries")
    p = metrics.get("avg_perturb_pct")
    return (f"seeds={metrics.get('total_seeds')} skipped={metrics.get('skipped')} "
            f"attempted={metrics.get('attempted')} successes={metrics.get('successes')} "
            f"asr={'n/a' if asr is None else f'{asr:.4f}'} "
            f"avg_queries={'n/a' if q is None else f'{q:.1f}'} "
            f"avg_perturb_pct={'n/a' if p is None else f'{p:.2f}'}")


service_option = click.option("--service", default=None, metavar="URL",
                              help="Run against a remote engine service instead of in-process.")
resources_option = click.option("--resources", default=None, metavar="DIR",
                                help="Resource directory (default: packaged fixtures).")
format_option = click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]),
                             default="csv", show_default=True)


@click.group()
@click.version_option(__version__)
def cli() -> None:
    """Adversarial robustness toolkit for toxicity classifiers."""


@cli.command()
@click.option("--task", "task_name", type=click.Choice(["binary", "multiclass", "multilabel"]),
              required=True)
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@format_option
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--seed", default=0, show_default=True)
@click.option("--epochs", default=200, show_default=True)
@service_option
@resources_option
def train(task_name, dataset, fmt, out, seed, epochs, service, resources):
    """Train the built-in surrogate and write model + metrics files."""
    task = infer_task(dataset, fmt, TaskType(task_name))
    data = load_dataset(dataset, fmt, task)
    request = TrainRequest(
        task=TaskModel(task=task.task.value, labels=list(task.label_names)),
        records=_records_for(data),
        train=TrainSettings(seed=seed, epochs=epochs))
    from .service.schemas import TrainResponse

    response = _Client(service, resources).call("train", request, TrainResponse)
    out_dir = Path(out)
    _write_json(out_dir / "model.json", response.surrogate)
    _write_json(out_dir / "train_metrics.json",
                {"schema_version": 1, "config": response.resolved,
                 "report": response.report})
    click.echo(f"heldout accuracy={response.report['accuracy']:.4f} "
               f"macro_f1={response.report['macro_f1']:.4f}")
    click.echo(f"wrote {out_dir / 'model.json'}")


@cli.command()
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@format_option
@click.option("--recipe", "recipe_name", default=None, metavar="NAME")
@click.option("--recipe-file", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--model", "model_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--remote", "remote_url", default=None, metavar="URL")
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--seed", default=0, show_default=True)
@click.option("--parallelism", default=1, show_default=True)
@click.option("--budget", default=None, type=int, help="Query budget per seed.")
@service_option
@resources_option
def attack(dataset, fmt, recipe_name, recipe_file, model_path, remote_url, out,
           seed, parallelism, budget, service, resources):
    """Attack every seed in a dataset; write results JSONL + metrics JSON."""
    task = _oracle_task(model_path, remote_url)
    data = load_dataset(dataset, fmt, task)
    request = AttackRequest(
        records=_records_for(data),
        recipe=_recipe_spec(recipe_name, recipe_file, budget),
        oracle=_oracle_spec(model_path, remote_url),
        seed=seed, parallelism=parallelism)
    from .service.schemas import AttackResponse

    response = _Client(service, resources).call("attack", request, AttackResponse)
    out_dir = Path(out)
    _write_results_jsonl(out_dir / "results.jsonl", response.results)
    _write_json(out_dir / "metrics.json",
                {"schema_version": 1, "config": response.resolved,
                 "metrics": response.metrics})
    click.echo(_metric_line(response.metrics))
    click.echo(f"wrote {out_dir / 'results.jsonl'}")


@cli.command()
@click.option("--task", "task_name", type=click.Choice(["binary", "multiclass", "multilabel"]),
              required=True)
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@format_option
@click.option("--attacks", required=True,
              help="Comma-separated builtin recipe names for SAT (one) or EAT (several).")
@click.option("--mix-weight", default=1.0, show_default=True)
@click.option("--budget", "per_attack_budget", default=200, show_default=True,
              help="Max adversarial examples per attack per round.")
@click.option("--rounds", default=1, show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--seed", default=0, show_default=True)
@service_option
@resources_option
def advtrain(task_name, dataset, fmt, attacks, mix_weight, per_attack_budget,
             rounds, out, seed, service, resources):
    """Adversarially train the surrogate; write robust model + round report."""
    task = infer_task(dataset, fmt, TaskType(task_name))
    data = load_dataset(dataset, fmt, task)
    request = AdvTrainRequest(
        task=TaskModel(task=task.task.value, labels=list(task.label_names)),
        records=_records_for(data),
        attacks=[RecipeSpec(name=n.strip()) for n in attacks.split(",") if n.strip()],
        mix_weight=mix_weight, per_attack_budget=per_attack_budget,
        rounds=rounds, seed=seed, train=TrainSettings(seed=seed))
    from .service.schemas import AdvTrainResponse

    response = _Client(service, resources).call("advtrain", request, AdvTrainResponse)
    out_dir = Path(out)
    _write_json(out_dir / "robust_model.json", response.surrogate)
    _write_json(out_dir / "advtrain_report.json",
                {"schema_version": 1, "config": response.resolved,
                 "report": response.report})
    report = response.report
    click.echo(f"mode={report['mode']} rounds={len(report['rounds'])} "
               f"clean accuracy {report['clean_accuracy_before']:.4f} -> "
               f"{report['clean_accuracy_after']:.4f}")
    click.echo(f"wrote {out_dir / 'robust_model.json'}")


@cli.command("eval")
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@format_option
@click.option("--model", "model_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--remote", "remote_url", default=None, metavar="URL")
@click.option("--recipes", required=True, help="Comma-separated recipe names.")
@click.option("--unseen", default="", help="Comma-separated names to flag as unseen.")
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--seed", default=0, show_default=True)
@click.option("--parallelism", default=1, show_default=True)
@service_option
@resources_option
def eval_cmd(dataset, fmt, model_path, remote_url, recipes, unseen, out, seed,
             parallelism, service, resources):
    """Run a recipe battery against a model; write the robustness table."""
    task = _oracle_task(model_path, remote_url)
    data = load_dataset(dataset, fmt, task)
    request = EvalRequest(
        records=_records_for(data),
        oracle=_oracle_spec(model_path, remote_url),
        recipes=[RecipeSpec(name=n.strip()) for n in recipes.split(",") if n.strip()],
        unseen=[n.strip() for n in unseen.split(",") if n.strip()],
        seed=seed, parallelism=parallelism)
    from .service.schemas import EvalResponse

    response = _Client(service, resources).call("eval", request, EvalResponse)
    out_dir = Path(out)
    _write_json(out_dir / "robustness_table.json",
                {"schema_version": 1, "config": response.resolved,
                 "table": response.table})
    for name, entry in response.table.items():
        flag = " (unseen)" if entry.get("unseen") else ""
        click.echo(f"{name}{flag}: {_metric_line(entry['metrics'])}")
    click.echo(f"wrote {out_dir / 'robustness_table.json'}")


@cli.command()
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@format_option
@click.option("--model", "model_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--robust", "robust_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@service_option
@resources_option
def bias(dataset, fmt, model_path, robust_path, out, service, resources):
    """Per-identity-group Subgroup/BPSN AUC report (base vs robust deltas)."""
    data = _load_bias_dataset(dataset, fmt)
    robust_doc = (json.loads(Path(robust_path).read_text(encoding="utf-8"))
                  if robust_path else None)
    request = BiasRequest(records=_records_for_bias(data),
                          oracle=_oracle_spec(model_path, None), robust=robust_doc)
    from .service.schemas import BiasResponse

    response = _Client(service, resources).call("bias", request, BiasResponse)
    out_dir = Path(out)
    _write_json(out_dir / "bias_report.json",
                {"schema_version": 1, "config": response.resolved,
                 "base": response.base, "robust": response.robust,
                 "deltas": response.deltas})
    for group, row in response.base["groups"].items():
        sub = row["subgroup_auc"]
        bp = row["bpsn_auc"]
        click.echo(f"{group}: subgroup_auc="
                   f"{'n/a' if sub is None else f'{sub:.4f}'} "
                   f"bpsn_auc={'n/a' if bp is None else f'{bp:.4f}'}")
    click.echo(f"wrote {out_dir / 'bias_report.json'}")


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8080, show_default=True)
@resources_option
def serve(host, port, resources):
    """Run the engine as an HTTP service."""
    import uvicorn

    from .service.app import create_app

    app = create_app(ResourceBundle.load(resources))
    uvicorn.run(app, host=host, port=port, log_level="warning")


def main() -> None:
    try:
        cli.main(standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        sys.exit(EXIT_USAGE)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.Abort:
        sys.exit(EXIT_USAGE)
    except ConfigError as exc:
        click.echo(f"usage error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    except (DataError, ResourceError, CapabilityError) as exc:
        click.echo(f"data error: {exc}", err=True)
        sys.exit(EXIT_DATA)
    except TransportError as exc:
        click.echo(f"transport error: {exc}", err=True)
        sys.exit(EXIT_TRANSPORT)


if __name__ == "__main__":
    main()
