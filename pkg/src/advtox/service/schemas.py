"""Pydantic request/response models for the engine service.

The CLI builds these same models and either calls the operation functions
in-process or posts them to a running service; both paths produce identical
payloads, so artifacts written by the thin client do not depend on the
transport.
"""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field


class RecordModel(BaseModel):
    text: str
    label: Union[int, str, list[int], None] = None
    identities: dict[str, bool] = Field(default_factory=dict)


class TaskModel(BaseModel):
    task: Literal["binary", "multiclass", "multilabel"]
    labels: list[str] = Field(min_length=1)


class TrainSettings(BaseModel):
    seed: int = 0
    epochs: int = 200
    learning_rate: float = 1.0
    l2: float = 1e-4
    holdout_fraction: float = 0.2


class TrainRequest(BaseModel):
    task: TaskModel
    records: list[RecordModel]
    train: TrainSettings = Field(default_factory=TrainSettings)


class TrainResponse(BaseModel):
    surrogate: dict
    report: dict
    resolved: dict


class RecipeSpec(BaseModel):
    """A builtin recipe by name, or an inline recipe config document."""

    name: Optional[str] = None
    config_text: Optional[str] = None
    budget: Optional[int] = None


class OracleSpec(BaseModel):
    """Where predictions come from: an inline surrogate document or a remote
    victim endpoint (mutually exclusive)."""

    surrogate: Optional[dict] = None
    remote_url: Optional[str] = None


class AttackRequest(BaseModel):
    records: list[RecordModel]
    recipe: RecipeSpec
    oracle: OracleSpec
    seed: int = 0
    parallelism: int = 1
    threshold: float = 0.5


class AttackResponse(BaseModel):
    results: list[dict]
    metrics: dict
    resolved: dict


class AdvTrainRequest(BaseModel):
    task: TaskModel
    records: list[RecordModel]
    attacks: list[RecipeSpec]
    mix_weight: float = 1.0
    per_attack_budget: int = 200
    rounds: int = 1
    seed: int = 0
    train: TrainSettings = Field(default_factory=TrainSettings)


class AdvTrainResponse(BaseModel):
    surrogate: dict
    report: dict
    resolved: dict


class EvalRequest(BaseModel):
    records: list[RecordModel]
    oracle: OracleSpec
    recipes: list[RecipeSpec]
    unseen: list[str] = Field(default_factory=list)
    seed: int = 0
    parallelism: int = 1


class EvalResponse(BaseModel):
    table: dict
    resolved: dict


class BiasRequest(BaseModel):
    records: list[RecordModel]
    oracle: OracleSpec
    robust: Optional[dict] = None


class BiasResponse(BaseModel):
    base: dict
    robust: Optional[dict] = None
    deltas: Optional[dict] = None
    resolved: dict


class HealthResponse(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    status: str
    version: str
    resources: str


class ErrorResponse(BaseModel):
    error: str
