"""Request and response models for the HTTP service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field, model_validator

AlgoName = Literal["mission", "iht", "batch-iht", "fh"]
LossName = Literal["squared", "logistic", "hinge", "xent"]
FormatName = Literal["libsvm", "tokens"]
MetricName = Literal["auc", "ap", "acc"]
ExperimentKind = Literal["phase", "attenuation", "memory", "tradeoff", "convergence"]


class DataRef(BaseModel):
    data: str = Field(description="path to a libsvm or token file, optionally gzip-compressed")
    format: FormatName = "libsvm"
    hash_bits: int = Field(20, ge=1, le=63)
    hash_seed: int = Field(0, ge=0)
    zero_based: bool = False


class TrainRequest(DataRef):
    algo: AlgoName = "mission"
    loss: LossName = "logistic"
    top_k: int = Field(1000, ge=1)
    sketch_depth: int = Field(5, ge=1)
    sketch_width: int = Field(1 << 16, ge=1)
    sketch_mode: Literal["standard", "identity"] = "standard"
    lr: float = Field(0.1, gt=0)
    epochs: int = Field(1, ge=1)
    classes: int = Field(1, ge=1)
    batch_size: int = Field(1, ge=1)
    shuffle_seed: int | None = None
    seed: int = Field(0, ge=0)
    heap_epsilon: float = Field(0.0, ge=0)
    buffer_budget: int | None = Field(None, ge=1)
    plateau_tol: float | None = Field(None, gt=0)
    model_out: str | None = None
    sketch_out: str | None = None

    @model_validator(mode="after")
    def _classes_match_loss(self):
        if self.loss == "xent" and self.classes < 2:
            raise ValueError("xent loss needs classes >= 2")
        if self.loss != "xent" and self.classes != 1:
            raise ValueError(f"{self.loss} loss is single-output; classes must be 1")
        return self


class EpochInfo(BaseModel):
    epoch: int
    loss: float
    steps: int
    seconds: float


class TrainResponse(BaseModel):
    model_id: str
    model_path: str | None
    algo: AlgoName
    steps: int
    seconds: float
    stopped_early: bool
    epochs: list[EpochInfo]
    active_features: int


class EvalRequest(BaseModel):
    metric: MetricName
    model: str = Field(description="registered model id or model file path")
    data: str
    format: FormatName | None = None
    hash_bits: int | None = Field(None, ge=1, le=63)
    hash_seed: int | None = Field(None, ge=0)
    zero_based: bool = False


class EvalResponse(BaseModel):
    metric: MetricName
    value: float
    samples: int
    positives: int | None = None


class SparseInput(BaseModel):
    indices: list[int]
    values: list[float]


class PredictRequest(BaseModel):
    model: str
    examples: list[SparseInput]


class PredictResponse(BaseModel):
    scores: list[float | list[float]]


class MetricRequest(BaseModel):
    scores: list[float]
    labels: list[float]


class MetricResponse(BaseModel):
    metric: MetricName
    value: float
    samples: int
    positives: int | None = None


class ExperimentRequest(BaseModel):
    kind: ExperimentKind
    config: dict = Field(default_factory=dict)
    out: str | None = None


class ExperimentResponse(BaseModel):
    kind: ExperimentKind
    rows: int
    summary: dict
    csv_path: str | None = None
    manifest_path: str | None = None
    seconds: float


class ModelInfo(BaseModel):
    model_id: str
    path: str | None
    header: dict


class ModelDetail(ModelInfo):
    top: list[list[tuple[int, float]]]


class ErrorBody(BaseModel):
    error: str
    detail: str
    record: int | None = None
    offset: int | None = None
