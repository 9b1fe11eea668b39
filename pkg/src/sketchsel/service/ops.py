"""Service operations, independent of HTTP.

A :class:`Registry` holds trained models in memory, keyed by id, and can
load model files on demand.
"""

from __future__ import annotations

import hashlib
import threading
import time
from pathlib import Path

import numpy as np

from ..countsketch import SketchGeometry
from ..data import FileSource, SparseExample
from ..harness import ExperimentGrid, run_experiment, write_result
from ..metrics import MetricKind, evaluate
from ..model.io import model_header
from ..model import Algo, DenseTopKModel, FeatureHashModel, LossSpec, StoppingRule, load_model, save_model, train
from .schemas import (
    EvalRequest,
    EvalResponse,
    ExperimentRequest,
    ExperimentResponse,
    ModelDetail,
    ModelInfo,
    PredictRequest,
    PredictResponse,
    TrainRequest,
    TrainResponse,
)


class UnknownModelError(KeyError):
    pass


class Registry:
    def __init__(self):
        self._lock = threading.Lock()
        self._models: dict[str, tuple[object, LossSpec, dict, str | None]] = {}

    def add(self, model, loss: LossSpec, header: dict, path: str | None) -> str:
        digest = hashlib.sha1(f"{time.time_ns()}:{id(model)}".encode()).hexdigest()[:12]
        with self._lock:
            self._models[digest] = (model, loss, header, path)
        return digest

    def get(self, ref: str):
        with self._lock:
            if ref in self._models:
                return self._models[ref]
        path = Path(ref)
        if not path.exists():
            raise UnknownModelError(ref)
        model, loss, header = load_model(path)
        return model, loss, header, str(path)

    def list(self) -> list[ModelInfo]:
        with self._lock:
            return [ModelInfo(model_id=k, path=v[3], header=v[2]) for k, v in self._models.items()]


def build_model(req: TrainRequest):
    algo = Algo(req.algo)
    if algo is Algo.FH:
        return FeatureHashModel(req.sketch_width, req.classes, req.seed)
    geometry = None
    if algo is Algo.MISSION:
        if req.sketch_mode == "identity":
            geometry = SketchGeometry.identity(req.sketch_width)
        else:
            geometry = SketchGeometry(req.sketch_depth, req.sketch_width)
    budget = req.buffer_budget
    if algo is Algo.BATCH_IHT and budget is None:
        budget = 4 * req.top_k
    return DenseTopKModel(
        req.top_k, algo, classes=req.classes, geometry=geometry, seed=req.seed,
        heap_epsilon=req.heap_epsilon, buffer_budget=budget,
    )


def _source(ref, format: str, hash_bits: int, hash_seed: int, zero_based: bool) -> FileSource:
    path = Path(ref)
    if not path.exists():
        raise FileNotFoundError(f"data file not found: {ref}")
    return FileSource(path, format, hash_bits=hash_bits, hash_seed=hash_seed, zero_based=zero_based)


def do_train(registry: Registry, req: TrainRequest) -> TrainResponse:
    model = build_model(req)
    loss = LossSpec(req.loss, req.lr)
    loss.check_classes(req.classes)
    source = _source(req.data, req.format, req.hash_bits, req.hash_seed, req.zero_based)
    stop = StoppingRule(req.epochs, req.plateau_tol)
    report = train(model, loss, source, stop=stop, batch_size=req.batch_size, shuffle_seed=req.shuffle_seed)
    data_meta = {"format": req.format, "hash_bits": req.hash_bits, "hash_seed": req.hash_seed,
                 "zero_based": req.zero_based}
    if req.model_out:
        save_model(model, loss, req.model_out, sketch_path=req.sketch_out, data=data_meta)
    header = model_header(model, loss) | {"data": data_meta}
    model_id = registry.add(model, loss, header, req.model_out)
    active = sum(len(h) for h in model.heaps) if isinstance(model, DenseTopKModel) else int(
        np.count_nonzero(model.weights)
    )
    return TrainResponse(
        model_id=model_id, model_path=req.model_out, algo=req.algo, steps=report.steps,
        seconds=report.seconds, stopped_early=report.stopped_early,
        epochs=[{"epoch": e.epoch, "loss": e.loss, "steps": e.steps, "seconds": e.seconds} for e in report.epochs],
        active_features=active,
    )


def do_eval(registry: Registry, req: EvalRequest) -> EvalResponse:
    model, _, header, _ = registry.get(req.model)
    meta = header.get("data", {})
    source = _source(
        req.data,
        req.format or meta.get("format", "libsvm"),
        req.hash_bits or meta.get("hash_bits", 20),
        req.hash_seed if req.hash_seed is not None else meta.get("hash_seed", 0),
        req.zero_based or meta.get("zero_based", False),
    )
    scores, labels = [], []
    for ex in source:
        scores.append(model.scores(ex))
        labels.append(ex.label)
    metric = MetricKind(req.metric)
    if metric is MetricKind.ACCURACY:
        if model.classes > 1:
            preds = [int(np.argmax(s)) for s in scores]
            truth = [int(y) for y in labels]
        else:
            preds = [1 if s[0] > 0 else -1 for s in scores]
            truth = [1 if y > 0 else -1 for y in labels]
        report = evaluate(metric, preds, truth)
    else:
        if model.classes > 1:
            raise ValueError(f"{metric.value} needs a single-output model")
        report = evaluate(metric, [float(s[0]) for s in scores], labels)
    return EvalResponse(metric=req.metric, value=report.value, samples=report.samples, positives=report.positives)


def do_predict(registry: Registry, req: PredictRequest) -> PredictResponse:
    model, _, _, _ = registry.get(req.model)
    out = []
    for item in req.examples:
        ex = SparseExample.from_pairs(zip(item.indices, item.values), 0.0)
        s = model.scores(ex)
        out.append(float(s[0]) if len(s) == 1 else s.tolist())
    return PredictResponse(scores=out)


def model_detail(registry: Registry, ref: str, limit: int = 100) -> ModelDetail:
    model, _, header, path = registry.get(ref)
    tops = []
    for c in range(model.classes):
        entries = model.nonzero(c) if isinstance(model, FeatureHashModel) else model.top(c)
        tops.append([(int(i), float(w)) for i, w in entries[:limit]])
    return ModelDetail(model_id=ref, path=path, header=header, top=tops)


def do_experiment(req: ExperimentRequest) -> ExperimentResponse:
    config = dict(req.config)
    if config.setdefault("kind", req.kind) != req.kind:
        raise ValueError(f"config is for {config['kind']!r}, not {req.kind!r}")
    grid = ExperimentGrid.from_dict(config)
    t0 = time.perf_counter()
    result = run_experiment(grid)
    elapsed = time.perf_counter() - t0
    csv_path = manifest_path = None
    if req.out:
        csv_path, manifest_path = (str(p) for p in write_result(result, req.out, elapsed))
    return ExperimentResponse(
        kind=req.kind, rows=len(result.rows), summary=_plain(result.summary),
        csv_path=csv_path, manifest_path=manifest_path, seconds=elapsed,
    )


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.integer, np.bool_)):
        return x.item()
    if isinstance(x, float) and not np.isfinite(x):
        return str(x)
    if isinstance(x, np.floating):
        return float(x)
    return x
