"""Model files: one JSON header line, then ``feature_id<TAB>weight`` lines.

Multi-class models put a ``{"class": c}`` JSON line before each class's
entries. Feature-hashing models store nonzero buckets the same way.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..countsketch import CountSketch, SketchGeometry
from ..errors import ParseError
from ..topk import format_snapshot, parse_snapshot_line
from .feature_hash import FeatureHashModel
from .loss import LossSpec
from .topk_model import Algo, DenseTopKModel

FORMAT = "sketchsel-model"


def model_header(model, loss: LossSpec) -> dict:
    header = {
        "format": FORMAT,
        "version": 1,
        "loss": loss.kind.value,
        "lr": loss.lr,
        "classes": model.classes,
        "seed": model.seed,
    }
    if isinstance(model, FeatureHashModel):
        header.update(algo=Algo.FH.value, width=model.width, top_k=None, sketch=None)
        return header
    header.update(algo=model.algo.value, top_k=model.k, heap_epsilon=model.heap_epsilon)
    geom = model.geometry
    header["sketch"] = (
        {"depth": geom.depth, "width": geom.width, "mode": geom.mode.value} if geom is not None else None
    )
    if model.buffer_budget is not None:
        header["buffer_budget"] = model.buffer_budget
    return header


def save_model(
    model,
    loss: LossSpec,
    path: str | Path,
    *,
    sketch_path: str | Path | None = None,
    data: dict | None = None,
) -> Path:
    """Write ``model``; ``data`` records how inputs were read (format, hash bits)."""
    path = Path(path)
    header = model_header(model, loss)
    if data is not None:
        header["data"] = data
    if sketch_path is not None and getattr(model, "sketches", None):
        header["sketch_files"] = [str(p) for p in save_sketches(model, sketch_path)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for c in range(model.classes):
            if model.classes > 1:
                fh.write(json.dumps({"class": c}) + "\n")
            entries = model.nonzero(c) if isinstance(model, FeatureHashModel) else model.top(c)
            fh.write(format_snapshot(entries))
    return path


def save_sketches(model: DenseTopKModel, path: str | Path) -> list[Path]:
    path = Path(path)
    if model.classes == 1:
        model.sketches[0].save(path)
        return [path]
    out = []
    for c, sketch in enumerate(model.sketches):
        target = path.with_name(f"{path.stem}.class{c}{path.suffix}")
        sketch.save(target)
        out.append(target)
    return out


def load_model(path: str | Path):
    """Rebuild ``(model, loss, header)`` from a model file.

    Heaps are restored exactly; a MISSION sketch is restored only when the
    header lists saved sketch files.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        lines = fh.readlines()
    if not lines:
        raise ParseError(f"{path} is empty", record=0, offset=0)
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad model header: {exc.msg}", record=0, offset=exc.pos) from None
    if header.get("format") != FORMAT:
        raise ParseError(f"{path} is not a {FORMAT} file", record=0, offset=0)
    loss = LossSpec(header["loss"], header["lr"])
    classes = header["classes"]
    algo = Algo(header["algo"])
    if algo is Algo.FH:
        model = FeatureHashModel(header["width"], classes, header["seed"])
    else:
        sk = header.get("sketch")
        geometry = SketchGeometry(sk["depth"], sk["width"], sk["mode"]) if sk else None
        model = DenseTopKModel(
            header["top_k"],
            algo,
            classes=classes,
            geometry=geometry,
            seed=header["seed"],
            heap_epsilon=header.get("heap_epsilon", 0.0),
            buffer_budget=header.get("buffer_budget"),
        )
    c = 0
    for record, line in enumerate(lines[1:], start=1):
        if not line.strip():
            continue
        if line.startswith("{"):
            c = json.loads(line)["class"]
            continue
        fid, weight = parse_snapshot_line(line, record)
        if isinstance(model, FeatureHashModel):
            model.weights[c, fid] = weight
        else:
            model.heaps[c].offer(fid, weight)
    if isinstance(model, DenseTopKModel):
        if model.buffers is not None:
            model.buffers = [h.items() for h in model.heaps]
        files = header.get("sketch_files")
        if files and model.sketches is not None:
            model.sketches = [CountSketch.load(f) for f in files]
    return model, loss, header
