"""Command-line client.

Every command is a request to the HTTP service: ``--server URL`` targets a
running instance, otherwise the app is served in-process.
"""

from __future__ import annotations

import csv
import json
import sys
import warnings
from pathlib import Path

import click
import httpx


def _client(server: str | None):
    if server:
        return httpx.Client(base_url=server, timeout=None)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app())


def _call(ctx: click.Context, path: str, payload: dict) -> dict:
    client = ctx.obj["client"]
    try:
        resp = client.post(path, json=payload)
    except httpx.HTTPError as exc:
        raise click.ClickException(f"request to {path} failed: {exc}") from None
    body = resp.json()
    if resp.status_code >= 400:
        if not isinstance(body, dict):
            raise click.ClickException(f"HTTP {resp.status_code}: {body}")
        raise click.ClickException(f"{body.get('error', resp.status_code)}: {body.get('detail', body)}")
    return body


def _lines(pairs: dict) -> None:
    for key, value in pairs.items():
        click.echo(f"{key}={value}")


@click.group()
@click.option("--server", envvar="SKETCHSEL_SERVER", default=None, help="service URL; in-process when omitted")
@click.pass_context
def main(ctx: click.Context, server: str | None) -> None:
    """Sparse feature selection with sketched gradients."""
    ctx.ensure_object(dict)
    ctx.obj["client"] = _client(server)


@main.command("train")
@click.option("--algo", type=click.Choice(["mission", "iht", "batch-iht", "fh"]), default="mission")
@click.option("--loss", type=click.Choice(["squared", "logistic", "hinge", "xent"]), default="logistic")
@click.option("--top-k", type=int, default=1000)
@click.option("--sketch-depth", type=int, default=5)
@click.option("--sketch-width", type=int, default=1 << 16, help="counters per row; hash-array width for fh")
@click.option("--sketch-mode", type=click.Choice(["standard", "identity"]), default="standard")
@click.option("--lr", type=float, default=0.1)
@click.option("--epochs", type=int, default=1)
@click.option("--classes", type=int, default=1)
@click.option("--batch-size", type=int, default=1)
@click.option("--buffer-budget", type=int, default=None, help="batch-iht buffer size (default 4k)")
@click.option("--heap-epsilon", type=float, default=0.0)
@click.option("--shuffle-seed", type=int, default=None)
@click.option("--seed", type=int, default=0)
@click.option("--data", required=True)
@click.option("--format", "fmt", type=click.Choice(["libsvm", "tokens"]), default="libsvm")
@click.option("--hash-bits", type=int, default=20)
@click.option("--model-out", default=None)
@click.option("--sketch-out", default=None, help="also save the sketch counters here")
@click.pass_context
def train_cmd(ctx, fmt, **opts):
    """Train a model and optionally save it."""
    payload = {k: v for k, v in opts.items() if v is not None}
    payload["format"] = fmt
    body = _call(ctx, "/train", payload)
    out = {"model_id": body["model_id"], "algo": body["algo"], "steps": body["steps"],
           "active_features": body["active_features"], "seconds": round(body["seconds"], 3)}
    for e in body["epochs"]:
        out[f"loss_epoch{e['epoch'] + 1}"] = e["loss"]
    if body.get("model_path"):
        out["model_path"] = body["model_path"]
    _lines(out)


@main.command("eval")
@click.option("--metric", type=click.Choice(["auc", "ap", "acc"]), multiple=True, required=True)
@click.option("--model", "model_ref", required=True)
@click.option("--data", required=True)
@click.option("--format", "fmt", type=click.Choice(["libsvm", "tokens"]), default=None)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None, help="append results as CSV")
@click.pass_context
def eval_cmd(ctx, metric, model_ref, data, fmt, csv_path):
    """Evaluate a saved model; prints ``name=value`` lines."""
    results = []
    for m in metric:
        payload = {"metric": m, "model": model_ref, "data": data}
        if fmt:
            payload["format"] = fmt
        results.append(_call(ctx, "/eval", payload))
    for r in results:
        click.echo(f"{r['metric']}={r['value']!r}")
    click.echo(f"samples={results[0]['samples']}")
    if csv_path:
        new = not Path(csv_path).exists()
        with open(csv_path, "a", newline="") as fh:
            writer = csv.writer(fh)
            if new:
                writer.writerow(["model", "data", "metric", "value", "samples", "positives"])
            for r in results:
                writer.writerow([model_ref, data, r["metric"], r["value"], r["samples"], r["positives"]])


@main.command("experiment")
@click.argument("kind", type=click.Choice(["phase", "attenuation", "memory", "tradeoff", "convergence"]))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.pass_context
def experiment_cmd(ctx, kind, config_path, out):
    """Run a synthetic study; writes ``<kind>.csv`` and ``<kind>.manifest.json``."""
    config = json.loads(Path(config_path).read_text()) if config_path else {}
    body = _call(ctx, "/experiments", {"kind": kind, "config": config, "out": str(Path(out).resolve())})
    _lines({"kind": body["kind"], "rows": body["rows"], "csv": body["csv_path"],
            "manifest": body["manifest_path"], "seconds": round(body["seconds"], 2)})
    click.echo(json.dumps(body["summary"], indent=2, sort_keys=True))


@main.command("serve")
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve_cmd(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
