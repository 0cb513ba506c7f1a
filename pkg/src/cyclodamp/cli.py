"""Thin command-line client for the cyclodamp service.

Every subcommand builds a request, sends it to the service (an in-process
app by default, or a remote one via --server), and writes the returned
artifact bodies under the scenario's output directory.  Exit codes:
0 success, 2 configuration error, 3 numeric failure.

The worker count for threaded FFT stages is read from CYCLODAMP_THREADS.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=3600.0)
    from fastapi.testclient import TestClient

    from cyclodamp.service import app

    return TestClient(app)


def _load_raw(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        click.echo(f"config error: no such scenario file {path}", err=True)
        sys.exit(EXIT_CONFIG)
    except json.JSONDecodeError as exc:
        click.echo(f"config error: parse failure at line {exc.lineno}: {exc.msg}", err=True)
        sys.exit(EXIT_CONFIG)


def _post(client, endpoint: str, payload: dict) -> dict:
    resp = client.post(endpoint, json=payload)
    if resp.status_code == 200:
        return resp.json()
    detail = ""
    try:
        detail = json.dumps(resp.json().get("detail"), default=str)
    except Exception:
        detail = resp.text
    if resp.status_code in (400, 422):
        click.echo(f"config error: {detail}", err=True)
        sys.exit(EXIT_CONFIG)
    click.echo(f"numeric failure: {detail}", err=True)
    sys.exit(EXIT_NUMERIC)


def _write_artifacts(doc: dict, out_dir: str) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for art in doc.get("artifacts", []):
        target = out / art["path"]
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(art["text"], encoding="utf-8")
        click.echo(f"wrote {target}")


@click.group()
def main():
    """Spectral cyclotron/Landau damping toolkit."""


@main.command()
@click.argument("scenario_path")
@click.option("--server", default=None, help="remote service URL (default: in-process)")
def validate(scenario_path, server):
    """Validate a scenario file and print its normalized form."""
    raw = _load_raw(scenario_path)
    with _client(server) as client:
        doc = _post(client, "/scenarios/validate", raw)
    click.echo(doc["normalized"])
    click.echo(f"scenario-hash: {doc['scenario_hash']}", err=True)


@main.command()
@click.argument("scenario_path")
@click.option("--server", default=None, help="remote service URL (default: in-process)")
@click.option("--out", default=None, help="override the output directory")
def run(scenario_path, server, out):
    """Run a scenario and materialize its artifacts."""
    raw = _load_raw(scenario_path)
    with _client(server) as client:
        doc = _post(client, "/scenarios/run", raw)
    out_dir = out or raw.get("output", {}).get("directory", "out")
    _write_artifacts(doc, out_dir)
    click.echo(json.dumps(doc["summary"], indent=2, sort_keys=True, default=str))


def _experiment_command(name: str, endpoint: str):
    @main.command(name=name)
    @click.argument("scenario_path")
    @click.option("--server", default=None, help="remote service URL (default: in-process)")
    @click.option("--out", default=None, help="override the output directory")
    def cmd(scenario_path, server, out):
        raw = _load_raw(scenario_path)
        with _client(server) as client:
            doc = _post(client, endpoint, raw)
        out_dir = out or raw.get("output", {}).get("directory", "out")
        _write_artifacts(doc, out_dir)
        click.echo(json.dumps(doc["summary"], indent=2, sort_keys=True, default=str))

    cmd.__doc__ = f"Run a {name} scenario through the service."
    return cmd


_experiment_command("stability", "/experiments/stability")
_experiment_command("echo", "/experiments/echo")


@main.command(name="norms-suite")
@click.option("--seed", default=0, type=int)
@click.option("--samples", default=20, type=int)
@click.option("--samples-3d", default=1, type=int)
@click.option("--server", default=None)
@click.option("--out", default="out")
def norms_suite(seed, samples, samples_3d, server, out):
    """Run the norm inequality suite."""
    scenario = {
        "name": f"norms-suite-seed{seed}",
        "experiment": "norms",
        "norms": {"seed": seed, "samples": samples, "samples_3d": samples_3d},
        "output": {"directory": out},
    }
    with _client(server) as client:
        doc = _post(client, "/experiments/norms-suite", scenario)
    _write_artifacts(doc, out)
    click.echo(json.dumps(doc["summary"], indent=2, sort_keys=True, default=str))
    if not doc["summary"]["all_asserted_pass"]:
        sys.exit(EXIT_NUMERIC)


@main.command()
@click.option("--alpha", required=True, type=float)
@click.option("--gamma", "gamma_", required=True, type=float)
@click.option("--eps", required=True, type=float)
@click.option("--t-values", default="600,1200,2400,4800", help="comma-separated times")
@click.option("--no-backward", is_flag=True, default=False)
@click.option("--server", default=None)
@click.option("--out", default="out")
def moments(alpha, gamma_, eps, t_values, no_backward, server, out):
    """Evaluate echo-kernel moments."""
    scenario = {
        "name": f"moments-a{alpha}-g{gamma_}-e{eps}",
        "experiment": "moments",
        "moments": {
            "alpha": alpha,
            "gamma": gamma_,
            "eps": eps,
            "t_values": [float(x) for x in t_values.split(",")],
            "backward": not no_backward,
        },
        "output": {"directory": out},
    }
    with _client(server) as client:
        doc = _post(client, "/experiments/moments", scenario)
    _write_artifacts(doc, out)
    click.echo(json.dumps(doc["summary"], indent=2, sort_keys=True, default=str))


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
def serve(host, port):
    """Start the HTTP service."""
    import uvicorn

    uvicorn.run("cyclodamp.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
