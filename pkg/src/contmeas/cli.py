"""Command-line client for the simulation service.

Every subcommand builds a request body and sends it to the HTTP API; by
default an in-process application instance serves it, so no server needs
to run. Point --server at a live instance to go over the network instead.
Floats in emitted files keep 17 significant digits.
"""

from __future__ import annotations

import json
import os
import sys

import click

from .presets import PRESETS
from .serialization import canonical_json, format_float


class Client:
    def __init__(self, server: str | None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=None)
        else:
            from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app())

    def post(self, path: str, payload: dict) -> dict:
        resp = self._client.post(path, json=payload)
        if resp.status_code != 200:
            try:
                body = resp.json()
            except ValueError:
                body = {"detail": resp.text}
            raise click.ClickException(
                f"{path} failed ({resp.status_code}): "
                f"{body.get('error', '')} {body.get('detail', body)}"
            )
        return resp.json()


def _load_model_arg(value: str):
    """A preset name passes through; anything else is a JSON file path."""
    if value in PRESETS:
        return value
    try:
        with open(value) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise click.ClickException(
            f"{value!r} is neither a preset ({sorted(PRESETS)}) "
            "nor a readable file"
        )
    except json.JSONDecodeError as exc:
        raise click.ClickException(f"{value}: not valid JSON ({exc})")


def _load_state_arg(value: str):
    if os.path.exists(value):
        with open(value) as fh:
            return json.load(fh)
    return value  # state token, resolved server-side


@click.group()
@click.option(
    "--server",
    default=None,
    envvar="CONTMEAS_SERVER",
    help="Base URL of a running service; default is in-process.",
)
@click.pass_context
def main(ctx, server):
    """Continuous-measurement simulation toolkit."""
    ctx.obj = Client(server)


@main.command()
@click.argument("model_file")
@click.pass_obj
def validate(client: Client, model_file: str):
    """Check a model file; exit 0 when valid, 1 otherwise."""
    body = client.post("/api/validate", {"model": _load_model_arg(model_file)})
    click.echo(canonical_json(body))
    if not body["ok"]:
        sys.exit(1)


@main.command()
@click.option("--model", "-m", required=True, help="Preset name or JSON file.")
@click.option("--state", "-s", required=True, help="State token or JSON file.")
@click.option("--tmax", "-T", type=float, required=True)
@click.option("--dt", "-d", type=float, required=True)
@click.option("--n", "-n", "n_traj", type=int, required=True)
@click.option("--seed", "-k", type=int, required=True)
@click.option("--mode", type=click.Choice(["q", "p"]), default="q")
@click.option("--out", "-o", required=True, help="Output directory.")
@click.option("--outputs", default="weight,y,entropy,linear_entropy")
@click.option("--stride", type=int, default=1)
@click.option("--workers", type=int, default=None)
@click.pass_obj
def simulate(
    client, model, state, tmax, dt, n_traj, seed, mode, out, outputs,
    stride, workers,
):
    """Run a trajectory ensemble; write CSV series and a manifest."""
    body = client.post(
        "/api/simulate",
        {
            "model": _load_model_arg(model),
            "state": _load_state_arg(state),
            "t_max": tmax,
            "dt": dt,
            "n_traj": n_traj,
            "master_seed": seed,
            "mode": mode,
            "outputs": [s.strip() for s in outputs.split(",") if s.strip()],
            "snapshot_stride": stride,
            "workers": workers,
        },
    )
    os.makedirs(out, exist_ok=True)
    csv_path = os.path.join(out, "series.csv")
    with open(csv_path, "w") as fh:
        fh.write("t,functional,mean,se\n")
        for name, column in body["series"].items():
            for t, mean, se in zip(
                body["times"], column["mean"], column["se"]
            ):
                fh.write(
                    f"{format_float(t)},{name},"
                    f"{format_float(mean)},{format_float(se)}\n"
                )
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        fh.write(canonical_json(body["manifest"]))
        fh.write("\n")
    click.echo(f"wrote {csv_path} and manifest.json ({n_traj} trajectories)")


@main.command()
@click.option("--model", "-m", required=True)
@click.option("--state", "-s", required=True)
@click.option("--k", type=float, required=True, help="Signal frequency.")
@click.option("--tmax", "-T", type=float, required=True)
@click.option("--points", type=int, default=101)
@click.option("--out", "-o", default=None, help="CSV file; default stdout.")
@click.pass_obj
def characteristic(client, model, state, k, tmax, points, out):
    """Deterministic characteristic function of the output signal."""
    body = client.post(
        "/api/characteristic",
        {
            "model": _load_model_arg(model),
            "state": _load_state_arg(state),
            "k": k,
            "t_max": tmax,
            "points": points,
        },
    )
    lines = ["t,kappa,re,im"]
    for t, re, im in zip(body["t"], body["re"], body["im"]):
        lines.append(
            f"{format_float(t)},{format_float(body['kappa'])},"
            f"{format_float(re)},{format_float(im)}"
        )
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--model", "-m", required=True)
@click.option("--state", "-s", required=True)
@click.option("--t", type=float, required=True)
@click.option("--n", "-n", "n_traj", type=int, required=True)
@click.option("--seed", "-k", type=int, required=True)
@click.option("--dt", type=float, default=1e-3)
@click.option("--workers", type=int, default=None)
@click.option("--out", "-o", default=None, help="JSON file; default stdout.")
@click.pass_obj
def report(client, model, state, t, n_traj, seed, dt, workers, out):
    """Mutual-entropy report for a state and time."""
    body = client.post(
        "/api/report",
        {
            "model": _load_model_arg(model),
            "state": _load_state_arg(state),
            "t": t,
            "n_traj": n_traj,
            "master_seed": seed,
            "dt": dt,
            "workers": workers,
        },
    )
    text = canonical_json(body) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--scale", type=click.Choice(["quick", "full"]), default="quick")
@click.option("--workers", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", "-o", default=None, help="JSON file; default stdout.")
@click.pass_obj
def selftest(client, scale, workers, seed, out):
    """Run the verification suite; exit status reflects the verdict."""
    body = client.post(
        "/api/selftest",
        {"scale": scale, "workers": workers, "seed": seed},
    )
    text = canonical_json(body) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)
    for check in body["checks"]:
        verdict = "PASS" if check["passed"] else "FAIL"
        click.echo(
            f"{verdict} {check['name']}: {check['statistic']:.3e} "
            f"<= {check['threshold']:.3e}",
            err=True,
        )
    if not body["passed"]:
        sys.exit(1)


if __name__ == "__main__":
    main()
