"""Command-line client of the experiment service.

By default every subcommand talks to an in-process instance of the service
(no network involved); ``--server URL`` targets a running instance instead.
Exit codes: 0 success, 1 configuration error, 2 numerical or saturation
error, 3 artifact I/O error.
"""

from __future__ import annotations

import asyncio
import sys

import click
import httpx

_EXIT_CODES = {"config": 1, "numerical": 2, "io": 3, "internal": 2}


class ServiceClient:
    """Sends requests either to a remote service or through the ASGI app in-process."""

    def __init__(self, server: str | None):
        self._server = server

    def request(self, method: str, path: str, payload: dict | None) -> httpx.Response:
        if self._server:
            with httpx.Client(base_url=self._server, timeout=None) as client:
                return client.request(method, path, json=payload)
        from .service.app import create_app

        async def go():
            transport = httpx.ASGITransport(app=create_app(), raise_app_exceptions=False)
            async with httpx.AsyncClient(
                transport=transport, base_url="http://activegp.local", timeout=None
            ) as client:
                return await client.request(method, path, json=payload)

        return asyncio.run(go())


def make_client(server: str | None) -> ServiceClient:
    return ServiceClient(server)


def _call(client: ServiceClient, method: str, path: str, payload: dict | None = None) -> dict:
    response = client.request(method, path, payload)
    try:
        data = response.json()
    except ValueError:
        click.echo(f"error (io): non-JSON response from service: {response.text[:200]}", err=True)
        sys.exit(3)
    if response.status_code != 200:
        kind = data.get("error_kind", "internal")
        click.echo(f"error ({kind}): {data.get('message', 'unknown error')}", err=True)
        sys.exit(_EXIT_CODES.get(kind, 2))
    return data


def _parse_overrides(pairs) -> dict[str, int]:
    overrides = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise click.UsageError(f"--seed-override expects k=v, got {pair!r}")
        try:
            overrides[key] = int(value)
        except ValueError:
            raise click.UsageError(f"seed override {key!r} needs an integer, got {value!r}")
    return overrides


def _echo_diag(diag: dict | None):
    if diag:
        click.echo(
            "final diagnostics: "
            f"iteration={diag['iteration']} "
            f"E_approx={diag['e_approx']:.4g} E_true={diag['e_true']:.4g} "
            f"R={diag['r_measure']:.4g}"
        )


@click.group()
@click.option("--server", default=None, metavar="URL", help="Remote service URL (default: run in-process).")
@click.pass_context
def cli(ctx, server):
    """Iterative GP surrogate training for Bayesian posteriors."""
    ctx.obj = make_client(server)


config_opt = click.option("--config", required=True, metavar="NAME|PATH", help="Packaged config name, config file, or manifest.")
seed_opt = click.option("--seed-override", "seed_overrides", multiple=True, metavar="K=V", help="Override a [seeds] entry (repeatable).")
out_opt = click.option("--out", default=None, metavar="DIR", help="Artifact directory (default: derived from config hash).")
dir_arg = click.option("--dir", "artifact_dir", required=True, metavar="DIR", help="Existing artifact directory.")


@cli.command()
@config_opt
@seed_opt
@out_opt
@click.pass_obj
def run(client, config, seed_overrides, out):
    """Run the full pipeline: data, prior, training, samples, grid."""
    payload = {"config": config, "seed_overrides": _parse_overrides(seed_overrides), "out_dir": out}
    data = _call(client, "POST", "/run", payload)
    click.echo(f"artifacts: {data['artifact_dir']}")
    click.echo(f"s2={data['s2']:.6g} iterations={data['n_iterations']}")
    if data.get("halt_reason"):
        click.echo(f"halted early: {data['halt_reason']}")
    _echo_diag(data.get("final_diagnostics"))


@cli.command("gen-data")
@config_opt
@seed_opt
@out_opt
@click.pass_obj
def gen_data(client, config, seed_overrides, out):
    """Generate only the synthetic observations."""
    payload = {"config": config, "seed_overrides": _parse_overrides(seed_overrides), "out_dir": out}
    data = _call(client, "POST", "/gen-data", payload)
    click.echo(f"artifacts: {data['artifact_dir']}")


@cli.command("build-prior")
@dir_arg
@click.pass_obj
def build_prior(client, artifact_dir):
    """Build the Gaussian prior from a preliminary true-posterior chain."""
    data = _call(client, "POST", "/build-prior", {"artifact_dir": artifact_dir})
    click.echo(f"prior built; s2={data['s2']:.6g}")


@cli.command()
@dir_arg
@click.pass_obj
def train(client, artifact_dir):
    """Initialize the GP and run the sequential training loop."""
    data = _call(client, "POST", "/train", {"artifact_dir": artifact_dir})
    click.echo(f"trained {data['n_iterations']} iterations")
    if data.get("halt_reason"):
        click.echo(f"halted early: {data['halt_reason']}")
    _echo_diag(data.get("final_diagnostics"))


@cli.command()
@dir_arg
@click.option("--seed", type=int, default=None, help="Override the derived diagnostics seed.")
@click.pass_obj
def diagnose(client, artifact_dir, seed):
    """Re-run accuracy diagnostics on a saved surrogate."""
    data = _call(client, "POST", "/diagnose", {"artifact_dir": artifact_dir, "seed": seed})
    _echo_diag(data["record"])


@cli.command()
@dir_arg
@click.option("--surface", type=click.Choice(["true", "surrogate"]), required=True)
@click.option("--sweeps", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out-name", default=None, help="CSV filename inside the artifact directory.")
@click.pass_obj
def sample(client, artifact_dir, surface, sweeps, seed, out_name):
    """Sample either posterior surface to a chain CSV."""
    payload = {
        "artifact_dir": artifact_dir,
        "surface": surface,
        "sweeps": sweeps,
        "seed": seed,
        "out_name": out_name,
    }
    data = _call(client, "POST", "/sample", payload)
    click.echo(f"samples: {data['csv_path']}")


@cli.command()
@click.pass_obj
def configs(client):
    """List the packaged study configurations."""
    data = _call(client, "GET", "/configs")
    for name in data["configs"]:
        click.echo(name)


def main():
    try:
        cli(standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)


if __name__ == "__main__":
    main()
