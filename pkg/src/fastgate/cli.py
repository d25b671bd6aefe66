"""Operator entry point: serve the gateway, run queries, seed resources.

Exit codes: 0 success, 1 client or input error, 2 server or transport
error.
"""

from __future__ import annotations

import json
import os
import sys
from socketserver import ThreadingMixIn
from wsgiref.simple_server import WSGIRequestHandler, WSGIServer, make_server

import click
import requests

from .config import ENV_CONFIG, build_app, load_config_file, make_config, parse_bind
from .errors import FastError
from .values import loads_strict

DEFAULT_SERVER = "http://127.0.0.1:8080"


class _ThreadingWSGIServer(ThreadingMixIn, WSGIServer):
    daemon_threads = True


class _QuietHandler(WSGIRequestHandler):
    def log_message(self, format, *args):  # per-request noise off
        pass


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main():
    """A resource store and a pure-function engine behind one HTTP API."""


@main.command()
@click.option("--bind", default=None, metavar="HOST:PORT", help="Listen address.")
@click.option(
    "--packages", default=None, metavar="A,B", help="Builtin packages to enable."
)
@click.option(
    "--store", "store_path", default=None, metavar="FILE", help="Persist resources here."
)
@click.option("--depth", default=None, type=int, help="Template nesting limit.")
@click.option("--max-bytes", default=None, type=int, help="Payload size limit.")
@click.option(
    "--check-purity", is_flag=True, default=False, help="Evaluate twice and compare."
)
@click.option(
    "--config",
    "config_path",
    default=None,
    metavar="FILE",
    help=f"JSON config file (or ${ENV_CONFIG}).",
)
def serve(bind, packages, store_path, depth, max_bytes, check_purity, config_path):
    """Run the gateway until interrupted."""
    try:
        file_values = None
        path = config_path or os.environ.get(ENV_CONFIG)
        if path:
            file_values = load_config_file(path)
        overrides = {}
        if bind is not None:
            overrides["host"], overrides["port"] = parse_bind(bind)
        if packages is not None:
            overrides["packages"] = [p.strip() for p in packages.split(",") if p.strip()]
        config = make_config(
            file_values,
            store_path=store_path,
            depth_limit=depth,
            max_bytes=max_bytes,
            check_purity=True if check_purity else None,
            **overrides,
        )
        bundle = build_app(config)
    except (FastError, OSError) as exc:
        _fail(str(getattr(exc, "message", exc)), 1)
    try:
        server = make_server(
            config.host,
            config.port,
            bundle.gateway.wsgi_app,
            server_class=_ThreadingWSGIServer,
            handler_class=_QuietHandler,
        )
    except OSError as exc:
        _fail(f"cannot bind {config.host}:{config.port}: {exc}", 1)
    click.echo(f"serving on http://{config.host}:{config.port}", err=True)
    click.echo(f"packages: {', '.join(bundle.machine.packages())}", err=True)
    if config.store_path:
        click.echo(f"store file: {config.store_path}", err=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        click.echo("shutting down", err=True)
    finally:
        server.server_close()
        if config.store_path:
            bundle.store.save(config.store_path)
            click.echo(f"store flushed to {config.store_path}", err=True)
        bundle.machine.close()


@main.command()
@click.argument("text")
@click.option("--server", default=DEFAULT_SERVER, metavar="URL", show_default=True)
def query(text, server):
    """Send a query-language string and print the JSON result."""
    url = server.rstrip("/") + "/query"
    try:
        response = requests.post(url, json={"q": text}, timeout=60)
    except requests.RequestException as exc:
        _fail(f"cannot reach {server}: {exc}", 2)
    try:
        payload = response.json()
    except ValueError:
        _fail(f"non-JSON response (HTTP {response.status_code})", 2)
    if response.status_code == 200:
        click.echo(json.dumps(payload, indent=2))
        return
    message = payload.get("message") if isinstance(payload, dict) else None
    _fail(
        message or f"HTTP {response.status_code}",
        1 if 400 <= response.status_code < 500 else 2,
    )


@main.command()
@click.argument("file", type=click.Path())
@click.option("--server", default=DEFAULT_SERVER, metavar="URL", show_default=True)
@click.option("--uri", required=True, metavar="/rest/...", help="Target resource URI.")
def seed(file, server, uri):
    """POST a JSON file's value to a resource URI."""
    try:
        with open(file, "r", encoding="utf-8") as fh:
            value = loads_strict(fh.read(), what=file)
    except OSError as exc:
        _fail(str(exc), 1)
    except FastError as exc:
        _fail(exc.message, 1)
    if not uri.startswith("/"):
        uri = "/" + uri
    if not uri.startswith("/rest/"):
        uri = "/rest" + uri
    try:
        response = requests.post(server.rstrip("/") + uri, json=value, timeout=60)
    except requests.RequestException as exc:
        _fail(f"cannot reach {server}: {exc}", 2)
    try:
        payload = response.json()
    except ValueError:
        _fail(f"non-JSON response (HTTP {response.status_code})", 2)
    if response.status_code == 200 and isinstance(payload, dict) and (
        payload.get("status") == "success"
    ):
        click.echo(f"seeded {uri}")
        return
    message = payload.get("message") if isinstance(payload, dict) else None
    _fail(
        message or f"HTTP {response.status_code}",
        1 if 400 <= response.status_code < 500 else 2,
    )


if __name__ == "__main__":
    main()
