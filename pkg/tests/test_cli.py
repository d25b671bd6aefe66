import json
import os
import signal
import socket
import subprocess
import sys
import threading
import time
from wsgiref.simple_server import make_server

import pytest
import requests
from click.testing import CliRunner

from fastgate import build_app
from fastgate.cli import _QuietHandler, _ThreadingWSGIServer, main
from fastgate.config import Config, load_config_file, make_config, parse_bind
from fastgate.errors import InvalidValue
from fastgate.rest_machine import ResourceStore

# --- configuration


def test_parse_bind():
    assert parse_bind("0.0.0.0:9999") == ("0.0.0.0", 9999)
    assert parse_bind("localhost:80") == ("localhost", 80)
    for bad in ("8080", ":8080", "host:", "host:abc"):
        with pytest.raises(InvalidValue):
            parse_bind(bad)


def test_load_config_file(tmp_path):
    path = tmp_path / "conf.json"
    path.write_text('{"bind": "0.0.0.0:9000", "depth": 3}')
    assert load_config_file(str(path)) == {"bind": "0.0.0.0:9000", "depth": 3}
    path.write_text('{"bind": "x:1", "mystery": true}')
    with pytest.raises(InvalidValue, match="unknown config key"):
        load_config_file(str(path))
    path.write_text("[1, 2]")
    with pytest.raises(InvalidValue, match="must hold a JSON object"):
        load_config_file(str(path))
    path.write_text("{nope")
    with pytest.raises(InvalidValue, match="malformed JSON"):
        load_config_file(str(path))


def test_make_config_precedence():
    config = make_config(
        {"bind": "0.0.0.0:9000", "depth": 3, "packages": ["pricer"]},
        depth_limit=5,
    )
    assert (config.host, config.port) == ("0.0.0.0", 9000)
    assert config.depth_limit == 5  # explicit override beats the file
    assert config.packages == ["pricer"]
    # None overrides are "not given"
    config = make_config({"depth": 3}, depth_limit=None)
    assert config.depth_limit == 3
    assert make_config(None).depth_limit == 8


@pytest.mark.parametrize(
    "file_values",
    [
        {"bind": "host:0"},
        {"bind": "host:70000"},
        {"depth": 0},
        {"depth": "three"},
        {"depth": True},
        {"max_bytes": 100},
        {"packages": ["pricer", "mystery"]},
        {"packages": "pricer"},
        {"check_purity": "yes"},
    ],
)
def test_make_config_rejects_bad_values(file_values):
    with pytest.raises(InvalidValue):
        make_config(file_values)


def test_build_app_loads_existing_store(tmp_path):
    path = tmp_path / "store.json"
    seeded = ResourceStore()
    seeded.post_resource("/rest/books/1", {"title": "T"})
    seeded.save(str(path))
    app = build_app(Config(store_path=str(path)))
    try:
        assert app.store.get_resource("/rest/books/1") == {"title": "T"}
    finally:
        app.machine.close()


def test_build_app_with_missing_store_file_starts_empty(tmp_path):
    app = build_app(Config(store_path=str(tmp_path / "absent.json")))
    try:
        assert app.store.snapshot() == {}
    finally:
        app.machine.close()


# --- serve: configuration failures exit 1 before binding


def test_serve_rejects_bad_bind():
    result = CliRunner().invoke(main, ["serve", "--bind", "nonsense"])
    assert result.exit_code == 1
    assert "error: bind must look like host:port" in result.stderr


def test_serve_rejects_unknown_package():
    result = CliRunner().invoke(main, ["serve", "--packages", "pricer,mystery"])
    assert result.exit_code == 1
    assert "error: unknown package(s): mystery" in result.stderr


def test_serve_rejects_missing_config_file():
    result = CliRunner().invoke(main, ["serve", "--config", "/no/such/file.json"])
    assert result.exit_code == 1
    assert "error:" in result.stderr


def test_serve_reads_config_from_env(tmp_path):
    path = tmp_path / "conf.json"
    path.write_text('{"bind": "127.0.0.1:99999"}')
    result = CliRunner().invoke(main, ["serve"], env={"FAST_CONFIG": str(path)})
    assert result.exit_code == 1
    assert "bind port out of range: 99999" in result.stderr


def test_serve_flag_overrides_env_config(tmp_path):
    good = tmp_path / "good-but-broken-port.json"
    good.write_text('{"bind": "127.0.0.1:88888"}')
    result = CliRunner().invoke(
        main,
        ["serve", "--config", str(good)],
        env={"FAST_CONFIG": "/no/such/file.json"},
    )
    # the flag's file was read (its port error), not the env's missing file
    assert result.exit_code == 1
    assert "bind port out of range: 88888" in result.stderr


# --- live server helpers


@pytest.fixture(scope="module")
def live_server():
    app = build_app()
    server = make_server(
        "127.0.0.1",
        0,
        app.gateway.wsgi_app,
        server_class=_ThreadingWSGIServer,
        handler_class=_QuietHandler,
    )
    port = server.server_address[1]
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{port}", app
    server.shutdown()
    server.server_close()
    app.machine.close()


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


# --- query command


def test_query_prints_json_result(live_server):
    url, _ = live_server
    result = CliRunner().invoke(
        main,
        [
            "query",
            "Get Apply (Apply add on 2) from higher_order_arithmetic on 3",
            "--server",
            url,
        ],
    )
    assert result.exit_code == 0
    assert json.loads(result.output) == 5


def test_query_pretty_prints_structures(live_server):
    url, app = live_server
    app.store.post_resource("/rest/cli_trades", [[100, 1, 100, 0.2]])
    result = CliRunner().invoke(
        main, ["query", "Map [price] from pricer on cli_trades", "--server", url]
    )
    assert result.exit_code == 0
    assert json.loads(result.output) == pytest.approx([7.965567455405804])
    assert "\n" in result.output.strip()  # indent=2 formatting


def test_query_parse_error_exits_1(live_server):
    url, _ = live_server
    result = CliRunner().invoke(main, ["query", "Map price on", "--server", url])
    assert result.exit_code == 1
    assert "error: unexpected end of input at position 12" in result.stderr


def test_query_domain_error_exits_2(live_server):
    url, _ = live_server
    result = CliRunner().invoke(
        main,
        ["query", "Apply divide from basic_arithmetic on [1, 0]", "--server", url],
    )
    assert result.exit_code == 2
    assert "error: division by zero" in result.stderr


def test_query_unreachable_server_exits_2():
    url = f"http://127.0.0.1:{_free_port()}"
    result = CliRunner().invoke(main, ["query", "Get x", "--server", url])
    assert result.exit_code == 2
    assert "cannot reach" in result.stderr


# --- seed command


def test_seed_round_trip(live_server, tmp_path):
    url, _ = live_server
    payload = {"data": [[100, 1, 100, 0.2], [90, 0.5, 105, 0.35]]}
    path = tmp_path / "trades.json"
    path.write_text(json.dumps(payload))
    result = CliRunner().invoke(
        main, ["seed", str(path), "--uri", "books/trades", "--server", url]
    )
    assert result.exit_code == 0
    assert result.output.strip() == "seeded /rest/books/trades"
    fetched = requests.get(f"{url}/rest/books/trades", timeout=10)
    assert fetched.status_code == 200
    assert fetched.json() == payload["data"]  # envelope unwrapped on store


def test_seed_accepts_full_rest_uris(live_server, tmp_path):
    url, _ = live_server
    path = tmp_path / "value.json"
    path.write_text("42")
    result = CliRunner().invoke(
        main, ["seed", str(path), "--uri", "/rest/answers/1", "--server", url]
    )
    assert result.exit_code == 0
    assert requests.get(f"{url}/rest/answers/1", timeout=10).json() == 42


def test_seed_malformed_file_exits_1(live_server, tmp_path):
    url, _ = live_server
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    result = CliRunner().invoke(
        main, ["seed", str(path), "--uri", "x", "--server", url]
    )
    assert result.exit_code == 1
    assert "malformed JSON" in result.stderr


def test_seed_missing_file_exits_1(live_server):
    url, _ = live_server
    result = CliRunner().invoke(
        main, ["seed", "/no/such/file.json", "--uri", "x", "--server", url]
    )
    assert result.exit_code == 1


def test_seed_rejected_uri_exits_1(live_server, tmp_path):
    url, _ = live_server
    path = tmp_path / "ok.json"
    path.write_text("1")
    result = CliRunner().invoke(
        main, ["seed", str(path), "--uri", "/rest/bad{brace}", "--server", url]
    )
    assert result.exit_code == 1
    assert "error:" in result.stderr


def test_seed_unreachable_server_exits_2(tmp_path):
    path = tmp_path / "ok.json"
    path.write_text("1")
    url = f"http://127.0.0.1:{_free_port()}"
    result = CliRunner().invoke(main, ["seed", str(path), "--uri", "x", "--server", url])
    assert result.exit_code == 2


# --- the server process end to end


def test_serve_process_flushes_store_on_sigint(tmp_path):
    port = _free_port()
    store_path = tmp_path / "persisted.json"
    proc = subprocess.Popen(
        [
            sys.executable,
            "-m",
            "fastgate.cli",
            "serve",
            "--bind",
            f"127.0.0.1:{port}",
            "--store",
            str(store_path),
        ],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
    )
    try:
        base = f"http://127.0.0.1:{port}"
        deadline = time.time() + 20
        while True:
            try:
                if requests.get(f"{base}/healthz", timeout=2).status_code == 200:
                    break
            except requests.RequestException:
                if time.time() > deadline:
                    raise
                time.sleep(0.1)
        posted = requests.post(
            f"{base}/rest/books/1", json={"data": {"title": "T"}}, timeout=10
        )
        assert posted.status_code == 200
        answer = requests.get(
            f"{base}/lambda/basic_arithmetic/add?a=1&b=2", timeout=10
        )
        assert answer.status_code == 200 and answer.json() == 3
        proc.send_signal(signal.SIGINT)
        _, stderr = proc.communicate(timeout=20)
    finally:
        if proc.poll() is None:
            proc.kill()
            proc.communicate()
    assert proc.returncode == 0
    assert b"store flushed to" in stderr
    assert os.path.exists(store_path)
    reloaded = ResourceStore()
    reloaded.load(str(store_path))
    assert reloaded.get_resource("/rest/books/1") == {"title": "T"}
