"""Shared fixtures: HTTP adapters, an in-thread live server, model loading."""

from __future__ import annotations

import socket
import threading
import time

import pytest
import requests
import uvicorn
from fastapi.testclient import TestClient

from embed_sidecar.app import create_app
from embed_sidecar.encoder import ModelLoadError, StubEncoder, load_encoder

DEFAULT_MAX_BATCH = 8
REAL_MODEL = "BAAI/bge-large-en-v1.5"
REAL_MODEL_SKIP = (
    "pretrained model %s not loadable in this environment "
    "(model hub unreachable / weights not cached): %s"
)


class InProcessTarget:
    """Adapter over starlette's TestClient."""

    def __init__(self, app):
        self._client = TestClient(app, raise_server_exceptions=False)

    def get_json(self, path):
        response = self._client.get(path)
        return response.status_code, response.json()

    def post_json(self, path, payload):
        response = self._client.post(path, json=payload)
        return response.status_code, response.json()

    def post_raw(self, path, raw: bytes):
        response = self._client.post(
            path, content=raw, headers={"Content-Type": "application/json"}
        )
        return response.status_code, response.json()


class LiveTarget:
    """Adapter over a real HTTP endpoint, via requests."""

    def __init__(self, base_url: str):
        self.base_url = base_url

    def get_json(self, path):
        response = requests.get(self.base_url + path, timeout=10)
        return response.status_code, response.json()

    def post_json(self, path, payload):
        response = requests.post(self.base_url + path, json=payload, timeout=30)
        return response.status_code, response.json()

    def post_raw(self, path, raw: bytes):
        response = requests.post(
            self.base_url + path,
            data=raw,
            headers={"Content-Type": "application/json"},
            timeout=10,
        )
        return response.status_code, response.json()


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


class LiveServer:
    """Uvicorn in a daemon thread, torn down after the test."""

    def __init__(self, app, port: int):
        config = uvicorn.Config(
            app, host="127.0.0.1", port=port, log_level="error", lifespan="off"
        )
        self.server = uvicorn.Server(config)
        self.base_url = f"http://127.0.0.1:{port}"
        self.thread = threading.Thread(target=self.server.run, daemon=True)

    def __enter__(self):
        self.thread.start()
        deadline = time.monotonic() + 15
        while time.monotonic() < deadline:
            try:
                requests.get(self.base_url + "/health", timeout=1)
                return self
            except requests.RequestException:
                time.sleep(0.05)
        raise RuntimeError("live server did not come up")

    def __exit__(self, *exc):
        self.server.should_exit = True
        self.thread.join(timeout=10)


@pytest.fixture
def stub_encoder():
    return StubEncoder(dimension=1024)


@pytest.fixture
def stub_target(stub_encoder):
    return InProcessTarget(create_app(stub_encoder, max_batch=DEFAULT_MAX_BATCH))


@pytest.fixture(scope="session")
def real_encoder():
    try:
        return load_encoder(REAL_MODEL)
    except ModelLoadError as exc:
        pytest.skip(REAL_MODEL_SKIP % (REAL_MODEL, exc))


@pytest.fixture
def real_target(real_encoder):
    return InProcessTarget(create_app(real_encoder, max_batch=DEFAULT_MAX_BATCH))


@pytest.fixture(params=["stub", "real"])
def any_target(request):
    """Run the shared protocol suite against both backends."""
    if request.param == "stub":
        return request.getfixturevalue("stub_target")
    return request.getfixturevalue("real_target")


@pytest.fixture
def live_stub_server(stub_encoder):
    app = create_app(stub_encoder, max_batch=DEFAULT_MAX_BATCH)
    with LiveServer(app, free_port()) as server:
        yield server
