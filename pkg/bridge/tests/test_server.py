import json
import os
import socket
import subprocess
import sys
import time
from pathlib import Path

import pytest

from todma_bridge.backend import MarkovBackend
from todma_bridge.server import handle_line, validate_request

SRC = Path(__file__).resolve().parents[1] / "src"


def backend(q=8):
    return MarkovBackend([1 / q] * q, [[1 / q] * q for _ in range(q)])


def write_model(tmp_path, q=8):
    path = tmp_path / "model.json"
    path.write_text(json.dumps({
        "q": q, "initial": [1 / q] * q, "transition": [[1 / q] * q for _ in range(q)]}))
    return path


def spawn(args, **kwargs):
    env = os.environ.copy()
    env["PYTHONPATH"] = f"{SRC}{os.pathsep}{env.get('PYTHONPATH', '')}"
    return subprocess.Popen([sys.executable, "-m", "todma_bridge", *args], env=env, **kwargs)


class TestHandleLine:
    def test_happy_path_fills_and_scores(self):
        request = {"sequence": [2, -1], "candidates": {"1": [4, 6]}, "q": 8}
        response = handle_line(json.dumps(request), backend())
        assert response["filled"] == [2, 4]
        assert response["scores"]["1"] == [1 / 8, 1 / 8]

    def test_no_masks_echoes_sequence(self):
        response = handle_line(json.dumps(
            {"sequence": [1, 2, 3], "candidates": {}, "q": 8}), backend())
        assert response["filled"] == [1, 2, 3]

    def test_malformed_json(self):
        assert "error" in handle_line("{nope", backend())

    @pytest.mark.parametrize("request_obj,needle", [
        ({"sequence": [1, 8], "candidates": {}, "q": 8}, "out of range"),
        ({"sequence": [1, -1], "candidates": {}, "q": 8}, "no candidates"),
        ({"sequence": [1, -1], "candidates": {"1": []}, "q": 8}, "nonempty"),
        ({"sequence": [1, 2], "candidates": {"1": [3]}, "q": 8}, "not masked"),
        ({"sequence": [1, -1], "candidates": {"1": [9]}, "q": 8}, "out of range"),
        ({"sequence": [1, -1], "candidates": {"9": [2]}, "q": 8}, "outside"),
        ({"sequence": [1, -1], "candidates": {"x": [2]}, "q": 8}, "slot index"),
        ({"sequence": [], "candidates": {}, "q": 8}, "nonempty"),
        ({"sequence": [1, -1], "candidates": {"1": [2]}, "q": 4}, "backend serves"),
        ({"sequence": [True, 2], "candidates": {}, "q": 8}, "out of range"),
        ({"candidates": {}, "q": 8}, "missing key"),
        ([1, 2], None),
    ])
    def test_invalid_requests_become_error_objects(self, request_obj, needle):
        response = handle_line(json.dumps(request_obj), backend())
        assert "error" in response
        if needle:
            assert needle in response["error"]


def test_validate_request_returns_int_keys():
    sequence, candidates = validate_request(
        {"sequence": [-1, 3], "candidates": {"0": [1, 2]}, "q": 8}, backend())
    assert sequence == [-1, 3]
    assert candidates == {0: [1, 2]}


class TestStdioService:
    def test_request_error_request_on_one_stream(self, tmp_path):
        model = write_model(tmp_path)
        proc = spawn(["--endpoint", "stdio", "--model", str(model)],
                     stdin=subprocess.PIPE, stdout=subprocess.PIPE)
        try:
            lines = [
                json.dumps({"sequence": [1, -1], "candidates": {"1": [2, 5]}, "q": 8}),
                "garbage",
                json.dumps({"sequence": [-1], "candidates": {"0": [7]}, "q": 8}),
            ]
            out, _ = proc.communicate(("\n".join(lines) + "\n").encode(), timeout=15)
            responses = [json.loads(l) for l in out.decode().splitlines()]
            assert responses[0]["filled"] == [1, 2]
            assert "error" in responses[1]
            assert responses[2]["filled"] == [7]  # still serving after the error
        finally:
            proc.kill()

    def test_missing_model_exits_nonzero(self):
        proc = spawn(["--endpoint", "stdio"], stderr=subprocess.PIPE, stdin=subprocess.PIPE)
        _, err = proc.communicate(timeout=15)
        assert proc.returncode != 0
        assert b"--model" in err or b"backend" in err

    def test_unreadable_model_exits_nonzero(self, tmp_path):
        proc = spawn(["--endpoint", "stdio", "--model", str(tmp_path / "missing.json")],
                     stderr=subprocess.PIPE, stdin=subprocess.PIPE)
        _, err = proc.communicate(timeout=15)
        assert proc.returncode == 1
        assert b"cannot load backend" in err

    def test_bad_endpoint_exits_nonzero(self, tmp_path):
        model = write_model(tmp_path)
        proc = spawn(["--endpoint", "nowhere", "--model", str(model)],
                     stderr=subprocess.PIPE, stdin=subprocess.PIPE)
        _, err = proc.communicate(timeout=15)
        assert proc.returncode == 2
        assert b"host:port" in err


class TestTcpService:
    @pytest.fixture
    def running_server(self, tmp_path):
        model = write_model(tmp_path)
        ready = tmp_path / "ready"
        proc = spawn(["--endpoint", "127.0.0.1:0", "--model", str(model),
                      "--ready-file", str(ready)],
                     stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
        deadline = time.time() + 10
        while not ready.exists() and time.time() < deadline:
            time.sleep(0.05)
            assert proc.poll() is None, "server died during startup"
        host, port = ready.read_text().strip().rsplit(":", 1)
        yield host, int(port)
        proc.terminate()
        proc.wait(timeout=5)

    def _roundtrip(self, sock_file, sock, obj):
        sock.sendall((json.dumps(obj) + "\n").encode())
        return json.loads(sock_file.readline())

    def test_requests_in_order_and_error_recovery(self, running_server):
        with socket.create_connection(running_server, timeout=5) as sock:
            fh = sock.makefile("rb")
            r1 = self._roundtrip(fh, sock, {"sequence": [3, -1], "candidates": {"1": [0, 5]},
                                            "q": 8})
            assert r1["filled"] == [3, 0]
            sock.sendall(b"not json at all\n")
            assert "error" in json.loads(fh.readline())
            r2 = self._roundtrip(fh, sock, {"sequence": [-1], "candidates": {"0": [2]},
                                            "q": 8})
            assert r2["filled"] == [2]

    def test_multiple_connections(self, running_server):
        for _ in range(3):
            with socket.create_connection(running_server, timeout=5) as sock:
                fh = sock.makefile("rb")
                response = self._roundtrip(fh, sock, {"sequence": [1], "candidates": {},
                                                      "q": 8})
                assert response["filled"] == [1]
