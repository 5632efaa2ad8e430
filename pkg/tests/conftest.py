import json
import os
import sys
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=300, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


# -- a JSON-RPC node serving eth_getCode ------------------------------------------------
# 0x11..11 has code, 0x22..22 has none, 0x33..33 answers with an RPC error.

class _Node(BaseHTTPRequestHandler):
    codes = {"0x" + "11" * 20: "0x6001600055", "0x" + "22" * 20: "0x"}

    def do_POST(self):
        req = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        addr = req["params"][0]
        if addr == "0x" + "33" * 20:
            body = {"jsonrpc": "2.0", "id": req["id"], "error": {"code": -32000, "message": "boom"}}
        else:
            assert req["method"] == "eth_getCode" and req["params"][1] == "latest"
            body = {"jsonrpc": "2.0", "id": req["id"], "result": self.codes.get(addr, "0x")}
        data = json.dumps(body).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture(scope="session")
def node():
    srv = HTTPServer(("127.0.0.1", 0), _Node)
    t = threading.Thread(target=srv.serve_forever, daemon=True)
    t.start()
    yield f"http://127.0.0.1:{srv.server_address[1]}"
    srv.shutdown()


def pytest_terminal_summary(terminalreporter):
    acc = sys.modules.get("test_acceptance")
    if acc is None or not acc.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for i in sorted(acc.RESULTS):
        terminalreporter.write_line(acc.line(i))
