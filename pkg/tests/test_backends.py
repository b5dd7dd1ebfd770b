import json
import math
import subprocess
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from helpers import make_items
from ragcal import (
    BackendError,
    BackendId,
    Mixture,
    Position,
    RemoteBackend,
    ScenarioSpec,
    SchemaError,
    SyntheticBackend,
    SyntheticConfig,
    TransportError,
    http_score,
    normalize,
    render_prompt,
    score_options,
    synth_score,
)


def scenario(mixture=Mixture.ANS1, position=Position.PRE_Q, seed=0):
    if mixture is Mixture.NONE:
        return ScenarioSpec.baseline(seed)
    return ScenarioSpec(mixture, position, seed)


class TestSyntheticScore:
    def test_flat_without_docs(self):
        item = make_items(1)[0]
        config = SyntheticConfig()
        v = synth_score(config, item, scenario(Mixture.NONE), answer_doc_present=False)
        assert v == [0.0, 0.0, 0.0, 0.0]

    def test_gold_boost_with_answer_doc(self):
        item = make_items(3)[2]  # gold_index == 2
        config = SyntheticConfig(relevance_sensitivity=math.log(9))
        v = synth_score(config, item, scenario(), answer_doc_present=True)
        assert v == [0.0, 0.0, math.log(9), 0.0]
        p = normalize(v)
        assert abs(p[2] - 0.75) < 1e-12

    def test_zero_relevance_identical_across_mixtures(self):
        item = make_items(1)[0]
        config = SyntheticConfig(base_knowledge=0.4, distractor_noise=1.0, seed=3)
        values = {
            mixture: synth_score(
                config,
                item,
                scenario(mixture) if mixture is not Mixture.NONE else scenario(Mixture.NONE),
                answer_doc_present=mixture.needs_rationale,
            )
            for mixture in Mixture
        }
        reference = values[Mixture.NONE]
        assert all(v == reference for v in values.values())

    def test_positions_share_noise(self):
        item = make_items(1)[0]
        config = SyntheticConfig(distractor_noise=1.0, seed=3)
        draws = [
            synth_score(config, item, scenario(Mixture.OTH3, pos), answer_doc_present=False)
            for pos in (Position.PRE_Q, Position.AFT_Q, Position.AFT_C)
        ]
        assert draws[0] == draws[1] == draws[2]

    def test_noise_varies_by_item_and_label(self):
        items = make_items(2)
        config = SyntheticConfig(distractor_noise=1.0, seed=3)
        a = synth_score(config, items[0], scenario(Mixture.NONE), answer_doc_present=False)
        b = synth_score(config, items[1], scenario(Mixture.NONE), answer_doc_present=False)
        assert a != b
        assert len(set(a)) > 1

    def test_deterministic_across_processes(self):
        item = make_items(1)[0]
        config = SyntheticConfig(base_knowledge=0.2, relevance_sensitivity=1.5, distractor_noise=0.7, seed=11)
        here = synth_score(config, item, scenario(), answer_doc_present=True)
        code = (
            "import json;"
            "from ragcal import SyntheticConfig, ScenarioSpec, Mixture, Position, synth_score;"
            "import sys; sys.path.insert(0, 'tests');"
            "from helpers import make_items;"
            "item = make_items(1)[0];"
            "config = SyntheticConfig(base_knowledge=0.2, relevance_sensitivity=1.5, distractor_noise=0.7, seed=11);"
            "sc = ScenarioSpec(Mixture.ANS1, Position.PRE_Q, 0);"
            "print(json.dumps(synth_score(config, item, sc, answer_doc_present=True)))"
        )
        out = subprocess.run(
            [sys.executable, "-c", code], capture_output=True, text=True, check=True, cwd="."
        )
        assert json.loads(out.stdout) == here

    def test_negative_noise_rejected(self):
        with pytest.raises(ValueError):
            SyntheticConfig(distractor_noise=-0.1)


class TestSyntheticBackend:
    def test_score_options_via_prompt(self):
        items = make_items(4)
        backend = SyntheticBackend(SyntheticConfig(relevance_sensitivity=2.0), items)
        prompt = render_prompt(items[1], [], Position.NONE, scenario=scenario(Mixture.NONE))
        assert score_options(backend, prompt) == [0.0, 0.0, 0.0, 0.0]

    def test_unknown_item_rejected(self):
        items = make_items(2)
        backend = SyntheticBackend(SyntheticConfig(), items[:1])
        prompt = render_prompt(items[1], [], Position.NONE, scenario=scenario(Mixture.NONE))
        with pytest.raises(BackendError, match="knows no item"):
            backend.score_options(prompt)

    def test_name_stable_for_equal_config(self):
        items = make_items(1)
        a = SyntheticBackend(SyntheticConfig(seed=5), items)
        b = SyntheticBackend(SyntheticConfig(seed=5), items)
        c = SyntheticBackend(SyntheticConfig(seed=6), items)
        assert a.id == b.id
        assert a.id != c.id

    def test_backend_id_requires_name(self):
        with pytest.raises(ValueError):
            BackendId(kind="synthetic", name="")


class _StubHandler(BaseHTTPRequestHandler):
    behavior = "echo"
    fail_once_state = {"failed": False}
    seen: list[dict] = []

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        type(self).seen.append({"path": self.path, "body": body, "auth": self.headers.get("Authorization")})
        behavior = type(self).behavior
        if behavior == "fail-once" and not self.fail_once_state["failed"]:
            self.fail_once_state["failed"] = True
            self.send_response(503)
            self.end_headers()
            return
        if behavior == "reject":
            payload = json.dumps({"error": "prompt too long"}).encode()
            self.send_response(400)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)
            return
        labels = body["labels"]
        if behavior == "truncate":
            logprobs = [-0.5] * (len(labels) - 1)
        else:
            # deterministic scores derived from the request itself
            logprobs = [-(i + 1) * 0.25 - (len(body["prompt"]) % 7) * 0.01 for i in range(len(labels))]
        payload = json.dumps({"model": "stub-model", "logprobs": logprobs}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):  # quiet test output
        pass


@pytest.fixture
def stub_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _StubHandler.behavior = "echo"
    _StubHandler.fail_once_state = {"failed": False}
    _StubHandler.seen = []
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()


class TestHttpScore:
    def test_protocol_echo(self, stub_server):
        v = http_score(stub_server, "prompt text...Answer:", ["A", "B", "C"], retries=0)
        assert len(v) == 3
        assert all(isinstance(x, float) for x in v)
        assert _StubHandler.seen[0]["path"] == "/v1/label_logprobs"
        assert _StubHandler.seen[0]["body"] == {"prompt": "prompt text...Answer:", "labels": ["A", "B", "C"]}

    def test_identical_requests_identical_responses(self, stub_server):
        a = http_score(stub_server, "same prompt", ["A", "B"], retries=0)
        b = http_score(stub_server, "same prompt", ["A", "B"], retries=0)
        assert a == b

    def test_missing_label_names_it(self, stub_server):
        _StubHandler.behavior = "truncate"
        with pytest.raises(SchemaError, match=r"missing scores for \['D'\]"):
            http_score(stub_server, "p", ["A", "B", "C", "D"], retries=0)

    def test_rejection_surfaces_adapter_error(self, stub_server):
        _StubHandler.behavior = "reject"
        with pytest.raises(BackendError, match="prompt too long"):
            http_score(stub_server, "p", ["A"], retries=0)

    def test_dead_endpoint_names_endpoint(self):
        with pytest.raises(TransportError, match="127.0.0.1:9"):
            http_score("http://127.0.0.1:9", "p", ["A"], retries=0, timeout=2)

    def test_retries_after_transient_failure(self, stub_server):
        _StubHandler.behavior = "fail-once"
        v = http_score(stub_server, "p", ["A", "B"], retries=2, backoff=0.01)
        assert len(v) == 2

    def test_auth_token_sent(self, stub_server, monkeypatch):
        monkeypatch.setenv("RAGCAL_API_TOKEN", "sekret")
        http_score(stub_server, "p", ["A"], retries=0)
        assert _StubHandler.seen[0]["auth"] == "Bearer sekret"


class TestRemoteBackend:
    def test_scores_prompt(self, stub_server):
        items = make_items(1)
        backend = RemoteBackend(stub_server, model="stub-model", retries=0)
        assert backend.id == BackendId(kind="remote", name="stub-model")
        prompt = render_prompt(items[0], [], Position.NONE, scenario=scenario(Mixture.NONE))
        v = score_options(backend, prompt)
        assert len(v) == len(prompt.labels)

    def test_name_derived_from_endpoint_when_no_model(self):
        backend = RemoteBackend("http://host:8000/", retries=0)
        assert backend.id.kind == "remote"
        assert "host" in backend.id.name


class TestScoreOptionsWrapper:
    class _BadBackend:
        id = BackendId(kind="synthetic", name="bad")

        def __init__(self, v):
            self._v = v

        def score_options(self, prompt):
            return self._v

    def _prompt(self):
        items = make_items(1)
        return render_prompt(items[0], [], Position.NONE, scenario=scenario(Mixture.NONE))

    def test_length_mismatch(self):
        with pytest.raises(BackendError, match="3 scores for 4 labels"):
            score_options(self._BadBackend([0.0, 0.0, 0.0]), self._prompt())

    def test_non_finite(self):
        with pytest.raises(BackendError, match="non-finite"):
            score_options(self._BadBackend([0.0, float("nan"), 0.0, 0.0]), self._prompt())
