import math

import pytest

from labelprob_adapter import AdapterConfig, PromptTooLongError, UnknownLabelError

PROMPT = "Here is the question:\nWhich option is correct?\n\nAnswer:"


def post(client, prompt=PROMPT, labels=("A", "B", "C", "D")):
    return client.post("/v1/label_logprobs", json={"prompt": prompt, "labels": list(labels)})


class TestProtocol:
    def test_schema(self, client):
        response = post(client)
        assert response.status_code == 200
        body = response.json()
        assert set(body) == {"model", "logprobs"}
        assert isinstance(body["model"], str) and body["model"]
        assert len(body["logprobs"]) == 4
        assert all(isinstance(x, float) for x in body["logprobs"])

    def test_logprobs_nonpositive_and_finite(self, client):
        logprobs = post(client).json()["logprobs"]
        assert all(math.isfinite(x) and x <= 0.0 for x in logprobs)

    def test_sub_distribution(self, client):
        logprobs = post(client, labels=["A", "B", "C", "D", "E", "F"]).json()["logprobs"]
        assert sum(math.exp(x) for x in logprobs) <= 1.0 + 1e-9

    def test_deterministic_across_calls(self, client):
        first = post(client).json()
        for _ in range(3):
            assert post(client).json() == first

    def test_order_follows_request_labels(self, client):
        forward = post(client, labels=["A", "B"]).json()["logprobs"]
        backward = post(client, labels=["B", "A"]).json()["logprobs"]
        assert forward == backward[::-1]

    def test_prompt_sensitivity(self, client):
        a = post(client, prompt="Question one?\n\nAnswer:").json()["logprobs"]
        b = post(client, prompt="Question two?\n\nAnswer:").json()["logprobs"]
        assert a != b


class TestErrors:
    def test_unknown_label_names_it(self, client):
        response = post(client, labels=["A", "AB"])
        assert response.status_code == 400
        assert "'AB'" in response.json()["error"]

    def test_prompt_too_long(self, client):
        response = post(client, prompt="x" * 600)
        assert response.status_code == 400
        assert "limit" in response.json()["error"]

    def test_empty_labels(self, client):
        response = post(client, labels=[])
        assert response.status_code == 400
        assert "error" in response.json()

    def test_malformed_body_uses_error_shape(self, client):
        response = client.post("/v1/label_logprobs", json={"labels": ["A"]})
        assert response.status_code == 400
        assert "error" in response.json()


class TestScorer:
    def test_unknown_label_exception(self, scorer):
        with pytest.raises(UnknownLabelError) as excinfo:
            scorer.logprobs(PROMPT, ["ZZ"])
        assert excinfo.value.label == "ZZ"

    def test_prompt_limit_exception(self, scorer):
        with pytest.raises(PromptTooLongError):
            scorer.logprobs("y" * 600, ["A"])

    def test_label_variants_summed(self, scorer):
        # Single-byte vocab: each label has exactly one variant, so the
        # summed score equals that token's own logprob and stays <= 0.
        (value,) = scorer.logprobs(PROMPT, ["A"])
        assert value <= 0.0

    def test_health_route(self, client):
        body = client.get("/healthz").json()
        assert body["status"] == "ok"


class TestConfig:
    def test_rejects_unknown_quantization(self):
        with pytest.raises(ValueError, match="quantization"):
            AdapterConfig(model="m", quantization="8bit")

    def test_rejects_bad_port(self):
        with pytest.raises(ValueError, match="port"):
            AdapterConfig(model="m", port=0)
