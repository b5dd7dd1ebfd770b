import pytest

from labelprob_adapter import AdapterConfig, LabelScorer, build_tiny_checkpoint, create_app, load_model


@pytest.fixture(scope="session")
def checkpoint(tmp_path_factory):
    return build_tiny_checkpoint(tmp_path_factory.mktemp("ckpt") / "tiny", seed=7)


@pytest.fixture(scope="session")
def scorer(checkpoint):
    config = AdapterConfig(model=str(checkpoint), max_prompt_length=512)
    model, tokenizer = load_model(config)
    return LabelScorer(model, tokenizer, config)


@pytest.fixture(scope="session")
def client(scorer):
    from fastapi.testclient import TestClient

    return TestClient(create_app(scorer))
