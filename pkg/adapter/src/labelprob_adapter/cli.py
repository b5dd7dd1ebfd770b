"""CLI: serve a checkpoint, or build the tiny test checkpoint."""

from __future__ import annotations

import click

from .config import QUANTIZATION_MODES, AdapterConfig


@click.group()
def main() -> None:
    """Deterministic next-token label log-probabilities over HTTP."""


@main.command()
@click.option("--model", required=True, help="Checkpoint directory or model identifier.")
@click.option("--device", default="cpu", show_default=True)
@click.option("--quantization", type=click.Choice(QUANTIZATION_MODES), default="none", show_default=True)
@click.option("--max-prompt-length", type=int, default=4096, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(model: str, device: str, quantization: str, max_prompt_length: int, host: str, port: int) -> None:
    """Load the model and serve POST /v1/label_logprobs."""
    import uvicorn

    from .service import create_app_from_config

    config = AdapterConfig(
        model=model,
        device=device,
        quantization=quantization,
        max_prompt_length=max_prompt_length,
        host=host,
        port=port,
    )
    app = create_app_from_config(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")


@main.command("make-tiny-checkpoint")
@click.option("--out", required=True, type=click.Path(), help="Directory to write the checkpoint to.")
@click.option("--seed", type=int, default=0, show_default=True)
def make_tiny_checkpoint(out: str, seed: int) -> None:
    """Write a seeded random byte-level checkpoint for smoke testing."""
    from .tiny import build_tiny_checkpoint

    click.echo(str(build_tiny_checkpoint(out, seed=seed)))


if __name__ == "__main__":
    main()
