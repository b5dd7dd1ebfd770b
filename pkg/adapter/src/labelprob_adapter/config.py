"""Service configuration."""

from __future__ import annotations

from dataclasses import dataclass

QUANTIZATION_MODES = ("none", "half", "4bit")


@dataclass(frozen=True)
class AdapterConfig:
    model: str
    device: str = "cpu"
    quantization: str = "none"
    max_prompt_length: int = 4096
    host: str = "127.0.0.1"
    port: int = 8000

    def __post_init__(self) -> None:
        if self.quantization not in QUANTIZATION_MODES:
            raise ValueError(
                f"quantization must be one of {QUANTIZATION_MODES}, got {self.quantization!r}"
            )
        if not 0 < self.port < 65536:
            raise ValueError(f"invalid port {self.port}")
        if self.max_prompt_length < 1:
            raise ValueError("max_prompt_length must be >= 1")
