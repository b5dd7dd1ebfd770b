"""Forced-decoding label scorer.

One forward pass computes the next-token distribution after the prompt; each
requested label gets the natural log of the summed probability of every
vocabulary token whose decoded text equals the label after stripping leading
whitespace. Tokenizers disagree on whether letters carry a leading-space
marker, so summing the whitespace variants keeps results comparable across
checkpoints. Sampling is never involved; repeated calls are bit-identical.
"""

from __future__ import annotations

import threading

import torch

from .config import AdapterConfig


class ScoringError(ValueError):
    """Request cannot be scored; maps to HTTP 400."""


class UnknownLabelError(ScoringError):
    def __init__(self, label: str):
        super().__init__(f"label {label!r} maps to no vocabulary token")
        self.label = label


class PromptTooLongError(ScoringError):
    def __init__(self, n_tokens: int, limit: int):
        super().__init__(f"prompt is {n_tokens} tokens; the limit is {limit}")


def load_model(config: AdapterConfig):
    from transformers import AutoModelForCausalLM, AutoTokenizer

    kwargs = {}
    if config.quantization == "half":
        kwargs["torch_dtype"] = torch.float16
    elif config.quantization == "4bit":
        try:
            from transformers import BitsAndBytesConfig
        except ImportError as exc:  # pragma: no cover - depends on install
            raise ValueError("4bit quantization needs the bitsandbytes extras") from exc
        kwargs["quantization_config"] = BitsAndBytesConfig(load_in_4bit=True)
    tokenizer = AutoTokenizer.from_pretrained(config.model)
    model = AutoModelForCausalLM.from_pretrained(config.model, **kwargs)
    model.to(config.device)
    model.eval()
    return model, tokenizer


class LabelScorer:
    """Wraps a loaded causal LM; inference is serialized on a lock."""

    def __init__(self, model, tokenizer, config: AdapterConfig):
        self.model = model
        self.tokenizer = tokenizer
        self.config = config
        self.model_name = getattr(model.config, "name_or_path", None) or config.model
        self._lock = threading.Lock()
        self._label_index = self._build_label_index()

    def _build_label_index(self) -> dict[str, list[int]]:
        # One vocab scan at startup; maps decoded-and-lstripped token text to
        # the token ids that realize it. Only short strings are indexed: the
        # protocol scores answer labels, not phrases.
        index: dict[str, list[int]] = {}
        vocab_size = int(self.model.config.vocab_size)
        for token_id in range(vocab_size):
            text = self.tokenizer.decode([token_id])
            key = text.lstrip()
            if key and len(key) <= 8:
                index.setdefault(key, []).append(token_id)
        return index

    def logprobs(self, prompt: str, labels: list[str]) -> list[float]:
        if not labels:
            raise ScoringError("at least one label is required")
        token_ids = [self._label_index.get(label) for label in labels]
        for label, ids in zip(labels, token_ids):
            if not ids:
                raise UnknownLabelError(label)

        encoded = self.tokenizer(prompt, return_tensors="pt")["input_ids"]
        n_tokens = int(encoded.shape[-1])
        if n_tokens == 0:
            raise ScoringError("prompt tokenized to zero tokens")
        if n_tokens > self.config.max_prompt_length:
            raise PromptTooLongError(n_tokens, self.config.max_prompt_length)

        with self._lock, torch.no_grad():
            logits = self.model(encoded.to(self.config.device)).logits[0, -1]
        log_dist = torch.log_softmax(logits.float(), dim=-1)
        return [float(torch.logsumexp(log_dist[ids], dim=0)) for ids in token_ids]
