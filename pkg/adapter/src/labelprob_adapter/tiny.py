"""Build a tiny random-weight checkpoint for smoke tests and CI.

The tokenizer is byte-level BPE with no merges: every byte is one token, so
any ASCII label is a single vocabulary token and any prompt round-trips. The
model is a seeded random GPT-2 a few thousand parameters large; useless for
language, ideal for exercising the scoring protocol deterministically.
"""

from __future__ import annotations

from pathlib import Path

EOS = "<|endoftext|>"


def _byte_alphabet() -> dict[str, int]:
    # The standard byte-level BPE alphabet: printable bytes map to
    # themselves, the rest to remapped codepoints above 255.
    visible = (
        list(range(ord("!"), ord("~") + 1))
        + list(range(0xA1, 0xAC + 1))
        + list(range(0xAE, 0xFF + 1))
    )
    mapping = {}
    fill = 0
    for byte in range(256):
        if byte in visible:
            mapping[chr(byte)] = byte
        else:
            mapping[chr(256 + fill)] = byte
            fill += 1
    return mapping


def build_tiny_checkpoint(
    path: str | Path,
    seed: int = 0,
    n_embd: int = 32,
    n_layer: int = 2,
    n_head: int = 2,
    n_positions: int = 2048,
) -> Path:
    import torch
    from tokenizers import Tokenizer, decoders, models, pre_tokenizers
    from transformers import GPT2Config, GPT2LMHeadModel, PreTrainedTokenizerFast

    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)

    vocab = _byte_alphabet()
    vocab[EOS] = 256
    core = Tokenizer(models.BPE(vocab=vocab, merges=[]))
    core.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False)
    core.decoder = decoders.ByteLevel()
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=core, eos_token=EOS, bos_token=EOS, unk_token=EOS
    )

    torch.manual_seed(seed)
    config = GPT2Config(
        vocab_size=len(vocab),
        n_positions=n_positions,
        n_embd=n_embd,
        n_layer=n_layer,
        n_head=n_head,
        bos_token_id=vocab[EOS],
        eos_token_id=vocab[EOS],
    )
    model = GPT2LMHeadModel(config)
    model.save_pretrained(path)
    tokenizer.save_pretrained(path)
    return path
