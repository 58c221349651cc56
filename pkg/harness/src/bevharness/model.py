"""Seq2seq model presets built on the T5 architecture.

The hub is not assumed reachable: presets are randomly initialized configs
sized for desk-scale runs, trained from scratch on the closed dataset
vocabulary. ``pretrained`` may point at a local checkpoint directory.
"""

from __future__ import annotations

import torch
from transformers import T5Config, T5ForConditionalGeneration

PRESETS: dict[str, dict] = {
    "tiny": dict(d_model=128, d_ff=512, d_kv=32, num_heads=4,
                 num_layers=2, num_decoder_layers=2),
    "small": dict(d_model=256, d_ff=1024, d_kv=64, num_heads=4,
                  num_layers=4, num_decoder_layers=4),
    "base": dict(d_model=512, d_ff=2048, d_kv=64, num_heads=8,
                 num_layers=6, num_decoder_layers=6),
}


def build_model(
    vocab_size: int,
    preset: str,
    pad_id: int,
    eos_id: int,
    seed: int = 0,
    dropout_rate: float = 0.1,
) -> T5ForConditionalGeneration:
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    config = T5Config(
        vocab_size=vocab_size,
        pad_token_id=pad_id,
        eos_token_id=eos_id,
        decoder_start_token_id=pad_id,
        dropout_rate=dropout_rate,
        **PRESETS[preset],
    )
    torch.manual_seed(seed)
    return T5ForConditionalGeneration(config)


def shift_right(labels: torch.Tensor, pad_id: int) -> torch.Tensor:
    """Decoder inputs: labels shifted one step right behind the start token."""
    shifted = labels.new_full(labels.shape, pad_id)
    shifted[:, 1:] = labels[:, :-1]
    return shifted
