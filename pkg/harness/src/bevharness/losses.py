"""Sequence cross-entropy over predicted token distributions."""

from __future__ import annotations

import torch


class ShapeMismatch(ValueError):
    """Distribution and gold-token shapes disagree."""


def sequence_cross_entropy(
    probs: torch.Tensor, gold: torch.Tensor, pad_id: int | None = None
) -> torch.Tensor:
    """Mean negative log-likelihood of the gold tokens.

    ``probs`` holds normalized distributions with shape (..., seq, vocab);
    ``gold`` holds token ids with shape (..., seq). Positions equal to
    ``pad_id`` are excluded from the mean. With a one-hot gold label the
    summand reduces to -log of the probability at the gold index.
    """
    if probs.dim() != gold.dim() + 1 or probs.shape[:-1] != gold.shape:
        raise ShapeMismatch(
            f"probs shape {tuple(probs.shape)} does not match gold {tuple(gold.shape)}"
        )
    if int(gold.max()) >= probs.shape[-1] or int(gold.min()) < 0:
        raise ShapeMismatch("gold ids exceed the distribution's vocabulary")
    picked = probs.gather(-1, gold.unsqueeze(-1)).squeeze(-1)
    nll = -torch.log(picked.clamp_min(1e-12))
    if pad_id is not None:
        mask = gold != pad_id
        if not bool(mask.any()):
            return nll.new_zeros(())
        return nll[mask].mean()
    return nll.mean()
