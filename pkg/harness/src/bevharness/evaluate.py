"""Greedy prediction over a dataset split, written as a predictions TSV."""

from __future__ import annotations

from pathlib import Path

import torch
from transformers import PreTrainedTokenizerFast, T5ForConditionalGeneration

from .data import SampleDataset, make_loader
from .vocab import read_manifest

# Generous bounds on generated span text per task.
MAX_NEW_TOKENS = {"scene-object": 96, "next-scene": 720}


def load_checkpoint(ckpt_dir: str | Path):
    ckpt = Path(ckpt_dir)
    tokenizer = PreTrainedTokenizerFast.from_pretrained(ckpt)
    model = T5ForConditionalGeneration.from_pretrained(ckpt)
    model.eval()
    return tokenizer, model


def decode_tokens(tokenizer: PreTrainedTokenizerFast, ids) -> str:
    drop = {tokenizer.pad_token_id, tokenizer.eos_token_id}
    tokens = tokenizer.convert_ids_to_tokens([i for i in ids if i not in drop])
    return " ".join(tokens)


def predict(
    ckpt_dir: str | Path,
    data_dir: str | Path,
    split: str,
    out_path: str | Path,
    batch_size: int = 8,
    max_new_tokens: int | None = None,
) -> int:
    """Generate predictions for every sample of a split; returns the count."""
    tokenizer, model = load_checkpoint(ckpt_dir)
    data = Path(data_dir)
    manifest = read_manifest(data)
    if max_new_tokens is None:
        max_new_tokens = MAX_NEW_TOKENS.get(manifest["task"], 96)
    dataset = SampleDataset(data / f"{split}.jsonl", tokenizer)
    loader = make_loader(dataset, tokenizer.pad_token_id, batch_size, shuffle=False)

    written = 0
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh, torch.no_grad():
        for batch in loader:
            generated = model.generate(
                input_ids=batch["input_ids"],
                attention_mask=batch["attention_mask"],
                max_new_tokens=max_new_tokens,
                num_beams=1,
                do_sample=False,
            )
            for sample_id, ids in zip(batch["sample_ids"], generated.tolist()):
                fh.write(f"{sample_id}\t{decode_tokens(tokenizer, ids)}\n")
                written += 1
    return written
