"""From-scratch fine-tuning loop over exported task datasets.

Minimizes token-level cross-entropy with AdamW under a linear decay
schedule (no warmup). When the dataset directory carries per-epoch
training files with fresh mask placements, epoch k trains on file k,
cycling if the run is longer than the materialized epochs.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

import torch
from torch.optim import AdamW
from torch.optim.lr_scheduler import LambdaLR

from .data import SampleDataset, make_loader
from .losses import sequence_cross_entropy
from .model import build_model, shift_right
from .vocab import build_tokenizer, collect_words, dataset_files, read_manifest


@dataclass
class TrainConfig:
    data_dir: str
    out_dir: str
    preset: str = "tiny"
    learning_rate: float = 1e-4
    batch_size: int = 4
    epochs: int = 3
    seed: int = 0
    max_samples: int | None = None
    dropout_rate: float = 0.1
    special_tokens: tuple[str, ...] | None = None  # default: manifest vocabulary
    log_every: int = 200

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


def train(config: TrainConfig) -> Path:
    """Train a model on the dataset's train split; returns the checkpoint dir."""
    data = Path(config.data_dir)
    manifest = read_manifest(data)
    if config.special_tokens is not None:
        specials = list(config.special_tokens)
    else:
        specials = list(manifest["special_tokens"]) + list(manifest["sentinel_tokens"])
    words = collect_words(dataset_files(data, manifest))
    tokenizer = build_tokenizer(words, specials)
    pad_id = tokenizer.pad_token_id

    torch.manual_seed(config.seed)
    random.seed(config.seed)
    model = build_model(
        vocab_size=len(tokenizer),
        preset=config.preset,
        pad_id=pad_id,
        eos_id=tokenizer.eos_token_id,
        seed=config.seed,
        dropout_rate=config.dropout_rate,
    )
    model.train()

    train_files = manifest["files"]["train"]
    datasets: dict[str, SampleDataset] = {}

    def dataset_for(epoch: int) -> SampleDataset:
        name = train_files[epoch % len(train_files)]
        if name not in datasets:
            datasets[name] = SampleDataset(data / name, tokenizer, config.max_samples)
        return datasets[name]

    steps_per_epoch = math.ceil(len(dataset_for(0)) / config.batch_size)
    total_steps = max(1, steps_per_epoch * config.epochs)
    optimizer = AdamW(model.parameters(), lr=config.learning_rate)
    scheduler = LambdaLR(optimizer, lambda step: max(0.0, 1.0 - step / total_steps))

    first_batch_loss: float | None = None
    epoch_losses: list[float] = []
    step = 0
    for epoch in range(config.epochs):
        loader = make_loader(
            dataset_for(epoch), pad_id, config.batch_size,
            shuffle=True, seed=config.seed * 1000003 + epoch,
        )
        running = 0.0
        batches = 0
        for batch in loader:
            optimizer.zero_grad()
            decoder_input_ids = shift_right(batch["labels"], pad_id)
            logits = model(
                input_ids=batch["input_ids"],
                attention_mask=batch["attention_mask"],
                decoder_input_ids=decoder_input_ids,
            ).logits
            loss = sequence_cross_entropy(
                torch.softmax(logits, dim=-1), batch["labels"], pad_id=pad_id
            )
            loss.backward()
            torch.nn.utils.clip_grad_norm_(model.parameters(), 1.0)
            optimizer.step()
            scheduler.step()
            value = float(loss.detach())
            if first_batch_loss is None:
                first_batch_loss = value
            running += value
            batches += 1
            step += 1
            if config.log_every and step % config.log_every == 0:
                print(f"step {step}/{total_steps} loss {running / batches:.4f}")
        epoch_losses.append(running / max(1, batches))
        print(f"epoch {epoch}: mean loss {epoch_losses[-1]:.4f}")

    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out)
    tokenizer.save_pretrained(out)
    metrics = {
        "first_batch_loss": first_batch_loss,
        "epoch_losses": epoch_losses,
        "total_steps": step,
        "preset": config.preset,
        "seed": config.seed,
        "learning_rate": config.learning_rate,
        "batch_size": config.batch_size,
        "train_files": train_files,
    }
    (out / "train_metrics.json").write_text(
        json.dumps(metrics, indent=2) + "\n", encoding="utf-8"
    )
    return out
