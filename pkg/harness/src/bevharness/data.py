"""Exported-sample datasets as padded id batches."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import torch
from torch.utils.data import DataLoader, Dataset
from transformers import PreTrainedTokenizerFast


@dataclass
class EncodedSample:
    sample_id: str
    input_ids: list[int]
    target_ids: list[int]


class SampleDataset(Dataset):
    """One exported JSONL sample file, tokenized once up front."""

    def __init__(
        self,
        path: str | Path,
        tokenizer: PreTrainedTokenizerFast,
        max_samples: int | None = None,
    ):
        self.samples: list[EncodedSample] = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                record = json.loads(line)
                self.samples.append(
                    EncodedSample(
                        sample_id=record["sample_id"],
                        input_ids=tokenizer(record["input"]).input_ids,
                        target_ids=tokenizer(record["target"]).input_ids,
                    )
                )
                if max_samples is not None and len(self.samples) >= max_samples:
                    break

    def __len__(self) -> int:
        return len(self.samples)

    def __getitem__(self, idx: int) -> EncodedSample:
        return self.samples[idx]


def pad_batch(rows: Sequence[Sequence[int]], pad_id: int) -> torch.Tensor:
    width = max(len(r) for r in rows)
    out = torch.full((len(rows), width), pad_id, dtype=torch.long)
    for k, row in enumerate(rows):
        out[k, : len(row)] = torch.tensor(row, dtype=torch.long)
    return out


def collate(batch: Sequence[EncodedSample], pad_id: int) -> dict:
    input_ids = pad_batch([s.input_ids for s in batch], pad_id)
    labels = pad_batch([s.target_ids for s in batch], pad_id)
    return {
        "sample_ids": [s.sample_id for s in batch],
        "input_ids": input_ids,
        "attention_mask": (input_ids != pad_id).long(),
        "labels": labels,
    }


def make_loader(
    dataset: SampleDataset,
    pad_id: int,
    batch_size: int,
    shuffle: bool,
    seed: int = 0,
) -> DataLoader:
    generator = torch.Generator()
    generator.manual_seed(seed)
    return DataLoader(
        dataset,
        batch_size=batch_size,
        shuffle=shuffle,
        generator=generator if shuffle else None,
        collate_fn=lambda batch: collate(batch, pad_id),
    )
