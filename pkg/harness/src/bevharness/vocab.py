"""Word-level tokenizer over the dataset's closed token vocabulary.

Every whitespace-separated word in the exported samples is one vocabulary
entry; the codec's delimiter and sentinel tokens are registered as special
tokens so they can never fragment. Ids are assigned deterministically:
pad, eos, unk, then the special tokens, then the corpus words sorted.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

from tokenizers import Tokenizer
from tokenizers.models import WordLevel
from tokenizers.pre_tokenizers import WhitespaceSplit
from tokenizers.processors import TemplateProcessing
from transformers import PreTrainedTokenizerFast

PAD = "<pad>"
EOS = "</s>"
UNK = "<unk>"


def read_manifest(data_dir: str | Path) -> dict:
    return json.loads((Path(data_dir) / "manifest.json").read_text(encoding="utf-8"))


def dataset_files(data_dir: str | Path, manifest: dict) -> list[Path]:
    data = Path(data_dir)
    files = []
    for names in manifest["files"].values():
        files.extend(data / name for name in names)
    return files


def collect_words(files: Iterable[str | Path]) -> list[str]:
    """All word types appearing in the samples' input/target texts, sorted."""
    words: set[str] = set()
    for path in files:
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                record = json.loads(line)
                words.update(record["input"].split())
                words.update(record["target"].split())
    return sorted(words)


def build_tokenizer(
    words: Sequence[str], special_tokens: Sequence[str]
) -> PreTrainedTokenizerFast:
    ordered = [PAD, EOS, UNK]
    for tok in list(special_tokens) + list(words):
        if tok not in ordered:
            ordered.append(tok)
    vocab = {tok: i for i, tok in enumerate(ordered)}
    core = Tokenizer(WordLevel(vocab=vocab, unk_token=UNK))
    core.pre_tokenizer = WhitespaceSplit()
    core.post_processor = TemplateProcessing(
        single=f"$A {EOS}", special_tokens=[(EOS, vocab[EOS])]
    )
    return PreTrainedTokenizerFast(
        tokenizer_object=core,
        pad_token=PAD,
        eos_token=EOS,
        unk_token=UNK,
        additional_special_tokens=list(special_tokens),
    )


def tokenizer_for_dataset(data_dir: str | Path) -> PreTrainedTokenizerFast:
    manifest = read_manifest(data_dir)
    specials = list(manifest["special_tokens"]) + list(manifest["sentinel_tokens"])
    words = collect_words(dataset_files(data_dir, manifest))
    return build_tokenizer(words, specials)
