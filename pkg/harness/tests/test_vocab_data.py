from __future__ import annotations

import torch

from bevharness.data import SampleDataset, collate, make_loader
from bevharness.vocab import (
    EOS,
    PAD,
    build_tokenizer,
    collect_words,
    dataset_files,
    read_manifest,
    tokenizer_for_dataset,
)


class TestTokenizer:
    def test_special_tokens_are_atomic(self, mini_dataset):
        tok = tokenizer_for_dataset(mini_dataset)
        for special in ("<extra_id_0>", "<col_sep>", "<scene_start>", "<empty>"):
            ids = tok(special).input_ids
            assert len(ids) == 2  # the token plus eos
            assert tok.convert_ids_to_tokens(ids[:1]) == [special]

    def test_round_trip_sample_text(self, mini_dataset):
        tok = tokenizer_for_dataset(mini_dataset)
        text = "<country> US <dist> 4.8 <orientation_diff> 0 <scene_start> lane <col_sep> <extra_id_0>"
        ids = tok(text).input_ids
        assert ids[-1] == tok.eos_token_id
        words = tok.convert_ids_to_tokens(ids[:-1])
        assert " ".join(words) == text

    def test_deterministic_ids(self, mini_dataset):
        a = tokenizer_for_dataset(mini_dataset)
        b = tokenizer_for_dataset(mini_dataset)
        assert a.get_vocab() == b.get_vocab()
        assert a.get_vocab()[PAD] == 0
        assert a.get_vocab()[EOS] == 1

    def test_collect_words_sorted_types(self, mini_dataset):
        manifest = read_manifest(mini_dataset)
        words = collect_words(dataset_files(mini_dataset, manifest))
        assert words == sorted(set(words))
        assert "lane" in words and "4.8" in words

    def test_unknown_word_maps_to_unk(self, mini_dataset):
        tok = tokenizer_for_dataset(mini_dataset)
        ids = tok("zeppelin").input_ids
        assert ids[0] == tok.unk_token_id


class TestDataset:
    def test_shapes_and_ids(self, mini_dataset):
        tok = tokenizer_for_dataset(mini_dataset)
        ds = SampleDataset(mini_dataset / "train.jsonl", tok)
        assert len(ds) == 24
        sample = ds[0]
        assert sample.sample_id.startswith("scene-object:")
        assert sample.input_ids[-1] == tok.eos_token_id
        assert sample.target_ids[-1] == tok.eos_token_id

    def test_max_samples(self, mini_dataset):
        tok = tokenizer_for_dataset(mini_dataset)
        ds = SampleDataset(mini_dataset / "train.jsonl", tok, max_samples=5)
        assert len(ds) == 5

    def test_collate_padding_and_mask(self, mini_dataset):
        tok = tokenizer_for_dataset(mini_dataset)
        ds = SampleDataset(mini_dataset / "train.jsonl", tok)
        batch = collate([ds[0], ds[1], ds[2]], tok.pad_token_id)
        assert batch["input_ids"].shape == batch["attention_mask"].shape
        lengths = [len(ds[k].input_ids) for k in range(3)]
        assert batch["input_ids"].shape[1] == max(lengths)
        for k, n in enumerate(lengths):
            assert batch["attention_mask"][k, :n].all()
            assert not batch["attention_mask"][k, n:].any()
            assert (batch["input_ids"][k, n:] == tok.pad_token_id).all()

    def test_loader_order_deterministic(self, mini_dataset):
        tok = tokenizer_for_dataset(mini_dataset)
        ds = SampleDataset(mini_dataset / "train.jsonl", tok)

        def first_ids(seed):
            loader = make_loader(ds, tok.pad_token_id, 4, shuffle=True, seed=seed)
            return [tuple(b["sample_ids"]) for b in loader]

        assert first_ids(3) == first_ids(3)
        assert first_ids(3) != first_ids(4)
