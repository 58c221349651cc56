from __future__ import annotations

import random

import pytest

from bevcodec import DEFAULT_TAXONOMY, SpanTargets, aggregate, render_report, score
from bevcodec.errors import EmptyInput, SpanCountMismatch
from bevcodec.metrics import GroupMetrics

from helpers import random_cell


def targets(*spans) -> SpanTargets:
    return SpanTargets(spans=tuple(tuple(s) for s in spans))


def oracle_counts(pred: SpanTargets, gold: SpanTargets):
    """Independent hand-count: enumerate every (cell, label) instance."""
    tp = fp = fn = exact = 0
    for p_labels, g_labels in zip(pred.spans, gold.spans):
        p_set, g_set = set(p_labels), set(g_labels)
        if p_set == g_set:
            exact += 1
        universe = p_set | g_set
        for label in universe:
            if label in p_set and label in g_set:
                tp += 1
            elif label in p_set:
                fp += 1
            else:
                fn += 1
    return tp, fp, fn, exact


def oracle_metric(num, den, opposite):
    if den == 0:
        return 1.0 if opposite == 0 else 0.0
    return num / den


class TestScoreExamples:
    def test_perfect_single_cell(self):
        report = score(targets(["car"]), targets(["car"]), DEFAULT_TAXONOMY)
        assert report.accuracy == 1.0
        assert report.precision == report.recall == report.f1 == 1.0

    def test_worked_example(self):
        gold = targets(["car"], [], ["walkway", "lane"])
        pred = targets(["car"], ["car"], ["walkway"])
        report = score(pred, gold, DEFAULT_TAXONOMY)
        assert report.accuracy == pytest.approx(1 / 3)
        assert (report.tp, report.fp, report.fn) == (2, 1, 1)
        assert report.precision == pytest.approx(2 / 3)
        assert report.recall == pytest.approx(2 / 3)
        assert report.f1 == pytest.approx(2 / 3)

    def test_all_empty_convention(self):
        gold = targets([], [], [])
        pred = targets([], [], [])
        report = score(pred, gold, DEFAULT_TAXONOMY)
        assert report.accuracy == 1.0
        assert report.precision == report.recall == report.f1 == 1.0

    def test_all_misses(self):
        gold = targets(["car"], ["lane"])
        pred = targets([], [])
        report = score(pred, gold, DEFAULT_TAXONOMY)
        assert report.accuracy == 0.0
        assert report.precision == 0.0  # no predictions, but misses exist
        assert report.recall == 0.0
        assert report.f1 == 0.0

    def test_span_count_mismatch(self):
        with pytest.raises(SpanCountMismatch):
            score(targets(["car"]), targets(["car"], []), DEFAULT_TAXONOMY)

    def test_duplicates_collapse(self):
        report = score(targets(["car", "car"]), targets(["car"]), DEFAULT_TAXONOMY)
        assert report.accuracy == 1.0
        assert report.tp == 1 and report.fp == 0

    def test_kind_split_worked_example(self):
        gold = targets(["car"], [], ["walkway", "lane"])
        pred = targets(["car"], ["car"], ["walkway"])
        report = score(pred, gold, DEFAULT_TAXONOMY)
        assert (report.dynamic.tp, report.dynamic.fp, report.dynamic.fn) == (1, 1, 0)
        assert (report.static.tp, report.static.fp, report.static.fn) == (1, 0, 1)
        assert report.dynamic.support + report.static.support == report.tp + report.fn
        assert report.dynamic.precision == pytest.approx(1 / 2)
        assert report.dynamic.recall == 1.0
        assert report.static.precision == 1.0
        assert report.static.recall == pytest.approx(1 / 2)

    def test_per_class_entries(self):
        gold = targets(["car"], [], ["walkway", "lane"])
        pred = targets(["car"], ["car"], ["walkway"])
        report = score(pred, gold, DEFAULT_TAXONOMY)
        assert set(report.per_class) == {"car", "walkway", "lane"}
        assert report.per_class["lane"].support == 1
        assert report.per_class["lane"].recall == 0.0
        assert report.per_class["car"].kind == "dynamic"


class TestScoreAgainstOracle:
    def test_randomized_instances(self):
        rng = random.Random(21)
        for _ in range(50):
            n_cells = rng.randint(1, 10)
            gold = SpanTargets(spans=tuple(
                random_cell(rng, DEFAULT_TAXONOMY) if rng.random() < 0.7 else ()
                for _ in range(n_cells)
            ))
            pred = SpanTargets(spans=tuple(
                random_cell(rng, DEFAULT_TAXONOMY) if rng.random() < 0.7 else ()
                for _ in range(n_cells)
            ))
            report = score(pred, gold, DEFAULT_TAXONOMY)
            tp, fp, fn, exact = oracle_counts(pred, gold)
            assert (report.tp, report.fp, report.fn) == (tp, fp, fn)
            assert report.accuracy == exact / n_cells
            assert report.precision == oracle_metric(tp, tp + fp, fn)
            assert report.recall == oracle_metric(tp, tp + fn, fp)

    def test_swap_pred_gold_swaps_precision_recall(self):
        rng = random.Random(22)
        for _ in range(25):
            n = rng.randint(1, 8)
            a = SpanTargets(spans=tuple(
                random_cell(rng, DEFAULT_TAXONOMY) if rng.random() < 0.6 else ()
                for _ in range(n)
            ))
            b = SpanTargets(spans=tuple(
                random_cell(rng, DEFAULT_TAXONOMY) if rng.random() < 0.6 else ()
                for _ in range(n)
            ))
            ab = score(a, b, DEFAULT_TAXONOMY)
            ba = score(b, a, DEFAULT_TAXONOMY)
            assert ab.precision == ba.recall
            assert ab.recall == ba.precision
            assert ab.f1 == pytest.approx(ba.f1)
            assert ab.accuracy == ba.accuracy


class TestAggregate:
    def test_singleton_identity(self):
        report = score(targets(["car"], []), targets(["car"], ["lane"]), DEFAULT_TAXONOMY)
        assert aggregate([report]) == report

    def test_worked_counts(self):
        r1 = score(targets(["car"]), targets(["car", "lane"]), DEFAULT_TAXONOMY)
        assert (r1.tp, r1.fp, r1.fn) == (1, 0, 1)
        r2 = score(targets(["car", "adult"]), targets(["car"]), DEFAULT_TAXONOMY)
        assert (r2.tp, r2.fp, r2.fn) == (1, 1, 0)
        merged = aggregate([r1, r2])
        assert merged.precision == pytest.approx(2 / 3)
        assert merged.recall == pytest.approx(2 / 3)

    def test_order_invariance(self):
        rng = random.Random(23)
        reports = []
        for _ in range(10):
            n = rng.randint(1, 6)
            gold = SpanTargets(spans=tuple(random_cell(rng, DEFAULT_TAXONOMY) for _ in range(n)))
            pred = SpanTargets(spans=tuple(random_cell(rng, DEFAULT_TAXONOMY) for _ in range(n)))
            reports.append(score(pred, gold, DEFAULT_TAXONOMY))
        shuffled = reports[::-1]
        assert aggregate(reports) == aggregate(shuffled)

    def test_micro_law_equals_concatenated_score(self):
        rng = random.Random(24)
        per_sample = []
        all_pred = []
        all_gold = []
        for _ in range(20):
            n = rng.randint(1, 9)
            gold = [random_cell(rng, DEFAULT_TAXONOMY) if rng.random() < 0.7 else () for _ in range(n)]
            pred = [random_cell(rng, DEFAULT_TAXONOMY) if rng.random() < 0.7 else () for _ in range(n)]
            per_sample.append(
                score(SpanTargets(tuple(pred)), SpanTargets(tuple(gold)), DEFAULT_TAXONOMY)
            )
            all_pred.extend(pred)
            all_gold.extend(gold)
        combined = score(SpanTargets(tuple(all_pred)), SpanTargets(tuple(all_gold)), DEFAULT_TAXONOMY)
        assert aggregate(per_sample) == combined

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            aggregate([])


class TestRenderReport:
    def test_fixed_keys_and_rounding(self):
        import json

        gold = targets(["car"], [], ["walkway", "lane"])
        pred = targets(["car"], ["car"], ["walkway"])
        rendered = render_report(score(pred, gold, DEFAULT_TAXONOMY))
        payload = json.loads(rendered)
        assert set(payload) == {
            "accuracy", "precision", "recall", "f1", "counts",
            "dynamic", "static", "per_class",
        }
        assert payload["accuracy"] == 0.333
        assert payload["precision"] == 0.667
        assert payload["dynamic"]["support"] == 1
        assert payload["per_class"]["lane"]["recall"] == 0.0

    def test_group_metrics_support(self):
        g = GroupMetrics.from_counts(3, 1, 2)
        assert g.support == 5
