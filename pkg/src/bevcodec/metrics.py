"""Multi-label scoring of predicted spans against gold spans.

Each span is a label set for one masked cell. Instances are (cell, label)
pairs: a label in both sets is a true positive, predicted-only a false
positive, gold-only a false negative. The empty token denotes the empty set,
not a label. Accuracy is the fraction of cells whose predicted set equals
the gold set exactly (empty == empty counts).

Headline precision/recall/F1 are micro-averaged over instances; per-class
and static/dynamic views reuse the same counts filtered by label or kind.
A metric whose denominator is zero is 1.0 when the opposite error count is
also zero, else 0.0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .codec import SpanTargets
from .errors import EmptyInput, SpanCountMismatch
from .scene import Taxonomy


def _ratio(num: int, den: int, opposite: int) -> float:
    if den == 0:
        return 1.0 if opposite == 0 else 0.0
    return num / den


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class GroupMetrics:
    """Instance counts and derived metrics for one label or label group.

    ``kind`` is set on per-label entries (static/dynamic) and None on
    aggregate groups.
    """

    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    kind: str | None = None

    @property
    def support(self) -> int:
        """Gold instance count for the group."""
        return self.tp + self.fn

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int, kind: str | None = None) -> "GroupMetrics":
        precision = _ratio(tp, tp + fp, fn)
        recall = _ratio(tp, tp + fn, fp)
        return cls(
            tp=tp, fp=fp, fn=fn,
            precision=precision, recall=recall, f1=_f1(precision, recall),
            kind=kind,
        )


@dataclass(frozen=True)
class MetricsReport:
    """Scores plus the raw counts they derive from (so reports can be merged)."""

    cells: int
    exact: int
    tp: int
    fp: int
    fn: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    per_class: Mapping[str, GroupMetrics]
    dynamic: GroupMetrics
    static: GroupMetrics


def _build_report(
    cells: int,
    exact: int,
    label_counts: Mapping[str, tuple[int, int, int]],
    kind_of: Mapping[str, str],
) -> MetricsReport:
    tp = fp = fn = 0
    kind_totals = {"static": [0, 0, 0], "dynamic": [0, 0, 0]}
    per_class = {}
    for label in sorted(label_counts):
        ltp, lfp, lfn = label_counts[label]
        kind = kind_of[label]
        per_class[label] = GroupMetrics.from_counts(ltp, lfp, lfn, kind=kind)
        tp += ltp
        fp += lfp
        fn += lfn
        bucket = kind_totals[kind]
        bucket[0] += ltp
        bucket[1] += lfp
        bucket[2] += lfn
    precision = _ratio(tp, tp + fp, fn)
    recall = _ratio(tp, tp + fn, fp)
    return MetricsReport(
        cells=cells,
        exact=exact,
        tp=tp,
        fp=fp,
        fn=fn,
        accuracy=_ratio(exact, cells, 0),
        precision=precision,
        recall=recall,
        f1=_f1(precision, recall),
        per_class=per_class,
        dynamic=GroupMetrics.from_counts(*kind_totals["dynamic"]),
        static=GroupMetrics.from_counts(*kind_totals["static"]),
    )


def score(pred: SpanTargets, gold: SpanTargets, taxonomy: Taxonomy) -> MetricsReport:
    """Score one sample's predicted spans against its gold spans."""
    if len(pred) != len(gold):
        raise SpanCountMismatch(
            f"prediction has {len(pred)} spans but gold has {len(gold)}"
        )
    cells = len(gold)
    exact = 0
    label_counts: dict[str, list[int]] = {}
    kind_of: dict[str, str] = {}

    def bucket(label: str) -> list[int]:
        counts = label_counts.get(label)
        if counts is None:
            counts = label_counts[label] = [0, 0, 0]
            kind_of[label] = taxonomy.kind(label)
        return counts

    for pred_labels, gold_labels in zip(pred.spans, gold.spans):
        pred_set = set(pred_labels)
        gold_set = set(gold_labels)
        if pred_set == gold_set:
            exact += 1
        for label in pred_set & gold_set:
            bucket(label)[0] += 1
        for label in pred_set - gold_set:
            bucket(label)[1] += 1
        for label in gold_set - pred_set:
            bucket(label)[2] += 1

    return _build_report(
        cells, exact, {k: tuple(v) for k, v in label_counts.items()}, kind_of
    )


def score_corpus(
    pairs: Iterable[tuple[SpanTargets, SpanTargets]], taxonomy: Taxonomy
) -> MetricsReport:
    """Score many (pred, gold) samples and merge into one report."""
    return aggregate([score(pred, gold, taxonomy) for pred, gold in pairs])


def aggregate(reports: Sequence[MetricsReport]) -> MetricsReport:
    """Merge reports by summing raw counts and recomputing every metric.

    Micro aggregation: ratios are never averaged, so the result equals a
    single score over the concatenation of all spans.
    """
    if not reports:
        raise EmptyInput("cannot aggregate zero reports")
    cells = sum(r.cells for r in reports)
    exact = sum(r.exact for r in reports)
    label_counts: dict[str, list[int]] = {}
    kind_of: dict[str, str] = {}
    for report in reports:
        for label, group in report.per_class.items():
            counts = label_counts.setdefault(label, [0, 0, 0])
            counts[0] += group.tp
            counts[1] += group.fp
            counts[2] += group.fn
            if group.kind is not None:
                kind_of[label] = group.kind
    return _build_report(
        cells, exact, {k: tuple(v) for k, v in label_counts.items()}, kind_of
    )


def render_report(report: MetricsReport, *, per_class: bool = True) -> str:
    """Render a report as JSON with 3-decimal metric formatting."""

    def fmt(x: float) -> float:
        return round(x, 3)

    def group(g: GroupMetrics) -> dict:
        return {
            "precision": fmt(g.precision),
            "recall": fmt(g.recall),
            "f1": fmt(g.f1),
            "support": g.support,
        }

    payload: dict = {
        "accuracy": fmt(report.accuracy),
        "precision": fmt(report.precision),
        "recall": fmt(report.recall),
        "f1": fmt(report.f1),
        "counts": {
            "cells": report.cells,
            "exact": report.exact,
            "tp": report.tp,
            "fp": report.fp,
            "fn": report.fn,
        },
        "dynamic": group(report.dynamic),
        "static": group(report.static),
    }
    if per_class:
        payload["per_class"] = {label: group(g) for label, g in report.per_class.items()}
    return json.dumps(payload, indent=2)
