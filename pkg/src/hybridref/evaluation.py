"""Ranking and classification evaluation, threshold scanning, and the
ablation accuracy table."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from hybridref.data.instances import Instance
from hybridref.data.tokenizer import Vocab
from hybridref.errors import ConfigError, DataError
from hybridref.model import HybridModel, ScoreMode, score_instance


@dataclass
class EvalReport:
    formulation: str                 # "ranking" | "classification"
    accuracy: float
    n_instances: int
    threshold: Optional[float] = None
    records: list[dict] = field(default_factory=list)
    n_skipped: int = 0

    def to_dict(self) -> dict:
        return {
            "formulation": self.formulation,
            "accuracy": self.accuracy,
            "n_instances": self.n_instances,
            "threshold": self.threshold,
            "n_skipped": self.n_skipped,
            "records": self.records,
        }


def score_matrix(model: HybridModel, vocab: Vocab, instances: Sequence[Instance],
                 mode: ScoreMode = ScoreMode.FULL) -> dict[str, list[float]]:
    """Combined score per candidate for every instance, keyed by instance id."""
    out: dict[str, list[float]] = {}
    for inst in instances:
        if inst.id in out:
            raise DataError(f"duplicate instance id {inst.id!r}")
        out[inst.id] = [
            score_instance(model, vocab, inst, i, mode).combined
            for i in range(len(inst.candidates))
        ]
    return out


def ranking_prediction(scores: Sequence[float]) -> int:
    """Argmax with ties broken by the lowest candidate index."""
    return int(np.argmax(np.asarray(scores)))


def eval_ranking(model: HybridModel, vocab: Vocab, instances: Sequence[Instance],
                 mode: ScoreMode = ScoreMode.FULL,
                 scores: Optional[dict[str, list[float]]] = None) -> EvalReport:
    """Pick the top-scored candidate per instance; accuracy against the positive.

    Instances without a positive label or with fewer than two candidates are
    skipped and counted. Precomputed `scores` (from score_matrix) are reused
    when given.
    """
    if scores is None:
        scores = score_matrix(model, vocab, instances, mode)
    records = []
    correct = 0
    skipped = 0
    for inst in instances:
        gold = inst.positive_index()
        if gold is None or len(inst.candidates) < 2:
            skipped += 1
            continue
        vec = scores[inst.id]
        pred = ranking_prediction(vec)
        correct += int(pred == gold)
        records.append({"id": inst.id, "scores": vec, "prediction": pred, "gold": gold})
    n = len(records)
    return EvalReport(
        formulation="ranking",
        accuracy=correct / n if n else 0.0,
        n_instances=n,
        records=records,
        n_skipped=skipped,
    )


def scan_threshold(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """Exhaustively best dev threshold for `predict 1 iff score >= threshold`.

    Candidates are -inf, +inf, and midpoints between adjacent distinct sorted
    scores; ties prefer the smallest threshold. A single-class input degrades
    to a boundary threshold with a warning.
    """
    if len(scores) != len(labels) or not scores:
        raise DataError("scan_threshold needs matching, nonempty scores and labels")
    labels = [bool(b) for b in labels]
    if len(set(labels)) < 2:
        warnings.warn("scan_threshold: single-class labels, threshold is degenerate", RuntimeWarning)
    order = np.argsort(np.asarray(scores), kind="stable")
    s_sorted = [float(scores[i]) for i in order]
    l_sorted = [labels[i] for i in order]
    n = len(s_sorted)
    n_pos = sum(l_sorted)

    best_threshold = -math.inf
    best_correct = n_pos  # -inf labels everything 1
    correct = n_pos
    i = 0
    while i < n:
        j = i
        while j < n and s_sorted[j] == s_sorted[i]:
            correct += -1 if l_sorted[j] else 1
            j += 1
        threshold = math.inf if j == n else 0.5 * (s_sorted[i] + s_sorted[j])
        if correct > best_correct:
            best_correct = correct
            best_threshold = threshold
        i = j
    return best_threshold


def _binary_stream(model: HybridModel, vocab: Vocab, instances: Sequence[Instance],
                   mode: ScoreMode) -> tuple[list[dict], int]:
    """(records, skipped): one record per candidate with a known binary label."""
    records = []
    skipped = 0
    scores = score_matrix(model, vocab, instances, mode)
    for inst in instances:
        for i, cand in enumerate(inst.candidates):
            if cand.label == "unknown":
                skipped += 1
                continue
            records.append({
                "id": inst.id,
                "candidate_index": i,
                "score": scores[inst.id][i],
                "label": int(cand.label == "positive"),
            })
    return records, skipped


def eval_classification(model: HybridModel, vocab: Vocab, dev: Sequence[Instance],
                        test: Sequence[Instance],
                        mode: ScoreMode = ScoreMode.FULL) -> EvalReport:
    """Fit the threshold on dev candidates, apply it to test candidates."""
    dev_records, _ = _binary_stream(model, vocab, dev, mode)
    if not dev_records:
        raise DataError("eval_classification: no labeled dev candidates")
    threshold = scan_threshold([r["score"] for r in dev_records],
                               [bool(r["label"]) for r in dev_records])
    test_records, skipped = _binary_stream(model, vocab, test, mode)
    if not test_records:
        raise DataError("eval_classification: no labeled test candidates")
    correct = 0
    for r in test_records:
        r["prediction"] = int(r["score"] >= threshold)
        correct += int(r["prediction"] == r["label"])
    return EvalReport(
        formulation="classification",
        accuracy=correct / len(test_records),
        n_instances=len(test_records),
        threshold=threshold,
        records=test_records,
        n_skipped=skipped,
    )


def formulation_comparison(model: HybridModel, vocab: Vocab, dev: Sequence[Instance],
                           test: Sequence[Instance],
                           mode: ScoreMode = ScoreMode.FULL) -> dict:
    """Ranking vs. classification accuracy for one model on a dev/test split."""
    ranking = eval_ranking(model, vocab, test, mode)
    classification = eval_classification(model, vocab, dev, test, mode)
    return {
        "ranking": {"accuracy": ranking.accuracy, "n": ranking.n_instances},
        "classification": {
            "accuracy": classification.accuracy,
            "n": classification.n_instances,
            "threshold": classification.threshold,
        },
    }


ABLATION_VARIANTS = ("full", "no_ssm", "no_mlm", "no_rank")

_VARIANT_MODES = {
    "full": ScoreMode.FULL,
    "no_ssm": ScoreMode.MLM_ONLY,
    "no_mlm": ScoreMode.SSM_ONLY,
    "no_rank": ScoreMode.FULL,
}


def ablation_matrix(train_instances, dev_instances, eval_corpora: dict[str, list[Instance]],
                    encoder_config, train_config, variants=ABLATION_VARIANTS) -> dict:
    """Train every ablation variant with the same seed/corpus, tabulate accuracy.

    `eval_corpora` maps column names to instance lists; each cell is ranking
    accuracy of the variant's selected model on that corpus.
    """
    from hybridref.training.loop import train  # local import, training depends on this module

    rows = []
    for variant in variants:
        if variant not in ABLATION_VARIANTS:
            raise ConfigError(f"unknown ablation variant {variant!r}")
        cfg = train_config.with_ablation(variant)
        result = train(train_instances, dev_instances, encoder_config, cfg)
        mode = _VARIANT_MODES[variant]
        accuracies = {
            name: eval_ranking(result.model, result.vocab, corpus, mode).accuracy
            for name, corpus in eval_corpora.items()
        }
        rows.append({"variant": variant, "accuracies": accuracies})
    return {"columns": list(eval_corpora), "rows": rows}


def ablation_matrix_markdown(table: dict) -> str:
    cols = table["columns"]
    lines = ["| variant | " + " | ".join(cols) + " |",
             "|---" * (len(cols) + 1) + "|"]
    for row in table["rows"]:
        cells = " | ".join(f"{row['accuracies'][c]:.3f}" for c in cols)
        lines.append(f"| {row['variant']} | {cells} |")
    return "\n".join(lines) + "\n"
