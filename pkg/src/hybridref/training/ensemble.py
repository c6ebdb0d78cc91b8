"""Majority voting over the last k epochs of recorded predictions."""

from __future__ import annotations

from collections import Counter
from typing import Sequence

import numpy as np

from hybridref.errors import DataError


def ensemble_vote(epoch_predictions: Sequence[dict[str, list[float]]],
                  window: int = 6) -> list[dict]:
    """Vote over the last `window` epochs of per-instance score vectors.

    Each epoch maps instance id -> candidate scores; the per-epoch prediction
    is the argmax. The majority candidate wins; vote ties fall back to the
    higher mean score across the window (then the lower candidate index).
    Returns one record per instance: id, prediction, votes, mean_scores.
    """
    if not epoch_predictions:
        raise DataError("ensemble_vote: no recorded epochs")
    if window < 1:
        raise DataError("ensemble_vote: window must be >= 1")
    recent = list(epoch_predictions[-window:])
    ids = list(recent[0].keys())
    id_set = set(ids)
    for i, epoch in enumerate(recent):
        if set(epoch.keys()) != id_set:
            raise DataError(f"ensemble_vote: epoch {i} covers a different instance set")
        for inst_id in ids:
            if len(epoch[inst_id]) != len(recent[0][inst_id]):
                raise DataError(f"ensemble_vote: candidate count changed for {inst_id!r}")

    records = []
    for inst_id in ids:
        votes = Counter(int(np.argmax(epoch[inst_id])) for epoch in recent)
        mean_scores = np.mean([epoch[inst_id] for epoch in recent], axis=0)
        top = max(votes.values())
        tied = [cand for cand, n in votes.items() if n == top]
        winner = min(tied, key=lambda cand: (-mean_scores[cand], cand))
        records.append({
            "id": inst_id,
            "prediction": winner,
            "votes": {str(c): int(n) for c, n in sorted(votes.items())},
            "mean_scores": [float(s) for s in mean_scores],
        })
    return records


def predictions_from_records(records: list[dict]) -> dict[str, int]:
    return {r["id"]: r["prediction"] for r in records}
