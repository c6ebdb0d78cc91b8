"""Independent reference implementations used only by tests.

Everything here is deliberately written with explicit Python loops and
math.* scalar functions so it shares no code path with the package.
"""

import math

import numpy as np


def mlm_probability_oracle(logits: np.ndarray, targets) -> float:
    """Geometric mean of per-row softmax probabilities at the target columns."""
    total_log = 0.0
    for k in range(len(targets)):
        row = logits[k]
        m = row[0]
        for v in row[1:]:
            if v > m:
                m = v
        z = 0.0
        for v in row:
            z += math.exp(v - m)
        p = math.exp(row[targets[k]] - m) / z
        total_log += math.log(p)
    return math.exp(total_log / len(targets))


def ssm_probability_oracle(hidden: np.ndarray, w1: np.ndarray, w2: np.ndarray,
                           cls_position: int, candidate_positions, pronoun_position: int):
    """(probability, pooling weights) via explicit dense loops."""
    d = hidden.shape[1]
    s = hidden[cls_position]
    raw = []
    for pos in candidate_positions:
        h = hidden[pos]
        acc = 0.0
        for i in range(d):
            for j in range(d):
                acc += s[i] * w1[i, j] * h[j]
        raw.append(acc / math.sqrt(d))
    m = max(raw)
    exps = [math.exp(v - m) for v in raw]
    z = sum(exps)
    alphas = [e / z for e in exps]
    pooled = [0.0] * d
    for weight, pos in zip(alphas, candidate_positions):
        for j in range(d):
            pooled[j] += weight * hidden[pos][j]
    p = hidden[pronoun_position]
    sim = 0.0
    for i in range(d):
        for j in range(d):
            sim += p[i] * w2[i, j] * pooled[j]
    return 1.0 / (1.0 + math.exp(-sim)), alphas


def lcs_bruteforce(a, b):
    """All-pairs scan: longest run, ties by earliest b start then a start."""
    al = [t.casefold() for t in a]
    bl = [t.casefold() for t in b]
    best_len, best_b, best_a = 0, 0, 0
    for i in range(len(al)):
        for j in range(len(bl)):
            length = 0
            while i + length < len(al) and j + length < len(bl) and al[i + length] == bl[j + length]:
                length += 1
            if length > best_len or (
                length == best_len and length > 0 and (j, i) < (best_b, best_a)
            ):
                best_len, best_a, best_b = length, i, j
    return best_a, best_b, best_len
