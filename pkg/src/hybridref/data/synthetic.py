"""Seeded synthetic pronoun-resolution corpus.

Sentences follow "<agent> <verb> <patient> because it was <adjective>." where
every noun owns one characteristic adjective and the pronoun refers to the
adjective's owner ("the lion chased the rabbit because it was fluffy." ->
the rabbit). Half the instances use "the <noun>" candidates (two tokens),
half bare nouns (one token). Splits are disjoint by construction: every
instance comes from a distinct (template, agent, patient, verb, side)
combination.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hybridref.data.instances import Candidate, Instance, Pronoun
from hybridref.errors import ConfigError

NOUN_TRAITS = {
    "lion": "maned",
    "tiger": "striped",
    "rabbit": "fluffy",
    "horse": "hoofed",
    "eagle": "feathered",
    "shark": "finned",
    "wolf": "howling",
    "panda": "plump",
    "otter": "sleek",
    "camel": "humped",
    "falcon": "swift",
    "badger": "burrowing",
    "bison": "shaggy",
    "weasel": "slender",
    "heron": "wading",
    "moose": "antlered",
}
NOUNS = tuple(NOUN_TRAITS)
VERBS = ("chased", "followed")


@dataclass(frozen=True)
class SynthConfig:
    n_train: int = 200
    n_dev: int = 50
    n_test: int = 0
    seed: int = 0

    def __post_init__(self):
        if min(self.n_train, self.n_dev, self.n_test) < 0 or self.n_train == 0:
            raise ConfigError("synthetic corpus sizes must be nonnegative with n_train > 0")


def _all_combos() -> list[tuple[int, str, str, str, int]]:
    combos = []
    for article in (0, 1):
        for a in NOUNS:
            for b in NOUNS:
                if a == b:
                    continue
                for v in VERBS:
                    for referent_side in (0, 1):  # 0 = agent owns the trait
                        combos.append((article, a, b, v, referent_side))
    return combos


def _make_instance(idx: str, combo: tuple[int, str, str, str, int]) -> Instance:
    article, a, b, verb, referent_side = combo
    np_a = f"the {a}" if article else a
    np_b = f"the {b}" if article else b
    adj = NOUN_TRAITS[a] if referent_side == 0 else NOUN_TRAITS[b]
    sentence = f"{np_a} {verb} {np_b} because it was {adj}."
    start = sentence.index(" it ") + 1
    candidates = [
        Candidate(np_a, "positive" if referent_side == 0 else "negative"),
        Candidate(np_b, "negative" if referent_side == 0 else "positive"),
    ]
    inst = Instance(
        id=idx,
        sentence=sentence,
        pronoun=Pronoun("it", start, start + 2),
        candidates=candidates,
        source="synthetic",
    )
    inst.validate()
    return inst


def build_synthetic_corpus(cfg: SynthConfig) -> dict[str, list[Instance]]:
    """Deterministic {"train", "dev", "test"} splits for a given seed."""
    combos = _all_combos()
    total = cfg.n_train + cfg.n_dev + cfg.n_test
    if total > len(combos):
        raise ConfigError(
            f"requested {total} instances but the template space has only {len(combos)}"
        )
    rng = np.random.default_rng(cfg.seed)
    picked = rng.permutation(len(combos))[:total]
    splits: dict[str, list[Instance]] = {"train": [], "dev": [], "test": []}
    for rank, combo_idx in enumerate(picked):
        if rank < cfg.n_train:
            split = "train"
            offset = rank
        elif rank < cfg.n_train + cfg.n_dev:
            split = "dev"
            offset = rank - cfg.n_train
        else:
            split = "test"
            offset = rank - cfg.n_train - cfg.n_dev
        splits[split].append(_make_instance(f"synth-{split}-{offset:04d}", combos[combo_idx]))
    return splits


def corpus_texts(instances) -> list[str]:
    """Sentences plus candidate strings, the text a vocabulary is built from."""
    texts = []
    for inst in instances:
        texts.append(inst.sentence)
        for c in inst.candidates:
            texts.append(c.text)
    return texts
