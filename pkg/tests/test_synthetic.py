"""Synthetic corpus generation: determinism, validity, split hygiene."""

import pytest

from hybridref.data.synthetic import NOUN_TRAITS, SynthConfig, build_synthetic_corpus
from hybridref.errors import ConfigError


def test_deterministic_per_seed():
    a = build_synthetic_corpus(SynthConfig(n_train=200, n_dev=40, seed=7))
    b = build_synthetic_corpus(SynthConfig(n_train=200, n_dev=40, seed=7))
    c = build_synthetic_corpus(SynthConfig(n_train=200, n_dev=40, seed=8))
    assert [i.to_dict() for i in a["train"]] == [i.to_dict() for i in b["train"]]
    assert [i.to_dict() for i in a["train"]] != [i.to_dict() for i in c["train"]]


def test_sizes_and_ids():
    splits = build_synthetic_corpus(SynthConfig(n_train=30, n_dev=10, n_test=5, seed=0))
    assert (len(splits["train"]), len(splits["dev"]), len(splits["test"])) == (30, 10, 5)
    assert splits["train"][0].id == "synth-train-0000"
    assert splits["dev"][9].id == "synth-dev-0009"


def test_instances_satisfy_invariants():
    splits = build_synthetic_corpus(SynthConfig(n_train=120, n_dev=30, n_test=10, seed=3))
    for split in splits.values():
        for inst in split:
            inst.validate()
            assert inst.training_pair() in ((0, 1), (1, 0))
            pos = inst.candidates[inst.positive_index()].text
            trait = inst.sentence.split()[-1].rstrip(".")
            noun = pos.split()[-1]
            assert NOUN_TRAITS[noun] == trait  # the adjective names its owner


def test_splits_are_textually_disjoint():
    splits = build_synthetic_corpus(SynthConfig(n_train=250, n_dev=60, n_test=60, seed=5))
    train = {i.sentence for i in splits["train"]}
    dev = {i.sentence for i in splits["dev"]}
    test = {i.sentence for i in splits["test"]}
    assert len(train) == 250 and len(dev) == 60 and len(test) == 60
    assert not (train & dev) and not (train & test) and not (dev & test)


def test_mixes_article_and_bare_templates():
    splits = build_synthetic_corpus(SynthConfig(n_train=200, n_dev=1, seed=1))
    two_token = sum(1 for i in splits["train"] if i.candidates[0].text.startswith("the "))
    assert 0 < two_token < 200


def test_pool_exhaustion_is_config_error():
    with pytest.raises(ConfigError, match="template space"):
        build_synthetic_corpus(SynthConfig(n_train=5000, n_dev=5000, seed=0))
    with pytest.raises(ConfigError):
        SynthConfig(n_train=0)
