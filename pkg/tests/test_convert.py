"""NLI-to-instance conversion, including the documented alignment example."""

import json

import pytest

from hybridref.data.convert import (
    ENTAILED,
    NOT_ENTAILED,
    ConversionReport,
    NliPair,
    convert_corpus,
    convert_nli_pair,
    group_converted,
    read_nli_tsv,
    write_report,
)
from hybridref.errors import AlignmentError, ConversionError, DataError

PREMISE = "The cookstove was warming the kitchen, and the lamplight made it seem even warmer."
HYPOTHESES = [
    ("The lamplight made the cookstove seem even warmer.", NOT_ENTAILED),
    ("The lamplight made the kitchen seem even warmer.", ENTAILED),
    ("The lamplight made the lamplight seem even warmer.", NOT_ENTAILED),
]
EXPECTED_CANDIDATES = ["the cookstove", "the kitchen", "the lamplight"]


@pytest.mark.parametrize("hyp_label,candidate", list(zip(HYPOTHESES, EXPECTED_CANDIDATES)))
def test_golden_alignment_example(hyp_label, candidate):
    hypothesis, label = hyp_label
    res = convert_nli_pair(NliPair(PREMISE, hypothesis, label))
    assert res.left_lcs == (0, 2)
    assert res.right_lcs == (5, 7)
    assert res.candidate_span == (3, 4)
    assert res.candidate_text == candidate
    assert res.pronoun == "it"
    assert not res.degenerate
    assert PREMISE[res.pronoun_char_start:res.pronoun_char_end] == "it"


def test_golden_grouping():
    results = [(convert_nli_pair(NliPair(PREMISE, h, lab)), lab) for h, lab in HYPOTHESES]
    inst = group_converted(PREMISE, results, "wnli-g0000")
    assert [c.text for c in inst.candidates] == EXPECTED_CANDIDATES
    assert [c.label for c in inst.candidates] == ["negative", "positive", "negative"]
    assert inst.sentence == PREMISE
    assert inst.source == "wnli-converted"


def test_case_robustness():
    res_upper = convert_nli_pair(NliPair(PREMISE, HYPOTHESES[0][0].upper()))
    assert res_upper.left_lcs == (0, 2)
    assert res_upper.right_lcs == (5, 7)
    assert res_upper.candidate_span == (3, 4)


def test_no_pronoun_is_conversion_error():
    with pytest.raises(ConversionError):
        convert_nli_pair(NliPair("The cookstove was warming the kitchen.", "anything here"))


def test_out_of_order_matches_raise_alignment_error():
    # right context appears before the left context in the hypothesis
    premise = "alpha beta it gamma delta"
    hypothesis = "gamma delta XX alpha beta"
    with pytest.raises(AlignmentError, match="out of order"):
        convert_nli_pair(NliPair(premise, hypothesis))


def test_adjacent_matches_leave_no_candidate():
    premise = "alpha beta it gamma delta"
    hypothesis = "alpha beta gamma delta"
    with pytest.raises(AlignmentError, match="no hypothesis tokens"):
        convert_nli_pair(NliPair(premise, hypothesis))


def test_untouched_pronoun_is_flagged_degenerate():
    premise = "alpha beta it gamma delta"
    res = convert_nli_pair(NliPair(premise, premise))
    assert res.candidate_text == "it"
    assert "candidate_is_pronoun" in res.flags


def test_pronoun_at_sentence_edge_uses_boundary():
    premise = "It chased the small dog"
    hypothesis = "The cat chased the small dog"
    res = convert_nli_pair(NliPair(premise, hypothesis))
    assert "empty_left_match" in res.flags
    assert res.left_lcs is None
    assert res.candidate_text == "The cat"
    assert res.candidate_span == (0, 1)


def test_multiple_pronouns_pick_best_coverage():
    premise = "he said the oven was hot because it was burning"
    hypothesis = "he said the oven was hot because the oven was burning"
    res = convert_nli_pair(NliPair(premise, hypothesis))
    # "it" has full left+right coverage; "he" would align poorly
    assert res.pronoun == "it"
    assert res.candidate_text == "the oven"


def test_pronoun_with_attached_punctuation():
    premise = "the dog chased it, and the cat slept"
    hypothesis = "the dog chased the ball, and the cat slept"
    res = convert_nli_pair(NliPair(premise, hypothesis))
    assert res.pronoun == "it"
    assert premise[res.pronoun_char_start:res.pronoun_char_end] == "it"


def test_group_conflicting_labels_raise():
    res1 = convert_nli_pair(NliPair(PREMISE, HYPOTHESES[0][0]))
    with pytest.raises(DataError, match="conflicting labels"):
        group_converted(PREMISE, [(res1, ENTAILED), (res1, NOT_ENTAILED)], "x")


def test_group_dedups_case_insensitively():
    res1 = convert_nli_pair(NliPair(PREMISE, HYPOTHESES[0][0]))
    res2 = convert_nli_pair(NliPair(PREMISE, HYPOTHESES[0][0].replace("cookstove", "COOKSTOVE")))
    inst = group_converted(PREMISE, [(res1, NOT_ENTAILED), (res2, None)], "x")
    assert [c.text for c in inst.candidates] == ["the cookstove"]
    assert inst.candidates[0].label == "negative"


def test_single_unlabeled_hypothesis_gives_unknown_candidate():
    res = convert_nli_pair(NliPair(PREMISE, HYPOTHESES[0][0]))
    inst = group_converted(PREMISE, [(res, None)], "x")
    assert inst.candidates[0].label == "unknown"


def _write_tsv(path, rows, header=True):
    lines = []
    if header:
        lines.append("index\tsentence1\tsentence2\tlabel")
    lines.extend(rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def test_tsv_reading_and_corpus_conversion(tmp_path):
    tsv = tmp_path / "wnli.tsv"
    _write_tsv(tsv, [
        f"0\t{PREMISE}\t{HYPOTHESES[0][0]}\t0",
        f"1\t{PREMISE}\t{HYPOTHESES[1][0]}\t1",
        f"2\t{PREMISE}\t{HYPOTHESES[2][0]}\t0",
        "3\tNo pronoun in this sentence.\tIrrelevant hypothesis.\t0",
    ])
    rows = list(read_nli_tsv(tsv))
    assert len(rows) == 4 and rows[0][0] == "0"
    instances, report = convert_corpus(rows)
    assert len(instances) == 1
    assert [c.text for c in instances[0].candidates] == EXPECTED_CANDIDATES
    assert report.n_pairs == 4
    assert report.n_converted == 3
    assert report.n_failed == 1
    assert report.failures_by_class == {"ConversionError": 1}
    assert report.n_instances == 1

    out = tmp_path / "report.json"
    write_report(out, report)
    loaded = json.loads(out.read_text())
    assert loaded["n_pairs"] == 4 and loaded["errors"][0]["row"] == "3"


def test_tsv_without_labels(tmp_path):
    tsv = tmp_path / "test.tsv"
    _write_tsv(tsv, [f"0\t{PREMISE}\t{HYPOTHESES[0][0]}"], header=False)
    (row_id, pair), = list(read_nli_tsv(tsv))
    assert pair.label is None


def test_tsv_bad_label(tmp_path):
    tsv = tmp_path / "bad.tsv"
    _write_tsv(tsv, [f"0\t{PREMISE}\t{HYPOTHESES[0][0]}\tmaybe"])
    with pytest.raises(DataError, match="label must be 0 or 1"):
        list(read_nli_tsv(tsv))


def test_missing_tsv_is_data_error(tmp_path):
    with pytest.raises(DataError, match="cannot read"):
        list(read_nli_tsv(tmp_path / "nope.tsv"))
