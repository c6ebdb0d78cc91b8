"""NLI premise/hypothesis pairs -> pronoun-resolution instances.

For every lexicon pronoun in the premise, the premise tokens to its left and
right are matched against the hypothesis with a case-insensitive longest
common substring at whitespace-token granularity; the hypothesis tokens
strictly between the two matches are the candidate antecedent. The pronoun
occurrence with the largest combined match length wins. Reported token index
pairs are inclusive, e.g. left [0, 2] plus right [5, 7] yield candidate
[3, 4].
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from hybridref.data.instances import Candidate, Instance, Pronoun
from hybridref.data.lcs import token_lcs
from hybridref.data.tokenizer import whitespace_spans
from hybridref.errors import AlignmentError, ConversionError, DataError

PRONOUN_LEXICON = frozenset(
    "he she it they him her them his hers its their theirs "
    "himself herself itself themselves".split()
)

_EDGE_PUNCT = ".,;:!?\"'()[]"

ENTAILED = "entailed"
NOT_ENTAILED = "not-entailed"


@dataclass
class NliPair:
    premise: str
    hypothesis: str
    label: Optional[str] = None  # ENTAILED / NOT_ENTAILED / None

    def __post_init__(self):
        if not self.premise or not self.hypothesis:
            raise DataError("NLI pair needs nonempty premise and hypothesis")
        if self.label not in (None, ENTAILED, NOT_ENTAILED):
            raise DataError(f"bad NLI label {self.label!r}")


@dataclass
class ConversionResult:
    pronoun: str                       # surface form, edge punctuation stripped
    pronoun_token_index: int           # whitespace-token index in the premise
    pronoun_char_start: int
    pronoun_char_end: int
    candidate_text: str
    candidate_span: tuple[int, int]    # inclusive hypothesis token indices
    left_lcs: Optional[tuple[int, int]]   # inclusive hypothesis token indices, None if empty
    right_lcs: Optional[tuple[int, int]]
    flags: list[str] = field(default_factory=list)

    @property
    def degenerate(self) -> bool:
        return bool(self.flags)


def _pronoun_occurrences(premise: str, lexicon) -> list[tuple[int, int, int, str]]:
    """(token_index, char_start, char_end, stripped_surface) per lexicon hit."""
    hits = []
    for tok_idx, (start, end) in enumerate(whitespace_spans(premise)):
        token = premise[start:end]
        core = token.strip(_EDGE_PUNCT)
        if core.lower() in lexicon and core:
            offset = token.index(core)
            hits.append((tok_idx, start + offset, start + offset + len(core), core))
    return hits


def convert_nli_pair(pair: NliPair, lexicon=PRONOUN_LEXICON) -> ConversionResult:
    """Extract the candidate the hypothesis substitutes for a premise pronoun.

    Raises ConversionError when the premise has no lexicon pronoun and
    AlignmentError when the two matches are out of order or leave no tokens
    between them. An empty left/right match is aligned to the corresponding
    hypothesis boundary and flagged rather than rejected.
    """
    premise_tokens = pair.premise.split()
    hyp_tokens = pair.hypothesis.split()
    occurrences = _pronoun_occurrences(pair.premise, lexicon)
    if not occurrences:
        raise ConversionError(f"no lexicon pronoun in premise: {pair.premise!r}")

    scored = []
    for tok_idx, cstart, cend, surface in occurrences:
        left = token_lcs(premise_tokens[:tok_idx], hyp_tokens)
        right = token_lcs(premise_tokens[tok_idx + 1:], hyp_tokens)
        scored.append((left.length + right.length, tok_idx, cstart, cend, surface, left, right))
    scored.sort(key=lambda item: (-item[0], item[1]))
    _, tok_idx, cstart, cend, surface, left, right = scored[0]

    flags: list[str] = []
    if left.length == 0:
        cand_start = 0
        left_span = None
        flags.append("empty_left_match")
    else:
        cand_start = left.b_start + left.length
        left_span = (left.b_start, left.b_start + left.length - 1)
    if right.length == 0:
        cand_end_excl = len(hyp_tokens)
        right_span = None
        flags.append("empty_right_match")
    else:
        cand_end_excl = right.b_start
        right_span = (right.b_start, right.b_start + right.length - 1)

    if cand_end_excl < cand_start:
        raise AlignmentError(
            f"hypothesis matches out of order: left ends at token {cand_start - 1}, "
            f"right begins at token {cand_end_excl} (premise {pair.premise!r})"
        )
    if cand_end_excl == cand_start:
        raise AlignmentError(
            f"no hypothesis tokens between matches at token {cand_start} "
            f"(premise {pair.premise!r}, hypothesis {pair.hypothesis!r})"
        )

    candidate_tokens = hyp_tokens[cand_start:cand_end_excl]
    candidate_text = " ".join(candidate_tokens)
    if [t.casefold() for t in candidate_tokens] == [surface.casefold()]:
        flags.append("candidate_is_pronoun")

    return ConversionResult(
        pronoun=surface,
        pronoun_token_index=tok_idx,
        pronoun_char_start=cstart,
        pronoun_char_end=cend,
        candidate_text=candidate_text,
        candidate_span=(cand_start, cand_end_excl - 1),
        left_lcs=left_span,
        right_lcs=right_span,
        flags=flags,
    )


def _label_from_nli(label: Optional[str]) -> str:
    if label == ENTAILED:
        return "positive"
    if label == NOT_ENTAILED:
        return "negative"
    return "unknown"


def group_converted(
    premise: str,
    results: Iterable[tuple[ConversionResult, Optional[str]]],
    instance_id: str,
) -> Instance:
    """Merge extractions for one (premise, pronoun) into a single instance.

    Candidates are deduplicated case-insensitively (first spelling kept);
    NLI labels map entailed -> positive. Conflicting labels for the same
    candidate text are a data error.
    """
    results = list(results)
    if not results:
        raise DataError("group_converted: no extractions")
    first = results[0][0]
    for res, _ in results[1:]:
        if res.pronoun_char_start != first.pronoun_char_start:
            raise DataError(
                f"group_converted: extractions disagree on the pronoun occurrence "
                f"({res.pronoun_char_start} vs {first.pronoun_char_start})"
            )
    candidates: list[Candidate] = []
    seen: dict[str, int] = {}
    for res, nli_label in results:
        label = _label_from_nli(nli_label)
        key = res.candidate_text.casefold()
        if key in seen:
            prior = candidates[seen[key]]
            if prior.label == "unknown":
                prior.label = label
            elif label != "unknown" and prior.label != label:
                raise DataError(
                    f"conflicting labels for candidate {res.candidate_text!r}: "
                    f"{prior.label} vs {label}"
                )
            continue
        seen[key] = len(candidates)
        candidates.append(Candidate(res.candidate_text, label))
    inst = Instance(
        id=instance_id,
        sentence=premise,
        pronoun=Pronoun(first.pronoun, first.pronoun_char_start, first.pronoun_char_end),
        candidates=candidates,
        source="wnli-converted",
    )
    inst.validate()
    return inst


def read_nli_tsv(path) -> Iterator[tuple[str, NliPair]]:
    """Read (index, pair) rows from a WNLI-layout TSV.

    Columns: index, sentence1, sentence2[, label]; a header row is detected
    and skipped. Labels 1/0 map to entailed / not-entailed.
    """
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read NLI TSV from {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if row_no == 1 and row[0].strip().lower() == "index":
                continue
            if len(row) < 3:
                raise DataError(f"{path}:{row_no}: expected at least 3 TSV columns, got {len(row)}")
            label = None
            if len(row) >= 4 and row[3].strip() != "":
                raw = row[3].strip()
                if raw not in ("0", "1"):
                    raise DataError(f"{path}:{row_no}: label must be 0 or 1, got {raw!r}")
                label = ENTAILED if raw == "1" else NOT_ENTAILED
            yield row[0].strip(), NliPair(row[1], row[2], label)


@dataclass
class ConversionReport:
    n_pairs: int = 0
    n_converted: int = 0
    n_failed: int = 0
    failures_by_class: dict = field(default_factory=dict)
    n_degenerate: int = 0
    flag_counts: dict = field(default_factory=dict)
    n_instances: int = 0
    errors: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n_pairs": self.n_pairs,
            "n_converted": self.n_converted,
            "n_failed": self.n_failed,
            "failures_by_class": dict(self.failures_by_class),
            "n_degenerate": self.n_degenerate,
            "flag_counts": dict(self.flag_counts),
            "n_instances": self.n_instances,
            "errors": list(self.errors),
        }


def convert_corpus(
    rows: Iterable[tuple[str, NliPair]],
    lexicon=PRONOUN_LEXICON,
) -> tuple[list[Instance], ConversionReport]:
    """Convert NLI rows, grouping successful extractions by (premise, pronoun)."""
    report = ConversionReport()
    groups: dict[tuple[str, int], list[tuple[ConversionResult, Optional[str]]]] = {}
    order: list[tuple[str, int]] = []
    for row_id, pair in rows:
        report.n_pairs += 1
        try:
            res = convert_nli_pair(pair, lexicon)
        except (ConversionError, AlignmentError) as exc:
            report.n_failed += 1
            cls = type(exc).__name__
            report.failures_by_class[cls] = report.failures_by_class.get(cls, 0) + 1
            report.errors.append({"row": row_id, "error_class": cls, "message": str(exc)})
            continue
        report.n_converted += 1
        if res.degenerate:
            report.n_degenerate += 1
            for flag in res.flags:
                report.flag_counts[flag] = report.flag_counts.get(flag, 0) + 1
        key = (pair.premise, res.pronoun_char_start)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append((res, pair.label))

    instances = []
    for group_no, key in enumerate(order):
        inst = group_converted(key[0], groups[key], instance_id=f"wnli-g{group_no:04d}")
        instances.append(inst)
    report.n_instances = len(instances)
    return instances, report


def write_report(path, report: ConversionReport) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
