"""Instances, tokenizer, NLI conversion, and synthetic corpora."""

from hybridref.data.convert import (
    ENTAILED,
    NOT_ENTAILED,
    PRONOUN_LEXICON,
    ConversionReport,
    ConversionResult,
    NliPair,
    convert_corpus,
    convert_nli_pair,
    group_converted,
    read_nli_tsv,
    write_report,
)
from hybridref.data.instances import (
    Candidate,
    Instance,
    Pronoun,
    load_instances,
    read_instances,
    write_instances,
)
from hybridref.data.lcs import LcsMatch, token_lcs
from hybridref.data.synthetic import SynthConfig, build_synthetic_corpus, corpus_texts
from hybridref.data.tokenizer import (
    CLS_ID,
    MASK_ID,
    PAD_ID,
    SEP_ID,
    UNK_ID,
    Token,
    Vocab,
    tokenize,
    whitespace_spans,
    whitespace_tokens,
)

__all__ = [
    "CLS_ID",
    "Candidate",
    "ConversionReport",
    "ConversionResult",
    "ENTAILED",
    "Instance",
    "LcsMatch",
    "MASK_ID",
    "NOT_ENTAILED",
    "NliPair",
    "PAD_ID",
    "PRONOUN_LEXICON",
    "Pronoun",
    "SEP_ID",
    "SynthConfig",
    "Token",
    "UNK_ID",
    "Vocab",
    "build_synthetic_corpus",
    "convert_corpus",
    "convert_nli_pair",
    "corpus_texts",
    "group_converted",
    "load_instances",
    "read_instances",
    "read_nli_tsv",
    "token_lcs",
    "tokenize",
    "whitespace_spans",
    "whitespace_tokens",
    "write_instances",
    "write_report",
]
