"""Desk-scale pronoun resolver: a masked-LM head and a semantic-similarity
head over a shared bidirectional transformer encoder, trained jointly with a
smoothed pairwise rank loss."""

__version__ = "0.1.0"
