"""Lowercasing subword tokenizer: whitespace/punctuation split, then greedy
longest-match segmentation against the vocabulary with single-token UNK
fallback. Character spans always index the original text."""

from __future__ import annotations

import json
from typing import Iterable, NamedTuple

from hybridref.errors import VocabError

PAD_ID = 0
UNK_ID = 1
CLS_ID = 2
SEP_ID = 3
MASK_ID = 4

SPECIAL_TOKENS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")
NUM_SPECIALS = len(SPECIAL_TOKENS)
CONTINUATION = "##"


class Token(NamedTuple):
    id: int
    start: int
    end: int
    piece: str  # vocabulary surface, "##"-prefixed for continuations


class Vocab:
    """token -> id map with reserved special ids 0..4."""

    def __init__(self, tokens: Iterable[str] = ()):
        self._token_to_id: dict[str, int] = {t: i for i, t in enumerate(SPECIAL_TOKENS)}
        self._id_to_token: list[str] = list(SPECIAL_TOKENS)
        for t in tokens:
            self.add(t)

    def add(self, token: str) -> int:
        if token in SPECIAL_TOKENS:
            raise VocabError(f"cannot add reserved token {token!r}")
        if not token or token != token.lower():
            raise VocabError(f"vocabulary entries must be nonempty and lowercase, got {token!r}")
        existing = self._token_to_id.get(token)
        if existing is not None:
            return existing
        new_id = len(self._id_to_token)
        self._token_to_id[token] = new_id
        self._id_to_token.append(token)
        return new_id

    def id_of(self, token: str) -> int | None:
        return self._token_to_id.get(token)

    def token_of(self, idx: int) -> str:
        if not 0 <= idx < len(self._id_to_token):
            raise VocabError(f"token id {idx} out of range (vocab size {len(self)})")
        return self._id_to_token[idx]

    def __len__(self) -> int:
        return len(self._id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self._token_to_id

    @classmethod
    def from_texts(cls, texts: Iterable[str], with_subwords: bool = False) -> "Vocab":
        """Collect lowercased word types (sorted, so ids are deterministic)."""
        words: set[str] = set()
        for text in texts:
            for _, _, word in _basic_tokens(text):
                words.add(word)
        vocab = cls()
        for w in sorted(words):
            vocab.add(w)
        if with_subwords:
            for w in sorted(words):
                for k in range(1, len(w)):
                    vocab.add(w[:k])
                    vocab.add(CONTINUATION + w[k:])
        return vocab

    def to_json(self) -> str:
        return json.dumps({"tokens": self._id_to_token[NUM_SPECIALS:]})

    @classmethod
    def from_json(cls, text: str) -> "Vocab":
        return cls(json.loads(text)["tokens"])


def _is_word_char(ch: str) -> bool:
    return ch.isalnum() or ch == "'"


def _basic_tokens(text: str):
    """Yield (start, end, lowercased word) chunks: alnum runs and single punctuation marks."""
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if _is_word_char(ch):
            j = i
            while j < n and _is_word_char(text[j]):
                j += 1
        else:
            j = i + 1
        yield i, j, text[i:j].lower()
        i = j


def _segment_word(vocab: Vocab, word: str) -> list[str] | None:
    """Greedy longest-match wordpiece split; None when the word cannot be covered."""
    pieces: list[str] = []
    pos = 0
    while pos < len(word):
        prefix = CONTINUATION if pos > 0 else ""
        end = len(word)
        piece = None
        while end > pos:
            cand = prefix + word[pos:end]
            if cand in vocab:
                piece = cand
                break
            end -= 1
        if piece is None:
            return None
        pieces.append(piece)
        pos = end
    return pieces


def tokenize(vocab: Vocab, text: str) -> list[Token]:
    """Tokenize into vocabulary ids with original-text character spans.

    Unsegmentable words become a single UNK token spanning the whole word, so
    tokenization never fails; spans tile each word without overlap.
    """
    out: list[Token] = []
    for start, end, word in _basic_tokens(text):
        pieces = _segment_word(vocab, word)
        if pieces is None:
            out.append(Token(UNK_ID, start, end, "[UNK]"))
            continue
        offset = start
        for piece in pieces:
            width = len(piece) - len(CONTINUATION) if piece.startswith(CONTINUATION) else len(piece)
            out.append(Token(vocab.id_of(piece), offset, offset + width, piece))
            offset += width
    return out


def whitespace_tokens(text: str) -> list[str]:
    """Plain whitespace split; the unit the NLI converter aligns on."""
    return text.split()


def whitespace_spans(text: str) -> list[tuple[int, int]]:
    spans = []
    i, n = 0, len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace():
            j += 1
        spans.append((i, j))
        i = j
    return spans
