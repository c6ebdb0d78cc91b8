"""Longest common substring (contiguous) over token sequences."""

from __future__ import annotations

from typing import NamedTuple, Sequence


class LcsMatch(NamedTuple):
    a_start: int
    b_start: int
    length: int

    @property
    def a_range(self) -> tuple[int, int]:
        return (self.a_start, self.a_start + self.length)

    @property
    def b_range(self) -> tuple[int, int]:
        return (self.b_start, self.b_start + self.length)


def token_lcs(a: Sequence[str], b: Sequence[str]) -> LcsMatch:
    """Longest contiguous run of case-insensitively equal tokens.

    Ties prefer the earliest start in `b`, then the earliest start in `a`.
    Returns length 0 (empty ranges at 0) when nothing matches.
    """
    al = [t.casefold() for t in a]
    bl = [t.casefold() for t in b]
    n, m = len(al), len(bl)
    best = LcsMatch(0, 0, 0)
    prev = [0] * (m + 1)
    for i in range(1, n + 1):
        cur = [0] * (m + 1)
        ai = al[i - 1]
        for j in range(1, m + 1):
            if ai != bl[j - 1]:
                continue
            length = prev[j - 1] + 1
            cur[j] = length
            a_start, b_start = i - length, j - length
            if length > best.length or (
                length == best.length
                and (b_start, a_start) < (best.b_start, best.a_start)
            ):
                best = LcsMatch(a_start, b_start, length)
        prev = cur
    return best
