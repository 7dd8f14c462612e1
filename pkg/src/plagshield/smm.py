"""Subsequence match merging: bridge small obfuscation-induced gaps.

Attack-independent post-processing over the matcher's output. Two matches
are mergeable when they are neighbors in *both* sequences (no third match
between them on either side), both gaps are within the configured maximum,
and both matches carry at least the minimum neighbor length. Merging is
iterated to a fixpoint; each call of merge_once performs the single leftmost
eligible merge so the fixpoint is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import OverlappingMatches
from .matcher import Match


@dataclass(frozen=True)
class SmmParams:
    max_gap: int = 6
    min_neighbor_len: int = 2
    count_gap_tokens: bool = True

    def __post_init__(self):
        if self.max_gap < 0:
            raise ValueError("max_gap must be >= 0")
        if self.min_neighbor_len < 1:
            raise ValueError("min_neighbor_len must be >= 1")


def _check_disjoint(matches: list[Match]) -> None:
    by_a = sorted(matches, key=lambda m: m.start_a)
    for prev, cur in zip(by_a, by_a[1:]):
        if cur.start_a < prev.end_a:
            raise OverlappingMatches(f"matches overlap in A at {cur.start_a}")
    by_b = sorted(matches, key=lambda m: m.start_b)
    for prev, cur in zip(by_b, by_b[1:]):
        if cur.start_b < prev.end_b:
            raise OverlappingMatches(f"matches overlap in B at {cur.start_b}")


def _neighbor_len(m: Match) -> int:
    return min(m.len_a, m.len_b)


def _crosses(start: int, end: int, boundaries: frozenset[int]) -> bool:
    return any(start < b < end for b in boundaries)


def merge_once(matches: list[Match], params: SmmParams = SmmParams(),
               boundaries_a: frozenset[int] = frozenset(),
               boundaries_b: frozenset[int] = frozenset()) -> tuple[list[Match], bool]:
    """Merge the leftmost eligible neighbor pair; returns (matches, changed)."""
    if not matches:
        return [], False
    _check_disjoint(matches)
    order_a = sorted(matches, key=lambda m: m.start_a)
    order_b = sorted(matches, key=lambda m: m.start_b)
    successor_b = {id(m): order_b[k + 1] for k, m in enumerate(order_b[:-1])}

    for k, m1 in enumerate(order_a[:-1]):
        m2 = order_a[k + 1]
        if successor_b.get(id(m1)) is not m2:
            continue  # not consecutive in B
        gap_a = m2.start_a - m1.end_a
        gap_b = m2.start_b - m1.end_b
        if gap_a < 0 or gap_b < 0:
            continue
        if gap_a > params.max_gap or gap_b > params.max_gap:
            continue
        if min(_neighbor_len(m1), _neighbor_len(m2)) < params.min_neighbor_len:
            continue
        # merged matches must not span a file boundary
        if _crosses(m1.start_a, m2.end_a, boundaries_a):
            continue
        if _crosses(m1.start_b, m2.end_b, boundaries_b):
            continue
        len_a = m2.end_a - m1.start_a
        len_b = m2.end_b - m1.start_b
        if params.count_gap_tokens:
            covered_a, covered_b = len_a, len_b
        else:
            covered_a = m1.cov_a + m2.cov_a
            covered_b = m1.cov_b + m2.cov_b
        merged = Match(m1.start_a, m1.start_b, len_a, len_b, merged=True,
                       covered_a=covered_a, covered_b=covered_b)
        out = order_a[:k] + [merged] + order_a[k + 2:]
        out.sort(key=lambda m: m.start_a)
        return out, True

    return order_a, False


def merge_to_fixpoint(matches: list[Match], params: SmmParams = SmmParams(),
                      boundaries_a: frozenset[int] = frozenset(),
                      boundaries_b: frozenset[int] = frozenset()) -> list[Match]:
    """Iterate merge_once until no merge applies; at most len(matches) rounds."""
    current = list(matches)
    changed = True
    while changed:
        current, changed = merge_once(current, params, boundaries_a, boundaries_b)
    return current
