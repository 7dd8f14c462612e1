"""Greedy string tiling over token sequences, plus the similarity score.

Tiling semantics: repeatedly take the longest common substring between the
unmarked regions of both sequences (ties: smallest start in A, then smallest
start in B), mark it, and continue until nothing of at least the minimum
match length remains. The implementation accelerates the search with
Karp-Rabin rolling hashes but verifies every hash hit token-by-token, so
collisions cannot change the output.

Multi-file programs are compared as one concatenated sequence with per-file
sentinel values that never compare equal, so matches cannot cross file
boundaries. Match coordinates are reported in token space (sentinels
excluded).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

from .tokens import EnrichedSequence, TokenSequence

_HASH_BASE = 1_000_003
_HASH_MOD = (1 << 61) - 1
_SENTINEL_A = 100_000
_SENTINEL_B = 200_000


@dataclass(frozen=True)
class MatchParams:
    min_match_len: int = 9

    def __post_init__(self):
        if self.min_match_len < 1:
            raise ValueError("min_match_len must be >= 1")


@dataclass(frozen=True)
class Match:
    """A matched fragment. Raw tiles have len_a == len_b and cover every token
    in their span; merged matches may span small gaps, with ``covered_*``
    recording how many tokens count toward similarity."""

    start_a: int
    start_b: int
    len_a: int
    len_b: int
    merged: bool = False
    covered_a: Optional[int] = None
    covered_b: Optional[int] = None

    @property
    def cov_a(self) -> int:
        return self.len_a if self.covered_a is None else self.covered_a

    @property
    def cov_b(self) -> int:
        return self.len_b if self.covered_b is None else self.covered_b

    @property
    def end_a(self) -> int:
        return self.start_a + self.len_a

    @property
    def end_b(self) -> int:
        return self.start_b + self.len_b


@dataclass(frozen=True)
class ComparisonResult:
    id_a: str
    id_b: str
    matches: tuple[Match, ...]
    len_seq_a: int
    len_seq_b: int
    similarity: float
    coverage_a: int
    coverage_b: int
    max_similarity: float = 0.0
    defenses: tuple[str, ...] = ()

    def to_record(self) -> dict:
        return {
            "a": self.id_a,
            "b": self.id_b,
            "similarity": self.similarity,
            "coverage_a": self.coverage_a,
            "coverage_b": self.coverage_b,
            "len_a": self.len_seq_a,
            "len_b": self.len_seq_b,
            "defenses": list(self.defenses),
        }


@dataclass
class PreparedSequence:
    """Comparison-ready form: token type values with file-boundary sentinels."""

    program_id: str
    values: list[int]
    token_count: int
    token_index: list[int] = field(default_factory=list)  # array pos -> token pos
    boundaries: frozenset[int] = frozenset()  # token positions starting a new file


def prepare(seq: Union[TokenSequence, EnrichedSequence], side: str = "a") -> PreparedSequence:
    if isinstance(seq, EnrichedSequence):
        seq = seq.sequence
    sentinel_base = _SENTINEL_A if side == "a" else _SENTINEL_B
    values: list[int] = []
    token_index: list[int] = []
    boundaries: set[int] = set()
    current_file: Optional[str] = None
    sentinels = 0
    for pos, tok in enumerate(seq.tokens):
        if current_file is not None and tok.file_id != current_file:
            values.append(sentinel_base + sentinels)
            token_index.append(pos)
            sentinels += 1
            boundaries.add(pos)
        current_file = tok.file_id
        values.append(tok.type.value)
        token_index.append(pos)
    return PreparedSequence(seq.program_id, values, seq.length, token_index,
                            frozenset(boundaries))


def _unmarked_runs(marked: list[bool], min_len: int) -> list[tuple[int, int]]:
    runs = []
    start = None
    for i, m in enumerate(marked):
        if not m and start is None:
            start = i
        elif m and start is not None:
            if i - start >= min_len:
                runs.append((start, i))
            start = None
    if start is not None and len(marked) - start >= min_len:
        runs.append((start, len(marked)))
    return runs


def _window_hash_list(values: list[int], runs: list[tuple[int, int]], length: int):
    """(hash, start) for every window of `length` inside the given unmarked runs."""
    out = []
    power = pow(_HASH_BASE, length - 1, _HASH_MOD)
    for start, end in runs:
        if end - start < length:
            continue
        h = 0
        for k in range(start, start + length):
            h = (h * _HASH_BASE + values[k]) % _HASH_MOD
        out.append((h, start))
        for k in range(start + 1, end - length + 1):
            h = ((h - values[k - 1] * power) % _HASH_MOD * _HASH_BASE
                 + values[k + length - 1]) % _HASH_MOD
            out.append((h, k))
    return out


def _exists_common(va, runs_a, vb, runs_b, length) -> bool:
    table: dict[int, list[int]] = {}
    for h, i in _window_hash_list(va, runs_a, length):
        table.setdefault(h, []).append(i)
    for h, j in _window_hash_list(vb, runs_b, length):
        for i in table.get(h, ()):
            if va[i:i + length] == vb[j:j + length]:
                return True
    return False


def _candidates(va, runs_a, vb, runs_b, length) -> list[tuple[int, int]]:
    table: dict[int, list[int]] = {}
    for h, i in _window_hash_list(va, runs_a, length):
        table.setdefault(h, []).append(i)
    found = []
    for h, j in _window_hash_list(vb, runs_b, length):
        for i in table.get(h, ()):
            if va[i:i + length] == vb[j:j + length]:
                found.append((i, j))
    found.sort()
    return found


def _gst_values(va: list[int], vb: list[int], min_len: int) -> list[tuple[int, int, int]]:
    """Core tiling on raw int arrays; returns (start_a, start_b, length) tiles."""
    if not va or not vb:
        return []
    marked_a = [False] * len(va)
    marked_b = [False] * len(vb)
    tiles: list[tuple[int, int, int]] = []
    hi = min(len(va), len(vb))
    while hi >= min_len:
        runs_a = _unmarked_runs(marked_a, min_len)
        runs_b = _unmarked_runs(marked_b, min_len)
        if not runs_a or not runs_b:
            break
        hi = min(hi, max(e - s for s, e in runs_a), max(e - s for s, e in runs_b))
        if hi < min_len:
            break
        if not _exists_common(va, runs_a, vb, runs_b, min_len):
            break
        lo = min_len
        best = lo  # check(min_len) just passed
        lo += 1
        high = hi
        while lo <= high:
            mid = (lo + high) // 2
            if _exists_common(va, runs_a, vb, runs_b, mid):
                best = mid
                lo = mid + 1
            else:
                high = mid - 1
        length = best
        for i, j in _candidates(va, runs_a, vb, runs_b, length):
            if any(marked_a[i:i + length]) or any(marked_b[j:j + length]):
                continue
            for k in range(i, i + length):
                marked_a[k] = True
            for k in range(j, j + length):
                marked_b[k] = True
            tiles.append((i, j, length))
        hi = length - 1
    tiles.sort()
    return tiles


def greedy_string_tiling(a: Union[TokenSequence, EnrichedSequence, PreparedSequence],
                         b: Union[TokenSequence, EnrichedSequence, PreparedSequence],
                         params: MatchParams = MatchParams()) -> list[Match]:
    pa = a if isinstance(a, PreparedSequence) else prepare(a, "a")
    pb = b if isinstance(b, PreparedSequence) else prepare(b, "b")
    tiles = _gst_values(pa.values, pb.values, params.min_match_len)
    return [Match(pa.token_index[i], pb.token_index[j], length, length)
            for i, j, length in tiles]


def similarity(matches: Sequence[Match], len_a: int, len_b: int) -> float:
    """Average similarity in [0, 100]; 0 when both sequences are empty."""
    if len_a + len_b == 0:
        return 0.0
    covered = sum(m.cov_a for m in matches) + sum(m.cov_b for m in matches)
    return 100.0 * covered / (len_a + len_b)


def max_similarity(matches: Sequence[Match], len_a: int, len_b: int) -> float:
    """Coverage against the smaller side; reported as an extra column only."""
    cov_a = sum(m.cov_a for m in matches)
    cov_b = sum(m.cov_b for m in matches)
    frac_a = cov_a / len_a if len_a else 0.0
    frac_b = cov_b / len_b if len_b else 0.0
    return 100.0 * max(frac_a, frac_b)


def build_result(id_a: str, id_b: str, matches: Sequence[Match],
                 len_a: int, len_b: int, defenses: Sequence[str] = ()) -> ComparisonResult:
    cov_a = sum(m.cov_a for m in matches)
    cov_b = sum(m.cov_b for m in matches)
    return ComparisonResult(
        id_a=id_a, id_b=id_b, matches=tuple(matches),
        len_seq_a=len_a, len_seq_b=len_b,
        similarity=similarity(matches, len_a, len_b),
        coverage_a=cov_a, coverage_b=cov_b,
        max_similarity=max_similarity(matches, len_a, len_b),
        defenses=tuple(defenses))


def swap_result(result: ComparisonResult) -> ComparisonResult:
    return replace(
        result,
        id_a=result.id_b, id_b=result.id_a,
        matches=tuple(Match(m.start_b, m.start_a, m.len_b, m.len_a, m.merged,
                            m.covered_b, m.covered_a) for m in result.matches),
        len_seq_a=result.len_seq_b, len_seq_b=result.len_seq_a,
        coverage_a=result.coverage_b, coverage_b=result.coverage_a)
