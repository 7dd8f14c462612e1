"""Comparison pipeline: tokenize, optional TSN, tiling, optional SMM, score.

The pipeline canonicalizes the pair order by program id before tiling so that
compare(a, b) and compare(b, a) are exactly symmetric, and pairwise corpus
comparison pre-tokenizes (and pre-normalizes) each program once per variant.
"""

from __future__ import annotations

import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence, Union

from .errors import DuplicateProgramId, TsnUnavailableWarning
from .matcher import (ComparisonResult, MatchParams, PreparedSequence,
                      build_result, greedy_string_tiling, prepare, swap_result)
from .minilang.tokenizer import tokenize
from .smm import SmmParams, merge_to_fixpoint
from .tokens import EnrichedSequence, Program, TokenSequence
from .tsn import normalize

VARIANTS = ("Base", "TSN", "SMM", "Both")


@dataclass(frozen=True)
class DefenseConfig:
    tsn: bool = False
    smm: bool = False
    smm_params: SmmParams = SmmParams()

    @classmethod
    def from_variant(cls, variant: str, smm_params: SmmParams = SmmParams()) -> "DefenseConfig":
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
        return cls(tsn=variant in ("TSN", "Both"), smm=variant in ("SMM", "Both"),
                   smm_params=smm_params)

    @property
    def variant(self) -> str:
        if self.tsn and self.smm:
            return "Both"
        if self.tsn:
            return "TSN"
        if self.smm:
            return "SMM"
        return "Base"


Comparable = Union[Program, EnrichedSequence, TokenSequence]


def _to_enriched(item: Comparable) -> EnrichedSequence:
    if isinstance(item, Program):
        return tokenize(item)
    if isinstance(item, TokenSequence):
        return EnrichedSequence(item, ())
    return item


def sequence_for(item: Comparable, defenses: DefenseConfig) -> tuple[TokenSequence, tuple[str, ...]]:
    """Tokenize and, when requested and possible, normalize; returns sequence + defenses run."""
    enriched = _to_enriched(item)
    if defenses.tsn:
        if enriched.has_semantics:
            return normalize(enriched), ("TSN",)
        warnings.warn(
            f"TSN requested but {enriched.sequence.program_id!r} has no semantics; "
            "comparing without normalization", TsnUnavailableWarning)
    return enriched.sequence, ()


def compare_prepared(pa: PreparedSequence, pb: PreparedSequence,
                     params: MatchParams, defenses: DefenseConfig,
                     ran_tsn: tuple[str, ...] = ()) -> ComparisonResult:
    swapped = pb.program_id < pa.program_id
    first, second = (pb, pa) if swapped else (pa, pb)
    matches = greedy_string_tiling(first, second, params)
    ran = list(ran_tsn)
    if defenses.smm:
        matches = merge_to_fixpoint(matches, defenses.smm_params,
                                    first.boundaries, second.boundaries)
        ran.append("SMM")
    result = build_result(first.program_id, second.program_id, matches,
                          first.token_count, second.token_count, tuple(ran))
    return swap_result(result) if swapped else result


def compare(a: Comparable, b: Comparable,
            params: MatchParams = MatchParams(),
            defenses: DefenseConfig = DefenseConfig()) -> ComparisonResult:
    seq_a, ran_a = sequence_for(a, defenses)
    seq_b, ran_b = sequence_for(b, defenses)
    ran = ("TSN",) if ("TSN" in ran_a and "TSN" in ran_b) else ()
    return compare_prepared(prepare(seq_a, "a"), prepare(seq_b, "b"), params, defenses, ran)


def _pair_worker(args) -> ComparisonResult:
    pa, pb, params, defenses, ran = args
    return compare_prepared(pa, pb, params, defenses, ran)


def compare_corpus(corpus: Sequence[Comparable],
                   params: MatchParams = MatchParams(),
                   defenses: DefenseConfig = DefenseConfig(),
                   jobs: int = 1) -> list[ComparisonResult]:
    """All C(n,2) unordered pairs, ordered lexicographically by id pair.

    Results are identical for any worker count: each pair is an independent
    work item and the aggregation order is fixed by the pair list.
    """
    enriched = [_to_enriched(item) for item in corpus]
    ids = [e.sequence.program_id for e in enriched]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise DuplicateProgramId(f"duplicate program ids: {dupes}")
    if len(ids) < 2:
        raise ValueError("corpus comparison needs at least 2 programs")

    order = sorted(range(len(ids)), key=lambda k: ids[k])
    preps = {}
    for k in order:
        seq, ran = sequence_for(enriched[k], defenses)
        preps[k] = (prepare(seq, "a"), prepare(seq, "b"), ran)

    tasks = []
    for pos, i in enumerate(order):
        for j in order[pos + 1:]:
            pa, _, ran_a = preps[i]
            _, pb, ran_b = preps[j]
            ran = ("TSN",) if ("TSN" in ran_a and "TSN" in ran_b) else ()
            tasks.append((pa, pb, params, defenses, ran))

    if jobs <= 1 or len(tasks) < 4:
        return [_pair_worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_pair_worker, tasks, chunksize=max(1, len(tasks) // (jobs * 4))))


def results_to_jsonl(results: Sequence[ComparisonResult]) -> str:
    return "".join(json.dumps(r.to_record(), sort_keys=True) + "\n" for r in results)
