"""Evaluation statistics: summaries, separation deltas, significance tests.

All primary code paths are hand-written so the test suite can cross-check
them against independent oracles (brute-force enumeration for the signed-rank
test, quadratic pair counting for the effect size, a reference quantile
implementation for summaries).
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Sequence

from .errors import EmptyInput

Z_95 = 1.959963984540054


@dataclass(frozen=True)
class DistributionSummary:
    n: int
    mean: float
    median: float
    q1: float
    q3: float
    min: float
    max: float

    def to_record(self) -> dict:
        return {"n": self.n, "mean": self.mean, "median": self.median,
                "q1": self.q1, "q3": self.q3, "min": self.min, "max": self.max}


@dataclass(frozen=True)
class DeltaReport:
    delta_mean: float
    delta_median: float
    delta_iqr: float  # Q1(plagiarism) - Q3(original); > 0 means 75% separation

    def to_record(self) -> dict:
        return {"delta_mean": self.delta_mean, "delta_median": self.delta_median,
                "delta_iqr": self.delta_iqr}


@dataclass(frozen=True)
class WilcoxonResult:
    W: float
    p: float
    n_effective: int
    method: str  # "exact" | "normal_approx" | "all_zero"
    all_zero: bool = False

    def to_record(self) -> dict:
        return {"W": self.W, "p": self.p, "n": self.n_effective, "method": self.method}


@dataclass(frozen=True)
class CliffsDeltaResult:
    delta: float
    interpretation: str
    ci_low: float
    ci_high: float

    def to_record(self) -> dict:
        return {"delta": self.delta, "interpretation": self.interpretation,
                "ci": [self.ci_low, self.ci_high]}


def _quantile_type7(sorted_values: Sequence[float], q: float) -> float:
    """Linear interpolation between order statistics (the common default)."""
    n = len(sorted_values)
    if n == 1:
        return float(sorted_values[0])
    h = (n - 1) * q
    lo = math.floor(h)
    hi = min(lo + 1, n - 1)
    frac = h - lo
    return sorted_values[lo] + (sorted_values[hi] - sorted_values[lo]) * frac


def summarize(values: Sequence[float]) -> DistributionSummary:
    if not values:
        raise EmptyInput("cannot summarize an empty value list")
    ordered = sorted(float(v) for v in values)
    n = len(ordered)
    return DistributionSummary(
        n=n,
        mean=math.fsum(ordered) / n,
        median=_quantile_type7(ordered, 0.5),
        q1=_quantile_type7(ordered, 0.25),
        q3=_quantile_type7(ordered, 0.75),
        min=ordered[0],
        max=ordered[-1])


def delta_report(plag: DistributionSummary, orig: DistributionSummary) -> DeltaReport:
    return DeltaReport(
        delta_mean=plag.mean - orig.mean,
        delta_median=plag.median - orig.median,
        delta_iqr=plag.q1 - orig.q3)


# --- one-sided Wilcoxon signed-rank ---

def _midranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda k: values[k])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def _exact_p_greater(ranks: list[float], w_obs: float) -> float:
    """P(W+ >= w_obs) under the null, via the subset-sum distribution.

    Equivalent to enumerating all 2^n sign assignments; the dynamic program
    makes n <= 25 instant. Midranks are exact halves, so doubling them keeps
    the computation in integers.
    """
    scaled = [int(round(2 * r)) for r in ranks]
    total = sum(scaled)
    ways = [0] * (total + 1)
    ways[0] = 1
    for rank in scaled:
        for s in range(total, rank - 1, -1):
            ways[s] += ways[s - rank]
    threshold = math.ceil(round(2 * w_obs, 6))
    tail = sum(ways[threshold:]) if threshold <= total else 0
    return tail / (1 << len(ranks))


def wilcoxon_one_sided(x: Sequence[float], y: Sequence[float],
                       max_exact_n: int = 25,
                       continuity_correction: bool = True) -> WilcoxonResult:
    """Paired one-sided signed-rank test, alternative: x greater than y.

    Zero differences are dropped before ranking. Exact p by full enumeration
    of sign assignments (over midranks) when the effective sample is small,
    otherwise a normal approximation with tie correction.
    """
    if len(x) != len(y):
        raise ValueError(f"paired samples differ in length: {len(x)} vs {len(y)}")
    if not x:
        raise EmptyInput("wilcoxon needs at least one pair")
    diffs = [float(a) - float(b) for a, b in zip(x, y)]
    diffs = [d for d in diffs if d != 0.0]
    if not diffs:
        return WilcoxonResult(W=0.0, p=1.0, n_effective=0, method="all_zero", all_zero=True)

    magnitudes = [abs(d) for d in diffs]
    ranks = _midranks(magnitudes)
    w_plus = sum(r for r, d in zip(ranks, diffs) if d > 0)
    n = len(diffs)

    if n <= max_exact_n:
        p = _exact_p_greater(ranks, w_plus)
        return WilcoxonResult(W=w_plus, p=p, n_effective=n, method="exact")

    mean = n * (n + 1) / 4
    variance = n * (n + 1) * (2 * n + 1) / 24
    # tie correction over groups of equal |d|
    seen: dict[float, int] = {}
    for m in magnitudes:
        seen[m] = seen.get(m, 0) + 1
    variance -= sum(t ** 3 - t for t in seen.values()) / 48
    if variance <= 0:
        return WilcoxonResult(W=w_plus, p=1.0, n_effective=n, method="normal_approx")
    correction = 0.5 if continuity_correction else 0.0
    z = (w_plus - mean - correction) / math.sqrt(variance)
    p = 0.5 * math.erfc(z / math.sqrt(2))
    return WilcoxonResult(W=w_plus, p=min(1.0, max(0.0, p)), n_effective=n,
                          method="normal_approx")


# --- Cliff's delta ---

_BANDS = ((0.147, "Negligible"), (0.33, "Small"), (0.474, "Medium"), (0.7, "Large"))


def interpret_delta(delta: float) -> str:
    magnitude = abs(delta)
    for bound, label in _BANDS:
        if magnitude < bound:
            return label
    return "Very Large"


def cliffs_delta(x: Sequence[float], y: Sequence[float]) -> CliffsDeltaResult:
    """Rank effect size: normalized excess of x>y pairs over x<y pairs.

    Computed with sorted sides and binary search in O((m+n) log), which the
    tests pin against the quadratic sign-matrix definition. The confidence
    interval uses the consistent asymptotic variance estimate with the usual
    asymmetric transformation, clamped to [-1, 1].
    """
    if not x or not y:
        raise EmptyInput("cliffs_delta needs two nonempty samples")
    m, n = len(x), len(y)
    xs = sorted(float(v) for v in x)
    ys = sorted(float(v) for v in y)

    # per-row counts against y, and the symmetric per-column counts against x
    row_gt = [bisect_left(ys, v) for v in xs]          # y values strictly below x_i
    row_lt = [n - bisect_right(ys, v) for v in xs]     # y values strictly above x_i
    col_lt = [bisect_left(xs, v) for v in ys]          # x values strictly below y_j
    col_gt = [m - bisect_right(xs, v) for v in ys]     # x values strictly above y_j

    gt = sum(row_gt)
    lt = sum(row_lt)
    delta = (gt - lt) / (m * n)

    row_means = [(g - l) / n for g, l in zip(row_gt, row_lt)]
    col_means = [(g - l) / m for g, l in zip(col_gt, col_lt)]
    nonzero = gt + lt  # d_ij^2 sums to the count of non-tied pairs
    sum_sq_dev = nonzero - m * n * delta * delta

    if m > 1 and n > 1:
        s_rows = math.fsum((r - delta) ** 2 for r in row_means)
        s_cols = math.fsum((c - delta) ** 2 for c in col_means)
        variance = (n * n * s_rows + m * m * s_cols - sum_sq_dev) / (m * n * (m - 1) * (n - 1))
        variance = max(0.0, variance)
    else:
        variance = 1.0  # too small to estimate; interval stays uninformative

    if variance == 0.0:
        ci_low = ci_high = delta
    else:
        z2s2 = Z_95 * Z_95 * variance
        root = math.sqrt((1 - delta * delta) ** 2 + z2s2)
        denom = 1 - delta * delta + z2s2
        ci_low = (delta - delta ** 3 - Z_95 * math.sqrt(variance) * root) / denom
        ci_high = (delta - delta ** 3 + Z_95 * math.sqrt(variance) * root) / denom
    return CliffsDeltaResult(
        delta=delta, interpretation=interpret_delta(delta),
        ci_low=max(-1.0, min(1.0, ci_low)), ci_high=max(-1.0, min(1.0, ci_high)))


def top_k_coverage(results, flagged: set[str], k: int) -> float:
    """Fraction of flagged programs seen in at least one of the top-k pairs."""
    if not flagged:
        return 0.0
    ranked = sorted(results, key=lambda r: (-r.similarity, r.id_a, r.id_b))
    seen: set[str] = set()
    for result in ranked[:max(0, k)]:
        if result.id_a in flagged:
            seen.add(result.id_a)
        if result.id_b in flagged:
            seen.add(result.id_b)
    return len(seen) / len(flagged)
