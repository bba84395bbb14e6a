"""Paired comparison statistics: t-test and Cohen's d (d_z variant).

The two-sided p-value is computed from the Student-t distribution through
the regularized incomplete beta function rather than by delegating to a
statistics package, so the test suite can check it against an independent
reference implementation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from scipy.special import betainc

from .errors import DegenerateVariance, LengthMismatch, TooFewPairs


def _differences(a: Sequence[float], b: Sequence[float]) -> list[float]:
    if len(a) != len(b):
        raise LengthMismatch(f"paired samples differ in length: {len(a)} vs {len(b)}")
    if len(a) < 2:
        raise TooFewPairs(f"need at least 2 pairs, got {len(a)}")
    return [bi - ai for ai, bi in zip(a, b)]


def _mean_sd(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def student_t_sf(t: float, dof: int) -> float:
    """Two-sided tail probability of |T| >= |t| for T ~ Student-t(dof)."""
    if t == 0.0:
        return 1.0
    x = dof / (dof + t * t)
    return float(betainc(dof / 2.0, 0.5, x))


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> tuple[float, float, int]:
    """Paired t-test on differences b - a.

    Returns (t, two-sided p, dof) with dof = n - 1 and the sample standard
    deviation (n - 1 divisor). All-equal pairs give t=0, p=1; a constant
    nonzero shift has no defined t and raises DegenerateVariance.
    """
    diffs = _differences(a, b)
    n = len(diffs)
    mean, sd = _mean_sd(diffs)
    dof = n - 1
    if sd == 0.0:
        if mean == 0.0:
            return 0.0, 1.0, dof
        raise DegenerateVariance("zero variance of differences with nonzero mean")
    t = mean / (sd / math.sqrt(n))
    return t, student_t_sf(t, dof), dof


def cohens_d_paired(a: Sequence[float], b: Sequence[float]) -> float:
    """Effect size d_z = mean(b - a) / sd(b - a), sample standard deviation."""
    diffs = _differences(a, b)
    mean, sd = _mean_sd(diffs)
    if sd == 0.0:
        if mean == 0.0:
            return 0.0
        raise DegenerateVariance("zero variance of differences with nonzero mean")
    return mean / sd


@dataclass(frozen=True)
class StatComparison:
    """Paired recall comparison between two pipeline conditions."""

    condition_a: str
    condition_b: str
    t_statistic: float
    p_value: float
    degrees_of_freedom: int
    cohens_d: float
    n_pairs: int


def compare_paired(condition_a: str, condition_b: str,
                   a: Sequence[float], b: Sequence[float]) -> StatComparison:
    t, p, dof = paired_t_test(a, b)
    d = cohens_d_paired(a, b)
    return StatComparison(
        condition_a=condition_a,
        condition_b=condition_b,
        t_statistic=t,
        p_value=p,
        degrees_of_freedom=dof,
        cohens_d=d,
        n_pairs=len(a),
    )
