"""Permutation test for "both datasets share a data generating function".

The observed statistic K0 is the mean (or median) of the divergence
samples for the original pair. Each of the t permutations pools the rows
of both datasets, reshuffles them into two sets of the original sizes,
and recomputes the statistic with iteration-specific seeds. The p-value
is the fraction of permuted statistics that reach or exceed K0, so a
large observed divergence yields a small p-value; ties count toward the
numerator.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import seeds
from .comparison import ComparisonConfig, DivergenceSamples, generate_divergence_samples

MEAN = "mean"
MEDIAN = "median"

REJECT = "reject"
RETAIN = "retain"

GOOD = "good"
TYPE1 = "type1"
TYPE2 = "type2"


@dataclass
class HtestConfig:
    """Permutation-test parameters on top of a comparison configuration."""

    comparison: ComparisonConfig = field(default_factory=ComparisonConfig)
    permutations: int = 100
    averaging: str = MEAN
    alpha: float = 0.05

    def __post_init__(self):
        if self.permutations < 1:
            raise ValueError("permutations must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if self.averaging not in (MEAN, MEDIAN):
            raise ValueError(f"averaging must be {MEAN!r} or {MEDIAN!r}")


@dataclass
class TestReport:
    """Permutation-test outcome: p-value, all statistics, decision at alpha."""

    p_value: float
    statistics: list
    observed_divergences: DivergenceSamples
    decision: str
    alpha: float
    averaging: str
    permutation_seeds: list


def permute_pair(d1: np.ndarray, d2: np.ndarray,
                 rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Pool all rows, shuffle uniformly, reassign preserving the original sizes."""
    d1 = np.asarray(d1, dtype=np.float64)
    d2 = np.asarray(d2, dtype=np.float64)
    if d1.shape[1] != d2.shape[1]:
        raise ValueError("datasets have different column counts")
    pool = np.concatenate([d1, d2], axis=0)
    order = rng.permutation(pool.shape[0])
    pool = pool[order]
    return pool[:d1.shape[0]], pool[d1.shape[0]:]


def _averaging_fn(name: str):
    return np.mean if name == MEAN else np.median


def pvalue_from_statistics(observed: float, permuted) -> float:
    """Fraction of permuted statistics >= the observed one (ties count)."""
    permuted = np.asarray(permuted, dtype=np.float64)
    if permuted.size == 0:
        raise ValueError("need at least one permuted statistic")
    return float(np.count_nonzero(permuted >= observed) / permuted.size)


def permutation_test(d1: np.ndarray, d2: np.ndarray, config: HtestConfig,
                     threads: int = 1) -> TestReport:
    """Run the full permutation test; deterministic given the master seed.

    The t permuted statistics are independent given their derived seeds and
    may be computed concurrently; the report is assembled in iteration
    order either way.
    """
    d1 = np.asarray(d1, dtype=np.float64)
    d2 = np.asarray(d2, dtype=np.float64)
    if d1.shape[0] < 10 or d2.shape[0] < 10:
        raise ValueError("both datasets need at least 10 rows")
    master = config.comparison.master_seed
    avg = _averaging_fn(config.averaging)

    def statistic(iteration: int) -> tuple[float, DivergenceSamples]:
        if iteration == 0:
            a, b = d1, d2
        else:
            a, b = permute_pair(d1, d2, seeds.derive_rng(master, iteration, seeds.PERMUTE))
        cfg = replace(config.comparison,
                      master_seed=seeds.derive_seed(master, iteration, seeds.ITERATION))
        samples = generate_divergence_samples(a, b, cfg)
        return float(avg(samples.values)), samples

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(statistic, i) for i in range(config.permutations + 1)]
            results = [f.result() for f in futures]
    else:
        results = [statistic(i) for i in range(config.permutations + 1)]

    statistics = [k for k, _ in results]
    observed_samples = results[0][1]
    p_value = pvalue_from_statistics(statistics[0], statistics[1:])
    report = TestReport(
        p_value=p_value,
        statistics=statistics,
        observed_divergences=observed_samples,
        decision="",
        alpha=config.alpha,
        averaging=config.averaging,
        permutation_seeds=[seeds.derive_seed(master, i, seeds.PERMUTE)
                           for i in range(1, config.permutations + 1)],
    )
    report.decision = decide(report, config.alpha)
    return report


def decide(report: TestReport, alpha: float) -> str:
    """Reject the shared-generator hypothesis iff p < alpha (strict)."""
    return REJECT if report.p_value < alpha else RETAIN


def classify_outcome(decision: str, ground_truth_same: bool) -> str:
    """Score a decision against ground truth: type1 / type2 / good."""
    if decision == REJECT and ground_truth_same:
        return TYPE1
    if decision == RETAIN and not ground_truth_same:
        return TYPE2
    return GOOD
