"""Divergence-sample generation between two datasets.

For each of R refits, one VAE is trained per dataset with refit-specific
seeds, n output-distribution pairs are drawn from the trained pair, and
the averaged symmetric divergence of each pair is recorded. Refits use
distinct seeds so the non-identifiable (mu, sigma) generators contribute
in equal proportion.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import seeds
from .divergence import avg_sym_divergence
from .errors import NumericError
from .nn import TrainConfig
from .vae import train_vae


@dataclass
class ComparisonConfig:
    """Inputs of the divergence-sample generator."""

    samples_per_refit: int = 100
    refits: int = 3
    family: str = "gaussian"
    train_config: TrainConfig = field(default_factory=TrainConfig)
    master_seed: int = 0
    latent_dim: int = 10
    hidden_layers: int = 3
    hidden_units: int = 50
    dropout_rate: float = 0.5

    def __post_init__(self):
        if self.samples_per_refit < 1:
            raise ValueError("samples_per_refit must be >= 1")
        if self.refits < 1:
            raise ValueError("refits must be >= 1")


@dataclass
class DivergenceSamples:
    """Divergence values with the refit that produced each one."""

    values: np.ndarray
    refit_index: np.ndarray
    config_echo: ComparisonConfig


@dataclass
class SummaryStats:
    """Box-plot summary: quartiles, Tukey whiskers, outlier count."""

    mean: float
    median: float
    q1: float
    q3: float
    whisker_low: float
    whisker_high: float
    outlier_count: int


class RefitError(NumericError):
    """Training failed inside a refit; carries the refit index."""

    def __init__(self, refit: int, message: str):
        super().__init__(f"refit {refit}: {message}")
        self.refit = refit


def _single_refit(d1, d2, config: ComparisonConfig, refit: int) -> np.ndarray:
    tc = config.train_config
    try:
        v1, _ = train_vae(d1, config.family,
                          replace(tc, seed=seeds.derive_seed(config.master_seed, refit, seeds.TRAIN_FIRST)),
                          latent_dim=config.latent_dim, hidden_layers=config.hidden_layers,
                          hidden_units=config.hidden_units, dropout_rate=config.dropout_rate)
        v2, _ = train_vae(d2, config.family,
                          replace(tc, seed=seeds.derive_seed(config.master_seed, refit, seeds.TRAIN_SECOND)),
                          latent_dim=config.latent_dim, hidden_layers=config.hidden_layers,
                          hidden_units=config.hidden_units, dropout_rate=config.dropout_rate)
    except (NumericError, FloatingPointError) as exc:
        raise RefitError(refit, str(exc)) from exc
    s1 = v1.sample_outputs(config.samples_per_refit,
                           seeds.derive_rng(config.master_seed, refit, seeds.SAMPLE_FIRST))
    s2 = v2.sample_outputs(config.samples_per_refit,
                           seeds.derive_rng(config.master_seed, refit, seeds.SAMPLE_SECOND))
    return np.array([avg_sym_divergence(a, b) for a, b in zip(s1, s2)])


def generate_divergence_samples(d1: np.ndarray, d2: np.ndarray, config: ComparisonConfig,
                                threads: int = 1) -> DivergenceSamples:
    """Run all refits and collect n * R divergence samples.

    Refits are independent; with threads > 1 they run concurrently, and the
    output ordering (by refit index) is identical either way.
    """
    d1 = np.asarray(d1, dtype=np.float64)
    d2 = np.asarray(d2, dtype=np.float64)
    if d1.size == 0 or d2.size == 0:
        raise ValueError("datasets must be nonempty")
    if d1.shape[1] != d2.shape[1]:
        raise ValueError(f"datasets have different column counts: {d1.shape[1]} vs {d2.shape[1]}")

    if threads > 1 and config.refits > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_single_refit, d1, d2, config, r) for r in range(config.refits)]
            per_refit = [f.result() for f in futures]
    else:
        per_refit = [_single_refit(d1, d2, config, r) for r in range(config.refits)]

    values = np.concatenate(per_refit)
    refit_index = np.repeat(np.arange(config.refits), config.samples_per_refit)
    return DivergenceSamples(values=values, refit_index=refit_index, config_echo=config)


def split_half(data: np.ndarray, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle, then split rows into disjoint floor/ceil halves."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < 2:
        raise ValueError("need at least 2 rows to split")
    order = seeds.derive_rng(seed, seeds.SPLIT).permutation(data.shape[0])
    half = data.shape[0] // 2
    return data[order[:half]], data[order[half:]]


def summarize(samples: DivergenceSamples | np.ndarray) -> SummaryStats:
    """Box-plot statistics with linearly interpolated quartiles and Tukey whiskers."""
    values = samples.values if isinstance(samples, DivergenceSamples) else np.asarray(samples)
    if values.size == 0:
        raise ValueError("cannot summarize an empty sample set")
    q1, median, q3 = np.percentile(values, [25.0, 50.0, 75.0])
    iqr = q3 - q1
    low_fence = q1 - 1.5 * iqr
    high_fence = q3 + 1.5 * iqr
    inside = values[(values >= low_fence) & (values <= high_fence)]
    return SummaryStats(
        mean=float(values.mean()),
        median=float(median),
        q1=float(q1),
        q3=float(q3),
        whisker_low=float(inside.min()),
        whisker_high=float(inside.max()),
        outlier_count=int(values.size - inside.size),
    )


def gaussian_baseline() -> float:
    """Averaged symmetric divergence between N(0, I) and N(1, I): exactly 1/2."""
    return 0.5
