"""Dataset divergence measurement and two-sample testing with VAEs."""

from .checkpoint import load_checkpoint, save_checkpoint
from .comparison import (ComparisonConfig, DivergenceSamples, RefitError, SummaryStats,
                         gaussian_baseline, generate_divergence_samples, split_half, summarize)
from .dataio import load_dataset, save_dataset
from .datagen import SimConfig, pvalue_ecdf_experiment, simulate_dataset
from .divergence import (FullGaussian, avg_sym_divergence, bernoulli_baseline,
                         kl_gaussian_diag, kl_gaussian_full, sym_kl_bernoulli)
from .errors import ConfigError, DataError, NumericError, VaedivError
from .htest import HtestConfig, TestReport, classify_outcome, decide, permutation_test, permute_pair
from .nn import (AdamaxState, BatchNorm, DenseNet, Layer, TrainConfig, TrainHistory,
                 adamax_step, build_mlp, elu, elu_grad, he_init, train_early_stopping)
from .vae import (BernoulliVec, DiagGaussian, VaeModel, build_vae, kl_posterior_prior,
                  negative_elbo, negative_elbo_grad, reparameterize, train_vae)

__version__ = "0.1.0"
