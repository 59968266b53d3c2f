"""Variational autoencoder on top of the dense-net engine.

The encoder maps a data vector to the mean and log-variance of a diagonal
Gaussian over latent space; the decoder maps a latent vector to the
parameters of the output family (diagonal Gaussian or independent
Bernoulli). Training minimizes the negative evidence lower bound with one
reparameterized latent draw per instance. Generation draws latents from
the standard-normal prior and returns the decoded *distribution
parameters*, which downstream divergence code consumes directly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit

from . import seeds
from .errors import DataError
from .nn import DenseNet, TrainConfig, TrainHistory, build_mlp, train_early_stopping

LOGVAR_MIN = -20.0
LOGVAR_MAX = 20.0
PROB_CLAMP = 1e-6

GAUSSIAN = "gaussian"
BERNOULLI = "bernoulli"
FAMILIES = (GAUSSIAN, BERNOULLI)

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class DiagGaussian:
    """Gaussian with diagonal covariance: per-coordinate mean and scale."""

    mu: np.ndarray
    sigma: np.ndarray

    @property
    def dim(self) -> int:
        return self.mu.shape[-1]


@dataclass
class BernoulliVec:
    """Vector of independent Bernoulli probabilities, clamped away from {0, 1}."""

    p: np.ndarray

    @property
    def dim(self) -> int:
        return self.p.shape[-1]


class VaeModel:
    """Trained encoder/decoder pair with its output family."""

    def __init__(self, encoder: DenseNet, decoder: DenseNet, latent_dim: int,
                 family: str, data_dim: int, seed: int = 0):
        if family not in FAMILIES:
            raise ValueError(f"unknown family {family!r}")
        if encoder.out_width != 2 * latent_dim:
            raise ValueError("encoder output width must be 2 * latent_dim")
        expected = 2 * data_dim if family == GAUSSIAN else data_dim
        if decoder.out_width != expected:
            raise ValueError(f"decoder output width must be {expected} for family {family!r}")
        self.encoder = encoder
        self.decoder = decoder
        self.latent_dim = latent_dim
        self.family = family
        self.data_dim = data_dim
        self.seed = seed

    def set_mode(self, mode: str) -> None:
        self.encoder.set_mode(mode)
        self.decoder.set_mode(mode)

    def flat_params(self) -> np.ndarray:
        return np.concatenate([self.encoder.flat_params(), self.decoder.flat_params()])

    def set_flat_params(self, vec: np.ndarray) -> None:
        n_enc = self.encoder.param_count()
        self.encoder.set_flat_params(vec[:n_enc])
        self.decoder.set_flat_params(vec[n_enc:])

    def encode(self, x: np.ndarray) -> DiagGaussian:
        """Approximate posterior over latents for one data vector."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.data_dim,):
            raise ValueError(f"expected a vector of length {self.data_dim}, got {x.shape}")
        mu, sigma = self._encode_batch(x[None, :])
        return DiagGaussian(mu[0], sigma[0])

    def decode(self, z: np.ndarray) -> DiagGaussian | BernoulliVec:
        """Output distribution parameters for one latent vector."""
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (self.latent_dim,):
            raise ValueError(f"expected a latent vector of length {self.latent_dim}, got {z.shape}")
        out = self.decoder.forward(z[None, :])
        if self.family == GAUSSIAN:
            mu, sigma = _split_gaussian(out, self.data_dim)
            return DiagGaussian(mu[0], sigma[0])
        return BernoulliVec(_bernoulli_probs(out)[0])

    def sample_outputs(self, n: int, rng: np.random.Generator) -> list:
        """Draw n latents from the prior and decode each in eval mode."""
        if n < 1:
            raise ValueError("n must be >= 1")
        mode = self.decoder.mode
        self.decoder.set_mode("eval")
        try:
            z = rng.standard_normal((n, self.latent_dim))
            out = self.decoder.forward(z)
        finally:
            self.decoder.set_mode(mode)
        if self.family == GAUSSIAN:
            mu, sigma = _split_gaussian(out, self.data_dim)
            return [DiagGaussian(mu[i], sigma[i]) for i in range(n)]
        p = _bernoulli_probs(out)
        return [BernoulliVec(p[i]) for i in range(n)]

    def _encode_batch(self, batch: np.ndarray, rng=None) -> tuple[np.ndarray, np.ndarray]:
        out = self.encoder.forward(batch, rng)
        mu = out[:, :self.latent_dim]
        logvar = np.clip(out[:, self.latent_dim:], LOGVAR_MIN, LOGVAR_MAX)
        return mu, np.exp(0.5 * logvar)


def _split_gaussian(out: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    mu = out[:, :d]
    logvar = np.clip(out[:, d:], LOGVAR_MIN, LOGVAR_MAX)
    return mu, np.exp(0.5 * logvar)


def _bernoulli_probs(out: np.ndarray) -> np.ndarray:
    return np.clip(expit(out), PROB_CLAMP, 1.0 - PROB_CLAMP)


def reparameterize(q: DiagGaussian, eps: np.ndarray) -> np.ndarray:
    """z = mu + sigma * eps with eps standard normal."""
    eps = np.asarray(eps, dtype=np.float64)
    if eps.shape != q.mu.shape:
        raise ValueError("eps shape must match the distribution dimension")
    return q.mu + q.sigma * eps


def kl_posterior_prior(q: DiagGaussian) -> float:
    """KL(N(mu, diag sigma^2) || N(0, I)) = 1/2 sum(mu^2 + sigma^2 - 1 - 2 log sigma)."""
    return float(0.5 * np.sum(q.mu ** 2 + q.sigma ** 2 - 1.0 - 2.0 * np.log(q.sigma)))


def negative_elbo(model: VaeModel, batch: np.ndarray, rng: np.random.Generator) -> float:
    """Mean over the batch of (-reconstruction log-likelihood + posterior KL)."""
    loss, _ = _elbo_pass(model, batch, rng, want_grad=False)
    return loss


def negative_elbo_grad(model: VaeModel, batch: np.ndarray,
                       rng: np.random.Generator) -> tuple[float, np.ndarray]:
    """Negative ELBO and its gradient w.r.t. the model's flat parameters."""
    return _elbo_pass(model, batch, rng, want_grad=True)


def _elbo_pass(model, batch, rng, want_grad):
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[0] == 0:
        raise ValueError("batch must be a nonempty 2-D array")
    if model.family == BERNOULLI and (batch.min() < 0.0 or batch.max() > 1.0):
        raise DataError("Bernoulli family requires inputs in [0, 1]")
    n = batch.shape[0]
    train = want_grad
    if train:
        model.encoder.set_mode("train")
        model.decoder.set_mode("train")

    enc_out = model.encoder.forward(batch, rng)
    L = model.latent_dim
    mu = enc_out[:, :L]
    logvar_raw = enc_out[:, L:]
    lv_mask = (logvar_raw > LOGVAR_MIN) & (logvar_raw < LOGVAR_MAX)
    logvar = np.clip(logvar_raw, LOGVAR_MIN, LOGVAR_MAX)
    sigma = np.exp(0.5 * logvar)

    eps = rng.standard_normal(mu.shape)
    z = mu + sigma * eps

    dec_out = model.decoder.forward(z, rng)
    kl = 0.5 * np.sum(mu ** 2 + np.exp(logvar) - 1.0 - logvar)

    if model.family == GAUSSIAN:
        d = model.data_dim
        dmu = dec_out[:, :d]
        dlv_raw = dec_out[:, d:]
        dlv_mask = (dlv_raw > LOGVAR_MIN) & (dlv_raw < LOGVAR_MAX)
        dlv = np.clip(dlv_raw, LOGVAR_MIN, LOGVAR_MAX)
        inv_var = np.exp(-dlv)
        resid = batch - dmu
        recon = np.sum(-0.5 * LOG_2PI - 0.5 * dlv - 0.5 * resid ** 2 * inv_var)
    else:
        s = expit(dec_out)
        p = np.clip(s, PROB_CLAMP, 1.0 - PROB_CLAMP)
        p_mask = (s > PROB_CLAMP) & (s < 1.0 - PROB_CLAMP)
        recon = np.sum(batch * np.log(p) + (1.0 - batch) * np.log(1.0 - p))

    loss = float((-recon + kl) / n)
    if not want_grad:
        return loss, None

    # reconstruction gradient at the decoder output, including the 1/n of the mean
    if model.family == GAUSSIAN:
        g_mu = -(resid * inv_var) / n
        g_lv = (0.5 - 0.5 * resid ** 2 * inv_var) / n * dlv_mask
        dec_grad = np.concatenate([g_mu, g_lv], axis=1)
    else:
        # d(-recon)/dp = -(x/p - (1-x)/(1-p)); dp/d(raw) = s(1-s) inside the clamp
        dp = -(batch / p - (1.0 - batch) / (1.0 - p)) / n
        dec_grad = dp * s * (1.0 - s) * p_mask

    dec_flat, dz = model.decoder.backward(dec_grad)

    g_enc_mu = dz + mu / n
    g_enc_lv = (dz * eps * 0.5 * sigma + 0.5 * (np.exp(logvar) - 1.0) / n) * lv_mask
    enc_grad = np.concatenate([g_enc_mu, g_enc_lv], axis=1)
    enc_flat, _ = model.encoder.backward(enc_grad)

    return loss, np.concatenate([enc_flat, dec_flat])


def build_vae(data_dim: int, family: str, latent_dim: int = 10,
              hidden_layers: int = 3, hidden_units: int = 50,
              seed: int = 0, dropout_rate: float = 0.5) -> VaeModel:
    """He-initialized VAE with the configured topology."""
    rng = seeds.derive_rng(seed, 0)
    hidden = [hidden_units] * hidden_layers
    out_width = 2 * data_dim if family == GAUSSIAN else data_dim
    encoder = build_mlp(data_dim, hidden, 2 * latent_dim, rng, dropout_rate=dropout_rate)
    decoder = build_mlp(latent_dim, hidden, out_width, rng, dropout_rate=dropout_rate)
    return VaeModel(encoder, decoder, latent_dim, family, data_dim, seed=seed)


def train_vae(data: np.ndarray, family: str, config: TrainConfig,
              latent_dim: int = 10, hidden_layers: int = 3,
              hidden_units: int = 50, dropout_rate: float = 0.5) -> tuple[VaeModel, TrainHistory]:
    """Train a fresh VAE on `data` rows; deterministic given config.seed.

    Dropout at the reference rate of 0.5 presumes reference-width layers;
    narrow desk-scale nets train with dropout_rate=0.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < 10:
        raise ValueError("data must be a 2-D array with at least 10 rows")
    if family == BERNOULLI and (data.min() < 0.0 or data.max() > 1.0):
        raise DataError("Bernoulli family requires data in [0, 1]")
    model = build_vae(data.shape[1], family, latent_dim=latent_dim,
                      hidden_layers=hidden_layers, hidden_units=hidden_units,
                      seed=config.seed, dropout_rate=dropout_rate)
    model, history = train_early_stopping(model, data, negative_elbo_grad, config,
                                          eval_loss_fn=negative_elbo)
    return model, history
