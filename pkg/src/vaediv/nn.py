"""Minimal dense feed-forward network engine.

Fixed layer menu: affine -> optional batch normalization -> activation
(ELU or linear) -> optional inverted dropout. Reverse-mode gradients are
hand-coded for exactly this menu; there is no general autodiff. Training
uses Adamax with reduce-on-plateau learning-rate halving and validation
early stopping.

All stochastic operations take an explicit numpy Generator, so every
result is a pure function of (inputs, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError

BN_EPSILON = 1e-5
BN_MOMENTUM = 0.1


def elu(x):
    """ELU activation: x for x > 0, exp(x) - 1 otherwise."""
    x = np.asarray(x, dtype=np.float64)
    # expm1 argument capped at 0 so the discarded branch cannot overflow
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))


def elu_grad(x):
    """Derivative of ELU; continuous at 0 where both branches equal 1."""
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > 0, 1.0, np.exp(np.minimum(x, 0.0)))


def he_init(fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    """Zero-mean Gaussian weights with variance 2 / fan_in."""
    if fan_in < 1 or fan_out < 1:
        raise ValueError(f"fan_in and fan_out must be >= 1, got ({fan_in}, {fan_out})")
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))


class BatchNorm:
    """Per-feature batch normalization state.

    Train mode normalizes with batch statistics (biased variance) and folds
    them into the running estimates; eval mode uses the running estimates
    only.
    """

    def __init__(self, width: int, momentum: float = BN_MOMENTUM, eps: float = BN_EPSILON):
        self.gamma = np.ones(width)
        self.beta = np.zeros(width)
        self.running_mean = np.zeros(width)
        self.running_var = np.ones(width)
        self.momentum = momentum
        self.eps = eps


class Layer:
    """One dense layer: affine, optional batch norm, activation, optional dropout."""

    def __init__(self, weights: np.ndarray, bias: np.ndarray, activation: str = "linear",
                 batchnorm: BatchNorm | None = None, dropout: bool = False):
        if activation not in ("elu", "linear"):
            raise ValueError(f"unknown activation {activation!r}")
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)
        self.activation = activation
        self.batchnorm = batchnorm
        self.dropout = dropout

    @property
    def in_width(self) -> int:
        return self.weights.shape[0]

    @property
    def out_width(self) -> int:
        return self.weights.shape[1]

    def param_count(self) -> int:
        n = self.weights.size + self.bias.size
        if self.batchnorm is not None:
            n += self.batchnorm.gamma.size + self.batchnorm.beta.size
        return n


class DenseNet:
    """Stack of layers with cached-tape backprop.

    `mode` is 'train' or 'eval'; train-mode forward caches intermediates
    for `backward` and consumes the rng for dropout masks.
    """

    def __init__(self, layers: list[Layer], dropout_rate: float = 0.5):
        if not 0.0 <= dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        for a, b in zip(layers, layers[1:]):
            if a.out_width != b.in_width:
                raise ValueError(f"layer widths do not chain: {a.out_width} -> {b.in_width}")
        self.layers = layers
        self.dropout_rate = dropout_rate
        self.mode = "eval"
        self._tape = None

    @property
    def in_width(self) -> int:
        return self.layers[0].in_width

    @property
    def out_width(self) -> int:
        return self.layers[-1].out_width

    def set_mode(self, mode: str) -> None:
        if mode not in ("train", "eval"):
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode
        if mode == "eval":
            self._tape = None

    def forward(self, batch: np.ndarray, rng: np.random.Generator | None = None) -> np.ndarray:
        """Run the stack on a (rows, in_width) batch.

        Train mode records the tape needed by `backward` and requires an
        rng when any layer drops out.
        """
        x = np.asarray(batch, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_width:
            raise ValueError(f"expected batch of shape (n, {self.in_width}), got {x.shape}")
        train = self.mode == "train"
        tape = [] if train else None
        for layer in self.layers:
            rec = {"x": x}
            h = x @ layer.weights + layer.bias
            bn = layer.batchnorm
            if bn is not None:
                if train:
                    mean = h.mean(axis=0)
                    var = h.var(axis=0)
                    bn.running_mean = (1 - bn.momentum) * bn.running_mean + bn.momentum * mean
                    bn.running_var = (1 - bn.momentum) * bn.running_var + bn.momentum * var
                else:
                    mean = bn.running_mean
                    var = bn.running_var
                inv_std = 1.0 / np.sqrt(var + bn.eps)
                h_hat = (h - mean) * inv_std
                z = bn.gamma * h_hat + bn.beta
                if train:
                    rec.update(h_hat=h_hat, inv_std=inv_std)
            else:
                z = h
            a = elu(z) if layer.activation == "elu" else z
            if train:
                rec["z"] = z
            if layer.dropout and self.dropout_rate > 0.0:
                if train:
                    if rng is None:
                        raise ValueError("train-mode forward with dropout requires an rng")
                    keep = 1.0 - self.dropout_rate
                    mask = (rng.random(a.shape) < keep) / keep
                    a = a * mask
                    rec["mask"] = mask
                # eval mode: inverted scaling at train time means no rescale here
            x = a
            if train:
                tape.append(rec)
        if train:
            self._tape = tape
        return x

    def backward(self, loss_grad: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Chain-rule gradients from d(loss)/d(output) back to every parameter.

        Returns (flat parameter gradient, gradient w.r.t. the input batch).
        Requires a preceding train-mode forward on this net.
        """
        if self._tape is None:
            raise RuntimeError("backward called without a cached train-mode forward")
        grad = np.asarray(loss_grad, dtype=np.float64)
        rows = self._tape[0]["x"].shape[0]
        if grad.shape != (rows, self.out_width):
            raise ValueError(f"expected loss_grad of shape ({rows}, {self.out_width}), got {grad.shape}")
        chunks: list[np.ndarray] = []
        for layer, rec in zip(reversed(self.layers), reversed(self._tape)):
            if layer.dropout and self.dropout_rate > 0.0:
                grad = grad * rec["mask"]
            if layer.activation == "elu":
                grad = grad * elu_grad(rec["z"])
            bn = layer.batchnorm
            if bn is not None:
                h_hat, inv_std = rec["h_hat"], rec["inv_std"]
                n = h_hat.shape[0]
                centered = h_hat / inv_std
                d_gamma = (grad * h_hat).sum(axis=0)
                d_beta = grad.sum(axis=0)
                d_hat = grad * bn.gamma
                # standard batch-norm backward through batch mean/variance
                d_var = (d_hat * centered).sum(axis=0) * (-0.5) * inv_std ** 3
                d_mean = (d_hat * -inv_std).sum(axis=0) + d_var * (-2.0 * centered).mean(axis=0)
                grad = d_hat * inv_std + d_var * 2.0 * centered / n + d_mean / n
            else:
                d_gamma = d_beta = None
            x = rec["x"]
            d_w = x.T @ grad
            d_b = grad.sum(axis=0)
            grad = grad @ layer.weights.T
            parts = [d_w.ravel(), d_b]
            if d_gamma is not None:
                parts += [d_gamma, d_beta]
            chunks.append(np.concatenate(parts))
        flat = np.concatenate(chunks[::-1])
        return flat, grad

    # --- flat parameter view (canonical order: per layer W row-major, b, gamma, beta) ---

    def param_count(self) -> int:
        return sum(layer.param_count() for layer in self.layers)

    def flat_params(self) -> np.ndarray:
        parts = []
        for layer in self.layers:
            parts += [layer.weights.ravel(), layer.bias]
            if layer.batchnorm is not None:
                parts += [layer.batchnorm.gamma, layer.batchnorm.beta]
        return np.concatenate(parts)

    def set_flat_params(self, vec: np.ndarray) -> None:
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (self.param_count(),):
            raise ValueError(f"expected {self.param_count()} parameters, got {vec.shape}")
        pos = 0

        def take(n, shape=None):
            nonlocal pos
            out = vec[pos:pos + n].copy()
            pos += n
            return out.reshape(shape) if shape else out

        for layer in self.layers:
            layer.weights = take(layer.weights.size, layer.weights.shape)
            layer.bias = take(layer.bias.size)
            if layer.batchnorm is not None:
                layer.batchnorm.gamma = take(layer.batchnorm.gamma.size)
                layer.batchnorm.beta = take(layer.batchnorm.beta.size)


def build_mlp(in_width: int, hidden: list[int], out_width: int, rng: np.random.Generator,
              dropout_rate: float = 0.5, batchnorm: bool = True) -> DenseNet:
    """He-initialized MLP: ELU/batch-norm/dropout hidden layers, linear output head."""
    layers = []
    prev = in_width
    for width in hidden:
        layers.append(Layer(
            he_init(prev, width, rng), np.zeros(width), activation="elu",
            batchnorm=BatchNorm(width) if batchnorm else None, dropout=True,
        ))
        prev = width
    layers.append(Layer(he_init(prev, out_width, rng), np.zeros(out_width)))
    return DenseNet(layers, dropout_rate=dropout_rate)


# --- Adamax ---

ADAMAX_U_FLOOR = 1e-8


@dataclass
class AdamaxState:
    """Optimizer state over a flat parameter vector."""

    first_moment: np.ndarray
    inf_norm: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    learning_rate: float = 0.01

    @classmethod
    def for_params(cls, params: np.ndarray, learning_rate: float = 0.01) -> "AdamaxState":
        return cls(first_moment=np.zeros_like(params), inf_norm=np.zeros_like(params),
                   learning_rate=learning_rate)


def adamax_step(params: np.ndarray, grads: np.ndarray, state: AdamaxState) -> np.ndarray:
    """One Adamax update; mutates `state`, returns the new parameter vector.

    m <- b1*m + (1-b1)*g ; u <- max(b2*u, |g|) ;
    theta <- theta - lr/(1-b1^t) * m/u, with u floored to avoid dividing by zero.
    """
    grads = np.asarray(grads, dtype=np.float64)
    if grads.shape != params.shape or grads.shape != state.first_moment.shape:
        raise ValueError("params, grads and state vectors must be congruent")
    if not np.isfinite(grads).all():
        raise NumericError("non-finite gradient: training diverged")
    state.step += 1
    state.first_moment = state.beta1 * state.first_moment + (1 - state.beta1) * grads
    state.inf_norm = np.maximum(state.beta2 * state.inf_norm, np.abs(grads))
    scale = state.learning_rate / (1 - state.beta1 ** state.step)
    return params - scale * state.first_moment / np.maximum(state.inf_norm, ADAMAX_U_FLOOR)


# --- training loop ---


@dataclass
class TrainConfig:
    """Early-stopping training hyperparameters."""

    initial_lr: float = 0.01
    patience_epochs: int = 50
    val_fraction: float = 0.10
    batch_size: int = 64
    max_epochs: int = 1000
    lr_halving_patience: int = 20
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must be in (0, 1)")
        if self.patience_epochs < 1:
            raise ValueError("patience_epochs must be >= 1")
        if self.initial_lr <= 0:
            raise ValueError("initial_lr must be positive")


@dataclass
class TrainHistory:
    """Per-epoch losses plus where the best validation loss occurred."""

    train_losses: list = field(default_factory=list)
    val_losses: list = field(default_factory=list)
    best_epoch: int = -1
    best_val_loss: float = np.inf
    final_lr: float = 0.0


def train_early_stopping(model, data: np.ndarray, loss_grad_fn, config: TrainConfig,
                         eval_loss_fn=None):
    """Minibatch Adamax training with validation-based early stopping.

    `model` must expose flat_params()/set_flat_params()/set_mode().
    `loss_grad_fn(model, batch, rng) -> (loss, flat_grad)` drives the updates;
    `eval_loss_fn(model, batch, rng) -> loss` scores validation (defaults to
    the loss part of `loss_grad_fn`). Validation re-uses the same noise seed
    every epoch so epochs are compared on identical draws.

    Halves the learning rate after `lr_halving_patience` epochs without
    validation improvement, stops after `patience_epochs` without
    improvement, and restores the best-epoch parameters.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < 10:
        raise ValueError("training data must be a 2-D array with at least 10 rows")
    if eval_loss_fn is None:
        eval_loss_fn = lambda m, batch, rng: loss_grad_fn(m, batch, rng)[0]

    n = data.shape[0]
    split_rng = np.random.default_rng(config.seed)
    order = split_rng.permutation(n)
    n_val = min(max(1, round(config.val_fraction * n)), n - 1)
    val_data = data[order[:n_val]]
    train_data = data[order[n_val:]]

    train_rng = np.random.default_rng(np.random.SeedSequence([config.seed & ((1 << 64) - 1), 1]))
    val_seed = np.random.SeedSequence([config.seed & ((1 << 64) - 1), 2]).generate_state(1)[0]

    params = model.flat_params()
    state = AdamaxState.for_params(params, learning_rate=config.initial_lr)
    history = TrainHistory()
    best_params = params.copy()
    since_improve = 0
    since_halve = 0

    for epoch in range(config.max_epochs):
        model.set_mode("train")
        order = train_rng.permutation(train_data.shape[0])
        epoch_losses = []
        for start in range(0, len(order), config.batch_size):
            batch = train_data[order[start:start + config.batch_size]]
            loss, grad = loss_grad_fn(model, batch, train_rng)
            if not np.isfinite(loss):
                raise NumericError(f"non-finite training loss at epoch {epoch}")
            params = adamax_step(params, grad, state)
            model.set_flat_params(params)
            epoch_losses.append(loss)

        model.set_mode("eval")
        val_loss = float(eval_loss_fn(model, val_data, np.random.default_rng(val_seed)))
        if not np.isfinite(val_loss):
            raise NumericError(f"non-finite validation loss at epoch {epoch}")
        history.train_losses.append(float(np.mean(epoch_losses)))
        history.val_losses.append(val_loss)

        if val_loss < history.best_val_loss:
            history.best_val_loss = val_loss
            history.best_epoch = epoch
            best_params = params.copy()
            since_improve = 0
            since_halve = 0
        else:
            since_improve += 1
            since_halve += 1
            if since_improve >= config.patience_epochs:
                break
            if since_halve >= config.lr_halving_patience:
                state.learning_rate *= 0.5
                since_halve = 0

    model.set_flat_params(best_params)
    model.set_mode("eval")
    history.final_lr = state.learning_rate
    return model, history
