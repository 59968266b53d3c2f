"""Model checkpoint format.

Layout: magic "VAEC", format version u32 LE, u32 LE metadata length, the
UTF-8 JSON metadata block (topology, decoder family, latent dim, seed),
then every parameter as float64 LE in layer order: weights row-major,
bias, and for batch-normalized layers gamma, beta, running mean, running
variance. Encoder layers come before decoder layers. Round-trips are
bit-exact.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import DataError
from .nn import BatchNorm, DenseNet, Layer
from .vae import VaeModel

CHECKPOINT_MAGIC = b"VAEC"
CHECKPOINT_VERSION = 1


def _net_meta(net: DenseNet) -> dict:
    return {
        "dropout_rate": net.dropout_rate,
        "layers": [
            {
                "in": layer.in_width,
                "out": layer.out_width,
                "activation": layer.activation,
                "batchnorm": layer.batchnorm is not None,
                "dropout": layer.dropout,
            }
            for layer in net.layers
        ],
    }


def _net_arrays(net: DenseNet) -> list[np.ndarray]:
    arrays = []
    for layer in net.layers:
        arrays += [layer.weights.ravel(), layer.bias]
        bn = layer.batchnorm
        if bn is not None:
            arrays += [bn.gamma, bn.beta, bn.running_mean, bn.running_var]
    return arrays


def save_checkpoint(model: VaeModel, path) -> None:
    meta = {
        "family": model.family,
        "latent_dim": model.latent_dim,
        "data_dim": model.data_dim,
        "seed": model.seed,
        "topology": {"encoder": _net_meta(model.encoder), "decoder": _net_meta(model.decoder)},
    }
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    payload = np.concatenate(_net_arrays(model.encoder) + _net_arrays(model.decoder))
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", CHECKPOINT_VERSION))
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(payload.astype("<f8").tobytes())


def _rebuild_net(meta: dict, values: np.ndarray, pos: int) -> tuple[DenseNet, int]:
    layers = []
    for spec in meta["layers"]:
        n_in, n_out = spec["in"], spec["out"]

        def take(count):
            nonlocal pos
            out = values[pos:pos + count]
            pos += count
            return out.copy()

        weights = take(n_in * n_out).reshape(n_in, n_out)
        bias = take(n_out)
        bn = None
        if spec["batchnorm"]:
            bn = BatchNorm(n_out)
            bn.gamma = take(n_out)
            bn.beta = take(n_out)
            bn.running_mean = take(n_out)
            bn.running_var = take(n_out)
        layers.append(Layer(weights, bias, activation=spec["activation"],
                            batchnorm=bn, dropout=spec["dropout"]))
    return DenseNet(layers, dropout_rate=meta["dropout_rate"]), pos


def load_checkpoint(path) -> VaeModel:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"checkpoint file not found: {path}")
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise DataError(f"{path}: bad magic {magic!r}, expected {CHECKPOINT_MAGIC!r}")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != CHECKPOINT_VERSION:
            raise DataError(f"{path}: unsupported checkpoint version {version}")
        (meta_len,) = struct.unpack("<I", fh.read(4))
        try:
            meta = json.loads(fh.read(meta_len).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise DataError(f"{path}: corrupt metadata block") from exc
        values = np.frombuffer(fh.read(), dtype="<f8").astype(np.float64)
    encoder, pos = _rebuild_net(meta["topology"]["encoder"], values, 0)
    decoder, pos = _rebuild_net(meta["topology"]["decoder"], values, pos)
    if pos != values.size:
        raise DataError(f"{path}: parameter payload size mismatch")
    return VaeModel(encoder, decoder, meta["latent_dim"], meta["family"],
                    meta["data_dim"], seed=meta["seed"])
