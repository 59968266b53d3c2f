"""Command-line surface: simulate / compare / htest / ecdf.

Options come from a JSON config file (--config) and/or flags; flags
override file values, and unknown config-file keys are rejected. Every
command emits a JSON report that echoes the fully resolved configuration
and all seeds, so re-running a report's config reproduces its results
fields byte for byte.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric
failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time

import numpy as np

from . import dataio, datagen
from .comparison import (ComparisonConfig, DivergenceSamples, generate_divergence_samples,
                         gaussian_baseline, split_half, summarize)
from .divergence import bernoulli_baseline
from .errors import ConfigError, DataError, NumericError, VaedivError
from .htest import HtestConfig, permutation_test
from .nn import TrainConfig
from .vae import BERNOULLI, FAMILIES, GAUSSIAN

SCHEMA_VERSION = 1

# option name -> (parser, default, help); parser is applied to config-file
# values as well so files and flags go through the same validation
_TRAIN_OPTS = {
    "seed": (int, 0, "master seed for all derived randomness"),
    "family": (str, GAUSSIAN, f"decoder output family, one of {FAMILIES}"),
    "refits": (int, 3, "number of VAE refits per dataset (R)"),
    "samples_per_refit": (int, 100, "divergence samples per refit (n)"),
    "latent_dim": (int, 10, "latent dimension of the VAE"),
    "hidden_layers": (int, 3, "hidden layers in encoder and decoder"),
    "hidden_units": (int, 50, "units per hidden layer"),
    "dropout_rate": (float, 0.5, "train-time dropout rate on hidden layers"),
    "initial_lr": (float, 0.01, "initial Adamax learning rate"),
    "patience_epochs": (int, 50, "early-stopping patience in epochs"),
    "val_fraction": (float, 0.10, "validation split fraction"),
    "batch_size": (int, 64, "minibatch size"),
    "max_epochs": (int, 1000, "hard cap on training epochs"),
    "lr_halving_patience": (int, 20, "epochs without improvement before halving the learning rate"),
    "threads": (int, 1, "worker cap for concurrent refits/permutations"),
}

_HTEST_OPTS = {
    "permutations": (int, 100, "number of permutations (t)"),
    "averaging": (str, "mean", "statistic over divergence samples: mean or median"),
    "alpha": (float, 0.05, "significance level"),
}


def _float_list(text):
    if isinstance(text, list):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v != ""]


def _bool(value):
    if isinstance(value, bool):
        return value
    raise ValueError(f"expected a boolean, got {value!r}")


_COMMAND_OPTS = {
    "simulate": {
        **{k: _TRAIN_OPTS[k] for k in ("seed",)},
        "rows": (int, 500, "number of rows to simulate"),
        "shift": (float, 0.0, "location shift k applied to every coordinate"),
        "out_data": (str, None, "output dataset path (required)"),
        "format": (str, "csv", "dataset format: csv or bin"),
        "out": (str, None, "report JSON path (stdout if omitted)"),
    },
    "compare": {
        **_TRAIN_OPTS,
        "data1": (str, None, "first dataset path"),
        "data2": (str, None, "second dataset path (omit with self_split)"),
        "self_split": (_bool, False, "compare seeded halves of data1 against each other"),
        "format": (str, "csv", "dataset format: csv or bin"),
        "baseline_p": (float, 0.5, "Bernoulli yardstick p"),
        "baseline_q": (float, 0.8, "Bernoulli yardstick q"),
        "out": (str, None, "report JSON path (stdout if omitted)"),
    },
    "htest": {
        **_TRAIN_OPTS,
        **_HTEST_OPTS,
        "data1": (str, None, "first dataset path"),
        "data2": (str, None, "second dataset path"),
        "format": (str, "csv", "dataset format: csv or bin"),
        "out": (str, None, "report JSON path (stdout if omitted)"),
    },
    "ecdf": {
        **_TRAIN_OPTS,
        **_HTEST_OPTS,
        "shifts": (_float_list, [0.0, 1.0, 2.0, 4.0], "comma-separated shift values"),
        "runs_per_shift": (int, 50, "simulated test runs per shift"),
        "rows": (int, 500, "rows per simulated dataset"),
        "out": (str, None, "report JSON path (stdout if omitted)"),
    },
}

# ecdf's published default follows the harness convention of no refits
_COMMAND_OPTS["ecdf"]["refits"] = (int, 1, "number of VAE refits per dataset (R)")


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="vaediv",
                     description="Measure dataset divergence with VAEs and run permutation tests.")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, opts in _COMMAND_OPTS.items():
        p = sub.add_parser(command, help=f"run the {command} workflow")
        p.add_argument("--config", help="JSON config file; flags override file values")
        for key, (parse, default, help_text) in opts.items():
            flag = "--" + key.replace("_", "-")
            if parse is _bool:
                p.add_argument(flag, dest=key, action="store_true", default=None,
                               help=f"{help_text} (default {default})")
            elif parse is _float_list:
                p.add_argument(flag, dest=key, type=str, default=None,
                               help=f"{help_text} (default {default})")
            else:
                p.add_argument(flag, dest=key, type=parse, default=None,
                               help=f"{help_text} (default {default})")
    return parser


def _resolve_config(command: str, args: argparse.Namespace) -> dict:
    """defaults <- config file <- flags, rejecting unknown file keys."""
    opts = _COMMAND_OPTS[command]
    resolved = {key: default for key, (_, default, _) in opts.items()}
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = sorted(set(file_cfg) - set(opts))
        if unknown:
            raise ConfigError(f"unknown config keys for {command!r}: {', '.join(unknown)}")
        for key, value in file_cfg.items():
            parse = opts[key][0]
            try:
                resolved[key] = parse(value) if value is not None else None
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"config key {key!r}: {exc}") from exc
    for key in opts:
        flag_value = getattr(args, key)
        if flag_value is not None:
            resolved[key] = _float_list(flag_value) if opts[key][0] is _float_list else flag_value
    if "family" in resolved and resolved["family"] not in FAMILIES:
        raise ConfigError(f"family must be one of {FAMILIES}")
    if "averaging" in resolved and resolved["averaging"] not in ("mean", "median"):
        raise ConfigError("averaging must be 'mean' or 'median'")
    if "format" in resolved and resolved["format"] not in dataio.FORMATS:
        raise ConfigError(f"format must be one of {dataio.FORMATS}")
    return resolved


def _train_config(cfg: dict) -> TrainConfig:
    try:
        return TrainConfig(
            initial_lr=cfg["initial_lr"], patience_epochs=cfg["patience_epochs"],
            val_fraction=cfg["val_fraction"], batch_size=cfg["batch_size"],
            max_epochs=cfg["max_epochs"], lr_halving_patience=cfg["lr_halving_patience"],
            seed=cfg["seed"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _comparison_config(cfg: dict) -> ComparisonConfig:
    try:
        return ComparisonConfig(
            samples_per_refit=cfg["samples_per_refit"], refits=cfg["refits"],
            family=cfg["family"], train_config=_train_config(cfg),
            master_seed=cfg["seed"], latent_dim=cfg["latent_dim"],
            hidden_layers=cfg["hidden_layers"], hidden_units=cfg["hidden_units"],
            dropout_rate=cfg["dropout_rate"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _htest_config(cfg: dict) -> HtestConfig:
    try:
        return HtestConfig(comparison=_comparison_config(cfg),
                           permutations=cfg["permutations"],
                           averaging=cfg["averaging"], alpha=cfg["alpha"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _samples_dict(samples: DivergenceSamples) -> dict:
    return {
        "samples": [float(v) for v in samples.values],
        "refit_index": [int(r) for r in samples.refit_index],
        "summary": dataclasses.asdict(summarize(samples)),
    }


def _load_pair(cfg: dict) -> tuple[np.ndarray, np.ndarray]:
    require_unit = cfg["family"] == BERNOULLI
    if cfg.get("self_split"):
        if not cfg.get("data1"):
            raise ConfigError("self_split requires data1")
        data = dataio.load_dataset(cfg["data1"], cfg["format"], require_unit_range=require_unit)
        return split_half(data, cfg["seed"])
    if not cfg.get("data1") or not cfg.get("data2"):
        raise ConfigError("two dataset paths required (or self_split with data1)")
    d1 = dataio.load_dataset(cfg["data1"], cfg["format"], require_unit_range=require_unit)
    d2 = dataio.load_dataset(cfg["data2"], cfg["format"], require_unit_range=require_unit)
    return d1, d2


def cmd_simulate(cfg: dict) -> dict:
    if not cfg.get("out_data"):
        raise ConfigError("simulate requires out_data")
    data = datagen.simulate_dataset(datagen.SimConfig(cfg["rows"], cfg["shift"], seed=cfg["seed"]))
    try:
        dataio.save_dataset(data, cfg["out_data"], cfg["format"])
    except OSError as exc:
        raise DataError(f"cannot write dataset: {exc}") from exc
    return {"rows": int(data.shape[0]), "cols": int(data.shape[1]), "out_data": cfg["out_data"]}


def cmd_compare(cfg: dict) -> dict:
    d1, d2 = _load_pair(cfg)
    samples = generate_divergence_samples(d1, d2, _comparison_config(cfg),
                                          threads=cfg["threads"])
    if cfg["family"] == GAUSSIAN:
        baseline = {"kind": "gaussian", "value": gaussian_baseline()}
    else:
        baseline = {"kind": "bernoulli", "p": cfg["baseline_p"], "q": cfg["baseline_q"],
                    "value": bernoulli_baseline(cfg["baseline_p"], cfg["baseline_q"])}
    return {**_samples_dict(samples), "baseline": baseline}


def cmd_htest(cfg: dict) -> dict:
    d1, d2 = _load_pair(cfg)
    report = permutation_test(d1, d2, _htest_config(cfg), threads=cfg["threads"])
    return {
        "p_value": report.p_value,
        "decision": report.decision,
        "alpha": report.alpha,
        "averaging": report.averaging,
        "statistics": [float(k) for k in report.statistics],
        "permutation_seeds": report.permutation_seeds,
        "observed": _samples_dict(report.observed_divergences),
    }


def cmd_ecdf(cfg: dict) -> dict:
    experiment = datagen.pvalue_ecdf_experiment(cfg["shifts"], cfg["runs_per_shift"],
                                                _htest_config(cfg), n_rows=cfg["rows"],
                                                threads=cfg["threads"])
    return {
        "runs_per_shift": experiment.runs_per_shift,
        "rows": experiment.n_rows,
        "shifts": [
            {"shift": r.shift, "p_values": r.p_values,
             "ecdf": [[x, f] for x, f in r.ecdf]}
            for r in experiment.results
        ],
    }


_COMMANDS = {
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "htest": cmd_htest,
    "ecdf": cmd_ecdf,
}


def run_command(command: str, cfg: dict) -> dict:
    """Execute one command and wrap its results in a report document."""
    start = time.perf_counter()
    results = _COMMANDS[command](cfg)
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": cfg,
        "results": results,
        "seeds": {"master_seed": cfg["seed"]},
        "timing": {"seconds": time.perf_counter() - start},
    }


def _emit(report: dict, out_path) -> None:
    text = json.dumps(report, sort_keys=True, indent=2)
    if out_path:
        try:
            with open(out_path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        except OSError as exc:
            raise DataError(f"cannot write report: {exc}") from exc
    else:
        print(text)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _resolve_config(args.command, args)
        report = run_command(args.command, cfg)
        _emit(report, cfg.get("out"))
    except ConfigError as exc:
        print(f"vaediv: config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"vaediv: data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"vaediv: numeric failure: {exc}", file=sys.stderr)
        return 3
    except (VaedivError, ValueError) as exc:
        print(f"vaediv: data error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
