"""Command-line entry point: ``qfldp {train,accountant,synth,simulate}``."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import _rng, vqc
from .accountant import compute_epsilon
from .config import ConfigError, TrainingConfig, parse_values, read_text
from .data import DataFormatError, generate_synthetic, write_features_csv
from .experiment import PRESETS, RESULT_KEYS, preset_base, preset_configs, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    # usage errors are config errors, not argparse's default status 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser():
    parser = _Parser(prog="qfldp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="run an experiment or preset")
    train.add_argument("--config", help="key=value config file (a manifest works too)")
    train.add_argument("--preset", choices=sorted(PRESETS), help="named experiment preset")
    for key in TrainingConfig.keys():
        # flags accept both --snake_case and --kebab-case
        names = {f"--{key}", f"--{key.replace('_', '-')}"}
        train.add_argument(*sorted(names), dest=key, metavar="VALUE", default=None)

    acc = sub.add_parser("accountant", help="epsilon of the subsampled Gaussian mechanism")
    acc.add_argument("--q", type=float, required=True, help="Poisson sampling rate")
    acc.add_argument("--sigma", type=float, required=True, help="noise multiplier")
    acc.add_argument("--steps", type=int, required=True, help="number of composed steps")
    acc.add_argument("--delta", type=float, default=1e-5)
    acc.add_argument("--conversion", choices=("improved", "classic"), default="improved")

    synth = sub.add_parser("synth", help="write a synthetic feature CSV")
    synth.add_argument("--n_samples", "--n-samples", type=int, default=1000)
    synth.add_argument("--n_features", "--n-features", type=int, default=16)
    synth.add_argument("--separation", type=float, default=6.0)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--output", "-o", required=True)

    sim = sub.add_parser("simulate", help="VQC outputs and parameter-shift gradients for one input")
    sim.add_argument("--features", type=_float_list, required=True, help="4 comma-separated values")
    sim.add_argument("--angles", type=_float_list, help="12 comma-separated angles (default: seeded init)")
    sim.add_argument("--seed", type=int, default=0)
    return parser


def _format_epsilon(eps):
    # sigma = 0 has no finite guarantee
    return "inf (non-private)" if eps == float("inf") else f"{eps:.6g}"


def _train(args):
    base = TrainingConfig()
    if args.preset:
        base = base.override(**preset_base(args.preset))
    if args.config:
        base = base.override(**parse_values(read_text(args.config), ignore=RESULT_KEYS))
    base = base.override(**{k: getattr(args, k) for k in TrainingConfig.keys()})
    configs = preset_configs(args.preset, base) if args.preset else [base]
    for cfg in configs:
        result = run_experiment(cfg)
        acc = result.history[-1]["test_accuracy"] if result.history else float("nan")
        print(f"{result.output_dir}: rounds={len(result.history)} "
              f"epsilon={_format_epsilon(result.epsilon)} test_accuracy={acc:.4f}")
    return EXIT_OK


def _accountant(args):
    eps = compute_epsilon(args.q, args.sigma, args.steps, args.delta, conversion=args.conversion)
    print(f"epsilon={_format_epsilon(eps)} delta={args.delta:g} q={args.q:g} sigma={args.sigma:g} steps={args.steps}")
    return EXIT_OK


def _synth(args):
    data = generate_synthetic(
        args.n_samples, args.n_features, args.separation, _rng.stream(args.seed, _rng.SYNTHETIC_DATA)
    )
    write_features_csv(args.output, data)
    print(f"wrote {len(data)} examples with {data.n_features} features to {args.output}")
    return EXIT_OK


def _simulate(args):
    x = vqc.check_features(args.features)
    if args.angles is None:
        angles = vqc.init_angles(_rng.stream(args.seed, _rng.MODEL_INIT))
    else:
        angles = vqc.check_angles(args.angles)
    out, jac = vqc.forward_and_jacobian(x[None, :], angles)
    print("angles", " ".join(format(v, ".10g") for v in np.ravel(angles)))
    for k in range(vqc.N_OUTPUTS):
        print(f"<Z{k}>", format(out[0, k], ".12g"))
        print(f"d<Z{k}>/dangles", " ".join(format(v, ".10g") for v in jac[0, k]))
    return EXIT_OK


_COMMANDS = {"train": _train, "accountant": _accountant, "synth": _synth, "simulate": _simulate}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataFormatError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ArithmeticError, RuntimeError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # invalid parameter combinations caught by the components
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
