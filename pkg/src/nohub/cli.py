"""Command-line front end: ``nohub {synth,embed,eval,hubness,sweep}``.

Every flag can also be set through an environment variable named
``NOHUB_<FLAG>`` (upper case, dashes as underscores), e.g. ``NOHUB_KAPPA=1``.
Command-line values win over the environment.

Exit codes: 0 success, 2 validation error, 3 runtime/numeric error,
4 I/O error.
"""
import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .affinity import SupportLabelInfo
from .errors import NoHubError
from .fslbench import METHODS, pool_source, run_benchmark, synth_pool, synthetic_source
from .hubness import METRICS, hubness
from .io import (
    FileFormatError,
    ResultRow,
    read_features,
    write_features,
    write_result_table,
    write_trace,
)
from .objective import NOHUB, NOHUB_S, NoHubConfig, embed

log = logging.getLogger("nohub")

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_IO = 0, 2, 3, 4
ENV_PREFIX = "NOHUB_"
SWEEP_PARAMS = ("alpha", "kappa", "epsilon")


class ValidationError(Exception):
    pass


def _csv_list(kind):
    def parse(text):
        items = [s.strip() for s in str(text).split(",") if s.strip()]
        try:
            return [kind(s) for s in items]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return parse


def _nohub_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("embedding hyperparameters")
    g.add_argument("--variant", choices=(NOHUB, NOHUB_S), default=NOHUB)
    g.add_argument("--alpha", type=float, default=0.2)
    g.add_argument("--kappa", type=float, default=0.5)
    g.add_argument("--perplexity", type=float, default=45.0)
    g.add_argument("--iterations", type=int, default=None,
                   help="default: 50 for nohub, 150 for nohub-s")
    g.add_argument("--lr", type=float, default=0.1, dest="learning_rate")
    g.add_argument("--dim", type=int, default=400)
    g.add_argument("--epsilon", type=float, default=8.0)
    return p


def _episode_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("episodes")
    g.add_argument("--pool", type=Path, help="labeled feature pool; synthetic episodes if omitted")
    g.add_argument("--ways", type=int, default=5)
    g.add_argument("--queries", type=int, default=15)
    g.add_argument("--episodes", type=int, default=500)
    g.add_argument("--feature-dim", type=int, default=512, help="synthetic feature dimension")
    g.add_argument("--separation", type=float, default=7.0)
    g.add_argument("--spread", type=float, default=1.0)
    g.add_argument("--k", type=int, default=5, help="neighborhood size for hubness")
    g.add_argument("--metric", choices=("euclidean", "cosine"), default="euclidean",
                   help="SimpleShot distance")
    g.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    return p


def build_parser(env_command=None) -> argparse.ArgumentParser:
    """Build the argument parser; `env_command` names the subcommand whose
    flags take defaults from the environment."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="nohub", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic labeled feature pool")
    p.add_argument("--classes", type=int, default=20)
    p.add_argument("--per-class", type=int, default=50)
    p.add_argument("--dim", type=int, default=512)
    p.add_argument("--separation", type=float, default=7.0)
    p.add_argument("--spread", type=float, default=1.0)
    p.add_argument("-o", "--output", type=Path, required=True)

    p = sub.add_parser("embed", parents=[common, _nohub_options()],
                       help="embed the rows of a feature file on the sphere")
    p.add_argument("-i", "--input", type=Path, required=True)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--trace", type=Path, help="loss trace CSV (default: <output>.trace.csv)")
    p.add_argument("--verify", action="store_true", help="check that every output row has unit norm")

    p = sub.add_parser("eval", parents=[common, _nohub_options(), _episode_options()],
                       help="benchmark embeddings with SimpleShot")
    p.add_argument("--methods", type=_csv_list(str), default=[NOHUB])
    p.add_argument("--shots", type=_csv_list(int), default=[1, 5])
    p.add_argument("-o", "--output", type=Path, required=True)

    p = sub.add_parser("hubness", parents=[common], help="hubness of the rows of a feature file")
    p.add_argument("-i", "--input", type=Path, required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--metric", choices=METRICS, default="cosine")
    p.add_argument("--hub-size", type=float, default=2.0)
    p.add_argument("-o", "--output", type=Path, help="CSV output (default: stdout)")

    p = sub.add_parser("sweep", parents=[common, _nohub_options(), _episode_options()],
                       help="benchmark over a grid of one hyperparameter")
    p.add_argument("--param", choices=SWEEP_PARAMS, required=True)
    p.add_argument("--values", type=_csv_list(float), required=True)
    p.add_argument("--method", choices=(NOHUB, NOHUB_S), default=NOHUB)
    p.add_argument("--shots", type=int, default=1)
    p.add_argument("-o", "--output", type=Path, required=True)

    if env_command in sub.choices:
        _apply_env(sub.choices[env_command])
    return parser


def _apply_env(parser: argparse.ArgumentParser):
    for action in parser._actions:
        if not action.option_strings or action.dest in ("help", "version"):
            continue
        flag = max(action.option_strings, key=len).lstrip("-")
        value = os.environ.get(ENV_PREFIX + flag.upper().replace("-", "_"))
        if value is None:
            continue
        if action.nargs == 0:
            action.default = value.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            try:
                action.default = action.type(value)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise ValidationError(f"bad value for {ENV_PREFIX}{flag.upper()}: {exc}") from None
        else:
            action.default = value
        action.required = False


def _config(args) -> NoHubConfig:
    try:
        return NoHubConfig(
            alpha=args.alpha, kappa=args.kappa, perplexity=args.perplexity,
            iterations=args.iterations, learning_rate=args.learning_rate, dim=args.dim,
            epsilon=args.epsilon, variant=args.variant, seed=args.seed,
        )
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


def _header(args) -> dict:
    out = {"nohub_version": __version__}
    for key, value in sorted(vars(args).items()):
        if key in ("func", "verbose"):
            continue
        out[key] = ",".join(map(str, value)) if isinstance(value, list) else value
    return out


def cmd_synth(args):
    if args.classes < 1 or args.per_class < 1:
        raise ValidationError("--classes and --per-class must be >= 1")
    if args.dim < 2:
        raise ValidationError(f"--dim must be >= 2, got {args.dim}")
    if args.separation < 0 or args.spread < 0:
        raise ValidationError("--separation and --spread must be >= 0")
    X, y = synth_pool(args.classes, args.per_class, args.dim, args.separation, args.spread, args.seed)
    write_features(args.output, X, y, _header(args))
    log.info("wrote %d x %d pool to %s", *X.shape, args.output)


def cmd_embed(args):
    config = _config(args)
    X, labels, _ = read_features(args.input)
    info = None
    if config.variant == NOHUB_S:
        if labels is None or not np.any(labels >= 0):
            raise ValidationError("--variant nohub-s needs a label column with labeled support rows")
        info = SupportLabelInfo.from_labels(labels)
    if not 2 <= config.perplexity <= X.shape[0] - 1:
        raise ValidationError(f"--perplexity must lie in [2, n-1={X.shape[0] - 1}]")
    result = embed(X, config, info)
    Z = result.embeddings
    if args.verify:
        err = np.max(np.abs(np.linalg.norm(Z, axis=1) - 1.0))
        if err > 1e-9:
            raise NoHubError(f"verification failed: max |norm - 1| = {err:.3e}")
        log.info("verified unit norms (max deviation %.2e)", err)
    header = _header(args) | {"iterations": config.iterations}
    write_features(args.output, Z, labels, header)
    trace = args.trace or args.output.with_name(args.output.stem + ".trace.csv")
    write_trace(trace, result.loss_trace, header)


def _source(args, shots):
    if args.pool is not None:
        X, y, _ = read_features(args.pool)
        if y is None:
            raise ValidationError(f"{args.pool} has no label column")
        return pool_source(X, y, args.ways, shots, args.queries)
    return synthetic_source(args.ways, shots, args.queries, args.feature_dim, args.separation, args.spread)


def _check_episode_args(args):
    if args.episodes < 1:
        raise ValidationError("--episodes must be >= 1")
    if args.ways < 2 or args.queries < 1:
        raise ValidationError("--ways must be >= 2 and --queries >= 1")
    if args.k < 1:
        raise ValidationError("--k must be >= 1")
    if args.threads < 1:
        raise ValidationError("--threads must be >= 1")


def _row(stats, method, variant, shots, args) -> ResultRow:
    return ResultRow(method, variant, shots, stats.mean_accuracy, stats.ci95_halfwidth,
                     stats.mean_skewness, stats.mean_hub_occurrence, stats.episode_count, args.seed)


def cmd_eval(args):
    if not args.methods:
        raise ValidationError("--methods must name at least one method")
    unknown = [m for m in args.methods if m not in METHODS]
    if unknown:
        raise ValidationError(f"unknown methods {unknown}; choose from {list(METHODS)}")
    if not args.shots or any(s < 1 for s in args.shots):
        raise ValidationError("--shots must list positive integers")
    _check_episode_args(args)
    config = _config(args)
    rows = []
    for shots in args.shots:
        source = _source(args, shots)
        for method in args.methods:
            cfg = config.with_(variant=method) if method in (NOHUB, NOHUB_S) else config
            if method in (NOHUB, NOHUB_S) and args.iterations is not None:
                cfg = cfg.with_(iterations=args.iterations)
            stats = run_benchmark(source, method, args.episodes, cfg, args.metric,
                                  args.k, args.seed, args.threads)
            rows.append(_row(stats, method, "default", shots, args))
            log.info("%s %d-shot: acc %.4f", method, shots, stats.mean_accuracy)
    write_result_table(args.output, rows, _header(args))


def cmd_sweep(args):
    if not args.values:
        raise ValidationError("--values must list at least one grid value")
    if args.shots < 1:
        raise ValidationError("--shots must be >= 1")
    _check_episode_args(args)
    base = _config(args).with_(variant=args.method)
    if args.iterations is not None:
        base = base.with_(iterations=args.iterations)
    source = _source(args, args.shots)
    rows = []
    for value in args.values:
        try:
            cfg = base.with_(**{args.param: value})
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
        stats = run_benchmark(source, args.method, args.episodes, cfg, args.metric,
                              args.k, args.seed, args.threads)
        rows.append(_row(stats, args.method, f"{args.param}={value!r}", args.shots, args))
    write_result_table(args.output, rows, _header(args))


def cmd_hubness(args):
    X, _, _ = read_features(args.input)
    if not 1 <= args.k <= X.shape[0] - 1:
        raise ValidationError(f"--k must lie in [1, n-1={X.shape[0] - 1}]")
    rep = hubness(X, args.k, args.metric, args.hub_size)
    text = (
        "n,k,hub_threshold,skewness,hub_occurrence\n"
        f"{rep.n},{rep.k},{rep.hub_threshold!r},{rep.skewness!r},{rep.hub_occurrence!r}\n"
    )
    if args.output is None:
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as fh:
            for key, value in _header(args).items():
                fh.write(f"# {key}={value}\n")
            fh.write(text)


COMMANDS = {
    "synth": cmd_synth,
    "embed": cmd_embed,
    "eval": cmd_eval,
    "hubness": cmd_hubness,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    command = next((a for a in argv if a in COMMANDS), None)
    try:
        parser = build_parser(command)
    except ValidationError as exc:
        print(f"nohub: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"nohub: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, FileFormatError) as exc:
        print(f"nohub: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NoHubError, ValueError, FloatingPointError) as exc:
        print(f"nohub: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
