"""Command-line entry point.

Subcommands cover the whole pipeline: ``simulate`` writes a synthetic
transcript file, ``encode``/``levels``/``init``/``train`` build a model
from transcripts, ``decode`` turns transcripts into level trajectories,
``analyze`` produces the summary tables, and ``recover`` runs a
parameter-recovery experiment.  Any package error exits with status 1 and
an ``error[Category]: message`` line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import defaults
from .analysis import (
    Outcome,
    chi_squared,
    decode_cohort,
    group_level_contingency,
    halt_rate_table,
    level_mix_table,
    switch_type_distribution,
)
from .errors import AcadtrajError, ConfigError
from .grades import VocabularyMode, clip, encode
from .model_io import (
    ModelBundle,
    config_hash,
    ingest,
    load_model,
    load_scheme,
    read_trajectories,
    save_model,
    save_scheme,
    write_trajectories,
    write_transcripts,
    write_truth,
)
from .pipeline import (
    build_initial_model,
    build_scheme,
    build_vocab,
    fit_pipeline,
)
from .synth import LengthModel, SynthConfig, generate, recovery_experiment
from .training import TrainingConfig

#: Numeric report formatting, fixed so golden-file comparisons stay stable.
FMT = "{:.4f}"


def _add_common(parser: argparse.ArgumentParser, *flags: str) -> None:
    if "input" in flags:
        parser.add_argument("--input", required=True, help="transcript CSV to read")
    if "out" in flags:
        parser.add_argument("--out", required=True, help="output path")
    if "vocab" in flags:
        parser.add_argument(
            "--vocab",
            choices=[m.value for m in VocabularyMode],
            default=VocabularyMode.OBSERVED.value,
            help="observation vocabulary mode (default: observed)",
        )
    if "levels" in flags:
        parser.add_argument("--levels", type=int, default=4, help="performance levels (default 4)")
    if "states" in flags:
        parser.add_argument("--states", type=int, default=4, help="hidden states (default 4)")
    if "training" in flags:
        parser.add_argument("--max-iter", type=int, default=100, help="EM iteration budget")
        parser.add_argument("--tol", type=float, default=1e-6, help="EM improvement tolerance")
    if "seed" in flags:
        parser.add_argument("--seed", type=int, default=0, help="random seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acadtraj",
        description="Grade-trajectory HMM toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="transcripts -> grade tuples and observation codes")
    _add_common(p, "input", "out", "vocab")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("levels", help="build a CGPA level scheme from transcripts")
    _add_common(p, "input", "out", "levels")
    p.set_defaults(func=cmd_levels)

    p = sub.add_parser("init", help="build an untrained model from transcripts")
    _add_common(p, "input", "out", "vocab", "levels", "states")
    p.add_argument("--scheme", help="reuse a scheme JSON instead of re-clustering")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("train", help="Baum-Welch training (auto-initializes unless --model)")
    _add_common(p, "input", "out", "vocab", "levels", "states", "training")
    p.add_argument("--model", help="initial model JSON (skips auto-initialization)")
    p.add_argument("--history", help="write per-iteration log-likelihood CSV here")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("decode", help="transcripts + model -> level trajectories")
    _add_common(p, "input", "out")
    p.add_argument("--model", required=True, help="trained model JSON")
    p.add_argument(
        "--horizon",
        type=int,
        help="data horizon for outcome resolution (default: latest enrolled semester)",
    )
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("analyze", help="trajectories -> summary tables")
    p.add_argument("--input", required=True, help="trajectory CSV from decode")
    p.add_argument("--out-dir", required=True, help="directory for the report tables")
    p.add_argument("--levels", type=int, default=4)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="write a synthetic transcript cohort")
    _add_common(p, "out", "seed")
    p.add_argument("--students", type=int, default=1000)
    p.add_argument("--truth", help="write the hidden-truth sidecar CSV here")
    p.add_argument("--min-semesters", type=int, default=LengthModel.min_semesters)
    p.add_argument("--max-semesters", type=int, default=LengthModel.max_semesters)
    p.add_argument("--continuation", type=float, default=LengthModel.continuation)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("recover", help="generate + retrain + report parameter errors")
    _add_common(p, "out", "seed", "training")
    p.add_argument("--students", type=int, default=2000)
    p.add_argument("--length", type=int, default=12, help="semesters per synthetic student")
    p.set_defaults(func=cmd_recover)
    return parser


def cmd_encode(args) -> int:
    records = ingest(args.input)
    vocab = build_vocab(records, VocabularyMode(args.vocab))
    with Path(args.out).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["student_id", "semester", "tuple", "code", "index"])
        for record in records:
            for semester, raw in record.enrolled:
                t = clip(raw)
                code = encode(t)
                writer.writerow(
                    [record.student_id, semester, t.as_string(), code, vocab.index_of(code)]
                )
    print(f"encoded {len(records)} students over a vocabulary of {vocab.size} codes")
    return 0


def cmd_levels(args) -> int:
    records = ingest(args.input)
    _, scheme = build_scheme(records, args.levels)
    save_scheme(args.out, scheme)
    intervals = ", ".join(f"[{lo:g}, {hi:g})" for lo, hi in scheme.intervals())
    print(f"built {scheme.k} levels over CGPA intervals {intervals}")
    return 0


def cmd_init(args) -> int:
    if args.states != args.levels:
        raise ConfigError(
            f"states ({args.states}) must equal levels ({args.levels}): "
            "each hidden state represents one performance level"
        )
    records = ingest(args.input)
    scheme = load_scheme(args.scheme) if args.scheme else build_scheme(records, args.levels)[1]
    vocab = build_vocab(records, VocabularyMode(args.vocab))
    model = build_initial_model(records, scheme, vocab)
    bundle = ModelBundle(
        model=model,
        vocabulary=vocab,
        scheme=scheme,
        state_to_level=tuple(range(1, scheme.k + 1)),
        training=None,
        provenance={"command": "init", "config": config_hash(vars(args) | {"func": None})},
    )
    save_model(args.out, bundle)
    print(f"initialized a {model.n_states}-state model over {vocab.size} observation codes")
    return 0


def cmd_train(args) -> int:
    if args.states != args.levels:
        raise ConfigError(f"states ({args.states}) must equal levels ({args.levels})")
    records = ingest(args.input)
    config = TrainingConfig(max_iterations=args.max_iter, log_likelihood_tolerance=args.tol)
    initial = load_model(args.model) if args.model else None
    bundle = fit_pipeline(
        records,
        n_levels=args.levels,
        vocab_mode=VocabularyMode(args.vocab),
        config=config,
        initial=initial,
        provenance={"command": "train", "config": config_hash(vars(args) | {"func": None})},
    )
    save_model(args.out, bundle)
    if args.history:
        with Path(args.history).open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["iteration", "log_likelihood"])
            for i, value in enumerate(bundle.training["history"], start=1):
                writer.writerow([i, repr(value)])
    print(
        f"trained for {bundle.training['iterations_run']} iterations "
        f"(converged={bundle.training['converged']}, "
        f"log-likelihood={bundle.training['final_log_likelihood']:.4f})"
    )
    return 0


def cmd_decode(args) -> int:
    records = ingest(args.input)
    bundle = load_model(args.model)
    if bundle.scheme is None:
        raise ConfigError(f"{args.model} carries no level scheme; decode needs one")
    trajectories = decode_cohort(
        bundle.model,
        bundle.vocabulary,
        bundle.scheme,
        records,
        horizon=args.horizon,
        state_to_level=bundle.state_to_level,
    )
    write_trajectories(args.out, trajectories)
    print(f"decoded {len(trajectories)} students")
    return 0


def cmd_analyze(args) -> int:
    trajectories = read_trajectories(args.input)
    resolved = [t for t in trajectories if t.outcome is not Outcome.CENSORED]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n_levels = args.levels

    mix = level_mix_table(resolved, n_levels)
    with (out_dir / "level_mix.csv").open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["class", "share"])
        for key, share in mix.items():
            writer.writerow([key, FMT.format(share)])

    with (out_dir / "switch_types.csv").open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["from_level", "to_level", "share"])
        try:
            for (src, dst), share in switch_type_distribution(resolved, n_levels).items():
                writer.writerow([src, dst, FMT.format(share)])
        except AcadtrajError:
            pass  # no one-switch students: header-only table

    table = halt_rate_table(resolved)
    with (out_dir / "halt_rates.csv").open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["pattern", "halted", "total", "rate"])
        for key in sorted(table.entries):
            halts, total = table.entries[key]
            writer.writerow([key, halts, total, FMT.format(halts / total)])

    group_columns = sorted({column for t in resolved for column in t.groups})
    with (out_dir / "chi_squared.csv").open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["group_column", "statistic", "dof"])
        for column in group_columns:
            _, _, counts = group_level_contingency(resolved, column, n_levels)
            keep_rows = counts.sum(axis=1) > 0
            keep_cols = counts.sum(axis=0) > 0
            statistic, dof = chi_squared(counts[keep_rows][:, keep_cols])
            writer.writerow([column, FMT.format(statistic), dof])

    censored = len(trajectories) - len(resolved)
    print(
        f"analyzed {len(resolved)} students ({censored} censored excluded); "
        f"tables written to {out_dir}"
    )
    return 0


def cmd_simulate(args) -> int:
    config = SynthConfig(
        model=defaults.reference_model(),
        vocabulary=defaults.signature_vocabulary(),
        cohort_size=args.students,
        lengths=LengthModel(
            min_semesters=args.min_semesters,
            max_semesters=args.max_semesters,
            continuation=args.continuation,
        ),
        halt_rates=defaults.HALT_RATES,
        default_halt_rate=defaults.DEFAULT_HALT_RATE,
        seed=args.seed,
    )
    cohort = generate(config)
    write_transcripts(args.out, cohort.records)
    if args.truth:
        write_truth(args.truth, cohort)
    print(f"simulated {args.students} students (seed {args.seed}) into {args.out}")
    return 0


def cmd_recover(args) -> int:
    config = SynthConfig(
        model=defaults.reference_model(),
        vocabulary=defaults.signature_vocabulary(),
        cohort_size=args.students,
        lengths=LengthModel(
            min_semesters=args.length, max_semesters=args.length, continuation=0.0
        ),
        halt_rates=defaults.HALT_RATES,
        default_halt_rate=defaults.DEFAULT_HALT_RATE,
        seed=args.seed,
    )
    training = TrainingConfig(max_iterations=args.max_iter, log_likelihood_tolerance=args.tol)
    report = recovery_experiment(config, training)
    payload = {
        "transition_error": report.transition_error,
        "initial_error": report.initial_error,
        "emission_tv": list(report.emission_tv),
        "permutation": list(report.permutation),
        "iterations_run": report.training.iterations_run,
        "converged": report.training.converged,
        "log_likelihood_history": list(report.training.history),
        "identifiable": report.identifiable,
    }
    Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(
        f"recovery: max transition error {report.transition_error:.4f}, "
        f"max initial error {report.initial_error:.4f}, "
        f"worst emission TV {max(report.emission_tv):.4f}"
    )
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AcadtrajError as exc:
        print(f"error[{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error[IoError]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
