"""Command-line workflow: synth, extract, train, predict, evaluate, report.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 internal
error.  Every stochastic component (synthesis, codebook seeding, the
hyperparameter search design) is driven by --seed, so a command is
deterministic given its inputs and flags.
"""

import argparse
import csv
import os
import sys
from pathlib import Path

from . import __version__
from .corpus import ATTRIBUTES, load_corpus, write_corpus
from .dsp import (
    DEFAULT_HP_CUTOFF_HZ,
    DEFAULT_HP_ORDER,
    DEFAULT_TARGET_RATE_HZ,
    DspConfig,
    preprocess_corpus,
)
from .errors import ConfigError, DataError
from .evaluate import (
    BOUT_BOW_LEVEL,
    first_n_sweep,
    report_from_dict,
    run_bout_protocol,
    run_chew_protocol,
)
from .features import BandPlan, extract_matrix, feature_names, window_bout
from .learn import HpoConfig
from .pipeline import (
    BOUT_LEVEL,
    CHEW_LEVEL,
    TrainConfig,
    load_model,
    predict_bout,
    predict_chews,
    save_model,
    train_bout_level,
    train_chew_level,
)
from .serialize import read_json, write_json
from .synth import SynthConfig, synth_corpus

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


def _add_dsp_flags(parser):
    group = parser.add_argument_group("preprocessing")
    group.add_argument(
        "--target-rate-hz", type=int, default=DEFAULT_TARGET_RATE_HZ,
        help="working sample rate after decimation (default: %(default)s, method default)",
    )
    group.add_argument(
        "--hp-order", type=int, default=DEFAULT_HP_ORDER,
        help="high-pass Butterworth order (default: %(default)s, method default)",
    )
    group.add_argument(
        "--hp-cutoff-hz", type=float, default=DEFAULT_HP_CUTOFF_HZ,
        help="high-pass cutoff frequency in Hz (default: %(default)s, method default)",
    )


def _add_train_flags(parser):
    group = parser.add_argument_group("training")
    group.add_argument(
        "--order-p", type=int, default=10,
        help="autocorrelation matrix order for the CN feature "
             "(default: %(default)s, implementation default)",
    )
    group.add_argument(
        "--band-edges-hz", type=float, nargs="+", default=None,
        help="override the band plan edges in Hz (default: 13 log-spaced bands, "
             "implementation default)",
    )
    group.add_argument(
        "--k", type=int, default=64,
        help="bag-of-words codebook size (default: %(default)s, implementation default)",
    )
    group.add_argument(
        "--cv-folds", type=int, default=5,
        help="cross-validation folds for hyperparameter search "
             "(default: %(default)s, method default)",
    )
    group.add_argument(
        "--hpo-budget", type=int, default=40,
        help="hyperparameter search evaluations (default: %(default)s, "
             "implementation default)",
    )
    group.add_argument(
        "--hpo-init", type=int, default=10,
        help="Latin-hypercube initial design size (default: %(default)s, "
             "implementation default)",
    )
    group.add_argument(
        "--hpo-log2-c", type=float, nargs=2, default=(-5.0, 15.0), metavar=("LO", "HI"),
        help="log2 search range for C (default: %(default)s, implementation default)",
    )
    group.add_argument(
        "--hpo-log2-gamma", type=float, nargs=2, default=(-15.0, 3.0), metavar=("LO", "HI"),
        help="log2 search range for gamma (default: %(default)s, implementation default)",
    )
    group.add_argument(
        "--hpo-std-threshold", type=float, default=1e-3,
        help="posterior-std threshold that switches acquisition to exploration "
             "(default: %(default)s, implementation default)",
    )
    group.add_argument(
        "--seed", type=int, default=0,
        help="seed for all stochastic components (default: %(default)s, "
             "implementation default)",
    )


def _train_config(args) -> TrainConfig:
    hpo = HpoConfig(
        log2_c_range=tuple(args.hpo_log2_c),
        log2_gamma_range=tuple(args.hpo_log2_gamma),
        budget=args.hpo_budget,
        n_init=args.hpo_init,
        posterior_std_threshold=args.hpo_std_threshold,
        folds=args.cv_folds,
    )
    kwargs = dict(order_p=args.order_p, k=args.k, hpo=hpo, seed=args.seed)
    if args.band_edges_hz:
        kwargs["band_edges_hz"] = tuple(args.band_edges_hz)
    return TrainConfig(**kwargs)


def _dsp_config(args) -> DspConfig:
    return DspConfig(
        target_rate_hz=args.target_rate_hz,
        hp_order=args.hp_order,
        hp_cutoff_hz=args.hp_cutoff_hz,
    )


def _load_preprocessed(args):
    corpus = load_corpus(args.data)
    return preprocess_corpus(corpus, _dsp_config(args))


# ---------------------------------------------------------------------------
# Subcommands


def cmd_synth(args) -> int:
    cfg = SynthConfig(
        n_subjects=args.subjects,
        bouts_per_recording=args.bouts_per_recording,
        chews_per_bout_mean=args.chews_per_bout_mean,
        chews_per_bout_std=args.chews_per_bout_std,
        sample_rate=args.rate,
        snr_db=args.snr_db,
    )
    corpus = synth_corpus(args.seed, config=cfg)
    write_corpus(corpus, args.out, seed=args.seed)
    n_chews = sum(len(c) for c in corpus.chews.values())
    n_bouts = sum(len(b) for b in corpus.bouts.values())
    print(
        f"wrote {len(corpus.recordings)} recordings, {n_bouts} bouts, "
        f"{n_chews} chews to {args.out}"
    )
    return EXIT_OK


def cmd_extract(args) -> int:
    corpus = _load_preprocessed(args)
    edges = tuple(args.band_edges_hz) if args.band_edges_hz else TrainConfig().band_edges_hz
    plan = BandPlan(edges).for_rate(args.target_rate_hz)
    names = feature_names(plan)
    rows = []
    for rid in corpus.recording_ids():
        rec = corpus.recordings[rid]
        fs = rec.sample_rate
        if args.level == "chew":
            for chew in corpus.chews.get(rid, ()):
                seg = rec.samples[round(chew.start_s * fs): round(chew.stop_s * fs)]
                vec = extract_matrix([seg], fs, plan, args.order_p)[0]
                rows.append([rid, chew.bout_id, chew.chew_id] + [repr(float(v)) for v in vec])
        else:
            for bout in corpus.bouts.get(rid, ()):
                seg = rec.samples[round(bout.start_s * fs): round(bout.stop_s * fs)]
                for index, window in enumerate(window_bout(seg, fs)):
                    vec = extract_matrix([window], fs, plan, args.order_p)[0]
                    rows.append([rid, bout.bout_id, index] + [repr(float(v)) for v in vec])
    id_cols = ["recording_id", "bout_id", "chew_id" if args.level == "chew" else "window_index"]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(id_cols + names)
        writer.writerows(rows)
    print(f"wrote {len(rows)} feature rows to {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    corpus = _load_preprocessed(args)
    cfg = _train_config(args)
    train_ids = corpus.recording_ids()
    if args.mode == CHEW_LEVEL:
        model = train_chew_level(corpus, train_ids, cfg)
    else:
        model = train_bout_level(corpus, train_ids, cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(out, model)
    degenerate = model.degenerate_attributes()
    note = f" (degenerate: {', '.join(degenerate)})" if degenerate else ""
    print(f"wrote {args.mode}-level model to {out}{note}")
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_model(args.model)
    corpus = load_corpus(args.data)
    dsp_cfg = DspConfig(
        target_rate_hz=model.sample_rate,
        hp_order=args.hp_order,
        hp_cutoff_hz=args.hp_cutoff_hz,
    )
    corpus = preprocess_corpus(corpus, dsp_cfg)
    rows = []
    for rid in corpus.recording_ids():
        rec = corpus.recordings[rid]
        if model.mode == CHEW_LEVEL:
            for bout in corpus.bouts.get(rid, ()):
                chews = [c for c in corpus.chews[rid] if c.bout_id == bout.bout_id]
                for p in predict_chews(model, rec, chews):
                    for a in ATTRIBUTES:
                        rows.append(
                            [rid, p.bout_id, p.chew_id, a, int(p.labels[a]),
                             repr(p.decisions[a]), "chew"]
                        )
        else:
            for bout in corpus.bouts.get(rid, ()):
                p = predict_bout(model, rec, bout)
                for a in ATTRIBUTES:
                    rows.append(
                        [rid, p.bout_id, "", a, int(p.labels[a]),
                         repr(p.scores[a]), p.provenance]
                    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["recording_id", "bout_id", "chew_id", "attribute", "label", "score", "provenance"]
        )
        writer.writerows(rows)
    print(f"wrote {len(rows)} prediction rows to {out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    corpus = _load_preprocessed(args)
    cfg = _train_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    sections = []
    report_payload = {}
    if args.level == "chew":
        vote_ns = []
        if args.vote == "all":
            vote_ns.append(None)
        elif args.vote == "first-n":
            vote_ns.append(args.n)
        if args.sweep_n:
            sweep = first_n_sweep(corpus, args.protocol, cfg, n_max=args.sweep_n, jobs=args.jobs)
            (out_dir / "sweep.csv").write_text(sweep.to_csv_text(), encoding="utf-8")
            sections.append(sweep.vote_all.text_table())
            report_payload = {
                "sweep": {str(n): sweep.reports[n].to_dict() for n in sweep.n_values},
                "vote-all": sweep.vote_all.to_dict(),
            }
        else:
            reports = run_chew_protocol(
                corpus, args.protocol, cfg, vote_ns=tuple(vote_ns), jobs=args.jobs,
                save_models_dir=out_dir / "models" if args.save_models else None,
            )
            for key, report in reports.items():
                sections.append(report.text_table())
                report_payload[key] = report.to_dict()
    else:
        report = run_bout_protocol(
            corpus, args.protocol, cfg, jobs=args.jobs,
            save_models_dir=out_dir / "models" if args.save_models else None,
        )
        sections.append(report.text_table())
        report_payload[BOUT_BOW_LEVEL] = report.to_dict()
    text = "\n".join(sections)
    (out_dir / "report.txt").write_text(text, encoding="utf-8")
    write_json(out_dir / "report.json", report_payload)
    print(text, end="")
    print(f"wrote report.json and report.txt to {out_dir}")
    return EXIT_OK


def cmd_report(args) -> int:
    payload = read_json(args.input)
    if args.plot_data:
        sweep = payload.get("sweep")
        if not sweep:
            raise DataError(f"{args.input} contains no sweep data")
        lines = ["attribute,n,weighted_accuracy"]
        for attribute in ATTRIBUTES:
            for n in sorted(sweep, key=int):
                report = report_from_dict(sweep[n])
                wacc = report.aggregate(attribute)["sum"]["weighted_accuracy"]
                lines.append(f"{attribute},{n},{'' if wacc is None else repr(wacc)}")
        print("\n".join(lines))
        return EXIT_OK
    for key in sorted(payload):
        if key == "sweep":
            continue
        print(report_from_dict(payload[key]).text_table())
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chewtex",
        description="Food-texture attribute recognition from chewing audio.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus on disk")
    p.add_argument("--out", required=True, help="output corpus directory")
    p.add_argument("--seed", type=int, default=7,
                   help="generator seed (default: %(default)s, implementation default)")
    p.add_argument("--subjects", type=int, default=9,
                   help="number of subjects (default: %(default)s, method default)")
    p.add_argument("--rate", type=int, default=48000,
                   help="generation sample rate in Hz (default: %(default)s, method default)")
    p.add_argument("--snr-db", type=float, default=25.0,
                   help="chew-signal-to-noise ratio in dB (default: %(default)s, "
                        "implementation default)")
    p.add_argument("--bouts-per-recording", type=int, default=1,
                   help="bouts per recording (default: %(default)s, implementation default)")
    p.add_argument("--chews-per-bout-mean", type=float, default=21.0,
                   help="mean chews per bout (default: %(default)s, implementation default)")
    p.add_argument("--chews-per-bout-std", type=float, default=5.0,
                   help="std of chews per bout (default: %(default)s, implementation default)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="write per-segment feature matrices as CSV")
    p.add_argument("--data", required=True, help="corpus directory")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--level", choices=("chew", "window"), default="chew",
                   help="feature rows per chew or per bout window (default: %(default)s)")
    _add_dsp_flags(p)
    p.add_argument("--order-p", type=int, default=10,
                   help="autocorrelation order (default: %(default)s, implementation default)")
    p.add_argument("--band-edges-hz", type=float, nargs="+", default=None,
                   help="override band plan edges in Hz")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train a model on a whole corpus")
    p.add_argument("--data", required=True, help="corpus directory")
    p.add_argument("--out", required=True, help="output model JSON path")
    p.add_argument("--mode", choices=(CHEW_LEVEL, BOUT_LEVEL), default=CHEW_LEVEL,
                   help="chew-level or bout-level algorithm (default: %(default)s)")
    _add_dsp_flags(p)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="classify a corpus with a trained model")
    p.add_argument("--data", required=True, help="corpus directory")
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--out", required=True, help="output predictions CSV")
    p.add_argument("--hp-order", type=int, default=DEFAULT_HP_ORDER,
                   help="high-pass order (default: %(default)s, method default)")
    p.add_argument("--hp-cutoff-hz", type=float, default=DEFAULT_HP_CUTOFF_HZ,
                   help="high-pass cutoff Hz (default: %(default)s, method default)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="run a LOSO or LOFTO evaluation")
    p.add_argument("--data", required=True, help="corpus directory")
    p.add_argument("--out", required=True, help="output report directory")
    p.add_argument("--protocol", choices=("loso", "lofto"), required=True)
    p.add_argument("--level", choices=("chew", "bout"), default="chew",
                   help="chew-level (with optional voting) or bout-level "
                        "bag-of-words (default: %(default)s)")
    p.add_argument("--vote", choices=("none", "all", "first-n"), default="all",
                   help="bout voting variant for chew-level runs (default: %(default)s)")
    p.add_argument("--n", type=int, default=6,
                   help="n for --vote first-n (default: %(default)s)")
    p.add_argument("--sweep-n", type=int, default=None,
                   help="also sweep first-n voting for n=1..N and write sweep.csv")
    p.add_argument("--save-models", action="store_true",
                   help="write each fold's trained model under <out>/models/")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="parallel workers across folds (default: all cores)")
    _add_dsp_flags(p)
    _add_train_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="re-render a stored report")
    p.add_argument("--input", required=True, help="report.json path")
    p.add_argument("--plot-data", action="store_true",
                   help="emit the sweep as CSV (attribute,n,weighted_accuracy)")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"chewtex: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"chewtex: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - defensive
        print(f"chewtex: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
