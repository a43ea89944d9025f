"""Command-line front end: ``oscfit {synth,fit,compare,plotdata}``.

Exit codes: 0 success, 1 usage error, 2 data or I/O error, 3 internal error.
Diagnostics go to stderr; every output file starts with ``#`` provenance
lines recording the tool version, subcommand and configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import warnings
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import (
    CorpusFormatError,
    DuplicateRecordError,
    Modality,
    pair_records,
    read_results,
    read_trajectories,
    write_results,
    write_trajectories,
)
from .estimate import FitConfig, fit_corpus, prepare_records, segment_record, simulate_segment
from .stats import PARAMETERS, MCMCConfig, fit_hierarchical, observations_from_results, word_effects
from .synth import SynthConfig, synth_corpus

log = logging.getLogger("oscfit")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def provenance(command, config) -> list[str]:
    return [f"oscfit {__version__}", f"command: {command}",
            f"config: {json.dumps(config, sort_keys=True)}"]


def _read_config_header(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            text = line[1:].strip()
            if text.startswith("config: "):
                return json.loads(text[len("config: "):])
    return {}


def _write_csv(path, header_lines, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])


def _sibling(path, suffix):
    p = Path(path)
    return p.with_name(f"{p.stem}_{suffix}.csv")


def _fit_config(args) -> FitConfig:
    return FitConfig(
        dct_order=args.dct_order,
        target_rate=args.target_rate,
        min_samples=args.min_samples,
        min_peak_vel=args.min_peak_vel,
        center=args.center,
        jobs=args.jobs,
    )


def _mcmc_config(args) -> MCMCConfig:
    return MCMCConfig(chains=args.chains, warmup=args.warmup, draws=args.draws, step=args.step, seed=args.seed)


def _load_corpus(path):
    try:
        return read_trajectories(path)
    except FileNotFoundError:
        raise DataError(f"input file not found: {path}") from None
    except CorpusFormatError as exc:
        raise DataError(f"{path}: {exc}") from None


def _load_results(path):
    try:
        return read_results(path)
    except FileNotFoundError:
        raise DataError(f"results file not found: {path}") from None
    except CorpusFormatError as exc:
        raise DataError(f"{path}: {exc}") from None


# --------------------------------------------------------------------------
# subcommands


def cmd_synth(args):
    try:
        cfg = SynthConfig(
            speakers=args.speakers, words=args.words, reps=args.reps,
            channels=tuple(args.channels), duration=args.duration,
            ema_rate=args.ema_rate, us_rate=args.us_rate,
            noise_ema=args.noise_ema, noise_us=args.noise_us,
            k_range=(args.k_min, args.k_max), damping_ratio=(args.zeta_min, args.zeta_max),
            modality_offset=args.modality_offset, word_offset_sd=args.word_offset_sd,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    records, truths = synth_corpus(cfg)
    header = provenance("synth", asdict(cfg))
    write_trajectories(records, args.output, header_lines=header)
    if args.truth:
        _write_csv(
            args.truth, header,
            ("speaker", "word", "modality", "channel", "rep", "b", "k", "T", "x0", "v0"),
            ((t.speaker_id, t.word, t.modality.value, t.channel, t.rep,
              float(t.params.b), float(t.params.k), float(t.params.T), float(t.x0), float(t.v0))
             for t in truths),
        )
    log.info("wrote %d trajectories to %s", len(records), args.output)
    return EXIT_OK


def cmd_fit(args):
    cfg = _fit_config(args)
    records = _load_corpus(args.input)
    try:
        pairing = pair_records(records)
    except DuplicateRecordError as exc:
        raise DataError(str(exc)) from None
    for rec in pairing.unpaired:
        log.warning("no matching pair for %s/%s/%s/%s/%d; excluded",
                    rec.speaker_id, rec.word, rec.modality.value, rec.channel, rec.rep)
    fit = fit_corpus(pairing.pairs, cfg)
    conf = asdict(cfg)
    conf.pop("jobs")  # scheduling only; outputs do not depend on it
    header = provenance("fit", conf)
    out = Path(args.output)
    write_results(fit.results, out, header_lines=header)
    _write_csv(
        args.summary or _sibling(out, "summary"), header,
        ("Variable", "Modality", "N", "mean", "SD", "min", "max"),
        ((r.variable, r.modality.value, r.n, r.mean, r.sd, r.min, r.max) for r in fit.summary),
    )
    _write_csv(
        args.skipped or _sibling(out, "skipped"),
        header + [f"note: {n}" for n in fit.notes],
        ("speaker", "word", "modality", "channel", "rep", "gesture_index", "reason"),
        ((s.key.speaker_id, s.key.word, s.modality.value, s.key.channel, s.key.rep, s.gesture_index, s.reason)
         for s in fit.skipped),
    )
    if fit.notes:
        log.info("%d pairs with unequal EMA/US gesture counts; see the skip report", len(fit.notes))
    for note in fit.notes:
        log.debug(note)
    log.info("fitted %d gestures, skipped %d", len(fit.results), len(fit.skipped))
    return EXIT_OK


def cmd_compare(args):
    if args.parameter not in PARAMETERS:
        raise UsageError(f"unknown parameter {args.parameter!r}; choose from {', '.join(PARAMETERS)}")
    results = _load_results(args.input)
    obs, speakers, words = observations_from_results(results, args.parameter, args.channel)
    cfg = _mcmc_config(args)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            fit = fit_hierarchical(obs, cfg, speakers=speakers, words=words)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    for w in caught:
        log.warning("%s", w.message)
    header = provenance("compare", {"parameter": args.parameter, "channel": args.channel, **asdict(cfg)})
    out = Path(args.output)
    _write_csv(
        out, header, ("parameter", "mean", "ci_low", "ci_high", "rhat", "ess"),
        ((s.name, s.mean, s.ci_low, s.ci_high, s.rhat, s.ess) for s in fit.summaries),
    )
    _write_csv(
        args.word_effects or _sibling(out, "words"), header, ("word", "mean", "ci_low", "ci_high"),
        ((s.name, s.mean, s.ci_low, s.ci_high) for s in word_effects(fit)),
    )
    beta = fit.summary("beta")
    log.info("beta = %.3f [%.3f, %.3f], max R-hat %.3f", beta.mean, beta.ci_low, beta.ci_high,
             max(s.rhat for s in fit.summaries))
    return EXIT_OK


def result_label(res) -> str:
    k = res.key
    return f"{k.speaker_id}/{k.word}/{Modality(res.modality).value}/{k.channel}/{k.rep}/{res.gesture_index}"


def cmd_plotdata(args):
    results = _load_results(args.results)
    by_label = {result_label(r): r for r in results}
    if args.key:
        missing = [k for k in args.key if k not in by_label]
        if missing:
            raise DataError(f"gesture key not found: {', '.join(missing)}")
        labels = list(args.key)
    else:
        rng = np.random.default_rng(args.seed)
        pool = sorted(by_label)
        if not pool:
            raise DataError("results file has no gestures")
        picks = rng.choice(len(pool), size=min(args.sample, len(pool)), replace=False)
        labels = [pool[i] for i in sorted(picks)]

    stored = _read_config_header(args.results)
    cfg = FitConfig(**{k: v for k, v in stored.items() if k in FitConfig.__dataclass_fields__}) if stored else _fit_config(args)
    wanted = {(by_label[l].key, Modality(by_label[l].modality)) for l in labels}
    records = _load_corpus(args.input)
    # centering needs the whole speaker/modality/channel group, not just the wanted tokens
    groups = {(k.speaker_id, m.value, k.channel) for k, m in wanted}
    pool = [r for r in records if (r.speaker_id, r.modality.value, r.channel) in groups]
    prepared = {(r.key, r.modality): r for r in prepare_records(pool, cfg)}

    rows = []
    for label in labels:
        res = by_label[label]
        rec = prepared.get((res.key, Modality(res.modality)))
        if rec is None:
            raise DataError(f"trajectory for {label} is not in {args.input}")
        segs = [s for s in segment_record(rec, cfg) if s.gesture_index == res.gesture_index]
        if not segs:
            raise DataError(f"gesture {label} cannot be re-segmented from {args.input}")
        seg = segs[0]
        x_model, v_model = simulate_segment(seg, res.params)
        for t, ve, vm, xe, xm in zip(seg.times, seg.velocity, v_model, seg.positions, x_model):
            rows.append((label, float(t), float(ve), float(vm), float(xe), float(xm)))
    header = provenance("plotdata", {"keys": labels, **asdict(cfg)})
    _write_csv(args.output, header, ("key", "t", "v_empirical", "v_model", "x_empirical", "x_model"), rows)
    return EXIT_OK


# --------------------------------------------------------------------------


def _add_fit_flags(p):
    p.add_argument("--dct-order", type=int, default=5, help="DCT coefficients kept (default 5)")
    p.add_argument("--target-rate", type=float, default=81.0, help="common sample rate in Hz (default 81)")
    p.add_argument("--min-samples", type=int, default=5, help="shortest gesture kept (default 5)")
    p.add_argument("--min-peak-vel", type=float, default=1.0, help="slowest gesture peak kept, mm/s (default 1)")
    p.add_argument("--center", choices=("group", "token", "none"), default="group",
                   help="origin: pooled per speaker/modality/channel (default), per token, or none")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")


def _add_mcmc_flags(p):
    p.add_argument("--chains", type=int, default=4)
    p.add_argument("--warmup", type=int, default=1000)
    p.add_argument("--draws", type=int, default=2000)
    p.add_argument("--step", type=float, default=0.1, help="initial proposal step")
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = _Parser(prog="oscfit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"oscfit {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="simulate an EMA/ultrasound corpus")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--truth", help="also write the generating parameters here")
    p.add_argument("--speakers", type=int, default=6)
    p.add_argument("--words", type=int, default=29)
    p.add_argument("--reps", type=int, default=4)
    p.add_argument("--channels", nargs="+", default=["TDx"])
    p.add_argument("--duration", type=float, default=0.5)
    p.add_argument("--ema-rate", type=float, default=1250.0)
    p.add_argument("--us-rate", type=float, default=81.0)
    p.add_argument("--noise-ema", type=float, default=0.05)
    p.add_argument("--noise-us", type=float, default=0.3)
    p.add_argument("--k-min", type=float, default=150.0)
    p.add_argument("--k-max", type=float, default=800.0)
    p.add_argument("--zeta-min", type=float, default=0.85, help="smallest damping ratio b / (2 sqrt k)")
    p.add_argument("--zeta-max", type=float, default=1.15)
    p.add_argument("--modality-offset", type=float, default=0.0, help="ultrasound minus EMA target, mm")
    p.add_argument("--word-offset-sd", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="estimate (b, k, T) for every gesture")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--summary", help="R^2 summary table (default <output>_summary.csv)")
    p.add_argument("--skipped", help="skip report (default <output>_skipped.csv)")
    _add_fit_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("compare", help="hierarchical EMA vs ultrasound comparison")
    p.add_argument("input", help="result CSV from 'fit'")
    p.add_argument("--parameter", required=True, help="T, k or b")
    p.add_argument("--channel", help="restrict to one channel, e.g. TDx")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--word-effects", help="per-word effects (default <output>_words.csv)")
    _add_mcmc_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("plotdata", help="empirical vs modelled trajectories for plotting")
    p.add_argument("results", help="result CSV from 'fit'")
    p.add_argument("--input", required=True, help="corpus CSV the results were fitted from")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--key", action="append", help="speaker/word/modality/channel/rep/gesture_index")
    group.add_argument("--sample", type=int, default=3, help="number of random gestures (default 3)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    _add_fit_flags(p)
    p.set_defaults(func=cmd_plotdata)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"oscfit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"oscfit {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"oscfit {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        print(f"oscfit {args.command}: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
