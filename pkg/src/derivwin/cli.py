"""Command-line front end.

Exit status: 0 on success, 2 on invalid input or configuration, 1 on
runtime (I/O and other) failures.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import evalmetrics, experiment, features, gmm, spectral, windows
from .errors import ConfigError, FormatError, ValidationError

log = logging.getLogger("derivwin")


def _kv_pairs(items):
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"expected key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _read_config_section(path, section):
    import configparser

    parser = configparser.ConfigParser()
    if not Path(path).exists():
        raise ConfigError(f"config file {path} does not exist")
    parser.read(path)
    return dict(parser.items(section)) if parser.has_section(section) else {}


def cmd_window_metrics(args):
    spec = windows.WindowSpec(args.base, args.order, args.length)
    win = windows.make_window(spec)
    m = windows.window_metrics(win, args.fft_size)
    print(f"{'Window':<20} {'Leakage':>10} {'RSA':>12} {'Width(-3dB)':>11}")
    print(f"{spec.label:<20} {m.as_row()}")
    if args.samples_csv:
        with open(args.samples_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "value"])
            writer.writerows((n, repr(float(v))) for n, v in enumerate(win.samples))
    if args.spectrum_csv:
        freq, mag = windows.magnitude_response(win, m.fft_size)
        with np.errstate(divide="ignore"):
            db = 20 * np.log10(mag / mag.max())
        with open(args.spectrum_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["normfreq", "db"])
            writer.writerows((repr(float(f)), repr(float(d))) for f, d in zip(freq, db))
    return 0


def _read_frame_csv(path):
    values = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            try:
                values.append(float(row[-1]))
            except ValueError:
                if values:
                    raise FormatError(f"{path}: non-numeric value {row[-1]!r}")
                # header line
    if not values:
        raise FormatError(f"{path}: no samples")
    return np.array(values)


def cmd_verify_identity(args):
    frame = _read_frame_csv(args.input)
    dec = spectral.derivative_decomposition(frame, args.grid)
    st = dec.stats()
    print(f"{'points':>8} {'excluded':>9} {'median rel':>12} {'p95 rel':>12}")
    print(f"{st['points']:>8} {st['excluded']:>9} {st['median']:>12.3e} {st['p95']:>12.3e}")
    if not st["median"] < args.threshold:
        print(f"median relative residual exceeds {args.threshold:g}", file=sys.stderr)
        return 1
    return 0


def _mfcc_config(args):
    values = {}
    if args.config:
        values.update(_read_config_section(args.config, "mfcc"))
    values.update(_kv_pairs(args.set))
    if args.vad_percentile is not None:
        values["vad_percentile"] = args.vad_percentile
    if args.multitaper:
        window = windows.WindowSpec(windows.Base.MULTITAPER, 0, 2, tapers=args.multitaper)
    else:
        window = windows.WindowSpec(args.base, args.order, 2)
    return experiment.mfcc_from_mapping(values, window)


def cmd_extract(args):
    cfg = _mfcc_config(args)
    samples, rate = features.read_wav(args.input)
    if rate != cfg.sample_rate:
        raise ConfigError(f"{args.input} is sampled at {rate} Hz but the config says {cfg.sample_rate} Hz")
    fm = features.extract(samples, cfg)
    features.write_features(fm, args.out)
    if args.csv:
        np.savetxt(args.csv, fm.frames, delimiter=",", fmt="%.9g")
    log.info("%s: %d frames x %d", args.out, len(fm), fm.dim)
    return 0


def _feature_files(path):
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.mfc"))
        if not files:
            raise ConfigError(f"no .mfc files in {path}")
        return files
    return [path]


def cmd_train_ubm(args):
    mats = [features.read_features(f).frames for f in _feature_files(args.features)]
    model, history = gmm.train_ubm(np.vstack(mats), args.mixtures, args.iters, args.seed)
    gmm.write_model(model, args.out)
    for i, ll in enumerate(history):
        log.info("iteration %d: average log-likelihood %.6f", i, ll)
    return 0


def cmd_adapt(args):
    ubm = gmm.read_model(args.ubm)
    mats = [features.read_features(f).frames for f in args.features]
    model = gmm.map_adapt(ubm, np.vstack(mats), gmm.AdaptationConfig(args.relevance))
    gmm.write_model(model, args.out)
    return 0


def cmd_score(args):
    target = gmm.read_model(args.target)
    ubm = gmm.read_model(args.ubm)
    cfg = gmm.ScoringConfig(args.topc)
    for f in args.features:
        print(repr(gmm.score_utterance(target, ubm, features.read_features(f), cfg)))
    return 0


def cmd_eval(args):
    trials = evalmetrics.read_trials(args.trials)
    scores = evalmetrics.read_scores(args.scores)
    params = evalmetrics.DcfParams(args.cmiss, args.cfa, args.ptarget)
    curve = evalmetrics.det_curve(trials, scores)
    dcf = evalmetrics.min_dcf(trials, scores, params)
    print(f"{'EER(%)':>10}  {'minDCF':>10}  {'minDCFx100':>10}")
    print(f"{evalmetrics.eer(curve):>10.4f}  {dcf:>10.6f}  {100 * dcf:>10.4f}")
    if args.det:
        evalmetrics.export_det(curve, args.det)
    return 0


def cmd_synth(args):
    spec = experiment.SynthCorpusSpec(
        args.speakers, args.utterances, args.seconds, args.sample_rate, args.seed, args.background_speakers
    )
    manifest = experiment.synth_corpus(spec, args.out)
    print(f"wrote {len(manifest['utterances'])} utterances to {args.out}")
    return 0


def cmd_experiment(args):
    overrides = {
        "paths.corpus": args.corpus,
        "paths.work": args.work,
        "experiment.orders": args.orders,
        "experiment.multitaper": args.multitaper,
        "experiment.mixtures": args.mixtures,
        "experiment.em_iterations": args.iters,
        "experiment.relevance": args.relevance,
        "experiment.top_c": args.topc,
        "experiment.score_norm": args.score_norm,
        "experiment.seed": args.seed,
        "experiment.workers": args.workers,
        "dcf.c_miss": args.cmiss,
        "dcf.c_fa": args.cfa,
        "dcf.p_target": args.ptarget,
    }
    overrides.update({f"mfcc.{k}": v for k, v in _kv_pairs(args.set).items()})
    cfg = experiment.load_experiment_config(args.config, overrides)
    print(experiment.run_experiment(cfg), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="derivwin", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("window-metrics", help="leakage, sidelobe attenuation and mainlobe width of a window")
    p.add_argument("--base", default="hamming", choices=["hamming", "hanning", "rectangular"])
    p.add_argument("--order", type=int, default=0)
    p.add_argument("--length", type=int, default=160)
    p.add_argument("--fft-size", type=int)
    p.add_argument("--samples-csv", help="write n,value window samples")
    p.add_argument("--spectrum-csv", help="write normfreq,db magnitude response")
    p.set_defaults(func=cmd_window_metrics)

    p = sub.add_parser("verify-identity", help="check the slope/phase power-spectrum identity on one frame")
    p.add_argument("--input", required=True, help="CSV with one sample per line (last column used)")
    p.add_argument("--grid", type=int, default=8192)
    p.add_argument("--threshold", type=float, default=1e-4)
    p.set_defaults(func=cmd_verify_identity)

    p = sub.add_parser("extract", help="MFCC features of a 16-bit mono WAV file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--order", type=int, default=0)
    p.add_argument("--base", default="hamming", choices=["hamming", "hanning", "rectangular"])
    p.add_argument("--multitaper", type=int, default=0, metavar="K", help="use K sine tapers instead")
    p.add_argument("--config", help="INI file with an [mfcc] section")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override an MFCC option")
    p.add_argument("--vad-percentile", type=float)
    p.add_argument("--csv", help="also write the features as CSV")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train-ubm", help="train a UBM on pooled feature files")
    p.add_argument("--features", required=True, help="directory of .mfc files (or a single file)")
    p.add_argument("--mixtures", type=int, default=64)
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_ubm)

    p = sub.add_parser("adapt", help="MAP-adapt the UBM means to enrollment features")
    p.add_argument("--ubm", required=True)
    p.add_argument("--features", required=True, nargs="+")
    p.add_argument("--relevance", type=float, default=14.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_adapt)

    p = sub.add_parser("score", help="average top-C log-likelihood ratio per feature file")
    p.add_argument("--target", required=True)
    p.add_argument("--ubm", required=True)
    p.add_argument("--features", required=True, nargs="+")
    p.add_argument("--topc", type=int, default=5)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="EER and minDCF of a scored trial list")
    p.add_argument("--trials", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--cmiss", type=float, default=10.0)
    p.add_argument("--cfa", type=float, default=1.0)
    p.add_argument("--ptarget", type=float, default=0.01)
    p.add_argument("--det", help="write DET points as CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic speaker corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--speakers", type=int, default=10)
    p.add_argument("--background-speakers", type=int, default=10)
    p.add_argument("--utterances", type=int, default=4)
    p.add_argument("--seconds", type=float, default=5.0)
    p.add_argument("--sample-rate", type=int, default=8000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("experiment", help="compare windows through the full GMM-UBM pipeline")
    p.add_argument("--config", help="INI file; command-line flags override it")
    p.add_argument("--corpus")
    p.add_argument("--work")
    p.add_argument("--orders", help="comma-separated window orders, e.g. 0,1,2")
    p.add_argument("--multitaper", help="comma-separated sine-taper counts (0 for none)")
    p.add_argument("--mixtures", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--relevance", type=float)
    p.add_argument("--topc", type=int)
    p.add_argument("--score-norm", choices=["none", "zt"])
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--cmiss", type=float)
    p.add_argument("--cfa", type=float)
    p.add_argument("--ptarget", type=float)
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override an MFCC option")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - top-level reporting
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
