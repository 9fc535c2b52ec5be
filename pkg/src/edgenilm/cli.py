"""Command-line entry point.

Subcommands
    gen       waveform CSV from the config's schedule
    features  per-frame feature rows (CSV) from a waveform CSV
    events    detected events with composite features (JSON lines)
    train     fit the CNN classifier on labeled event files (model JSON)
    classify  predictions for every event in a waveform (JSON lines)
    eval      metrics JSON from a predictions file
    bench     per-stage timing/memory report

Exit codes: 0 success, 1 usage error, 2 data/config error.  All outputs
are plain CSV/JSON and byte-reproducible for a fixed config and seed.
"""

import argparse
import json
import sys

import numpy as np

from . import acquisition, bench, classify, config, dtw, events, features, signalgen
from .errors import ConfigurationError
from .neuralnet import MobileMiniClassifier

USAGE_EXIT = 1
DATA_EXIT = 2

SCHEMAS = """\
file schemas:
  waveform CSV      t_s,v_V,i_A,labels        labels = |-joined appliance ids
  raw frame CSV     t_s,counts_v,counts_i
  features CSV      frame_idx,P_W,S_VA,Q_var,h1..h15_mag,h1..h15_phase (odd orders)
  events JSONL      {"j":int,"dir":"on|off","delta":float,"feature":[...],"label":str?}
  predictions JSONL {"j":int,"dir":...,"label":str,"probs":{...},"truth":str?}
  metrics JSON      {accuracy,precision_macro,recall_macro,f1_macro,labels,confusion}
  model JSON        {format_version,classes,feature_mean,feature_std,params,model}
  bench JSON        {reps,fft_n,stages:{...ns_median,table_bytes},skip_speedup,...}
"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(USAGE_EXIT)


def build_parser():
    p = _Parser(
        prog="edgenilm",
        description=__doc__.splitlines()[0],
        epilog=SCHEMAS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--config", default=None, help="JSON config path (bundled default otherwise)")
    p.add_argument("--seed", type=int, default=0, help="seed for anything stochastic")
    p.add_argument("--mode", choices=("power", "current"), default=None, help="detector/feature mode")
    p.add_argument("--out", default=None, help="output file path (default stdout)")
    sub = p.add_subparsers(dest="command", metavar="command")

    g = sub.add_parser("gen", help="synthesize the config's schedule into a waveform CSV")
    g.add_argument("--raw-out", default=None, help="also dump quantized counts CSV here")

    f = sub.add_parser("features", help="per-100ms-frame features from a waveform CSV")
    f.add_argument("waveform", help="input waveform CSV")

    e = sub.add_parser("events", help="detect events and emit composite features")
    e.add_argument("waveform", help="input waveform CSV")
    e.add_argument("--dump-dtw-table", default=None, metavar="CSV",
                   help="debug: write the DP table of the first event's (j+1, j) pair")

    t = sub.add_parser("train", help="train the CNN on labeled event JSONL files")
    t.add_argument("events", nargs="+", help="event JSONL files with label fields")

    c = sub.add_parser("classify", help="classify every event in a waveform")
    c.add_argument("waveform", help="input waveform CSV")
    c.add_argument("--model", required=True, help="model JSON from `train`")

    v = sub.add_parser("eval", help="metrics from a predictions JSONL with truth fields")
    v.add_argument("predictions", help="predictions JSONL")

    b = sub.add_parser("bench", help="stage timing/memory report")
    b.add_argument("--reps", type=int, default=10000, help="timing repetitions per stage")
    return p


def _emit(path, text):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_gen(args, cfg):
    if cfg.schedule is None:
        raise ConfigurationError("config has no schedule block to generate from")
    wave = signalgen.synth_scenario(cfg.appliances, cfg.schedule, cfg.fs, args.seed)
    out = args.out or "waveform.csv"
    signalgen.write_waveform_csv(wave, out)
    if args.raw_out:
        raw, _ = acquisition.quantize(wave, cfg.acquisition)
        acquisition.raw_frame_csv(raw, args.raw_out)
    return 0


def cmd_features(args, cfg):
    wave = signalgen.read_waveform_csv(args.waveform)
    if args.mode == "current":
        wave = acquisition.drop_voltage(wave)
    frames = acquisition.frame_stream(wave, cfg.acquisition)
    orders = features.ODD_ORDERS
    header = (
        ["frame_idx", "P_W", "S_VA", "Q_var"]
        + [f"h{o}_mag" for o in orders]
        + [f"h{o}_phase" for o in orders]
    )
    lines = [",".join(header)]
    for k, frame in enumerate(frames):
        ref = frame.v if frame.v is not None else frame.i
        anchor = features.first_rising_crossing(ref) or 0.0
        window = features.resample_window(
            frame.i, anchor, wave.fs / cfg.mains.frequency, features.WINDOW_CYCLES
        )
        spec = features.fft(window, features.WINDOW_POINTS, fs=features.POINTS_PER_CYCLE * cfg.mains.frequency)
        hv = features.odd_harmonics(spec, f0=cfg.mains.frequency)
        if frame.v is not None:
            pf = features.power_features(frame)
            head = [repr(pf.p), repr(pf.s), repr(pf.q)]
        else:
            head = ["", "", ""]
        row = (
            [str(k)]
            + head
            + [repr(float(m)) for m in hv.magnitudes]
            + [repr(float(p)) for p in hv.phases]
        )
        lines.append(",".join(row))
    _emit(args.out, "\n".join(lines) + "\n")
    return 0


def _event_lines(records):
    lines = []
    for rec in records:
        entry = {
            "j": rec.mark.j,
            "dir": rec.mark.direction,
            "delta": rec.mark.delta,
            "feature": [float(x) for x in rec.feature.values],
        }
        if rec.label is not None:
            entry["label"] = rec.label
        lines.append(json.dumps(entry, sort_keys=True))
    return lines


def cmd_events(args, cfg):
    wave = signalgen.read_waveform_csv(args.waveform)
    records = classify.extract_event_records(wave, cfg.acquisition, cfg.detector)
    if args.dump_dtw_table and records:
        cyc = records[0].cycle_set.cycles
        table = dtw.dp_table(cyc[3], cyc[2])
        np.savetxt(args.dump_dtw_table, table, delimiter=",")
    _emit(args.out, "\n".join(_event_lines(records)) + ("\n" if records else ""))
    return 0


def cmd_train(args, cfg):
    X, y = [], []
    for path in args.events:
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                entry = json.loads(line)
                if "label" not in entry:
                    raise ConfigurationError(f"{path}: event without a label field")
                X.append(entry["feature"])
                y.append(entry["label"])
    if not X:
        raise ConfigurationError("no labeled events found")
    clf = MobileMiniClassifier(
        learning_rate=cfg.training.learning_rate,
        epochs=cfg.training.epochs,
        batch_size=cfg.training.batch_size,
        seed=cfg.training.seed if args.seed == 0 else args.seed,
    )
    clf.fit(np.asarray(X, dtype=np.float64), np.asarray(y))
    _emit(args.out, json.dumps(clf.to_dict(), sort_keys=True) + "\n")
    return 0


def cmd_classify(args, cfg):
    with open(args.model) as fh:
        clf = MobileMiniClassifier.from_dict(json.load(fh))
    wave = signalgen.read_waveform_csv(args.waveform)
    records = classify.extract_event_records(wave, cfg.acquisition, cfg.detector)
    lines = []
    for rec in records:
        probs = clf.predict_proba(rec.feature.values[None, :])[0]
        best = clf.classes_[int(np.argmax(probs))]
        entry = {
            "j": rec.mark.j,
            "dir": rec.mark.direction,
            "label": str(best),
            "probs": {str(l): float(p) for l, p in zip(clf.classes_, probs)},
        }
        if rec.label is not None:
            entry["truth"] = rec.label
        lines.append(json.dumps(entry, sort_keys=True))
    _emit(args.out, "\n".join(lines) + ("\n" if lines else ""))
    return 0


def cmd_eval(args, cfg):
    preds, truths = [], []
    with open(args.predictions) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            entry = json.loads(line)
            if "truth" not in entry:
                raise ConfigurationError("prediction line without a truth field")
            preds.append(entry["label"])
            truths.append(entry["truth"])
    if not preds:
        raise ConfigurationError("no predictions to evaluate")
    metrics = classify.evaluate(np.asarray(preds), np.asarray(truths))
    _emit(args.out, classify.metrics_json(metrics) + "\n")
    return 0


def cmd_bench(args, cfg):
    report = bench.run_bench(reps=args.reps, fs=cfg.fs)
    _emit(args.out, bench.bench_json(report) + "\n")
    if args.out:
        sys.stdout.write(report.table() + "\n")
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "features": cmd_features,
    "events": cmd_events,
    "train": cmd_train,
    "classify": cmd_classify,
    "eval": cmd_eval,
    "bench": cmd_bench,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else USAGE_EXIT
    if args.command is None:
        parser.print_help()
        return USAGE_EXIT
    try:
        cfg = config.load_config(args.config, mode=args.mode)
        return COMMANDS[args.command](args, cfg)
    except (ConfigurationError, OSError, json.JSONDecodeError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
