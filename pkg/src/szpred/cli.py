"""Command-line entry points.

Exit codes: 0 success, 1 usage error, 2 runtime error (details on stderr).
All subcommands are flag-driven; `--config FILE` preloads flag defaults
from a JSON object so runs are reproducible from a single file.
"""

import argparse
import glob
import json
import os
import sys
import tempfile

import numpy as np

from szpred import pipeline, rotforest, signal
from szpred.errors import SzpredError
from szpred.mapreduce import core, distributed, jobs


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _derived_seed(*parts):
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


# -- synthetic dataset (stands in for a licensed EEG archive) --

BACKGROUND = ((10.0, 1.0),)
NOISE_SIGMA = 0.1
SIGNATURE_HZ = 4.0
SIGNATURE_AMPLITUDE = 2.0
PREICTAL_FILE_MINUTES = 60
ICTAL_FILE_MINUTES = 3


def interictal_config(seed, hour, minutes=60):
    return signal.SynthConfig(
        duration_s=minutes * 60,
        background_bands=BACKGROUND,
        noise_sigma=NOISE_SIGMA,
        seed=_derived_seed(seed, 1, hour),
    )


def preictal_pair_configs(seed, event):
    """Configs for one seizure: a 60-minute preictal recording whose
    signature ramps across the final 48 minutes, and a 3-minute ictal
    recording at full signature amplitude."""
    duration = PREICTAL_FILE_MINUTES * 60
    pre = signal.SynthConfig(
        duration_s=duration,
        background_bands=BACKGROUND,
        noise_sigma=NOISE_SIGMA,
        preictal_signature=signal.PreictalSignature(
            center_hz=SIGNATURE_HZ,
            peak_amplitude=SIGNATURE_AMPLITUDE,
            start_s=duration - signal.PREICTAL_MINUTES * 60,
            onset_s=duration,
        ),
        seed=_derived_seed(seed, 2, event),
    )
    ict = signal.SynthConfig(
        duration_s=ICTAL_FILE_MINUTES * 60,
        background_bands=BACKGROUND,
        noise_sigma=NOISE_SIGMA,
        preictal_signature=signal.PreictalSignature(
            center_hz=SIGNATURE_HZ,
            peak_amplitude=SIGNATURE_AMPLITUDE,
            start_s=0.0,
            onset_s=0.0,
        ),
        seed=_derived_seed(seed, 3, event),
    )
    return pre, ict


def write_synth_dataset(out_dir, hours, seizures, seed):
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for h in range(hours):
        rec = signal.synthesize_eeg(interictal_config(seed, h), phase="interictal")
        path = os.path.join(out_dir, f"interictal_{h:02d}.csv")
        signal.save_csv(rec, path)
        written.append(path)
    for e in range(seizures):
        pre_cfg, ict_cfg = preictal_pair_configs(seed, e)
        pre = signal.synthesize_eeg(pre_cfg, phase="preictal")
        ict = signal.synthesize_eeg(ict_cfg, phase="ictal")
        for rec, kind in ((pre, "preictal"), (ict, "ictal")):
            path = os.path.join(out_dir, f"{kind}_{e:02d}.csv")
            signal.save_csv(rec, path)
            written.append(path)
    return written


def load_dataset(data_dir):
    inter = [signal.load_csv(p) for p in sorted(glob.glob(os.path.join(data_dir, "interictal_*.csv")))]
    pres = sorted(glob.glob(os.path.join(data_dir, "preictal_*.csv")))
    icts = sorted(glob.glob(os.path.join(data_dir, "ictal_*.csv")))
    if len(pres) != len(icts):
        raise SzpredError(f"unpaired preictal/ictal files: {len(pres)} vs {len(icts)}")
    events = tuple((signal.load_csv(p), signal.load_csv(i)) for p, i in zip(pres, icts))
    return tuple(inter), events


def _executor_from_args(args):
    host, port = "127.0.0.1", 0
    if getattr(args, "master", None):
        host, _, port_s = args.master.partition(":")
        port = int(port_s or 0)
    return pipeline.ExecutorSpec(mode=args.executor, workers=args.workers,
                                 master_host=host, master_port=port)


def _parse_executor_list(text):
    specs = []
    for item in text.split(","):
        mode, _, n = item.strip().partition(":")
        workers = int(n) if n else 2
        specs.append(pipeline.ExecutorSpec(mode=mode, workers=workers))
    return specs


# -- subcommand handlers --


def cmd_synth(args):
    written = write_synth_dataset(args.out, args.hours, args.seizures, args.seed)
    print(f"wrote {len(written)} recordings to {args.out}")
    return 0


def _train_spec(args, inter, events):
    return pipeline.TrainSpec(
        interictal=inter,
        preictal_events=events,
        interictal_minutes=args.interictal_minutes,
        forest=rotforest.RotationForestConfig(seed=args.seed),
        seed=args.seed,
    )


def cmd_train(args):
    inter, events = load_dataset(args.data)
    spec = _train_spec(args, inter, events)
    executor = _executor_from_args(args)
    work_dir = args.work_dir or tempfile.mkdtemp(prefix="szpred-train-")
    model, report = pipeline.train_pipeline(spec, executor, work_dir)
    rotforest.save_model(model, args.out)
    print(f"model: {args.out}")
    print(f"cv mean accuracy: {report.cv_mean:.4f} over {len(report.cv_accuracies)} folds")
    print(
        f"signal processing [{report.executor}]: interictal {report.interictal_s:.2f}s,"
        f" preictal {report.preictal_s:.2f}s, total {report.total_s:.2f}s"
    )
    return 0


def cmd_predict(args):
    model = rotforest.load_model(args.model)
    stream_paths = sorted(glob.glob(os.path.join(args.stream, "*.csv")))
    if not stream_paths:
        raise SzpredError(f"no .csv recordings in {args.stream}")
    stream = [signal.load_csv(p) for p in stream_paths]
    executor = _executor_from_args(args)
    work_dir = args.work_dir or tempfile.mkdtemp(prefix="szpred-predict-")
    timeline, report = pipeline.test_pipeline(model, stream, executor, work_dir)
    pipeline.save_timeline_csv(timeline, args.out)
    print(f"timeline: {args.out}")
    print(f"chunks: {len(timeline.predictions)}, alarms at: {list(timeline.alarms)}")
    if report.lead_time_min is not None:
        print(f"lead time: {report.lead_time_min:.1f} min")
    return 0


def cmd_bench(args):
    inter, events = load_dataset(args.data)
    spec = _train_spec(args, inter, events)
    stream = [inter[0], signal.build_preictal(*events[0])]
    executor_specs = _parse_executor_list(args.executors)
    work_dir = args.work_dir or tempfile.mkdtemp(prefix="szpred-bench-")
    results = pipeline.benchmark(spec, stream, executor_specs, args.repeats, work_dir)
    print(pipeline.format_benchmark(results))
    pipeline.save_benchmark_csv(results, args.out)
    print(f"csv: {args.out}")
    return 0


def cmd_master(args):
    host, _, port_s = args.listen.partition(":")
    job_path = os.path.join(args.work_dir, "job.json")
    if not os.path.exists(job_path):
        raise SzpredError(f"no job description at {job_path}")
    with open(job_path, "r", encoding="utf-8") as fh:
        job = core.Job.from_json(fh.read())
    cluster = distributed.ClusterConfig(
        master_host=host or "127.0.0.1",
        master_port=int(port_s or 0),
        expected_workers=args.expected_workers,
        work_dir=args.work_dir,
    )
    records = distributed.run_distributed(job, cluster)
    print(f"job {job.job_id}: {len(records)} output records")
    print(f"output: {core.output_path(job, args.work_dir)}")
    return 0


def cmd_worker(args):
    host, _, port_s = args.master.partition(":")
    return distributed.run_worker(host or "127.0.0.1", int(port_s), args.work_dir)


def build_parser():
    parser = _Parser(prog="szpred", description=__doc__)
    parser.add_argument("--config", help="JSON file preloading flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[], help="write a synthetic dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--hours", type=int, default=4, help="interictal hours")
    p.add_argument("--seizures", type=int, default=2, help="preictal/ictal pairs")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_synth)

    def executor_flags(p):
        p.add_argument("--executor", choices=["serial", "threaded", "distributed"], default="serial")
        p.add_argument("--workers", type=int, default=2)
        p.add_argument("--master", help="HOST:PORT for the distributed master")
        p.add_argument("--work-dir", help="shared work directory (default: temp)")

    p = sub.add_parser("train", help="train a model from a data directory")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="model file path")
    executor_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--interictal-minutes", type=int, choices=[10, 60], default=10)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("predict", help="run a model over a recording stream")
    p.add_argument("--model", required=True)
    p.add_argument("--stream", required=True, help="directory of .csv recordings in name order")
    p.add_argument("--out", required=True, help="alarm timeline CSV")
    executor_flags(p)
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("bench", help="compare executors on the same workload")
    p.add_argument("--data", required=True)
    p.add_argument("--executors", default="serial,threaded:4", help="e.g. serial,threaded:4,distributed:2")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--out", required=True, help="results CSV")
    p.add_argument("--work-dir")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--interictal-minutes", type=int, choices=[10, 60], default=10)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("master", help="run the job at <work-dir>/job.json")
    p.add_argument("--listen", required=True, help="HOST:PORT")
    p.add_argument("--work-dir", required=True)
    p.add_argument("--expected-workers", type=int, default=1)
    p.set_defaults(fn=cmd_master)

    p = sub.add_parser("worker", help="serve tasks for a master")
    p.add_argument("--master", required=True, help="HOST:PORT")
    p.add_argument("--work-dir", required=True)
    p.set_defaults(fn=cmd_worker)
    return parser


def main(argv=None):
    parser = build_parser()
    args, remaining = parser.parse_known_args(argv)
    if remaining:
        parser.error(f"unrecognized arguments: {' '.join(remaining)}")
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            overrides = json.load(fh)
        for key, value in overrides.items():
            if getattr(args, key, None) in (None, parser.get_default(key)):
                setattr(args, key, value)
    try:
        return args.fn(args)
    except SzpredError as exc:
        print(f"szpred: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"szpred: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
