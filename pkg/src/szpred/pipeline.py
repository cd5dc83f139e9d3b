"""End-to-end orchestration: dataset assembly, training, prediction, alarms.

Training follows the acquisition protocol: a window from every interictal
hour (10 minutes by default, the full hour in the big-dataset variant),
each preictal/ictal pair fused into one 48-minute-plus-seizure recording,
everything cut into 8-minute chunks, features extracted through the
MapReduce signal job, 10-fold cross-validation, and a final Rotation
Forest trained through the ensemble job. Testing streams chunks in
temporal order and turns per-segment predictions into chunk decisions
(strict majority) and alarms (three consecutive preictal chunks, one alarm
per uninterrupted run).
"""

import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from szpred import features, rotforest, signal, wavelet
from szpred.errors import InsufficientDataError, ParameterError, ShapeError
from szpred.mapreduce import core, distributed, executors, jobs

CHUNK_MINUTES = 8


@dataclass(frozen=True)
class ExecutorSpec:
    """Which executor runs the MapReduce jobs."""

    mode: str = "serial"  # serial | threaded | distributed
    workers: int = 2
    master_host: str = "127.0.0.1"
    master_port: int = 0
    heartbeat_interval_ms: int = 200
    task_timeout_ms: int = 4000

    def __post_init__(self):
        if self.mode not in ("serial", "threaded", "distributed"):
            raise ParameterError(f"unknown executor mode {self.mode!r}")
        if self.workers < 1:
            raise ParameterError("workers must be >= 1")


def run_job(job, work_dir, executor):
    if executor.mode == "serial":
        return executors.run_serial(job, work_dir)
    if executor.mode == "threaded":
        return executors.run_threaded(job, work_dir, executor.workers)
    cluster = distributed.ClusterConfig(
        master_host=executor.master_host,
        master_port=executor.master_port,
        expected_workers=executor.workers,
        heartbeat_interval_ms=executor.heartbeat_interval_ms,
        task_timeout_ms=executor.task_timeout_ms,
        work_dir=work_dir,
    )
    return distributed.run_distributed(job, cluster, spawn_workers=executor.workers)


@dataclass(frozen=True)
class ChunkPrediction:
    chunk_index: int
    positive_fraction: float
    chunk_label: str
    wall_clock_offset_min: float


@dataclass(frozen=True)
class AlarmTimeline:
    predictions: tuple
    alarms: tuple  # chunk indices (positions in the prediction sequence)
    seizure_onset_min: float | None = None


@dataclass
class RunReport:
    executor: str = "serial"
    interictal_s: float = 0.0
    preictal_s: float = 0.0
    total_s: float = 0.0
    test_s: float | None = None
    cv_accuracies: tuple = ()
    cv_mean: float | None = None
    alarms: tuple = ()
    lead_time_min: float | None = None


def classify_chunk(segment_labels, chunk_index=0, offset_min=0.0, segments_per_chunk=None):
    """Strict-majority chunk decision over its per-segment labels."""
    labels = list(segment_labels)
    expected = signal.SEGMENTS_PER_CHUNK if segments_per_chunk is None else segments_per_chunk
    if len(labels) != expected:
        raise ShapeError(f"expected {expected} segment labels, got {len(labels)}")
    fraction = sum(1 for l in labels if l == "preictal") / len(labels)
    return ChunkPrediction(
        chunk_index=chunk_index,
        positive_fraction=fraction,
        chunk_label="preictal" if fraction > 0.5 else "interictal",
        wall_clock_offset_min=offset_min,
    )


def alarm_scan(chunk_labels):
    """Alarm fires at the third consecutive preictal chunk; an ongoing run
    raises only one alarm, and an interictal chunk resets the run."""
    alarms = []
    run = 0
    fired = False
    for i, label in enumerate(chunk_labels):
        if label == "preictal":
            run += 1
            if run >= 3 and not fired:
                alarms.append(i)
                fired = True
        else:
            run = 0
            fired = False
    return alarms


@dataclass(frozen=True)
class TrainSpec:
    interictal: tuple  # Recordings, one per source hour
    preictal_events: tuple  # (preictal Recording, ictal Recording) pairs
    interictal_minutes: int = 10  # 10 or 60 (full-hour variant)
    filter_name: str = "db4"
    level: int = 4
    forest: rotforest.RotationForestConfig = field(
        default_factory=rotforest.RotationForestConfig
    )
    folds: int = 10
    seed: int = 0

    def __post_init__(self):
        if not self.interictal or not self.preictal_events:
            raise InsufficientDataError(
                "need at least one interictal source and one preictal event"
            )


def _derived_seed(*parts):
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _write_chunks(chunk_list, work_dir, tag):
    paths = []
    for i, chunk in enumerate(chunk_list):
        path = os.path.join(work_dir, "splits", f"{tag}-{i:05d}.npz")
        jobs.save_chunk(chunk, path)
        paths.append(path)
    return paths


def _reindex(chunks, start):
    return [replace(c, chunk_index=start + i) for i, c in enumerate(chunks)]


def train_pipeline(spec, executor, work_dir, run_tag="train"):
    """Assemble the training table through the signal job, cross-validate,
    and train the final model through the ensemble job."""
    filt = wavelet.filter_bank(spec.filter_name)

    t0 = time.perf_counter()
    interictal_chunks = []
    for i, rec in enumerate(spec.interictal):
        window = signal.sample_training_window(
            rec, spec.interictal_minutes, seed=_derived_seed(spec.seed, 101, i)
        )
        interictal_chunks.extend(signal.segment(window))
    interictal_chunks = _reindex(interictal_chunks, 0)
    ipaths = _write_chunks(interictal_chunks, work_dir, f"{run_tag}-inter")
    irecords = run_job(
        jobs.signal_job(f"{run_tag}-signal-inter", ipaths, work_dir, spec.filter_name, spec.level),
        work_dir,
        executor,
    )
    interictal_s = time.perf_counter() - t0

    t1 = time.perf_counter()
    preictal_chunks = []
    for pre, ict in spec.preictal_events:
        fused = signal.build_preictal(pre, ict)
        preictal_chunks.extend(signal.segment(fused))
    preictal_chunks = _reindex(preictal_chunks, 0)
    ppaths = _write_chunks(preictal_chunks, work_dir, f"{run_tag}-pre")
    precords = run_job(
        jobs.signal_job(f"{run_tag}-signal-pre", ppaths, work_dir, spec.filter_name, spec.level),
        work_dir,
        executor,
    )
    preictal_s = time.perf_counter() - t1

    itable = jobs.table_from_records(irecords, work_dir, spec.level)
    ptable = jobs.table_from_records(precords, work_dir, spec.level)
    table = features.FeatureTable(
        values=np.concatenate([itable.values, ptable.values], axis=0),
        labels=itable.labels + ptable.labels,
        names=itable.names,
    )

    accuracies, cv_mean = rotforest.cross_validate(table, spec.forest, spec.folds)

    table_path = os.path.join(work_dir, "splits", f"{run_tag}-table.npz")
    jobs.save_table(table, table_path)
    ejob = jobs.ensemble_job(
        f"{run_tag}-ensemble",
        work_dir,
        table_path,
        spec.forest,
        n_map_tasks=max(2, executor.workers),
    )
    erecords = run_job(ejob, work_dir, executor)
    model = jobs.model_from_records(erecords, table.names, spec.forest)

    report = RunReport(
        executor=executor.mode,
        interictal_s=interictal_s,
        preictal_s=preictal_s,
        total_s=interictal_s + preictal_s,
        cv_accuracies=tuple(accuracies),
        cv_mean=cv_mean,
    )
    return model, report


def stream_chunks(stream):
    """Chunks of a temporally ordered recording list, globally indexed,
    with wall-clock offsets and the ground-truth onset minute (if any)."""
    chunks = []
    offsets = []
    onset_min = None
    clock_min = 0.0
    index = 0
    for rec in stream:
        if rec.onset_index is not None:
            onset_min = clock_min + rec.onset_index / rec.sample_rate_hz / 60.0
        for chunk in signal.segment(rec):
            chunks.append(replace(chunk, chunk_index=index))
            offsets.append(clock_min + chunk.chunk_index * CHUNK_MINUTES)
            index += 1
        clock_min += rec.duration_s / 60.0
    return chunks, offsets, onset_min


def test_pipeline(model, stream, executor, work_dir, level=4, filter_name="db4", run_tag="test"):
    """Stream chunks through the signal job, classify each, scan for alarms."""
    expected_names = None
    chunks, offsets, onset_min = stream_chunks(stream)
    if chunks:
        expected_names = features.feature_names(chunks[0].channel_count, level)
        if tuple(model.feature_names) != expected_names:
            raise ShapeError(
                f"model schema ({len(model.feature_names)} features) does not match "
                f"extractor config ({len(expected_names)} features)"
            )
    t0 = time.perf_counter()
    paths = _write_chunks(chunks, work_dir, f"{run_tag}-stream")
    records = (
        run_job(
            jobs.signal_job(f"{run_tag}-signal", paths, work_dir, filter_name, level),
            work_dir,
            executor,
        )
        if paths
        else []
    )
    rows_by_chunk = {key[1]: jobs.load_shard(work_dir, value) for key, value in records}
    predictions = []
    for chunk, offset in zip(chunks, offsets):
        rows = rows_by_chunk[chunk.chunk_index]
        seg_labels = [features.LABELS[c] for c in rotforest.predict_rows(model, rows)]
        predictions.append(
            classify_chunk(
                seg_labels,
                chunk_index=chunk.chunk_index,
                offset_min=offset,
                segments_per_chunk=chunk.segments_per_chunk,
            )
        )
    test_s = time.perf_counter() - t0
    alarms = alarm_scan([p.chunk_label for p in predictions])
    lead = None
    if alarms and onset_min is not None:
        first_alarm_end = predictions[alarms[0]].wall_clock_offset_min + CHUNK_MINUTES
        lead = onset_min - first_alarm_end
    timeline = AlarmTimeline(
        predictions=tuple(predictions), alarms=tuple(alarms), seizure_onset_min=onset_min
    )
    report = RunReport(
        executor=executor.mode,
        test_s=test_s,
        alarms=tuple(alarms),
        lead_time_min=lead,
    )
    return timeline, report


def save_timeline_csv(timeline, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("chunk_index,offset_min,positive_fraction,label,alarm\n")
        alarm_set = set(timeline.alarms)
        for i, p in enumerate(timeline.predictions):
            fh.write(
                f"{p.chunk_index},{p.wall_clock_offset_min:.3f},"
                f"{p.positive_fraction:.6f},{p.chunk_label},{int(i in alarm_set)}\n"
            )


# -- benchmark harness --

PHASE_ROWS = ("interictal processing", "preictal processing", "total", "test")


def benchmark(spec, stream, executor_specs, repeats, work_dir):
    """Median wall times per phase per executor, plus speedup ratios."""
    results = {}
    for ex in executor_specs:
        samples = {row: [] for row in PHASE_ROWS}
        model = None
        for r in range(repeats):
            tag = f"bench-{ex.mode}{ex.workers}-r{r}"
            model, rep = train_pipeline(spec, ex, work_dir, run_tag=tag)
            _, trep = test_pipeline(
                model, stream, ex, work_dir, level=spec.level,
                filter_name=spec.filter_name, run_tag=tag,
            )
            samples["interictal processing"].append(rep.interictal_s)
            samples["preictal processing"].append(rep.preictal_s)
            samples["total"].append(rep.total_s)
            samples["test"].append(trep.test_s)
        results[_ex_name(ex)] = {row: float(np.median(v)) for row, v in samples.items()}
    return results


def _ex_name(ex):
    return ex.mode if ex.mode == "serial" else f"{ex.mode}({ex.workers})"


def format_benchmark(results):
    """Aligned plain-text table in the paper's row structure with ratios."""
    names = list(results)
    width = max(len(r) for r in PHASE_ROWS) + 2
    lines = ["".ljust(width) + "".join(n.rjust(16) for n in names)]
    for row in PHASE_ROWS:
        lines.append(row.ljust(width) + "".join(f"{results[n][row]:16.3f}" for n in names))
    base = next((n for n in names if n == "serial"), names[0])
    lines.append("")
    for row in PHASE_ROWS:
        ratios = "".join(
            f"{results[n][row] / results[base][row]:16.3f}" if results[base][row] > 0 else "-".rjust(16)
            for n in names
        )
        lines.append(f"{row} / {base}".ljust(width + 8) + ratios)
    return "\n".join(lines)


def save_benchmark_csv(results, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("phase,executor,seconds\n")
        for name, rows in results.items():
            for row, seconds in rows.items():
                fh.write(f"{row},{name},{seconds:.6f}\n")
