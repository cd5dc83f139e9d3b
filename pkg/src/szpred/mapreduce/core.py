"""Job model and the shared map/reduce/collect machinery.

Every executor (serial, threaded, distributed) runs the same task
functions over the same work-directory layout:

    splits/                        caller-provided input files
    intermediate/<job>/<task>/     key-partitioned map output (JSON lines)
    control/                       distributed-mode task payloads
    output/<job>/                  per-partition reduce output + final file

Intermediate records carry their (split index, emission sequence) so that
reduce groups are ordered identically no matter which executor produced
them or in which order parts arrived; the final output is globally sorted
by key. That is what makes executor outputs byte-identical.
"""

import json
import os
import tempfile
import zlib
from dataclasses import dataclass, field

from szpred.errors import JobError, ParameterError

MAP_REGISTRY = {}
REDUCE_REGISTRY = {}


def register_map(name):
    def deco(fn):
        MAP_REGISTRY[name] = fn
        return fn

    return deco


def register_reduce(name):
    def deco(fn):
        REDUCE_REGISTRY[name] = fn
        return fn

    return deco


@dataclass(frozen=True)
class Job:
    job_id: str
    map_fn_id: str
    reduce_fn_id: str
    input_splits: tuple
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "input_splits", tuple(self.input_splits))
        if not self.input_splits:
            raise ParameterError("job needs at least one input split")
        if self.map_fn_id not in MAP_REGISTRY:
            raise ParameterError(f"unknown map function {self.map_fn_id!r}")
        if self.reduce_fn_id not in REDUCE_REGISTRY:
            raise ParameterError(f"unknown reduce function {self.reduce_fn_id!r}")

    def to_json(self):
        return json.dumps(
            {
                "job_id": self.job_id,
                "map_fn_id": self.map_fn_id,
                "reduce_fn_id": self.reduce_fn_id,
                "input_splits": list(self.input_splits),
                "params": self.params,
            }
        )

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(
            job_id=d["job_id"],
            map_fn_id=d["map_fn_id"],
            reduce_fn_id=d["reduce_fn_id"],
            input_splits=tuple(d["input_splits"]),
            params=d["params"],
        )


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    kind: str  # "map" | "reduce"
    job_id: str
    payload: dict
    attempt: int = 1


@dataclass(frozen=True)
class TaskResult:
    task_id: str
    attempt: int
    outputs: tuple
    status: str  # "ok" | "error"
    error: str = ""


def map_task_id(split_index):
    return f"map-{split_index:05d}"


def reduce_task_id(partition):
    return f"reduce-{partition:05d}"


def _canonical(key):
    return json.dumps(key, sort_keys=True, separators=(",", ":"))


def partition_of(key, n_partitions):
    return zlib.crc32(_canonical(key).encode("utf-8")) % n_partitions


def _sortable(key):
    if isinstance(key, list):
        return tuple(_sortable(k) for k in key)
    return key


def atomic_write(path, text):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path), prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_array(path, array):
    """Atomic .npy write; concurrent attempts of a re-executed task may race
    on the same path, which is safe because they write identical bytes."""
    import numpy as np

    os.makedirs(os.path.dirname(path), exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path), prefix=".tmp-", suffix=".npy")
    try:
        with os.fdopen(fd, "wb") as fh:
            np.save(fh, array)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def artifact_dir(work_dir, job_id):
    return os.path.join(work_dir, "artifacts", job_id)


def intermediate_dir(work_dir, job_id, task_id):
    return os.path.join(work_dir, "intermediate", job_id, task_id)


def output_dir(work_dir, job_id):
    return os.path.join(work_dir, "output", job_id)


def run_map_task(job, split_index, n_partitions, work_dir):
    """Execute one map task; returns the per-partition intermediate paths.

    Idempotent: re-execution atomically rewrites the same files.
    """
    task_id = map_task_id(split_index)
    map_fn = MAP_REGISTRY[job.map_fn_id]
    split = job.input_splits[split_index]
    try:
        pairs = list(map_fn(split, job.params))
    except Exception as exc:
        raise JobError(f"map task {task_id} on split {split!r} failed: {exc}") from exc
    buckets = [[] for _ in range(n_partitions)]
    for seq, (key, value) in enumerate(pairs):
        line = json.dumps([key, split_index, seq, value], separators=(",", ":"))
        buckets[partition_of(key, n_partitions)].append(line)
    outdir = intermediate_dir(work_dir, job.job_id, task_id)
    paths = []
    for p, lines in enumerate(buckets):
        path = os.path.join(outdir, f"part-{p:05d}.jsonl")
        atomic_write(path, "".join(line + "\n" for line in lines))
        paths.append(path)
    return paths


def run_reduce_task(job, partition, map_split_indices, work_dir):
    """Execute one reduce task over its partition: group, order, reduce.

    Keys are processed in ascending order; each group's values in
    (split index, emission sequence) order.
    """
    task_id = reduce_task_id(partition)
    reduce_fn = REDUCE_REGISTRY[job.reduce_fn_id]
    groups = {}
    for split_index in map_split_indices:
        path = os.path.join(
            intermediate_dir(work_dir, job.job_id, map_task_id(split_index)),
            f"part-{partition:05d}.jsonl",
        )
        with open(path, "r", encoding="utf-8") as fh:
            for raw in fh:
                key, src, seq, value = json.loads(raw)
                groups.setdefault(_canonical(key), []).append((src, seq, key, value))
    out_lines = []
    for ckey in sorted(groups, key=lambda c: _sortable(json.loads(c))):
        entries = sorted(groups[ckey], key=lambda e: (e[0], e[1]))
        key = entries[0][2]
        values = [e[3] for e in entries]
        try:
            reduced = list(reduce_fn(key, values, job.params))
        except Exception as exc:
            raise JobError(f"reduce task {task_id} on key {ckey} failed: {exc}") from exc
        for value in reduced:
            out_lines.append(json.dumps([key, value], separators=(",", ":")))
    path = os.path.join(output_dir(work_dir, job.job_id), f"{task_id}.jsonl")
    atomic_write(path, "".join(line + "\n" for line in out_lines))
    return [path]


def collect_output(job, n_partitions, work_dir):
    """Merge partition outputs into the final key-ordered records and file.

    Partition files carry disjoint keys and are already key-sorted, so the
    merge re-orders whole lines without re-encoding them.
    """
    lines = []
    for p in range(n_partitions):
        path = os.path.join(output_dir(work_dir, job.job_id), f"{reduce_task_id(p)}.jsonl")
        with open(path, "r", encoding="utf-8") as fh:
            for raw in fh:
                record = json.loads(raw)
                lines.append((_sortable(record[0]), raw, record))
    lines.sort(key=lambda item: item[0])
    final = os.path.join(output_dir(work_dir, job.job_id), "output.jsonl")
    atomic_write(final, "".join(raw for _k, raw, _r in lines))
    return [(record[0], record[1]) for _k, _raw, record in lines]


def output_path(job, work_dir):
    return os.path.join(output_dir(work_dir, job.job_id), "output.jsonl")
