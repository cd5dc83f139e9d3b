"""Serial and thread-pool executors.

The serial executor defines the reference output; the threaded executor
must reproduce it byte for byte. Pool parallelism pays off because the hot
kernels (wavelet levels, PCA linear algebra, split scans) run outside the
GIL and BLAS is pinned to one thread package-wide.
"""

from concurrent.futures import ThreadPoolExecutor

from szpred.errors import JobError, ParameterError
from szpred.mapreduce import core


def run_serial(job, work_dir):
    """Reference executor: maps in split order, one reduce partition."""
    n_partitions = 1
    for split_index in range(len(job.input_splits)):
        core.run_map_task(job, split_index, n_partitions, work_dir)
    all_splits = list(range(len(job.input_splits)))
    for p in range(n_partitions):
        core.run_reduce_task(job, p, all_splits, work_dir)
    return core.collect_output(job, n_partitions, work_dir)


def run_threaded(job, work_dir, workers):
    """Fixed-size pool over map tasks, shuffle barrier, pool over reduces."""
    if workers < 1:
        raise ParameterError(f"workers must be >= 1, got {workers}")
    n_partitions = workers
    all_splits = list(range(len(job.input_splits)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(core.run_map_task, job, i, n_partitions, work_dir) for i in all_splits
        ]
        _await(futures)
        futures = [
            pool.submit(core.run_reduce_task, job, p, all_splits, work_dir)
            for p in range(n_partitions)
        ]
        _await(futures)
    return core.collect_output(job, n_partitions, work_dir)


def _await(futures):
    errors = []
    for f in futures:
        try:
            f.result()
        except JobError as exc:
            errors.append(exc)
    if errors:
        raise errors[0]
