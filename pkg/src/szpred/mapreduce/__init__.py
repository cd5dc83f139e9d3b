"""Miniature MapReduce runtime: job model, three executors, production jobs."""

from szpred.mapreduce.core import Job, TaskResult, TaskSpec, output_path
from szpred.mapreduce.distributed import (
    ClusterConfig,
    Master,
    run_distributed,
    run_worker,
    spawn_local_workers,
)
from szpred.mapreduce.executors import run_serial, run_threaded
from szpred.mapreduce import jobs

__all__ = [
    "Job",
    "TaskSpec",
    "TaskResult",
    "ClusterConfig",
    "Master",
    "jobs",
    "output_path",
    "run_serial",
    "run_threaded",
    "run_distributed",
    "run_worker",
    "spawn_local_workers",
]
