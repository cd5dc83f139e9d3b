import glob
import hashlib
import os

import numpy as np
import pytest

from szpred.features import FeatureTable
from szpred.mapreduce import core


def two_gaussian_table(n=200, p=6, sep=2.0, seed=0):
    """The standard synthetic two-class dataset: unit Gaussians split on
    feature 0 at +/- sep."""
    rng = np.random.default_rng(seed)
    half = n // 2
    a = rng.normal(0, 1, size=(half, p))
    a[:, 0] -= sep
    b = rng.normal(0, 1, size=(n - half, p))
    b[:, 0] += sep
    return FeatureTable(
        values=np.concatenate([a, b]),
        labels=("interictal",) * half + ("preictal",) * (n - half),
        names=tuple(f"f{i}" for i in range(p)),
    )


def job_fingerprint(work_dir, job):
    """sha256 over the final output file plus every artifact it references."""
    h = hashlib.sha256()
    with open(core.output_path(job, work_dir), "rb") as fh:
        h.update(fh.read())
    for path in sorted(glob.glob(os.path.join(core.artifact_dir(work_dir, job.job_id), "*"))):
        h.update(os.path.basename(path).encode())
        with open(path, "rb") as fh:
            h.update(fh.read())
    return h.hexdigest()


@pytest.fixture
def work_dir(tmp_path):
    d = tmp_path / "work"
    (d / "splits").mkdir(parents=True)
    return str(d)
