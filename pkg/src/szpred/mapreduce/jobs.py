"""The two production jobs and the word-count toy.

signal-features: one map task per SegmentMatrix file (MSPCA denoise, then
per-segment feature vectors), keyed by (phase, chunk_index); reduce passes
row blocks through, so collected records concatenate into a FeatureTable.

rotforest-train: one map task per tree-index range; members are serialized
with the model text format and keyed by tree index, so the assembled model
is byte-identical to single-process training (per-tree RNG streams depend
only on (seed, index)).
"""

import json
import math
import os

import numpy as np

from szpred import features, rotforest, wavelet
from szpred.errors import ParameterError
from szpred.features import PHASE_TO_LABEL, FeatureTable
from szpred.mapreduce import core
from szpred.mapreduce.core import Job, register_map, register_reduce
from szpred.signal import SegmentMatrix

# -- work-directory file formats (npz for matrices, json for descriptors) --


def save_chunk(chunk, path):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    np.savez(
        path,
        values=chunk.values,
        meta=json.dumps(
            {
                "segment_length": chunk.segment_length,
                "segments_per_chunk": chunk.segments_per_chunk,
                "channel_count": chunk.channel_count,
                "chunk_index": chunk.chunk_index,
                "source_phase": chunk.source_phase,
            }
        ),
    )


def load_chunk(path):
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        return SegmentMatrix(values=data["values"], **meta)


def save_table(table, path):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    np.savez(
        path,
        values=table.values,
        labels=np.array(table.labels, dtype="U16"),
        names=np.array(table.names, dtype="U64"),
    )


def load_table(path):
    with np.load(path, allow_pickle=False) as data:
        return FeatureTable(
            values=data["values"],
            labels=tuple(str(l) for l in data["labels"]),
            names=tuple(str(n) for n in data["names"]),
        )


# -- word count --


@register_map("wordcount_map")
def wordcount_map(split_path, params):
    with open(split_path, "r", encoding="utf-8") as fh:
        for word in fh.read().split():
            yield word, 1


@register_reduce("wordcount_reduce")
def wordcount_reduce(key, values, params):
    yield sum(values)


# -- signal-features job --


@register_map("signal_features_map")
def signal_features_map(split_path, params):
    """One chunk file -> denoised per-segment feature rows.

    Row matrices move as .npy artifacts in the work directory (named by
    key, so re-executed attempts overwrite identical bytes); the record
    value carries the reference.
    """
    chunk = load_chunk(split_path)
    filt = wavelet.filter_bank(params.get("filter", "db4"))
    level = int(params.get("level", 4))
    rows = features.chunk_feature_rows(chunk, filt, level)
    work_dir, job_id = params["work_dir"], params["job_id"]
    path = os.path.join(
        core.artifact_dir(work_dir, job_id),
        f"rows-{chunk.source_phase}-{chunk.chunk_index:06d}.npy",
    )
    core.atomic_write_array(path, rows)
    yield (
        [chunk.source_phase, chunk.chunk_index],
        {
            "rows_path": os.path.relpath(path, work_dir),
            "n_rows": int(rows.shape[0]),
            "label": PHASE_TO_LABEL[chunk.source_phase],
            "channels": chunk.channel_count,
        },
    )


@register_reduce("signal_features_reduce")
def signal_features_reduce(key, values, params):
    """Concatenate the key's row blocks into one FeatureTable shard."""
    work_dir, job_id = params["work_dir"], params["job_id"]
    blocks = [np.load(os.path.join(work_dir, v["rows_path"])) for v in values]
    shard = np.concatenate(blocks, axis=0)
    path = os.path.join(
        core.artifact_dir(work_dir, job_id), f"shard-{key[0]}-{key[1]:06d}.npy"
    )
    core.atomic_write_array(path, shard)
    yield {
        "shard_path": os.path.relpath(path, work_dir),
        "n_rows": int(shard.shape[0]),
        "label": values[0]["label"],
        "channels": values[0]["channels"],
    }


def signal_job(job_id, chunk_paths, work_dir, filter_name="db4", level=4):
    return Job(
        job_id=job_id,
        map_fn_id="signal_features_map",
        reduce_fn_id="signal_features_reduce",
        input_splits=tuple(chunk_paths),
        params={"filter": filter_name, "level": level, "work_dir": work_dir, "job_id": job_id},
    )


def load_shard(work_dir, value):
    return np.load(os.path.join(work_dir, value["shard_path"]))


def table_from_records(records, work_dir, level=4):
    """Assemble the FeatureTable from collected signal-job records
    (already in ascending (phase, chunk_index) order)."""
    blocks, labels = [], []
    channels = None
    for _key, value in records:
        channels = value["channels"]
        rows = load_shard(work_dir, value)
        blocks.append(rows)
        labels.extend([value["label"]] * rows.shape[0])
    if not blocks:
        return FeatureTable(values=np.empty((0, 0)), labels=(), names=())
    return FeatureTable(
        values=np.concatenate(blocks, axis=0),
        labels=tuple(labels),
        names=features.feature_names(channels, level),
    )


# -- ensemble-training job --


@register_map("rotforest_train_map")
def rotforest_train_map(split_path, params):
    with open(split_path, "r", encoding="utf-8") as fh:
        span = json.load(fh)
    table = load_table(span["table_path"])
    config = rotforest_config_from_dict(params["config"])
    for index in range(span["start"], span["end"]):
        rotation, tree = rotforest.train_member(table, config, index)
        yield index, rotforest.serialize_member(rotation, tree)


@register_reduce("rotforest_member_reduce")
def rotforest_member_reduce(key, values, params):
    if len(values) != 1:
        raise ParameterError(f"tree index {key} produced {len(values)} members")
    yield values[0]


def rotforest_config_to_dict(config):
    return {
        "ensemble_size": config.ensemble_size,
        "features_per_subset": config.features_per_subset,
        "pca_sample_fraction": config.pca_sample_fraction,
        "max_depth": config.tree_params.max_depth,
        "min_leaf": config.tree_params.min_leaf,
        "seed": config.seed,
    }


def rotforest_config_from_dict(d):
    return rotforest.RotationForestConfig(
        ensemble_size=d["ensemble_size"],
        features_per_subset=d["features_per_subset"],
        pca_sample_fraction=d["pca_sample_fraction"],
        tree_params=rotforest.TreeParams(max_depth=d["max_depth"], min_leaf=d["min_leaf"]),
        seed=d["seed"],
    )


def ensemble_job(job_id, work_dir, table_path, config, n_map_tasks=2):
    """Write tree-range split files and build the training job."""
    n_map_tasks = max(1, min(n_map_tasks, config.ensemble_size))
    per_task = math.ceil(config.ensemble_size / n_map_tasks)
    splits = []
    for t in range(n_map_tasks):
        start, end = t * per_task, min((t + 1) * per_task, config.ensemble_size)
        if start >= end:
            break
        path = os.path.join(work_dir, "splits", f"{job_id}-trees-{t:03d}.json")
        os.makedirs(os.path.dirname(path), exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"table_path": table_path, "start": start, "end": end}, fh)
        splits.append(path)
    return Job(
        job_id=job_id,
        map_fn_id="rotforest_train_map",
        reduce_fn_id="rotforest_member_reduce",
        input_splits=tuple(splits),
        params={"config": rotforest_config_to_dict(config)},
    )


def model_from_records(records, feature_names, config):
    """Assemble a RotationForestModel from collected (index, member) records."""
    members = []
    for expected, (index, text) in enumerate(records):
        if index != expected:
            raise ParameterError(f"missing tree index {expected} (found {index})")
        members.append(rotforest.parse_member(text, len(feature_names)))
    if len(members) != config.ensemble_size:
        raise ParameterError(
            f"expected {config.ensemble_size} members, assembled {len(members)}"
        )
    return rotforest.RotationForestModel(
        members=tuple(members), feature_names=tuple(feature_names), config=config
    )


def register_jobs():
    """The registry bindings (established at import; returned for inspection)."""
    return {
        "map": ["wordcount_map", "signal_features_map", "rotforest_train_map"],
        "reduce": ["wordcount_reduce", "signal_features_reduce", "rotforest_member_reduce"],
    }
