"""Rotation Forest: decision trees trained on per-tree PCA rotations.

Each ensemble member gets its own rotation matrix, assembled from PCA
loadings fitted on random feature subsets over bootstrapped class-restricted
samples. All principal components are kept, so every rotation is a pure
orthonormal change of basis, and each tree still trains on the full rotated
table. Per-member RNG streams are derived from (seed, member index), which
makes training a pure function of (table, config) no matter how members are
scheduled across threads, processes, or machines.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from szpred import _kernels, mspca
from szpred.errors import (
    ModelFormatError,
    ParameterError,
    ShapeError,
    TrainingError,
)
from szpred.features import LABELS, FeatureTable

FORMAT_VERSION = 1
_MAGIC = "szpred-rotforest"


@dataclass(frozen=True)
class TreeParams:
    max_depth: int | None = None
    min_leaf: int = 2

    def __post_init__(self):
        if self.min_leaf < 1:
            raise ParameterError(f"min_leaf must be >= 1, got {self.min_leaf}")
        if self.max_depth is not None and self.max_depth < 0:
            raise ParameterError(f"max_depth must be >= 0, got {self.max_depth}")


@dataclass(frozen=True)
class RotationForestConfig:
    ensemble_size: int = 10
    features_per_subset: int = 3
    pca_sample_fraction: float = 0.75
    tree_params: TreeParams = field(default_factory=TreeParams)
    seed: int = 0

    def __post_init__(self):
        if self.ensemble_size < 1:
            raise ParameterError(f"ensemble_size must be >= 1, got {self.ensemble_size}")
        if self.features_per_subset < 1:
            raise ParameterError(
                f"features_per_subset must be >= 1, got {self.features_per_subset}"
            )
        if not 0 < self.pca_sample_fraction <= 1:
            raise ParameterError(
                f"pca_sample_fraction must be in (0, 1], got {self.pca_sample_fraction}"
            )
        if self.seed < 0:
            raise ParameterError(f"seed must be >= 0, got {self.seed}")


@dataclass(frozen=True)
class TreeNode:
    """Internal node (feature/threshold/children) or leaf (probs over LABELS)."""

    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    probs: np.ndarray | None = None

    @property
    def is_leaf(self):
        return self.probs is not None


@dataclass(frozen=True)
class DecisionTree:
    root: TreeNode
    n_features: int

    def leaf_probs(self, x):
        node = self.root
        while not node.is_leaf:
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node.probs


@dataclass(frozen=True)
class RotationForestModel:
    members: tuple  # (rotation ndarray (p, p), DecisionTree) pairs
    feature_names: tuple
    config: RotationForestConfig
    version: int = FORMAT_VERSION

    @property
    def n_features(self):
        return len(self.feature_names)


def _member_rng(seed, tree_index):
    return np.random.default_rng(np.random.SeedSequence([seed, tree_index]))


def build_rotation(table, config, tree_index, rng=None):
    """Rotation matrix for one member: block-diagonal per-subset PCA
    loadings, rows indexed by original feature order."""
    if table.n_features < 1 or table.n_rows < 2:
        raise TrainingError("need >= 2 rows and >= 1 feature to build a rotation")
    if rng is None:
        rng = _member_rng(config.seed, tree_index)
    p = table.n_features
    m = config.features_per_subset
    perm = rng.permutation(p)
    n_subsets = math.ceil(p / m)
    y = table.y()
    rotation = np.zeros((p, p))
    col = 0
    for k in range(n_subsets):
        subset = perm[k * m : (k + 1) * m]
        size = len(subset)
        block = _subset_loadings(table.values, y, subset, config, rng)
        rotation[np.ix_(subset, range(col, col + size))] = block
        col += size
    return rotation


def _subset_loadings(values, y, subset, config, rng):
    """All-components PCA loadings for one feature subset, fitted on a
    bootstrap of a random non-empty class subset; identity on degeneracy."""
    size = len(subset)
    n_classes = len(LABELS)
    class_mask = int(rng.integers(1, 1 << n_classes))
    rows = np.flatnonzero([(class_mask >> int(c)) & 1 for c in y])
    if len(rows) == 0:
        return np.eye(size)
    n_draw = max(2, int(round(config.pca_sample_fraction * len(rows))))
    picks = rows[rng.integers(0, len(rows), size=n_draw)]
    sample = values[np.ix_(picks, subset)]
    if np.ptp(sample, axis=0).max() <= 0.0:
        return np.eye(size)  # zero variance: PCA directions undefined
    return mspca.fit_pca(sample).loadings


def tree_train(values, labels, params=None):
    """Greedy CART induction with Gini impurity.

    Thresholds are midpoints of consecutive distinct sorted values; ties
    resolve to the lowest feature index, then the lowest threshold. A node
    becomes a leaf when pure, at max_depth, or when no candidate split
    leaves min_leaf rows on both sides.
    """
    if params is None:
        params = TreeParams()
    values = np.ascontiguousarray(values, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    if values.ndim != 2 or values.shape[0] != len(labels) or len(labels) < 1:
        raise ShapeError(f"bad training data: values {values.shape}, labels {len(labels)}")
    root = _grow(values, labels, params, depth=0)
    return DecisionTree(root=root, n_features=values.shape[1])


def _leaf(labels):
    pos = float(np.mean(labels))
    return TreeNode(probs=np.array([1.0 - pos, pos]))


def _grow(values, labels, params, depth):
    n = len(labels)
    if n < 2 * params.min_leaf or labels.min() == labels.max():
        return _leaf(labels)
    if params.max_depth is not None and depth >= params.max_depth:
        return _leaf(labels)
    feature, threshold, _gain = _kernels.best_split(values, labels, params.min_leaf)
    if feature < 0:
        return _leaf(labels)
    mask = values[:, feature] <= threshold
    return TreeNode(
        feature=int(feature),
        threshold=float(threshold),
        left=_grow(values[mask], labels[mask], params, depth + 1),
        right=_grow(values[~mask], labels[~mask], params, depth + 1),
    )


def _check_table(table):
    if table.n_rows < 2:
        raise TrainingError(f"need >= 2 rows, got {table.n_rows}")
    present = set(table.labels)
    if len(present & set(LABELS)) < 2:
        raise TrainingError(f"training table must contain both classes, got {sorted(present)}")


def train_member(table, config, tree_index):
    """One (rotation, tree) pair; pure function of (table, config, index)."""
    rng = _member_rng(config.seed, tree_index)
    rotation = build_rotation(table, config, tree_index, rng=rng)
    tree = tree_train(table.values @ rotation, table.y(), config.tree_params)
    return rotation, tree


def train(table, config=None):
    """Train the full ensemble."""
    if config is None:
        config = RotationForestConfig()
    _check_table(table)
    members = tuple(train_member(table, config, i) for i in range(config.ensemble_size))
    return RotationForestModel(members=members, feature_names=table.names, config=config)


def predict(model, values):
    """Classify one feature vector -> (label, confidence).

    Averages the member leaf distributions; ties go to interictal (the
    non-alarming class); confidence is the averaged probability of the
    chosen class.
    """
    x = np.asarray(values, dtype=np.float64)
    if x.shape != (model.n_features,):
        raise ShapeError(f"expected vector of {model.n_features} features, got shape {x.shape}")
    avg = np.zeros(len(LABELS))
    for rotation, tree in model.members:
        avg += tree.leaf_probs(x @ rotation)
    avg /= len(model.members)
    label = LABELS[1] if avg[1] > avg[0] else LABELS[0]
    return label, float(avg[LABELS.index(label)])


def predict_rows(model, values):
    """Vector of predicted labels (uint8) for an (n, p) matrix."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != model.n_features:
        raise ShapeError(f"expected (n, {model.n_features}) matrix, got {values.shape}")
    avg = np.zeros((values.shape[0], len(LABELS)))
    for rotation, tree in model.members:
        rotated = values @ rotation
        for i in range(values.shape[0]):
            avg[i] += tree.leaf_probs(rotated[i])
    return (avg[:, 1] > avg[:, 0]).astype(np.uint8)


def stratified_folds(labels, folds, seed):
    """Deterministic stratified fold ids (per-class shuffle, round-robin)."""
    y = np.fromiter((LABELS.index(l) for l in labels), dtype=np.int64, count=len(labels))
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5F01D]))
    fold_of = np.empty(len(y), dtype=np.int64)
    cursor = 0
    for cls in range(len(LABELS)):
        idx = np.flatnonzero(y == cls)
        rng.shuffle(idx)
        for j, row in enumerate(idx):
            fold_of[row] = (cursor + j) % folds
        cursor += len(idx)
    return fold_of


def cross_validate(table, config=None, folds=10):
    """Stratified k-fold accuracies and their mean."""
    if config is None:
        config = RotationForestConfig()
    if table.n_rows < folds:
        raise ParameterError(f"{folds} folds need >= {folds} rows, got {table.n_rows}")
    if folds < 2:
        raise ParameterError(f"folds must be >= 2, got {folds}")
    _check_table(table)
    fold_of = stratified_folds(table.labels, folds, config.seed)
    y = table.y()
    accuracies = []
    for k in range(folds):
        held = fold_of == k
        sub = FeatureTable(
            values=table.values[~held],
            labels=tuple(np.asarray(table.labels, dtype=object)[~held]),
            names=table.names,
        )
        model = train(sub, config)
        pred = predict_rows(model, table.values[held])
        accuracies.append(float(np.mean(pred == y[held])))
    return accuracies, float(np.mean(accuracies))


# --- model file format (documented in README) ---


def _fmt(x):
    return repr(float(x))


def serialize_member(rotation, tree):
    """Member section of the model format; reused by the training job."""
    p = rotation.shape[0]
    lines = [f"rotation {p}"]
    for row in rotation:
        lines.append(" ".join(_fmt(v) for v in row))
    nodes = []
    _preorder(tree.root, nodes)
    lines.append(f"tree {len(nodes)}")
    lines.extend(nodes)
    return "\n".join(lines)


def _preorder(node, out):
    if node.is_leaf:
        out.append(f"leaf {_fmt(node.probs[0])} {_fmt(node.probs[1])}")
    else:
        out.append(f"split {node.feature} {_fmt(node.threshold)}")
        _preorder(node.left, out)
        _preorder(node.right, out)


def serialize_model(model):
    cfg = model.config
    depth = "none" if cfg.tree_params.max_depth is None else str(cfg.tree_params.max_depth)
    lines = [
        f"{_MAGIC} v{model.version}",
        f"config ensemble_size={cfg.ensemble_size} features_per_subset={cfg.features_per_subset}"
        f" pca_sample_fraction={_fmt(cfg.pca_sample_fraction)} max_depth={depth}"
        f" min_leaf={cfg.tree_params.min_leaf} seed={cfg.seed}",
        f"features {model.n_features}",
        " ".join(model.feature_names),
        f"members {len(model.members)}",
    ]
    for i, (rotation, tree) in enumerate(model.members):
        lines.append(f"member {i}")
        lines.append(serialize_member(rotation, tree))
    lines.append("end")
    return "\n".join(lines) + "\n"


def save_model(model, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_model(model))


class _Reader:
    def __init__(self, text):
        self.lines = text.split("\n")
        self.pos = 0

    def next(self, expect=None):
        if self.pos >= len(self.lines):
            raise ModelFormatError("unexpected end of file", line=self.pos)
        line = self.lines[self.pos]
        self.pos += 1
        if expect is not None and not line.startswith(expect):
            raise ModelFormatError(f"expected {expect!r}, found {line!r}", line=self.pos)
        return line

    def fail(self, message):
        raise ModelFormatError(message, line=self.pos)


def deserialize_model(text):
    r = _Reader(text)
    head = r.next(_MAGIC).split()
    if len(head) != 2 or not head[1].startswith("v"):
        r.fail(f"bad header {head!r}")
    version = head[1][1:]
    if version != str(FORMAT_VERSION):
        r.fail(f"unsupported format version {version!r} (supported: {FORMAT_VERSION})")
    try:
        cfg_fields = dict(part.split("=", 1) for part in r.next("config ").split()[1:])
        depth = cfg_fields["max_depth"]
        config = RotationForestConfig(
            ensemble_size=int(cfg_fields["ensemble_size"]),
            features_per_subset=int(cfg_fields["features_per_subset"]),
            pca_sample_fraction=float(cfg_fields["pca_sample_fraction"]),
            tree_params=TreeParams(
                max_depth=None if depth == "none" else int(depth),
                min_leaf=int(cfg_fields["min_leaf"]),
            ),
            seed=int(cfg_fields["seed"]),
        )
        p = int(r.next("features ").split()[1])
        names = tuple(r.next().split())
        if len(names) != p:
            r.fail(f"expected {p} feature names, found {len(names)}")
        n_members = int(r.next("members ").split()[1])
        members = []
        for i in range(n_members):
            idx = int(r.next("member ").split()[1])
            if idx != i:
                r.fail(f"member index {idx}, expected {i}")
            members.append(_read_member(r, p))
        r.next("end")
    except (ValueError, IndexError, KeyError) as exc:
        raise ModelFormatError(f"malformed field: {exc}", line=r.pos) from None
    return RotationForestModel(members=tuple(members), feature_names=names, config=config)


def _read_member(r, p):
    size = int(r.next("rotation ").split()[1])
    if size != p:
        r.fail(f"rotation size {size} != feature count {p}")
    rows = []
    for _ in range(p):
        row = [float(v) for v in r.next().split()]
        if len(row) != p:
            r.fail(f"rotation row of {len(row)} entries, expected {p}")
        rows.append(row)
    n_nodes = int(r.next("tree ").split()[1])
    node_lines = [r.next() for _ in range(n_nodes)]
    root, consumed = _read_node(node_lines, 0, r)
    if consumed != n_nodes:
        r.fail(f"tree declared {n_nodes} nodes, used {consumed}")
    return np.array(rows), DecisionTree(root=root, n_features=p)


def _read_node(lines, at, r):
    if at >= len(lines):
        r.fail("tree truncated")
    parts = lines[at].split()
    if parts[0] == "leaf":
        probs = np.array([float(parts[1]), float(parts[2])])
        return TreeNode(probs=probs), at + 1
    if parts[0] == "split":
        left, after_left = _read_node(lines, at + 1, r)
        right, after_right = _read_node(lines, after_left, r)
        return (
            TreeNode(feature=int(parts[1]), threshold=float(parts[2]), left=left, right=right),
            after_right,
        )
    r.fail(f"unknown node kind {parts[0]!r}")


def parse_member(text, p):
    """Parse one member section produced by :func:`serialize_member`."""
    r = _Reader(text)
    try:
        return _read_member(r, p)
    except (ValueError, IndexError) as exc:
        raise ModelFormatError(f"malformed member: {exc}", line=r.pos) from None


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        return deserialize_model(fh.read())
