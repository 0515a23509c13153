"""Shared types: labeled datasets, seeded random streams and model files."""

import csv
import json
import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FORMAT_VERSION = "simtreerank/1"
MODEL_KINDS = ("tree", "forest", "synthetic-ground-truth")


class DatasetError(ValueError):
    pass


class ModelFormatError(ValueError):
    pass


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Labeled instances. ``y`` holds dense class ids in ``1..K``."""

    X: np.ndarray
    y: np.ndarray
    classes: tuple = ()

    def __post_init__(self):
        X = _frozen(self.X, float)
        y = _frozen(self.y, np.int64)
        if X.ndim != 2 or X.shape[1] < 1:
            raise DatasetError("features must be a 2-d array with q >= 1 columns")
        if y.shape != (X.shape[0],):
            raise DatasetError("one label per instance is required")
        if not np.all(np.isfinite(X)):
            raise DatasetError("non-finite feature value")
        if y.size and (y.min() < 1):
            raise DatasetError("labels must be dense ids in 1..K")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if not self.classes:
            object.__setattr__(self, "classes", tuple(range(1, int(y.max(initial=0)) + 1)))

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def q(self):
        return self.X.shape[1]

    @property
    def K(self):
        return len(self.classes)


def load_dataset(path, label_column="label"):
    """Read a CSV of numeric features plus one label column.

    Labels may be any strings; they are re-indexed densely to ``1..K`` in
    order of first appearance.
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"{path}: no such file")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        if label_column not in header:
            raise DatasetError(f"{path}: missing label column {label_column!r}")
        li = header.index(label_column)
        rows, labels = [], []
        ids = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DatasetError(
                    f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}")
            feats = []
            for j, cell in enumerate(row):
                if j == li:
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    raise DatasetError(
                        f"{path}: row {lineno}: non-numeric value {cell!r} "
                        f"in column {header[j]!r}") from None
                if not math.isfinite(v):
                    raise DatasetError(f"{path}: row {lineno}: non-finite value in {header[j]!r}")
                feats.append(v)
            lab = row[li].strip()
            labels.append(ids.setdefault(lab, len(ids) + 1))
            rows.append(feats)
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    if len(header) < 2:
        raise DatasetError(f"{path}: no feature columns")
    return Dataset(np.array(rows, dtype=float), np.array(labels), tuple(ids))


# ---------------------------------------------------------------- randomness

def _tag(purpose):
    return zlib.crc32(purpose.encode("utf-8"))


def derive_rng(seed, purpose, *index):
    """Counter-based Philox stream keyed on (seed, purpose, index...).

    Streams are a pure function of their key, so work items may run in any
    order or process and still draw the same numbers.
    """
    if seed < 0 or seed >= 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    ss = np.random.SeedSequence(int(seed), spawn_key=(_tag(purpose), *map(int, index)))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed, purpose, *index):
    """A 64-bit child seed, for handing to another seeded operation."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(_tag(purpose), *map(int, index)))
    return int(ss.generate_state(1, np.uint64)[0])


# ------------------------------------------------------------ model files

@dataclass(frozen=True)
class ModelArtifact:
    kind: str
    transform: str
    payload: dict
    metadata: dict = field(default_factory=dict)
    version: str = FORMAT_VERSION

    def to_dict(self):
        return {"version": self.version, "kind": self.kind, "transform": self.transform,
                **self.payload, "metadata": self.metadata}


def save_model(model, path):
    """Write a tree, forest or synthetic ground truth as a JSON model file."""
    art = as_artifact(model)
    text = json.dumps(art.to_dict(), indent=1, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")
    return path


def load_model(path):
    """Read a model file back into the matching in-memory object."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: truncated or malformed model file ({exc})") from None
    if not isinstance(doc, dict) or "version" not in doc:
        raise ModelFormatError(f"{path}: missing version field")
    if doc["version"] != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported model version {doc['version']!r}, expected {FORMAT_VERSION!r}")
    kind = doc.get("kind")
    try:
        if kind == "tree":
            from .treerank import SimilarityTree
            return SimilarityTree.from_dict(doc)
        if kind == "forest":
            from .forest import SimilarityForest
            return SimilarityForest.from_dict(doc)
        if kind == "synthetic-ground-truth":
            from .synth import SyntheticModel
            return SyntheticModel.from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: malformed {kind} payload ({exc})") from None
    raise ModelFormatError(f"{path}: unknown model kind {kind!r}")


def as_artifact(model):
    if isinstance(model, ModelArtifact):
        return model
    doc = model.to_dict()
    kind = doc.pop("kind")
    transform = doc.pop("transform")
    metadata = doc.pop("metadata", {})
    doc.pop("version", None)
    return ModelArtifact(kind, transform, doc, metadata)
