"""Datasets, sparse-text parsing, bag partitions, and bag-level CV splits.

Instances live in disjoint "bags"; supervision is the fraction of positive
labels per bag, never the labels themselves.  This module owns the containers
for that world plus the bookkeeping around them: parsing, attribute scaling,
random bag assignment, k-fold splits over bags, and JSON round-trips.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "ConfigError",
    "ParseError",
    "Dataset",
    "BagPartition",
    "FoldSplit",
    "parse_sparse_dataset",
    "scale_attributes",
    "compute_proportions",
    "generate_bags",
    "kfold_over_bags",
    "restrict_to_bags",
    "partition_to_json",
    "partition_from_json",
]


class ConfigError(ValueError):
    """Unusable run configuration (fold counts, grids, flag combinations)."""


class ParseError(ValueError):
    """Malformed dataset text; the message carries the 1-based line number."""


@dataclass(frozen=True)
class Dataset:
    """Dense feature matrix with optional +-1 instance labels.

    Labels are optional on purpose: training code receives label-free
    datasets, and only evaluation code ever sees a labeled one.
    """

    features: np.ndarray
    labels: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        feats = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        if feats.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {feats.shape}")
        object.__setattr__(self, "features", feats)
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=np.float64).ravel()
            if lab.shape[0] != feats.shape[0]:
                raise ValueError(
                    f"{lab.shape[0]} labels for {feats.shape[0]} instances"
                )
            if not np.all(np.isin(lab, (-1.0, 1.0))):
                bad = lab[~np.isin(lab, (-1.0, 1.0))][0]
                raise ValueError(f"labels must be -1 or +1, found {bad}")
            object.__setattr__(self, "labels", lab)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def without_labels(self) -> "Dataset":
        return Dataset(self.features, None, self.name)


@dataclass(frozen=True)
class BagPartition:
    """Disjoint, covering index bags plus the positive fraction of each bag."""

    bags: tuple
    proportions: np.ndarray
    n: int

    def __post_init__(self):
        bags = tuple(np.asarray(b, dtype=np.int64).ravel() for b in self.bags)
        if not bags:
            raise ValueError("a partition needs at least one bag")
        for k, b in enumerate(bags):
            if b.size == 0:
                raise ValueError(f"bag {k} is empty")
        merged = np.concatenate(bags)
        if merged.size != self.n or not np.array_equal(
            np.sort(merged), np.arange(self.n)
        ):
            raise ValueError("bags must disjointly cover 0..n-1")
        props = np.asarray(self.proportions, dtype=np.float64).ravel()
        if props.shape[0] != len(bags):
            raise ValueError(
                f"{props.shape[0]} proportions for {len(bags)} bags"
            )
        if np.any(props < 0.0) or np.any(props > 1.0):
            raise ValueError("proportions must lie in [0, 1]")
        object.__setattr__(self, "bags", bags)
        object.__setattr__(self, "proportions", props)

    @property
    def n_bags(self) -> int:
        return len(self.bags)

    def bag_sizes(self) -> np.ndarray:
        return np.array([b.size for b in self.bags], dtype=np.int64)


@dataclass(frozen=True)
class FoldSplit:
    """One cross-validation fold, expressed in bag ids (not instance rows)."""

    fold: int
    train_bags: np.ndarray
    test_bags: np.ndarray


def _lines_from(src) -> list:
    if isinstance(src, Path):
        return src.read_text().splitlines()
    if isinstance(src, str) and "\n" not in src:
        return Path(src).read_text().splitlines()
    # a str containing newlines is literal dataset text
    return src.splitlines()


def parse_sparse_dataset(src, label_map=None, name: str = "") -> Dataset:
    """Read `<label> <idx>:<val> ...` text into a dense Dataset.

    Feature indices are 1-based and must be strictly increasing within a
    line; `#` starts a comment; blank lines are skipped.  Raw labels map to
    +-1 by sign unless an explicit ``label_map`` dict is given.  Any
    malformed line raises :class:`ParseError` naming the line number.
    """
    rows = []
    raw_labels = []
    width = 0
    for lineno, raw in enumerate(_lines_from(src), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            raw_labels.append(float(parts[0]))
        except ValueError:
            raise ParseError(
                f"line {lineno}: label {parts[0]!r} is not numeric"
            ) from None
        prev = 0
        pairs = []
        for tok in parts[1:]:
            idx_s, _, val_s = tok.partition(":")
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise ParseError(
                    f"line {lineno}: malformed feature entry {tok!r}"
                ) from None
            if idx < 1:
                raise ParseError(
                    f"line {lineno}: feature index {idx} must be >= 1"
                )
            if idx <= prev:
                raise ParseError(
                    f"line {lineno}: feature indices must be strictly "
                    f"increasing ({idx} follows {prev})"
                )
            prev = idx
            pairs.append((idx, val))
        rows.append(pairs)
        width = max(width, prev)

    if not rows:
        raise ParseError("line 1: no instances found")

    feats = np.zeros((len(rows), width), dtype=np.float64)
    for r, pairs in enumerate(rows):
        for idx, val in pairs:
            feats[r, idx - 1] = val

    if label_map is not None:
        try:
            labels = np.array([label_map[v] for v in raw_labels], dtype=np.float64)
        except KeyError as exc:
            raise ParseError(f"label {exc.args[0]!r} missing from label_map") from None
    else:
        distinct = sorted(set(raw_labels))
        if len(distinct) > 2:
            raise ParseError(
                f"found {len(distinct)} distinct labels; pass label_map"
            )
        labels = np.where(np.asarray(raw_labels) > 0, 1.0, -1.0)
        if len(distinct) == 2 and len({v > 0 for v in distinct}) == 1:
            # two distinct raw values would collapse onto one side
            raise ParseError(
                f"labels {distinct} do not split by sign; pass label_map"
            )
    return Dataset(feats, labels, name=name)


def scale_attributes(d: Dataset) -> Dataset:
    """Affinely map every attribute to [-1, 1]; constant columns become 0."""
    if d.n < 1:
        raise ValueError("cannot scale an empty dataset")
    lo = d.features.min(axis=0)
    hi = d.features.max(axis=0)
    span = hi - lo
    flat = span == 0
    safe = np.where(flat, 1.0, span)
    scaled = -1.0 + 2.0 * (d.features - lo) / safe
    scaled[:, flat] = 0.0
    return Dataset(scaled, d.labels, d.name)


def compute_proportions(labels, bags) -> np.ndarray:
    """Fraction of +1 labels inside each bag."""
    lab = np.asarray(labels, dtype=np.float64)
    return np.array([np.mean(lab[b] > 0) for b in bags], dtype=np.float64)


def generate_bags(d: Dataset, bag_size: int, rng: np.random.Generator) -> BagPartition:
    """Randomly deal instances into bags of ``bag_size`` (last bag may be short).

    Requires instance labels: the partition records each bag's positive
    fraction, which is the only supervision downstream training gets.
    """
    if d.labels is None:
        raise ValueError("generate_bags needs a labeled dataset")
    if bag_size < 1:
        raise ConfigError(f"bag_size must be >= 1, got {bag_size}")
    perm = rng.permutation(d.n)
    size = min(bag_size, d.n)
    bags = tuple(perm[i : i + size] for i in range(0, d.n, size))
    props = compute_proportions(d.labels, bags)
    return BagPartition(bags, props, d.n)


def kfold_over_bags(part: BagPartition, k: int, rng: np.random.Generator) -> list:
    """Shuffle bags and deal them into k folds of near-equal bag counts."""
    if k < 2:
        raise ConfigError(f"need at least 2 folds, got {k}")
    if part.n_bags < k:
        raise ConfigError(f"{part.n_bags} bags cannot fill {k} folds")
    order = rng.permutation(part.n_bags)
    chunks = np.array_split(order, k)
    splits = []
    for i, test in enumerate(chunks):
        train = np.concatenate([c for j, c in enumerate(chunks) if j != i])
        splits.append(FoldSplit(i, np.sort(train), np.sort(test)))
    return splits


def restrict_to_bags(d: Dataset, part: BagPartition, bag_ids):
    """Slice out the instances of the chosen bags.

    Returns ``(subset, subpart, rows)`` where ``subpart`` re-indexes the
    chosen bags against the subset and ``rows`` maps subset rows back to
    original dataset rows.
    """
    ids = np.asarray(bag_ids, dtype=np.int64).ravel()
    rows = np.concatenate([part.bags[k] for k in ids])
    new_bags = []
    start = 0
    for k in ids:
        size = part.bags[k].size
        new_bags.append(np.arange(start, start + size))
        start += size
    sub = Dataset(
        d.features[rows],
        None if d.labels is None else d.labels[rows],
        d.name,
    )
    subpart = BagPartition(tuple(new_bags), part.proportions[ids], rows.size)
    return sub, subpart, rows


def partition_to_json(part: BagPartition) -> str:
    """Serialize a partition as ``{"bags": [[...]], "proportions": [...]}``."""
    payload = {
        "bags": [b.tolist() for b in part.bags],
        "proportions": part.proportions.tolist(),
    }
    return json.dumps(payload, sort_keys=True)


def partition_from_json(text: str) -> BagPartition:
    try:
        payload = json.loads(text)
        bags = tuple(np.asarray(b, dtype=np.int64) for b in payload["bags"])
        props = np.asarray(payload["proportions"], dtype=np.float64)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"bad partition JSON: {exc}") from None
    n = int(sum(b.size for b in bags))
    return BagPartition(bags, props, n)
