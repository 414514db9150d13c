"""Synthetic dataset generators, feature scaling, and imbalance resampling.

Presets:

- ``blobs2``: 2 features, 3 Gaussian blobs, 10000 samples, sigma 0.15
- ``blobs8``: 8 features, 5 Gaussian blobs, 10000 samples, sigma 0.25
- ``tetrominoes``: 4x4 grayscale tetromino images, 16 features, 5 classes,
  400 samples

Datasets persist as CSV (columns ``f0..f{m-1},label``) with a sidecar JSON
recording the generator parameters.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class GenerationError(RuntimeError):
    """Dataset generation could not satisfy its constraints."""


@dataclass
class Dataset:
    name: str
    features: np.ndarray  # (N, m)
    labels: np.ndarray  # (N,)
    n_classes: int

    def __post_init__(self):
        if len(self.features) != len(self.labels):
            raise ValueError("features and labels differ in length")
        if len(self.labels) and not (
            0 <= self.labels.min() and self.labels.max() < self.n_classes
        ):
            raise ValueError("labels out of range")

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)


# tetromino cell lists, (row, col) offsets of the foreground pixels
_TETROMINOES = {
    "I": ((0, 0), (0, 1), (0, 2), (0, 3)),
    "O": ((0, 0), (0, 1), (1, 0), (1, 1)),
    "T": ((0, 0), (0, 1), (0, 2), (1, 1)),
    "S": ((0, 1), (0, 2), (1, 0), (1, 1)),
    "L": ((0, 0), (1, 0), (2, 0), (2, 1)),
}
_GRID = 4


def tetromino_placements(shape: str) -> list[tuple[int, int]]:
    """All (row, col) translations keeping the shape inside the 4x4 grid."""
    cells = _TETROMINOES[shape]
    h = max(r for r, _ in cells) + 1
    w = max(c for _, c in cells) + 1
    return [
        (dr, dc)
        for dr in range(_GRID - h + 1)
        for dc in range(_GRID - w + 1)
    ]


def gen_blobs(
    n_features: int,
    n_classes: int,
    size: int,
    sigma: float,
    seed: int,
    name: str = "blobs",
) -> Dataset:
    """Gaussian blobs around uniform centroids in [-1, 1]^m.

    Centroids are resampled (at most 100 times) until every pair is at
    least 4*sigma apart; samples are assigned to classes round-robin.
    """
    if n_classes < 2:
        raise ValueError("need at least two classes")
    if size < n_classes:
        raise ValueError("need at least one sample per class")
    rng = np.random.default_rng(seed)
    centroids = None
    for _ in range(100):
        cand = rng.uniform(-1.0, 1.0, size=(n_classes, n_features))
        dists = np.linalg.norm(cand[:, None] - cand[None, :], axis=-1)
        np.fill_diagonal(dists, np.inf)
        if sigma == 0 or dists.min() >= 4 * sigma:
            centroids = cand
            break
    if centroids is None:
        raise GenerationError(
            f"could not place {n_classes} centroids at least {4 * sigma} apart "
            f"in [-1, 1]^{n_features} after 100 attempts"
        )
    labels = np.arange(size) % n_classes
    feats = centroids[labels] + rng.normal(0.0, sigma, size=(size, n_features))
    return Dataset(name, feats, labels.astype(np.int64), n_classes)


def gen_tetrominoes(size: int = 400, seed: int = 0) -> Dataset:
    """4x4 grayscale tetromino images: I, O, T, S, L at random translations.

    Foreground pixels are Uniform(0.7, 1.0), background Uniform(0.0, 0.2);
    images flatten row-major to 16 features. Samples are assigned to the
    five classes round-robin, so a size that is a multiple of 5 is balanced.
    """
    rng = np.random.default_rng(seed)
    shapes = list(_TETROMINOES)
    placements = {s: tetromino_placements(s) for s in shapes}
    feats = np.empty((size, _GRID * _GRID))
    labels = np.arange(size) % len(shapes)
    for i in range(size):
        shape = shapes[labels[i]]
        dr, dc = placements[shape][rng.integers(len(placements[shape]))]
        img = rng.uniform(0.0, 0.2, size=(_GRID, _GRID))
        for r, c in _TETROMINOES[shape]:
            img[r + dr, c + dc] = rng.uniform(0.7, 1.0)
        feats[i] = img.reshape(-1)
    return Dataset("tetrominoes", feats, labels.astype(np.int64), len(shapes))


_PRESETS = {
    "blobs2": dict(n_features=2, n_classes=3, size=10000, sigma=0.15),
    "blobs8": dict(n_features=8, n_classes=5, size=10000, sigma=0.25),
    "tetrominoes": dict(size=400),
}


def dataset_preset(name: str, seed: int, **overrides) -> Dataset:
    """Generate one of the named presets, with optional field overrides."""
    if name not in _PRESETS:
        raise ValueError(f"unknown dataset preset {name!r}; have {sorted(_PRESETS)}")
    params = dict(_PRESETS[name])
    params.update(overrides)
    if name == "tetrominoes":
        return gen_tetrominoes(seed=seed, **params)
    return gen_blobs(seed=seed, name=name, **params)


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def resample_imbalance(dataset: Dataset, ratio: float, total: int, seed: int) -> Dataset:
    """Under-sample all classes but class 0 to a minority/majority ratio.

    The majority size M solves M + (K-1)*round(ratio*M) ~= total; the
    realized total is within K of the request. Sampling is without
    replacement from a balanced input (round-robin generation can leave a
    one-sample remainder, which is tolerated).
    """
    if not 0 < ratio <= 1:
        raise ValueError("ratio must be in (0, 1]")
    counts = dataset.class_counts()
    if counts.max() - counts.min() > 1:
        raise ValueError("resample_imbalance expects a balanced dataset")
    k = dataset.n_classes
    base = total / (1.0 + (k - 1) * ratio)
    best = None
    for m in range(max(1, int(base) - k - 2), int(base) + k + 3):
        realized = m + (k - 1) * _round_half_up(ratio * m)
        err = abs(realized - total)
        if best is None or err < best[0]:
            best = (err, m)
    err, major = best
    if err > k:
        raise GenerationError(f"no majority size reaches total {total} within {k}")
    minor = _round_half_up(ratio * major)
    if major > counts[0] or any(minor > counts[c] for c in range(1, k)):
        raise GenerationError(
            f"requested sizes (major {major}, minor {minor}) exceed the "
            f"per-class availability {counts.tolist()}"
        )
    if minor < 1:
        raise GenerationError("minority classes would be empty")
    rng = np.random.default_rng(seed)
    keep = []
    for c in range(k):
        idx = np.flatnonzero(dataset.labels == c)
        take = major if c == 0 else minor
        keep.append(rng.choice(idx, size=take, replace=False))
    keep = np.concatenate(keep)
    keep.sort()
    return Dataset(
        f"{dataset.name}-imb{ratio:g}",
        dataset.features[keep],
        dataset.labels[keep],
        k,
    )


def subsample(dataset: Dataset, total: int, seed: int) -> Dataset:
    """Balanced subsample (ratio 1.0), used as the desk-scale size cap."""
    if total >= dataset.size:
        return dataset
    return resample_imbalance(dataset, 1.0, total, seed)


@dataclass(frozen=True)
class Scaler:
    lo: np.ndarray
    hi: np.ndarray

    def transform(self, features: np.ndarray) -> np.ndarray:
        span = self.hi - self.lo
        out = np.empty_like(features, dtype=np.float64)
        for j in range(features.shape[1]):
            if span[j] > 0:
                col = (features[:, j] - self.lo[j]) / span[j] * np.pi
            else:
                col = np.full(len(features), np.pi / 2)
            out[:, j] = np.clip(col, 0.0, np.pi)
        return out


def scale_features(train: Dataset, test: Dataset) -> tuple[Dataset, Dataset, Scaler]:
    """Min-max scale each column into [0, pi] using train statistics.

    Constant train columns map to pi/2; test values outside the train
    range clamp to the boundary.
    """
    scaler = Scaler(train.features.min(axis=0), train.features.max(axis=0))
    tr = Dataset(train.name, scaler.transform(train.features), train.labels, train.n_classes)
    te = Dataset(test.name, scaler.transform(test.features), test.labels, test.n_classes)
    return tr, te, scaler


def save_dataset(dataset: Dataset, path: str | Path, meta: dict | None = None) -> None:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"f{j}" for j in range(dataset.n_features)] + ["label"])
        for row, label in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])
    sidecar = {
        "name": dataset.name,
        "n_classes": dataset.n_classes,
        "size": dataset.size,
        "n_features": dataset.n_features,
    }
    if meta:
        sidecar.update(meta)
    with open(path.with_suffix(path.suffix + ".json"), "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_dataset(path: str | Path) -> Dataset:
    path = Path(path)
    with open(path.with_suffix(path.suffix + ".json")) as fh:
        meta = json.load(fh)
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    feats = rows[:, :-1]
    labels = rows[:, -1].astype(np.int64)
    return Dataset(meta["name"], feats, labels, meta["n_classes"])
