"""Feature vectors: the largest coefficients per decomposition level.

Per level the H, V and D planes are pooled (the deepest level also
pools the final approximation, which would otherwise be discarded) and
the k coefficients of largest absolute value are kept, signs intact,
sorted by descending magnitude.  Ties break by scan order: row-major
within H, then V, then D, then A.  Three levels with the default
k = 100 give the 300-value classifier input.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .wavelet import DetailBands, MultilevelDecomposition

DEFAULT_K = 100


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray  # length 3k, level 1 block first
    k: int
    filter_name: str
    scale: float = 1.0  # divisor already applied; 1.0 means raw

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.shape[0] != 3 * self.k:
            raise ValueError(
                f"expected {3 * self.k} values (3 levels of k={self.k}), got {values.shape}"
            )
        mags = np.abs(values).reshape(3, self.k)
        if np.any(np.diff(mags, axis=1) > 0):
            raise ValueError("level blocks must be sorted by descending magnitude")

    def __len__(self) -> int:
        return self.values.shape[0]


def top_k_level(bands: DetailBands, k: int, approximation: np.ndarray | None = None) -> np.ndarray:
    """The k pooled coefficients of largest |value|, signed, magnitude-sorted.

    ``approximation`` joins the pool only at the deepest level.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    planes = [bands.h, bands.v, bands.d]
    if approximation is not None:
        planes.append(approximation)
    pool = np.concatenate([np.asarray(p, dtype=np.float64).ravel() for p in planes])
    if pool.shape[0] < k:
        raise ValueError(f"coefficient pool has {pool.shape[0]} entries, need k={k}")
    # stable sort keeps scan order among equal magnitudes
    order = np.argsort(-np.abs(pool), kind="stable")
    return pool[order[:k]]


def extract_feature_vector(decomp: MultilevelDecomposition, k: int = DEFAULT_K) -> FeatureVector:
    """Concatenate the per-level top-k blocks of a 3-level decomposition."""
    if decomp.level_count != 3 or len(decomp.levels) != 3:
        raise ValueError(f"need exactly 3 levels, got {decomp.level_count}")
    blocks = [
        top_k_level(decomp.levels[0], k),
        top_k_level(decomp.levels[1], k),
        top_k_level(decomp.levels[2], k, approximation=decomp.final_approximation),
    ]
    return FeatureVector(values=np.concatenate(blocks), k=k, filter_name=decomp.filter_name)


def fit_scale(training_vectors) -> float:
    """Largest absolute entry over all training vectors.

    Dividing by it maps the training features into [-1, 1], keeping the
    sigmoid units out of saturation.
    """
    best = 0.0
    count = 0
    for vec in training_vectors:
        count += 1
        peak = float(np.abs(vec.values).max())
        if peak > best:
            best = peak
    if count == 0:
        raise ValueError("no training vectors given")
    if best == 0.0:
        raise ValueError("all training features are zero; scale undefined")
    return best


def normalize(v: FeatureVector, scale: float) -> FeatureVector:
    """Divide every entry by ``scale`` (scales compose multiplicatively)."""
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    return replace(v, values=v.values / scale, scale=v.scale * scale)


def write_features_csv(rows, path) -> None:
    """Write (roi_id, FeatureVector) pairs as CSV with an f000.. header."""
    rows = list(rows)
    if not rows:
        raise ValueError("nothing to write")
    k3 = len(rows[0][1])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["roi"] + [f"f{i:03d}" for i in range(k3)])
        for roi_id, vec in rows:
            if len(vec) != k3:
                raise ValueError(f"{roi_id}: vector length {len(vec)} != {k3}")
            writer.writerow([roi_id] + [format(x, ".17g") for x in vec.values])


def read_features_csv(path):
    """Inverse of write_features_csv; returns a list of (roi_id, values array)."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "roi":
            raise ValueError(f"{path}: not a feature CSV (missing header)")
        for row in reader:
            out.append((row[0], np.array([float(x) for x in row[1:]])))
    return out
