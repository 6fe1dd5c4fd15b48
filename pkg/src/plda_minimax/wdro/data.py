"""Datasets for the WDRO problems: synthesis, LIBSVM ingestion and a CSV cache."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from ..errors import DatasetFormatError, ParameterError
from ..types import Matrix, Vector

LOGGER = logging.getLogger(__name__)

TargetMode = Literal["planted", "independent"]

TRAIN_BAND = 1.2
TEST_BAND = 1.0


@dataclass(frozen=True, eq=False)
class RegressionDataset:
    """``N x d`` features, ``N`` targets and where they came from."""

    features: Matrix
    targets: Vector
    metadata: dict[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.features.ndim != 2 or self.targets.ndim != 1:
            raise ParameterError("features must be a matrix and targets a vector")
        if self.features.shape[0] != self.targets.shape[0]:
            raise ParameterError("features and targets disagree on the sample count")
        if self.features.shape[0] < 1:
            raise ParameterError("a dataset needs at least one sample")
        if not (np.all(np.isfinite(self.features)) and np.all(np.isfinite(self.targets))):
            raise ParameterError("dataset entries must be finite")

    @property
    def size(self) -> int:
        return int(self.features.shape[0])

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    def subset(self, index: Vector | list[int]) -> RegressionDataset:
        rows = np.asarray(index, dtype=np.intp)
        return type(self)(self.features[rows], self.targets[rows], dict(self.metadata))


@dataclass(frozen=True, eq=False)
class ClassificationDataset(RegressionDataset):
    """A dataset whose targets are labels in ``{-1, +1}``."""

    def __post_init__(self) -> None:
        super().__post_init__()
        if not np.all(np.isin(self.targets, (-1.0, 1.0))):
            raise ParameterError("labels must be -1 or +1")


def synth_regression_data(n: int, d: int, seed: int, mode: TargetMode = "planted", noise: float = 0.1) -> RegressionDataset:
    """Standard normal features with planted-linear or independent Gaussian targets.

    ``planted`` draws ``theta*`` from the same seeded generator and sets
    ``y = X theta* + noise * e``.
    """

    if n < 1 or d < 1:
        raise ParameterError("n and d must be >= 1")
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((n, d))
    metadata: dict[str, object] = {"source": "synthetic", "seed": seed, "mode": mode}
    if mode == "planted":
        theta_star = rng.standard_normal(d)
        targets = features @ theta_star + noise * rng.standard_normal(n)
        metadata["theta_star"] = theta_star.tolist()
        metadata["noise"] = noise
    else:
        targets = rng.standard_normal(n)
    return RegressionDataset(features, targets, metadata)


def synth_ring_classification(count: int, eta: float, seed: int) -> ClassificationDataset:
    """Two-dimensional Gaussian points labelled by ``sign(||x|| - sqrt(2))``.

    Points with ``||x||`` inside the open band ``(sqrt(2)/eta, eta sqrt(2))`` are
    dropped; ``eta = 1`` keeps everything.
    """

    if eta < 1.0:
        raise ParameterError("eta must be >= 1")
    rng = np.random.default_rng(seed)
    points = rng.standard_normal((count, 2))
    norms = np.linalg.norm(points, axis=1)
    root2 = math.sqrt(2.0)
    keep = (norms <= root2 / eta) | (norms >= eta * root2)
    labels = np.where(norms[keep] >= root2, 1.0, -1.0)
    LOGGER.debug("Ring data with eta=%g kept %d of %d points", eta, int(keep.sum()), count)
    return ClassificationDataset(points[keep], labels, {"source": "ring", "seed": seed, "eta": eta})


def train_test_split(data: RegressionDataset, test_fraction: float, seed: int) -> tuple[RegressionDataset, RegressionDataset]:
    """Seeded random split; both parts keep at least one sample."""

    if not 0.0 < test_fraction < 1.0:
        raise ParameterError("test_fraction must lie in (0, 1)")
    if data.size < 2:
        raise ParameterError("splitting needs at least two samples")
    order = np.random.default_rng(seed).permutation(data.size)
    cut = min(max(int(round(test_fraction * data.size)), 1), data.size - 1)
    return data.subset(order[cut:]), data.subset(order[:cut])


def _parse_float(token: str, line_number: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise DatasetFormatError(f"non-numeric token {token!r}", line_number) from None
    if not math.isfinite(value):
        raise DatasetFormatError(f"non-finite value {token!r}", line_number)
    return value


def load_libsvm(path: str | Path, dim: int | None = None) -> RegressionDataset:
    """Parse ``target idx:val idx:val ...`` lines with 1-based indices into a dense dataset.

    Blank lines are skipped; absent indices are zero. The dimension is the
    largest index seen unless ``dim`` is given.

    Raises:
        DatasetFormatError: On a malformed line, a non-numeric token, an index
            beyond ``dim`` or a file without samples.
    """

    source = Path(path)
    targets: list[float] = []
    rows: list[dict[int, float]] = []
    with source.open(encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            tokens = line.split()
            if not tokens:
                continue
            targets.append(_parse_float(tokens[0], line_number))
            row: dict[int, float] = {}
            for token in tokens[1:]:
                index_text, sep, value_text = token.partition(":")
                if not sep:
                    raise DatasetFormatError(f"expected idx:val, got {token!r}", line_number)
                try:
                    index = int(index_text)
                except ValueError:
                    raise DatasetFormatError(f"non-integer index {index_text!r}", line_number) from None
                if index < 1:
                    raise DatasetFormatError(f"indices are 1-based, got {index}", line_number)
                if dim is not None and index > dim:
                    raise DatasetFormatError(f"index {index} exceeds dimension {dim}", line_number)
                row[index - 1] = _parse_float(value_text, line_number)
            rows.append(row)
    if not rows:
        raise DatasetFormatError(f"{source} contains no samples")
    width = dim if dim is not None else max((max(row, default=-1) for row in rows), default=-1) + 1
    features = np.zeros((len(rows), max(width, 1)))
    for i, row in enumerate(rows):
        for j, value in row.items():
            features[i, j] = value
    LOGGER.info("Loaded %s: N=%d, d=%d", source, features.shape[0], features.shape[1])
    return RegressionDataset(features, np.asarray(targets), {"source": str(source)})


def write_dataset_csv(data: RegressionDataset, path: str | Path) -> Path:
    """Write columns ``x1..xd,target`` with round-trip exact floats."""

    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow([f"x{j + 1}" for j in range(data.dim)] + ["target"])
        for row, value in zip(data.features, data.targets, strict=True):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(value))])
    return target


def read_dataset_csv(path: str | Path) -> RegressionDataset:
    """Load a file written by :func:`write_dataset_csv`.

    Raises:
        DatasetFormatError: On a row with the wrong width or a non-numeric cell.
    """

    source = Path(path)
    with source.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or header[-1] != "target":
            raise DatasetFormatError(f"{source} has no x1..xd,target header", 1)
        values = []
        for line_number, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DatasetFormatError(f"expected {len(header)} cells, got {len(row)}", line_number)
            values.append([_parse_float(cell, line_number) for cell in row])
    if not values:
        raise DatasetFormatError(f"{source} contains no samples")
    table = np.asarray(values)
    return RegressionDataset(table[:, :-1], table[:, -1], {"source": str(source)})


def cached_regression_data(
    cache_dir: str | Path, n: int, d: int, seed: int, mode: TargetMode = "planted"
) -> RegressionDataset:
    """:func:`synth_regression_data` backed by a CSV file in ``cache_dir``."""

    path = Path(cache_dir) / f"regression_n{n}_d{d}_seed{seed}_{mode}.csv"
    if path.exists():
        LOGGER.debug("Reading cached dataset %s", path)
        cached = read_dataset_csv(path)
        return RegressionDataset(cached.features, cached.targets, {"source": "synthetic", "seed": seed, "mode": mode})
    data = synth_regression_data(n, d, seed, mode)
    write_dataset_csv(data, path)
    return data
