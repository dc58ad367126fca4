"""CSV ingestion, seeded shuffling, and feature standardization.

Input files are plain numeric CSV (UTF-8, optional single header row).
The canonical output layout is ``feature_0,...,feature_{d-1},label``.
Benchmark datasets are not bundled; see the README for fetch
instructions and :func:`export_builtin` for the ones shipped with
scikit-learn.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import pandas as pd

from .core import CLASSIFICATION, REGRESSION, Dataset
from .distributions import run_rng
from .streams import SyntheticStream, generate


class DataError(ValueError):
    """Malformed dataset file or spec."""


@dataclass
class DatasetSpec:
    path: str
    task: str = REGRESSION
    label_column: Union[str, int] = -1  # name, or positional index
    label_map: Optional[dict] = None  # classification: two source values -> +-1
    standardize: bool = True
    shuffle_seed: Optional[int] = None


def _read_numeric_csv(path: str) -> pd.DataFrame:
    try:
        df = pd.read_csv(path)
    except Exception as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    # header row is optional: re-read headerless when the columns parse as numbers
    try:
        [float(c) for c in df.columns]
        df = pd.read_csv(path, header=None)
    except ValueError:
        pass
    for col in df.columns:
        bad = pd.to_numeric(df[col], errors="coerce").isna() & df[col].notna()
        if df[col].isna().any() or bad.any():
            row = int(np.argmax((df[col].isna() | bad).to_numpy()))
            raise DataError(f"non-numeric cell at row {row}, column {col!r} of {path}")
    return df.astype(float)


def _map_labels(y: np.ndarray, spec: DatasetSpec) -> np.ndarray:
    if spec.task != CLASSIFICATION:
        return y
    if spec.label_map is not None:
        if len(spec.label_map) != 2 or set(spec.label_map.values()) != {-1, 1}:
            raise DataError("label_map must send exactly two values to -1 and +1")
        mapping = {float(k): float(v) for k, v in spec.label_map.items()}
        unknown = set(np.unique(y)) - set(mapping)
        if unknown:
            raise DataError(f"labels {sorted(unknown)} not covered by label_map")
        return np.vectorize(mapping.get)(y)
    values = set(np.unique(y))
    if values <= {-1.0, 1.0}:
        return y
    if values <= {0.0, 1.0}:
        return np.where(y == 0.0, -1.0, 1.0)
    raise DataError(f"classification labels {sorted(values)} need an explicit label_map")


def standardize_columns(M: np.ndarray) -> np.ndarray:
    """Zero mean, unit variance per column; constant columns are centered only."""
    mean = M.mean(axis=0)
    std = M.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    return (M - mean) / std


def load_dataset(spec: DatasetSpec) -> Dataset:
    """Parse, label-map, shuffle (Fisher-Yates with the spec seed) and
    optionally standardize a CSV file."""
    df = _read_numeric_csv(spec.path)
    if isinstance(spec.label_column, int):
        try:
            label_col = df.columns[spec.label_column]
        except IndexError:
            raise DataError(f"label column index {spec.label_column} out of range")
    else:
        if spec.label_column not in df.columns:
            raise DataError(f"label column {spec.label_column!r} not found")
        label_col = spec.label_column
    y = df[label_col].to_numpy()
    X = df.drop(columns=[label_col]).to_numpy()
    if X.shape[1] == 0:
        raise DataError("dataset has no feature columns")

    y = _map_labels(y, spec)
    if spec.standardize:
        X = standardize_columns(X)
        if spec.task == REGRESSION:
            y = standardize_columns(y[:, np.newaxis])[:, 0]
    if spec.shuffle_seed is not None:
        order = run_rng(spec.shuffle_seed, 11).permutation(len(y))
        X, y = X[order], y[order]
    return Dataset(X, y, task=spec.task)


def save_dataset(ds: Dataset, path: str):
    """Write the canonical feature_0,...,label CSV."""
    cols = {f"feature_{j}": ds.X[:, j] for j in range(ds.d)}
    cols["label"] = ds.y
    pd.DataFrame(cols).to_csv(path, index=False)


def synthetic_to_dataset(stream: SyntheticStream, rep: int = 0) -> Dataset:
    """Materialize a synthetic stream; same seed gives the same Dataset."""
    return generate(stream, rep=rep)


#: Datasets exportable without a network connection (bundled with sklearn).
BUILTIN_EXPORTS = ("breast_cancer",)


def export_builtin(name: str, path: str):
    """Export a scikit-learn-bundled dataset to canonical CSV.

    Only datasets whose data files ship inside scikit-learn are offered;
    the housing and diabetes benchmarks must be fetched separately (see
    README).
    """
    if name == "breast_cancer":
        from sklearn.datasets import load_breast_cancer

        raw = load_breast_cancer()
        # 0 = malignant, 1 = benign -> -1 / +1
        y = np.where(raw.target == 0, -1.0, 1.0)
        save_dataset(Dataset(raw.data, y, task=CLASSIFICATION), path)
    else:
        raise DataError(f"no offline export for {name!r}; available: {BUILTIN_EXPORTS}")
