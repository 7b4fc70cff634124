"""Dataset: validated, immutable survey tables.

Categorical cells are stored as int16 codes into the schema's level lists;
numeric cells as float64. Construction validates every cell, so any Dataset
in hand is fully schema-conformant ("parse, don't validate"). The binary
target is extracted at construction time: 1 means the schema's positive
level, 0 the other level.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from ._rng import STREAM_SPLIT, generator
from .errors import DataError, QueryError, SplitError
from .schema import FeatureSchema


@dataclass(frozen=True)
class Dataset:
    """n rows of predictor cells plus n binary target labels."""

    schema: FeatureSchema
    columns: Mapping[str, np.ndarray]  # predictor name -> codes (int16) or values (float64)
    target: np.ndarray  # uint8, 1 = positive level
    _n: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        cols = dict(self.columns)
        names = [f.name for f in self.schema.predictors]
        if set(cols) != set(names):
            missing = sorted(set(names) - set(cols))
            extra = sorted(set(cols) - set(names))
            raise DataError(f"column set mismatch: missing {missing}, unexpected {extra}")
        n = len(self.target)
        target = np.ascontiguousarray(self.target, dtype=np.uint8)
        if target.ndim != 1 or (n and target.max(initial=0) > 1):
            raise DataError("target must be a 1-D array of 0/1 labels")
        for spec in self.schema.predictors:
            arr = cols[spec.name]
            if len(arr) != n:
                raise DataError(f"length mismatch in column {spec.name!r}")
            if spec.is_categorical:
                arr = np.ascontiguousarray(arr, dtype=np.int16)
                if n and (arr.min() < 0 or arr.max() >= len(spec.levels)):
                    raise DataError("level code out of range", column=spec.name)
            else:
                arr = np.ascontiguousarray(arr, dtype=np.float64)
                if n and not np.all(np.isfinite(arr)):
                    row = int(np.flatnonzero(~np.isfinite(arr))[0]) + 1
                    raise DataError("non-finite numeric value", row=row, column=spec.name)
            arr.flags.writeable = False
            cols[spec.name] = arr
        target.flags.writeable = False
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "_n", n)

    # -- shape & access -------------------------------------------------

    @property
    def n_rows(self) -> int:
        return self._n

    def __len__(self) -> int:
        return self._n

    def codes(self, name: str) -> np.ndarray:
        """Raw stored column (codes for categorical, floats for numeric)."""
        try:
            return self.columns[name]
        except KeyError:
            raise QueryError(f"unknown feature {name!r}") from None

    def values(self, name: str) -> np.ndarray | list[str]:
        """Decoded column: level strings for categorical, floats for numeric."""
        spec = self.schema[name]
        col = self.codes(name)
        if spec.is_categorical:
            return [spec.levels[c] for c in col]
        return col

    def record(self, i: int) -> dict[str, object]:
        """Row ``i`` as a name -> decoded value dict (predictors only)."""
        out: dict[str, object] = {}
        for spec in self.schema.predictors:
            c = self.columns[spec.name][i]
            out[spec.name] = spec.levels[c] if spec.is_categorical else float(c)
        return out

    def take(self, indices: Iterable[int]) -> "Dataset":
        idx = np.asarray(list(indices), dtype=np.intp)
        cols = {name: arr[idx] for name, arr in self.columns.items()}
        return Dataset(self.schema, cols, self.target[idx])

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_records(cls, schema: FeatureSchema, records: Iterable[Mapping[str, object]]) -> "Dataset":
        """Build from decoded row dicts that include the target column."""
        records = list(records)
        n = len(records)
        cols = {
            f.name: (np.empty(n, dtype=np.int16) if f.is_categorical else np.empty(n, dtype=np.float64))
            for f in schema.predictors
        }
        target = np.empty(n, dtype=np.uint8)
        for i, rec in enumerate(records):
            for spec in schema.predictors:
                cols[spec.name][i] = _parse_cell(spec, rec[spec.name], row=i + 1)
            target[i] = _parse_target(schema, rec[schema.target_name], row=i + 1)
        return cls(schema, cols, target)


def _parse_cell(spec, value, row: int):
    if spec.is_categorical:
        try:
            return spec.level_index(str(value))
        except KeyError:
            raise DataError(
                f"value {value!r} is not a declared level of {spec.kind.value} feature",
                row=row,
                column=spec.name,
            ) from None
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise DataError(f"cannot parse {value!r} as a number", row=row, column=spec.name) from None
    if not math.isfinite(x):
        raise DataError("non-finite numeric value", row=row, column=spec.name)
    return x


def _parse_target(schema: FeatureSchema, value, row: int) -> int:
    tgt = schema.target
    sval = str(value)
    if sval not in tgt.levels:
        raise DataError(
            f"value {value!r} is not a declared level of the target",
            row=row,
            column=tgt.name,
        )
    return 1 if sval == schema.positive_level else 0


def load_csv(path: str | Path, schema: FeatureSchema) -> Dataset:
    """Load an RFC-4180 CSV with header. Column order is free.

    Every schema column (target included) must be present, and nothing else.
    Row numbers in errors are 1-based over data rows.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        expected = {f.name for f in schema.features}
        if set(header) != expected:
            missing = sorted(expected - set(header))
            extra = sorted(set(header) - expected)
            raise DataError(f"{path}: header mismatch: missing {missing}, unexpected {extra}")
        if len(set(header)) != len(header):
            raise DataError(f"{path}: duplicate column in header")
        col_of = {name: j for j, name in enumerate(header)}

        raw_rows = []
        for i, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise DataError(f"expected {len(header)} cells, got {len(row)}", row=i)
            raw_rows.append(row)

    n = len(raw_rows)
    cols = {
        f.name: (np.empty(n, dtype=np.int16) if f.is_categorical else np.empty(n, dtype=np.float64))
        for f in schema.predictors
    }
    target = np.empty(n, dtype=np.uint8)
    tcol = col_of[schema.target_name]
    for i, row in enumerate(raw_rows):
        for spec in schema.predictors:
            cols[spec.name][i] = _parse_cell(spec, row[col_of[spec.name]], row=i + 1)
        target[i] = _parse_target(schema, row[tcol], row=i + 1)
    return Dataset(schema, cols, target)


def write_csv(d: Dataset, path: str | Path) -> None:
    """Write a dataset (schema column order, decoded values, target included)."""
    names = [f.name for f in d.schema.features]
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        decoded = {}
        for spec in d.schema.predictors:
            col = d.columns[spec.name]
            if spec.is_categorical:
                decoded[spec.name] = [spec.levels[c] for c in col]
            else:
                decoded[spec.name] = [repr(float(v)) for v in col]
        tgt = d.schema.target
        pos, neg = d.schema.positive_level, d.schema.negative_level
        decoded[tgt.name] = [pos if t else neg for t in d.target]
        for i in range(d.n_rows):
            writer.writerow([decoded[name][i] for name in names])


def split_stratified(d: Dataset, test_frac: float, seed: int) -> tuple[Dataset, Dataset]:
    """Per-class random split; test share of each class within +-1 row of
    ``test_frac`` times the class count. Deterministic per seed."""
    if not 0.0 < test_frac < 1.0:
        raise SplitError(f"test_frac must be in (0, 1), got {test_frac}")
    counts = np.bincount(d.target, minlength=2)
    if counts.min() < 2:
        raise SplitError(f"both classes need >= 2 rows, got counts {counts.tolist()}")
    rng = generator(seed, STREAM_SPLIT)
    test_idx = []
    for cls in (0, 1):
        idx = np.flatnonzero(d.target == cls)
        perm = rng.permutation(idx)
        n_test = int(test_frac * len(idx) + 0.5)
        test_idx.append(perm[:n_test])
    test_mask = np.zeros(d.n_rows, dtype=bool)
    test_mask[np.concatenate(test_idx)] = True
    train = d.take(np.flatnonzero(~test_mask))
    test = d.take(np.flatnonzero(test_mask))
    return train, test


def filter_cohort(d: Dataset, feature: str, level: str) -> Dataset:
    """Rows where ``feature == level``. Schema unchanged; may be empty."""
    if feature not in d.schema or feature == d.schema.target_name:
        raise QueryError(f"unknown cohort feature {feature!r}")
    spec = d.schema[feature]
    if not spec.is_categorical:
        raise QueryError(f"cohort feature {feature!r} must be categorical")
    try:
        code = spec.level_index(level)
    except KeyError:
        raise QueryError(f"{level!r} is not a level of {feature!r}") from None
    return d.take(np.flatnonzero(d.codes(feature) == code))
