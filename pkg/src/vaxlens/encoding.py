"""Hybrid categorical encoding with full column provenance.

The hybrid scheme integer-codes order-based (ordinal) features, one-hot
expands unorder-based (nominal) features, and passes numeric features
through. The two override modes force one-hot or integer codes onto every
categorical feature so encoders can be compared like for like.

Mappings derive from the schema alone (declared level order), never from the
data, so an encoder is deterministic and reusable across datasets sharing a
schema. Provenance maps every output column back to its source feature so
explainers can report original survey questions rather than matrix columns.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import ShapeError
from .schema import FeatureSchema, FeatureSpec, Kind

#: provenance tags for scalar columns (one-hot columns carry the level string)
TAG_NUMERIC = "numeric"
TAG_ORDINAL = "ordinal-scalar"
TAG_LABEL = "label-scalar"


class EncoderMode(enum.Enum):
    HYBRID = "hybrid"
    ONE_HOT_ALL = "onehot"
    LABEL_ALL = "label"


@dataclass(frozen=True)
class EncodedMatrix:
    """n x m finite real matrix plus per-column provenance."""

    values: np.ndarray
    provenance: tuple[tuple[str, str], ...]

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != len(self.provenance):
            raise ShapeError(
                f"matrix is {v.shape}, provenance covers {len(self.provenance)} columns"
            )
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def numeric_columns(self) -> np.ndarray:
        """Indices of passthrough numeric columns, per provenance."""
        return np.asarray(
            [j for j, (_, tag) in enumerate(self.provenance) if tag == TAG_NUMERIC],
            dtype=np.intp,
        )


class FittedEncoder:
    """Schema-derived encoder. Use :func:`fit` to construct."""

    def __init__(self, schema: FeatureSchema, mode: EncoderMode):
        self.schema = schema
        self.mode = mode
        self._plan: list[tuple[FeatureSpec, str]] = []  # (spec, "pass"|"label"|"onehot")
        provenance: list[tuple[str, str]] = []
        blocks: dict[str, list[int]] = {}
        col = 0
        for spec in schema.predictors:
            if spec.kind is Kind.NUMERIC:
                how = "pass"
            elif mode is EncoderMode.ONE_HOT_ALL:
                how = "onehot"
            elif mode is EncoderMode.LABEL_ALL:
                how = "label"
            else:
                how = "label" if spec.kind is Kind.ORDINAL else "onehot"
            self._plan.append((spec, how))
            if how == "onehot":
                for level in spec.levels:
                    provenance.append((spec.name, level))
                blocks[spec.name] = list(range(col, col + len(spec.levels)))
                col += len(spec.levels)
            else:
                tag = {
                    "pass": TAG_NUMERIC,
                    "label": TAG_ORDINAL if spec.kind is Kind.ORDINAL else TAG_LABEL,
                }[how]
                provenance.append((spec.name, tag))
                blocks[spec.name] = [col]
                col += 1
        self.provenance: tuple[tuple[str, str], ...] = tuple(provenance)
        self.width: int = col
        self._blocks = {name: np.asarray(ix, dtype=np.intp) for name, ix in blocks.items()}

    # -- core operations ---------------------------------------------------

    def transform(self, d: Dataset) -> EncodedMatrix:
        """Encode a dataset row for row. The dataset must share the schema."""
        if d.schema != self.schema:
            raise ShapeError("dataset schema does not match encoder schema")
        return EncodedMatrix(self._encode_columns(d.columns, d.n_rows), self.provenance)

    def transform_columns(self, columns, n: int) -> EncodedMatrix:
        """Encode raw stored-representation columns (level codes / floats).

        Callers own validity here; use :meth:`transform` for checked input.
        """
        return EncodedMatrix(self._encode_columns(columns, n), self.provenance)

    def decode_column(self, col: int) -> tuple[str, str]:
        """Inverse of provenance: output column -> (feature, level or tag)."""
        if not 0 <= col < self.width:
            raise IndexError(f"column {col} out of range [0, {self.width})")
        return self.provenance[col]

    def feature_blocks(self) -> dict[str, np.ndarray]:
        """Output column indices per original feature, in schema order."""
        return dict(self._blocks)

    def numeric_columns(self) -> np.ndarray:
        """Indices of passthrough numeric columns (needed by distance models)."""
        return np.asarray(
            [j for j, (_, tag) in enumerate(self.provenance) if tag == TAG_NUMERIC],
            dtype=np.intp,
        )

    # -- internals ----------------------------------------------------------

    def _encode_columns(self, columns, n: int) -> np.ndarray:
        out = np.zeros((n, self.width), dtype=np.float64)
        for spec, how in self._plan:
            cols = self._blocks[spec.name]
            raw = columns[spec.name]
            if how == "pass":
                out[:, cols[0]] = raw
            elif how == "label":
                out[:, cols[0]] = raw
            else:
                if n:
                    out[np.arange(n), cols[0] + np.asarray(raw, dtype=np.intp)] = 1.0
        return out


def fit(schema: FeatureSchema, mode: EncoderMode | str = EncoderMode.HYBRID) -> FittedEncoder:
    """Fit an encoder from the schema alone."""
    if isinstance(mode, str):
        mode = EncoderMode(mode)
    return FittedEncoder(schema, mode)
