"""Feature schema: typed column descriptions and the schema document format.

A schema document is UTF-8 text with one TAB-separated record per line::

    name<TAB>kind<TAB>group<TAB>levels

where ``kind`` is one of ``numeric``, ``ordinal``, ``nominal``, ``group`` is
one of ``A B C D -`` and ``levels`` is a ``|``-separated list (empty for
numeric features). Lines starting with ``#`` are comments. Exactly one
directive line declares the binary target::

    !target<TAB><feature name><TAB><positive level>
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import SchemaError


class Kind(enum.Enum):
    NUMERIC = "numeric"
    ORDINAL = "ordinal"
    NOMINAL = "nominal"


class Group(enum.Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"
    NONE = "-"


@dataclass(frozen=True)
class FeatureSpec:
    """One survey column: its kind, its ordered levels, and its group tag.

    Level order is significant for ordinal features and preserved verbatim;
    numeric features carry no levels.
    """

    name: str
    kind: Kind
    levels: tuple[str, ...] = ()
    group: Group = Group.NONE

    def __post_init__(self):
        if not self.name:
            raise SchemaError("feature name must be nonempty")
        if self.kind is Kind.NUMERIC:
            if self.levels:
                raise SchemaError(f"numeric feature {self.name!r} must not declare levels")
        else:
            if len(self.levels) < 2:
                raise SchemaError(
                    f"{self.kind.value} feature {self.name!r} needs >= 2 levels, got {len(self.levels)}"
                )
            if len(set(self.levels)) != len(self.levels):
                raise SchemaError(f"feature {self.name!r} has duplicate levels")
            if any(not lv for lv in self.levels):
                raise SchemaError(f"feature {self.name!r} has an empty level")

    @property
    def is_categorical(self) -> bool:
        return self.kind is not Kind.NUMERIC

    def level_index(self, level: str) -> int:
        try:
            return self.levels.index(level)
        except ValueError:
            raise KeyError(level) from None


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature list plus the binary target declaration.

    The target must itself be declared as a nominal feature with exactly two
    levels; ``positive_level`` names the level encoded as label 1.
    """

    features: tuple[FeatureSpec, ...]
    target_name: str
    positive_level: str
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})[0]
            raise SchemaError(f"duplicate feature name {dup!r}")
        index = {f.name: f for f in self.features}
        if self.target_name not in index:
            raise SchemaError(f"target {self.target_name!r} is not a declared feature")
        tgt = index[self.target_name]
        if tgt.kind is not Kind.NOMINAL or len(tgt.levels) != 2:
            raise SchemaError(
                f"target {self.target_name!r} must be nominal with exactly 2 levels"
            )
        if self.positive_level not in tgt.levels:
            raise SchemaError(
                f"positive level {self.positive_level!r} is not a level of {self.target_name!r}"
            )
        if len(self.features) < 2:
            raise SchemaError("schema declares no features besides the target")
        object.__setattr__(self, "_index", index)

    def __getitem__(self, name: str) -> FeatureSpec:
        try:
            return self._index[name]
        except KeyError:
            raise SchemaError(f"unknown feature {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._index

    @property
    def target(self) -> FeatureSpec:
        return self._index[self.target_name]

    @property
    def negative_level(self) -> str:
        a, b = self.target.levels
        return b if a == self.positive_level else a

    @property
    def predictors(self) -> tuple[FeatureSpec, ...]:
        """All features except the target, in declared order."""
        return tuple(f for f in self.features if f.name != self.target_name)

    def groups(self) -> dict[Group, tuple[str, ...]]:
        """Predictor names per non-empty group tag, keyed A..D."""
        out: dict[Group, list[str]] = {}
        for f in self.predictors:
            if f.group is not Group.NONE:
                out.setdefault(f.group, []).append(f.name)
        return {g: tuple(v) for g, v in sorted(out.items(), key=lambda kv: kv[0].value)}


def parse_schema(text: str) -> FeatureSchema:
    """Parse a schema document. Raises :class:`SchemaError` with a line number."""
    features: list[FeatureSpec] = []
    seen: set[str] = set()
    target: tuple[str, str] | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if fields[0] == "!target":
            if len(fields) != 3:
                raise SchemaError("!target needs exactly 2 fields: name, positive level", lineno)
            if target is not None:
                raise SchemaError("duplicate !target directive", lineno)
            target = (fields[1], fields[2])
            continue
        if fields[0].startswith("!"):
            raise SchemaError(f"unknown directive {fields[0]!r}", lineno)
        if len(fields) != 4:
            raise SchemaError(f"expected 4 TAB-separated fields, got {len(fields)}", lineno)
        name, kind_s, group_s, levels_s = fields
        if name in seen:
            raise SchemaError(f"duplicate feature name {name!r}", lineno)
        try:
            kind = Kind(kind_s)
        except ValueError:
            raise SchemaError(f"unknown kind {kind_s!r}", lineno) from None
        try:
            group = Group(group_s)
        except ValueError:
            raise SchemaError(f"unknown group {group_s!r} (expected A, B, C, D or -)", lineno) from None
        levels = tuple(levels_s.split("|")) if levels_s else ()
        try:
            spec = FeatureSpec(name=name, kind=kind, levels=levels, group=group)
        except SchemaError as exc:
            raise SchemaError(str(exc), lineno) from None
        seen.add(name)
        features.append(spec)
    if target is None:
        raise SchemaError("missing !target directive", len(text.splitlines()) or 1)
    try:
        return FeatureSchema(tuple(features), target_name=target[0], positive_level=target[1])
    except SchemaError as exc:
        raise SchemaError(f"invalid schema: {exc}", None) from None


def serialize_schema(schema: FeatureSchema) -> str:
    """Canonical schema document: features in declared order, directive last."""
    lines = []
    for f in schema.features:
        lines.append("\t".join([f.name, f.kind.value, f.group.value, "|".join(f.levels)]))
    lines.append("\t".join(["!target", schema.target_name, schema.positive_level]))
    return "\n".join(lines) + "\n"
