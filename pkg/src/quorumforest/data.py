"""Dataset ingestion, preprocessing and the synthetic maintenance generator."""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

NUMERIC = "numeric"
ORDINAL = "ordinal"
CATEGORICAL = "categorical"
ONEHOT = "onehot"

KINDS = (NUMERIC, ORDINAL, CATEGORICAL, ONEHOT)


class SchemaError(ValueError):
    """Raised when columns, labels or feature kinds do not match expectations."""


class ParseError(ValueError):
    """Raised on malformed CSV input; carries the offending row index."""

    def __init__(self, message: str, row: int):
        super().__init__(f"row {row}: {message}")
        self.row = row


@dataclass(frozen=True)
class Feature:
    name: str
    kind: str = NUMERIC
    lower: float = 0.0
    upper: float = 1.0
    # only for CATEGORICAL: code i in the data means categories[i]
    categories: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown feature kind {self.kind!r}")
        if not self.lower <= self.upper:
            raise SchemaError(f"{self.name}: lower {self.lower} > upper {self.upper}")


@dataclass(frozen=True)
class FeatureSpace:
    """Feature schema with original-unit bounds and one-hot group mapping.

    ``scaled`` tells whether data living in this space has been min-max scaled;
    bounds always stay in original units so rules can be printed back.
    """

    features: tuple[Feature, ...]
    categorical_groups: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    scaled: bool = False

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate feature names")
        members = [m for group in self.categorical_groups.values() for m in group]
        if len(set(members)) != len(members):
            raise SchemaError("one-hot member listed in more than one group")
        onehot = {f.name for f in self.features if f.kind == ONEHOT}
        if onehot != set(members):
            raise SchemaError("one-hot members and categorical groups disagree")

    def __len__(self) -> int:
        return len(self.features)

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    def index(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise SchemaError(f"feature {name!r} not found")

    def domain(self, i: int) -> tuple[float, float]:
        """Bounds of feature ``i`` in the coordinates the model sees."""
        f = self.features[i]
        if f.kind == ONEHOT:
            return 0.0, 1.0
        if self.scaled:
            return (0.0, 1.0) if f.upper > f.lower else (0.0, 0.0)
        return f.lower, f.upper

    def domains(self) -> np.ndarray:
        return np.array([self.domain(i) for i in range(len(self))], dtype=float)

    def to_original(self, i: int, value: float) -> float:
        f = self.features[i]
        if not self.scaled or f.kind == ONEHOT:
            return float(value)
        return float(f.lower + value * (f.upper - f.lower))

    def to_internal(self, i: int, value: float) -> float:
        f = self.features[i]
        if not self.scaled or f.kind == ONEHOT:
            return float(value)
        span = f.upper - f.lower
        return 0.0 if span == 0 else float((value - f.lower) / span)

    def group_of(self, name: str) -> str | None:
        for group, members in self.categorical_groups.items():
            if name in members:
                return group
        return None

    def category_of(self, member: str) -> str:
        group = self.group_of(member)
        if group is None:
            raise SchemaError(f"{member!r} is not a one-hot member")
        return member[len(group) + 1:]

    def to_dict(self) -> dict:
        return {
            "scaled": self.scaled,
            "features": [
                {"name": f.name, "kind": f.kind, "lower": f.lower, "upper": f.upper,
                 **({"categories": list(f.categories)} if f.categories else {})}
                for f in self.features
            ],
            "categorical_groups": {k: list(v) for k, v in self.categorical_groups.items()},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "FeatureSpace":
        feats = tuple(
            Feature(f["name"], f["kind"], float(f["lower"]), float(f["upper"]),
                    tuple(f.get("categories", ())))
            for f in d["features"]
        )
        groups = {k: tuple(v) for k, v in d.get("categorical_groups", {}).items()}
        return cls(feats, groups, bool(d.get("scaled", False)))


@dataclass(frozen=True)
class Dataset:
    space: FeatureSpace
    rows: np.ndarray
    labels: np.ndarray
    label_names: tuple[str, ...]

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float, copy=True)
        labels = np.array(self.labels, dtype=np.int8, copy=True)
        if rows.ndim != 2 or rows.shape[1] != len(self.space):
            raise SchemaError(f"rows shape {rows.shape} does not match {len(self.space)} features")
        if labels.ndim != 2 or labels.shape[0] != rows.shape[0]:
            raise SchemaError("rows and labels have different row counts")
        if labels.shape[1] != len(self.label_names):
            raise SchemaError("label matrix width does not match label names")
        if not np.isin(labels, (0, 1)).all():
            raise SchemaError("labels must be binary")
        rows.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "label_names", tuple(self.label_names))

    def __len__(self) -> int:
        return self.rows.shape[0]

    def subset(self, index) -> "Dataset":
        return Dataset(self.space, self.rows[index], self.labels[index], self.label_names)


# --------------------------------------------------------------------------- io


def load_schema(path: str | Path) -> dict:
    """Read the sidecar schema: ``{"categorical": [...], "ordinal": {...}, "labels": [...]}``."""
    with open(path) as fh:
        schema = json.load(fh)
    if not isinstance(schema, dict):
        raise SchemaError("schema must be a JSON object")
    unknown = set(schema) - {"categorical", "ordinal", "labels"}
    if unknown:
        raise SchemaError(f"unknown schema keys: {sorted(unknown)}")
    return schema


def _ordinal_map(spec) -> dict[str, float]:
    # a list gives the order (first value -> 1); a dict is taken verbatim
    if isinstance(spec, list):
        return {str(v): float(i + 1) for i, v in enumerate(spec)}
    if isinstance(spec, dict):
        return {str(k): float(v) for k, v in spec.items()}
    raise SchemaError("ordinal map must be a list or an object")


def load_csv(path: str | Path, label_columns: Sequence[str] | None = None,
             schema: Mapping | None = None) -> Dataset:
    """Load a header-first CSV into a Dataset.

    Numeric gaps are filled with the column mean, categorical gaps with the mode.
    Bounds are the observed per-column min/max after imputation.
    """
    schema = dict(schema or {})
    if label_columns is None:
        label_columns = schema.get("labels")
    if not label_columns:
        raise SchemaError("no label columns given")
    categorical = list(schema.get("categorical", []))
    ordinal = {k: _ordinal_map(v) for k, v in schema.get("ordinal", {}).items()}

    with open(path, newline="") as fh:
        reader = csv.reader(fh, strict=True)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file, header row required", 0) from None
        except csv.Error as exc:
            raise ParseError(str(exc), 0) from None
        records = []
        try:
            for i, rec in enumerate(reader, start=1):
                if not rec:
                    continue
                if len(rec) != len(header):
                    raise ParseError(f"expected {len(header)} fields, got {len(rec)}", i)
                records.append(rec)
        except csv.Error as exc:
            raise ParseError(str(exc), reader.line_num - 1) from None

    header = [h.strip() for h in header]
    for name in list(label_columns) + categorical + list(ordinal):
        if name not in header:
            raise SchemaError(f"column {name!r} not in CSV header")
    if not records:
        raise ParseError("no data rows", 1)

    labels = np.zeros((len(records), len(label_columns)), dtype=np.int8)
    for j, name in enumerate(label_columns):
        col = header.index(name)
        for i, rec in enumerate(records, start=1):
            try:
                v = float(rec[col])
            except ValueError:
                raise ParseError(f"label {name!r} is not numeric: {rec[col]!r}", i) from None
            if v not in (0.0, 1.0):
                raise ParseError(f"label {name!r} must be 0 or 1, got {rec[col]!r}", i)
            labels[i - 1, j] = int(v)

    features: list[Feature] = []
    columns: list[np.ndarray] = []
    for col, name in enumerate(header):
        if name in label_columns:
            continue
        raw = [rec[col].strip() for rec in records]
        if name in categorical:
            seen = [v for v in raw if v != ""]
            if not seen:
                raise SchemaError(f"categorical column {name!r} is empty")
            mode = Counter(seen).most_common(1)[0][0]
            values = [v if v != "" else mode for v in raw]
            cats = tuple(sorted(set(values)))
            codes = np.array([cats.index(v) for v in values], dtype=float)
            features.append(Feature(name, CATEGORICAL, 0.0, float(len(cats) - 1), cats))
            columns.append(codes)
            continue
        vals = np.empty(len(raw))
        for i, v in enumerate(raw, start=1):
            if v == "":
                vals[i - 1] = np.nan
            elif name in ordinal:
                if v not in ordinal[name]:
                    raise ParseError(f"value {v!r} missing from ordinal map of {name!r}", i)
                vals[i - 1] = ordinal[name][v]
            else:
                try:
                    vals[i - 1] = float(v)
                except ValueError:
                    raise ParseError(f"column {name!r} is not numeric: {v!r}", i) from None
        missing = np.isnan(vals)
        if missing.all():
            raise SchemaError(f"column {name!r} has no values")
        if missing.any():
            vals[missing] = vals[~missing].mean()
        kind = ORDINAL if name in ordinal else NUMERIC
        features.append(Feature(name, kind, float(vals.min()), float(vals.max())))
        columns.append(vals)

    space = FeatureSpace(tuple(features))
    return Dataset(space, np.column_stack(columns), labels, tuple(label_columns))


def save_csv(ds: Dataset, path: str | Path) -> None:
    """Write a Dataset back out; categorical codes are written as category names."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ds.space.names + list(ds.label_names))
        for row, lab in zip(ds.rows, ds.labels):
            out = []
            for f, v in zip(ds.space.features, row):
                out.append(f.categories[int(v)] if f.kind == CATEGORICAL else repr(float(v)))
            w.writerow(out + [str(int(x)) for x in lab])


# ----------------------------------------------------------------- transforms


def minmax_scale(ds: Dataset, space: FeatureSpace | None = None) -> Dataset:
    """Map numeric and ordinal columns to [0, 1] using the space's bounds.

    Pass ``space`` (e.g. a trained model's) to scale new data with fixed bounds;
    values outside those bounds then land outside [0, 1]. Constant columns map to 0.
    """
    if ds.space.scaled:
        return ds
    target = space if space is not None else ds.space
    if space is not None and [f.name for f in space.features] != ds.space.names:
        raise SchemaError("dataset features do not match the given space")
    rows = np.array(ds.rows, dtype=float)
    for i, f in enumerate(target.features):
        if f.kind in (NUMERIC, ORDINAL):
            if not (math.isfinite(f.lower) and math.isfinite(f.upper)):
                raise SchemaError(f"{f.name}: bounds must be finite")
            span = f.upper - f.lower
            rows[:, i] = 0.0 if span == 0 else (rows[:, i] - f.lower) / span
    base = target if space is not None else ds.space
    return Dataset(replace(base, scaled=True), rows, ds.labels, ds.label_names)


def onehot_encode(ds: Dataset, feature: str) -> Dataset:
    """Replace categorical ``feature`` by one binary column per category."""
    i = ds.space.index(feature)
    f = ds.space.features[i]
    if f.kind == ONEHOT or feature in ds.space.categorical_groups:
        raise SchemaError(f"{feature!r} is already one-hot encoded")
    if f.kind != CATEGORICAL:
        raise SchemaError(f"{feature!r} is not categorical")
    if len(f.categories) < 2:
        raise SchemaError(f"{feature!r} needs at least two categories")
    codes = ds.rows[:, i].astype(int)
    members = tuple(f"{feature}_{c}" for c in f.categories)
    block = (codes[:, None] == np.arange(len(f.categories))[None, :]).astype(float)
    feats = (list(ds.space.features[:i])
             + [Feature(m, ONEHOT, 0.0, 1.0) for m in members]
             + list(ds.space.features[i + 1:]))
    groups = dict(ds.space.categorical_groups)
    groups[feature] = members
    rows = np.hstack([ds.rows[:, :i], block, ds.rows[:, i + 1:]])
    space = FeatureSpace(tuple(feats), groups, ds.space.scaled)
    return Dataset(space, rows, ds.labels, ds.label_names)


def encode_like(ds: Dataset, space: FeatureSpace) -> Dataset:
    """One-hot categorical columns using the members recorded in ``space``.

    Used for new data, whose observed categories may differ from training.
    """
    cols, feats = [], []
    for i, f in enumerate(ds.space.features):
        if f.kind != CATEGORICAL:
            cols.append(ds.rows[:, i])
            feats.append(f)
            continue
        members = space.categorical_groups.get(f.name)
        if members is None:
            raise SchemaError(f"{f.name!r} is not categorical in the target space")
        known = {m[len(f.name) + 1:] for m in members}
        values = [f.categories[int(c)] for c in ds.rows[:, i]]
        unknown = sorted(set(values) - known)
        if unknown:
            raise SchemaError(f"{f.name!r} has categories unseen in training: {unknown}")
        for m in members:
            cat = m[len(f.name) + 1:]
            cols.append(np.array([v == cat for v in values], dtype=float))
            feats.append(Feature(m, ONEHOT, 0.0, 1.0))
    groups = {g: tuple(m) for g, m in space.categorical_groups.items()}
    out_space = FeatureSpace(tuple(feats), groups, ds.space.scaled)
    return Dataset(out_space, np.column_stack(cols), ds.labels, ds.label_names)


def prepare(ds: Dataset, space: FeatureSpace | None = None) -> Dataset:
    """One-hot every categorical column, then min-max scale.

    With ``space`` (a trained model's), encoding and bounds follow that space.
    """
    if space is not None:
        return minmax_scale(encode_like(ds, space), space)
    for f in list(ds.space.features):
        if f.kind == CATEGORICAL:
            ds = onehot_encode(ds, f.name)
    return minmax_scale(ds)


# ------------------------------------------------------------------ generator

AI4I_FEATURES = (
    Feature("Type", ORDINAL, 1.0, 3.0),
    Feature("Air temperature [K]", NUMERIC, 295.6, 304.4),
    Feature("Process temperature [K]", NUMERIC, 306.1, 313.7),
    Feature("Rotational speed [rpm]", NUMERIC, 1212.0, 2874.0),
    Feature("Torque [Nm]", NUMERIC, 4.2, 76.2),
    Feature("Tool wear [min]", NUMERIC, 0.0, 251.0),
)
AI4I_LABELS = ("TWF", "PWF", "OSF")

# labelset -> share of generated rows; mean labels per row = 1.17
_AI4I_MIX = (
    ((1, 0, 0), 0.28),
    ((0, 1, 0), 0.28),
    ((0, 0, 1), 0.28),
    ((0, 1, 1), 0.13),
    ((1, 0, 1), 0.02),
    ((1, 1, 1), 0.01),
)


def ai4i_failures(rows: np.ndarray) -> np.ndarray:
    """Threshold failure logic on (type, air, process, speed, torque, wear) rows."""
    rtype, air, proc, rpm, torque, wear = rows.T
    power = torque * rpm * 2 * np.pi / 60
    twf = (wear > 200) & (proc - air > 8.6)
    pwf = (power < 3500) | (power > 9000)
    osf = torque * wear > 11000 + 1000 * (rtype - 1)
    return np.column_stack([twf, pwf, osf]).astype(np.int8)


def _ai4i_proposals(rng: np.random.Generator, m: int) -> np.ndarray:
    rtype = rng.choice([1.0, 2.0, 3.0], size=m, p=[0.5, 0.3, 0.2])
    air = np.round(rng.uniform(295.6, 304.4, m), 1)
    proc = np.round(np.clip(air + 10 + rng.normal(0, 1.0, m), 306.1, 313.7), 1)
    rpm = np.round(rng.uniform(1212, 2874, m))
    torque = np.round(np.where(rng.random(m) < 0.5,
                               np.clip(rng.normal(55, 12, m), 4.2, 76.2),
                               rng.uniform(4.2, 76.2, m)), 1)
    wear = np.round(rng.uniform(0, 251, m))
    return np.column_stack([rtype, air, proc, rpm, torque, wear])


def generate_ai4i_like(n: int, seed: int) -> Dataset:
    """Synthetic predictive-maintenance data with TWF/PWF/OSF failure labels.

    Every row carries at least one failure. Rows are drawn per target labelset
    by rejection so the label mix (and hence cardinality) is fixed by quota.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    shares = np.array([s for _, s in _AI4I_MIX])
    quota = np.floor(shares * n).astype(int)
    # hand leftover rows to the largest fractional parts, ties to earlier entries
    rest = n - quota.sum()
    order = np.argsort(-(shares * n - quota), kind="stable")
    quota[order[:rest]] += 1

    blocks = []
    for (pattern, _), k in zip(_AI4I_MIX, quota):
        got: list[np.ndarray] = []
        need = int(k)
        while need > 0:
            cand = _ai4i_proposals(rng, 4096)
            hit = cand[(ai4i_failures(cand) == pattern).all(axis=1)][:need]
            got.append(hit)
            need -= len(hit)
        if got:
            blocks.append(np.vstack(got))
    rows = np.vstack(blocks)
    rows = rows[rng.permutation(n)]
    labels = ai4i_failures(rows)
    return Dataset(FeatureSpace(AI4I_FEATURES), rows, labels, AI4I_LABELS)


def ai4i_schema() -> dict:
    return {"categorical": [], "ordinal": {}, "labels": list(AI4I_LABELS)}
