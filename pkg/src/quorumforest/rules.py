"""Feature-range rules distilled from a reduced path set."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import ONEHOT, FeatureSpace
from .paths import GT, LE, PathSet

EQ = "eq"
NOTIN = "notin"


@dataclass(frozen=True)
class FeatureRange:
    feature: int
    low: float
    high: float

    def __post_init__(self):
        if not self.low <= self.high:
            raise ValueError(f"empty range [{self.low}, {self.high}] on feature {self.feature}")

    def contains(self, v) -> bool:
        return self.low <= v <= self.high


@dataclass(frozen=True)
class CategoricalClause:
    source_feature: str
    polarity: str
    values: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if self.polarity == EQ and len(self.values) != 1:
            raise ValueError("an equals clause carries exactly one value")
        if self.polarity == NOTIN and not self.values:
            raise ValueError("a not-in clause needs at least one value")
        if self.polarity not in (EQ, NOTIN):
            raise ValueError(f"unknown polarity {self.polarity!r}")

    def allowed(self, categories: Sequence[str]) -> list[str]:
        if self.polarity == EQ:
            return list(self.values)
        return [c for c in categories if c not in self.values]


@dataclass(frozen=True)
class Rule:
    ranges: tuple[FeatureRange, ...]
    cat_clauses: tuple[CategoricalClause, ...]
    consequent: tuple[int, ...]

    @property
    def length(self) -> int:
        return len(self.ranges) + len(self.cat_clauses)

    @property
    def empty(self) -> bool:
        """An empty antecedent for a nonempty consequent: suspicious, never produced from paths with conditions."""
        return self.length == 0 and any(self.consequent)

    @property
    def labels(self) -> list[int]:
        return [i for i, v in enumerate(self.consequent) if v]

    def satisfied_by(self, X: np.ndarray, space: FeatureSpace) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        ok = np.ones(len(X), dtype=bool)
        for r in self.ranges:
            ok &= (X[:, r.feature] >= r.low) & (X[:, r.feature] <= r.high)
        for c in self.cat_clauses:
            if c.polarity == EQ:
                ok &= X[:, space.index(f"{c.source_feature}_{c.values[0]}")] == 1
            else:
                for v in c.values:
                    ok &= X[:, space.index(f"{c.source_feature}_{v}")] == 0
        return ok

    def to_dict(self, space: FeatureSpace, label_names: Sequence[str]) -> dict:
        conds: list[dict] = [
            {"feature": space.features[r.feature].name,
             "low": space.to_original(r.feature, r.low),
             "high": space.to_original(r.feature, r.high)}
            for r in self.ranges
        ]
        conds += [{"cat": c.source_feature, "op": c.polarity, "values": list(c.values)}
                  for c in self.cat_clauses]
        return {"if": conds, "then": [label_names[i] for i in self.labels], "length": self.length}

    def to_text(self, space: FeatureSpace, label_names: Sequence[str]) -> str:
        parts = [f"{fmt(space.to_original(r.feature, r.low))} <= {space.features[r.feature].name}"
                 f" <= {fmt(space.to_original(r.feature, r.high))}" for r in self.ranges]
        for c in self.cat_clauses:
            if c.polarity == EQ:
                parts.append(f"{c.source_feature} = {c.values[0]}")
            else:
                parts.append(f"{c.source_feature} not in [{', '.join(c.values)}]")
        head = " and ".join(parts) if parts else "{}"
        return f"If {head} then {' '.join(label_names[i] for i in self.labels)}"


def fmt(v: float) -> str:
    """Four significant digits, never scientific notation for ordinary magnitudes."""
    s = f"{v:.4g}"
    if "e" in s:
        s = f"{v:.0f}" if abs(v) >= 1 else f"{v:.4e}"
    return s


_RANGE = re.compile(r"^(\S+) <= (.+) <= (\S+)$")
_EQ = re.compile(r"^(.+) = (.+)$")
_NOTIN = re.compile(r"^(.+) not in \[(.*)\]$")


def parse_rule_text(text: str) -> dict:
    """Parse the text form back into the JSON layout (values at display precision)."""
    m = re.match(r"^If (.*) then (.*)$", text.strip())
    if m is None:
        raise ValueError(f"not a rule: {text!r}")
    body, then = m.groups()
    conds: list[dict] = []
    if body != "{}":
        for part in body.split(" and "):
            if (r := _RANGE.match(part)):
                conds.append({"feature": r.group(2), "low": float(r.group(1)), "high": float(r.group(3))})
            elif (r := _NOTIN.match(part)):
                conds.append({"cat": r.group(1), "op": NOTIN, "values": r.group(2).split(", ")})
            elif (r := _EQ.match(part)):
                conds.append({"cat": r.group(1), "op": EQ, "values": [r.group(2)]})
            else:
                raise ValueError(f"cannot parse condition {part!r}")
    return {"if": conds, "then": then.split(), "length": len(conds)}


# ---------------------------------------------------------------- distillation


def aggregate_ranges(ps: PathSet, instance, space: FeatureSpace) -> list[FeatureRange]:
    """Intersect every path's interval per feature (max of lows, min of highs).

    ``f > t`` becomes the closed bound ``nextafter(t, inf)``. One-hot members are
    left to :func:`handle_categorical`; features no path touches are omitted.
    """
    x = np.asarray(instance, dtype=float)
    used = sorted(f for f in ps.feature_union() if space.features[f].kind != ONEHOT)
    out = []
    for f in used:
        dlo, dhi = space.domain(f)
        dlo, dhi = min(dlo, x[f]), max(dhi, x[f])
        low, high = dlo, dhi
        for p in ps:
            lo, lo_open, hi = p.interval(f, dlo, dhi)
            if lo_open:
                lo = float(np.nextafter(lo, np.inf))
            low, high = max(low, lo), min(high, hi)
        assert low <= x[f] <= high, f"instance outside aggregated range on feature {f}"
        out.append(FeatureRange(f, float(low), float(high)))
    return out


def handle_categorical(ps: PathSet, instance, space: FeatureSpace) -> list[CategoricalClause]:
    """One clause per categorical group the paths constrain.

    A path requiring the instance's active member to be 1 gives ``group = value``;
    otherwise members required to be 0 give ``group not in [...]``.
    """
    x = np.asarray(instance, dtype=float)
    clauses = []
    for group, members in space.categorical_groups.items():
        idx = [space.index(m) for m in members]
        pinned_one = False
        pinned_zero: set[int] = set()
        for p in ps:
            for c in p.conditions:
                if c.feature not in idx:
                    continue
                v = x[c.feature]
                if c.op == GT and c.threshold < 1:
                    if v != 1:
                        raise RuntimeError(f"path {p.tree_id} needs {space.names[c.feature]}=1 "
                                           "but the instance has 0")
                    pinned_one = True
                elif c.op == LE and c.threshold < 1:
                    if v != 0:
                        raise RuntimeError(f"path {p.tree_id} needs {space.names[c.feature]}=0 "
                                           "but the instance has 1")
                    pinned_zero.add(c.feature)
        if pinned_one:
            active = next(i for i in idx if x[i] == 1)
            clauses.append(CategoricalClause(group, EQ, (space.category_of(space.names[active]),)))
        elif pinned_zero:
            vals = tuple(space.category_of(space.names[i]) for i in idx if i in pinned_zero)
            clauses.append(CategoricalClause(group, NOTIN, vals))
    return clauses


def build_rule(ranges, clauses, consequent) -> Rule:
    ranges = tuple(sorted(ranges, key=lambda r: r.feature))
    if len({r.feature for r in ranges}) != len(ranges):
        raise ValueError("at most one range per feature")
    cons = tuple(int(v) for v in consequent)
    return Rule(ranges, tuple(clauses), cons)


def rule_from_paths(ps: PathSet, instance, space: FeatureSpace, consequent) -> Rule:
    return build_rule(aggregate_ranges(ps, instance, space),
                      handle_categorical(ps, instance, space), consequent)


# ------------------------------------------------------------- conclusiveness


@dataclass(frozen=True)
class ConclusivenessReport:
    holds: bool
    n_samples: int
    counterexample: np.ndarray | None = None

    @property
    def tested(self) -> bool:
        return self.n_samples > 0


def sample_within(rule: Rule, space: FeatureSpace, instance, n: int,
                  rng: np.random.Generator) -> np.ndarray:
    """Perturbations that respect the rule: ranges for ruled features, full domain elsewhere."""
    x = np.asarray(instance, dtype=float)
    F = len(space)
    X = np.empty((n, F))
    for i in range(F):
        lo, hi = space.domain(i)
        X[:, i] = rng.uniform(min(lo, x[i]), max(hi, x[i]), n)
    for r in rule.ranges:
        X[:, r.feature] = rng.uniform(r.low, r.high, n)
    clauses = {c.source_feature: c for c in rule.cat_clauses}
    for group, members in space.categorical_groups.items():
        cats = [space.category_of(m) for m in members]
        allowed = clauses[group].allowed(cats) if group in clauses else cats
        pick = rng.integers(0, len(allowed), n)
        idx = [space.index(m) for m in members]
        X[:, idx] = 0.0
        for j, cat in enumerate(allowed):
            X[pick == j, idx[cats.index(cat)]] = 1.0
    return X


def check_conclusiveness(rule: Rule, forest, instance, n_samples: int = 1000,
                         seed: int = 0, space: FeatureSpace | None = None) -> ConclusivenessReport:
    """Sample inside the rule and confirm the consequent labels stay predicted."""
    if n_samples <= 0:
        return ConclusivenessReport(True, 0)
    space = space if space is not None else forest.space
    rng = np.random.default_rng(seed)
    X = sample_within(rule, space, instance, n_samples, rng)
    pred = forest.predict_many(X)
    ok = pred[:, rule.labels].all(axis=1) if rule.labels else np.ones(len(X), dtype=bool)
    if ok.all():
        return ConclusivenessReport(True, n_samples)
    return ConclusivenessReport(False, n_samples, X[np.argmin(ok)].copy())
