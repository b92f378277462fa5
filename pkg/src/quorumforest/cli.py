"""Command line: generate, train, explain, evaluate.

Exit codes: 0 ok, 2 usage or schema error, 3 I/O error, 4 conclusiveness violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import data as qd
from .evalx import CONSEQUENT, LABELSET, evaluate, to_csv, to_markdown
from .forest import Forest, train_forest
from .fpm import frequent_label_subsets
from .reduce import ReductionConfig, quorum
from .rules import check_conclusiveness
from .strategies import KINDS, PER_LABEL, StrategyConfig, explain

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_VIOLATION = 0, 2, 3, 4
DEFAULT_SEED = 0


class UsageError(Exception):
    pass


def default_seed() -> int:
    raw = os.environ.get("QF_SEED")
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"QF_SEED must be an integer, got {raw!r}") from None


def _positive(kind):
    def parse(s):
        v = kind(s)
        if v < 1:
            raise argparse.ArgumentTypeError(f"must be >= 1, got {s}")
        return v
    return parse


def _load_data(path, schema_path):
    if schema_path is None:
        raise UsageError("--schema is required")
    try:
        schema = qd.load_schema(schema_path)
    except FileNotFoundError:
        raise UsageError(f"schema file not found: {schema_path}") from None
    except json.JSONDecodeError as exc:
        raise qd.SchemaError(f"schema is not valid JSON: {exc}") from None
    if not schema.get("labels"):
        raise qd.SchemaError("schema lists no label columns")
    return qd.load_csv(path, schema["labels"], schema), schema


def _config(args) -> StrategyConfig:
    red = ReductionConfig(seed=args.seed)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            red = ReductionConfig.from_mapping(json.load(fh), red)
    return StrategyConfig(
        getattr(args, "strategy", PER_LABEL),
        max_subsets=args.max_subsets,
        min_support=args.min_support,
        subset_min_size=args.subset_min_size,
        reduction=red,
    )


# ------------------------------------------------------------------ commands


def cmd_generate(args) -> int:
    ds = qd.generate_ai4i_like(args.n, args.seed)
    out = Path(args.out)
    qd.save_csv(ds, out)
    schema_path = Path(args.schema) if args.schema else out.with_suffix(".schema.json")
    schema_path.write_text(json.dumps(qd.ai4i_schema(), indent=2) + "\n")
    print(f"rows: {len(ds)}")
    print(f"label cardinality: {ds.labels.sum(axis=1).mean():.3f}")
    print(f"wrote {out} and {schema_path}")
    return EXIT_OK


def cmd_train(args) -> int:
    raw, _ = _load_data(args.data, args.schema)
    ds = qd.prepare(raw)
    forest = train_forest(ds, n_trees=args.trees, max_depth=args.depth, seed=args.seed)
    forest.save(args.out)
    rates = forest.vote_matrix(ds.rows).mean(axis=(0, 1))
    print(f"trees: {forest.n_trees}")
    print(f"quorum: {quorum(forest.n_trees).value}")
    for name, rate in zip(forest.label_names, rates):
        print(f"vote rate {name}: {rate:.3f}")
    print(f"wrote {args.out}")
    return EXIT_OK


def _instance_from_json(text: str, forest: Forest, schema) -> np.ndarray:
    values = json.loads(text)
    if not isinstance(values, dict):
        raise UsageError("--instance must be a JSON object of feature values")
    space = forest.space
    ordinal = {k: qd._ordinal_map(v) for k, v in (schema or {}).get("ordinal", {}).items()}
    x = np.zeros(len(space))
    seen = set()
    for i, f in enumerate(space.features):
        if f.kind == qd.ONEHOT:
            group = space.group_of(f.name)
            if group not in values:
                raise UsageError(f"instance misses categorical feature {group!r}")
            seen.add(group)
            x[i] = float(str(values[group]) == space.category_of(f.name))
            continue
        if f.name not in values:
            raise UsageError(f"instance misses feature {f.name!r}")
        seen.add(f.name)
        v = values[f.name]
        if f.name in ordinal and isinstance(v, str):
            v = ordinal[f.name][v]
        x[i] = space.to_internal(i, float(v))
    extra = set(values) - seen
    if extra:
        raise UsageError(f"unknown features in instance: {sorted(extra)}")
    return x


def cmd_explain(args) -> int:
    try:
        forest = Forest.load(args.model)
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise qd.SchemaError(f"bad model file: {exc}") from None
    if forest.space is None:
        raise qd.SchemaError("model file carries no feature space")
    cfg = _config(args)
    schema = None
    ds = None
    if args.data:
        raw, schema = _load_data(args.data, args.schema)
        ds = qd.prepare(raw, forest.space)
    elif args.schema:
        schema = qd.load_schema(args.schema)
    if args.instance is not None:
        x = _instance_from_json(args.instance, forest, schema)
    elif args.row is not None:
        if ds is None:
            raise UsageError("--row needs --data")
        if not 0 <= args.row < len(ds):
            raise UsageError(f"--row {args.row} out of range for {len(ds)} rows")
        x = ds.rows[args.row]
    else:
        raise UsageError("give --row or --instance")
    itemsets = None
    if cfg.kind == "subsets":
        if ds is None:
            raise UsageError("--strategy subsets needs --data for the training labelsets")
        itemsets = frequent_label_subsets(ds.labels, cfg.min_support)
    expl = explain(forest, x, cfg, itemsets=itemsets)
    out = expl.to_dict(forest, emit_paths=args.emit_paths)
    status = EXIT_OK
    if args.check:
        checks = []
        for k, rule in enumerate(expl.rules):
            rep = check_conclusiveness(rule, forest, x, args.check, seed=args.seed + k)
            entry = {"holds": rep.holds, "samples": rep.n_samples}
            if not rep.holds:
                entry["counterexample"] = {
                    n: forest.space.to_original(i, v)
                    for i, (n, v) in enumerate(zip(forest.space.names, rep.counterexample))}
                status = EXIT_VIOLATION
            checks.append(entry)
        out["conclusiveness"] = checks
    text = expl.to_text(forest) or "(no explanation: " + ", ".join(expl.flags) + ")"
    print(text)
    if args.out:
        Path(args.out).write_text(json.dumps(out, indent=2) + "\n")
    else:
        print()
        print(json.dumps(out, indent=2))
    if args.plot and expl.rules:
        from .plots import plot_rules
        plot_rules(expl.rules, forest.space, x, forest.label_names, args.plot)
    if status == EXIT_VIOLATION:
        print("conclusiveness violated", file=sys.stderr)
    return status


def cmd_evaluate(args) -> int:
    raw, _ = _load_data(args.data, args.schema)
    ds = qd.prepare(raw)
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    bad = [s for s in strategies if s not in KINDS]
    if bad or not strategies:
        raise UsageError(f"unknown strategies {bad}; choose from {KINDS}")
    if args.folds < 2:
        raise UsageError("--folds must be >= 2")
    if len(ds) < args.folds:
        raise UsageError(f"{len(ds)} rows cannot fill {args.folds} folds")
    result = evaluate(ds, strategies, folds=args.folds, seed=args.seed, n_trees=args.trees,
                      max_depth=args.depth, cfg=_config(args), precision_mode=args.precision_mode,
                      check_samples=args.check)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.csv").write_text(to_csv(result.rows))
    md = to_markdown(result.rows, f"{args.folds}-fold cross-validation, {args.trees} trees")
    (out / "metrics.md").write_text(md)
    print(md, end="")
    if not args.no_figures:
        from .plots import plot_metrics
        plot_metrics(result.rows, out / "metrics.png")
    print(f"wrote {out / 'metrics.csv'}")
    violations = sum(r.counterexamples for r in result.rows)
    if violations:
        print(f"{violations} conclusiveness counterexamples", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


# -------------------------------------------------------------------- parser


def _add_strategy_opts(p):
    p.add_argument("--max-subsets", type=_positive(int), default=None,
                   help="keep only the N best-supported label subsets")
    p.add_argument("--min-support", type=float, default=0.1)
    p.add_argument("--subset-min-size", type=_positive(int), default=2)
    p.add_argument("--config", help="JSON file with reduction.* keys")


def build_parser() -> argparse.ArgumentParser:
    seed = default_seed()
    parser = argparse.ArgumentParser(prog="qforest", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic AI4I-like dataset")
    p.add_argument("--n", type=_positive(int), default=339)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--out", required=True)
    p.add_argument("--schema", help="schema output path (default: <out>.schema.json)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train a forest and write it as JSON")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--trees", type=_positive(int), default=100)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("explain", help="explain one instance")
    p.add_argument("--model", required=True)
    p.add_argument("--data")
    p.add_argument("--schema")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--row", type=int)
    g.add_argument("--instance", help='JSON object in original units, e.g. \'{"Torque [Nm]": 65.3, ...}\'')
    p.add_argument("--strategy", choices=KINDS, default=PER_LABEL)
    _add_strategy_opts(p)
    p.add_argument("--emit-paths", action="store_true")
    p.add_argument("--check", type=int, default=0, metavar="N",
                   help="sample N perturbations per rule; exit 4 on a counterexample")
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--out", help="write the explanation JSON here instead of stdout")
    p.add_argument("--plot", help="render the rules' ranges to this image file")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("evaluate", help="k-fold L/C/P/T metrics")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--strategies", default="all,label,subsets")
    p.add_argument("--trees", type=_positive(int), default=100)
    p.add_argument("--depth", type=int, default=None)
    _add_strategy_opts(p)
    p.add_argument("--precision-mode", choices=(CONSEQUENT, LABELSET), default=CONSEQUENT)
    p.add_argument("--check", type=int, default=0, metavar="N")
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    try:
        parser = build_parser()
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, qd.SchemaError, qd.ParseError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
