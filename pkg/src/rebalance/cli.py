"""Command-line front end.

Settings resolve in this order: command-line flag, ``--config`` file
(INI, section ``[rebalance]``), the ``REBALANCE_SEED`` environment variable
(seed only), built-in default.  Recognised config keys:

    seed, folds, population, max_iter, inertia, c1, c2, v_max, inner_folds,
    archive_cap, n_members, n_iterations, search_members, cost_fp, cost_fn,
    subsets, rus_rate, out_dir
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import harness
from .baselines import SWEEP_RATES, SweepSpec, undersample_sweep
from .bpso import SwarmConfig
from .data_io import (
    BUNDLED_DATASETS,
    DatasetError,
    bundled_path,
    imbalance_ratio,
    load_dataset,
    partition_classes,
    serialize_keel,
)
from .learners import CostMatrix, LearnerSpec

_INT_KEYS = {"seed", "folds", "population", "max_iter", "inner_folds", "archive_cap", "n_members",
             "n_iterations", "search_members", "subsets"}
_FLOAT_KEYS = {"inertia", "c1", "c2", "v_max", "cost_fp", "cost_fn", "rus_rate"}
_STR_KEYS = {"out_dir"}


def read_config(path: str | None) -> dict:
    if not path:
        return {}
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise SystemExit(f"error: cannot read config file {path}")
    if not cp.has_section("rebalance"):
        raise SystemExit(f"error: {path} has no [rebalance] section")
    out = {}
    for key, raw in cp.items("rebalance"):
        if key in _INT_KEYS:
            out[key] = None if raw.strip().lower() in ("", "none") else int(raw)
        elif key in _FLOAT_KEYS:
            out[key] = float(raw)
        elif key in _STR_KEYS:
            out[key] = raw
        else:
            raise SystemExit(f"error: unknown config key {key!r} in {path}")
    return out


def _pick(args, cfg: dict, key: str, default):
    val = getattr(args, key, None)
    if val is not None:
        return val
    if key in cfg:
        return cfg[key]
    if key == "seed" and os.environ.get("REBALANCE_SEED"):
        return int(os.environ["REBALANCE_SEED"])
    return default


def build_config(args, method: str = "dt", desk: bool = False) -> harness.RunConfig:
    cfg = read_config(getattr(args, "config", None))
    sw_default = SwarmConfig()
    pop_default = harness.DESK_SWARM["population"] if desk else sw_default.population
    iter_default = harness.DESK_SWARM["max_iter"] if desk else sw_default.max_iter
    swarm = SwarmConfig(
        population=_pick(args, cfg, "population", pop_default),
        max_iter=_pick(args, cfg, "max_iter", iter_default),
        inertia=_pick(args, cfg, "inertia", sw_default.inertia),
        c1=_pick(args, cfg, "c1", sw_default.c1),
        c2=_pick(args, cfg, "c2", sw_default.c2),
        v_max=_pick(args, cfg, "v_max", sw_default.v_max),
        inner_folds=_pick(args, cfg, "inner_folds", sw_default.inner_folds),
        archive_cap=_pick(args, cfg, "archive_cap", sw_default.archive_cap),
    )
    return harness.RunConfig(
        method=method,
        folds=_pick(args, cfg, "folds", 10),
        seed=_pick(args, cfg, "seed", 0),
        swarm=swarm,
        n_members=_pick(args, cfg, "n_members", 50),
        n_iterations=_pick(args, cfg, "n_iterations", 100),
        search_members=_pick(args, cfg, "search_members", harness.DESK_SEARCH_MEMBERS if desk else None),
        costs=CostMatrix(_pick(args, cfg, "cost_fp", 50.0), _pick(args, cfg, "cost_fn", 5.0)),
        subsets=_pick(args, cfg, "subsets", 100),
        rus_rate=_pick(args, cfg, "rus_rate", 0.75),
    )


def _load(path: str, class_col: int | None):
    try:
        return load_dataset(path, class_col=class_col)
    except DatasetError as exc:
        raise SystemExit(f"error: {path}: {exc}")
    except OSError as exc:
        raise SystemExit(f"error: {exc}")


def cmd_inspect(args) -> int:
    ds = _load(args.file, args.class_col)
    part = partition_classes(ds)
    print(f"dataset: {ds.name}")
    print(f"relation: {ds.relation}")
    print(f"#Samples: {len(ds)}")
    print(f"Maj: {part.n_majority} ({ds.class_names[0]})")
    print(f"Min: {part.n_minority} ({ds.class_names[1]})")
    print(f"Imbalance ratio: {imbalance_ratio(ds):.2f}")
    print("attributes:")
    for a in ds.attributes:
        extra = "{" + ",".join(a.nominal_values) + "}" if a.kind == "nominal" else ""
        print(f"  {a.name}: {a.kind}{extra}")
    return 0


def cmd_eval(args) -> int:
    ds = _load(args.data, args.class_col)
    config = build_config(args, method=args.method)
    cell = harness.evaluate(ds, config)
    text = harness.write_csv(Path(args.out) if args.out else None, harness.RESULT_HEADER, [harness.result_row(cell)])
    print(f"{ds.name} {config.method} seed={config.seed} folds={config.folds}")
    print(harness.format_report(cell.report))
    if not args.out:
        sys.stdout.write(text)
    return 0


def cmd_sweep(args) -> int:
    ds = _load(args.data, args.class_col)
    config = build_config(args)
    rates = tuple(float(r) for r in args.rates.split(",")) if args.rates else SWEEP_RATES
    spec = SweepSpec(rates=rates, trials=args.trials, seed=config.seed, folds=config.folds)
    rows = undersample_sweep(ds, spec, LearnerSpec(args.learner, n_members=config.n_members))
    header = ["rate", "mean_tpr", "mean_tnr", "mean_product", "integrity", "post_ratio"]
    body = [[repr(getattr(r, h)) for h in header] for r in rows]
    text = harness.write_csv(Path(args.out) if args.out else None, header, body)
    if not args.out:
        sys.stdout.write(text)
    return 0


def cmd_experiment(args) -> int:
    desk = args.desk_scale
    config = build_config(args, desk=desk)
    names = args.datasets.split(",") if args.datasets else list(harness.DESK_DATASETS if desk else BUNDLED_DATASETS)
    datasets = []
    for name in names:
        path = Path(args.data_dir) / f"{name}.dat" if args.data_dir else bundled_path(name)
        datasets.append(_load(str(path), None))
    if args.seeds:
        seeds = tuple(int(s) for s in args.seeds.split(","))
    elif desk:
        seeds = tuple(config.seed + i for i in range(3))
    else:
        seeds = (config.seed,)
    methods = tuple(args.methods.split(",")) if args.methods else None
    out_dir = Path(_pick(args, read_config(args.config), "out_dir", "results"))

    def progress(cell):
        status = harness.format_report(cell.report) if cell.report else f"ERROR {cell.error}"
        print(f"[{cell.dataset} {cell.method} seed={cell.seed}] {status}", flush=True)

    harness.run_experiment(args.which, datasets, config, out_dir, seeds, methods, progress)
    print(f"wrote results_exp{args.which}.csv, summary_mean.csv, summary_std.csv to {out_dir}")
    return 0


def cmd_rebalance(args) -> int:
    if args.method not in harness.SWARM_METHODS:
        raise SystemExit(f"error: rebalance needs a swarm method ({', '.join(harness.SWARM_METHODS)})")
    ds = _load(args.data, args.class_col)
    config = build_config(args, method=args.method)
    res = harness.search(ds, config, config.seed)
    Path(args.out).write_text(serialize_keel(res.rebalanced))
    obj = res.final.objectives
    print(
        f"kept {res.final.popcount} of {partition_classes(ds).n_majority} majority rows "
        f"(integrity {obj.integrity:.2f}, fitness {obj.fitness:.2f}); wrote {args.out}"
    )
    return 0


def _add_common(p: argparse.ArgumentParser, swarm: bool = True) -> None:
    p.add_argument("--config", help="INI file with a [rebalance] section")
    p.add_argument("--seed", type=int, default=None, help="global seed (default: $REBALANCE_SEED or 0)")
    p.add_argument("--folds", type=int, default=None, help="outer CV folds (default 10)")
    p.add_argument("--n-members", dest="n_members", type=int, default=None)
    p.add_argument("--n-iterations", dest="n_iterations", type=int, default=None)
    if swarm:
        p.add_argument("--pop", dest="population", type=int, default=None, help="swarm population")
        p.add_argument("--iter", dest="max_iter", type=int, default=None, help="swarm iterations")
        p.add_argument("--inertia", type=float, default=None)
        p.add_argument("--inner-folds", dest="inner_folds", type=int, default=None)
        p.add_argument("--search-members", dest="search_members", type=int, default=None,
                       help="ensemble size while searching (final model keeps --n-members)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rebalance", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", help="print class counts, ratio and schema")
    p.add_argument("file")
    p.add_argument("--class-col", dest="class_col", type=int, default=None, help="class column for headerless CSV")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("eval", help="cross-validate one method on one dataset")
    p.add_argument("--method", required=True, choices=harness.METHODS)
    p.add_argument("--data", required=True)
    p.add_argument("--class-col", dest="class_col", type=int, default=None)
    p.add_argument("--out", help="write the result row as CSV here")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="random under-sampling sweep over a rate grid")
    p.add_argument("--data", required=True)
    p.add_argument("--class-col", dest="class_col", type=int, default=None)
    p.add_argument("--rates", help="comma-separated descending rates (default: 20-rate grid)")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--learner", default="dt", choices=["dt", "bagging", "adab", "adac", "cost"])
    p.add_argument("--out")
    _add_common(p, swarm=False)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("experiment", help="run experiment 1 or 2 and write all tables")
    p.add_argument("--which", type=int, required=True, choices=[1, 2])
    p.add_argument("--data-dir", dest="data_dir", help="directory of <name>.dat files (default: bundled)")
    p.add_argument("--datasets", help="comma-separated dataset names")
    p.add_argument("--desk-scale", dest="desk_scale", action="store_true",
                   help="pop 20, iter 30, haberman/pima/poker-9_vs_7, 3 seeds, 10-member search ensembles")
    p.add_argument("--seeds", help="comma-separated seeds")
    p.add_argument("--methods", help="comma-separated subset of the experiment's methods")
    p.add_argument("--out-dir", dest="out_dir", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("rebalance", help="search a mask on the whole dataset and write it as KEEL")
    p.add_argument("--method", required=True, choices=harness.SWARM_METHODS)
    p.add_argument("--data", required=True)
    p.add_argument("--class-col", dest="class_col", type=int, default=None)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_rebalance)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
