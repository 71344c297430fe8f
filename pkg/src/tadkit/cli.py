"""Command-line interface.

Every command writes its primary output to ``--out`` (default stdout) and a
run manifest to ``--manifest`` (default ``<out>.manifest.json``, or stderr
when writing to stdout).  Options may also come from ``--config`` files of
``key = value`` lines; flags given on the command line win.  The default
seed is read from ``TADKIT_SEED``.

Exit codes: 0 success, 2 validation error, 3 infeasible request.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import os
import sys
from typing import Sequence

import numpy as np

from . import __version__
from ._validation import TadError, ValidationError
from .apps import (
    InterventionConfig,
    SynthWorldConfig,
    calibrate_support,
    generate_synth_world,
    intervention_from_accuracies,
    make_episodes,
    prototype_classifier_eval,
    run_intervention,
)
from .attributes import (
    AttributeSchema,
    CategoryProfile,
    FeatureRecord,
    aggregate_frequency,
    aggregate_majority,
    induce_profiles,
    load_annotations,
    load_attribute_table,
    load_features,
    load_schema,
    save_attribute_table,
    save_features,
    save_schema,
    validate_table,
)
from .bench import run_bench
from .distance import lemma1_check
from .episodes import (
    GENERATOR,
    EpisodeConfig,
    bin_accuracy_curve,
    fit_linear,
    make_rng,
    prune_classes,
    sample_tasks,
    scenario_compare,
    select_top_fraction,
)
from .io import dumps, load_accuracies, load_distances, load_tasks, run_manifest, save_tasks, write_jsonl
from .tad import TaskSpec, distance_matrix

SEED_ENV = "TADKIT_SEED"


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _read_config(path) -> dict:
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{n}: expected key = value")
            k, v = (s.strip() for s in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


class _Run:
    """Output and manifest handling for one command invocation."""

    def __init__(self, args, inputs=(), seeds=(), generator=None):
        self.args = args
        self.inputs = [p for p in inputs if p]
        self.seeds = list(seeds)
        self.generator = generator

    @contextlib.contextmanager
    def output(self, newline=None):
        out = self.args.out
        if out in (None, "-"):
            yield sys.stdout
        else:
            with open(out, "w", newline=newline) as fh:
                yield fh

    def finish(self, extra: dict | None = None):
        params = {k: v for k, v in vars(self.args).items() if k not in ("func", "config", "manifest", "out", "command")}
        m = run_manifest(self.args.command, params, self.inputs, self.seeds, self.generator, __version__)
        if extra:
            m.update(extra)
        target = self.args.manifest
        if target is None and self.args.out not in (None, "-"):
            target = self.args.out + ".manifest.json"
        if target is None:
            sys.stderr.write(dumps({"manifest": m}) + "\n")
        else:
            with open(target, "w") as fh:
                json.dump(m, fh, indent=2, sort_keys=True)
                fh.write("\n")
        return 0


def _schema_arg(args) -> AttributeSchema | None:
    return load_schema(args.schema) if getattr(args, "schema", None) else None


def _load_table(path, fmt="distribution-csv", schema=None):
    return load_attribute_table(path, fmt, schema)


# ---------------------------------------------------------------------- commands

def cmd_ingest(args):
    table = load_attribute_table(args.table, args.format, _schema_arg(args), args.pool_tag)
    problems = validate_table(table)
    if problems:
        raise ValidationError("; ".join(map(str, problems)))
    run = _Run(args, [args.table, args.schema])
    _emit_table(run, table)
    if args.schema_out:
        save_schema(table.schema, args.schema_out)
    return run.finish({"categories": len(table), "attributes": table.schema.n_attributes})


def _write_table(table, fh):
    w = csv.writer(fh)
    w.writerow(["category", "attribute", "value", "probability"])
    for cid, prof in table.profiles.items():
        for attr, dist in zip(table.schema.attributes, prof.distributions):
            for v, p in zip(attr.values, dist):
                w.writerow([cid, attr.id, v, repr(float(p))])


def _emit_table(run, table):
    with run.output(newline="") as fh:
        _write_table(table, fh)


def cmd_aggregate(args):
    anns, schema = load_annotations(args.annotations, _schema_arg(args))
    fn = aggregate_majority if args.mode == "majority" else aggregate_frequency
    table = fn(anns, schema, args.pool_tag)
    run = _Run(args, [args.annotations, args.schema])
    _emit_table(run, table)
    return run.finish()


def cmd_induce(args):
    feats = load_features(args.features)
    schema = _schema_arg(args)
    L = len(feats[0].scores) if feats else 0
    if schema is None:
        schema = AttributeSchema.binary(L) if args.bins is None else AttributeSchema(
            (f"a_{i + 1}", tuple(str(v) for v in range(args.bins))) for i in range(L))
    if args.bins is None:
        table = induce_profiles(feats, schema, "threshold", threshold=args.threshold, pool_tag=args.pool_tag)
    else:
        table = induce_profiles(feats, schema, "equal-width", n_bins=args.bins, pool_tag=args.pool_tag)
    run = _Run(args, [args.features, args.schema])
    _emit_table(run, table)
    return run.finish()


def _tables(args):
    schema = _schema_arg(args)
    table = _load_table(args.table, args.table_format, schema)
    novel = _load_table(args.novel_table, args.table_format, table.schema) if args.novel_table else None
    return table, novel


def cmd_tad(args):
    table, novel_table = _tables(args)
    pool = load_tasks(args.pool)
    novel = load_tasks(args.novel)
    means = distance_matrix(novel, pool, table, novel_table, args.variant, n_jobs=args.jobs, reduce="mean")
    D = distance_matrix(novel, pool, table, novel_table, args.variant, n_jobs=args.jobs) if args.per_pool else None
    run = _Run(args, [args.table, args.novel_table, args.pool, args.novel, args.schema])
    with run.output() as fh:
        for j, t in enumerate(novel):
            rec = {"task_id": t.task_id, "variant": args.variant, "mean_distance": float(means[j])}
            if D is not None:
                rec["per_pool"] = {p.task_id: float(d) for p, d in zip(pool, D[j])}
            write_jsonl([rec], fh)
    return run.finish()


def _class_pool(args) -> list[str]:
    if args.classes:
        with open(args.classes) as fh:
            return [line.strip() for line in fh if line.strip()]
    if args.table:
        return _load_table(args.table, args.table_format).categories
    raise ValidationError("need --classes or --table for the class pool")


def cmd_sample(args):
    pool = _class_pool(args)
    cfg = EpisodeConfig(args.ways, args.shots, args.queries, args.seed)
    tasks = sample_tasks(pool, cfg, args.num_tasks, stream=args.stream, pool_tag=args.pool_tag,
                         id_prefix=args.id_prefix)
    run = _Run(args, [args.classes, args.table], [args.seed], GENERATOR)
    with run.output() as fh:
        save_tasks(tasks, fh)
    return run.finish()


def cmd_analyze(args):
    dist = load_distances(args.distances)
    extra = {}
    rows_out = []
    if args.accuracies:
        acc = load_accuracies(args.accuracies)
        common = [t for t in dist if t in acc]
        if not common:
            raise ValidationError("no task ids shared by distances and accuracies")
        bins = bin_accuracy_curve([(dist[t], acc[t]) for t in common], args.bin_width, args.min_count)
        rows_out = [b.to_dict() for b in bins]
        try:
            extra["fit"] = fit_linear(bins).to_dict()
        except ValidationError as exc:
            extra["fit"] = {"error": str(exc)}
    if args.cross_distances:
        cross = load_distances(args.cross_distances)
        rep = scenario_compare(list(dist.values()), list(cross.values()))
        extra["scenario"] = rep.to_dict()
    run = _Run(args, [args.distances, args.accuracies, args.cross_distances])
    with run.output(newline="") as fh:
        if rows_out:
            w = csv.DictWriter(fh, fieldnames=list(rows_out[0]))
            w.writeheader()
            w.writerows(rows_out)
        else:
            fh.write(dumps(extra) + "\n")
    return run.finish({"summary": extra})


def cmd_select(args):
    dist = load_distances(args.distances)
    ids = select_top_fraction(sorted(dist.items()), args.fraction)
    run = _Run(args, [args.distances])
    with run.output() as fh:
        write_jsonl(({"task_id": i, "mean_distance": dist[i]} for i in ids), fh)
    return run.finish({"selected": len(ids), "total": len(dist)})


def cmd_prune(args):
    pool = _class_pool(args)
    tasks = load_tasks(args.tasks)
    keep = prune_classes(pool, tasks, args.top_k)
    run = _Run(args, [args.classes, args.table, args.tasks])
    with run.output() as fh:
        for c in keep:
            fh.write(c + "\n")
    return run.finish({"kept": len(keep), "dropped": len(pool) - len(keep)})


def _prototypes_from(path) -> dict[str, np.ndarray]:
    feats = load_features(path)
    sums: dict[str, list] = {}
    for f in feats:
        sums.setdefault(f.category_id, []).append(f.scores)
    return {c: np.mean(np.array(v), axis=0) for c, v in sums.items()}


def cmd_calibrate(args):
    table, novel_table = _tables(args)
    pool = load_tasks(args.pool)
    support = load_features(args.support)
    cats = list(dict.fromkeys(f.category_id for f in support))
    task = TaskSpec(args.task_id, tuple(cats), "novel")
    res = calibrate_support(task, [f.scores for f in support], [f.category_id for f in support], pool, table,
                            _prototypes_from(args.train_features), args.k_related, args.retain, args.alpha,
                            novel_table, args.variant)
    recs = [FeatureRecord(f.instance_id, f.category_id, tuple(np.clip(x, 0.0, 1.0)))
            for f, x in zip(support, res.X)]
    run = _Run(args, [args.table, args.novel_table, args.pool, args.support, args.train_features, args.schema])
    with run.output(newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["instance", "category", *[f"f_{i + 1}" for i in range(len(recs[0].scores))]])
        for r in recs:
            w.writerow([r.instance_id, r.category_id, *[repr(s) for s in r.scores]])
    return run.finish({"related_tasks": len(res.related_tasks),
                       "retained": {k: list(v) for k, v in res.retained.items()}})


def _world_from(path) -> SynthWorldConfig:
    with open(path) as fh:
        return SynthWorldConfig(**json.load(fh))


def cmd_evaluate(args):
    run = _Run(args, [args.support, args.query, args.world_config, args.tasks], [args.seed], GENERATOR)
    if args.world_config:
        if not args.tasks:
            raise ValidationError("--world-config needs --tasks")
        world = generate_synth_world(_world_from(args.world_config))
        tasks = load_tasks(args.tasks)
        eps = make_episodes(world, tasks, args.shots, args.queries, args.seed)
        with run.output() as fh:
            for ep in eps:
                r = prototype_classifier_eval(ep.support_X, ep.support_y, ep.query_X, ep.query_y,
                                              args.temperature, ep.task.category_ids)
                write_jsonl([{"task_id": ep.task.task_id, "accuracy": r.accuracy}], fh)
        return run.finish()
    if not (args.support and args.query):
        raise ValidationError("need --support and --query, or --world-config with --tasks")
    s = load_features(args.support)
    q = load_features(args.query)
    r = prototype_classifier_eval(s, None, q, None, args.temperature)
    with run.output() as fh:
        for rec, pred, prob in zip(q, r.predictions, r.probabilities):
            write_jsonl([{"instance": rec.instance_id, "category": rec.category_id, "predicted": str(pred),
                          "scores": dict(zip(r.categories, prob.tolist()))}], fh)
    return run.finish({"accuracy": r.accuracy})


def cmd_intervene(args):
    dist = load_distances(args.distances)
    ks = args.ks
    if args.world_config:
        world = generate_synth_world(_world_from(args.world_config))
        tasks = load_tasks(args.tasks) if args.tasks else None
        if tasks is None:
            raise ValidationError("--world-config needs --tasks")
        missing = [t.task_id for t in tasks if t.task_id not in dist]
        if missing:
            raise ValidationError(f"no distance for task {missing[0]!r}")
        cfg = InterventionConfig(args.threshold, args.budget, args.strategy, tuple(args.seeds), tuple(ks))
        reports = []
        for seed in cfg.seeds:
            eps = make_episodes(world, tasks, args.shots, args.queries, seed)
            reports.append(run_intervention(eps, [dist[t.task_id] for t in tasks],
                                            InterventionConfig(cfg.threshold_r, cfg.budget, cfg.strategy,
                                                               (seed,), cfg.ks)))
        per_seed = [r.per_seed[0] for r in reports]
        n = len(reports)
        out = {
            "acc_k_before": {str(k): sum(r.acc_k_before[k] for r in reports) / n for k in reports[0].acc_k_before},
            "acc_k_after": {str(k): sum(r.acc_k_after[k] for r in reports) / n for k in reports[0].acc_k_after},
            "intervened_fraction": reports[0].intervened_fraction,
            "per_seed": per_seed,
        }
        run = _Run(args, [args.distances, args.world_config, args.tasks], args.seeds, GENERATOR)
    else:
        if not args.accuracies:
            raise ValidationError("need --accuracies, or --world-config with --tasks")
        before = load_accuracies(args.accuracies)
        after = load_accuracies(args.after_accuracies) if args.after_accuracies else None
        out = intervention_from_accuracies(before, dist, args.threshold, after, ks).to_dict()
        run = _Run(args, [args.distances, args.accuracies, args.after_accuracies])
    with run.output() as fh:
        fh.write(dumps(out) + "\n")
    return run.finish()


def cmd_synth(args):
    cfg = SynthWorldConfig(
        num_classes=args.num_classes, n_attributes=args.attributes, profile_sparsity=args.sparsity,
        noise_sigma=args.noise_sigma, samples_per_class=args.samples_per_class, seed=args.seed,
        domains=args.domains, domain_bias=args.domain_bias, num_train_classes=args.num_train_classes,
        transfer_gain=args.transfer_gain)
    world = generate_synth_world(cfg)
    d = args.out_dir
    os.makedirs(d, exist_ok=True)
    save_attribute_table(world.table, os.path.join(d, "table.csv"), "binary-label-csv")
    save_schema(world.table.schema, os.path.join(d, "schema.json"))
    if not args.no_features:
        save_features(world.features, os.path.join(d, "features.csv"))
    with open(os.path.join(d, "world.json"), "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2)
    with open(os.path.join(d, "domains.json"), "w") as fh:
        json.dump({"domains": world.domains, "train": world.train_classes, "novel": world.novel_classes}, fh,
                  indent=2)
    args.out = os.path.join(d, "world.json")
    return _Run(args, [], [args.seed], GENERATOR).finish()


def cmd_lemma(args):
    run = _Run(args, [args.table, args.schema], [args.seed], GENERATOR)
    reports = []
    if args.table:
        table = _load_table(args.table, args.table_format, _schema_arg(args))
        pairs = [(args.category_a, args.category_b)] if args.category_a else \
            [(a, b) for i, a in enumerate(table.categories) for b in table.categories[i + 1:]]
        for a, b in pairs:
            r = lemma1_check(table[a], table[b])
            reports.append({"a": a, "b": b, **r.to_dict()})
    else:
        rng = make_rng(args.seed)
        for i in range(args.random):
            L = int(rng.integers(1, args.max_attributes + 1))
            pa, pb = rng.random(L), rng.random(L)
            prof = [CategoryProfile(n, tuple(np.array([1 - x, x]) for x in p)) for n, p in (("a", pa), ("b", pb))]
            r = lemma1_check(*prof)
            reports.append({"trial": i, "L": L, **r.to_dict()})
    with run.output() as fh:
        write_jsonl(reports, fh)
    failed = sum(not r["holds"] for r in reports)
    run.finish({"checked": len(reports), "violations": failed})
    return 0 if failed == 0 else 1


def cmd_bench(args):
    if args.table:
        table = _load_table(args.table, args.table_format, _schema_arg(args))
    else:
        table = generate_synth_world(SynthWorldConfig(num_classes=max(args.ways) * 2, n_attributes=args.attributes,
                                                      samples_per_class=1, seed=args.seed)).table
    recs = run_bench(table, args.ways, args.repetitions, args.seed, args.pairs)
    run = _Run(args, [args.table, args.schema], [args.seed], GENERATOR)
    with run.output() as fh:
        write_jsonl((r.to_dict() for r in recs), fh)
    return run.finish()


# ----------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tadkit", description="Task Attribute Distance toolkit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        sp = sub.add_parser(name, help=help)
        sp.set_defaults(func=func)
        sp.add_argument("--config", help="key = value file; command-line flags override it")
        sp.add_argument("--out", default="-", help="output path (default stdout)")
        sp.add_argument("--manifest", help="run manifest path (default <out>.manifest.json)")
        return sp

    def table_opts(sp, required=True):
        sp.add_argument("--table", required=required, help="attribute table (training pool)")
        sp.add_argument("--table-format", default="distribution-csv",
                        choices=["distribution-csv", "binary-label-csv"])
        sp.add_argument("--schema", help="schema JSON")

    sp = add("ingest", cmd_ingest, "validate an attribute table and rewrite it as distribution CSV")
    sp.add_argument("--table", required=True)
    sp.add_argument("--format", default="distribution-csv", choices=["distribution-csv", "binary-label-csv"])
    sp.add_argument("--schema")
    sp.add_argument("--schema-out")
    sp.add_argument("--pool-tag")

    sp = add("aggregate", cmd_aggregate, "category tables from instance annotations")
    sp.add_argument("--annotations", required=True)
    sp.add_argument("--schema")
    sp.add_argument("--mode", default="majority", choices=["majority", "frequency"])
    sp.add_argument("--pool-tag", default="")

    sp = add("induce", cmd_induce, "category tables from predicted attribute scores")
    sp.add_argument("--features", required=True)
    sp.add_argument("--schema")
    sp.add_argument("--threshold", type=float, default=0.5)
    sp.add_argument("--bins", type=int, help="equal-width bins instead of thresholding")
    sp.add_argument("--pool-tag", default="induced")

    sp = add("tad", cmd_tad, "mean task distance of novel tasks to a training pool")
    table_opts(sp)
    sp.add_argument("--novel-table", help="table for novel categories (default --table)")
    sp.add_argument("--pool", required=True, help="training tasks JSONL")
    sp.add_argument("--novel", required=True, help="novel tasks JSONL")
    sp.add_argument("--variant", default="approx", choices=["orig", "approx"])
    sp.add_argument("--per-pool", action="store_true")
    sp.add_argument("--jobs", type=int, default=None)

    sp = add("sample", cmd_sample, "sample N-way tasks from a class pool")
    table_opts(sp, required=False)
    sp.add_argument("--classes", help="file with one category id per line")
    sp.add_argument("--ways", type=int, default=5)
    sp.add_argument("--shots", type=int, default=1)
    sp.add_argument("--queries", type=int, default=15)
    sp.add_argument("--num-tasks", type=int, default=100)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--stream", type=int, default=0)
    sp.add_argument("--pool-tag", default="")
    sp.add_argument("--id-prefix", default="task")

    sp = add("analyze", cmd_analyze, "distance/accuracy bins, linear fit, scenario comparison")
    sp.add_argument("--distances", required=True)
    sp.add_argument("--accuracies")
    sp.add_argument("--cross-distances")
    sp.add_argument("--bin-width", type=float, default=0.01)
    sp.add_argument("--min-count", type=int, default=5)

    sp = add("select", cmd_select, "novel tasks with the largest distances")
    sp.add_argument("--distances", required=True)
    sp.add_argument("--fraction", type=float, default=0.05)

    sp = add("prune-classes", cmd_prune, "drop the most frequent classes of a task set")
    table_opts(sp, required=False)
    sp.add_argument("--classes")
    sp.add_argument("--tasks", required=True)
    sp.add_argument("--top-k", type=int, default=36)

    sp = add("calibrate", cmd_calibrate, "prototype calibration of a novel support set")
    table_opts(sp)
    sp.add_argument("--novel-table")
    sp.add_argument("--pool", required=True)
    sp.add_argument("--support", required=True, help="novel support features CSV")
    sp.add_argument("--train-features", required=True, help="training features CSV (prototype source)")
    sp.add_argument("--task-id", default="novel")
    sp.add_argument("--k-related", type=int, default=200)
    sp.add_argument("--retain", type=int, default=5)
    sp.add_argument("--alpha", type=float, default=0.5)
    sp.add_argument("--variant", default="approx", choices=["orig", "approx"])

    sp = add("evaluate", cmd_evaluate, "attribute-prototype classifier accuracy")
    sp.add_argument("--support")
    sp.add_argument("--query")
    sp.add_argument("--world-config", help="synthetic world JSON (with --tasks)")
    sp.add_argument("--tasks")
    sp.add_argument("--shots", type=int, default=1)
    sp.add_argument("--queries", type=int, default=15)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--temperature", type=float, default=1.0)

    sp = add("intervene", cmd_intervene, "test-time intervention with worst-K accuracy")
    sp.add_argument("--distances", required=True)
    sp.add_argument("--accuracies", help="per-task accuracies before intervention (external mode)")
    sp.add_argument("--after-accuracies", help="per-task accuracies after intervention (external mode)")
    sp.add_argument("--world-config", help="synthetic world JSON (synthetic mode)")
    sp.add_argument("--tasks")
    sp.add_argument("--shots", type=int, default=5)
    sp.add_argument("--queries", type=int, default=15)
    sp.add_argument("--threshold", type=float, default=0.18)
    sp.add_argument("--budget", type=int, default=25)
    sp.add_argument("--strategy", default="balanced", choices=["balanced", "imbalanced"])
    sp.add_argument("--seeds", type=_int_list, default=[0])
    sp.add_argument("--ks", type=_int_list, default=[5, 10, 20, 60, 120])

    sp = add("synth", cmd_synth, "generate a synthetic attribute world")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--num-classes", type=int, default=40)
    sp.add_argument("--num-train-classes", type=int, default=None)
    sp.add_argument("--attributes", type=int, default=32)
    sp.add_argument("--sparsity", type=float, default=0.5)
    sp.add_argument("--noise-sigma", type=float, default=0.1)
    sp.add_argument("--samples-per-class", type=int, default=100)
    sp.add_argument("--domains", type=int, default=1)
    sp.add_argument("--domain-bias", type=float, default=0.0)
    sp.add_argument("--transfer-gain", type=float, default=0.0)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--no-features", action="store_true")

    sp = add("lemma-check", cmd_lemma, "check the joint-space L1 bound on profile pairs")
    table_opts(sp, required=False)
    sp.add_argument("--category-a")
    sp.add_argument("--category-b")
    sp.add_argument("--random", type=int, default=1000, help="random binary pairs when no table is given")
    sp.add_argument("--max-attributes", type=int, default=10)
    sp.add_argument("--seed", type=int, default=None)

    sp = add("bench", cmd_bench, "timing of exact vs approximate distance by task size")
    table_opts(sp, required=False)
    sp.add_argument("--ways", type=_int_list, default=[5, 10, 20])
    sp.add_argument("--repetitions", type=int, default=7)
    sp.add_argument("--pairs", type=int, default=20)
    sp.add_argument("--attributes", type=int, default=32)
    sp.add_argument("--seed", type=int, default=None)
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        cfg = _read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sub._actions}
        defaults = {}
        for k, v in cfg.items():
            if k not in known:
                raise ValidationError(f"{args.config}: unknown option {k!r} for {args.command}")
            action = known[k]
            if action.type is not None:
                v = action.type(v)
            elif isinstance(action, argparse._StoreTrueAction):
                v = v.lower() in ("1", "true", "yes", "on")
            defaults[k] = v
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    if hasattr(args, "seed") and args.seed is None:
        args.seed = _default_seed()
    return args


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _apply_config(parser, argv)
        return args.func(args)
    except TadError as exc:
        sys.stderr.write(f"tadkit: error: {exc}\n")
        return exc.exit_code
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        sys.stderr.write(f"tadkit: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
