"""Command line interface: ``nepclust <subcommand> ...``."""
import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from .datagen import SynthConfig, gen_sphere_mixture
from .early_stop import STATS_MODES, ending_stats_sweep
from .exceptions import NepClustError, ParameterError, StageError
from .features import load_features, load_labels, normalize, save_features, save_labels
from .knn import load_knn, save_knn
from .metrics import evaluate
from .nep import compute_all_nep, dump_tsv
from .pipeline import PROFILES, PipelineConfig, cluster_es, cluster_eser, knn_stage, stage, train_on
from .recall import load_predictor, post_stop_positive_stats, save_predictor

logger = logging.getLogger("nepclust")

CONFIG_FLAGS = {
    "k": int,
    "tau": float,
    "theta": float,
    "delta": float,
    "eta": float,
    "merge_rule": str,
    "seed": int,
    "threads": int,
    "epochs": int,
    "learning_rate": float,
    "features": str,
    "labels": str,
    "n": int,
    "d": int,
    "model": str,
    "train": str,
    "knn_cache": str,
}


def _add_config_flags(p):
    p.add_argument("--config", help="flat JSON config file")
    p.add_argument("--profile", choices=sorted(PROFILES))
    for name, typ in CONFIG_FLAGS.items():
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None)
    p.add_argument("--nep-literal", action="store_true", default=None)
    p.add_argument("--recall-on-similarity", action="store_true", default=None)
    p.add_argument("--out", default=None)


def config_from_args(args, **fixed):
    overrides = {name: getattr(args, name) for name in list(CONFIG_FLAGS) + ["nep_literal", "recall_on_similarity", "out"]}
    overrides = {k: v for k, v in overrides.items() if v is not None}
    overrides.update(fixed)
    if args.config:
        if args.profile:
            overrides = {**PROFILES[args.profile], **overrides}
        return PipelineConfig.from_file(args.config, **overrides)
    if args.profile:
        return PipelineConfig.from_profile(args.profile, **overrides)
    return PipelineConfig(**overrides)


def _require(value, flag):
    if value is None:
        raise ParameterError(f"{flag} is required")
    return value


def _features(cfg):
    with stage("load"):
        return normalize(load_features(_require(cfg.features, "--features"), cfg.n, cfg.d))


def _labels(path, n):
    with stage("load"):
        labels = load_labels(path)
        if labels.size != n:
            raise ParameterError(f"{path}: {labels.size} labels for {n} samples")
    return labels


def _knn(cfg, fs):
    """Load the KNN cache when present and compatible, else build (and save) it."""
    if cfg.knn_cache and os.path.exists(cfg.knn_cache):
        with stage("knn_cache"):
            knn = load_knn(cfg.knn_cache)
            if knn.n != fs.n or knn.k != cfg.k:
                raise ParameterError(f"cache {cfg.knn_cache} has n={knn.n}, k={knn.k}; expected n={fs.n}, k={cfg.k}")
        return knn
    knn = knn_stage(fs, cfg)
    if cfg.knn_cache:
        save_knn(knn, cfg.knn_cache)
    return knn


def _write_json(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _outdir(cfg):
    out = _require(cfg.out, "--out")
    os.makedirs(out, exist_ok=True)
    return out


def _finish_cluster(cfg, fs, result, out):
    part = result.partition
    part.save(os.path.join(out, "partition.txt"))
    result.des.to_tsv(os.path.join(out, "edges_es.tsv"))
    summary = {"n": fs.n, "num_clusters": part.num_clusters, "codelength": part.codelength, "early_stop_edges": len(result.des)}
    if result.accepted is not None:
        result.accepted.to_tsv(os.path.join(out, "edges_recalled.tsv"))
        summary["recall_candidates"] = len(result.candidates)
        summary["recalled_edges"] = len(result.accepted)
    _write_json(summary, os.path.join(out, "summary.json"))
    if cfg.labels:
        rep = evaluate(part.labels, _labels(cfg.labels, fs.n))
        _write_json(rep.to_dict(), os.path.join(out, "metrics.json"))
        print(rep.to_table())
    print(f"{part.num_clusters} clusters written to {os.path.join(out, 'partition.txt')}")


def cmd_synth(args):
    cfg = SynthConfig(
        num_clusters=args.num_clusters,
        size_min=args.size_min,
        size_max=args.size_max,
        d=args.dim,
        noise_sigma=args.noise_sigma,
        min_center_cosine_gap=args.gap,
        seed=args.seed,
    )
    fs, labels = gen_sphere_mixture(cfg)
    os.makedirs(args.out, exist_ok=True)
    save_features(fs, os.path.join(args.out, "features.bin"))
    save_labels(labels, os.path.join(args.out, "labels.txt"))
    print(f"wrote {fs.n} x {fs.d} features, {cfg.num_clusters} clusters to {args.out}")


def cmd_knn(args):
    cfg = config_from_args(args)
    fs = _features(cfg)
    knn = knn_stage(fs, cfg)
    save_knn(knn, _require(cfg.out, "--out"))
    print(f"KNN graph n={knn.n} k={knn.k} written to {cfg.out}")


def cmd_nep(args):
    cfg = config_from_args(args)
    knn = load_knn(cfg.knn_cache) if cfg.knn_cache and not cfg.features else _knn(cfg, _features(cfg))
    with stage("nep"):
        nep = compute_all_nep(knn, cfg.tau, literal=cfg.nep_literal)
    dump_tsv(nep, _require(cfg.out, "--out"))
    print(f"edge probabilities for {knn.n * knn.k} KNN edges written to {cfg.out}")


def cmd_cluster(args):
    cfg = config_from_args(args, mode="es").validate()
    fs = _features(cfg)
    out = _outdir(cfg)
    result = cluster_es(_knn(cfg, fs), cfg)
    _finish_cluster(cfg, fs, result, out)


def _train_model(cfg, fs, labels):
    model = train_on(fs, labels, cfg)
    logger.info("predictor weights %s bias %.4f", np.round(model.coef_, 4).tolist(), model.intercept_)
    return model


def cmd_train(args):
    cfg = config_from_args(args)
    fs = _features(cfg)
    labels = _labels(_require(cfg.labels, "--labels"), fs.n)
    model = _train_model(cfg, fs, labels)
    save_predictor(model, _require(cfg.model, "--model"))
    print(f"predictor trained on {fs.n} samples written to {cfg.model}")


def cmd_recall_cluster(args):
    cfg = config_from_args(args, mode="eser").validate()
    fs = _features(cfg)
    out = _outdir(cfg)
    if cfg.model and os.path.exists(cfg.model):
        with stage("model"):
            model = load_predictor(cfg.model)
    else:
        train_dir = _require(cfg.train, "--train (or an existing --model)")
        train_cfg = PipelineConfig(**{**cfg.to_dict(), "features": os.path.join(train_dir, "features.bin"), "n": None, "d": None, "knn_cache": None})
        train_fs = _features(train_cfg)
        model = _train_model(cfg, train_fs, _labels(os.path.join(train_dir, "labels.txt"), train_fs.n))
        if cfg.model:
            save_predictor(model, cfg.model)
    result = cluster_eser(_knn(cfg, fs), cfg, model)
    _finish_cluster(cfg, fs, result, out)


def cmd_evaluate(args):
    pred = load_labels(args.pred)
    gt = load_labels(args.labels)
    rep = evaluate(pred, gt)
    print(rep.to_table())
    if args.out:
        _write_json(rep.to_dict(), args.out)


def cmd_report(args):
    cfg = config_from_args(args)
    fs = _features(cfg)
    labels = _labels(_require(cfg.labels, "--labels"), fs.n)
    thresholds = [float(t) for t in args.thresholds.split(",")] if args.thresholds else [cfg.theta]
    knn = _knn(cfg, fs)
    nep = compute_all_nep(knn, cfg.tau, literal=cfg.nep_literal)
    if args.kind == "ending_stats":
        rows = ending_stats_sweep(nep, labels, thresholds)
        if args.stats_mode:
            keep = {"threshold", args.stats_mode} | ({"raw_similarity_matched"} if args.stats_mode == "raw_similarity" else set())
            rows = [{k: v for k, v in r.items() if k in keep} for r in rows]
    else:
        rows = [post_stop_positive_stats(nep, labels, t) for t in thresholds]
    _write_json({"kind": args.kind, "k": cfg.k, "tau": cfg.tau, "rows": rows}, cfg.out)


def build_parser():
    parser = argparse.ArgumentParser(prog="nepclust", description="Embedding clustering with early stopping and edge recall")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic labeled feature set")
    p.add_argument("--out", required=True)
    defaults = SynthConfig()
    p.add_argument("--num-clusters", type=int, default=defaults.num_clusters)
    p.add_argument("--size-min", type=int, default=defaults.size_min)
    p.add_argument("--size-max", type=int, default=defaults.size_max)
    p.add_argument("--dim", type=int, default=defaults.d)
    p.add_argument("--noise-sigma", type=float, default=defaults.noise_sigma)
    p.add_argument("--gap", type=float, default=defaults.min_center_cosine_gap)
    p.add_argument("--seed", type=int, default=defaults.seed)
    p.set_defaults(func=cmd_synth)

    for name, func, help_text in (
        ("knn", cmd_knn, "build and save the KNN graph cache"),
        ("nep", cmd_nep, "dump edge probabilities as TSV"),
        ("cluster", cmd_cluster, "FC-ES clustering"),
        ("train", cmd_train, "train the linkage predictor"),
        ("recall-cluster", cmd_recall_cluster, "FC-ESER clustering"),
        ("report", cmd_report, "ending-position / post-stop diagnostics"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_config_flags(p)
        if name == "report":
            p.add_argument("--kind", choices=("ending_stats", "post_stop_stats"), required=True)
            p.add_argument("--thresholds", help="comma-separated threshold list (default: theta)")
            p.add_argument("--stats-mode", choices=STATS_MODES)
        p.set_defaults(func=func)

    p = sub.add_parser("evaluate", help="score a partition file against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    start = time.perf_counter()
    try:
        args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NepClustError, OSError, ValueError) as exc:
        print(f"error: [{args.command}] {exc}", file=sys.stderr)
        return 2
    logger.info("%s finished in %.2fs", args.command, time.perf_counter() - start)
    return 0


if __name__ == "__main__":
    sys.exit(main())
