"""Command-line front end: training runs, ablation sweeps, baseline runs,
standalone scoring, and machine-readable outputs.

Outputs per run directory: assignments.tsv (doc_id, cluster, max_prob for
the first seed), metrics.json (the run record), run.log (human-readable
log including timing), and ablation.json for sweeps. Per-epoch progress
goes to stderr. Exit codes: 0 success, 1 validation/IO error, 2 numeric
failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .corpus import PreprocessOptions, load_corpus_file, load_labels, preprocess
from .metrics import score_labels
from .stopwords import load_stopwords
from .trainer import ClusterResult, TrainConfig, baseline_kmeans_tfidf, train

CLI_MODES = ("arl", "arl-adv", "arl-random", "arl-adv-word", "kmeans-tfidf")

# Ablation sweep: the full model against its variants, keyed by the
# conventional variant names.
ABLATION_VARIANTS = (
    ("ARL", {"mode": "arl"}),
    ("ARL-Adv", {"mode": "arl-adv"}),
    ("ARL-Random", {"mode": "arl-random"}),
    ("ARL-Adv(word)", {"mode": "arl-adv-word"}),
    ("ARL-Adv(no train w)", {"mode": "arl-adv", "train_w": False}),
    ("ARL-Adv(no train c)", {"mode": "arl-adv", "train_c": False}),
    ("ARL-Adv w/o L1", {"mode": "arl-adv", "use_l1": False}),
    ("ARL-Adv w/o L2", {"mode": "arl-adv", "use_l2": False}),
)

# name -> (parser, built-in default); single source of truth for the
# flag > config-file > default precedence chain.
def _parse_bool(text: str) -> bool:
    lowered = str(text).strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_OPTION_SPECS: dict[str, tuple] = {
    # training
    "mode": (str, "arl-adv"),
    "embedding_dim": (int, 300),
    "batch_size": (int, 64),
    "alpha": (float, 1.0),
    "epsilon": (float, 50.0),
    "gamma": (float, 1.0),
    "neg_count": (int, 5),
    "epochs": (int, 600),
    "learning_rate": (float, 0.03),
    "adam_beta1": (float, 0.9),
    "adam_beta2": (float, 0.999),
    "adam_eps": (float, 1e-8),
    "init_scale": (float, 2.0),
    "kmeans_init": (_parse_bool, True),
    "kmeans_restarts": (int, 10),
    "train_w": (_parse_bool, True),
    "train_c": (_parse_bool, True),
    "use_l1": (_parse_bool, True),
    "use_l2": (_parse_bool, True),
    "early_stop": (_parse_bool, False),
    # preprocessing
    "min_freq": (int, 5),
    "lowercase": (_parse_bool, True),
    "remove_stopwords": (_parse_bool, True),
    "remove_irregular": (_parse_bool, True),
    "stem": (_parse_bool, True),
    "stopword_file": (str, None),
    # run-level
    "seeds": (str, None),
    "embeddings": (str, None),
    "out": (str, "arlclust_out"),
}

_TRAIN_KEYS = (
    "mode embedding_dim batch_size alpha epsilon gamma neg_count epochs "
    "learning_rate adam_beta1 adam_beta2 adam_eps init_scale kmeans_init "
    "kmeans_restarts train_w train_c use_l1 use_l2 early_stop"
).split()


@dataclass
class RunRecord:
    """Everything needed to reproduce and compare one (possibly multi-seed)
    run; wall-clock time is reported in run.log, not metrics.json, so the
    JSON is byte-stable across identical invocations."""

    config: dict
    seeds: list
    per_seed: list
    metrics_mean: Optional[dict]
    metrics_std: Optional[dict]
    dropped_documents: int
    wall_clock_seconds: float

    def to_json_dict(self) -> dict:
        record = dataclasses.asdict(self)
        record.pop("wall_clock_seconds")
        return record


def _add_cluster_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--corpus", required=True, help="corpus file, one document per line")
    sub.add_argument("--clusters", required=True, type=int, help="number of clusters M")
    sub.add_argument("--labels", help="gold label file, one integer per original line")
    sub.add_argument("--config", help="key=value config file; flags override it")
    sub.add_argument("--ablate", action="store_true",
                     help="run the full ablation sweep instead of one mode")
    sub.add_argument("--mode", choices=CLI_MODES, default=None)
    sub.add_argument("--seeds", default=None, help='comma list, e.g. "1,2,3"')
    sub.add_argument("--embeddings", default=None, help="word2vec-format text file")
    sub.add_argument("--out", default=None, help="output directory")
    sub.add_argument("--stopword-file", dest="stopword_file", default=None)
    for name in ("embedding_dim", "batch_size", "neg_count", "epochs",
                 "kmeans_restarts", "min_freq"):
        sub.add_argument(f"--{name.replace('_', '-')}", dest=name, type=int, default=None)
    for name in ("alpha", "epsilon", "gamma", "learning_rate", "adam_beta1",
                 "adam_beta2", "adam_eps", "init_scale"):
        sub.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float, default=None)
    for name in ("kmeans_init", "train_w", "train_c", "use_l1", "use_l2",
                 "early_stop", "lowercase", "remove_stopwords",
                 "remove_irregular", "stem"):
        sub.add_argument(f"--{name.replace('_', '-')}", dest=name, default=None,
                         action=argparse.BooleanOptionalAction)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arlclust",
        description="Short text clustering with cluster-level attention and "
                    "adversarial training",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    _add_cluster_flags(commands.add_parser("cluster", help="train and cluster a corpus"))
    score = commands.add_parser("score", help="score a predicted labeling")
    score.add_argument("--true", required=True, dest="true_path")
    score.add_argument("--pred", required=True, dest="pred_path")
    return parser


def _read_config_file(path) -> dict:
    values = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config file {path} line {lineno}: expected key=value")
        key, _, raw = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in _OPTION_SPECS:
            raise ValueError(f"config file {path} line {lineno}: unknown key {key!r}")
        parser_fn = _OPTION_SPECS[key][0]
        values[key] = parser_fn(raw.strip())
    return values


def _resolve_options(args: argparse.Namespace) -> dict:
    """flag > config file > built-in default, per field."""
    options = {name: default for name, (_, default) in _OPTION_SPECS.items()}
    if args.config:
        options.update(_read_config_file(args.config))
    for name in _OPTION_SPECS:
        value = getattr(args, name, None)
        if value is not None:
            options[name] = value
    return options


def _parse_seeds(raw: Optional[str], have_labels: bool) -> list[int]:
    if raw is None:
        # mirror the 10-run averaging protocol when scoring is possible
        return list(range(1, 11)) if have_labels else [1]
    try:
        seeds = [int(s) for s in raw.split(",") if s.strip() != ""]
    except ValueError:
        raise ValueError(f"--seeds must be a comma list of integers, got {raw!r}")
    if not seeds:
        raise ValueError("--seeds is empty")
    return seeds


def _train_config(options: dict, n_clusters: int, seed: int) -> TrainConfig:
    kwargs = {k: options[k] for k in _TRAIN_KEYS}
    if kwargs["mode"] == "kmeans-tfidf":
        kwargs["mode"] = "arl-adv"  # placeholder; the baseline path ignores it
    return TrainConfig(n_clusters=n_clusters, seed=seed,
                       embeddings_path=options["embeddings"], **kwargs)


def _run_one_seed(corpus, options, n_clusters, mode, seed, log_lines):
    config = _train_config(options, n_clusters, seed)
    started = time.perf_counter()
    if mode == "kmeans-tfidf":
        result = baseline_kmeans_tfidf(corpus, config)
    else:
        def progress(epoch, mean_j, churn):
            print(f"seed {seed} epoch {epoch}: mean_J={mean_j:.6f} churn={churn:.4f}",
                  file=sys.stderr)
        _, result = train(corpus, config, progress=progress)
    elapsed = time.perf_counter() - started
    entry = {
        "seed": seed,
        "metrics": None,
        "history": [float(j) for j in result.history],
        "epochs_run": len(result.history),
    }
    if corpus.labels is not None:
        entry["metrics"] = score_labels(list(corpus.labels), result.assignments.tolist())
    log_lines.append(f"seed {seed}: {elapsed:.2f}s metrics={entry['metrics']}")
    return entry, result, elapsed


def _aggregate(per_seed: list[dict]):
    scored = [e["metrics"] for e in per_seed if e["metrics"] is not None]
    if not scored:
        return None, None
    mean = {k: float(np.mean([m[k] for m in scored])) for k in ("nmi", "ari", "acc")}
    std = {k: float(np.std([m[k] for m in scored])) for k in ("nmi", "ari", "acc")}
    return mean, std


def _run_record(corpus, options, n_clusters, mode, seeds, snapshot, log_lines) -> tuple[RunRecord, ClusterResult]:
    per_seed = []
    first_result = None
    total = 0.0
    for seed in seeds:
        entry, result, elapsed = _run_one_seed(corpus, options, n_clusters, mode,
                                               seed, log_lines)
        per_seed.append(entry)
        total += elapsed
        if first_result is None:
            first_result = result
    mean, std = _aggregate(per_seed)
    record = RunRecord(
        config=snapshot,
        seeds=list(seeds),
        per_seed=per_seed,
        metrics_mean=mean,
        metrics_std=std,
        dropped_documents=len(corpus.dropped_ids),
        wall_clock_seconds=total,
    )
    return record, first_result


def _write_assignments(path: Path, corpus, result: ClusterResult) -> None:
    lines = ["doc_id\tcluster\tmax_prob"]
    for doc, cluster, prob in zip(corpus.documents, result.assignments, result.max_probs):
        lines.append(f"{doc.id}\t{int(cluster)}\t{float(prob):.10g}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def run_cluster(args: argparse.Namespace) -> int:
    options = _resolve_options(args)
    raw = load_corpus_file(args.corpus)
    stop_override = None
    if options["stopword_file"]:
        stop_override = load_stopwords(options["stopword_file"])
    corpus = preprocess(raw, PreprocessOptions(
        lowercase=options["lowercase"],
        remove_stopwords=options["remove_stopwords"],
        stopwords=stop_override,
        remove_irregular=options["remove_irregular"],
        stem=options["stem"],
        min_freq=options["min_freq"],
    ))
    if args.labels:
        corpus = load_labels(args.labels, corpus)
    seeds = _parse_seeds(options["seeds"], corpus.labels is not None)
    out_dir = Path(options["out"])
    out_dir.mkdir(parents=True, exist_ok=True)

    snapshot = dict(sorted(options.items(), key=lambda kv: kv[0]))
    snapshot.update(corpus_path=str(args.corpus), labels_path=args.labels,
                    clusters=args.clusters, seeds=seeds)
    log_lines = [f"corpus: {args.corpus} ({len(corpus.documents)} documents, "
                 f"|V|={len(corpus.vocabulary)})",
                 f"dropped document ids: {list(corpus.dropped_ids)}",
                 f"config: {json.dumps(snapshot, sort_keys=True)}"]

    started = time.perf_counter()
    if args.ablate:
        sweep = {}
        for variant, overrides in ABLATION_VARIANTS:
            variant_options = dict(options, **overrides)
            variant_snapshot = dict(snapshot, variant=variant, **overrides)
            log_lines.append(f"--- variant {variant}")
            record, _ = _run_record(corpus, variant_options, args.clusters,
                                    variant_options["mode"], seeds,
                                    variant_snapshot, log_lines)
            sweep[variant] = record.to_json_dict()
        (out_dir / "ablation.json").write_text(
            json.dumps(sweep, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    else:
        mode = options["mode"]
        record, first_result = _run_record(corpus, options, args.clusters, mode,
                                           seeds, snapshot, log_lines)
        _write_assignments(out_dir / "assignments.tsv", corpus, first_result)
        (out_dir / "metrics.json").write_text(
            json.dumps(record.to_json_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
    log_lines.append(f"total wall clock: {time.perf_counter() - started:.2f}s")
    (out_dir / "run.log").write_text("\n".join(log_lines) + "\n", encoding="utf-8")
    return 0


def _read_label_file(path) -> list[int]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [int(line.strip()) for line in lines if line.strip() != ""]


def run_score(args: argparse.Namespace) -> int:
    true_labels = _read_label_file(args.true_path)
    pred_labels = _read_label_file(args.pred_path)
    print(json.dumps(score_labels(true_labels, pred_labels), sort_keys=True))
    return 0


def run_ablation(args: argparse.Namespace) -> int:
    args.ablate = True
    return run_cluster(args)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "cluster":
            return run_cluster(args)
        return run_score(args)
    except FloatingPointError as exc:
        print(f"error: {' '.join(str(exc).split())}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {' '.join(str(exc).split())}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
