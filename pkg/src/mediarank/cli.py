"""Operator command line: index building, querying, evaluation, PCA fitting,
serving, synthetic corpora and a non-asserting benchmark.

Exit codes: 0 on success, 1 on usage errors, 2 on data or format errors.
The MEDIARANK_LOG environment variable (off | info | debug) controls log
verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

from . import evalharness, ranking, server, store, synth, temporal
from .errors import ArgumentError, ConfigurationError, MediaRankError
from .ranking import RankMethod
from .reduce import load_pca_model, pca_fit, save_pca_model

logger = logging.getLogger(__name__)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit code 1, not argparse's 2
        raise _UsageError(message)


def _configure_logging() -> None:
    level_name = os.environ.get("MEDIARANK_LOG", "off").lower()
    if level_name == "off":
        logging.disable(logging.CRITICAL)
        return
    levels = {"info": logging.INFO, "debug": logging.DEBUG}
    if level_name not in levels:
        raise _UsageError(f"MEDIARANK_LOG must be off, info or debug, got {level_name!r}")
    logging.basicConfig(
        level=levels[level_name], format="%(levelname)s %(name)s: %(message)s"
    )


def _build_parser() -> _Parser:
    parser = _Parser(prog="mediarank", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_index = sub.add_parser("index", help="build an MRIX index from an MRF1 embedding file")
    p_index.add_argument("--embeddings", required=True, help="input MRF1 file")
    p_index.add_argument("--out", required=True, help="output MRIX file")
    p_index.add_argument("--agg", required=True, choices=["mean", "max", "last", "lstm"])
    p_index.add_argument("--lstm-weights", help="MRLW file, required with --agg lstm")
    p_index.add_argument("--pca", help="prefit MRPC model to apply")
    p_index.add_argument(
        "--pca-fit-variance", type=float, help="fit PCA on this corpus at the given variance"
    )
    p_index.add_argument("--normalize", action="store_true", help="L2-normalize stored vectors")
    p_index.add_argument("--labels", help="optional label manifest (validated, not persisted)")

    p_query = sub.add_parser("query", help="rank indexed items against a seed")
    p_query.add_argument("--index", required=True, help="MRIX file")
    p_query.add_argument("--seed-embeddings", help="MRF1 file of query records")
    p_query.add_argument("--seed-id", help="id of an indexed item to use as the seed")
    p_query.add_argument("--k", type=int, default=10)
    p_query.add_argument("--method", default="euclidean", choices=["euclidean", "cosine", "par"])
    p_query.add_argument("--delta", type=float, default=ranking.DEFAULT_DELTA_T)

    p_eval = sub.add_parser("eval", help="evaluate ranking methods on labeled queries")
    p_eval.add_argument("--index", required=True, help="MRIX file")
    p_eval.add_argument("--queries", required=True, help="MRF1 file of query records")
    p_eval.add_argument("--labels", required=True, help="label manifest for index and queries")
    p_eval.add_argument("--k", type=int, required=True)
    p_eval.add_argument("--methods", required=True, help="comma-separated: euclidean,cosine,par")
    p_eval.add_argument("--delta", type=float, default=ranking.DEFAULT_DELTA_T)
    p_eval.add_argument("--seen-classes", help="file with one seen label per line")
    p_eval.add_argument(
        "--report-out", default="eval_report.csv", help="machine-readable CSV output path"
    )

    p_pca = sub.add_parser("pca-fit", help="fit a PCA model on an embedding corpus")
    p_pca.add_argument("--embeddings", required=True, help="input MRF1 file")
    p_pca.add_argument("--variance", type=float, required=True)
    p_pca.add_argument("--out", required=True, help="output MRPC file")
    p_pca.add_argument("--agg", default="mean", choices=["mean", "max", "last", "lstm"])
    p_pca.add_argument("--lstm-weights", help="MRLW file, required with --agg lstm")

    p_serve = sub.add_parser("serve", help="serve /query and /health over HTTP")
    p_serve.add_argument("--index", required=True, help="MRIX file")
    p_serve.add_argument("--addr", default="127.0.0.1:8080", help="host:port to bind")

    p_synth = sub.add_parser("synth", help="generate a seeded Gaussian-cluster video corpus")
    p_synth.add_argument("--clusters", type=int, required=True)
    p_synth.add_argument("--per-cluster", type=int, required=True)
    p_synth.add_argument("--dim", type=int, required=True)
    p_synth.add_argument("--frames", type=int, required=True)
    p_synth.add_argument("--seed", type=int, required=True)
    p_synth.add_argument("--sigma", type=float, default=0.1, help="per-frame noise sigma")
    p_synth.add_argument(
        "--radial-sigma", type=float, default=2.0,
        help="per-item spread along the cluster direction",
    )
    p_synth.add_argument("--out", required=True, help="output MRF1 file")
    p_synth.add_argument("--labels-out", required=True, help="output label manifest")

    p_bench = sub.add_parser("bench", help="measure query throughput (informational only)")
    p_bench.add_argument("--index", required=True, help="MRIX file")
    p_bench.add_argument("--queries", required=True, help="MRF1 file of query records")
    p_bench.add_argument("--method", default="euclidean", choices=["euclidean", "cosine", "par"])
    p_bench.add_argument("--k", type=int, default=10)
    p_bench.add_argument("--delta", type=float, default=ranking.DEFAULT_DELTA_T)

    return parser


def _load_aggregation(agg_name: str, weights_path: str | None) -> temporal.AggregationStrategy:
    kind = temporal.AggregationKind.from_name(agg_name)
    weights = None
    if kind is temporal.AggregationKind.LSTM_FINAL_HIDDEN:
        if not weights_path:
            raise ConfigurationError("--agg lstm requires --lstm-weights")
        weights = temporal.load_lstm_weights(weights_path)
    elif weights_path:
        raise ConfigurationError(f"--lstm-weights is only valid with --agg lstm, not {agg_name}")
    return temporal.AggregationStrategy(kind=kind, weights=weights)


def _cmd_index(args) -> int:
    records = store.read_embeddings(args.embeddings)
    aggregation = _load_aggregation(args.agg, args.lstm_weights)
    if args.pca and args.pca_fit_variance is not None:
        raise ConfigurationError("--pca and --pca-fit-variance are mutually exclusive")
    pca = load_pca_model(args.pca) if args.pca else None
    if args.labels:
        labels = store.read_labels(args.labels)
        missing = [r.item_id for r in records if r.item_id not in labels]
        if missing:
            logger.info("%d of %d records have no label in %s", len(missing), len(records), args.labels)
        records = [
            store.MediaRecord(r.item_id, r.kind, r.frames, labels.get(r.item_id))
            for r in records
        ]
    repo = store.build_index(
        records,
        aggregation,
        pca=pca,
        pca_fit_variance=args.pca_fit_variance,
        normalize=args.normalize,
    )
    store.save_index(repo, args.out)
    print(f"indexed {len(repo)} items (dim {repo.dim}) -> {args.out}")
    return 0


def _method(name: str) -> RankMethod:
    return RankMethod(name)


def _cmd_query(args) -> int:
    if bool(args.seed_embeddings) == bool(args.seed_id):
        raise _UsageError("pass exactly one of --seed-embeddings or --seed-id")
    repo = store.load_index(args.index)
    pairs = repo.vector_items()
    method = _method(args.method)

    def run(query_vector) -> ranking.RankedResult:
        if method is RankMethod.EUCLIDEAN:
            return ranking.rank_euclidean(query_vector, pairs, args.k)
        if method is RankMethod.COSINE:
            return ranking.rank_cosine(query_vector, pairs, args.k)
        return ranking.par_rerank(query_vector, pairs, args.k, args.delta)

    if args.seed_id:
        item = repo.get(args.seed_id)
        if item is None:
            raise ArgumentError(f"--seed-id {args.seed_id!r} is not in index {args.index}")
        results = [(args.seed_id, run(item.vector))]
    else:
        seeds = store.read_embeddings(args.seed_embeddings)
        results = [
            (record.item_id, run(repo.prepare_query_record(record))) for record in seeds
        ]
    for seed_id, result in results:
        print(f"query={seed_id}")
        for entry in result.entries:
            print(f"{entry.item_id}\t{entry.distance!r}\t{entry.cosine!r}")
    return 0


def _cmd_eval(args) -> int:
    repo = store.load_index(args.index)
    labels = store.read_labels(args.labels)
    repo.set_labels(labels)
    methods = []
    for name in args.methods.split(","):
        name = name.strip()
        if name:
            methods.append(_method(name))
    if not methods:
        raise _UsageError("--methods must name at least one method")

    query_records = store.read_embeddings(args.queries)
    labeled_queries = []
    for record in query_records:
        label = labels.get(record.item_id)
        if label is None:
            raise ConfigurationError(
                f"query {record.item_id!r} has no label in {args.labels}"
            )
        labeled_queries.append((record, label))

    splits: list[tuple[evalharness.Split, list[tuple[store.MediaRecord, str]]]]
    if args.seen_classes:
        seen_path = Path(args.seen_classes)
        seen_labels = {
            line.strip() for line in seen_path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        }
        if not seen_labels:
            raise ConfigurationError(f"{args.seen_classes} lists no classes")
        seen_q = [(r, lab) for r, lab in labeled_queries if lab in seen_labels]
        unseen_q = [(r, lab) for r, lab in labeled_queries if lab not in seen_labels]
        splits = [(evalharness.Split.SEEN, seen_q), (evalharness.Split.UNSEEN, unseen_q)]
    else:
        splits = [(evalharness.Split.SEEN, labeled_queries)]

    reports = []
    for method in methods:
        for split, queries in splits:
            if not queries:
                continue
            reports.append(
                evalharness.evaluate(
                    repo, queries, k=args.k, method=method, delta_t=args.delta, split=split
                )
            )
    print(evalharness.format_report_table(reports))
    with open(args.report_out, "w", encoding="utf-8") as fh:
        evalharness.write_report_csv(reports, fh)
    logger.info("wrote %s", args.report_out)
    return 0


def _cmd_pca_fit(args) -> int:
    records = store.read_embeddings(args.embeddings)
    aggregation = _load_aggregation(args.agg, args.lstm_weights)
    ordered = sorted(records, key=lambda r: r.item_id)
    vectors = [temporal.aggregate(r.frames, aggregation) for r in ordered]
    model = pca_fit(vectors, args.variance)
    save_pca_model(model, args.out)
    print(
        f"fit PCA {model.input_dim} -> {model.output_dim} dims "
        f"(cumulative variance {model.explained_variance_ratio.sum():.4f}) -> {args.out}"
    )
    return 0


def _cmd_serve(args) -> int:
    host, sep, port_text = args.addr.rpartition(":")
    if not sep or not host:
        raise _UsageError(f"--addr must be host:port, got {args.addr!r}")
    try:
        port = int(port_text)
    except ValueError:
        raise _UsageError(f"--addr has a non-numeric port: {args.addr!r}") from None
    repo = store.load_index(args.index)
    server.serve(repo, host, port)
    return 0


def _cmd_synth(args) -> int:
    spec = synth.SynthSpec(
        clusters=args.clusters,
        per_cluster=args.per_cluster,
        dim=args.dim,
        frames=args.frames,
        seed=args.seed,
        sigma=args.sigma,
        radial_sigma=args.radial_sigma,
    )
    records = synth.generate_corpus(spec)
    store.write_embeddings(records, args.out)
    store.write_labels({r.item_id: r.label for r in records}, args.labels_out)
    print(f"generated {len(records)} records -> {args.out}, labels -> {args.labels_out}")
    return 0


def _cmd_bench(args) -> int:
    repo = store.load_index(args.index)
    pairs = repo.vector_items()
    seeds = store.read_embeddings(args.queries)
    method = _method(args.method)
    latencies = []
    start = time.perf_counter()
    for record in seeds:
        query = repo.prepare_query_record(record)
        t0 = time.perf_counter()
        if method is RankMethod.EUCLIDEAN:
            ranking.rank_euclidean(query, pairs, args.k)
        elif method is RankMethod.COSINE:
            ranking.rank_cosine(query, pairs, args.k)
        else:
            ranking.par_rerank(query, pairs, args.k, args.delta)
        latencies.append(time.perf_counter() - t0)
    elapsed = time.perf_counter() - start
    latencies.sort()

    def pct(p: float) -> float:
        return latencies[min(len(latencies) - 1, int(p * len(latencies)))]

    print(f"queries: {len(latencies)}  items: {len(pairs)}  method: {method.value}  k: {args.k}")
    print(f"throughput: {len(latencies) / elapsed:.1f} queries/s")
    print(
        f"latency ms  p50: {pct(0.50) * 1e3:.3f}  p90: {pct(0.90) * 1e3:.3f}  "
        f"p99: {pct(0.99) * 1e3:.3f}  max: {latencies[-1] * 1e3:.3f}"
    )
    return 0


_COMMANDS = {
    "index": _cmd_index,
    "query": _cmd_query,
    "eval": _cmd_eval,
    "pca-fit": _cmd_pca_fit,
    "serve": _cmd_serve,
    "synth": _cmd_synth,
    "bench": _cmd_bench,
}


def run(argv: list[str]) -> int:
    """Parse and execute one command; returns the process exit code."""
    try:
        _configure_logging()
        parser = _build_parser()
        args = parser.parse_args(argv)
        return _COMMANDS[args.subcommand](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except MediaRankError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        name = exc.filename or ""
        print(f"error: {name}: {exc.strerror or exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
