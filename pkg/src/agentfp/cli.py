"""``agentfp`` command line.

Exit status: 0 on success, 1 for invalid input or arguments, 2 for runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import warnings
from pathlib import Path


from agentfp.errors import AgentFpError, ValidationError

log = logging.getLogger("agentfp")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def _csv_list(text: str) -> list:
    return [t.strip() for t in text.split(",") if t.strip()]


def _fixed_mode(mode: str) -> str:
    return mode.replace("-", "_")


# ---------------------------------------------------------------- traffic side

def cmd_ingest(args):
    from agentfp.ingest import IngestConfig, assemble_traces, read_pcap, write_traces

    cfg = IngestConfig(
        client_addrs=_csv_list(args.client_ip),
        provider_addrs=_csv_list(args.provider_ip or ""),
        scope=args.scope,
        min_payload=args.min_payload,
        size_basis=args.size_basis,
    )
    src = Path(args.pcap)
    files = sorted(p for p in src.iterdir() if p.suffix in (".pcap", ".cap")) if src.is_dir() else [src]
    if not files:
        raise ValidationError(f"no .pcap files under {src}")
    traces = []
    for f in files:
        records = read_pcap(f, cfg)
        traces += assemble_traces(records, cfg, args.session_gap, label=args.label, id_prefix=f.stem)
    write_traces(traces, args.out)
    print(f"{len(traces)} traces from {len(files)} capture(s) -> {args.out}")


def cmd_extract(args):
    from agentfp.features import MtamConfig, batch_extract, save_dataset
    from agentfp.ingest import read_traces

    cfg = MtamConfig(W=args.windows, mode=_fixed_mode(args.mode),
                     gap=args.gap if args.mode == "fixed-gap" else None,
                     clip_counts=args.clip_counts, clip_bytes=args.clip_bytes)
    ds, errors = batch_extract(read_traces(args.traces), cfg, args.normalize)
    for e in errors:
        print(f"skipped {e}", file=sys.stderr)
    save_dataset(ds, args.out)
    print(f"{len(ds)} MTAMs ({len(errors)} skipped) -> {args.out}")


def _arch_for(name: str, W: int, num_classes: int):
    from agentfp.classifier import default_arch, tiny_arch

    return tiny_arch(W, num_classes) if name == "tiny" else default_arch(W, num_classes)


def cmd_train(args):
    from agentfp.classifier import TrainConfig, build_model, save_model, train, write_history
    from agentfp.features import load_dataset

    ds = load_dataset(args.dataset)
    y = ds.targets(args.labels)
    if any(v is None for v in y):
        raise ValidationError("dataset contains unlabeled samples")
    y = y.astype(str)
    classes = sorted(set(y.tolist()))
    if len(classes) < 2:
        raise ValidationError("training needs at least 2 classes")
    model = build_model(_arch_for(args.arch, ds.config.W, len(classes)), seed=args.seed, label_map=classes)
    model.trained_on = f"{Path(args.dataset).name}:{ds.config_hash}:{args.labels}"
    model.normalization = ds.scheme
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch, learning_rate=args.lr, seed=args.seed,
                      patience=args.patience if args.patience > 0 else None)
    model, history = train(model, ds.tensors(), y, cfg)
    save_model(model, args.out)
    if args.history:
        write_history(history, args.history)
    last = history[-1]
    print(f"trained {len(history)} epochs, loss {last['loss']:.4f}, val_acc {last['val_acc']:.3f} -> {args.out}")


def cmd_classify(args):
    from agentfp.classifier import UNMONITORED, decide, forward, load_model, write_embeddings
    from agentfp.features import MtamConfig, batch_extract, load_dataset
    from agentfp.ingest import read_traces

    model = load_model(args.model)
    if args.dataset:
        ds = load_dataset(args.dataset)
    else:
        cfg = MtamConfig(W=model.arch.W, mode=_fixed_mode(args.mode),
                         gap=args.gap if args.mode == "fixed-gap" else None)
        ds, errors = batch_extract(read_traces(args.traces), cfg, model.normalization)
        for e in errors:
            print(f"skipped {e}", file=sys.stderr)
    if ds.config.W != model.arch.W:
        from agentfp.errors import ShapeMismatch

        raise ShapeMismatch(f"dataset has W={ds.config.W}, model expects W={model.arch.W}")
    probs, emb = forward(model, ds.tensors(), return_embedding=True)
    threshold = args.threshold if args.open_world else None
    if args.open_world and threshold is None:
        raise ValidationError("--open-world needs --threshold")
    _, labels = decide(probs, model.label_map, threshold)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trace_id", "predicted", "confidence"] + [f"p_{c}" for c in model.label_map])
        for tid, lab, p in zip(ds.trace_ids, labels, probs):
            w.writerow([tid, lab, repr(float(p.max()))] + [repr(float(v)) for v in p])
    if args.embeddings:
        write_embeddings(args.embeddings, ds.trace_ids, labels, emb)
    rejected = sum(lab == UNMONITORED for lab in labels)
    print(f"{len(labels)} predictions ({rejected} unmonitored) -> {args.out}")


def cmd_evaluate(args):
    from agentfp.evaluation import cnn_fit_predict, kfold_evaluate
    from agentfp.features import load_dataset

    ds = load_dataset(args.dataset)
    y = ds.targets(args.labels)
    if any(v is None for v in y):
        raise ValidationError("dataset contains unlabeled samples")
    params = {"epochs": args.epochs, "batch_size": args.batch, "learning_rate": args.lr,
              "patience": args.patience if args.patience > 0 else None, "normalization": ds.scheme}
    if args.arch == "tiny":
        tiny = _arch_for("tiny", ds.config.W, 2)
        params.update(blocks2d=list(tiny.blocks2d), blocks1d=list(tiny.blocks1d),
                      reduce_channels=tiny.reduce_channels)
    report = kfold_evaluate(ds.tensors(), y.astype(str), args.repeats, args.split, args.seed,
                            cnn_fit_predict(params))
    report.to_csv(args.out)
    mean, std = report.fold_stats()["macro_f1"]
    print(f"macro-F1 {mean:.4f} ± {std:.4f} over {args.repeats} repeats -> {args.out}")


# ------------------------------------------------------------- occupation side

def cmd_graph_build(args):
    from agentfp.occupation import build_network, load_onet_dir, save_network

    network = build_network(load_onet_dir(args.onet))
    save_network(network, args.out)
    print(f"{network.n} occupations, total weight {network.m:.6g} -> {args.out}")


def cmd_graph_communities(args):
    from agentfp.occupation import (
        detect_communities,
        load_network,
        modularity,
        read_partition,
        save_network,
        set_partition,
        write_partition,
    )

    network = load_network(args.network)
    if args.partition:
        mapping, labels = read_partition(args.partition)
        network = set_partition(network, mapping, labels)
        source = f"partition file {args.partition}"
    else:
        network = detect_communities(network, seed=args.seed, resolution=args.resolution)
        source = f"louvain seed {args.seed}"
    save_network(network, args.out or args.network)
    if args.partition_out:
        write_partition(network, args.partition_out)
    print(f"{network.K} communities ({source}), Q = {modularity(network):.6f}")


def cmd_correlate(args):
    from agentfp.occupation import correlate, load_agent_profiles, load_network, write_rmatrix

    network = load_network(args.network)
    agents = load_agent_profiles(args.agents)
    cm = correlate(network, agents, args.eps)
    write_rmatrix(cm, args.out)
    print(f"{len(cm.agents)} agents x {len(cm.communities)} communities -> {args.out}")


def cmd_profile(args):
    from agentfp.occupation import infer_occupation, read_rmatrix
    from agentfp.simulation import perturb_ranks, read_users

    cm = read_rmatrix(args.rmatrix)
    users = read_users(args.ranks)
    if args.topk < 1:
        raise ValidationError("--topk must be >= 1")
    k = min(args.topk, len(cm.communities))
    rows, hits, scored = [], 0, 0
    for u, (uid, ranks, truth) in enumerate(users):
        if args.noise:
            ranks = perturb_ranks(ranks, args.noise, seed=(args.seed, u))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            scores, ranking = infer_occupation(cm, ranks.ranked_agents, args.alpha)
        top = [cm.communities[i] for i in ranking[:k]]
        hit = "" if truth is None else int(truth in top)
        if truth is not None:
            scored += 1
            hits += hit
        rows.append([uid, truth or "", ";".join(ranks.ranked_agents)] + top
                    + [repr(float(scores[i])) for i in ranking[:k]] + [hit])
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_id", "true_community", "ranked_agents"] + [f"top{i + 1}" for i in range(k)]
                   + [f"score{i + 1}" for i in range(k)] + [f"hit@{k}"])
        w.writerows(rows)
    summary = f", top-{k} accuracy {hits / scored:.4f}" if scored else ""
    print(f"{len(rows)} users profiled{summary} -> {args.out}")


# ------------------------------------------------------------------ simulation

def cmd_simulate_traffic(args):
    from agentfp.ingest import write_traces
    from agentfp.simulation import gen_traffic, load_archetypes

    lib = load_archetypes(args.archetypes)
    if args.only:
        wanted = _csv_list(args.only)
        unknown = [n for n in wanted if n not in lib]
        if unknown:
            raise ValidationError(f"unknown archetypes: {unknown}")
        lib = {n: lib[n] for n in wanted}
    if args.per_class < 1:
        raise ValidationError("--per-class must be >= 1")
    traces = gen_traffic(lib, args.per_class, args.seed)
    write_traces(traces, args.out)
    print(f"{len(traces)} traces ({len(lib)} archetypes) -> {args.out}")


def cmd_simulate_users(args):
    from agentfp.occupation import load_network, read_rmatrix
    from agentfp.simulation import gen_users_from_rmatrix, write_users

    cm = read_rmatrix(args.rmatrix)
    if args.network:
        network = load_network(args.network)
        if network.partition is not None and list(network.community_labels) != list(cm.communities):
            raise ValidationError("rmatrix communities do not match the network's partition")
    users = gen_users_from_rmatrix(cm, args.count, args.seed, args.n, args.sharpness)
    write_users(users, args.out)
    print(f"{len(users)} virtual users -> {args.out}")


def cmd_simulate_occupations(args):
    from agentfp.occupation import write_agent_profiles, write_taxonomy
    from agentfp.simulation import planted_world

    world = planted_world(n_communities=args.communities, agents_per=args.agents_per, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_taxonomy(world.taxonomy, out)
    write_agent_profiles(world.agents, out / "agents_dwa.csv")
    with open(out / "partition.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["occupation_code", "community_id", "community_label"])
        for code in sorted(world.partition):
            cid = world.partition[code]
            w.writerow([code, cid, world.labels[cid]])
    with open(out / "agent_home.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["agent_id", "community_id", "community_label"])
        for a, cid in world.agent_home.items():
            w.writerow([a, cid, world.labels[cid]])
    print(f"{len(world.partition)} occupations, {len(world.agents)} agents -> {out}")


# --------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="agentfp", description="Traffic fingerprinting of LLM agents and occupation profiling.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("ingest", help="pcap -> per-session traces (JSONL)")
    s.add_argument("--pcap", required=True, help="capture file or directory of .pcap files")
    s.add_argument("--client-ip", required=True, help="client address(es), comma separated")
    s.add_argument("--provider-ip", default="", help="provider addresses or prefixes, comma separated")
    s.add_argument("--scope", choices=("primary", "mixed"), default="primary")
    s.add_argument("--session-gap", type=float, default=30.0)
    s.add_argument("--min-payload", type=int, default=1)
    s.add_argument("--size-basis", choices=("payload", "ip"), default="payload")
    s.add_argument("--label", default=None, help="label stamped on every trace")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("extract", help="traces -> MTAM dataset")
    s.add_argument("--traces", required=True)
    s.add_argument("--windows", type=int, default=1800)
    s.add_argument("--mode", choices=("uniform", "fixed-gap"), default="uniform")
    s.add_argument("--gap", type=float, default=0.05)
    s.add_argument("--normalize", choices=("none", "log1p"), default="none")
    s.add_argument("--clip-counts", type=float, default=None)
    s.add_argument("--clip-bytes", type=float, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_extract)

    def training_flags(s, epochs=100):
        s.add_argument("--labels", choices=("behavior", "agent", "full"), default="full")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--epochs", type=int, default=epochs)
        s.add_argument("--lr", type=float, default=1e-3)
        s.add_argument("--batch", type=int, default=32)
        s.add_argument("--patience", type=int, default=5, help="early-stopping patience; 0 disables")
        s.add_argument("--arch", choices=("default", "tiny"), default="default")

    s = sub.add_parser("train", help="train the CNN on a dataset")
    s.add_argument("--dataset", required=True)
    training_flags(s)
    s.add_argument("--history", default=None, help="optional per-epoch CSV")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("classify", help="predict labels for traces or a dataset")
    s.add_argument("--model", required=True)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--traces")
    g.add_argument("--dataset")
    s.add_argument("--mode", choices=("uniform", "fixed-gap"), default="uniform")
    s.add_argument("--gap", type=float, default=0.05)
    s.add_argument("--open-world", action="store_true")
    s.add_argument("--threshold", type=float, default=None)
    s.add_argument("--embeddings", default=None, help="optional embedding CSV")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("evaluate", help="repeated random-split evaluation")
    s.add_argument("--dataset", required=True)
    s.add_argument("--repeats", type=int, default=10)
    s.add_argument("--split", default="8:1:1")
    training_flags(s)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_evaluate)

    g = sub.add_parser("graph", help="occupation network")
    gs = g.add_subparsers(dest="graph_command", required=True, parser_class=_Parser)
    s = gs.add_parser("build")
    s.add_argument("--onet", required=True, help="directory with occupations.csv, tasks.csv, dwa_links.csv")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_graph_build)
    s = gs.add_parser("communities")
    s.add_argument("--network", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--resolution", type=float, default=1.0)
    s.add_argument("--partition", default=None, help="install this partition instead of running Louvain")
    s.add_argument("--partition-out", default=None)
    s.add_argument("--out", default=None, help="defaults to rewriting --network")
    s.set_defaults(func=cmd_graph_communities)

    s = sub.add_parser("correlate", help="agent x community log-RCA matrix")
    s.add_argument("--network", required=True)
    s.add_argument("--agents", required=True)
    s.add_argument("--eps", type=float, default=1e-9)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_correlate)

    s = sub.add_parser("profile", help="infer occupation categories from usage ranks")
    s.add_argument("--rmatrix", required=True)
    s.add_argument("--ranks", required=True)
    s.add_argument("--alpha", type=float, default=0.5)
    s.add_argument("--noise", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--topk", type=int, default=3)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_profile)

    g = sub.add_parser("simulate", help="synthetic traffic, users and taxonomies")
    gs = g.add_subparsers(dest="simulate_command", required=True, parser_class=_Parser)
    s = gs.add_parser("traffic")
    s.add_argument("--archetypes", default=None, help="archetype library (default: packaged)")
    s.add_argument("--only", default=None, help="comma-separated archetype names")
    s.add_argument("--per-class", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate_traffic)
    s = gs.add_parser("users")
    s.add_argument("--network", default=None)
    s.add_argument("--rmatrix", required=True)
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--n", type=int, default=5, help="agents per user")
    s.add_argument("--sharpness", type=float, default=2.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate_users)
    s = gs.add_parser("occupations")
    s.add_argument("--communities", type=int, default=12)
    s.add_argument("--agents-per", type=int, default=5)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_simulate_occupations)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ValueError, KeyError, FileNotFoundError) as exc:
        # ValidationError is a ValueError; plain ValueErrors also signal bad input
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (AgentFpError, OSError, RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
