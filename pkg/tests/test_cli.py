"""The CLI is a thin adapter: each command must match the library calls it wraps."""

import csv
import warnings

import numpy as np
import pytest

from agentfp.classifier import TrainConfig, build_model, forward, load_model, save_model, tiny_arch, train
from agentfp.cli import main
from agentfp.evaluation import EvalReport, cnn_fit_predict, kfold_evaluate
from agentfp.features import MtamConfig, batch_extract, load_dataset
from agentfp.ingest import IngestConfig, assemble_traces, dumps_trace, parse_pcap, read_traces
from agentfp.occupation import (
    build_network,
    correlate,
    infer_occupation,
    load_agent_profiles,
    load_network,
    load_onet_dir,
    read_partition,
    read_rmatrix,
    set_partition,
)
from agentfp.simulation import (
    gen_traffic,
    gen_users_from_rmatrix,
    load_archetypes,
    perturb_ranks,
    planted_world,
    read_users,
)
from pcapkit import CLIENT, PROVIDER, capture, tcp4_frame


def run(*argv):
    return main([str(a) for a in argv])


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def traffic(tmp_path_factory):
    d = tmp_path_factory.mktemp("traffic")
    assert run("simulate", "traffic", "--only", "slow_api,plain_text", "--per-class", 12, "--seed", 3,
               "--out", d / "traces.jsonl") == 0
    assert run("extract", "--traces", d / "traces.jsonl", "--windows", 32, "--normalize", "log1p",
               "--out", d / "ds.bin") == 0
    return d


def test_simulate_traffic_matches_library(traffic):
    lib = load_archetypes()
    want = gen_traffic({n: lib[n] for n in ("slow_api", "plain_text")}, 12, 3)
    assert read_traces(traffic / "traces.jsonl") == want


def test_extract_matches_library(traffic):
    ds = load_dataset(traffic / "ds.bin")
    want, errors = batch_extract(read_traces(traffic / "traces.jsonl"), MtamConfig(W=32), "log1p")
    assert not errors
    assert np.array_equal(ds.X, want.X) and ds.trace_ids == want.trace_ids and ds.labels == want.labels


def test_ingest_matches_library(tmp_path):
    frames = [(100.0, tcp4_frame(CLIENT, PROVIDER, 120)), (100.5, tcp4_frame(PROVIDER, CLIENT, 1400, 443, 50000)),
              (200.0, tcp4_frame(CLIENT, PROVIDER, 90))]
    pcap = tmp_path / "cap.pcap"
    pcap.write_bytes(capture(frames))
    out = tmp_path / "t.jsonl"
    assert run("ingest", "--pcap", pcap, "--client-ip", CLIENT, "--provider-ip", PROVIDER,
               "--label", "Action/x", "--out", out) == 0
    cfg = IngestConfig(client_addrs=[CLIENT], provider_addrs=[PROVIDER])
    want = assemble_traces(parse_pcap(pcap.read_bytes(), cfg), cfg, 30.0, label="Action/x", id_prefix="cap")
    assert out.read_text().splitlines() == [dumps_trace(t) for t in want]
    assert len(want) == 2


def test_train_and_classify_match_library(traffic, tmp_path):
    model_path = tmp_path / "m.bin"
    assert run("train", "--dataset", traffic / "ds.bin", "--labels", "agent", "--arch", "tiny", "--epochs", 3,
               "--seed", 5, "--out", model_path) == 0
    ds = load_dataset(traffic / "ds.bin")
    y = ds.targets("agent").astype(str)
    classes = sorted(set(y.tolist()))
    model = build_model(tiny_arch(32, 2), seed=5, label_map=classes)
    model.trained_on = f"ds.bin:{ds.config_hash}:agent"
    model.normalization = "log1p"
    model, _ = train(model, ds.tensors(), y, TrainConfig(epochs=3, seed=5, patience=5))
    save_model(model, tmp_path / "lib.bin")
    assert model_path.read_bytes() == (tmp_path / "lib.bin").read_bytes()

    preds = tmp_path / "p.csv"
    assert run("classify", "--model", model_path, "--dataset", traffic / "ds.bin", "--out", preds) == 0
    probs = forward(load_model(model_path), ds.tensors())
    got = rows(preds)
    assert [r["trace_id"] for r in got] == ds.trace_ids
    for r, p in zip(got, probs):
        assert [float(r[f"p_{c}"]) for c in classes] == p.tolist()
        assert r["predicted"] == classes[int(p.argmax())]

    # traces path re-extracts with the model's window count and normalization
    via_traces = tmp_path / "p2.csv"
    assert run("classify", "--model", model_path, "--traces", traffic / "traces.jsonl", "--out", via_traces) == 0
    assert rows(via_traces) == got

    ow = tmp_path / "ow.csv"
    assert run("classify", "--model", model_path, "--dataset", traffic / "ds.bin", "--open-world",
               "--threshold", 1.01, "--out", ow) == 0
    assert {r["predicted"] for r in rows(ow)} == {"unmonitored"}


def test_evaluate_matches_library(traffic, tmp_path):
    out = tmp_path / "r.csv"
    assert run("evaluate", "--dataset", traffic / "ds.bin", "--labels", "agent", "--arch", "tiny",
               "--epochs", 2, "--repeats", 2, "--seed", 1, "--out", out) == 0
    ds = load_dataset(traffic / "ds.bin")
    t = tiny_arch(32, 2)
    params = {"epochs": 2, "batch_size": 32, "learning_rate": 1e-3, "patience": 5, "normalization": "log1p",
              "blocks2d": list(t.blocks2d), "blocks1d": list(t.blocks1d), "reduce_channels": t.reduce_channels}
    want = kfold_evaluate(ds.tensors(), ds.targets("agent").astype(str), 2, "8:1:1", 1, cnn_fit_predict(params))
    got = EvalReport.from_csv(out)
    assert np.array_equal(got.confusion, want.confusion)
    assert got.macro_f1 == want.macro_f1
    assert got.folds == want.folds


@pytest.fixture(scope="module")
def world(tmp_path_factory):
    d = tmp_path_factory.mktemp("world")
    assert run("simulate", "occupations", "--communities", 4, "--agents-per", 3, "--seed", 2, "--out", d) == 0
    assert run("graph", "build", "--onet", d, "--out", d / "net.bin") == 0
    assert run("graph", "communities", "--network", d / "net.bin", "--partition", d / "partition.csv",
               "--out", d / "part.bin") == 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert run("correlate", "--network", d / "part.bin", "--agents", d / "agents_dwa.csv",
                   "--out", d / "r.csv") == 0
    return d


def test_occupation_pipeline_matches_library(world):
    w = planted_world(n_communities=4, agents_per=3, seed=2)
    assert load_onet_dir(world).task_dwas == w.taxonomy.task_dwas
    net = build_network(w.taxonomy)
    assert np.array_equal(load_network(world / "net.bin").A, net.A)
    mapping, labels = read_partition(world / "partition.csv")
    assert mapping == w.partition
    part = set_partition(net, w.partition, w.labels)
    assert load_network(world / "part.bin").digest == part.digest
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cm = correlate(part, load_agent_profiles(world / "agents_dwa.csv"))
    got = read_rmatrix(world / "r.csv")
    assert np.array_equal(got.R, cm.R) and got.communities == cm.communities


def test_louvain_command(world, tmp_path):
    out = tmp_path / "lv.bin"
    assert run("graph", "communities", "--network", world / "net.bin", "--seed", 4, "--out", out,
               "--partition-out", tmp_path / "p.csv") == 0
    from agentfp.occupation import detect_communities

    want = detect_communities(load_network(world / "net.bin"), seed=4)
    assert np.array_equal(load_network(out).partition, want.partition)


def test_users_and_profile_match_library(world, tmp_path):
    users_csv = tmp_path / "u.csv"
    assert run("simulate", "users", "--network", world / "part.bin", "--rmatrix", world / "r.csv",
               "--count", 40, "--n", 4, "--seed", 9, "--out", users_csv) == 0
    cm = read_rmatrix(world / "r.csv")
    want = gen_users_from_rmatrix(cm, 40, 9, 4)
    # the CSV keeps the order, not the selection weights
    assert [(u, r.ranked_agents, t) for u, r, t in read_users(users_csv)] == \
        [(u, r.ranked_agents, t) for u, r, t in want]

    report = tmp_path / "prof.csv"
    assert run("profile", "--rmatrix", world / "r.csv", "--ranks", users_csv, "--noise", 0.2, "--seed", 1,
               "--topk", 3, "--out", report) == 0
    got = rows(report)
    for u, ((uid, ranks, truth), r) in enumerate(zip(want, got)):
        noisy = perturb_ranks(ranks, 0.2, seed=(1, u))
        scores, ranking = infer_occupation(cm, noisy.ranked_agents, 0.5)
        top = [cm.communities[i] for i in ranking[:3]]
        assert r["user_id"] == uid and r["ranked_agents"] == ";".join(noisy.ranked_agents)
        assert [r["top1"], r["top2"], r["top3"]] == top
        assert float(r["score1"]) == scores[ranking[0]]
        assert r["hit@3"] == str(int(truth in top))


def test_exit_codes(tmp_path, capsys):
    assert run("extract", "--traces", tmp_path / "missing.jsonl", "--out", tmp_path / "x.bin") == 1
    assert run("no-such-command") == 1
    assert run("extract", "--windows", "abc") == 1
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"not a model")
    assert run("classify", "--model", bad, "--dataset", bad, "--out", tmp_path / "o.csv") == 1
    assert run("simulate", "traffic", "--only", "nope", "--per-class", 1, "--out", tmp_path / "t.jsonl") == 1
    assert "error:" in capsys.readouterr().err


def test_runtime_failure_exits_2(traffic, tmp_path):
    # a learning rate this large overflows the weights, which training reports as divergence
    assert run("train", "--dataset", traffic / "ds.bin", "--labels", "agent", "--arch", "tiny",
               "--epochs", 3, "--lr", 1e30, "--out", tmp_path / "m.bin") == 2
