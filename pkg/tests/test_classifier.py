import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from agentfp.classifier import (
    UNMONITORED,
    ArchConfig,
    Block1d,
    Block2d,
    TrafficCNNClassifier,
    TrainConfig,
    build_model,
    decide,
    default_arch,
    forward,
    gradient_check,
    load_model,
    predict,
    save_model,
    tiny_arch,
    train,
    tune_threshold,
    write_embeddings,
    write_history,
)
from agentfp.classifier.model import softmax
from agentfp.errors import CorruptWeights, DivergenceError, ShapeError, ShapeMismatch, VersionError


def small_arch(W=64, num_classes=2):
    return ArchConfig(W=W, num_classes=num_classes,
                      blocks2d=(Block2d(8, (2, 4), (2, 4), 0.0),), reduce_channels=8,
                      blocks1d=(Block1d(8, 4, 2, 0.0),))


def edge_mass_data(n_per_class=40, W=64, seed=0):
    """Class 0 has all its mass in window 0, class 1 in window W-1."""
    rng = np.random.default_rng(seed)
    X = np.zeros((2 * n_per_class, 2, 2, W), dtype=np.float32)
    y = np.array(["first"] * n_per_class + ["last"] * n_per_class)
    amp = rng.uniform(1, 3, (2 * n_per_class, 2, 2)).astype(np.float32)
    X[:n_per_class, :, :, 0] = amp[:n_per_class]
    X[n_per_class:, :, :, W - 1] = amp[n_per_class:]
    return X, y


# ------------------------------------------------------------------ build

def test_default_arch_50_classes_simplex():
    model = build_model(default_arch(1800, 50), seed=1)
    p = forward(model, np.random.default_rng(0).random((1, 2, 2, 1800)))
    assert p.shape == (1, 50)
    assert p.sum() == pytest.approx(1.0, abs=1e-6) and (p >= 0).all()


def test_default_arch_shapes():
    stages = dict(default_arch(1800, 6).shapes())
    assert stages  # pools with ceil rounding bring 1800 windows down without hitting zero
    assert default_arch(1800, 6).embedding_dim == 128


def test_pools_leaving_height_two_rejected():
    with pytest.raises(ShapeError):
        ArchConfig(W=64, blocks2d=(Block2d(4, (2, 3), (1, 2)),), blocks1d=(Block1d(4, 3, 2),))


def test_pool_larger_than_length_rejected():
    with pytest.raises(ShapeError):
        ArchConfig(W=4, blocks2d=(Block2d(4, (2, 3), (2, 8)),), blocks1d=(Block1d(4, 3, 2),))


def test_same_seed_same_weights():
    a = build_model(tiny_arch(), seed=7).net.state_dict()
    b = build_model(tiny_arch(), seed=7).net.state_dict()
    c = build_model(tiny_arch(), seed=8).net.state_dict()
    assert all(torch.equal(a[k], b[k]) for k in a)
    assert any(not torch.equal(a[k], c[k]) for k in a if a[k].dtype.is_floating_point)


# ---------------------------------------------------------------- forward

def test_zero_classifier_gives_uniform():
    model = build_model(tiny_arch(num_classes=4))
    with torch.no_grad():
        model.net.classify.weight.zero_()
        model.net.classify.bias.zero_()
    p = forward(model, np.random.default_rng(1).random((5, 2, 2, 16)))
    assert np.allclose(p, 0.25)


def test_gap_of_constant_map():
    model = build_model(tiny_arch(num_classes=3))
    with torch.no_grad():
        model.net.classify.weight.zero_()
        model.net.classify.bias.copy_(torch.tensor([0.5, -1.0, 2.0]))
        logits = model.net(torch.zeros(2, 2, 2, 16))
    assert torch.allclose(logits, torch.tensor([[0.5, -1.0, 2.0]] * 2))


def test_eval_forward_deterministic_and_accepts_4xw():
    model = build_model(tiny_arch())
    X = np.random.default_rng(2).random((3, 2, 2, 16))
    a = forward(model, X)
    b = forward(model, X.reshape(3, 4, 16))
    assert np.array_equal(a, b)


def test_shape_mismatch():
    model = build_model(tiny_arch())
    with pytest.raises(ShapeMismatch):
        forward(model, np.zeros((1, 2, 2, 17)))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-500, 500), min_size=3, max_size=3), st.floats(0.01, 100))
def test_softmax_simplex_and_argmax_scale_invariance(logits, scale):
    z = np.array([logits])
    p = softmax(z)
    assert p.sum() == pytest.approx(1.0, abs=1e-6) and (p >= 0).all()
    assert decide(softmax(z * scale), ["a", "b", "c"])[0][0] == decide(p, ["a", "b", "c"])[0][0]


# ----------------------------------------------------------------- decide

def test_decision_rule_examples():
    assert decide(np.array([[0.6, 0.4]]), ["a", "b"], 0.5)[1] == ["a"]
    assert decide(np.array([[0.45, 0.55]]), ["a", "b"], 0.6)[1] == [UNMONITORED]
    idx, labels = decide(np.array([[0.5, 0.5]]), ["a", "b"])
    assert idx[0] == 0 and labels == ["a"]


def test_open_world_monotone_per_sample():
    probs = softmax(np.random.default_rng(5).normal(size=(200, 4)) * 2)
    prev = [False] * len(probs)
    for t in np.linspace(0, 1, 51):
        rejected = [lab == UNMONITORED for lab in decide(probs, list("abcd"), t)[1]]
        assert all(r or not p for r, p in zip(rejected, prev))
        prev = rejected


def test_tune_threshold():
    known = np.linspace(0.5, 1.0, 101)
    assert tune_threshold(known, target_recall=0.9) == pytest.approx(0.55)
    t = tune_threshold([0.9, 0.95, 0.99], [0.3, 0.4, 0.5])
    assert 0.5 < t <= 0.9


# ---------------------------------------------------------------- training

def test_edge_mass_separable_within_20_epochs():
    X, y = edge_mass_data()
    # linear-probe oracle: the two classes are linearly separable on raw cells
    flat = X.reshape(len(X), -1)
    assert np.all((flat[:, 0] > 0) == (y == "first"))
    model = build_model(small_arch(), seed=0, label_map=["first", "last"])
    model, hist = train(model, X, y, TrainConfig(epochs=20, batch_size=16, seed=0, patience=None,
                                                 validation_fraction=0.0))
    assert max(h["train_acc"] for h in hist) >= 0.99
    preds = [p.label for p in predict(model, X)]
    assert np.mean(np.array(preds) == y) >= 0.99


def test_zero_learning_rate_keeps_weights():
    X, y = edge_mass_data(10, W=16)
    arch = tiny_arch(16, 2)
    model = build_model(arch, seed=3, label_map=["first", "last"])
    before = {k: v.clone() for k, v in model.net.state_dict().items()}
    model, hist = train(model, X, y, TrainConfig(epochs=3, batch_size=len(X), learning_rate=0.0,
                                                 optimizer="sgd_momentum", validation_fraction=0.0,
                                                 patience=None))
    after = model.net.state_dict()
    for k, v in before.items():
        if k.endswith("running_mean") or k.endswith("running_var") or k.endswith("num_batches_tracked"):
            continue
        assert torch.equal(v, after[k]), k
    # full-batch loss; only float32 summation order varies with the shuffle
    losses = [h["loss"] for h in hist]
    assert np.allclose(losses, losses[0], rtol=1e-5)


def test_training_is_reproducible():
    X, y = edge_mass_data(12, W=16)
    runs = []
    for _ in range(2):
        model = build_model(tiny_arch(16, 2), seed=5, label_map=["first", "last"])
        train(model, X, y, TrainConfig(epochs=2, batch_size=8, seed=9))
        runs.append(model.net.state_dict())
    assert all(torch.equal(runs[0][k], runs[1][k]) for k in runs[0])


def test_divergence_detected():
    X, y = edge_mass_data(8, W=16)
    model = build_model(tiny_arch(16, 2), label_map=["first", "last"])
    with pytest.raises(DivergenceError):
        train(model, X, y, TrainConfig(epochs=3, batch_size=4, learning_rate=1e30, optimizer="sgd_momentum",
                                       validation_fraction=0.0))


def test_non_finite_input_rejected():
    X, y = edge_mass_data(8, W=16)
    X[0, 0, 0, 0] = np.inf
    model = build_model(tiny_arch(16, 2), label_map=["first", "last"])
    with pytest.raises(ValueError):
        train(model, X, y, TrainConfig(epochs=1))


def test_loss_trends_down_on_separable_data(tmp_path):
    X, y = edge_mass_data(30, W=64)
    model = build_model(small_arch(), seed=1, label_map=["first", "last"])
    _, hist = train(model, X, y, TrainConfig(epochs=12, batch_size=16, patience=None))
    assert np.mean([h["loss"] for h in hist[-3:]]) < np.mean([h["loss"] for h in hist[:3]])
    write_history(hist, tmp_path / "h.csv")
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "epoch,loss,train_acc,val_acc" and len(lines) == 13


# ---------------------------------------------------------- gradient check

@pytest.fixture(scope="module")
def tiny_setup():
    rng = np.random.default_rng(11)
    model = build_model(tiny_arch(16, 3), seed=2)
    X = rng.random((4, 2, 2, 16))
    y = np.array([0, 1, 2, 1])
    return model, X, y


def test_gradient_check_tiny(tiny_setup):
    model, X, y = tiny_setup
    assert gradient_check(model, X, y, eps=1e-5) < 1e-4


def test_gradient_check_halved_eps(tiny_setup):
    model, X, y = tiny_setup
    e1 = gradient_check(model, X, y, eps=1e-4, n_per_layer=30)
    e2 = gradient_check(model, X, y, eps=5e-5, n_per_layer=30)
    assert e2 <= 4 * e1 + 1e-12


def test_final_bias_gradient_closed_form():
    model = build_model(tiny_arch(16, 3), seed=4)
    net = model.net.double().eval()
    x = torch.zeros(3, 2, 2, 16, dtype=torch.float64)
    y = torch.tensor([0, 2, 1])
    net.zero_grad()
    logits = net(x)
    torch.nn.functional.cross_entropy(logits, y).backward()
    p = torch.softmax(logits.detach(), 1)
    want = (p - torch.nn.functional.one_hot(y, 3)).mean(0)
    assert torch.allclose(net.classify.bias.grad, want, atol=1e-12)


# ---------------------------------------------------------------- storage

def test_model_round_trip(tmp_path):
    model = build_model(tiny_arch(16, 3), seed=6, label_map=["x", "y", "z"])
    model.normalization = "log1p"
    model.trained_on = "unit"
    path = tmp_path / "m.bin"
    save_model(model, path)
    back = load_model(path)
    X = np.random.default_rng(0).random((4, 2, 2, 16))
    assert np.array_equal(forward(model, X), forward(back, X))
    assert back.label_map == ["x", "y", "z"] and back.normalization == "log1p"
    raw = path.read_bytes()
    path.write_bytes(raw[:-7])
    with pytest.raises(CorruptWeights):
        load_model(path)
    path.write_bytes(raw[:8] + bytes([raw[8] + 1]) + raw[9:])
    with pytest.raises(VersionError):
        load_model(path)


def test_embeddings_csv(tmp_path):
    write_embeddings(tmp_path / "e.csv", ["a", "b"], ["x", "y"], np.arange(6.0).reshape(2, 3))
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines[0] == "trace_id,label,v_1,v_2,v_3"
    assert lines[1].startswith("a,x,0.0,1.0")


# -------------------------------------------------------------- estimator

def test_estimator_api():
    X, y = edge_mass_data(20, W=16)
    t = tiny_arch(16, 2)
    est = TrafficCNNClassifier(blocks2d=t.blocks2d, blocks1d=t.blocks1d, reduce_channels=4, epochs=2,
                               batch_size=8, random_state=0)
    assert est.get_params()["epochs"] == 2
    est.fit(X, y)
    assert list(est.classes_) == ["first", "last"]
    P = est.predict_proba(X)
    assert P.shape == (40, 2)
    assert set(est.predict(X)) <= {"first", "last"}
    assert set(est.predict(X, open_world_threshold=1.01)) == {UNMONITORED}
    assert est.embed(X).shape == (40, 4)
