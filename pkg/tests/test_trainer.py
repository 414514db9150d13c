import numpy as np
import pytest

from qmclab import classifier as clf
from qmclab.circuit import CircuitSpec
from qmclab.data import Dataset, gen_blobs, scale_features
from qmclab.trainer import (
    AdamState,
    Model,
    TrainConfig,
    TrainingAbort,
    adam_step,
    split,
    train,
)


def _blobs_sets(total=120, seed=0, n_features=2, n_classes=3, sigma=0.15):
    ds = gen_blobs(n_features, n_classes, total, sigma, seed)
    tr, te = split(ds, 0.75, seed)
    tr, te, _ = scale_features(tr, te)
    return tr, te


def _model(kind, n_qubits, n_layers, n_features, temperature=0.01):
    return Model(
        CircuitSpec(n_qubits, n_layers, n_features),
        clf.observables_for_model(kind, n_qubits, 3),
        clf.loss_config_for_model(kind, temperature=temperature),
    )


# ---------------------------------------------------------------------------
# split


def test_split_sizes():
    ds = gen_blobs(2, 2, 100, 0.1, 0)
    tr, te = split(ds, 0.75, 1)
    assert (tr.size, te.size) == (75, 25)


def test_split_deterministic_and_disjoint():
    ds = gen_blobs(2, 2, 40, 0.1, 0)
    a1, b1 = split(ds, 0.75, 7)
    a2, b2 = split(ds, 0.75, 7)
    assert np.array_equal(a1.features, a2.features)
    assert np.array_equal(b1.labels, b2.labels)
    joined = np.vstack([a1.features, b1.features])
    assert joined.shape[0] == ds.size
    # every original row appears exactly once
    orig = {tuple(r) for r in ds.features}
    assert {tuple(r) for r in joined} == orig


def test_split_floor_rule():
    ds = gen_blobs(2, 2, 4, 0.1, 0)
    tr, te = split(ds, 0.75, 0)
    assert (tr.size, te.size) == (3, 1)


def test_split_empty_side_rejected():
    ds = gen_blobs(2, 2, 3, 0.1, 0)
    with pytest.raises(ValueError):
        split(ds, 0.2, 0)


# ---------------------------------------------------------------------------
# adam


def test_adam_first_step_closed_form():
    cfg = TrainConfig(learning_rate=0.1)
    params = np.array([0.0])
    grads = np.array([1.0])
    state = AdamState(np.zeros(1), np.zeros(1))
    new, state = adam_step(params, grads, state, cfg)
    assert abs(new[0] - (-0.1 / (1 + 1e-8))) < 1e-15
    assert state.t == 1


def test_adam_zero_gradient_no_move():
    cfg = TrainConfig()
    params = np.array([1.0, -2.0])
    state = AdamState(np.zeros(2), np.zeros(2))
    new, _ = adam_step(params, np.zeros(2), state, cfg)
    assert np.array_equal(new, params)


def test_adam_equal_gradients_equal_updates():
    cfg = TrainConfig(learning_rate=0.03)
    params = np.array([1.0, 5.0])
    state = AdamState(np.zeros(2), np.zeros(2))
    new, _ = adam_step(params, np.array([0.7, 0.7]), state, cfg)
    deltas = new - params
    # the update itself is elementwise identical; recovering it by
    # subtraction reintroduces rounding at the differing magnitudes
    assert abs(deltas[0] - deltas[1]) < 1e-12


def test_adam_rejects_nonfinite():
    cfg = TrainConfig()
    state = AdamState(np.zeros(1), np.zeros(1))
    with pytest.raises(TrainingAbort):
        adam_step(np.zeros(1), np.array([np.nan]), state, cfg)


# ---------------------------------------------------------------------------
# training


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)
    tr, te = _blobs_sets()
    model = _model("ProjF", 2, 2, 2)
    with pytest.raises(ValueError, match="batch_size"):
        train(model, tr, te, TrainConfig(epochs=1, batch_size=1000))


def test_train_trace_shape_and_finiteness():
    tr, te = _blobs_sets()
    model = _model("ProjCE", 2, 2, 2)
    theta, trace = train(model, tr, te, TrainConfig(epochs=5, seed=3))
    assert len(trace) == 5
    assert np.isfinite(trace.column("train_loss")).all()
    assert np.isfinite(trace.column("test_loss")).all()
    assert theta.shape == (model.spec.n_params,)


def test_train_deterministic_trace():
    tr, te = _blobs_sets()
    model = _model("PauliF", 2, 2, 2)
    cfg = TrainConfig(epochs=4, seed=11)
    t1, trace1 = train(model, tr, te, cfg)
    t2, trace2 = train(model, tr, te, cfg)
    assert np.array_equal(t1, t2)
    assert np.array_equal(trace1.rows, trace2.rows)


def test_train_worker_count_invariance(monkeypatch):
    tr, te = _blobs_sets(total=60)
    model = _model("ProjF", 2, 2, 2)
    cfg = TrainConfig(epochs=3, seed=2)
    monkeypatch.setenv("QMCLAB_THREADS", "1")
    _, trace1 = train(model, tr, te, cfg)
    monkeypatch.setenv("QMCLAB_THREADS", "4")
    _, trace2 = train(model, tr, te, cfg)
    assert np.array_equal(trace1.rows, trace2.rows)


def test_train_lr_scaling_zero_equivalent():
    # Adam has no lr=0 (validation requires > 0); the closest contract is
    # that two runs with the same seed and different data orderings of a
    # full batch coincide, and that epochs=1 with tiny lr barely moves.
    tr, te = _blobs_sets(total=60)
    model = _model("ProjF", 2, 1, 2)
    cfg = TrainConfig(epochs=1, learning_rate=1e-12, seed=5)
    theta, _ = train(model, tr, te, cfg)
    rng = np.random.default_rng([cfg.seed, 0])
    from qmclab.circuit import init_params

    theta0 = init_params(model.spec, rng).reshape(-1)
    assert np.abs(theta - theta0).max() < 1e-9


def test_train_minibatch_runs():
    tr, te = _blobs_sets(total=64)
    model = _model("ProjCE", 2, 2, 2)
    cfg = TrainConfig(epochs=3, batch_size=16, seed=1)
    _, trace = train(model, tr, te, cfg)
    assert len(trace) == 3
    assert np.isfinite(trace.column("train_loss")).all()


def test_train_eval_every_thins_test_metrics():
    tr, te = _blobs_sets(total=60)
    model = _model("ProjF", 2, 1, 2)
    cfg = TrainConfig(epochs=6, eval_every=3, seed=0)
    _, trace = train(model, tr, te, cfg)
    test_loss = trace.column("test_loss")
    assert np.isfinite(test_loss[[0, 3, 5]]).all()  # cadence plus final
    assert np.isnan(test_loss[[1, 2, 4]]).all()
    assert np.isfinite(trace.column("train_loss")).all()  # always recorded


@pytest.mark.slow
def test_train_loss_smoke_mostly_monotone():
    # full-batch Adam at the blobs2 desk defaults (500-sample cap, ProjF,
    # 4 layers, lr 0.05, 100 epochs): train loss non-increasing in >= 90%
    # of seeded runs (smoke property, not a theorem)
    from qmclab.data import dataset_preset, subsample

    full = dataset_preset("blobs2", seed=12345)
    good = 0
    for seed in range(10):
        ds = subsample(full, 500, seed)
        tr, te = split(ds, 0.75, seed)
        tr, te, _ = scale_features(tr, te)
        model = _model("ProjF", 2, 4, 2)
        cfg = TrainConfig(epochs=100, seed=seed, eval_every=100,
                          compute_indicators=False)
        _, trace = train(model, tr, te, cfg)
        losses = trace.column("train_loss")
        if np.all(np.diff(losses) <= 1e-12):
            good += 1
    assert good >= 9


def test_trace_csv_round_trip():
    tr, te = _blobs_sets(total=60)
    model = _model("PauliCE", 2, 1, 2)
    _, trace = train(model, tr, te, TrainConfig(epochs=2, seed=0))
    text = trace.to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "epoch,train_loss,test_loss,train_f1,test_f1,intra,inter"
    assert len(lines) == 3
