"""Adam optimization of circuit parameters, train/test split, epoch metrics.

Training is full-batch by default (one Adam step per epoch); mini-batching
shuffles with a per-epoch stream derived from the config seed. The loss
gradient is assembled by the chain rule: per-sample head weights
d(loss)/d<O_k> feed one adjoint sweep per sample.

Each trace row reports the mean training loss seen by that epoch's update
(pre-step) and, on evaluation epochs, post-step train/test F1, test loss,
and neural-collapse indicators on the training split. Setting
``eval_every > 1`` thins the expensive evaluations (the final epoch is
always evaluated); skipped entries hold NaN.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import circuit
from .circuit import CircuitSpec
from .classifier import LossConfig, ObservableSet, loss_and_weights, loss_value, macro_f1
from .data import Dataset
from .indicators import nc_indicators
from .parallel import map_ordered, worker_count


class TrainingAbort(RuntimeError):
    """Non-finite loss or gradient encountered during training."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 0.05
    batch_size: int | str = "full"
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    eval_every: int = 1
    compute_indicators: bool = True
    centroid_method: str = "eigen"

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.batch_size != "full" and int(self.batch_size) < 1:
            raise ValueError("batch_size must be 'full' or >= 1")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")


@dataclass(frozen=True)
class Model:
    spec: CircuitSpec
    observables: ObservableSet
    loss: LossConfig


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0


TRACE_COLUMNS = ("epoch", "train_loss", "test_loss", "train_f1", "test_f1", "intra", "inter")


@dataclass
class TrainingTrace:
    rows: np.ndarray = field(repr=False)  # (epochs, 7), columns TRACE_COLUMNS

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, TRACE_COLUMNS.index(name)]

    def final(self, name: str) -> float:
        return float(self.column(name)[-1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for row in self.rows:
            writer.writerow([int(row[0])] + [repr(float(v)) for v in row[1:]])
        return buf.getvalue()


def split(dataset: Dataset, ratio: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic shuffled split into floor(N*ratio) train + rest test."""
    if not 0 < ratio < 1:
        raise ValueError("split ratio must be in (0, 1)")
    n = dataset.size
    n_train = int(np.floor(n * ratio))
    if n_train == 0 or n_train == n:
        raise ValueError(f"split of {n} samples at ratio {ratio} empties one side")
    perm = np.random.default_rng(seed).permutation(n)
    tr, te = perm[:n_train], perm[n_train:]
    return (
        Dataset(dataset.name, dataset.features[tr], dataset.labels[tr], dataset.n_classes),
        Dataset(dataset.name, dataset.features[te], dataset.labels[te], dataset.n_classes),
    )


def adam_step(
    params: np.ndarray, grads: np.ndarray, state: AdamState, config: TrainConfig
) -> tuple[np.ndarray, AdamState]:
    """One Adam update with bias correction; returns fresh (params, state)."""
    if params.shape != grads.shape:
        raise ValueError("parameter and gradient shapes differ")
    if not np.all(np.isfinite(grads)):
        raise TrainingAbort("non-finite gradient")
    b1, b2 = config.adam_beta1, config.adam_beta2
    t = state.t + 1
    m = b1 * state.m + (1 - b1) * grads
    v = b2 * state.v + (1 - b2) * grads**2
    m_hat = m / (1 - b1**t)
    v_hat = v / (1 - b2**t)
    new = params - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_eps)
    return new, AdamState(m, v, t)


def _evolve_all(spec, enc_rows, theta3, workers):
    def job(enc):
        return circuit.evolve_prepared(spec, enc, theta3)

    return np.array(map_ordered(job, enc_rows, workers))


def _batch_loss_grad(spec, packed, loss_cfg, enc_rows, labels, theta3, workers):
    """Mean loss and mean chain-rule gradient over one batch."""

    def job(args):
        enc, y = args
        amps = circuit.evolve_prepared(spec, enc, theta3)
        z = circuit.expectations_from_amplitudes(amps, packed)
        loss, w = loss_and_weights(z, y, loss_cfg)
        grad = circuit.gradient_prepared(spec, enc, theta3, packed, w, amps)
        return loss, grad

    results = map_ordered(job, zip(enc_rows, labels), workers)
    losses = np.array([r[0] for r in results])
    grad = np.zeros(spec.n_params)
    for _, g in results:  # fixed index order
        grad += g
    return float(losses.mean()), grad / len(results)


def _eval_metrics(spec, packed, loss_cfg, enc_rows, labels, theta3, workers):
    states = _evolve_all(spec, enc_rows, theta3, workers)
    z = np.array(
        [circuit.expectations_from_amplitudes(amps, packed) for amps in states]
    )
    preds = z.argmax(axis=1)
    losses = [loss_value(z[i], labels[i], loss_cfg) for i in range(len(labels))]
    k = z.shape[1]
    return float(np.mean(losses)), macro_f1(labels, preds, k), states


def train(
    model: Model, train_set: Dataset, test_set: Dataset, config: TrainConfig
) -> tuple[np.ndarray, TrainingTrace]:
    """Optimize the circuit on `train_set`; returns final angles and trace."""
    spec = model.spec
    if train_set.n_classes != model.observables.n_classes:
        raise ValueError("dataset classes do not match the observable set")
    if config.batch_size != "full" and int(config.batch_size) > train_set.size:
        raise ValueError("batch_size exceeds the training set")
    workers = worker_count()
    packed = circuit.pack_observables(model.observables, spec.n_qubits)
    init_rng = np.random.default_rng([config.seed, 0])
    shuffle_rng = np.random.default_rng([config.seed, 1])
    theta = circuit.init_params(spec, init_rng).reshape(-1)
    adam = AdamState(np.zeros(spec.n_params), np.zeros(spec.n_params))
    enc_train = circuit.prepare_encodings(spec, train_set.features)
    enc_test = circuit.prepare_encodings(spec, test_set.features)

    n_train = train_set.size
    batch = n_train if config.batch_size == "full" else int(config.batch_size)
    rows = np.full((config.epochs, len(TRACE_COLUMNS)), np.nan)

    for epoch in range(config.epochs):
        theta3 = np.ascontiguousarray(theta.reshape(spec.n_layers, spec.n_qubits, 3))
        if batch == n_train:
            order = np.arange(n_train)
        else:
            order = shuffle_rng.permutation(n_train)
        epoch_losses = []
        for start in range(0, n_train, batch):
            idx = order[start : start + batch]
            loss, grad = _batch_loss_grad(
                spec, packed, model.loss,
                enc_train[idx], train_set.labels[idx], theta3, workers,
            )
            if not np.isfinite(loss):
                raise TrainingAbort(f"non-finite loss at epoch {epoch}")
            try:
                theta, adam = adam_step(theta, grad, adam, config)
            except TrainingAbort as exc:
                raise TrainingAbort(f"{exc} at epoch {epoch}") from None
            epoch_losses.append(loss)
            if start + batch < n_train:  # mini-batches see the fresh angles
                theta3 = np.ascontiguousarray(
                    theta.reshape(spec.n_layers, spec.n_qubits, 3)
                )

        rows[epoch, 0] = epoch
        rows[epoch, 1] = float(np.mean(epoch_losses))
        if epoch % config.eval_every == 0 or epoch == config.epochs - 1:
            theta3 = np.ascontiguousarray(theta.reshape(spec.n_layers, spec.n_qubits, 3))
            _, train_f1, train_states = _eval_metrics(
                spec, packed, model.loss,
                enc_train, train_set.labels, theta3, workers,
            )
            test_loss, test_f1, _ = _eval_metrics(
                spec, packed, model.loss,
                enc_test, test_set.labels, theta3, workers,
            )
            rows[epoch, 2] = test_loss
            rows[epoch, 3] = train_f1
            rows[epoch, 4] = test_f1
            if config.compute_indicators:
                ind = nc_indicators(
                    train_states, train_set.labels, config.centroid_method
                )
                rows[epoch, 5] = ind.intra
                rows[epoch, 6] = ind.inter

    return theta, TrainingTrace(rows)
