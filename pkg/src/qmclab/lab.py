"""Experiment drivers, deterministic cell seeding, and result persistence.

Every sweep cell owns a private RNG stream derived by hashing the master
seed with the cell coordinates, so results are independent of scheduling
and identical across reruns of the same config. Rows are sorted by cell
coordinates before writing; CSV numbers use repr so reruns are
byte-identical within one build.

Result schemas:

- bp-scan:  obs_kind,locality,n_layers,n_qubits,loss,draws,loss_mean,loss_var,theory_proxy
- sweeps:   model_kind,n_layers,n_qubits,ratio,temperature,seed,train_loss,test_f1,train_f1,intra,inter
- haar:     dim,samples,seed,mean_fidelity,expected_mean,std_error
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from pathlib import Path

import numpy as np

from . import BUILD_ID, circuit, trainer
from .classifier import (
    LossConfig,
    loss_config_for_model,
    loss_value,
    macro_f1,
    observables_for_model,
    projector_set,
    uniform_pauli_set,
)
from .data import Dataset, dataset_preset, resample_imbalance, scale_features, subsample
from .indicators import nc_indicators
from .pauli import (
    PauliString,
    ProjectorObservable,
    haar_fidelity_stats,
    initial_state_profile,
    locality_profile,
    theoretical_variance_proxy,
)
from .parallel import map_ordered, worker_count
from .trainer import Model, TrainConfig, train

EXPERIMENTS = (
    "bp-scan",
    "train",
    "nc-sweep",
    "temp-sweep",
    "imbalance-sweep",
    "curse-sweep",
    "haar-baseline",
)

BP_COLUMNS = (
    "obs_kind", "locality", "n_layers", "n_qubits", "loss", "draws",
    "loss_mean", "loss_var", "theory_proxy",
)
SWEEP_COLUMNS = (
    "model_kind", "n_layers", "n_qubits", "ratio", "temperature", "seed",
    "train_loss", "test_f1", "train_f1", "intra", "inter",
)
HAAR_COLUMNS = ("dim", "samples", "seed", "mean_fidelity", "expected_mean", "std_error")


def cell_seed(master_seed: int, *coords) -> int:
    """Stable 63-bit seed from the master seed and cell coordinates."""
    canon = json.dumps([master_seed, *coords], sort_keys=True, default=str)
    digest = hashlib.sha256(canon.encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def default_learning_rate(dataset_name: str) -> float:
    return 0.01 if dataset_name.startswith("tetromino") else 0.05


# Desk-scale defaults; every value lands in the run manifest.
DESK_DEFAULTS: dict[str, dict] = {
    "bp-scan": {
        "dataset": {"preset": "blobs2", "subset": 128},
        "model": {"obs_kind": "pauli", "loss": "CrossEntropy",
                  "temperature": 0.01, "lambda": 1.0},
        "circuit": {"n_qubits": 8, "layer_grid": [1, 2, 3, 4, 5, 6]},
        "sweep": {"draws": 100},
        "output": "runs/bp-scan",
        "seed": 0,
    },
    "train": {
        "dataset": {"preset": "blobs2", "total": 500, "ratio": 1.0, "overrides": {}},
        "model": {"kind": "ProjF", "temperature": 0.01, "lambda": 1.0},
        "circuit": {"n_qubits": None, "n_layers": 4},
        "train": {"epochs": 100, "learning_rate": None, "batch_size": "full",
                  "eval_every": 1, "compute_indicators": True,
                  "centroid": "eigen"},
        "sweep": {"seeds": [0]},
        "output": "runs/train",
        "seed": 0,
    },
    "nc-sweep": {
        "dataset": {"preset": "blobs2", "total": 500, "ratio": 1.0, "overrides": {}},
        "model": {"kinds": ["PauliCE", "PauliF", "ProjCE", "ProjF", "PauliNonCommuting"],
                  "temperature": 0.01, "lambda": 1.0},
        "circuit": {"n_qubits": None, "layer_grid": [1, 2, 3, 4, 5, 6]},
        "train": {"epochs": 100, "learning_rate": None, "batch_size": "full",
                  "eval_every": 10, "compute_indicators": True,
                  "centroid": "eigen"},
        "sweep": {"seeds": [0, 1, 2, 3, 4]},
        "output": "runs/nc-sweep",
        "seed": 0,
    },
    "temp-sweep": {
        # 16 qubits (one per tetromino pixel) at 100 epochs is the costly
        # cell; the subset cap keeps the full 8x5 grid tractable on a
        # 2-core desk machine.
        "dataset": {"preset": "tetrominoes", "total": 80, "ratio": 1.0, "overrides": {}},
        "model": {"kind": "PauliCE", "lambda": 1.0},
        "circuit": {"n_qubits": None, "n_layers": 5},
        "train": {"epochs": 100, "learning_rate": None, "batch_size": "full",
                  "eval_every": 25, "compute_indicators": False,
                  "centroid": "eigen"},
        "sweep": {"temperature_grid": [1e-3, 3.727593720314938e-3,
                                       1.3894954943731374e-2, 5.179474679231213e-2,
                                       1.9306977288832496e-1, 7.196856730011514e-1,
                                       2.6826957952797246, 10.0],
                  "seeds": [0, 1, 2, 3, 4]},
        "output": "runs/temp-sweep",
        "seed": 0,
    },
    "curse-sweep": {
        "dataset": {"preset": "blobs2", "total": 500, "ratio": 1.0, "overrides": {}},
        "model": {"kind": "PauliCE", "temperature": 0.01, "lambda": 1.0},
        "circuit": {"qubit_grid": [2, 3, 4, 5, 6, 7, 8, 9, 10], "n_layers": 5},
        "train": {"epochs": 100, "learning_rate": None, "batch_size": "full",
                  "eval_every": 10, "compute_indicators": True,
                  "centroid": "eigen"},
        "sweep": {"seeds": [0, 1, 2, 3, 4], "emit_untrained": True},
        "output": "runs/curse-sweep",
        "seed": 0,
    },
    "imbalance-sweep": {
        "dataset": {"preset": "blobs8", "total": 500, "overrides": {}},
        "model": {"kinds": ["PauliCE", "PauliF", "ProjCE", "ProjF"],
                  "temperature": 0.01, "lambda": 1.0},
        "circuit": {"n_qubits": None, "n_layers": 5},
        "train": {"epochs": 100, "learning_rate": None, "batch_size": "full",
                  "eval_every": 10, "compute_indicators": True,
                  "centroid": "eigen"},
        "sweep": {"ratio_grid": [1.0, 0.5, 0.2, 0.1, 0.05],
                  "seeds": [0, 1, 2, 3, 4]},
        "output": "runs/imbalance-sweep",
        "seed": 0,
    },
    "haar-baseline": {
        "sweep": {"dims": [2, 16, 256], "samples": 100000},
        "output": "runs/haar-baseline",
        "seed": 0,
    },
    "gen-data": {
        "dataset": {"preset": "blobs2", "overrides": {}},
        "output": "runs/gen-data",
        "seed": 0,
    },
}


class ConfigError(ValueError):
    """Bad experiment configuration."""


def merge_config(experiment: str, overrides: dict | None = None) -> dict:
    if experiment not in DESK_DEFAULTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    merged = json.loads(json.dumps(DESK_DEFAULTS[experiment]))  # deep copy
    merged["experiment"] = experiment

    def deep_update(dst, src, path=""):
        for key, val in src.items():
            where = f"{path}.{key}" if path else key
            if key == "experiment":
                continue
            if key not in dst:
                raise ConfigError(f"unknown config key {where!r}")
            if key == "overrides":  # free-form generator kwargs
                dst[key] = val
            elif isinstance(dst[key], dict) and isinstance(val, dict):
                deep_update(dst[key], val, where)
            else:
                dst[key] = val

    if overrides:
        deep_update(merged, overrides)
    return merged


def apply_dotted_overrides(config: dict, assignments: list[str]) -> dict:
    """Apply --set key.path=value pairs; values parse as JSON when possible."""
    for item in assignments:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = config
        parts = key.split(".")
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                raise ConfigError(f"unknown config key {key!r}")
            node = node[part]
        if parts[-1] not in node:
            raise ConfigError(f"unknown config key {key!r}")
        node[parts[-1]] = value
    return config


# ---------------------------------------------------------------------------
# training cells


def _prepare_cell_data(
    preset: str, total: int, ratio: float, seed_idx: int, master_seed: int,
    overrides: dict | None = None,
) -> tuple[Dataset, Dataset]:
    """Generate, (im)balance-subsample, split 3/4, and scale a dataset."""
    gen_seed = cell_seed(master_seed, preset, "gen")
    full = dataset_preset(preset, gen_seed, **(overrides or {}))
    resample_seed = cell_seed(master_seed, preset, ratio, total, seed_idx, "resample")
    if ratio == 1.0:
        ds = subsample(full, total, resample_seed)
    else:
        ds = resample_imbalance(full, ratio, total, resample_seed)
    split_seed = cell_seed(master_seed, preset, ratio, total, seed_idx, "split")
    train_set, test_set = trainer.split(ds, 0.75, split_seed)
    train_set, test_set, _ = scale_features(train_set, test_set)
    return train_set, test_set


def run_training_cell(
    *,
    preset: str,
    model_kind: str,
    n_qubits: int | None,
    n_layers: int,
    temperature: float,
    lam: float,
    learning_rate: float | None,
    epochs: int,
    batch_size,
    seed_idx: int,
    master_seed: int,
    ratio: float = 1.0,
    total: int = 500,
    eval_every: int = 1,
    compute_indicators: bool = True,
    centroid: str = "eigen",
    emit_untrained: bool = False,
    dataset_overrides: dict | None = None,
) -> list[dict]:
    """Train one sweep cell; returns one result row (plus one '-init' row
    with pre-training metrics when `emit_untrained` is set)."""
    train_set, test_set = _prepare_cell_data(
        preset, total, ratio, seed_idx, master_seed, dataset_overrides
    )
    n_q = n_qubits if n_qubits is not None else train_set.n_features
    spec = circuit.CircuitSpec(n_q, n_layers, train_set.n_features)
    observables = observables_for_model(model_kind, n_q, train_set.n_classes)
    loss_cfg = loss_config_for_model(model_kind, temperature, lam)
    lr = learning_rate if learning_rate is not None else default_learning_rate(preset)
    train_seed = cell_seed(
        master_seed, preset, total, ratio, n_layers, n_q, seed_idx, "train"
    )
    config = TrainConfig(
        epochs=epochs,
        learning_rate=lr,
        batch_size=batch_size,
        seed=train_seed,
        eval_every=eval_every,
        compute_indicators=compute_indicators,
        centroid_method=centroid,
    )
    model = Model(spec, observables, loss_cfg)

    rows = []
    if emit_untrained:
        theta0 = circuit.init_params(spec, np.random.default_rng([train_seed, 0]))
        rows.append(
            _metrics_row(
                f"{model_kind}-init", spec, observables, loss_cfg, theta0,
                train_set, test_set, n_layers, ratio, temperature, seed_idx,
                centroid, compute_indicators,
            )
        )

    _, trace = train(model, train_set, test_set, config)
    uses_temperature = loss_cfg.loss == "CrossEntropy"
    rows.append({
        "model_kind": model_kind,
        "n_layers": n_layers,
        "n_qubits": n_q,
        "ratio": ratio,
        "temperature": temperature if uses_temperature else None,
        "seed": seed_idx,
        "train_loss": trace.final("train_loss"),
        "test_f1": trace.final("test_f1"),
        "train_f1": trace.final("train_f1"),
        "intra": trace.final("intra") if compute_indicators else None,
        "inter": trace.final("inter") if compute_indicators else None,
    })
    return rows


def _metrics_row(
    kind_label, spec, observables, loss_cfg, theta, train_set, test_set,
    n_layers, ratio, temperature, seed_idx, centroid, compute_indicators,
):
    packed = circuit.pack_observables(observables, spec.n_qubits)
    workers = worker_count()

    def states_of(features):
        return np.array(map_ordered(
            lambda x: circuit.evolve_amplitudes(spec, x, theta), features, workers
        ))

    tr_states = states_of(train_set.features)
    te_states = states_of(test_set.features)

    def f1_of(states, labels):
        z = np.array([circuit.expectations_from_amplitudes(s, packed) for s in states])
        return macro_f1(labels, z.argmax(axis=1), observables.n_classes)

    row = {
        "model_kind": kind_label,
        "n_layers": n_layers,
        "n_qubits": spec.n_qubits,
        "ratio": ratio,
        "temperature": temperature if loss_cfg.loss == "CrossEntropy" else None,
        "seed": seed_idx,
        "train_loss": None,
        "test_f1": f1_of(te_states, test_set.labels),
        "train_f1": f1_of(tr_states, train_set.labels),
        "intra": None,
        "inter": None,
    }
    if compute_indicators:
        ind = nc_indicators(tr_states, train_set.labels, centroid)
        row["intra"] = ind.intra
        row["inter"] = ind.inter
    return row


# ---------------------------------------------------------------------------
# experiment drivers (each returns a list of row dicts)


def bp_scan(config: dict) -> list[dict]:
    """Loss mean/variance over random parameter draws per observable grid point."""
    master = config["seed"]
    ds_cfg, model_cfg, circ_cfg = config["dataset"], config["model"], config["circuit"]
    n_q = circ_cfg["n_qubits"]
    layer_grid = list(circ_cfg["layer_grid"])
    draws = config["sweep"]["draws"]
    obs_kind = model_cfg["obs_kind"]
    if obs_kind not in ("pauli", "projector"):
        raise ConfigError(f"bp-scan obs_kind must be pauli|projector, got {obs_kind!r}")

    gen_seed = cell_seed(master, ds_cfg["preset"], "gen")
    full = dataset_preset(ds_cfg["preset"], gen_seed)
    subset = ds_cfg["subset"]
    pick = np.random.default_rng(cell_seed(master, ds_cfg["preset"], subset, "bp-data"))
    idx = pick.permutation(full.size)[:subset]
    ds = Dataset(full.name, full.features[idx], full.labels[idx], full.n_classes)
    ds, _, _ = scale_features(ds, ds)
    k_classes = ds.n_classes

    if obs_kind == "pauli":
        if k_classes != 3:
            raise ConfigError("the Pauli locality scan uses the 3-observable "
                              f"{{X^k,Y^k,Z^k}} set; dataset has {k_classes} classes")
        grid = [("pauli", k, uniform_pauli_set(n_q, k)) for k in range(1, n_q + 1)]
    else:
        m_min = max(1, math.ceil(math.log2(k_classes)))
        grid = [
            ("projector", m, projector_set(n_q, k_classes, m))
            for m in range(m_min, n_q + 1)
        ]

    loss_cfg = LossConfig(model_cfg["loss"], model_cfg["temperature"], model_cfg["lambda"])
    state_prof = initial_state_profile(n_q)
    workers = worker_count()
    rows = []
    for n_l in layer_grid:
        spec = circuit.CircuitSpec(n_q, n_l, ds.n_features)
        packed = [circuit.pack_observables(obs, n_q) for _, _, obs in grid]
        rng = np.random.default_rng(cell_seed(master, "bp-draws", n_l))
        losses = np.zeros((len(grid), draws))
        for d in range(draws):
            theta = circuit.init_params(spec, rng)
            states = map_ordered(
                lambda x: circuit.evolve_amplitudes(spec, x, theta),
                ds.features, workers,
            )
            acc = np.zeros(len(grid))
            for s, y in zip(states, ds.labels):
                for gi, pk in enumerate(packed):
                    z = circuit.expectations_from_amplitudes(s, pk)
                    acc[gi] += loss_value(z, y, loss_cfg)
            losses[:, d] = acc / ds.size
        for gi, (kind, loc, obs) in enumerate(grid):
            if kind == "pauli":
                proxy_obs = locality_profile(PauliString(obs.members[0].letters), n_q)
            else:
                proxy_obs = locality_profile(ProjectorObservable(loc, 0), n_q)
            rows.append({
                "obs_kind": kind,
                "locality": loc,
                "n_layers": n_l,
                "n_qubits": n_q,
                "loss": loss_cfg.loss,
                "draws": draws,
                "loss_mean": float(losses[gi].mean()),
                "loss_var": float(losses[gi].var(ddof=1)),
                "theory_proxy": theoretical_variance_proxy(state_prof, proxy_obs),
            })
    rows.sort(key=lambda r: (r["obs_kind"], r["n_layers"], r["locality"]))
    return rows


def _sweep_common(config):
    tr = config["train"]
    return dict(
        epochs=tr["epochs"],
        learning_rate=tr["learning_rate"],
        batch_size=tr["batch_size"],
        eval_every=tr["eval_every"],
        compute_indicators=tr["compute_indicators"],
        centroid=tr["centroid"],
        master_seed=config["seed"],
        dataset_overrides=config["dataset"].get("overrides") or {},
    )


def _sort_sweep(rows, blank: tuple[str, ...] = ()):
    for row in rows:
        for col in blank:  # columns that do not apply to this sweep
            row[col] = None
    rows.sort(key=lambda r: (
        str(r["model_kind"]), r["n_layers"], r["n_qubits"],
        r["ratio"] if r["ratio"] is not None else -1.0,
        r["temperature"] if r["temperature"] is not None else -1.0,
        r["seed"],
    ))
    return rows


def nc_sweep(config: dict) -> list[dict]:
    """Final F1/intra/inter per (model kind, layer count, seed)."""
    common = _sweep_common(config)
    ds = config["dataset"]
    rows = []
    for kind in config["model"]["kinds"]:
        for n_l in config["circuit"]["layer_grid"]:
            for seed_idx in config["sweep"]["seeds"]:
                rows.extend(run_training_cell(
                    preset=ds["preset"], total=ds["total"], ratio=ds["ratio"],
                    model_kind=kind, n_qubits=config["circuit"]["n_qubits"],
                    n_layers=n_l,
                    temperature=config["model"]["temperature"],
                    lam=config["model"]["lambda"],
                    seed_idx=seed_idx, **common,
                ))
    return _sort_sweep(rows, blank=("ratio",))


def temp_sweep(config: dict) -> list[dict]:
    """Final train loss/F1 and test F1 across the softmax temperature grid."""
    kind = config["model"]["kind"]
    if not kind.endswith("CE") and kind != "PauliNonCommuting":
        raise ConfigError("temp-sweep applies to cross-entropy models only")
    common = _sweep_common(config)
    ds = config["dataset"]
    rows = []
    for temperature in config["sweep"]["temperature_grid"]:
        for seed_idx in config["sweep"]["seeds"]:
            rows.extend(run_training_cell(
                preset=ds["preset"], total=ds["total"], ratio=ds["ratio"],
                model_kind=kind, n_qubits=config["circuit"]["n_qubits"],
                n_layers=config["circuit"]["n_layers"],
                temperature=temperature, lam=config["model"]["lambda"],
                seed_idx=seed_idx, **common,
            ))
    return _sort_sweep(rows, blank=("ratio",))


def curse_sweep(config: dict) -> list[dict]:
    """Indicators vs qubit count on 2-feature data with cyclic tiling."""
    common = _sweep_common(config)
    ds = config["dataset"]
    rows = []
    for n_q in config["circuit"]["qubit_grid"]:
        for seed_idx in config["sweep"]["seeds"]:
            rows.extend(run_training_cell(
                preset=ds["preset"], total=ds["total"], ratio=ds["ratio"],
                model_kind=config["model"]["kind"], n_qubits=n_q,
                n_layers=config["circuit"]["n_layers"],
                temperature=config["model"]["temperature"],
                lam=config["model"]["lambda"],
                seed_idx=seed_idx,
                emit_untrained=config["sweep"]["emit_untrained"],
                **common,
            ))
    return _sort_sweep(rows, blank=("ratio",))


def imbalance_sweep(config: dict) -> list[dict]:
    """Final metrics per (model kind, imbalance ratio, seed)."""
    common = _sweep_common(config)
    ds = config["dataset"]
    rows = []
    for kind in config["model"]["kinds"]:
        for ratio in config["sweep"]["ratio_grid"]:
            for seed_idx in config["sweep"]["seeds"]:
                rows.extend(run_training_cell(
                    preset=ds["preset"], total=ds["total"], ratio=ratio,
                    model_kind=kind, n_qubits=config["circuit"]["n_qubits"],
                    n_layers=config["circuit"]["n_layers"],
                    temperature=config["model"]["temperature"],
                    lam=config["model"]["lambda"],
                    seed_idx=seed_idx, **common,
                ))
    return _sort_sweep(rows)


def train_single(config: dict) -> tuple[list[dict], str]:
    """One training run; returns (rows, trace CSV text)."""
    ds = config["dataset"]
    common = _sweep_common(config)
    seed_idx = config["sweep"]["seeds"][0]
    train_set, test_set = _prepare_cell_data(
        ds["preset"], ds["total"], ds["ratio"], seed_idx, config["seed"],
        common["dataset_overrides"],
    )
    n_q = config["circuit"]["n_qubits"] or train_set.n_features
    n_l = config["circuit"]["n_layers"]
    kind = config["model"]["kind"]
    spec = circuit.CircuitSpec(n_q, n_l, train_set.n_features)
    observables = observables_for_model(kind, n_q, train_set.n_classes)
    loss_cfg = loss_config_for_model(
        kind, config["model"]["temperature"], config["model"]["lambda"]
    )
    lr = common["learning_rate"] or default_learning_rate(ds["preset"])
    train_seed = cell_seed(
        config["seed"], ds["preset"], ds["total"], ds["ratio"], n_l, n_q,
        seed_idx, "train",
    )
    tconf = TrainConfig(
        epochs=common["epochs"], learning_rate=lr, batch_size=common["batch_size"],
        seed=train_seed, eval_every=common["eval_every"],
        compute_indicators=common["compute_indicators"],
        centroid_method=common["centroid"],
    )
    _, trace = train(Model(spec, observables, loss_cfg), train_set, test_set, tconf)
    uses_t = loss_cfg.loss == "CrossEntropy"
    row = {
        "model_kind": kind, "n_layers": n_l, "n_qubits": n_q,
        "ratio": ds["ratio"],
        "temperature": config["model"]["temperature"] if uses_t else None,
        "seed": seed_idx,
        "train_loss": trace.final("train_loss"),
        "test_f1": trace.final("test_f1"),
        "train_f1": trace.final("train_f1"),
        "intra": trace.final("intra") if common["compute_indicators"] else None,
        "inter": trace.final("inter") if common["compute_indicators"] else None,
    }
    return [row], trace.to_csv()


def haar_baseline(config: dict) -> list[dict]:
    rows = []
    samples = config["sweep"]["samples"]
    for dim in config["sweep"]["dims"]:
        seed = cell_seed(config["seed"], "haar", dim)
        mean, _hist = haar_fidelity_stats(dim, samples, seed)
        # Var[F] for F ~ Beta(1, d-1)
        var = (dim - 1) / ((dim + 1) * dim**2)
        rows.append({
            "dim": dim, "samples": samples, "seed": seed,
            "mean_fidelity": mean, "expected_mean": 1.0 / dim,
            "std_error": math.sqrt(var / samples),
        })
    rows.sort(key=lambda r: r["dim"])
    return rows


# ---------------------------------------------------------------------------
# persistence


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if np.isnan(value):
            return ""
        return repr(value)
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_rows(path: Path, columns: tuple[str, ...], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row.get(c)) for c in columns])


def read_rows(path: str | Path) -> tuple[list[str], list[dict]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return list(reader.fieldnames or []), list(reader)


_DRIVERS = {
    "bp-scan": (bp_scan, BP_COLUMNS),
    "nc-sweep": (nc_sweep, SWEEP_COLUMNS),
    "temp-sweep": (temp_sweep, SWEEP_COLUMNS),
    "curse-sweep": (curse_sweep, SWEEP_COLUMNS),
    "imbalance-sweep": (imbalance_sweep, SWEEP_COLUMNS),
    "haar-baseline": (haar_baseline, HAAR_COLUMNS),
}


def run_experiment(config: dict, out_dir: str | Path | None = None) -> Path:
    """Run an experiment config, write results.csv + manifest.json."""
    experiment = config["experiment"]
    out = Path(out_dir if out_dir is not None else config["output"])
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    if experiment == "train":
        rows, trace_csv = train_single(config)
        columns = SWEEP_COLUMNS
        (out / "trace.csv").write_text(trace_csv)
    elif experiment in _DRIVERS:
        driver, columns = _DRIVERS[experiment]
        rows = driver(config)
    else:
        raise ConfigError(f"unknown experiment {experiment!r}")
    write_rows(out / "results.csv", columns, rows)
    manifest = {
        "experiment": experiment,
        "config": config,
        "seed": config["seed"],
        "build": BUILD_ID,
        "started_unix": started,
        "wall_seconds": time.time() - started,
        "rows": len(rows),
        "workers": worker_count(),
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out / "results.csv"
