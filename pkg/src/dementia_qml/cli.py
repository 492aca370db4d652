"""Command-line experiment runner.

    python -m dementia_qml run --config experiment.cfg
    python -m dementia_qml synth --out cohort.csv
    python -m dementia_qml rank --data cohort.csv --label-column label

``run`` sweeps the feature count k over the configured list and repeats each
k for every seed: split, rank features on the training split, keep the top k,
scale, then train and evaluate a VQC (k qubits) and a linear SVM on the same
scaled matrices. Results go to ``results.json``, ``summary.csv`` and one
``plot_<metric>.csv`` per metric (test-split mean and sd over seeds).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kvfile
from .circuits import DATA_MAPS, AnsatzSpec, FeatureMapSpec
from .data import Dataset, SynthSpec, generate_synthetic, load_csv, split
from .errors import ConfigurationError, DataLoadError, TrainingError
from .metrics import evaluate
from .optimizer import OptimizerConfig
from .preprocess import SCORERS, fit_scaler, rank_features, select_top_k, transform
from .svm import classify_svm_batch, train_svm
from .vqc import TrainConfig, classify_batch, train

log = logging.getLogger("dementia_qml")

OUTPUT_ENV = "DEMENTIA_QML_OUTPUT_DIR"
METRICS = ("accuracy", "precision", "recall", "f1")
MODELS = ("svm", "vqc")


class StageError(Exception):
    """An error tagged with the pipeline stage that raised it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[stage={stage}] {message}")
        self.stage = stage


def _int_list(text: str) -> tuple:
    return tuple(int(t) for t in text.replace(",", " ").split())


def _float_pair(text: str) -> tuple:
    values = tuple(float(t) for t in text.replace(",", " ").split())
    if len(values) != 2:
        raise ValueError(f"expected two numbers, got {text!r}")
    return values


@dataclass
class ExperimentConfig:
    data_csv: str = ""  # empty: synthetic cohort
    label_column: str = "label"
    positive_token: str = "1"
    synth_seed: int = 0
    synth_samples: int = 166
    synth_noise_features: int = 95
    feature_counts: tuple = (2, 3, 4, 5)
    seeds: tuple = (0, 1, 2, 3, 4)
    master_seed: int = 0
    test_fraction: float = 0.25
    scaled_range: tuple = (0.0, 1.0)
    scorer: str = "f_score"
    shots: int = 1024
    layers: int = 2
    repetitions: int = 2
    data_map: str = "product"
    loss: str = "cross_entropy"
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    svm_c: float = 1.0
    output_dir: str = "results"

    # config-file key -> (attribute, parser)
    KEYS = {
        "data.csv": ("data_csv", str),
        "data.label_column": ("label_column", str),
        "data.positive_token": ("positive_token", str),
        "synth.seed": ("synth_seed", int),
        "synth.n_samples": ("synth_samples", int),
        "synth.n_noise_features": ("synth_noise_features", int),
        "feature_counts": ("feature_counts", _int_list),
        "seeds": ("seeds", _int_list),
        "master_seed": ("master_seed", int),
        "test_fraction": ("test_fraction", float),
        "scaled_range": ("scaled_range", _float_pair),
        "scorer": ("scorer", str),
        "shots": ("shots", int),
        "vqc.layers": ("layers", int),
        "vqc.repetitions": ("repetitions", int),
        "vqc.data_map": ("data_map", str),
        "vqc.loss": ("loss", str),
        "svm.C": ("svm_c", float),
        "output_dir": ("output_dir", str),
    }
    OPTIMIZER_KEYS = {
        "optimizer.method": ("method", str),
        "optimizer.rho_begin": ("rho_begin", float),
        "optimizer.rho_end": ("rho_end", float),
        "optimizer.max_evaluations": ("max_evaluations", int),
    }

    @classmethod
    def from_items(cls, items: dict) -> "ExperimentConfig":
        cfg = cls()
        for key, raw in items.items():
            if key in cls.KEYS:
                attr, parse = cls.KEYS[key]
                target = cfg
            elif key in cls.OPTIMIZER_KEYS:
                attr, parse = cls.OPTIMIZER_KEYS[key]
                target = cfg.optimizer
            else:
                raise ConfigurationError(f"unknown config key {key!r}")
            try:
                setattr(target, attr, parse(raw))
            except ValueError as exc:
                raise ConfigurationError(f"{key}: cannot parse {raw!r} ({exc})") from None
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            items = kvfile.read(path)
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from None
        except ValueError as exc:
            raise ConfigurationError(f"{path}: {exc}") from None
        return cls.from_items(items)

    def validate(self, available_features: int | None = None) -> None:
        if not self.feature_counts:
            raise ConfigurationError("feature_counts is empty")
        if min(self.feature_counts) < 2:
            raise ConfigurationError("every feature count must be >= 2")
        if max(self.feature_counts) > 10:
            raise ConfigurationError("feature counts above 10 qubits are not supported")
        if available_features is not None and max(self.feature_counts) > available_features:
            raise ConfigurationError(
                f"feature count {max(self.feature_counts)} exceeds the {available_features} "
                "available features"
            )
        if len(set(self.feature_counts)) != len(self.feature_counts):
            raise ConfigurationError("feature_counts has duplicates")
        if not self.seeds or len(set(self.seeds)) != len(self.seeds):
            raise ConfigurationError("seeds must be a non-empty list without duplicates")
        if not 0 < self.test_fraction < 1:
            raise ConfigurationError("test_fraction must be in (0, 1)")
        if not self.scaled_range[0] < self.scaled_range[1]:
            raise ConfigurationError("scaled_range needs lo < hi")
        if self.scorer not in SCORERS:
            raise ConfigurationError(f"scorer must be one of {SCORERS}")
        if self.data_map not in DATA_MAPS:
            raise ConfigurationError(f"vqc.data_map must be one of {DATA_MAPS}")
        if self.shots < 0 or self.layers < 1 or self.repetitions < 1:
            raise ConfigurationError("shots must be >= 0, layers and repetitions >= 1")
        if not self.svm_c > 0:
            raise ConfigurationError("svm.C must be > 0")
        # the widest circuit has the most parameters, so it bounds the budget check
        self.optimizer.validate(2 * max(self.feature_counts) * (self.layers + 1))

    def echo(self) -> dict:
        """Resolved settings for the results file (output location excluded)."""
        out = {}
        for key, (attr, _) in self.KEYS.items():
            if attr != "output_dir":
                out[key] = _plain(getattr(self, attr))
        for key, (attr, _) in self.OPTIMIZER_KEYS.items():
            out[key] = _plain(getattr(self.optimizer, attr))
        return out


def _plain(value):
    return list(value) if isinstance(value, tuple) else value


def cell_seed(master_seed: int, k: int, seed: int) -> int:
    """Seed for the stochastic parts of one (k, seed) cell."""
    return int(np.random.SeedSequence([master_seed, k, seed]).generate_state(1)[0])


def split_seed(master_seed: int, seed: int) -> int:
    # independent of k, so every k of a given seed sees the same split
    return int(np.random.SeedSequence([master_seed, seed]).generate_state(1)[0])


def matrix_digest(*matrices) -> str:
    h = hashlib.sha256()
    for m in matrices:
        m = np.ascontiguousarray(m, dtype=np.float64)
        h.update(str(m.shape).encode())
        h.update(m.tobytes())
    return h.hexdigest()


def load_data(cfg: ExperimentConfig) -> Dataset:
    if cfg.data_csv:
        return load_csv(cfg.data_csv, cfg.label_column, cfg.positive_token)
    spec = SynthSpec(
        n_samples=cfg.synth_samples, n_noise_features=cfg.synth_noise_features, seed=cfg.synth_seed
    )
    return generate_synthetic(spec)


def _fit_svm(cfg, train_X, train_y, seed):
    ds = Dataset(train_X, train_y, [f"f{i}" for i in range(train_X.shape[1])])
    model = train_svm(ds, cfg.svm_c)
    return lambda X: classify_svm_batch(model, X)


def _fit_vqc(cfg, train_X, train_y, seed):
    k = train_X.shape[1]
    ds = Dataset(train_X, train_y, [f"f{i}" for i in range(k)])
    opt = OptimizerConfig(
        method=cfg.optimizer.method,
        rho_begin=cfg.optimizer.rho_begin,
        rho_end=cfg.optimizer.rho_end,
        max_evaluations=cfg.optimizer.max_evaluations,
        seed=seed,
    )
    tc = TrainConfig(optimizer=opt, loss=cfg.loss, shots=cfg.shots, seed=seed)
    model = train(ds, FeatureMapSpec(k, cfg.repetitions, cfg.data_map), AnsatzSpec(k, cfg.layers), tc)
    return lambda X: classify_batch(model, X)


FITTERS = {"svm": _fit_svm, "vqc": _fit_vqc}


def run_cell(cfg: ExperimentConfig, dataset: Dataset, k: int, seed: int, cache: dict) -> tuple:
    """Train and evaluate both models for one (k, seed). Returns (records, errors)."""
    records, errors = [], []
    if seed not in cache:
        try:
            train, test = split(dataset, cfg.test_fraction, split_seed(cfg.master_seed, seed))
        except ValueError as exc:
            raise StageError("split", str(exc)) from None
        try:
            ranking = rank_features(train, cfg.scorer, seed=seed)
        except ValueError as exc:
            raise StageError("rank", str(exc)) from None
        cache[seed] = (train, test, ranking)
    train, test, ranking = cache[seed]
    cols = select_top_k(ranking, k)
    params = fit_scaler(train.X[:, cols], cfg.scaled_range)
    train_X = transform(train.X[:, cols], params)
    test_X = transform(test.X[:, cols], params)
    features = [train.feature_names[c] for c in cols]
    rng_seed = cell_seed(cfg.master_seed, k, seed)

    for name in MODELS:
        # each model gets its own copies; the digest proves they were identical
        tx, vx = train_X.copy(), test_X.copy()
        digest = matrix_digest(tx, vx)
        start = time.perf_counter()
        try:
            predict = FITTERS[name](cfg, tx, train.y, rng_seed)
            preds = {"train": predict(tx), "test": predict(vx)}
        except (TrainingError, ValueError, ArithmeticError) as exc:
            errors.append({"model": name, "k": k, "seed": seed, "stage": f"train_{name}", "error": str(exc)})
            log.error("[stage=train_%s] k=%d seed=%d: %s", name, k, seed, exc)
            continue
        elapsed = (time.perf_counter() - start) * 1000.0
        for split_name, labels in (("train", train.y), ("test", test.y)):
            m = evaluate(preds[split_name], labels)
            records.append(
                {
                    "model": name,
                    "k": k,
                    "seed": seed,
                    "split": split_name,
                    "accuracy": m.accuracy,
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "degenerate": list(m.degenerate),
                    "features": features,
                    "wall_time_ms": elapsed,
                    "feature_digest": digest,
                }
            )
    return records, errors


def aggregate(records: list, split_name: str = "test") -> dict:
    """{(model, k): {metric: (mean, sd, n)}} over seeds for one split."""
    groups: dict = {}
    for r in records:
        if r["split"] == split_name:
            groups.setdefault((r["model"], r["k"]), []).append(r)
    out = {}
    for key, rows in sorted(groups.items()):
        stats = {}
        for metric in METRICS:
            values = np.array([r[metric] for r in rows], dtype=float)
            sd = float(values.std(ddof=1)) if values.size > 1 else 0.0
            stats[metric] = (float(values.mean()), sd, int(values.size))
        out[key] = stats
    return out


def plot_tables(records: list, models=MODELS) -> dict:
    """One CSV text per metric: columns k, model, mean, sd; rows sorted by (model, k)."""
    agg = aggregate(records, "test")
    present = {model for model, _ in agg}
    for model in models:
        if model not in present:
            log.warning("no test records for model %s; series omitted from plot data", model)
    tables = {}
    for metric in METRICS:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k", "model", "mean", "sd"])
        for (model, k), stats in agg.items():
            mean, sd, _ = stats[metric]
            writer.writerow([k, model, repr(mean), repr(sd)])
        tables[metric] = buf.getvalue()
    return tables


def summary_table(records: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["split", "model", "k", "n"]
    for metric in METRICS:
        header += [f"{metric}_mean", f"{metric}_sd"]
    writer.writerow(header)
    for split_name in ("train", "test"):
        for (model, k), stats in aggregate(records, split_name).items():
            row = [split_name, model, k, stats[METRICS[0]][2]]
            for metric in METRICS:
                mean, sd, _ = stats[metric]
                row += [f"{mean:.6f}", f"{sd:.6f}"]
            writer.writerow(row)
    return buf.getvalue()


def run_experiment(cfg: ExperimentConfig) -> tuple:
    """Run the sweep and write all outputs. Returns (results dict, output dir, ok flag)."""
    out_dir = Path(os.environ.get(OUTPUT_ENV) or cfg.output_dir)
    try:
        dataset = load_data(cfg)
    except (DataLoadError, ValueError) as exc:
        raise StageError("load", str(exc)) from None
    try:
        cfg.validate(dataset.n_features)
    except ConfigurationError as exc:
        raise StageError("config", str(exc)) from None

    records, errors, cache = [], [], {}
    expected = len(cfg.feature_counts) * len(cfg.seeds) * len(MODELS) * 2
    for seed in cfg.seeds:
        for k in cfg.feature_counts:
            log.info("cell k=%d seed=%d", k, seed)
            try:
                cell_records, cell_errors = run_cell(cfg, dataset, k, seed, cache)
            except StageError as exc:
                errors.append({"model": "*", "k": k, "seed": seed, "stage": exc.stage, "error": str(exc)})
                log.error("%s (k=%d seed=%d)", exc, k, seed)
                continue
            records.extend(cell_records)
            errors.extend(cell_errors)
    records.sort(key=lambda r: (r["model"], r["k"], r["seed"], r["split"]))

    results = {
        "config": cfg.echo(),
        "data": {
            "provenance": dataset.provenance,
            "n_samples": dataset.n_samples,
            "n_features": dataset.n_features,
        },
        "records": records,
        "errors": errors,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    kvfile.write_atomic(out_dir / "results.json", json.dumps(results, indent=2, sort_keys=True) + "\n")
    if records:
        kvfile.write_atomic(out_dir / "summary.csv", summary_table(records))
        for metric, text in plot_tables(records).items():
            kvfile.write_atomic(out_dir / f"plot_{metric}.csv", text)
    ok = not errors and len(records) == expected
    return results, out_dir, ok


def _cmd_run(args) -> int:
    try:
        cfg = ExperimentConfig.from_file(args.config)
    except ConfigurationError as exc:
        print(f"error [stage=config]: {exc}", file=sys.stderr)
        return 2
    try:
        results, out_dir, ok = run_experiment(cfg)
    except StageError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 1
    n = len(results["records"])
    print(f"wrote {n} records to {out_dir / 'results.json'}")
    if not ok:
        print(f"error: {len(results['errors'])} cell(s) failed; partial results kept", file=sys.stderr)
        return 1
    return 0


def _cmd_synth(args) -> int:
    spec = SynthSpec(n_samples=args.n_samples, n_noise_features=args.noise_features, seed=args.seed)
    ds = generate_synthetic(spec)
    ds.to_csv(args.out)
    print(f"wrote {ds.n_samples} rows x {ds.n_features} features to {args.out}")
    return 0


def _cmd_rank(args) -> int:
    try:
        ds = load_csv(args.data, args.label_column, args.positive_token)
        ranking = rank_features(ds, args.scorer, seed=args.seed)
    except (DataLoadError, ValueError) as exc:
        stage = "load" if isinstance(exc, DataLoadError) else "rank"
        print(f"error [stage={stage}]: {exc}", file=sys.stderr)
        return 1
    top = ranking.entries[: args.top] if args.top else ranking.entries
    degenerate = set(ranking.degenerate)
    for rank, (i, score) in enumerate(top, 1):
        flag = "  (degenerate)" if i in degenerate else ""
        print(f"{rank:3d}  {ds.feature_names[i]:<24} {score:.6g}{flag}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dementia_qml", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the VQC vs SVM feature-count sweep")
    p.add_argument("--config", required=True, help="key = value experiment file")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("synth", help="write a synthetic cohort CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-samples", type=int, default=166)
    p.add_argument("--noise-features", type=int, default=95)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("rank", help="print a feature ranking for a CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--label-column", default="label")
    p.add_argument("--positive-token", default="1")
    p.add_argument("--scorer", choices=SCORERS, default="f_score")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--top", type=int, default=0, help="show only the best N (0 = all)")
    p.set_defaults(func=_cmd_rank)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
