"""Command-line entry point: ``dagsurv {generate,train,evaluate,predict,propcheck}``.

Every run writes its outputs plus ``manifest.json`` into ``--out-dir``. Data
outputs depend only on inputs, config and seed; the wall-clock duration lives
in the manifest alone.

Exit status: 0 success, 2 usage error, 3 bad input data or config, 4 internal error.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import infotheory as it
from .errors import DagSurvError, FormatError
from .graph import DagSampleConfig, read_adjacency, sample_erdos_renyi_dag, write_adjacency
from .metrics import bootstrap
from .model import (
    PRESETS,
    DagSurvModel,
    ModelConfig,
    TrainConfig,
    load_model,
    predict,
    save_model,
    train,
)
from .synthgen import (
    SYNTHETIC_PRESETS,
    GenConfig,
    SyntheticPreset,
    apply_censoring,
    derive_seeds,
    discretize,
    generate,
    read_dataset,
    split,
    write_dataset,
)

EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 2, 3, 4

log = logging.getLogger("dagsurv")

GEN_KEYS = {f.name for f in dataclasses.fields(GenConfig)} - {"seed"}
PRESET_KEYS = {"num_covariates", "expected_degree", "censor_mode"}
GEN_KEYS |= PRESET_KEYS
MODEL_KEYS = {f.name for f in dataclasses.fields(ModelConfig)}
TRAIN_KEYS = {f.name for f in dataclasses.fields(TrainConfig)}


class UsageError(Exception):
    pass


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def load_config(path, allowed) -> dict:
    """JSON object whose keys must all be in ``allowed``."""
    if path is None:
        return {}
    path = Path(path)
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON ({exc.msg})", path, exc.lineno) from None
    if not isinstance(cfg, dict):
        raise FormatError("config must be a JSON object", path)
    unknown = sorted(set(cfg) - set(allowed))
    if unknown:
        raise FormatError(f"unknown config keys {unknown}; allowed: {sorted(allowed)}", path)
    return cfg


class Run:
    """Collects what goes into the manifest for one command."""

    def __init__(self, args):
        self.args = args
        self.out_dir = Path(args.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.inputs, self.outputs, self.config, self.seeds = {}, [], {}, {}
        self.t0 = time.perf_counter()

    def input(self, path):
        self.inputs[str(path)] = sha256(path)
        return path

    def output(self, name):
        path = self.out_dir / name
        self.outputs.append(str(path))
        return path

    def finish(self):
        manifest = {
            "command": self.args.command,
            "config": self.config,
            "seeds": self.seeds,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "duration_seconds": round(time.perf_counter() - self.t0, 3),
        }
        path = self.out_dir / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
        return manifest


def cmd_generate(args, run):
    cfg = load_config(args.config, GEN_KEYS)
    if args.config:
        run.input(args.config)
    base = SYNTHETIC_PRESETS[args.preset] if args.preset else SyntheticPreset(num_covariates=9)
    gen_fields = {k: v for k, v in cfg.items() if k not in PRESET_KEYS}
    try:
        preset = SyntheticPreset(
            num_covariates=int(cfg.get("num_covariates", base.num_covariates)),
            expected_degree=float(cfg.get("expected_degree", base.expected_degree)),
            gen=dataclasses.replace(base.gen, **gen_fields),
            censor_mode=cfg.get("censor_mode", base.censor_mode),
        )
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad generator config: {exc}", args.config) from None
    dag_seed, gen_seed, censor_seed, _ = derive_seeds(args.seed)
    if args.adjacency:
        dag = read_adjacency(run.input(args.adjacency))
        dag_seed = None
    else:
        dag = sample_erdos_renyi_dag(DagSampleConfig(
            preset.num_covariates + 1, preset.expected_degree, seed=dag_seed))
    ds = generate(dag, dataclasses.replace(preset.gen, seed=gen_seed))
    ds = apply_censoring(ds, preset.gen.censor_fraction, seed=censor_seed,
                         mode=preset.censor_mode)
    write_dataset(ds, run.output("dataset.csv"))
    write_adjacency(dag, run.output("adjacency.csv"))
    run.config = {"preset": args.preset, **dataclasses.asdict(preset)}
    del run.config["gen"]["seed"]  # the derived seeds are recorded under "seeds"
    run.seeds = {"seed": args.seed, "dag": dag_seed, "generate": gen_seed,
                 "censor": censor_seed}
    log.info("wrote %d rows (%.1f%% censored), max time %.1f", len(ds),
             100 * ds.censored_fraction, ds.raw_times.max())


def cmd_train(args, run):
    cfg = load_config(args.config, MODEL_KEYS | TRAIN_KEYS | {"num_bins"})
    if args.config:
        run.input(args.config)
    model_cfg, lr = PRESETS[args.preset] if args.preset else (ModelConfig(), TrainConfig().lr)
    try:
        model_cfg = dataclasses.replace(model_cfg, **{k: v for k, v in cfg.items()
                                                      if k in MODEL_KEYS})
        train_fields = {k: v for k, v in cfg.items() if k in TRAIN_KEYS}
        train_fields.setdefault("lr", lr)
        train_fields["seed"] = train_fields.get("seed", args.seed)
        train_cfg = TrainConfig(**train_fields)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad training config: {exc}", args.config) from None
    dag = read_adjacency(run.input(args.adjacency))
    raw = read_dataset(run.input(args.data))
    if raw.num_covariates != dag.num_nodes - 1:
        raise FormatError(f"dataset has {raw.num_covariates} covariates but the DAG has "
                          f"{dag.num_nodes - 1} covariate nodes", args.data)
    ds = discretize(raw, num_bins=cfg.get("num_bins"))
    model_seed, batch_seed, split_seed = derive_seeds(train_cfg.seed, 3)
    tr, va, te = split(ds, seed=split_seed)
    if args.zero_dag:
        dag = dag.zeroed()
    model = DagSurvModel(dag, ds.horizon, model_cfg, seed=model_seed)
    model, history = train(model, tr, va, dataclasses.replace(train_cfg, seed=batch_seed))
    meta = {"max_time": ds.max_time, "split_seed": split_seed, "zero_dag": args.zero_dag,
            "data_sha256": sha256(args.data)}
    save_model(model, run.output("model.txt"), meta)
    run.output("history.csv").write_text(history.to_csv())
    run.config = {"preset": args.preset, "zero_dag": args.zero_dag,
                  "model": dataclasses.asdict(model_cfg), "train": dataclasses.asdict(train_cfg),
                  "horizon": ds.horizon, "max_time": ds.max_time,
                  "split_sizes": [len(tr), len(va), len(te)]}
    run.seeds = {"seed": train_cfg.seed, "model": model_seed, "batches": batch_seed,
                 "split": split_seed}
    log.info("best validation C_td %.4f at epoch %d", history.best_val_ctd, history.best_epoch)


def _load_eval_data(args, run):
    model, meta = load_model(run.input(args.model))
    raw = read_dataset(run.input(args.data))
    if raw.num_covariates != model.num_covariates:
        raise FormatError(f"dataset has {raw.num_covariates} covariates, model expects "
                          f"{model.num_covariates}", args.data)
    ds = discretize(raw, num_bins=model.horizon, max_time=meta["max_time"])
    if args.subset != "all":
        if sha256(args.data) != meta.get("data_sha256"):
            raise UsageError(f"--subset {args.subset} needs the dataset the model was trained "
                             "on; use --subset all for other data")
        parts = dict(zip(("train", "val", "test"), split(ds, seed=meta["split_seed"])))
        ds = parts[args.subset]
    return model, ds


def cmd_evaluate(args, run):
    model, ds = _load_eval_data(args, run)
    pred = predict(model, ds.covariates, args.latent_samples, seed=args.seed)
    report = bootstrap(pred.cdf, ds.time_bins, ds.events, b=args.b, seed=args.seed)
    report.write_csv(run.output("ctd_report.csv"))
    run.config = {"b": args.b, "subset": args.subset, "latent_samples": args.latent_samples,
                  "n": len(ds)}
    run.seeds = {"seed": args.seed}
    log.info("C_td %.4f, bootstrap median %.4f, notch [%.4f, %.4f]", report.point_estimate,
             report.bootstrap_median, report.notch_low, report.notch_high)


def cmd_predict(args, run):
    model, ds = _load_eval_data(args, run)
    pred = predict(model, ds.covariates, args.latent_samples, seed=args.seed)
    with open(run.output("survival.csv"), "w") as fh:
        fh.write(",".join(f"S{k}" for k in range(model.horizon + 1)) + "\n")
        for row in pred.survival:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    run.config = {"subset": args.subset, "latent_samples": args.latent_samples, "n": len(ds)}
    run.seeds = {"seed": args.seed}


def cmd_propcheck(args, run):
    if args.net:
        nets = [("file", it.read_net(run.input(args.net)))]
    else:
        rng = np.random.default_rng(args.seed)
        nets = [(f"random{k}", it.random_net(rng, num_nodes=int(rng.integers(2, 6)),
                                             max_card=4))
                for k in range(args.random)]
    lines = ["net,nodes,joint_bits,marginal_bits,gap_bits,dependent,gap_nonnegative"]
    bad = 0
    for name, net in nets:
        h, hsum, gap = it.entropy_gap(net)
        ok = gap >= -1e-12 and (gap > 1e-6 or not it.has_dependence(net))
        bad += not ok
        lines.append(f"{name},{net.dag.num_nodes},{h!r},{hsum!r},{gap!r},"
                     f"{int(it.has_dependence(net))},{int(ok)}")
    run.output("gaps.csv").write_text("\n".join(lines) + "\n")
    run.config = {"net": args.net, "random": args.random}
    run.seeds = {"seed": args.seed}
    log.info("%d nets checked, %d violations", len(nets), bad)
    if bad:
        raise DagSurvError(f"{bad} nets violate the entropy-gap property")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dagsurv", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def command(name, help_):
        c = sub.add_parser(name, help=help_)
        c.add_argument("--seed", type=int, default=0)
        c.add_argument("--config", help="JSON config file")
        c.add_argument("--out-dir", required=True)
        return c

    g = command("generate", "sample a DAG (or read one) and write a censored dataset")
    g.add_argument("--preset", choices=sorted(SYNTHETIC_PRESETS))
    g.add_argument("--adjacency", help="use this DAG instead of sampling one")

    t = command("train", "train a model on a dataset CSV and adjacency CSV")
    t.add_argument("--data", required=True)
    t.add_argument("--adjacency", required=True)
    t.add_argument("--preset", choices=sorted(PRESETS))
    t.add_argument("--zero-dag", action="store_true", help="ablation: replace A by 0")

    for name, help_ in (("evaluate", "bootstrap C_td of a checkpoint"),
                        ("predict", "write per-instance survival curves")):
        e = command(name, help_)
        e.add_argument("--model", required=True)
        e.add_argument("--data", required=True)
        e.add_argument("--subset", choices=["all", "train", "val", "test"], default="test")
        e.add_argument("--latent-samples", type=int, default=32)
        if name == "evaluate":
            e.add_argument("--b", type=int, default=1000, help="bootstrap resamples")

    pc = command("propcheck", "entropy gap of discrete nets with and without the DAG")
    src = pc.add_mutually_exclusive_group(required=True)
    src.add_argument("--net", help="net specification file")
    src.add_argument("--random", type=int, metavar="TRIALS")
    return p


COMMANDS = {"generate": cmd_generate, "train": cmd_train, "evaluate": cmd_evaluate,
            "predict": cmd_predict, "propcheck": cmd_propcheck}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    logging.captureWarnings(True)
    try:
        run = Run(args)
        COMMANDS[args.command](args, run)
        run.finish()
    except UsageError as exc:
        print(f"dagsurv {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DagSurvError, OSError, ValueError) as exc:
        print(f"dagsurv {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"dagsurv {args.command}: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
