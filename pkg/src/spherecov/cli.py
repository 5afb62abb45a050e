"""Command-line front end.

    spherecov <validate|schoenberg|simulate|fit|cv|predict> --config RUN.json [--seed N] [--threads N] [--out DIR]

Every output file carries a provenance record (tool version, subcommand,
config hash, seed); JSON outputs under the ``provenance`` key, CSV outputs as
a leading ``# provenance:`` comment.  Failures print a JSON error object to
stderr and exit with status 1; usage errors exit with status 2.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, config_hash, load_config
from .data import Dataset, format_float, load_dataset, write_dataset
from .estimate import build_pairs, cl_objective, fit
from .models import (
    ModelB,
    ModelC,
    ModifiedGneitingMulti,
    assemble_covariance,
    check_validity_constraint,
    model_from_dict,
)
from .predict import CokrigingSystem, drop_one_cv
from .simulate import random_design, simulate
from .validity import (
    min_eigen_check,
    model_space_time_function,
    model_spatial_function,
    schoenberg_functions,
    schoenberg_matrices,
)

log = logging.getLogger("spherecov")

SUBCOMMANDS = ("validate", "schoenberg", "simulate", "fit", "cv", "predict")


class Run:
    """Shared state for one CLI invocation."""

    def __init__(self, subcommand: str, config: dict, seed: int, out: Path, base_dir: Path):
        self.subcommand = subcommand
        self.config = config
        self.seed = seed
        self.out = out
        self.base_dir = base_dir
        self.provenance = {
            "tool": "spherecov",
            "version": __version__,
            "subcommand": subcommand,
            "config_sha256": config_hash(config),
            "seed": seed,
        }
        self.written: list[str] = []

    def path(self, p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else self.base_dir / q

    def write_json(self, name: str, payload: dict):
        body = {"provenance": self.provenance, **payload}
        (self.out / name).write_text(json.dumps(body, indent=2, sort_keys=False) + "\n", encoding="utf-8")
        self.written.append(name)

    def write_csv(self, name: str, header: list[str], rows):
        with (self.out / name).open("w", encoding="utf-8", newline="") as fh:
            fh.write("# provenance: " + json.dumps(self.provenance, sort_keys=True) + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([format_float(x) if isinstance(x, (float, np.floating)) else x for x in row])
        self.written.append(name)

    def provenance_comment(self) -> str:
        return "provenance: " + json.dumps(self.provenance, sort_keys=True)

    # inputs
    def model(self):
        cfg = self.config
        if "fit_result" in cfg:
            fr = json.loads(self.path(cfg["fit_result"]).read_text(encoding="utf-8"))
            return model_from_dict({"family": fr["family"], "params": fr["params"]})
        if "model" not in cfg:
            raise ConfigError(f"'{self.subcommand}' needs a 'model' (or 'fit_result') section")
        return model_from_dict(cfg["model"])

    def dataset(self) -> Dataset:
        d = self.config.get("data")
        if not d:
            raise ConfigError(f"'{self.subcommand}' needs a 'data' section")
        return load_dataset(self.path(d["path"]), demean=d.get("demean", False), m=d.get("m"),
                            radius_km=self.config["radius_km"], units=d.get("units"))

    def design(self):
        d = self.config["design"]
        if "path" in d:
            ds = load_dataset(self.path(d["path"]), radius_km=self.config["radius_km"])
            return ds.coords, ds.var
        return random_design(d["n_sites"], d["n_times"], d["m"], self.seed,
                             tuple(d["lon_range"]), tuple(d["lat_range"]))


def _model_summary(model) -> dict:
    return model.to_dict()


def cmd_validate(run: Run) -> dict:
    model = run.model()
    cfg = run.config["validate"]
    out = {"model": _model_summary(model), "checks": {}}
    valid = True
    if isinstance(model, (ModelB, ModelC, ModifiedGneitingMulti)):
        rep = check_validity_constraint(model)
        out["checks"]["askey_condition"] = {"valid": rep.valid, "margin": rep.margin,
                                            "row_sums": list(rep.row_sums)}
        valid &= rep.valid
    coords, var = random_design(cfg["n_sites"], cfg["n_times"], model.m, run.seed)
    cov = assemble_covariance(coords, var, model, radius_km=run.config["radius_km"],
                              max_size=run.config["max_matrix_size"])
    eig = min_eigen_check(cov)
    out["checks"]["eigenvalues"] = {"n_rows": int(len(var)), "lambda_min": eig.lambda_min,
                                    "lambda_max": eig.lambda_max, "psd": eig.psd}
    valid &= eig.psd
    rep = schoenberg_matrices(model_spatial_function(model, 0.0, run.config["radius_km"]),
                              cfg["d"], cfg["N"])
    out["checks"]["schoenberg"] = rep.summary()
    valid &= rep.verdict == "supported"
    out["verdict"] = "valid" if valid else "invalid"
    run.write_json("validate.json", out)
    return out


def cmd_schoenberg(run: Run) -> dict:
    model = run.model()
    cfg = run.config["schoenberg"]
    radius = run.config["radius_km"]
    if cfg["mode"] == "matrices":
        rep = schoenberg_matrices(model_spatial_function(model, cfg["lag"], radius), cfg["d"], cfg["N"],
                                  cfg["nodes"])
        rows = [(n, i + 1, j + 1, float(rep.coefficients[n, i, j]))
                for n in range(rep.coefficients.shape[0])
                for i in range(model.m) for j in range(model.m)]
        run.write_csv("schoenberg.csv", ["n", "i", "j", "value"], rows)
    else:
        rep = schoenberg_functions(model_space_time_function(model, radius), cfg["d"], cfg["N"],
                                   cfg["nodes"], cfg["lags"], cfg["lag_step"])
        rows = [(n, i + 1, j + 1, float(rep.lags[l]), float(rep.coefficients[n, l, i, j]))
                for n in range(rep.coefficients.shape[0]) for l in range(rep.lags.size)
                for i in range(model.m) for j in range(model.m)]
        run.write_csv("schoenberg.csv", ["n", "i", "j", "lag", "value"], rows)
    summary = {"model": _model_summary(model), "mode": cfg["mode"], **rep.summary(),
               "tail_mass": rep.tail_mass.tolist()}
    run.write_json("schoenberg.json", summary)
    return summary


def cmd_simulate(run: Run) -> dict:
    model = run.model()
    coords, var = run.design()
    reps = simulate(model, coords, var, run.seed, run.config["simulate"]["n_reps"],
                    radius_km=run.config["radius_km"], max_size=run.config["max_matrix_size"])
    files = []
    for r in reps:
        name = f"realization_{r.replicate:03d}.csv"
        ds = Dataset.from_arrays(r.coords, r.var, r.values, m=model.m)
        write_dataset(run.out / name, ds, comments=[run.provenance_comment()])
        run.written.append(name)
        files.append(name)
    out = {"model": _model_summary(model), "n_rows": int(len(var)), "n_reps": len(reps), "files": files}
    run.write_json("simulate.json", out)
    return out


def cmd_fit(run: Run) -> dict:
    ds = run.dataset()
    cfg = run.config["fit"]
    family = cfg.get("family") or run.config.get("model", {}).get("family")
    if not family:
        raise ConfigError("fit needs fit.family or model.family")
    pairs = build_pairs(ds, cfg["ds_max_km"], cfg["dt_max"])
    if "init" in cfg:
        init = {"family": family, "params": cfg["init"]}
    elif "model" in run.config and run.config["model"].get("params"):
        init = run.config["model"]
    else:
        init = family
    res = fit(ds, init, bounds=cfg.get("bounds"), restarts=cfg["restarts"], seed=run.seed,
              max_iter=cfg["max_iter"], fatol=cfg["fatol"], pairs=pairs)
    out = res.to_dict()
    run.write_json("fit.json", out)
    return out


def cmd_cv(run: Run) -> dict:
    ds = run.dataset()
    model = run.model()
    cfg = run.config["fit"]
    pairs = build_pairs(ds, cfg["ds_max_km"], cfg["dt_max"])
    log_cl = cl_objective(ds, model, pairs)
    res = drop_one_cv(ds, model, log_cl=log_cl, max_size=run.config["max_matrix_size"])
    row = res.scores.row()
    run.write_csv("scores.csv", list(row), [list(row.values())])
    run.write_json("scores.json", {"model": _model_summary(model), **res.scores.to_dict()})
    rows = [(float(ds.lon[k]), float(ds.lat[k]), float(ds.time[k]), int(ds.var[k]) + 1,
             float(ds.value[k]), float(res.mean[k]), float(res.variance[k])) for k in range(len(ds))]
    run.write_csv("cv_predictions.csv", ["lon", "lat", "time", "var", "value", "mean", "variance"], rows)
    return res.scores.to_dict()


def cmd_predict(run: Run) -> dict:
    ds = run.dataset()
    model = run.model()
    cfg = run.config.get("predict", {})
    if "targets_path" in cfg:
        tgt = load_dataset(run.path(cfg["targets_path"]), radius_km=run.config["radius_km"])
        coords, var = tgt.coords, tgt.var
    elif cfg.get("targets"):
        coords = np.array([[t["lon"], t["lat"], t["time"]] for t in cfg["targets"]], dtype=float)
        var = np.array([t["var"] - 1 for t in cfg["targets"]], dtype=int)
    else:
        raise ConfigError("predict needs predict.targets or predict.targets_path")
    if np.any(var >= model.m):
        raise ConfigError("target variable id exceeds the model dimension")
    pred = CokrigingSystem(ds, model, max_size=run.config["max_matrix_size"]).predict(coords, var)
    rows = [(float(coords[k, 0]), float(coords[k, 1]), float(coords[k, 2]), int(var[k]) + 1,
             float(pred.mean[k]), float(pred.variance[k])) for k in range(len(var))]
    run.write_csv("predictions.csv", ["lon", "lat", "time", "var", "mean", "variance"], rows)
    out = {"model": _model_summary(model), "n_targets": int(len(var))}
    run.write_json("predict.json", out)
    return out


COMMANDS = {
    "validate": cmd_validate,
    "schoenberg": cmd_schoenberg,
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "cv": cmd_cv,
    "predict": cmd_predict,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="run configuration (JSON)")
    common.add_argument("--seed", type=int, help="random seed (overrides the config)")
    common.add_argument("--threads", type=int, help="BLAS threads (default: all cores)")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="spherecov", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{" + ",".join(SUBCOMMANDS) + "}")
    helps = {
        "validate": "check a model's validity (constraint, eigenvalues, Schoenberg)",
        "schoenberg": "Schoenberg coefficients of a model as CSV + JSON summary",
        "simulate": "simulate Gaussian realizations to long-format CSV",
        "fit": "pairwise composite-likelihood fit",
        "cv": "drop-one cokriging cross-validation scores",
        "predict": "cokriging predictions at target rows",
    }
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _threads(n: int | None):
    if n is None:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        overrides = {"seed": args.seed} if args.seed is not None else None
        config = load_config(args.config, overrides)
        base_dir = args.config.parent if args.config else Path.cwd()
        args.out.mkdir(parents=True, exist_ok=True)
        run = Run(args.command, config, config["seed"], args.out, base_dir)
        with _threads(args.threads):
            COMMANDS[args.command](run)
    except Exception as exc:  # reported as machine-readable JSON
        err = {"error": type(exc).__name__, "message": str(exc), "subcommand": args.command}
        print(json.dumps(err), file=sys.stderr)
        if args.verbose:
            raise
        return 1
    print(json.dumps({"status": "ok", "subcommand": args.command, "outputs": run.written}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
