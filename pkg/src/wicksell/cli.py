"""Command line interface.

Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Optional, TextIO

import numpy as np

from . import experiments as ex
from .errors import InputError, NumericalError, WicksellError
from .io import dumps_json, read_observations, write_columns, write_matrix
from .models import ObservationModel, parse_model
from .plotting import Series, emit_plot
from .sampling import sample_dataset

log = logging.getLogger("wicksell")

DEFAULTS: dict[str, dict[str, Any]] = {
    "estimate": {"model": "uniform01", "n": 200, "seed": 0, "format": "csv", "squared": False, "points": 101},
    "simulate": {"model": "uniform01", "n": 200, "seed": 0, "format": "csv"},
    "mc-variance": {"model": "uniform01", "x": 0.5, "n": 10_000, "reps": 200, "seed": 0, "format": "json", "threads": 1},
    "flat-rate": {
        "model": "flat:default",
        "x": 2.5,
        "ns": "1000,10000,100000",
        "reps": 500,
        "seed": 0,
        "ks_n": 10_000,
        "ks_reps": 2000,
        "paths": 2000,
        "format": "json",
        "threads": 1,
    },
    "gp-limit": {"model": "flat:default", "x": 2.5, "paths": 200, "seed": 0, "points": 241, "format": "json"},
    "lan-check": {
        "model": "uniform01",
        "x": 0.5,
        "h": "1,1",
        "n": 100_000,
        "reps": 500,
        "seed": 0,
        "format": "json",
        "threads": 1,
    },
}

FORMATS = ("csv", "json", "svg")


class UsageError(ValueError):
    pass


def _pair(text) -> tuple[float, float]:
    if isinstance(text, (list, tuple)):
        vals = [float(v) for v in text]
    else:
        vals = [float(v) for v in str(text).split(",")]
    if len(vals) != 2:
        raise UsageError(f"expected two comma-separated numbers, got {text!r}")
    return vals[0], vals[1]


def _grid(text: str) -> np.ndarray:
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"grid must be lo:hi:step, got {text!r}") from None
    if step <= 0 or hi < lo:
        raise UsageError("grid needs step > 0 and hi >= lo")
    k = int(math.floor((hi - lo) / step + 1e-9))
    return lo + step * np.arange(k + 1)


def _ints(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(float(v)) for v in text]
    return [int(float(v)) for v in str(text).split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wicksell", description="Estimation in the Wicksell corpuscle problem.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser):
        sp.add_argument("--config", help="JSON file with option values; flags take precedence")
        sp.add_argument("--model", help="model spec, e.g. uniform01, gamma:2:0.5, flat:default")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output file (or prefix for gp-limit csv); stdout if omitted")
        sp.add_argument("--format", choices=FORMATS)
        sp.add_argument("--threads", type=int, help="replication threads; results do not depend on it")

    sp = sub.add_parser("estimate", help="isotonic and naive estimates of F on a grid")
    common(sp)
    sp.add_argument("--input", help="CSV of circle radii (one column, optional header radius or z)")
    sp.add_argument("--squared", action="store_true", default=None, help="input values are already squared")
    sp.add_argument("--n", type=int, help="simulated sample size when no input is given")
    sp.add_argument("--grid", help="lo:hi:step (default: 101 points on [0, max Z])")

    sp = sub.add_parser("simulate", help="simulate observed squared circle radii")
    common(sp)
    sp.add_argument("--n", type=int)

    sp = sub.add_parser("mc-variance", help="replicated isotonic vs naive estimates at x")
    common(sp)
    for name, typ in (("--x", float), ("--n", int), ("--reps", int), ("--gamma0", float), ("--gammax", float)):
        sp.add_argument(name, type=typ)

    sp = sub.add_parser("flat-rate", help="rate and limit law of Vhat_n(x) where F is flat")
    common(sp)
    sp.add_argument("--x", type=float)
    sp.add_argument("--ns", help="comma-separated size ladder")
    sp.add_argument("--reps", type=int)
    sp.add_argument("--ks-n", dest="ks_n", type=int, help="size for the comparison with the limit law (0 skips)")
    sp.add_argument("--ks-reps", dest="ks_reps", type=int)
    sp.add_argument("--paths", type=int, help="limit-law draws")

    sp = sub.add_parser("gp-limit", help="simulate the limit process and its slope at x")
    common(sp)
    sp.add_argument("--x", type=float)
    sp.add_argument("--paths", type=int)
    sp.add_argument("--points", type=int, help="grid points")

    sp = sub.add_parser("lan-check", help="log-likelihood ratios along the perturbation path")
    common(sp)
    for name, typ in (("--x", float), ("--n", int), ("--reps", int), ("--gamma0", float), ("--gammax", float)):
        sp.add_argument(name, type=typ)
    sp.add_argument("--h", help="h1,h2")
    sp.add_argument("--eta", type=float, help="window override")
    return p


def resolve_config(args: argparse.Namespace) -> dict[str, Any]:
    cfg = dict(DEFAULTS[args.command])
    if getattr(args, "config", None):
        try:
            file_cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")
        cfg.update({k.replace("-", "_"): v for k, v in file_cfg.items() if k != "command"})
    for k, v in vars(args).items():
        if v is not None and k not in ("command", "config", "verbose"):
            cfg[k] = v
    for key in ("n", "reps", "paths"):
        if key in cfg and cfg[key] is not None and int(cfg[key]) < 1:
            raise UsageError(f"{key} must be at least 1")
    if "seed" in cfg and not 0 <= int(cfg["seed"]) < 2**64:
        raise UsageError("seed must be a 64-bit unsigned integer")
    if cfg.get("format", "csv") not in FORMATS:
        raise UsageError(f"format must be one of {FORMATS}")
    return cfg


def _open(out: Optional[str]):
    if out is None:
        return _Stdout()
    try:
        return open(out, "w", newline="")
    except OSError as exc:
        raise UsageError(f"cannot write {out}: {exc}") from exc


class _Stdout:
    def __enter__(self) -> TextIO:
        return sys.stdout

    def __exit__(self, *exc):
        sys.stdout.flush()
        return False


def _require_out(cfg, what: str) -> str:
    if not cfg.get("out"):
        raise UsageError(f"--out is required for {what}")
    return cfg["out"]


# --- commands ------------------------------------------------------------------------


def cmd_estimate(cfg) -> None:
    model = None
    if cfg.get("input"):
        sample = read_observations(cfg["input"], squared=bool(cfg.get("squared")))
    else:
        model = parse_model(cfg["model"])
        sample = sample_dataset(model, int(cfg["n"]), int(cfg["seed"]))
    grid = _grid(cfg["grid"]) if cfg.get("grid") else np.linspace(0.0, float(sample.values[-1]), int(cfg["points"]))
    table = ex.estimate_table(sample, grid)
    fmt = cfg["format"]
    if fmt == "svg":
        series = [Series(grid, table["f_hat"], "isotonic", "step"), Series(grid, table["f_naive"], "naive", "line")]
        if model is not None:
            series.append(Series(grid, np.asarray(model.cdf(grid)), "true F", "line", color="#7f7f7f", width=1.0))
        emit_plot(series, _require_out(cfg, "svg"), "estimates of F", "squared radius", "F")
        return
    with _open(cfg.get("out")) as fh:
        if fmt == "csv":
            write_columns(table, fh)
        else:
            fh.write(dumps_json({"n": sample.n, **{k: v for k, v in table.items()}}))


def cmd_simulate(cfg) -> None:
    model = parse_model(cfg["model"])
    sample = sample_dataset(model, int(cfg["n"]), int(cfg["seed"]))
    with _open(cfg.get("out")) as fh:
        if cfg["format"] == "json":
            fh.write(dumps_json({"model": model.spec, "seed": int(cfg["seed"]), "z": sample.values}))
        elif cfg["format"] == "csv":
            write_columns({"z": sample.values}, fh)
        else:
            raise UsageError("simulate writes csv or json")


def cmd_mc_variance(cfg) -> None:
    model = parse_model(cfg["model"])
    rep = ex.run_mc_variance(
        model,
        float(cfg["x"]),
        int(cfg["n"]),
        int(cfg["reps"]),
        int(cfg["seed"]),
        cfg.get("gamma0"),
        cfg.get("gammax"),
        int(cfg.get("threads") or 1),
    )
    fmt = cfg["format"]
    if fmt == "svg":
        e = np.sort(rep.iie_errors)
        if e.size < 2 or np.std(e) == 0:
            raise WicksellError("need at least two distinct replications to plot")
        from scipy.stats import norm

        zs = (e - e.mean()) / e.std(ddof=1)
        ecdf = (np.arange(1, e.size + 1) - 0.5) / e.size
        emit_plot(
            [Series(zs, ecdf, "standardised isotonic errors", "step"), Series(zs, norm.cdf(zs), "N(0,1)", "line")],
            _require_out(cfg, "svg"),
            "isotonic estimator errors",
            "standardised error",
            "cdf",
        )
        return
    with _open(cfg.get("out")) as fh:
        if fmt == "csv":
            write_columns({"rep": np.arange(rep.reps), "iie": rep.iie_errors, "naive": rep.naive_errors}, fh)
        else:
            fh.write(dumps_json(rep.to_dict()))


def cmd_flat_rate(cfg) -> None:
    model = parse_model(cfg["model"])
    rep = ex.run_flat_rate(
        model,
        float(cfg["x"]),
        _ints(cfg["ns"]),
        int(cfg["reps"]),
        int(cfg["seed"]),
        int(cfg["ks_n"]) or None,
        int(cfg["ks_reps"]),
        int(cfg["paths"]),
        int(cfg.get("threads") or 1),
    )
    fmt = cfg["format"]
    if fmt == "svg":
        emit_plot(
            [Series(np.log10(rep.ns), np.log10(rep.sd_unscaled), "log10 sd", "line")],
            _require_out(cfg, "svg"),
            f"slope {rep.slope_unscaled:.3f}",
            "log10 n",
            "log10 sd(Vhat - V)",
        )
        return
    with _open(cfg.get("out")) as fh:
        if fmt == "csv":
            write_columns({"n": rep.ns, "sd_unscaled": rep.sd_unscaled, "sd_scaled": rep.sd_scaled}, fh)
        else:
            fh.write(dumps_json(rep.to_dict()))


def cmd_gp_limit(cfg) -> None:
    model = parse_model(cfg["model"])
    res = ex.run_gp_limit(model, float(cfg["x"]), int(cfg["paths"]), int(cfg["seed"]), int(cfg["points"]))
    fmt = cfg["format"]
    grid = res.spec.grid
    if fmt == "csv":
        prefix = _require_out(cfg, "gp-limit csv output")
        with open(f"{prefix}_kernel.csv", "w", newline="") as fh:
            write_matrix(["s", *[f"t_{i}" for i in range(grid.size)]], np.column_stack([grid, res.kernel]), fh)
        with open(f"{prefix}_paths.csv", "w", newline="") as fh:
            write_matrix(["s", *[f"path_{i}" for i in range(res.paths.shape[0])]], np.column_stack([grid, res.paths.T]), fh)
        with open(f"{prefix}_lx.csv", "w", newline="") as fh:
            write_columns({"l_x": res.lx}, fh)
        with open(f"{prefix}_diagnostics.json", "w") as fh:
            fh.write(dumps_json(res.diagnostics))
    elif fmt == "svg":
        shown = res.paths[: min(50, res.paths.shape[0])]
        emit_plot(
            [Series(grid, row, "", "line", color="#1f77b4", width=0.6) for row in shown],
            _require_out(cfg, "svg"),
            "sample paths of the limit process",
            "s",
            "path",
        )
    else:
        with _open(cfg.get("out")) as fh:
            fh.write(dumps_json(res.diagnostics))


def cmd_lan_check(cfg) -> None:
    model = parse_model(cfg["model"])
    rep = ex.run_lan_check(
        model,
        float(cfg["x"]),
        _pair(cfg["h"]),
        int(cfg["n"]),
        int(cfg["reps"]),
        int(cfg["seed"]),
        cfg.get("gamma0"),
        cfg.get("gammax"),
        cfg.get("eta"),
        int(cfg.get("threads") or 1),
    )
    fmt = cfg["format"]
    if fmt == "svg":
        emit_plot(
            [
                Series(np.log10(rep.ladder_ns), rep.ladder, "scaled difference", "line"),
                Series(np.log10(rep.ladder_ns), [rep.ladder_limit] * len(rep.ladder_ns), "limit", "line"),
            ],
            _require_out(cfg, "svg"),
            "derivative along the path",
            "log10 n",
            "value",
        )
        return
    with _open(cfg.get("out")) as fh:
        if fmt == "csv":
            write_columns(
                {"rep": np.arange(rep.reps), "loglik": rep.loglik, "delta1": rep.deltas[:, 0], "delta2": rep.deltas[:, 1]},
                fh,
            )
        else:
            fh.write(dumps_json(rep.to_dict()))


COMMANDS = {
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
    "mc-variance": cmd_mc_variance,
    "flat-rate": cmd_flat_rate,
    "gp-limit": cmd_gp_limit,
    "lan-check": cmd_lan_check,
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg)
    except (InputError, UsageError, FileNotFoundError) as exc:
        print(f"wicksell: error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, WicksellError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"wicksell: numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"wicksell: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
