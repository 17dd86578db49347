"""Command-line front end.

Subcommands: probability (run engines on one instance), reproduce (preset
experiments with CSV + SVG output), validate (property suites), sample
(path dumps), rate (prediction table). Exit codes: 0 pass, 1 tolerance
fail, 2 usage/config error, 3 numerical error.
"""

import argparse
import json
import math
import os
import struct
import sys
import time
from pathlib import Path

from jsonschema import Draft202012Validator

from . import experiments
from .covariance import CovarianceModel, partial_sum_covariance
from .engines import (band_probability_atomic, band_probability_mc,
                      band_probability_qmc, transfer_rate)
from .errors import SmallDevError
from .rates import (Boundary, regularized_lower_bound, szego_rate,
                    volumetric_upper_bound)
from .reporting import svg_plot, write_csv, write_result_json
from .sampler import sample_measure
from .spectral import SpectralMeasure, dirac_measure, fgn_measure, iid_measure
from .errors import IrregularSequenceError, RegimeError

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["measure", "n"],
    "additionalProperties": False,
    "properties": {
        "measure": {
            "type": "object",
            "properties": {
                "preset": {"enum": ["iid", "fgn", "dirac:zero",
                                    "dirac:minus-pi",
                                    "dirac:plus-minus-half-pi",
                                    "dirac:four-atoms"]},
                "H": {"type": ["number", "null"],
                      "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "variance": {"type": "number", "exclusiveMinimum": 0},
                "label": {"type": "string"},
                "family": {"enum": ["fgn", "flat", "atomic"]},
                "scale": {"type": "number", "exclusiveMinimum": 0},
                "ell_family": {"type": "string"},
                "zone_mode": {"enum": ["exclude", "restrict"]},
                "trunc": {"type": "integer", "minimum": 8},
                "atoms": {"type": "array", "items": {
                    "type": "array", "minItems": 2, "maxItems": 2,
                    "items": {"type": "number"}}},
                "zones": {"type": "array", "items": {
                    "type": "array", "minItems": 2, "maxItems": 2,
                    "items": {"type": "number"}}},
            },
        },
        "boundary": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "family": {"enum": ["constant", "power", "table"]},
                "f": {"type": "number", "exclusiveMinimum": 0},
                "coeff": {"type": "number", "exclusiveMinimum": 0},
                "gamma": {"type": "number"},
                "table": {"type": "array"},
            },
        },
        "n": {"type": "integer", "minimum": 1},
        "engines": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "qmc": {"type": "object"},
                "mc": {"type": "object"},
                "transfer": {"type": "object"},
            },
        },
        "seed": {"type": "integer", "minimum": 0},
        "threads": {"type": "integer", "minimum": 1},
    },
}

EXIT_PASS = 0
EXIT_TOLERANCE = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def load_config(path):
    try:
        with open(path) as handle:
            config = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise SystemExit(f"config error: {exc}")
    validator = Draft202012Validator(CONFIG_SCHEMA)
    problems = sorted(validator.iter_errors(config), key=str)
    if problems:
        lines = "; ".join(
            f"{'/'.join(str(p) for p in e.absolute_path) or '<root>'}: "
            f"{e.message}" for e in problems)
        raise SystemExit(f"config schema error: {lines}")
    return config


def measure_from_config(spec):
    preset = spec.get("preset")
    if preset == "iid":
        return iid_measure(spec.get("variance", 1.0))
    if preset == "fgn":
        if spec.get("H") is None:
            raise SystemExit("config schema error: fgn preset needs H")
        return fgn_measure(spec["H"], trunc=spec.get("trunc", 256))
    if preset and preset.startswith("dirac:"):
        return dirac_measure(preset.split(":", 1)[1])
    try:
        return SpectralMeasure.from_dict(spec)
    except (ValueError, TypeError) as exc:
        raise SystemExit(f"config schema error: bad measure: {exc}")


def boundary_from_config(spec):
    spec = spec or {"family": "constant", "f": 1.0}
    family = spec.get("family", "constant")
    try:
        if family == "constant":
            return Boundary("constant", const=spec.get("f", 1.0))
        if family == "power":
            return Boundary("power", coeff=spec.get("coeff", 1.0),
                            gamma=spec.get("gamma", 0.25))
        return Boundary("table", table=tuple(tuple(t) for t in spec["table"]))
    except (ValueError, KeyError) as exc:
        raise SystemExit(f"config schema error: bad boundary: {exc}")


def _threads(args):
    if args.threads:
        return args.threads
    env = os.environ.get("SMALLDEV_THREADS")
    return int(env) if env else 1


def cmd_probability(args):
    config = load_config(args.config)
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    threads = _threads(args) or config.get("threads", 1)
    out = Path(args.out)
    measure = measure_from_config(config["measure"])
    boundary = boundary_from_config(config.get("boundary"))
    n = config["n"]
    f = boundary.value(n)
    engine_cfg = config.get("engines", {"qmc": {}, "mc": {}})

    results = []
    if "qmc" in engine_cfg:
        kw = engine_cfg["qmc"]
        if measure.is_purely_atomic:
            results.append(band_probability_atomic(measure, n, f))
        else:
            model = CovarianceModel.from_measure(measure, n)
            sigma = partial_sum_covariance(model, n)
            results.append(band_probability_qmc(
                sigma, f, samples=kw.get("samples", 2 ** 14),
                randomizations=kw.get("randomizations", 16), seed=seed,
                threads=threads))
    if "mc" in engine_cfg:
        kw = engine_cfg["mc"]
        results.append(band_probability_mc(
            measure, n, f, samples=kw.get("samples", 10 ** 5), seed=seed))
    transfer_row = None
    if "transfer" in engine_cfg and measure.family == "flat" \
            and not measure.atoms:
        kw = engine_cfg["transfer"]
        rate = transfer_rate(f, nodes=kw.get("nodes", 200))
        transfer_row = {"method": "transfer", "N": n, "f": f,
                        "log_p": rate.c * n, "p": math.exp(rate.c * n),
                        "err": rate.err * n, "rel_err": rate.err * n,
                        "seed": seed, "flag": "per-step-rate"}

    sandwich = None
    if not measure.is_purely_atomic:
        model = CovarianceModel.from_measure(measure, n)
        upper = volumetric_upper_bound(model, n, f)
        lower = regularized_lower_bound(model, n, f)
        ok = all(lower - 3 * r.rel_err <= r.log_p <= upper + 3 * r.rel_err
                 for r in results)
        sandwich = {"lower": lower, "upper": upper, "holds": ok}

    payloads = [r.to_payload() for r in results]
    if transfer_row:
        payloads.append(transfer_row)
    doc = {"config": config, "seed": seed, "results": payloads,
           "sandwich": sandwich}
    write_result_json(out / "probability.json", doc,
                      wall_time_ms=getattr(results[0], "_wall_time_ms", None))
    write_csv(out / "probability.csv",
              ("method", "N", "f", "log_p", "p", "err", "rel_err", "flag"),
              [(p["method"], p["N"], p["f"], p["log_p"], p["p"], p["err"],
                p["rel_err"], p["flag"]) for p in payloads])
    for p in payloads:
        print(f"{p['method']:>8}: log_p={p['log_p']:.6f} p={p['p']:.6e} "
              f"err={p['err']:.2e} [{p['flag']}]")
    if sandwich:
        print(f"sandwich: {sandwich['lower']:.4f} <= log_p <= "
              f"{sandwich['upper']:.4f} holds={sandwich['holds']}")
        if not sandwich["holds"]:
            return EXIT_TOLERANCE
    return EXIT_PASS


def _plot_for(report, out):
    name = report.name
    if name == "transfer":
        fs = [r[0] for r in report.rows]
        svg_plot(out / f"{name}.svg",
                 [{"label": "ln lambda1", "x": fs,
                   "y": [r[1] for r in report.rows]},
                  {"label": "-pi^2/(8 f^2)", "x": fs,
                   "y": [r[2] for r in report.rows]}],
                 title="constant-band per-step rate vs inverse-square law",
                 x_label="f", y_label="per-step rate")
    elif name == "szego":
        ns = [r[0] for r in report.rows]
        svg_plot(out / f"{name}.svg",
                 [{"label": "gap per step", "x": ns,
                   "y": [r[3] for r in report.rows]}],
                 title="two-term formula gap per step",
                 x_label="N", y_label="|measured-predicted|/N")
    elif name == "mogulskii":
        ns = [r[0] for r in report.rows]
        svg_plot(out / f"{name}.svg",
                 [{"label": "measured ratio", "x": ns,
                   "y": [r[5] for r in report.rows],
                   "err": [3 * r[6] for r in report.rows]},
                  {"label": "pi^2/8", "x": ns,
                   "y": [math.pi ** 2 / 8] * len(ns)}],
                 title="-ln p / (N f^-2) trend", x_label="N",
                 y_label="ratio")
    elif name == "dirac":
        svg_plot(out / f"{name}.svg",
                 [{"label": "exp_f", "x": list(range(len(report.rows))),
                   "y": [r[1] for r in report.rows], "line": False},
                  {"label": "exp_n", "x": list(range(len(report.rows))),
                   "y": [r[2] for r in report.rows], "line": False}],
                 title="fitted order exponents (cases indexed)",
                 x_label="case index", y_label="exponent")
    elif name == "kappa":
        fs = [r[0] for r in report.rows]
        svg_plot(out / f"{name}.svg",
                 [{"label": "extrapolated ratio", "x": fs,
                   "y": [r[3] for r in report.rows]},
                  {"label": "pi^2/8", "x": fs,
                   "y": [math.pi ** 2 / 8] * len(fs)}],
                 title="small-ball constant ladder", x_label="f",
                 y_label="ratio")
    elif name == "counterexample":
        idx = [r[0] for r in report.rows]
        svg_plot(out / f"{name}.svg",
                 [{"label": "perturbed", "x": idx,
                   "y": [r[1] for r in report.rows], "line": False,
                   "err": [3 * r[2] for r in report.rows]},
                  {"label": "fgn", "x": idx,
                   "y": [r[3] for r in report.rows], "line": False,
                   "err": [3 * r[4] for r in report.rows]}],
                 title="perturbed vs baseline log-probability",
                 x_label="replicate", y_label="ln p")


def cmd_reproduce(args):
    preset = args.preset
    if preset not in experiments.RUNNERS:
        print(f"unknown preset {preset!r}; choose from "
              f"{sorted(experiments.RUNNERS)}", file=sys.stderr)
        return EXIT_USAGE
    runner = experiments.RUNNERS[preset]
    kwargs = {}
    if args.seed is not None and preset in ("mogulskii", "szego",
                                            "counterexample"):
        kwargs["seed"] = args.seed
    start = time.perf_counter()
    report = runner(**kwargs)
    elapsed = time.perf_counter() - start
    out = Path(args.out)
    if report.columns:
        write_csv(out / f"{report.name}.csv", report.columns, report.rows)
    _plot_for(report, out)
    verdict = "PASS" if report.passed else "FAIL"
    print(f"{verdict} {report.name}: {report.summary} "
          f"({elapsed:.1f}s)")
    for note in report.notes:
        print(f"  note: {note}")
    return EXIT_PASS if report.passed else EXIT_TOLERANCE


def cmd_validate(args):
    seeds = tuple(range(args.base_seed, args.base_seed + 5))
    report = experiments.validate_properties(seeds)
    out = Path(args.out)
    write_csv(out / "validate.csv", report.columns, report.rows)
    for row in report.rows:
        print(f"{'PASS' if row[2] else 'FAIL'} {row[0]} seed={row[1]}: "
              f"{row[3]}")
    print(("PASS " if report.passed else "FAIL ") + report.summary)
    return EXIT_PASS if report.passed else EXIT_TOLERANCE


def cmd_sample(args):
    config = load_config(args.config)
    measure = measure_from_config(config["measure"])
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    n = config["n"]
    count = args.count
    batch = sample_measure(measure, n, count, seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.format == "csv":
        write_csv(out / "paths.csv",
                  [f"S_{i}" for i in range(1, n + 1)],
                  [list(row) for row in batch.paths])
        print(f"wrote {count} paths to {out / 'paths.csv'}")
    else:
        target = out / "paths.sdlb"
        with open(target, "wb") as handle:
            handle.write(b"SDLB1")
            handle.write(struct.pack("<II", count, n))
            handle.write(batch.paths.astype("<f8").tobytes())
        print(f"wrote {count} paths to {target}")
    return EXIT_PASS


def cmd_rate(args):
    config = load_config(args.config)
    measure = measure_from_config(config["measure"])
    boundary = boundary_from_config(config.get("boundary"))
    n = config["n"]
    f = boundary.value(n)
    model = None if measure.is_purely_atomic \
        else CovarianceModel.from_measure(measure, n)
    rows = []
    if model is not None:
        rows.append(("volumetric-upper", n, f,
                     volumetric_upper_bound(model, n, f), "upper"))
        rows.append(("regularized-lower", n, f,
                     regularized_lower_bound(model, n, f), "lower"))
        try:
            rows.append(("two-term-very-small", n, f,
                         szego_rate(measure, boundary, n), "equivalent"))
        except (RegimeError, IrregularSequenceError) as exc:
            rows.append(("two-term-very-small", n, f, float("nan"),
                         f"n/a ({exc})"))
    if measure.family == "flat" and not measure.atoms \
            and boundary.family == "constant":
        rate = transfer_rate(f)
        rows.append(("kernel-eigenvalue", n, f, rate.c * n, "equivalent"))
    out = Path(args.out)
    write_csv(out / "rate.csv",
              ("prediction", "N", "f", "log_p", "kind"), rows)
    for row in rows:
        print(f"{row[0]:>22}: {row[3]:.6f} ({row[4]})")
    return EXIT_PASS


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="smalldev",
        description="Band probabilities for partial sums of stationary "
                    "Gaussian sequences: engines, rates, and experiments.")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--threads", type=int, default=None,
                        help="parallelism cap (or SMALLDEV_THREADS)")
    parser.add_argument("--out", default="results",
                        help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p_prob = sub.add_parser("probability", help="run engines on one config")
    p_prob.add_argument("--config", required=True)
    p_prob.set_defaults(func=cmd_probability)

    p_rep = sub.add_parser("reproduce", help="run a preset experiment")
    p_rep.add_argument("preset", choices=sorted(experiments.RUNNERS))
    p_rep.set_defaults(func=cmd_reproduce)

    p_val = sub.add_parser("validate", help="run the property suites")
    p_val.add_argument("--base-seed", type=int, default=11)
    p_val.set_defaults(func=cmd_validate)

    p_samp = sub.add_parser("sample", help="dump sample paths")
    p_samp.add_argument("--config", required=True)
    p_samp.add_argument("--count", type=int, default=100)
    p_samp.add_argument("--format", choices=("binary", "csv"),
                        default="binary")
    p_samp.set_defaults(func=cmd_sample)

    p_rate = sub.add_parser("rate", help="tabulate rate predictions")
    p_rate.add_argument("--config", required=True)
    p_rate.set_defaults(func=cmd_rate)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
            return EXIT_USAGE
        raise
    except SmallDevError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
