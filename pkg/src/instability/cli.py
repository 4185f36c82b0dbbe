"""Command-line front end.

Usage::

    instability [--config FILE] [--seed N] [--out DIR] [--threads N|auto] [--check] \\
        SUBCOMMAND [key=value ...]

The config file is INI-style: a ``[global]`` section (seed, threads,
output_dir) and one section per subcommand. ``key=value`` arguments override
the subcommand's section. Unknown sections or keys are rejected.

Exit codes: 0 success, 1 configuration or validation error (including a
failed ``--check``), 2 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import datetime as _dt
import logging
import sys
from pathlib import Path

import numpy as np

from . import attack, features, filterdemo, formats, measure, stability, symmetry
from .core import (
    ConstantClassifier, LinearFeatureClassifier, MeanThresholdClassifier, RejectedInputError,
    ThresholdClassifier, VectorizedClassifier, coordinate, resolve_threads,
)

log = logging.getLogger("instability")

GLOBAL_DEFAULTS = {"seed": "42", "threads": "1", "output_dir": "out"}

DEFAULTS: dict[str, dict[str, str]] = {
    "raster": {
        "classifier": "paper_filter_bank",
        "mode": "l1",
        "prototypes": "paper",
        "extent": "0,1,0,1",
        "width": "512",
        "height": "512",
        "neighborhood": "8",
        "depths": "6,7,8",
    },
    "bound": {
        "curve": "bound",
        "class": "image_poly",
        "k": "10..200",
        "eps": "0.5",
        "feature_dim": "none",
        "m": "4..64",
        "channels": "3",
    },
    "stability": {
        "classifier": "threshold1d",
        "eps": "0.05",
        "samples": "100000",
        "directions": "32",
        "steps": "8",
    },
    "usefulness": {
        "data": "synthetic",
        "n": "100000",
        "dim": "1",
        "features": "sign0,smooth0",
        "delta": "0.1",
        "coord_iters": "3",
    },
    "symmetry": {
        "m": "2",
        "n": "3",
        "point_ops": "false",
        "collapse": "false",
        "classifier": "mean_threshold",
        "samples": "1000",
    },
    "attack": {
        "classifier": "threshold1d",
        "x_orig": "auto",
        "x_seed": "auto",
        "tol": "1e-3",
        "budgets": "0,5,100",
        "seeds": "global",
        "window_size": "none",
        "window_limit": "none",
    },
}

# Bare words accepted on the command line, mapped to key=value.
_BARE_WORDS = {"bound": {"mitigation": ("curve", "mitigation"), "bound": ("curve", "bound")}}


class ConfigError(RejectedInputError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- parsing helpers

def parse_int_list(text: str) -> list[int]:
    """``"4,8,16"``, ``"10..200"`` or a mix such as ``"1,4..6"``."""
    out: list[int] = []
    for part in text.replace(" ", "").split(","):
        if not part:
            continue
        if ".." in part:
            a, b = part.split("..", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


def parse_floats(text: str) -> list[float]:
    return [float(p) for p in text.replace(" ", "").split(",") if p]


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_int(text: str) -> int | None:
    return None if text.strip().lower() in ("", "none") else int(text)


def load_config(path: str | None, command: str, overrides: list[str]) -> dict[str, dict[str, str]]:
    """Resolve defaults, config file and command-line overrides into strings."""
    resolved = {"global": dict(GLOBAL_DEFAULTS), command: dict(DEFAULTS[command])}
    if path:
        parser = configparser.ConfigParser(interpolation=None, strict=True)
        parser.optionxform = str
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        for section in parser.sections():
            known = GLOBAL_DEFAULTS if section == "global" else DEFAULTS.get(section)
            if known is None:
                raise ConfigError(f"unknown config section [{section}]")
            for key, value in parser.items(section):
                if key not in known:
                    raise ConfigError(f"unknown key {key!r} in section [{section}]")
                if section in resolved:
                    resolved[section][key] = value.strip()
    for item in overrides:
        if "=" not in item:
            word = _BARE_WORDS.get(command, {}).get(item)
            if word is None:
                raise ConfigError(f"unknown argument {item!r} (expected key=value)")
            key, value = word
        else:
            key, value = (s.strip() for s in item.split("=", 1))
        if key in DEFAULTS[command]:
            resolved[command][key] = value
        elif key in GLOBAL_DEFAULTS:
            resolved["global"][key] = value
        else:
            raise ConfigError(f"unknown key {key!r} for {command}")
    return resolved


# ---------------------------------------------------------------- classifiers

def parse_linear(text: str) -> LinearFeatureClassifier:
    """``linear:w=1,-1;b=-0.5;act=tanh`` -- weights over the raw coordinates."""
    fields = dict(part.split("=", 1) for part in text.split(";") if part)
    unknown = set(fields) - {"w", "b", "act"}
    if unknown or "w" not in fields:
        raise ConfigError(f"bad linear classifier description {text!r}")
    weights = parse_floats(fields["w"])
    return LinearFeatureClassifier(
        [coordinate(i) for i in range(len(weights))], weights,
        float(fields.get("b", 0.0)), fields.get("act", "identity"), dim=len(weights),
    )


def make_bank(params) -> filterdemo.FilterBank:
    mode = filterdemo.ScoringMode(params.get("mode", "l1"))
    if params.get("prototypes", "paper") == "paper":
        return filterdemo.paper_filter_bank(mode)
    protos = [parse_floats(p.replace(":", ",")) for p in params["prototypes"].split(";") if p]
    return filterdemo.FilterBank(np.array(protos), mode)


def make_classifier(name: str, params=None):
    params = params or {}
    if name == "threshold1d":
        return ThresholdClassifier(1)
    if name == "halfplane2d":
        return ThresholdClassifier(2)
    if name == "paper_filter_bank":
        return make_bank(params)
    if name.startswith("linear:"):
        return parse_linear(name[len("linear:"):])
    raise ConfigError(f"unknown classifier {name!r}")


def make_grid_classifier(name: str, size: int):
    if name == "mean_threshold":
        return MeanThresholdClassifier(size)
    if name == "cell0_threshold":
        return VectorizedClassifier(lambda X: (X[:, 0] > 0.5).astype(np.int64), size, 2)
    if name == "constant":
        return ConstantClassifier(size)
    raise ConfigError(f"unknown grid classifier {name!r}")


FEATURE_REGISTRY = {
    "sign": features.sign_feature,
    "smooth": features.smooth_feature,
    "coord": coordinate,
}


def make_feature(name: str):
    if name == "const":
        return lambda X: np.zeros(X.shape[0])
    for prefix, factory in FEATURE_REGISTRY.items():
        if name.startswith(prefix) and name[len(prefix):].isdigit():
            return factory(int(name[len(prefix):]))
    raise ConfigError(f"unknown feature {name!r}")


# ---------------------------------------------------------------- subcommands

class CheckFailed(Exception):
    pass


def _check(cond: bool, message: str):
    if not cond:
        raise CheckFailed(message)


def cmd_raster(p, g, out: Path, check: bool):
    f = make_classifier(p["classifier"], p)
    extent = filterdemo.Extent.parse(p["extent"])
    raster = filterdemo.rasterize(f, extent, int(p["width"]), int(p["height"]), g["threads"])
    imap = filterdemo.unstable_cells(raster, int(p["neighborhood"]))
    box = filterdemo.refine_and_count(f, extent, parse_int_list(p["depths"]), g["threads"])
    files = {
        "labels.ppm": formats.ppm_text(raster.labels),
        "labels.pgm": formats.pgm_text(raster.labels, max(1, raster.cardinality - 1)),
        "unstable.pgm": formats.pgm_text(imap.unstable.astype(np.int64) * 255, 255),
        "boxcount.csv": formats.csv_text(filterdemo.BOXCOUNT_HEADER, box.rows()),
    }
    if check:
        _check(
            all(b >= a for a, b in zip(box.boundary_cells, box.boundary_cells[1:])),
            "boundary cell counts decrease with depth",
        )
    results = {
        "label_counts": raster.counts(),
        "unstable_fraction": imap.unstable_fraction,
        "boundary_cells": list(box.boundary_cells),
        "dimension": box.dimension,
    }
    return files, results


def cmd_bound(p, g, out, check):
    eps = float(p["eps"])
    if p["curve"] == "mitigation":
        table = measure.resolution_mitigation_curve(parse_int_list(p["m"]), int(p["channels"]), eps)
        values = [pt.log_orbit_bound for _, _, pt in table]
        rows = [(m, c) + pt.row() for m, c, pt in table]
        files = {"mitigation.csv": formats.csv_text(measure.MITIGATION_HEADER, rows)}
        decreasing = True
    elif p["curve"] == "bound":
        sym = symmetry.SymmetryClass(p["class"])
        curve = measure.bound_curve(parse_int_list(p["k"]), eps, sym, _optional_int(p["feature_dim"]))
        values = [pt.log_orbit_bound for pt in curve]
        files = {"bound.csv": formats.csv_text(measure.BOUND_HEADER, (pt.row() for pt in curve))}
        decreasing = sym is symmetry.SymmetryClass.IMAGE_POLY
    else:
        raise ConfigError(f"unknown curve {p['curve']!r}")
    if check:
        _check(
            measure.tail_is_monotone(values, decreasing),
            f"tail of the curve is not strictly {'decreasing' if decreasing else 'increasing'}",
        )
    return files, {"rows": len(values), "first": values[0], "last": values[-1]}


def cmd_stability(p, g, out, check):
    f = make_classifier(p["classifier"])
    report = stability.unstable_fraction(
        f, float(p["eps"]), int(p["samples"]), int(p["directions"]), int(p["steps"]),
        g["seed"], g["threads"],
    )
    if check:
        _check(report.ci_low <= report.unstable_fraction <= report.ci_high, "fraction outside its CI")
    return {"stability.json": formats.json_text(report.to_json())}, report.to_json()


def cmd_usefulness(p, g, out, check):
    if p["data"] == "synthetic":
        data = features.uniform_sign_dataset(int(p["n"]), g["seed"], int(p["dim"]))
    else:
        data = features.LabeledDataset.from_csv(p["data"])
    feats = {name: make_feature(name) for name in p["features"].replace(" ", "").split(",") if name}
    delta = features.PerturbationSet(float(p["delta"]))
    table = features.fragility_scan(feats, data, delta, int(p["coord_iters"]))
    if check:
        _check(all(u.gamma <= u.rho + 1e-9 for u in table), "gamma exceeds rho")
    files = {"fragility.csv": formats.csv_text(features.FRAGILITY_HEADER, (u.row() for u in table))}
    return files, {"features": [u.feature_id for u in table], "size": data.size}


def group_axioms_hold(m: int, n: int) -> bool:
    group = symmetry.enumerate_group(m, n, include_point_ops=True, collapse=True)
    perms = {t.source().tobytes() for t in group}
    identity = np.arange(m * n)
    if identity.tobytes() not in perms:
        return False
    for a in group:
        sa = a.source()
        if not any(np.array_equal(sa[b.source()], identity) for b in group):
            return False
        for b in group:
            if b.source()[sa].tobytes() not in perms:
                return False
    return True


def cmd_symmetry(p, g, out, check):
    m, n = int(p["m"]), int(p["n"])
    transforms = symmetry.enumerate_group(m, n, _bool(p["point_ops"]), _bool(p["collapse"]))
    f = make_grid_classifier(p["classifier"], m * n)
    report = symmetry.check_invariance(f, transforms, int(p["samples"]), g["seed"], g["threads"])
    if check:
        _check(len(symmetry.enumerate_group(m, n, False)) == m * n, "translation count != m*n")
        _check(group_axioms_hold(m, n), "group axioms fail on the collapsed permutations")
    files = {"symmetry.csv": formats.csv_text(symmetry.INVARIANCE_HEADER, symmetry.invariance_rows(report))}
    return files, {"transforms": len(transforms), "violations": sum(r.violations for r in report)}


_ATTACK_ENDPOINTS = {
    "threshold1d": ([0.2], [0.9]),
    "halfplane2d": ([0.2, 0.5], [0.9, 0.5]),
}


def cmd_attack(p, g, out, check):
    name = p["classifier"]
    f = make_classifier(name)
    defaults = _ATTACK_ENDPOINTS.get(name)
    points = []
    for key, idx in (("x_orig", 0), ("x_seed", 1)):
        if p[key] == "auto":
            if defaults is None:
                raise ConfigError(f"{key} must be given for classifier {name!r}")
            points.append(defaults[idx])
        else:
            points.append(parse_floats(p[key]))
    x_orig, x_seed = points
    budgets = parse_int_list(p["budgets"])
    seeds = [g["seed"]] if p["seeds"] == "global" else parse_int_list(p["seeds"])
    window = _optional_int(p["window_size"]), _optional_int(p["window_limit"])

    traces = attack.sweep_traces(
        f, x_orig, x_seed, float(p["tol"]), budgets, seeds, g["threads"], *window
    )
    rows = attack.summarize(traces)
    longest = traces[(budgets[-1], seeds[0])]
    if check:
        _check(
            all(r2.mean_final_distance <= r1.mean_final_distance for r1, r2 in zip(rows, rows[1:])),
            "mean final distance increases with budget",
        )
        for b in budgets:
            short = traces[(b, seeds[0])].query_log
            _check(longest.query_log[: len(short)] == short, "traces are not prefix-nested")
    files = {
        "sweep.csv": formats.csv_text(attack.SWEEP_HEADER, (r.row() for r in rows)),
        "trace.csv": formats.csv_text(attack.TRACE_HEADER, longest.rows()),
    }
    return files, {"success_rates": [r.success_rate for r in rows]}


COMMANDS = {
    "raster": cmd_raster,
    "bound": cmd_bound,
    "stability": cmd_stability,
    "usefulness": cmd_usefulness,
    "symmetry": cmd_symmetry,
    "attack": cmd_attack,
}


# ---------------------------------------------------------------- entry point

def _add_globals(parser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="INI config file")
    parser.add_argument("--seed", default=default, help="64-bit seed (default 42)")
    parser.add_argument("--out", default=default, help="output directory")
    parser.add_argument("--threads", default=default, help="worker threads or 'auto'")
    parser.add_argument("--check", action="store_true", default=argparse.SUPPRESS if suppress else False,
                        help="verify the documented monotonicity properties")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="instability", description="Decision-boundary instability toolkit.")
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=f"{name} analysis")
        _add_globals(sp, suppress=True)
        sp.add_argument("params", nargs="*", metavar="key=value")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.command, args.params)
        glob = cfg["global"]
        for flag, key in (("seed", "seed"), ("out", "output_dir"), ("threads", "threads")):
            if getattr(args, flag) is not None:
                glob[key] = str(getattr(args, flag))
        seed = int(glob["seed"])
        if not 0 <= seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        g = {"seed": seed, "threads": resolve_threads(glob["threads"])}
        out = Path(glob["output_dir"])
        files, results = COMMANDS[args.command](cfg[args.command], g, out, args.check)
    except CheckFailed as exc:
        log.error("check failed: %s", exc)
        return 1
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return 2
    except (RejectedInputError, ValueError, KeyError) as exc:
        log.error("error: %s", exc)
        return 1

    manifest = {
        "subcommand": args.command,
        "config": cfg,
        "check": bool(args.check),
        "outputs": sorted(files) + ["manifest.json"],
        "results": results,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            formats.write_text(out / name, text)
        formats.write_text(out / "manifest.json", formats.json_text(manifest))
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return 2
    log.info("%s: wrote %s to %s", args.command, ", ".join(sorted(files)), out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
