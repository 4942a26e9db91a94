"""Command-line front end: ``run``, ``verify``, ``sweep`` and ``demo``.

Run configuration (JSON)::

    {
      "group": [256],
      "a": {"kind": "random", "size": 77}          # or interval / explicit
      "weight": {"kind": "constant", "value": 1.0}, # or explicit / ramp
      "pair": {"kind": "gapped", "start": 20, "width": 30, "gap": 10, "count": 3,
               "family": {"kind": "box", "cap": 2, "radius": 16}},
      "basis": {"kind": "symmetric-interval"},
      "schedules": {"epsilon": 0.05, "n_max": 12},
      "seed": 1
    }

Exit codes: 0 success, 1 configuration or input-file problem, 2 no
convergence (or a failing sweep), 3 construction error, 4 verification
mismatch.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from .construction import Schedules, run
from .errors import ConfigError, GapSpecError, NotConverged
from .group import GroupFunction, fourier, make_group
from .spectral import (
    SufficientPair,
    as_mask,
    box_family,
    default_family,
    gapped_pair,
    make_basis,
    paley_family,
)
from .verify import build_report, log_law_sweep

log = logging.getLogger("gapspec")

EXIT_OK, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_CONSTRUCTION, EXIT_MISMATCH = 0, 1, 2, 3, 4
VERIFY_TOL = 1e-8
SPECTRUM_HEADER = ["char_index", "abs_coeff", "in_K", "in_R", "in_S"]
SWEEP_HEADER = ["epsilon", "u_norm", "log_term", "ratio", "iterations", "runtime_ms", "error"]


@dataclass
class RunConfig:
    group: list
    a: dict
    pair: dict
    schedules: dict
    weight: dict = field(default_factory=lambda: {"kind": "constant", "value": 1.0})
    basis: dict = field(default_factory=lambda: {"kind": "symmetric-interval"})
    probes: Optional[dict] = None
    window_style: Optional[str] = None
    partition_style: Optional[str] = None
    checks: bool = True
    seed: int = 0
    eps_list: Optional[list] = None

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown configuration keys: {sorted(extra)}")
        missing = {"group", "a", "pair", "schedules"} - set(data)
        if missing:
            raise ConfigError(f"missing configuration keys: {sorted(missing)}")
        cfg = cls(**copy.deepcopy(data))
        cfg.validate()
        return cfg

    def to_dict(self):
        return asdict(self)

    def validate(self):
        if not isinstance(self.group, list) or not all(isinstance(n, int) for n in self.group):
            raise ConfigError("group must be a list of integers")
        for key in ("a", "weight", "pair", "basis", "schedules"):
            if not isinstance(getattr(self, key), dict):
                raise ConfigError(f"{key} must be an object")
        if "epsilon" not in self.schedules:
            raise ConfigError("schedules.epsilon is required")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")


def _kind(desc, where):
    kind = desc.get("kind")
    if kind is None:
        raise ConfigError(f"{where}.kind is required")
    return kind


def _set_a(cfg, grp):
    desc = cfg.a
    kind = _kind(desc, "a")
    if kind == "explicit":
        return as_mask(grp, [int(i) % grp.size for i in desc["indices"]])
    if kind == "interval":
        start, length = int(desc.get("start", 0)), int(desc["length"])
        return as_mask(grp, [(start + i) % grp.size for i in range(length)])
    if kind == "random":
        size = int(desc["size"])
        if not 0 <= size <= grp.size:
            raise ConfigError("a.size out of range")
        rng = np.random.default_rng(int(desc.get("seed", cfg.seed)))
        return as_mask(grp, rng.choice(grp.size, size=size, replace=False))
    raise ConfigError(f"unknown a.kind {kind!r}")


def _weight(cfg, grp):
    desc = cfg.weight
    kind = _kind(desc, "weight")
    if kind == "constant":
        vals = np.full(grp.size, float(desc.get("value", 1.0)))
    elif kind == "explicit":
        vals = np.asarray(desc["values"], dtype=float)
        if vals.shape != (grp.size,):
            raise ConfigError("weight.values needs one entry per group element")
    elif kind == "ramp":
        lo, hi = float(desc.get("low", 0.5)), float(desc.get("high", 1.0))
        vals = lo + (hi - lo) * np.arange(grp.size) / max(grp.size - 1, 1)
    else:
        raise ConfigError(f"unknown weight.kind {kind!r}")
    if np.any(vals <= 0) or np.any(vals > 2):
        raise ConfigError("weight values must lie in (0, 2]")
    return GroupFunction(grp, vals)


def _family(desc, grp):
    if desc is None:
        return default_family(grp)
    kind = _kind(desc, "family")
    if kind == "box":
        return box_family(grp, desc.get("cap"), desc.get("radius"))
    if kind == "paley":
        return paley_family(grp, desc.get("depth"), desc.get("radius"))
    if kind == "explicit":
        return np.array([as_mask(grp, s) for s in desc["sets"]])
    raise ConfigError(f"unknown family kind {kind!r}")


def _pair(cfg, grp):
    desc = cfg.pair
    kind = _kind(desc, "pair")
    fam = _family(desc.get("family"), grp)
    if kind == "gapped":
        return gapped_pair(grp, int(desc["start"]), int(desc["width"]), int(desc["gap"]),
                           int(desc["count"]), family=fam)
    if kind == "explicit":
        return SufficientPair(grp, as_mask(grp, desc["r"]), as_mask(grp, desc["s"]), fam)
    raise ConfigError(f"unknown pair.kind {kind!r}")


def _schedules(cfg, unit_weight, epsilon=None):
    desc = cfg.schedules
    eps = float(desc["epsilon"] if epsilon is None else epsilon)
    n_max = int(desc.get("n_max", 12))
    g_tol = desc.get("g_tol")
    sch = Schedules.default(eps, n_max, g_tol, unit_weight=unit_weight)
    if desc.get("t") is not None or desc.get("rho") is not None:
        sch = Schedules(eps, list(desc.get("t") or sch.t), list(desc.get("rho") or sch.rho), n_max, g_tol)
    return sch


@dataclass
class Inputs:
    group: object
    a: np.ndarray
    w: GroupFunction
    pair: SufficientPair
    basis: object
    probes: Optional[np.ndarray]
    window_style: str
    partition_style: str


def build_inputs(cfg):
    """Turn a validated configuration into construction inputs (raises ConfigError)."""
    try:
        grp = make_group(cfg.group)
        inputs = Inputs(
            group=grp, a=_set_a(cfg, grp), w=_weight(cfg, grp), pair=_pair(cfg, grp),
            basis=make_basis(grp, cfg.basis),
            probes=None if cfg.probes is None else _family(cfg.probes, grp),
            window_style=cfg.window_style or ("subgroup" if grp.is_dyadic else "interval"),
            partition_style=cfg.partition_style or ("coset" if grp.is_dyadic else "triangle"),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, GapSpecError) as exc:
        raise ConfigError(f"{type(exc).__name__}: {exc}") from exc
    return inputs


def execute(cfg, inputs, epsilon=None):
    unit = bool(np.all(inputs.w.values == 1.0))
    try:
        sch = _schedules(cfg, unit, epsilon)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"schedules: {exc}") from exc
    return run(inputs.a, inputs.w, inputs.pair, inputs.basis, sch, inputs.window_style,
               inputs.partition_style, checks=cfg.checks, probes=inputs.probes)


# ---------------------------------------------------------------- file output

def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _spectrum_rows(result):
    coeffs = np.abs(fourier(result.f_final).coefficients)
    K, R, S = (np.asarray(m, bool) for m in (result.K, result.R, result.S))
    return [[i, float(coeffs[i]), int(K[i]), int(R[i]), int(S[i])] for i in range(coeffs.size)]


def _spectrum_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SPECTRUM_HEADER)
    for i, c, k, r, s in rows:
        writer.writerow([i, repr(c), k, r, s])
    return buf.getvalue()


def _spectrum_svg(result):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "gapspec"
    coeffs = np.abs(fourier(result.f_final).coefficients)
    idx = np.arange(coeffs.size)
    fig, ax = plt.subplots(figsize=(8, 3))
    top = float(coeffs.max()) * 1.05 or 1.0
    for mask, colour, label in ((result.K, "tab:green", "K"), (result.R, "tab:orange", "R"),
                                (result.S, "tab:blue", "S")):
        ax.fill_between(idx, 0, top, where=np.asarray(mask, bool), step="mid", alpha=0.15,
                        color=colour, label=label, linewidth=0)
    ax.vlines(idx, 0, coeffs, color="black", linewidth=0.6)
    ax.plot(idx, coeffs, "k.", markersize=2)
    ax.set_xlabel("character index")
    ax.set_ylabel("|coefficient|")
    ax.set_ylim(0, top)
    ax.legend(loc="upper right", fontsize="small")
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


def _report_document(cfg, result):
    state = result.state
    return {
        "config": cfg.to_dict(),
        "report": result.report,
        "trace": state.trace,
        "windows": [list(w.params) for w in state.windows],
    }


def _emit_error(exc, code):
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    residual = getattr(exc, "residual", None)
    if residual is not None:
        payload["residual"] = residual
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    return code


def _load_config(path, seed=None, no_checks=False):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read configuration: {exc}") from exc
    cfg = RunConfig.from_dict(data)
    if seed is not None:
        cfg.seed = int(seed)
    if no_checks:
        cfg.checks = False
    return cfg


# ---------------------------------------------------------------- commands

def cmd_run(config_path, out_dir, seed=None, no_checks=False, cfg=None):
    try:
        cfg = cfg or _load_config(config_path, seed, no_checks)
        inputs = build_inputs(cfg)
        result = execute(cfg, inputs)
    except ConfigError as exc:
        return _emit_error(exc, EXIT_CONFIG)
    except NotConverged as exc:
        return _emit_error(exc, EXIT_NOT_CONVERGED)
    except GapSpecError as exc:
        return _emit_error(exc, EXIT_CONSTRUCTION)
    os.makedirs(out_dir, exist_ok=True)
    _atomic_write(os.path.join(out_dir, "report.json"), _dumps(_report_document(cfg, result)))
    _atomic_write(os.path.join(out_dir, "b.json"), _dumps(np.flatnonzero(result.b).tolist()))
    _atomic_write(os.path.join(out_dir, "spectrum.csv"), _spectrum_csv(_spectrum_rows(result)))
    _atomic_write(os.path.join(out_dir, "spectrum.svg"), _spectrum_svg(result))
    log.info("run finished after %d levels", result.state.n)
    return EXIT_OK


def _diff(expected, actual, path=""):
    """Field-level differences between two JSON-like values."""
    out = []
    if isinstance(expected, dict) and isinstance(actual, dict):
        for key in sorted(set(expected) | set(actual)):
            sub = f"{path}.{key}" if path else key
            if key not in expected or key not in actual:
                out.append((sub, expected.get(key), actual.get(key)))
            else:
                out.extend(_diff(expected[key], actual[key], sub))
    elif isinstance(expected, list) and isinstance(actual, list):
        if len(expected) != len(actual):
            out.append((path, expected, actual))
        else:
            for i, (e, a) in enumerate(zip(expected, actual)):
                out.extend(_diff(e, a, f"{path}[{i}]"))
    elif isinstance(expected, bool) or isinstance(actual, bool):
        if expected is not actual:
            out.append((path, expected, actual))
    elif isinstance(expected, (int, float)) and isinstance(actual, (int, float)):
        both_nan = isinstance(expected, float) and isinstance(actual, float) \
            and math.isnan(expected) and math.isnan(actual)
        if not both_nan and not abs(expected - actual) <= VERIFY_TOL * max(1.0, abs(expected)):
            out.append((path, expected, actual))
    elif expected != actual:
        out.append((path, expected, actual))
    return out


def cmd_verify(run_dir):
    paths = {name: os.path.join(run_dir, name) for name in ("report.json", "b.json", "spectrum.csv")}
    try:
        missing = [n for n, p in paths.items() if not os.path.isfile(p)]
        if missing:
            raise ConfigError(f"missing artifacts: {missing}")
        with open(paths["report.json"]) as fh:
            doc = json.load(fh)
        with open(paths["b.json"]) as fh:
            b_idx = json.load(fh)
        with open(paths["spectrum.csv"], newline="") as fh:
            rows = list(csv.reader(fh))
        cfg = RunConfig.from_dict(doc["config"])
        inputs = build_inputs(cfg)
        result = execute(cfg, inputs)
        b = as_mask(inputs.group, [int(i) for i in b_idx])
    except (ConfigError, KeyError, TypeError, ValueError) as exc:
        return _emit_error(exc, EXIT_CONFIG)
    except GapSpecError as exc:
        return _emit_error(exc, EXIT_CONSTRUCTION)

    fresh = build_report(result.state, b, result.f_final)
    diffs = _diff(doc["report"], json.loads(_dumps(fresh)))
    if not rows or rows[0] != SPECTRUM_HEADER:
        diffs.append(("spectrum.csv:header", SPECTRUM_HEADER, rows[0] if rows else None))
    else:
        expected = _spectrum_rows(result)
        body = rows[1:]
        if len(body) != len(expected):
            diffs.append(("spectrum.csv:rows", len(expected), len(body)))
        else:
            for got, want in zip(body, expected):
                parsed = [int(got[0]), float(got[1]), int(got[2]), int(got[3]), int(got[4])]
                if parsed[0] != want[0] or parsed[2:] != want[2:] or abs(parsed[1] - want[1]) > VERIFY_TOL:
                    diffs.append((f"spectrum.csv:{want[0]}", want, parsed))
    if diffs:
        for path, exp, act in diffs:
            print(f"MISMATCH {path}: report={exp!r} recomputed={act!r}")
        return EXIT_MISMATCH
    print("verify: all fields match")
    return EXIT_OK


def cmd_sweep(config_path, out_dir, seed=None, no_checks=False, threads=1):
    try:
        cfg = _load_config(config_path, seed, no_checks)
        if not cfg.eps_list:
            raise ConfigError("sweep needs eps_list with at least one value")
        inputs = build_inputs(cfg)
        desc = cfg.schedules
        rows, fit = log_law_sweep(inputs.a, inputs.w, inputs.pair, inputs.basis, cfg.eps_list,
                                  n_max=int(desc.get("n_max", 12)), g_tol=desc.get("g_tol"),
                                  threads=threads, window_style=inputs.window_style,
                                  partition_style=inputs.partition_style, checks=cfg.checks,
                                  probes=inputs.probes)
    except (ConfigError, ValueError) as exc:
        return _emit_error(exc, EXIT_CONFIG)
    except GapSpecError as exc:
        return _emit_error(exc, EXIT_CONSTRUCTION)
    os.makedirs(out_dir, exist_ok=True)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for r in rows:
        writer.writerow([repr(r[k]) if isinstance(r[k], float) else ("" if r[k] is None else r[k])
                         for k in SWEEP_HEADER])
    _atomic_write(os.path.join(out_dir, "sweep.csv"), buf.getvalue())
    ok_rows = sum(r["error"] is None for r in rows)
    fit = dict(fit, rows=len(rows), succeeded=ok_rows)
    _atomic_write(os.path.join(out_dir, "fit.json"), _dumps(fit))
    if ok_rows == 0:
        return EXIT_NOT_CONVERGED
    if ok_rows >= 0.75 * len(rows) and fit["passed"]:
        return EXIT_OK
    return EXIT_NOT_CONVERGED


DEMO_CONFIG = {
    "group": [256],
    "a": {"kind": "random", "size": 77},
    "weight": {"kind": "constant", "value": 1.0},
    "pair": {"kind": "gapped", "start": 20, "width": 30, "gap": 10, "count": 3,
             "family": {"kind": "box", "cap": 2, "radius": 16}},
    "basis": {"kind": "symmetric-interval"},
    "schedules": {"epsilon": 0.05, "n_max": 12},
    "seed": 2024,
}


def cmd_demo(out_dir, seed=None, no_checks=False):
    os.makedirs(out_dir, exist_ok=True)
    cfg_path = os.path.join(out_dir, "config.json")
    data = copy.deepcopy(DEMO_CONFIG)
    if seed is not None:
        data["seed"] = int(seed)
    _atomic_write(cfg_path, _dumps(data))
    code = cmd_run(cfg_path, out_dir, no_checks=no_checks)
    if code == EXIT_OK:
        print(f"demo: wrote {out_dir}/report.json, b.json, spectrum.csv, spectrum.svg")
    return code


def build_parser():
    parser = argparse.ArgumentParser(prog="gapspec", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--out", default="out", metavar="DIR")
        p.add_argument("--seed", type=int, default=None, metavar="U64")
        p.add_argument("--threads", type=int, default=1, metavar="N")
        p.add_argument("--no-checks", action="store_true")

    common(sub.add_parser("run", help="run the construction and write artifacts"))
    common(sub.add_parser("sweep", help="log-law sweep over eps_list"))
    common(sub.add_parser("demo", help="run a built-in Z_256 example"), config=False)
    p = sub.add_parser("verify", help="recompute a run directory's report")
    p.add_argument("--out", required=True, metavar="DIR", help="run directory to check")
    return parser


def main(argv=None):
    logging.basicConfig(level=os.environ.get("SCF_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.verb == "run":
        return cmd_run(args.config, args.out, args.seed, args.no_checks)
    if args.verb == "verify":
        return cmd_verify(args.out)
    if args.verb == "sweep":
        return cmd_sweep(args.config, args.out, args.seed, args.no_checks, max(1, args.threads))
    return cmd_demo(args.out, args.seed, args.no_checks)


if __name__ == "__main__":
    sys.exit(main())
