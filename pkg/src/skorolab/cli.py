"""Command-line entry point: ``skorolab <subcommand> [flags]``.

Settings are resolved in three layers: built-in defaults, then a JSON config
file given with ``--config``, then flags given explicitly on the command line.
Outputs are data only.  JSON documents carry a ``metadata`` block; CSV files
start with one ``#`` comment line holding the same metadata as JSON.

Exit status: 0 on success, 1 when a model violates a hypothesis or a
parameter is out of range, 2 on I/O or configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from fractions import Fraction
from typing import Dict, List, Optional

from . import __version__
from .cadlag import cadlag_to_dict, read_cadlag, step_function
from .counterexample import build_example, counterexample_row
from .errors import SkorolabError
from .limits import (
    FiniteModel,
    SweepModel,
    convergence_sweep,
    grid_index,
    lemma_check,
    random_finite_model,
    rate_bound_exact,
    shift_family,
    toy_model,
)
from .processes import IncrementSpec, Seed, donsker_polygon, poisson_index, sample_wiener
from .skorokhod import distance, distance_oracle, result_to_dict


__all__ = ["main", "run", "SCHEMA", "ConfigError"]


class ConfigError(Exception):
    pass


GLOBAL_DEFAULTS = {"seed": 42, "threads": None, "out": None, "format": None}

SCHEMA: Dict[str, Dict[str, object]] = {
    "distance": {
        "f": None,
        "g": None,
        "grid": 1000,
        "restarts": 16,
        "knot_budget": 8,
        "tolerance": 1e-3,
        "mode": "log",
        "oracle": False,
    },
    "sample": {
        "what": "donsker",
        "n": 1024,
        "rep": 0,
        "increments": "rademacher",
        "sigma": 1.0,
        "base": 2.0,
        "a": 0.5,
    },
    "sweep": {"model": None, "ns": "64,256,1024,4096", "functional": "terminal", "reps": 2000},
    "rate-bound": {"model": "toy", "n_range": "1..20", "random_models": 0},
    "counterexample": {"n": "1..8", "variant": "printed", "grid": 1000},
    "lemma-check": {"ns": "10,100,1000", "shift": 1.0},
}

DEFAULT_FORMAT = {
    "distance": "json",
    "sample": "json",
    "sweep": "csv",
    "rate-bound": "json",
    "counterexample": "csv",
    "lemma-check": "csv",
}

# settings that never change the data and are left out of the recorded config
NON_DATA = ("threads", "out")

HELP = {
    "f": "JSON file with the first function",
    "g": "JSON file with the second function",
    "grid": "grid size for the oracle / obstruction search",
    "restarts": "number of refined candidate time changes",
    "knot_budget": "maximum interior knots per candidate",
    "tolerance": "optimizer tolerance on metric values",
    "mode": "time-change penalty: log or classic",
    "oracle": "also run the reachability oracle",
    "what": "donsker | wiener | poisson-index",
    "n": "steps / scale (sample) or n-range like 1..8 (counterexample)",
    "rep": "replicate index",
    "increments": "rademacher | standard-normal | centered-uniform | geometric-decay | constant",
    "sigma": "Donsker normalization",
    "base": "decay base for geometric-decay increments",
    "a": "offset of the Poisson index",
    "model": "model JSON file (sweep, rate-bound) or the builtin name 'toy'",
    "ns": "comma-separated list of n",
    "functional": "comma-separated: terminal, eval-at-t, sup, integral",
    "reps": "Monte Carlo replicates per n",
    "n_range": "range of n like 1..20",
    "random_models": "extra randomized finite models checked at n=1",
    "variant": "printed | step",
    "shift": "time shift of the index t -> ceil(n (t + shift))",
}


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _type_of(default):
    if isinstance(default, bool):
        return None
    if isinstance(default, int):
        return int
    if isinstance(default, float):
        return float
    return str


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skorolab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"skorolab {__version__}")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind, params in SCHEMA.items():
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("--config", default=None, help="JSON config file (flags override it)")
        p.add_argument("--seed", type=int, default=None, help="root seed, unsigned 64-bit (default: 42)")
        p.add_argument("--threads", type=int, default=None, help="worker processes (default: all cores)")
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument(
            "--format", choices=("csv", "json"), default=None, help=f"output format (default: {DEFAULT_FORMAT[kind]})"
        )
        for name, default in params.items():
            text = f"{HELP.get(name, name)} (default: {default})"
            if isinstance(default, bool):
                p.add_argument(_flag(name), dest=name, action="store_const", const=True, default=None, help=text)
            else:
                p.add_argument(_flag(name), dest=name, type=_type_of(default), default=None, help=text)
    return parser


def resolve(kind: str, flags: Dict[str, object], config: Optional[dict]) -> dict:
    """Merge defaults, config file values and explicit flags."""
    allowed = dict(GLOBAL_DEFAULTS)
    allowed.update(SCHEMA[kind])
    resolved = dict(allowed)
    if config:
        for key, value in config.items():
            name = key.replace("-", "_")
            if name == "kind":
                if value != kind:
                    raise ConfigError(f"config kind {value!r} does not match subcommand {kind!r}")
                continue
            if name not in allowed:
                raise ConfigError(f"unknown config key {key!r}")
            resolved[name] = value
    for name, value in flags.items():
        if value is not None and name in allowed:
            resolved[name] = value
    if resolved["format"] is None:
        resolved["format"] = DEFAULT_FORMAT[kind]
    if resolved["threads"] is None:
        resolved["threads"] = os.cpu_count() or 1
    seed = resolved["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise ConfigError("field 'seed' must be an unsigned 64-bit integer")
    for name, default in SCHEMA[kind].items():
        value = resolved[name]
        if value is None or default is None:
            continue
        want = type(default)
        if want is float and isinstance(value, int) and not isinstance(value, bool):
            resolved[name] = float(value)
        elif not isinstance(value, want) or (want is int and isinstance(value, bool)):
            raise ConfigError(f"field {name!r} must be of type {want.__name__}")
    return resolved


def _metadata(kind: str, cfg: dict) -> dict:
    recorded = {k: v for k, v in sorted(cfg.items()) if k not in NON_DATA}
    blob = json.dumps({"kind": kind, **recorded}, sort_keys=True, separators=(",", ":"))
    return {
        "tool": "skorolab",
        "version": __version__,
        "kind": kind,
        "config": recorded,
        "config_hash": hashlib.sha256(blob.encode()).hexdigest(),
        "seed": cfg["seed"],
    }


def _parse_range(text: str) -> List[int]:
    text = str(text)
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",") if x.strip()]


def _parse_list(text: str) -> List[int]:
    return [int(x) for x in str(text).split(",") if x.strip()]


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc


def _finite_model(spec) -> FiniteModel:
    """Finite model from ``"toy"`` or a JSON document.

    Document keys: ``members`` (``{k: {atom: prob}}``), ``limit``
    (``{atom: prob}``), ``index`` (``{"offsets": {d: prob}}`` for
    ``nu_n = n + d``, or ``{"per_n": {n: {k: prob}}}``), ``norm_scale``
    (``f(n) = norm_scale * n``), ``limit_index`` and ``c``.  Numbers may be
    strings such as ``"1/3"``.  ``{"builtin": "toy", "K": 64}`` is the toy model.
    """
    if spec == "toy":
        return toy_model()
    doc = _load_json(spec)
    if "builtin" in doc:
        if doc["builtin"] != "toy":
            raise ConfigError(f"unknown builtin model {doc['builtin']!r}")
        return toy_model(int(doc.get("K", 64)))
    allowed = {"members", "limit", "index", "norm_scale", "limit_index", "c"}
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown model key(s): {', '.join(sorted(unknown))}")
    try:
        F = Fraction
        members = {int(k): {F(a): F(p) for a, p in d.items()} for k, d in doc["members"].items()}
        limit = {F(a): F(p) for a, p in doc["limit"].items()}
        idx = doc["index"]
        if "offsets" in idx:
            offs = {int(d): F(p) for d, p in idx["offsets"].items()}
            index = lambda n: {n + d: p for d, p in offs.items()}  # noqa: E731
        else:
            per_n = {int(n): {int(k): F(p) for k, p in law.items()} for n, law in idx["per_n"].items()}
            index = lambda n: per_n[n]  # noqa: E731
        scale = F(doc.get("norm_scale", 1))
        limit_index = {F(a): F(p) for a, p in doc["limit_index"].items()}
        return FiniteModel(members, limit, index, lambda n: scale * n, limit_index, F(doc["c"]))
    except (KeyError, ValueError, TypeError, ZeroDivisionError) as exc:
        raise ConfigError(f"malformed finite model: {exc!r}") from exc


def _run_distance(cfg):
    if not cfg["f"] or not cfg["g"]:
        raise ConfigError("fields 'f' and 'g' are required")
    try:
        f, g = read_cadlag(cfg["f"]), read_cadlag(cfg["g"])
    except OSError as exc:
        raise ConfigError(f"cannot read function file: {exc}") from exc
    res = distance(f, g, cfg["knot_budget"], cfg["restarts"], cfg["tolerance"], cfg["mode"])
    data = result_to_dict(res)
    if cfg["oracle"]:
        data["oracle"] = result_to_dict(distance_oracle(f, g, cfg["grid"]))
    rows = [{k: data[k] for k in ("upper", "lower", "value_part", "slope_part")}]
    return data, rows


def _run_sample(cfg):
    seed = Seed(cfg["seed"], cfg["rep"])
    what = cfg["what"]
    if what == "donsker":
        spec = IncrementSpec(cfg["increments"], cfg["sigma"], cfg["base"])
        fn = donsker_polygon(spec, cfg["n"], seed)
        data = cadlag_to_dict(fn, canonical=False)
    elif what == "wiener":
        fn = sample_wiener(cfg["n"], seed)
        data = cadlag_to_dict(fn, canonical=False)
    elif what == "poisson-index":
        mu = poisson_index(cfg["n"], cfg["a"], seed)
        fn = mu.fn
        data = cadlag_to_dict(fn, canonical=False)
        data.update({"c": mu.c, "f_n": mu.f_n})
    else:
        raise ConfigError(f"field 'what' must be donsker, wiener or poisson-index, not {what!r}")
    rows = [{"t": k["t"], "v": k["v"], "l": k["l"]} for k in data["knots"]]
    return data, rows


def _run_sweep(cfg):
    if not cfg["model"]:
        raise ConfigError("field 'model' is required")
    doc = _load_json(cfg["model"])
    if not isinstance(doc, dict):
        raise ConfigError("sweep model must be a JSON object")
    unknown = sorted(set(doc) - {"family", "index", "increments", "lo", "hi", "a", "t"})
    unknown += sorted(set(doc.get("increments", {})) - {"kind", "sigma", "base"})
    if unknown:
        raise ConfigError(f"unknown model key {unknown[0]!r}")
    try:
        model = SweepModel.from_dict(doc)
    except TypeError as exc:
        raise ConfigError(f"malformed sweep model: {exc}") from exc
    fns = [s.strip() for s in cfg["functional"].split(",") if s.strip()]
    rows = convergence_sweep(model, _parse_list(cfg["ns"]), fns, cfg["reps"], cfg["seed"], cfg["threads"])
    return {"model": model.to_dict(), "rows": rows}, rows


def _run_rate_bound(cfg):
    model = _finite_model(cfg["model"])
    reports = [rate_bound_exact(model, n).to_dict() for n in _parse_range(cfg["n_range"])]
    data = {"reports": reports, "holds_all": all(r["holds"] for r in reports)}
    if cfg["random_models"]:
        import numpy as np

        rng = np.random.default_rng(cfg["seed"])
        extra = [rate_bound_exact(random_finite_model(rng), 1) for _ in range(cfg["random_models"])]
        data["random_models"] = {
            "count": len(extra),
            "violations_printed": sum(not r.holds for r in extra),
            "violations_sup_variant": sum(not r.holds_sup_variant for r in extra),
        }
    rows = [{k: r[k] for k in ("n", "lhs", "term1", "term2_printed", "term2_sup_variant", "rhs_printed", "holds")} for r in reports]
    return data, rows


def _run_counterexample(cfg):
    rows = [counterexample_row(build_example(n, cfg["variant"]), cfg["grid"]) for n in _parse_range(cfg["n"])]
    return {"rows": rows}, rows


def _run_lemma_check(cfg):
    ns = _parse_list(cfg["ns"])
    x = step_function([(0.5, 1.0)])
    rep = lemma_check(shift_family(x), [grid_index(n, cfg["shift"]) for n in ns], ns=ns)
    rows = [{"n": n, "deviation": d, "one_over_n": 1.0 / n} for n, d in zip(ns, rep.deviations)]
    data = {
        "rows": rows,
        "threshold_ok": rep.threshold_ok,
        "settles_at": {str(k): v for k, v in rep.settles_at.items()},
    }
    return data, rows


RUNNERS = {
    "distance": _run_distance,
    "sample": _run_sample,
    "sweep": _run_sweep,
    "rate-bound": _run_rate_bound,
    "counterexample": _run_counterexample,
    "lemma-check": _run_lemma_check,
}


def _render(meta: dict, data, rows, fmt: str) -> str:
    if fmt == "json":
        return json.dumps({"metadata": meta, "data": data}, sort_keys=True, indent=1) + "\n"
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True, separators=(",", ":")) + "\n")
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def run(kind: str, cfg: dict) -> str:
    """Run one resolved configuration and return the rendered output."""
    data, rows = RUNNERS[kind](cfg)
    return _render(_metadata(kind, cfg), data, rows, cfg["format"])


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    kind = args.kind
    flags = {k: v for k, v in vars(args).items() if k not in ("kind", "config")}
    try:
        config = _load_json(args.config) if args.config else None
        if config is not None and not isinstance(config, dict):
            raise ConfigError("config file must hold a JSON object")
        cfg = resolve(kind, flags, config)
        text = run(kind, cfg)
        if cfg["out"]:
            try:
                with open(cfg["out"], "w", newline="") as fh:
                    fh.write(text)
            except OSError as exc:
                raise ConfigError(f"cannot write {cfg['out']}: {exc.strerror}") from exc
        else:
            sys.stdout.write(text)
    except ConfigError as exc:
        print(f"skorolab: error: {exc}", file=sys.stderr)
        return 2
    except SkorolabError as exc:
        print(f"skorolab: {exc.code}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
