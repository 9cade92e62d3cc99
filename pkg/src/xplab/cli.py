"""Batch experiment runner.

Configs are INI files with an ``[experiment]`` section (``kind``, ``seed``,
``workers``, ``name``), a ``[params]`` section whose keys depend on the kind,
and optional ``[output]`` and ``[caps]`` sections.  Unknown sections or keys
are rejected.  ``xplab list`` prints every kind with its parameter schema.

Exit codes: 0 success, 2 configuration error, 3 resource-cap rejection.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any, Callable

import numpy as np

from . import __version__
from . import distortion as dist
from . import inequality as iq
from .freealg import random_element
from .lattice import GroupShape, LatticeFunction, ResourceCapError, get_cap, random_function, set_cap
from .operators import EtaMap, MultiplierFamily
from .search import SearchConfig, STRATEGIES, evaluate_witness, extremal_witness, maximize_ratio, sharpness_scan
from .serialize import decode_function, dumps, encode_function
from .sparse import random_trigpoly

OUT_ENV = "XPLAB_OUT"
EXIT_OK, EXIT_CONFIG, EXIT_CAP = 0, 2, 3
FORCED_CAP = 10**15


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------------ schema

REQUIRED = object()


@dataclass(frozen=True)
class Field:
    kind: str  # int | float | str | ints | floats | choice
    default: Any = REQUIRED
    choices: tuple = ()
    help: str = ""

    def describe(self) -> str:
        kind = "{" + "|".join(self.choices) + "}" if self.kind == "choice" else self.kind
        dflt = "required" if self.default is REQUIRED else f"default {self.default}"
        return f"{kind}, {dflt}"

    def parse(self, name: str, raw: str):
        raw = raw.strip()
        if raw.lower() in ("", "none") and self.default is None:
            return None
        try:
            if self.kind == "int":
                return int(raw)
            if self.kind == "float":
                return float(raw)
            if self.kind == "ints":
                return [int(x) for x in raw.split(",") if x.strip()]
            if self.kind == "floats":
                return [float(x) for x in raw.split(",") if x.strip()]
        except ValueError:
            raise ConfigError(f"{name}: cannot parse {raw!r} as {self.kind}") from None
        if self.kind == "choice" and raw not in self.choices:
            raise ConfigError(f"{name}: {raw!r} is not one of {', '.join(self.choices)}")
        return raw


SUBSET = Field("choice", "auto", ("auto", "exact", "sampled"), "subset enumeration")
COUNT = Field("int", None, help="sample count for sampled subsets")
P4 = Field("float", 4.0, help="exponent p")

EXPERIMENTS: dict[str, dict[str, Field]] = {
    "eval_np": {
        "n": Field("int"), "k": Field("int"), "p": P4, "subset_mode": SUBSET, "count": COUNT,
        "input": Field("choice", "random", ("random", "file")), "path": Field("str", None),
    },
    "eval_rp1": {
        "n": Field("int"), "k": Field("int"), "p": P4, "d": Field("int", 1), "modulus": Field("int", 2),
        "subset_mode": SUBSET, "count": COUNT,
        "input": Field("choice", "random", ("random", "file")), "path": Field("str", None),
    },
    "eval_theorem_a": {
        "n": Field("int"), "k": Field("int"), "m": Field("int"), "p": P4, "ell": Field("int", 1),
        "eta": Field("choice", "beta", ("beta", "sign")),
        "derivative_mode": Field("choice", "unit-shift", ("unit-shift", "spectral", "hypercube-difference")),
        "subset_mode": SUBSET, "count": COUNT, "terms": Field("int", 4),
        "input": Field("choice", "random", ("random", "extremal", "file")), "path": Field("str", None),
    },
    "eval_cyclic": {
        "n": Field("int"), "k": Field("int"), "m": Field("int"), "ell": Field("int", 1), "p": P4,
        "subset_mode": SUBSET, "count": COUNT, "terms": Field("int", 4),
        "input": Field("choice", "random", ("random", "extremal", "file")), "path": Field("str", None),
    },
    "eval_torus": {
        "n": Field("int"), "k": Field("int"), "m": Field("int"), "ell": Field("int", 1), "p": P4,
        "variant": Field("choice", "uniform-eta", iq.TORUS_VARIANTS),
        "subset_mode": SUBSET, "count": COUNT, "terms": Field("int", 4),
        "input": Field("choice", "random", ("random", "extremal", "file")), "path": Field("str", None),
    },
    "eval_nc": {
        "n": Field("int"), "k": Field("int"), "m": Field("int"), "p": P4, "d": Field("int", 2),
        "subset_mode": SUBSET, "count": COUNT,
        "input": Field("choice", "random", ("random", "file")), "path": Field("str", None),
    },
    "eval_free_transfer": {
        "n": Field("int"), "k": Field("int"), "m": Field("int"), "p": Field("int", 4),
        "group": Field("choice", "cyclic", ("cyclic", "free")), "size": Field("int", 6), "max_len": Field("int", 3),
        "subset_mode": SUBSET, "count": COUNT,
        "input": Field("choice", "random", ("random", "file")), "path": Field("str", None),
    },
    "search": {
        "evaluator": Field("choice", "eval_cyclic", ("eval_cyclic", "eval_nc", "eval_np", "eval_rp1")),
        "n": Field("int"), "k": Field("int"), "m": Field("int", None), "ell": Field("int", 1), "p": P4,
        "d": Field("int", 1), "budget": Field("int", 1000), "strategy": Field("choice", "random", STRATEGIES),
        "scale": Field("float", 0.5), "support": Field("choice", "axes+pairs", ("axes", "axes+pairs")),
        "max_climb": Field("int", None),
    },
    "sharpness_scan": {
        "evaluator": Field("choice", "eval_cyclic", ("eval_cyclic", "eval_nc")),
        "n_list": Field("ints"), "k": Field("int"), "m_list": Field("ints"), "ell": Field("int", 1), "p": P4,
        "witness": Field("choice", "extremal-exponential", ("extremal-exponential", "search")),
        "budget": Field("int", 200),
    },
    "distortion": {
        "m": Field("int"), "n": Field("int"), "q": Field("float"), "p": Field("float"),
        "map": Field("choice", "identity", ("identity", "h-identity")),
        "sample": Field("choice", "auto", ("auto", "exact", "pairs")), "pairs": Field("int", 10**5),
    },
    "distortion_bound": {
        "n_list": Field("ints"), "m_list": Field("ints"), "p": Field("float"), "q": Field("float"),
    },
    "comparability": {
        "m_list": Field("ints"), "n": Field("int"), "q_list": Field("floats"),
    },
}

SECTION_FIELDS = {
    "experiment": {
        "kind": Field("choice", REQUIRED, tuple(sorted(EXPERIMENTS))),
        "seed": Field("int", 0), "workers": Field("int", 1), "name": Field("str", None),
    },
    "output": {"dir": Field("str", None), "csv": Field("choice", "yes", ("yes", "no"))},
    "caps": {"lattice_scalars": Field("int", None)},
}


def list_experiments() -> str:
    lines = []
    for kind in sorted(EXPERIMENTS):
        lines.append(kind)
        for name, fld in EXPERIMENTS[kind].items():
            lines.append(f"  {name}: {fld.describe()}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ config


def _split_override(text: str) -> tuple[str, str, str]:
    if "=" not in text:
        raise ConfigError(f"--set expects key=value, got {text!r}")
    key, value = text.split("=", 1)
    key = key.strip()
    section, _, name = key.rpartition(".")
    return section or "params", name, value


def load_config(path: str, overrides=()) -> dict:
    """Parse, apply overrides, validate. Returns ``{section: {key: value}}`` with defaults filled in."""
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    raw = {s: dict(cp[s]) for s in cp.sections()}
    for text in overrides:
        section, name, value = _split_override(text)
        raw.setdefault(section, {})[name] = value
    if "experiment" not in raw or "kind" not in raw["experiment"]:
        raise ConfigError("experiment.kind: missing")
    kind = raw["experiment"]["kind"].strip()
    if kind not in EXPERIMENTS:
        raise ConfigError(f"experiment.kind: unknown kind {kind!r}; see 'xplab list'")
    schema = dict(SECTION_FIELDS, params=EXPERIMENTS[kind])
    cfg: dict = {}
    for section in raw:
        if section not in schema:
            raise ConfigError(f"unknown section [{section}]")
    for section, fields in schema.items():
        given = raw.get(section, {})
        for key in given:
            if key not in fields:
                raise ConfigError(f"{section}.{key}: unknown key for kind {kind}")
        out = {}
        for key, fld in fields.items():
            if key in given:
                out[key] = fld.parse(f"{section}.{key}", given[key])
            elif fld.default is REQUIRED:
                raise ConfigError(f"{section}.{key}: required")
            else:
                out[key] = fld.default
        cfg[section] = out
    _validate(kind, cfg)
    return cfg


def _validate(kind: str, cfg: dict) -> None:
    P = cfg["params"]
    E = cfg["experiment"]
    if E["workers"] < 1:
        raise ConfigError("experiment.workers: must be >= 1")

    def positive(*names):
        for name in names:
            v = P.get(name)
            if v is not None and not (isinstance(v, list) or v >= 1):
                raise ConfigError(f"params.{name}: must be >= 1, got {v}")
            if isinstance(v, list):
                if not v or any(x < 1 for x in v):
                    raise ConfigError(f"params.{name}: needs a nonempty list of values >= 1")

    positive("n", "m", "ell", "d", "budget", "terms", "size", "n_list", "m_list", "pairs", "modulus")
    if "k" in P:
        if P["k"] < 1:
            raise ConfigError(f"params.k: must be >= 1, got {P['k']}")
        ns = P["n_list"] if "n_list" in P else [P["n"]]
        for n in ns:
            if P["k"] > n:
                raise ConfigError(f"params.k: k={P['k']} exceeds n={n}")
    if P.get("input") == "file" and not P.get("path"):
        raise ConfigError("params.path: required when input = file")
    if P.get("subset_mode") == "sampled" and P.get("count") is None:
        raise ConfigError("params.count: required when subset_mode = sampled")
    if "p" in P and not P["p"] >= 1:
        raise ConfigError(f"params.p: must be >= 1, got {P['p']}")
    if kind in ("distortion_bound",) and not 2 < P["q"] < P["p"]:
        raise ConfigError(f"params.q: need 2 < q < p, got q={P['q']}, p={P['p']}")
    if kind == "distortion" and P["q"] < 1:
        raise ConfigError(f"params.q: must be >= 1, got {P['q']}")
    if kind == "eval_theorem_a" and P["eta"] == "sign" and P["ell"] != 1:
        raise ConfigError("params.ell: the sign map has ell = 1")


# ------------------------------------------------------------------ inputs


def _p(P) -> float | int:
    p = P["p"]
    return int(p) if float(p).is_integer() else p


def _load_witness(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"params.path: cannot load {path}: {exc}") from None
    for key in ("witness", "input"):
        if isinstance(data, dict) and isinstance(data.get("result"), dict) and key in data["result"]:
            data = data["result"][key]
            break
    try:
        return decode_function(data)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"params.path: not an encoded function ({exc})") from None


def _mean_zero(f):
    axes = tuple(range(f.shape.n))
    return LatticeFunction(f.shape, f.values - f.values.mean(axis=axes, keepdims=True))


def _input(kind: str, P: dict, seed: int):
    if P.get("input") == "file":
        return _load_witness(P["path"])
    n = P.get("n")
    if kind in ("eval_np", "eval_rp1"):
        shape = GroupShape.cyclic(2 if kind == "eval_np" else P["modulus"], n)
        return _mean_zero(random_function(shape, P.get("d", 1), seed=seed))
    if kind == "eval_nc":
        return random_function(GroupShape.cyclic(8 * P["m"], n), P["d"], seed=seed)
    if kind == "eval_free_transfer":
        modulus = 8 * P["m"] if P["group"] == "cyclic" else None
        return random_element(n, modulus, size=P["size"], max_len=P["max_len"], seed=seed)
    ell = P.get("ell", 1)
    if P.get("input") == "extremal":
        return extremal_witness(n, P["m"], ell)
    return random_trigpoly(GroupShape.cyclic(8 * ell * P["m"], n), P["terms"], seed=seed)


# ------------------------------------------------------------- experiments


def _common(P):
    return dict(subset_mode=P["subset_mode"], count=P["count"])


def _run_evaluator(kind, P, seed, workers, f=None):
    if f is None:
        f = _input(kind, P, seed)
    kw = dict(_common(P), seed=seed, workers=workers)
    p, k = _p(P), P["k"]
    fn = f.shape.n if hasattr(f, "shape") else f.n
    if fn != P["n"]:
        raise ConfigError(f"params.n: input has n={fn}, config says {P['n']}")
    if kind == "eval_np":
        rep = iq.eval_np(f, p, k, **kw)
    elif kind == "eval_rp1":
        rep = iq.eval_rp1(f, p, k, **kw)
    elif kind == "eval_cyclic":
        rep = iq.eval_cyclic(f, p, k, P["m"], P["ell"], **kw)
    elif kind == "eval_torus":
        rep = iq.eval_torus(f, p, k, P["m"], P["variant"], P["ell"], **kw)
    elif kind == "eval_nc":
        rep = iq.eval_nc(f, p, k, P["m"], **kw)
    elif kind == "eval_free_transfer":
        rep = iq.eval_free_transfer(f, p, k, P["m"], **kw)
    else:
        n, m = P["n"], P["m"]
        if P["eta"] == "beta":
            eta = EtaMap.beta(P["ell"], n, m)
        else:
            eta = EtaMap.sign(n, 8 * m)
        pair = iq.RepresentablePair(eta, MultiplierFamily.translations(eta.target), P["derivative_mode"])
        rep = iq.eval_theorem_a(f, pair, p, k, m, **kw)
    return {"report": rep.to_dict(), "input": encode_function(f)}, None


def _run_search(P, seed, workers):
    params = {key: P[key] for key in ("n", "k", "m", "ell", "p", "d")}
    params["p"] = _p(P)
    cfg = SearchConfig(
        P["evaluator"], params, budget=P["budget"], strategy=P["strategy"], scale=P["scale"],
        seed=seed, workers=workers, support=P["support"], max_climb=P["max_climb"],
    )
    return maximize_ratio(cfg).to_dict(), None


def _run_scan(P, seed, workers):
    rows = sharpness_scan(
        P["evaluator"], P["n_list"], P["k"], P["m_list"], P["witness"], P["ell"], _p(P),
        budget=P["budget"], seed=seed, workers=workers,
    )
    return {"rows": rows}, rows


def _run_distortion(P, seed, workers):
    m, n, q, p = P["m"], P["n"], P["q"], P["p"]
    sample = ("pairs", P["pairs"], seed) if P["sample"] == "pairs" else P["sample"]
    if P["map"] == "identity":
        spec = dist.GridSpec(m, n, q)
        pts = spec.points()
        emb = dist.EmbeddingCandidate(pts, pts, p)
        value = dist.measure_distortion(emb, spec, sample)
        comp = None
    else:
        emb = dist.compose_with_h(lambda v: v, m, n, p)
        value = dist.measure_distortion(emb, sample=sample, domain_metric=dist.circle_metric(m, q))
        c = dist.comparability(m, n, q)
        comp = dict(c1=c.c1, c2=c.c2, spread=c.spread, pairs=c.pairs)
    result = dict(map=P["map"], points=len(emb.points), distortion=value, comparability=comp)
    return result, None


def _run_bound(P, seed, workers):
    rows = []
    for n in P["n_list"]:
        for m in P["m_list"]:
            b = dist.distortion_bound(n, m, P["p"], P["q"])
            rows.append(dict(n=n, m=m, p=P["p"], q=P["q"], value=b.value, first=b.first, second=b.second,
                             k_choice=b.k, m_choice=b.m_choice, threshold_ok=b.threshold_ok))
    return {"rows": rows, "snowflake_bound": dist.snowflake_bound(P["p"], P["q"])}, rows


def _run_comparability(P, seed, workers):
    rows = []
    for m in P["m_list"]:
        for q in P["q_list"]:
            c = dist.comparability(m, P["n"], q)
            rows.append(dict(m=m, n=P["n"], q=q, c1=c.c1, c2=c.c2, spread=c.spread, pairs=c.pairs))
    return {"rows": rows}, rows


RUNNERS: dict[str, Callable] = {
    "search": _run_search,
    "sharpness_scan": _run_scan,
    "distortion": _run_distortion,
    "distortion_bound": _run_bound,
    "comparability": _run_comparability,
}


def execute(cfg: dict) -> tuple[dict, list | None]:
    """Run a validated config; returns the result payload and optional CSV rows."""
    kind = cfg["experiment"]["kind"]
    seed, workers = cfg["experiment"]["seed"], cfg["experiment"]["workers"]
    runner = RUNNERS.get(kind)
    if runner is None:
        return _run_evaluator(kind, cfg["params"], seed, workers)
    return runner(cfg["params"], seed, workers)


# ------------------------------------------------------------------ output


def rows_to_csv(rows: list[dict]) -> str:
    """Header of column names, then one line per row; floats keep 17 significant digits."""
    if not rows:
        return ""
    cols = list(rows[0])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([_cell(row[c]) for c in cols])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, bool) or v is None:
        return "" if v is None else str(v).lower()
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return v


def write_atomic(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=d)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


REPORT_KEYS = {"experiment": str, "provenance": dict, "result": dict}
PROVENANCE_KEYS = {"version": str, "seed": int, "timestamp": str, "config": dict, "workers": int}


def validate_report(doc: dict) -> None:
    """Structural check of a JSON report; raises ``ValueError`` on mismatch."""
    for key, typ in REPORT_KEYS.items():
        if not isinstance(doc.get(key), typ):
            raise ValueError(f"report field {key!r} missing or not {typ.__name__}")
    for key, typ in PROVENANCE_KEYS.items():
        if not isinstance(doc["provenance"].get(key), typ):
            raise ValueError(f"provenance field {key!r} missing or not {typ.__name__}")
    kind = doc["experiment"]
    if kind not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {kind!r}")
    res = doc["result"]
    if kind.startswith("eval_"):
        rep = res.get("report", {})
        for key in ("lhs", "rhs_derivative_term", "rhs_full_term", "m_factor", "ratio", "params"):
            if key not in rep:
                raise ValueError(f"report.{key} missing")
        if "input" not in res:
            raise ValueError("encoded input missing")
    elif kind == "search":
        for key in ("best_ratio", "witness", "report", "params"):
            if key not in res:
                raise ValueError(f"search result field {key!r} missing")
    elif kind != "distortion" and not isinstance(res.get("rows"), list):
        raise ValueError("table rows missing")


def recheck_report(doc: dict) -> float | None:
    """Re-evaluate the stored input or witness; returns the absolute ratio drift.

    Table-only reports (scans, distortion) carry no function and give ``None``.
    """
    res = doc["result"]
    if "witness" not in res and "input" not in res:
        return None
    if doc["experiment"] == "search":
        rep = evaluate_witness(res["params"]["evaluator"], res["params"], res["witness"])
        recorded = res["best_ratio"]
    else:
        cfg = doc["provenance"]["config"]
        P = dict(cfg["params"], input="file", path=None)
        f = decode_function(res["input"])
        kind = doc["experiment"]
        recorded = res["report"]["ratio"]
        payload, _ = _run_evaluator(kind, P, cfg["experiment"]["seed"], 1, f)
        rep = iq.InequalityReport(**payload["report"])
    if recorded is None or rep.ratio is None:
        return 0.0 if recorded is rep.ratio else math.inf
    return abs(rep.ratio - recorded)


def run(config_path: str, overrides=(), out_dir=None, seed=None, workers=None, force_caps=False,
        stdout=sys.stdout, stderr=sys.stderr) -> int:
    try:
        if seed is not None:
            overrides = list(overrides) + [f"experiment.seed={seed}"]
        if workers is not None:
            overrides = list(overrides) + [f"experiment.workers={workers}"]
        cfg = load_config(config_path, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=stderr)
        return EXIT_CONFIG
    kind = cfg["experiment"]["kind"]
    out = out_dir or cfg["output"]["dir"] or os.environ.get(OUT_ENV) or "."
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        print(f"config error: output.dir: {exc.strerror}", file=stderr)
        return EXIT_CONFIG
    old_cap = get_cap()
    try:
        if force_caps:
            set_cap(FORCED_CAP)
        elif cfg["caps"]["lattice_scalars"] is not None:
            set_cap(cfg["caps"]["lattice_scalars"])
        try:
            result, rows = execute(cfg)
        except ResourceCapError as exc:
            print(f"resource cap: {exc}", file=stderr)
            return EXIT_CAP
        except (ConfigError, iq.InputError, ValueError) as exc:
            print(f"config error: {exc}", file=stderr)
            return EXIT_CONFIG
    finally:
        set_cap(old_cap)
    name = cfg["experiment"]["name"] or kind
    doc = {
        "experiment": kind,
        "provenance": {
            "version": __version__,
            "seed": cfg["experiment"]["seed"],
            "workers": cfg["experiment"]["workers"],
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "config": cfg,
        },
        "result": result,
    }
    json_path = os.path.join(out, f"{name}.json")
    write_atomic(json_path, dumps(doc))
    written = [json_path]
    if rows is not None and cfg["output"]["csv"] != "no":
        csv_path = os.path.join(out, f"{name}.csv")
        write_atomic(csv_path, rows_to_csv(rows))
        written.append(csv_path)
    for path in written:
        print(path, file=stdout)
    return EXIT_OK


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="xplab", description="Run X_p inequality experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment config")
    r.add_argument("config")
    r.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config value; KEY is section.key or a params key")
    r.add_argument("--out", default=None, help=f"output directory (default: output.dir, then ${OUT_ENV}, then .)")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--workers", type=int, default=None)
    r.add_argument("--force-caps", action="store_true", help="lift the dense allocation cap")
    sub.add_parser("list", help="list experiment kinds and their parameters")
    args = ap.parse_args(argv)
    if args.command == "list":
        sys.stdout.write(list_experiments())
        return EXIT_OK
    return run(args.config, args.overrides, args.out, args.seed, args.workers, args.force_caps)


if __name__ == "__main__":
    sys.exit(main())
