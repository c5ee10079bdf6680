"""Command-line experiments.

``python -m dvperc <group> <command> [flags]``. Output is one JSON document
on stdout (default) or CSV with a header row. Errors go to stderr as
``error[<code>]: <message>`` with exit status 2 (usage) or 3 (domain).

Sweepable scalar flags accept ``start:stop:step`` (stop included); each grid
point becomes one output record.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import functools
import io
import itertools
import json
import math
import os
import sys
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from . import events as ev
from . import exact, mc
from .errors import DegreeMismatch, DvpError, UsageError
from .graph import build_window, catalog_entry, count_saw, lambda_estimate
from .prob import ProbVector, make_prob_vector

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN = 0, 2, 3
SEED_ENV = "DVP_SEED"

# flag dest -> converter; these accept start:stop:step
SCALARS: dict[str, Callable] = {
    "radius": int,
    "shell": int,
    "n": int,
    "trials": int,
    "seed": int,
    "d": int,
    "k": int,
    "d_star": int,
    "m_max": int,
    "generations": int,
    "frontier_cap": int,
    "p_value": float,
    "lambda_g": float,
    "lambda_dual": float,
}
# never echoed: they do not change any number in the output
NOT_ECHOED = {"config", "csv", "json", "threads", "handler", "group", "command"}


# ---------------------------------------------------------------------------
# parsing helpers


def parse_number(text: str) -> float:
    """Decimal or fraction literal such as ``0.25`` or ``1/3``."""
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a number: {text!r}") from None


def parse_p(text: str) -> ProbVector:
    return make_prob_vector([parse_number(t) for t in text.split(",")])


def parse_grid(text: str, conv: Callable) -> list:
    """``a:b:c`` -> a, a+c, ..., up to and including b; a plain value -> [value]."""
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            return [conv(parse_number(parts[0])) if conv is float else conv(parts[0])]
        if len(parts) != 3:
            raise ValueError
        if conv is int:
            a, b, c = (int(x) for x in parts)
            if c == 0:
                raise ValueError
            return list(range(a, b + (1 if c > 0 else -1), c))
        a, b, c = (parse_number(x) for x in parts)
        if c == 0:
            raise ValueError
        n = int(math.floor((b - a) / c + 1e-9))
        return [a + i * c for i in range(max(n, -1) + 1)]
    except ValueError:
        raise UsageError(f"bad value or sweep {text!r}") from None


def parse_shells(text: str) -> list[int]:
    """``8..24`` or ``8..24..2``; a comma list also works."""
    try:
        if ".." in text:
            parts = [int(x) for x in text.split("..")]
            step = parts[2] if len(parts) == 3 else 1
            return list(range(parts[0], parts[1] + 1, step))
        return [int(x) for x in text.split(",")]
    except (ValueError, IndexError):
        raise UsageError(f"bad shell range {text!r}") from None


def parse_coord(window, text: str) -> int:
    text = text.strip()
    if text in ("o", "origin"):
        return 0
    try:
        parts = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"bad coordinate {text!r}") from None
    coord = parts[0] if window.graph_name == "line" and len(parts) == 1 else parts
    try:
        return window.id_of(coord)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


def _mode_suffix(rest: list[str]) -> str:
    if not rest:
        return "weak"
    if rest[0] not in ("weak", "strong") or len(rest) > 1:
        raise UsageError(f"bad mode suffix {':'.join(rest)!r}")
    return rest[0]


def parse_event(window, text: str) -> ev.EventSpec:
    """Tiny event language.

    Terms: ``all``, ``none``, ``choose:X;Y`` (X selects Y), ``edge:X;Y[:strong]``,
    ``connect:X;Y[:strong]`` (inside the window), ``reach:N[:strong]``, and
    ``!TERM``. Coordinates are comma-separated integers or ``o``. Terms are
    joined with ``&``; ``|`` binds looser than ``&``.
    """
    alts = []
    for alt in text.split("|"):
        terms = [_parse_term(window, t.strip()) for t in alt.split("&")]
        alts.append(terms[0] if len(terms) == 1 else ev.all_of(*terms))
    return alts[0] if len(alts) == 1 else ev.any_of(*alts)


def _parse_term(window, term: str) -> ev.EventSpec:
    if term.startswith("!"):
        return ev.negation(_parse_term(window, term[1:].strip()))
    if term == "all":
        return ev.everything()
    if term == "none":
        return ev.nothing()
    head, _, body = term.partition(":")
    pieces = body.split(":")
    try:
        if head == "reach":
            return ev.reach_event(window, int(pieces[0]), _mode_suffix(pieces[1:]))
        ends = pieces[0].split(";")
        if len(ends) != 2:
            raise UsageError(f"{head} needs two vertices X;Y in {term!r}")
        x, y = (parse_coord(window, e) for e in ends)
        if head == "choose":
            if len(pieces) > 1:
                raise UsageError("choose takes no mode")
            return ev.choose_event(window, x, y)
        if head == "edge":
            return ev.edge_event(window, x, y, _mode_suffix(pieces[1:]))
        if head == "connect":
            return ev.connect_event(window, x, y, _mode_suffix(pieces[1:]))
    except DvpError:
        raise
    except ValueError as exc:
        raise UsageError(f"bad event term {term!r}: {exc}") from None
    raise UsageError(f"unknown event term {term!r}")


def read_config(path: str) -> list[str]:
    """key=value lines (``#`` comments) turned into flag tokens."""
    tokens: list[str] = []
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"config line without '=': {raw!r}")
        flag = "--" + key.strip().replace("_", "-")
        value = value.strip()
        if value.lower() in ("true", "false"):
            if value.lower() == "true":
                tokens.append(flag)
        else:
            tokens += [flag, value]
    return tokens


def config_text(inputs: dict) -> str:
    """Inverse of :func:`read_config` for an ``inputs`` echo."""
    lines = []
    for key, value in inputs.items():
        if value is None or value is False:
            continue
        if value is True:
            value = "true"
        lines.append(f"{key.replace('_', '-')}={value}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# handlers: each takes one grid point (a dict of converted values) and returns a dict


@functools.lru_cache(maxsize=8)
def _window(graph: str, radius: int):
    return build_window(graph, radius)


def _window_and_p(a: dict):
    w = _window(a["graph"], a["radius"])
    p = parse_p(a["p"])
    if p.degree != w.degree:
        raise DegreeMismatch(f"--p has {p.degree + 1} entries; {a['graph']} needs {w.degree + 1}")
    return w, p


def h_t2_chi(a):
    r = exact.t2_chi(parse_p(a["p"]))
    return {"chi": r.chi, "chi_tilde": r.chi_tilde}


def h_t2_connect(a):
    return {"probability": exact.t2_connection(parse_p(a["p"]), a["n"], a["mode"])}


def h_tree_threshold(a):
    if a["mode"] == "weak":
        return {"p_c": exact.tree_weak_threshold(a["d"])}
    if a["k"] is None:
        raise UsageError("--k is required in strong mode")
    t = exact.tree_strong_threshold(a["d"], a["k"])
    return {"p_c": t.value, "p_c_exact": str(t.exact), "regime": t.regime}


def h_tree_matrix(a):
    if a["mode"] == "weak":
        m = exact.tree_weak_matrix(a["d"], a["p_value"])
        eig = list(exact.tree_weak_eigenvalues(a["d"], a["p_value"]))
    else:
        if a["k"] is None:
            raise UsageError("--k is required in strong mode")
        m = exact.tree_strong_matrix(a["d"], a["k"], a["p_value"])
        eig = [float(m.spectral_radius), 0.0]
    return {"matrix": m.entries.tolist(), "spectral_radius": float(m.spectral_radius), "eigenvalues": eig}


def h_check_sub(a):
    entry = catalog_entry(a["graph"])
    p = parse_p(a["p"])
    if p.degree != entry.degree:
        raise DegreeMismatch(f"--p has {p.degree + 1} entries; {a['graph']} needs {entry.degree + 1}")
    lam = a["lambda_g"] if a["lambda_g"] is not None else entry.lambda_value
    v = exact.check_subcritical(p, lam, a["mode"])
    return {"conclusion": v.conclusion, **v.certificate}


def h_check_super(a):
    entry = catalog_entry(a["graph"])
    p = parse_p(a["p"])
    if p.degree != entry.degree:
        raise DegreeMismatch(f"--p has {p.degree + 1} entries; {a['graph']} needs {entry.degree + 1}")
    lam = a["lambda_dual"] if a["lambda_dual"] is not None else entry.dual_lambda_value
    if lam is None:
        raise UsageError(f"{a['graph']} has no dual in the catalog; pass --lambda-dual")
    v = exact.check_supercritical(p, lam, a["mode"])
    return {"conclusion": v.conclusion, **v.certificate}


def h_check_corollary(a):
    if a["graph"] is not None:
        entry = catalog_entry(a["graph"])
        if entry.dual_degree is None:
            raise UsageError(f"{a['graph']} has no dual in the catalog")
        d, d_star = entry.degree, entry.dual_degree
        out = {"d": d, "d_star": d_star, "k": a["k"]}
        out["holds_with_degree_bound"] = exact.check_corollary_rows(d, d_star, a["k"], a["mode"])
        out["holds_with_catalog_lambda"] = exact.check_catalog_rows(a["graph"], a["k"], a["mode"])
        return out
    if a["d"] is None or a["d_star"] is None:
        raise UsageError("give --graph, or both --d and --d-star")
    return {
        "d": a["d"],
        "d_star": a["d_star"],
        "k": a["k"],
        "holds_with_degree_bound": exact.check_corollary_rows(a["d"], a["d_star"], a["k"], a["mode"]),
    }


def h_mc_reach(a):
    w, p = _window_and_p(a)
    return mc.estimate_reach(w, p, a["shell"], a["mode"], a["trials"], a["seed"], a["threads"]).as_dict()


def h_mc_chi(a):
    w, p = _window_and_p(a)
    r = mc.estimate_chi(w, p, a["mode"], a["trials"], a["seed"], a["threads"])
    return r.as_dict()


def h_mc_sizes(a):
    w, p = _window_and_p(a)
    r = mc.estimate_size_distribution(w, p, a["mode"], a["trials"], a["seed"], a["m_max"], a["threads"])
    rows = [{"m": m, "frequency": f, "std_error": se} for m, f, se in r.rows]
    return {"overflow_fraction": r.overflow_fraction, "beyond_fraction": r.beyond_fraction, "rows": rows}


def h_mc_kappa(a):
    w, p = _window_and_p(a)
    k = mc.estimate_kappa(w, p, a["mode"], a["trials"], a["seed"], a["threads"])
    i, c = k.kappa_inverse_mean, k.kappa_count
    return {
        "kappa_inverse_mean": i.estimate,
        "kappa_inverse_mean_std_error": i.std_error,
        "kappa_count": c.estimate,
        "kappa_count_std_error": c.std_error,
        "flagged_fraction": i.flagged_fraction,
        "trials": i.trials,
    }


def h_mc_decay(a):
    w, p = _window_and_p(a)
    fit = mc.estimate_decay(w, p, a["mode"], parse_shells(a["shells"]), a["trials"], a["seed"], a["threads"])
    rows = [
        {"n": n, "estimate": f, "std_error": se, "successes": s, "log_estimate": math.log(f) if f > 0 else None}
        for n, f, se, s in fit.per_shell
    ]
    return {"slope": fit.slope, "rate": fit.rate, "fitted_shells": fit.fitted_shells, "rows": rows}


def h_tree_survival(a):
    s = mc.tree_survival(
        a["d"], a["p_value"], a["mode"], a["generations"], a["trials"], a["seed"],
        k=a["k"], frontier_cap=a["frontier_cap"], threads=a["threads"],
    )
    out = s.result.as_dict()
    out["curve"] = s.curve
    return out


def h_events_fkg(a):
    w, p = _window_and_p(a)
    ea, eb = parse_event(w, a["a"]), parse_event(w, a["b"])
    return {
        "p_a": ev.exact_prob(w, ea, p),
        "p_b": ev.exact_prob(w, eb, p),
        "p_ab": ev.exact_prob(w, ev.all_of(ea, eb), p),
        "gap": ev.fkg_gap(w, ea, eb, p),
    }


def h_events_russo(a):
    w, p = _window_and_p(a)
    e = parse_event(w, a["event"])
    direction = [parse_number(t) for t in a["direction"].split(",")]
    r = ev.russo_derivative(w, e, p, direction)
    out = {"formula_value": r.formula_value, "finite_difference": r.finite_difference, "scheme": r.scheme}
    if a["k"] is not None:
        out["pair_derivative"] = ev.increasing_derivative(w, e, p, a["k"])
    return out


def h_events_box(a):
    w, p = _window_and_p(a)
    r = ev.box_prob(w, parse_event(w, a["a"]), parse_event(w, a["b"]), p)
    return {"box": r.box, "product": r.product, "holds": r.holds}


def h_saw_count(a):
    w = _window(a["graph"], a["n"])
    est = lambda_estimate(w, a["n"])
    rows = [{"n": n, "count": count_saw(w, n)} for n in range(1, a["n"] + 1)]
    return {
        "lambda_estimate": est.estimate,
        "lambda_bound": est.bound,
        "lambda_catalog": est.catalog,
        "rows": rows,
    }


# ---------------------------------------------------------------------------
# parser


def _common(parser, *, seed=False, trials=False, threads=False):
    fmt = parser.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="JSON output (default)")
    fmt.add_argument("--csv", action="store_true", help="CSV output")
    parser.add_argument("--config", help="key=value file; flags given on the command line win")
    if seed:
        parser.add_argument("--seed", default=os.environ.get(SEED_ENV, "0"), help=f"default ${SEED_ENV} or 0")
    if trials:
        parser.add_argument("--trials", default="10000")
    if threads:
        parser.add_argument("--threads", type=int, default=1)


def _mode(parser, default="weak"):
    parser.add_argument("--mode", choices=("weak", "strong"), default=default)


def _windowed(parser, p=True):
    parser.add_argument("--graph", required=True, help="line, square, triangular, hexagonal, hypercube:D, tree:D")
    parser.add_argument("--radius", required=True)
    if p:
        parser.add_argument("--p", required=True, help="comma-separated p_0..p_d")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="dvperc", description="Neighbour-choice percolation experiments.")
    groups = top.add_subparsers(dest="group", required=True)

    def cmd(group_parsers, name, handler, help_text):
        sp = group_parsers.add_parser(name, help=help_text)
        sp.set_defaults(handler=handler)
        return sp

    g = groups.add_parser("exact", help="closed forms").add_subparsers(dest="command", required=True)
    sp = cmd(g, "t2-chi", h_t2_chi, "mean weak/strong cluster sizes on the line")
    sp.add_argument("--p", required=True)
    _common(sp)
    sp = cmd(g, "t2-connect", h_t2_connect, "P(0 connected to n) on the line")
    sp.add_argument("--p", required=True)
    sp.add_argument("--n", required=True)
    _mode(sp)
    _common(sp)
    sp = cmd(g, "tree-threshold", h_tree_threshold, "critical p on the d-regular tree")
    sp.add_argument("--d", required=True)
    sp.add_argument("--k")
    _mode(sp)
    _common(sp)
    sp = cmd(g, "tree-matrix", h_tree_matrix, "mean offspring matrix on the tree")
    sp.add_argument("--d", required=True)
    sp.add_argument("--p-value", required=True)
    sp.add_argument("--k")
    _mode(sp)
    _common(sp)

    g = groups.add_parser("check", help="sufficient conditions").add_subparsers(dest="command", required=True)
    sp = cmd(g, "sub", h_check_sub, "path-counting certificate for no percolation")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--p", required=True)
    sp.add_argument("--lambda", "--lambda-g", dest="lambda_g", help="connective constant (default: catalog)")
    _mode(sp)
    _common(sp)
    sp = cmd(g, "super", h_check_super, "dual-contour certificate for percolation")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--p", required=True)
    sp.add_argument("--lambda-dual", help="dual connective constant (default: catalog)")
    _mode(sp)
    _common(sp)
    sp = cmd(g, "corollary", h_check_corollary, "(d, d*, k) rows where p_k = 1 percolates")
    sp.add_argument("--graph")
    sp.add_argument("--d")
    sp.add_argument("--d-star")
    sp.add_argument("--k", required=True)
    _mode(sp)
    _common(sp)

    g = groups.add_parser("mc", help="Monte Carlo estimators").add_subparsers(dest="command", required=True)
    for name, handler, help_text in (
        ("reach", h_mc_reach, "P(origin reaches shell n)"),
        ("chi", h_mc_chi, "mean cluster size"),
        ("sizes", h_mc_sizes, "cluster size distribution"),
        ("kappa", h_mc_kappa, "clusters per vertex, two estimators"),
        ("decay", h_mc_decay, "log-linear fit of reach over shells"),
    ):
        sp = cmd(g, name, handler, help_text)
        _windowed(sp)
        _mode(sp)
        _common(sp, seed=True, trials=True, threads=True)
        if name == "reach":
            sp.add_argument("--shell", required=True)
        elif name == "sizes":
            sp.add_argument("--m-max", required=True)
        elif name == "decay":
            sp.add_argument("--shells", required=True, help="a..b or a..b..step")
    sp = cmd(g, "tree-survival", h_tree_survival, "survival to a given depth on the d-regular tree")
    sp.add_argument("--d", required=True)
    sp.add_argument("--p-value", required=True, help="weight on the larger subset size")
    sp.add_argument("--k", help="strong mode: sizes k and k+1")
    sp.add_argument("--generations", default="30")
    sp.add_argument("--frontier-cap", default=str(mc.DEFAULT_FRONTIER_CAP))
    _mode(sp)
    _common(sp, seed=True, trials=True, threads=True)

    g = groups.add_parser("events", help="exact finite-support events").add_subparsers(dest="command", required=True)
    sp = cmd(g, "fkg", h_events_fkg, "P(A)P(B) - P(A and B)")
    _windowed(sp)
    sp.add_argument("--a", required=True)
    sp.add_argument("--b", required=True)
    _common(sp)
    sp = cmd(g, "russo", h_events_russo, "directional derivative of P(A)")
    _windowed(sp)
    sp.add_argument("--event", required=True)
    sp.add_argument("--direction", required=True, help="d+1 comma-separated components summing to 0")
    sp.add_argument("--k", help="also report the pivotal-sum derivative for p on sizes k, k+1")
    _common(sp)
    sp = cmd(g, "box", h_events_box, "disjoint occurrence vs product")
    _windowed(sp)
    sp.add_argument("--a", required=True)
    sp.add_argument("--b", required=True)
    _common(sp)

    g = groups.add_parser("saw", help="self-avoiding walks").add_subparsers(dest="command", required=True)
    sp = cmd(g, "count", h_saw_count, "walk counts and connective-constant estimate")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--n", required=True)
    _common(sp)
    return top


# ---------------------------------------------------------------------------
# output


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float, Fraction)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (list, dict)):
        return json.dumps(v, separators=(",", ":"))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_csv(records: list[dict], swept: list[str]) -> str:
    """One row per table row (when a record has ``rows``) or per record, sweep values first."""
    flat = []
    for rec in records:
        point = {k: rec["inputs"][k] for k in swept}
        res = rec["result"]
        scalars = {k: v for k, v in res.items() if k != "rows"}
        if "rows" in res:
            for row in res["rows"]:
                flat.append({**point, **row, **{f"fit_{k}": v for k, v in scalars.items()}})
        else:
            flat.append({**point, **scalars})
    header: list[str] = []
    for row in flat:
        header += [k for k in row if k not in header]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in flat:
        writer.writerow([_cell(row.get(k)) for k in header])
    return buf.getvalue()


def _timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def execute(argv: list[str]) -> tuple[dict, str]:
    """Parse, run every grid point, and return (document, rendered text)."""
    argv = list(argv)
    if "--config" in argv:
        i = argv.index("--config")
        if i + 1 >= len(argv):
            raise UsageError("--config needs a path")
        # file tokens go right after the subcommand so that later flags override them
        argv = argv[:2] + read_config(argv[i + 1]) + argv[2:]
    parser = build_parser()
    ns = parser.parse_args(argv)
    raw = {k: v for k, v in vars(ns).items() if k not in NOT_ECHOED}
    grids = {}
    for key, value in raw.items():
        if key in SCALARS and value is not None:
            grids[key] = parse_grid(value, SCALARS[key])
    swept = [k for k, g in grids.items() if len(g) > 1]
    keys = list(grids)
    records = []
    for combo in itertools.product(*(grids[k] for k in keys)):
        point = {**raw, **dict(zip(keys, combo))}
        point["threads"] = getattr(ns, "threads", 1)
        result = _plain(ns.handler(point))
        inputs = {k: v for k, v in point.items() if k != "threads"}
        records.append({"inputs": _plain(inputs), "result": result})
    command = f"{ns.group} {ns.command}"
    if len(records) == 1:
        doc = {"command": command, **records[0]["result"], "inputs": records[0]["inputs"]}
    else:
        doc = {"command": command, "swept": swept, "records": records, "inputs": _plain(raw)}
    doc["timestamp"] = _timestamp()
    if ns.csv:
        text = render_csv(records, swept)
    else:
        text = json.dumps(doc, indent=2) + "\n"
    return doc, text


def run(argv: Optional[list[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = sys.argv[1:] if argv is None else argv
    try:
        _, text = execute(argv)
    except SystemExit as exc:  # argparse
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except DvpError as exc:
        stderr.write(f"error[{exc.code}]: {exc}\n")
        return EXIT_USAGE if exc.kind == "usage" else EXIT_DOMAIN
    except (ValueError, KeyError, OverflowError) as exc:
        msg = exc.args[0] if exc.args else type(exc).__name__
        stderr.write(f"error[invalid_argument]: {msg}\n")
        return EXIT_USAGE
    stdout.write(text)
    return EXIT_OK


def main() -> None:
    sys.exit(run())
