"""Command line front end.

Subcommands: ``tile render``, ``measure``, ``mc-periodic``, ``verify``,
``construct-small-measure`` and ``sweep``.  Machine-readable output goes to
stdout (or ``--out``); progress goes to stderr.  Exit codes: 0 ok, 1 property
failure, 2 usage error, 3 resource cap.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Any

from . import __version__
from .numerics import HALF, ZERO, Scalar, as_scalar, format_scalar, parse_scalar
from .params import (
    FIXED_POINT,
    BoundaryReached,
    Itinerary,
    decay_schedule,
    param_from_itinerary,
    understandable_itinerary,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3
SCHEMA_VERSION = 1

DEFAULTS: dict[str, Any] = {
    "alpha": "(2-1*sqrt(2))/2",
    "beta": "(2-1*sqrt(2))/2",
    "x": "0",
    "y": "0",
    "depth": 30,
    "samples": 100_000,
    "seed": 0,
    "max_steps": 10_000,
    "max_period": 4,
    "window": "30x15",
    "origin": "0,0",
    "format": None,
    "workers": os.cpu_count() or 1,
    "renormalize": 0,
    "tile_px": 20,
    "eta": "1/2",
    "stages": 4,
    "k_cap": 1_000_000,
    "grid": 20,
    "property": "all",
    "inject_fault": None,
    "mc_samples": 0,
}


class UsageError(Exception):
    pass


class CapExceeded(Exception):
    pass


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _resolve(ns: argparse.Namespace) -> dict[str, Any]:
    """Merge flags over the JSON config file over the defaults."""
    cfg: dict[str, Any] = {}
    if getattr(ns, "config", None):
        try:
            with open(ns.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file: {exc}") from exc
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    out = dict(DEFAULTS)
    out.update(cfg)
    for k, v in vars(ns).items():
        if v is not None and k not in ("func", "config"):
            out[k] = v
    return out


def _config_hash(conf: dict[str, Any]) -> str:
    keep = {k: v for k, v in conf.items() if k not in ("workers", "out")}
    blob = json.dumps(keep, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _header(command: str, conf: dict[str, Any]) -> dict[str, Any]:
    return {
        "tool": "rexmap",
        "version": __version__,
        "schema": SCHEMA_VERSION,
        "command": command,
        "config_hash": _config_hash(conf),
        "seed": conf.get("seed"),
    }


def _scalar(text: Any, name: str) -> Scalar:
    try:
        return parse_scalar(str(text))
    except ValueError as exc:
        raise UsageError(f"bad value for --{name}: {text!r}") from exc


def _params(conf: dict[str, Any]) -> tuple[Scalar, Scalar, dict[str, Any]]:
    """Parameters from scalars or from an itinerary file (enclosure midpoints)."""
    meta: dict[str, Any] = {}
    if conf.get("itinerary"):
        try:
            with open(conf["itinerary"]) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read itinerary file: {exc}") from exc
        try:
            ita = Itinerary.from_json(data["alpha"])
            itb = Itinerary.from_json(data["beta"])
        except (KeyError, ValueError, TypeError) as exc:
            raise UsageError(f"malformed itinerary file: {exc}") from exc
        (alo, ahi), am = param_from_itinerary(ita)
        (blo, bhi), bm = param_from_itinerary(itb)
        meta = {
            "source": "itinerary",
            "prefix_length": min(len(ita), len(itb)),
            "alpha_width": float(ahi - alo),
            "beta_width": float(bhi - blo),
        }
        return Scalar(am), Scalar(bm), meta
    a = _scalar(conf["alpha"], "alpha")
    b = _scalar(conf["beta"], "beta")
    return a, b, {"source": "scalars"}


def _check_open(a: Scalar, b: Scalar) -> None:
    if not (ZERO < a < HALF and ZERO < b < HALF):
        raise UsageError("parameters must lie in (0, 1/2)")


def _emit(text: str, conf: dict[str, Any]) -> None:
    if conf.get("out"):
        with open(conf["out"], "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n"


# ---------------------------------------------------------------------------


def cmd_tile_render(conf: dict[str, Any]) -> int:
    from .tiling import Tiling, render_svg, renormalize_lazy, tiling_from_json, window_json

    try:
        w, h = (int(v) for v in str(conf["window"]).lower().split("x"))
        m0, n0 = (int(v) for v in str(conf["origin"]).split(","))
    except ValueError as exc:
        raise UsageError("--window must look like WxH and --origin like M,N") from exc
    if w < 1 or h < 1:
        raise UsageError("window must be at least 1x1")
    if conf.get("input"):
        try:
            with open(conf["input"]) as fh:
                t = tiling_from_json(fh.read())
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"cannot read window file: {exc}") from exc
    else:
        a, b, _ = _params(conf)
        t = Tiling.rotation(a, _scalar(conf["x"], "x"), b, _scalar(conf["y"], "y"))
    for _ in range(int(conf["renormalize"])):
        t = renormalize_lazy(t)
    viewport = (m0, m0 + w - 1, n0, n0 + h - 1)
    fmt = conf.get("format") or "svg"
    if fmt == "json":
        _emit(window_json(t, *viewport) + "\n", conf)
    elif fmt == "svg":
        _emit(render_svg(t, viewport, tile_px=int(conf["tile_px"])), conf)
    else:
        raise UsageError("tile render supports --format svg or json")
    return EXIT_OK


def cmd_measure(conf: dict[str, Any]) -> int:
    from .cocycle import cocycle_csv, ns_limit, accumulate

    a, b, meta = _params(conf)
    _check_open(a, b)
    depth = int(conf["depth"])
    if depth < 0:
        raise UsageError("--depth must be non-negative")
    _progress(f"accumulating cocycle to depth {depth}")
    run = accumulate(a, b, depth)
    lim = ns_limit(a, b, len(run) - 1) if len(run) >= 1 else None
    text = cocycle_csv(run)
    if meta.get("source") == "itinerary":
        rows = text.splitlines()
        rows[0] += ",alpha_width,beta_width"
        rows = [rows[0]] + [r + f",{meta['alpha_width']:.3e},{meta['beta_width']:.3e}" for r in rows[1:]]
        text = "\n".join(rows) + "\n"
    summary = dict(_header("measure", conf))
    summary.update(
        {
            "alpha": format_scalar(a) if len(format_scalar(a)) < 200 else "(long rational)",
            "beta": format_scalar(b) if len(format_scalar(b)) < 200 else "(long rational)",
            "depth": len(run) - 1,
            "boundary_hit": run.boundary,
            "final_nu": float(run[-1].nu),
            "nu": [float(st.nu) for st in run],
            "converged": lim.converged if lim else False,
            "certificate": lim.certificate if lim else {},
            "parameters": meta,
        }
    )
    fmt = conf.get("format") or "csv"
    if fmt == "csv":
        _emit(text, conf)
        if conf.get("summary"):
            with open(conf["summary"], "w") as fh:
                fh.write(_dumps(summary))
        else:
            _progress(json.dumps({k: summary[k] for k in ("depth", "final_nu", "converged", "boundary_hit")}))
    elif fmt == "json":
        summary["table"] = list(csv.DictReader(io.StringIO(text)))
        _emit(_dumps(summary), conf)
    else:
        raise UsageError("measure supports --format csv or json")
    return EXIT_OK


def cmd_mc_periodic(conf: dict[str, Any]) -> int:
    from .pet import periodic_measure_mc

    a, b, _ = _params(conf)
    samples = int(conf["samples"])
    if samples < 1:
        raise UsageError("--samples must be positive")
    _progress(f"sampling {samples} states with seed {conf['seed']}")
    rep = periodic_measure_mc(
        a, b, samples, max_period=int(conf["max_period"]), seed=int(conf["seed"]), workers=int(conf["workers"])
    )
    out = dict(_header("mc-periodic", conf))
    out.update(rep.to_json())
    out["expected_period4"] = float(4 * a * b)
    _emit(_dumps(out), conf)
    return EXIT_OK


# ---- verify suite ----------------------------------------------------------


def _check_renormalization(a, b, conf):
    from .pet import verify_renormalization

    rep = verify_renormalization(a, b, int(conf.get("verify_samples", 100)), seed=int(conf["seed"]))
    return {"passed": rep.ok, "samples": rep.samples, "redrawn": rep.redrawn, "counterexamples": rep.mismatches[:5]}


def _flipped_follow(t, site, v):
    m, n = site
    a, b = v
    s = -t.omega[m] * t.eta[n]
    return (m + s * b, n + s * a), (s * b, s * a)


def _check_return_time(a, b, conf):
    from .sequences import SeqWindow
    from .tiling import AssumptionViolation, Tiling, curve_follow, excision, in_kept_square

    follow = _flipped_follow if conf.get("inject_fault") == "flip-curve-sign" else curve_follow
    rng = random.Random(int(conf["seed"]))
    checked, failures = 0, []
    for _ in range(20):
        om = SeqWindow.explicit([rng.choice((1, -1)) for _ in range(200)], -100)
        et = SeqWindow.explicit([rng.choice((1, -1)) for _ in range(200)], -100)
        t = Tiling(om, et)
        for _ in range(50):
            m, n = rng.randrange(-60, 60), rng.randrange(-60, 60)
            if not in_kept_square(t, m, n):
                continue
            v = (1, 0) if rng.random() < 0.5 else (0, 1)
            v = v if rng.random() < 0.5 else (-v[0], -v[1])
            s = t.tau(m, n)
            w = (s * v[1], s * v[0])
            try:
                e = excision(t, (m, n), w, cap=80)
                site, cur = (m, n), v
                r = 0
                while True:
                    site, cur = follow(t, site, cur)
                    r += 1
                    if in_kept_square(t, *site) or r > 400:
                        break
            except (AssumptionViolation, IndexError):
                continue
            checked += 1
            if r != 2 * e - 1:
                failures.append({"site": [m, n], "v": list(v), "R": r, "E": e})
    return {"passed": not failures and checked > 0, "checked": checked, "counterexamples": failures[:5]}


def _check_collapse(a, b, conf):
    from .params import f_value
    from .pet import psi_map
    from .symbolic import code_rotation, collapse

    rng = random.Random(int(conf["seed"]) + 1)
    failures = []
    checked = 0
    for _ in range(200):
        u = Scalar(rng.randrange(1, 2**40), 2**40)
        x = a + (1 - 2 * a) * u
        lhs = collapse(code_rotation(a, x), -20, 20).values(-20, 20)
        rhs = code_rotation(f_value(a), psi_map(a, x)).values(-20, 20)
        checked += 1
        if lhs != rhs:
            failures.append({"alpha": format_scalar(a), "x": format_scalar(x)})
    return {"passed": not failures, "checked": checked, "counterexamples": failures[:5]}


def _check_scaling(a, b, conf):
    from .cocycle import scaling_check

    # cell centres of a g x g grid on (1/40, 19/40)^2
    g = int(conf["grid"])
    lo, width = Fraction(1, 40), Fraction(9, 20)
    fails = []
    for i in range(g):
        for j in range(g):
            x = Scalar(lo + width * Fraction(2 * i + 1, 2 * g))
            y = Scalar(lo + width * Fraction(2 * j + 1, 2 * g))
            res = scaling_check(x, y)
            if not res.holds:
                fails.append({"gamma": format_scalar(x), "delta": format_scalar(y), "margin": format_scalar(res.margin)})
    return {"passed": not fails, "checked": g * g, "counterexamples": fails[:5]}


CHECKS = {
    "renormalization": _check_renormalization,
    "return-time": _check_return_time,
    "collapse": _check_collapse,
    "scaling": _check_scaling,
}


def cmd_verify(conf: dict[str, Any]) -> int:
    a, b, _ = _params(conf)
    _check_open(a, b)
    prop = conf["property"]
    if prop != "all" and prop not in CHECKS:
        raise UsageError(f"unknown property {prop!r}; choose from all, {', '.join(CHECKS)}")
    names = list(CHECKS) if prop == "all" else [prop]
    results = {}
    for name in names:
        _progress(f"checking {name}")
        results[name] = CHECKS[name](a, b, conf)
    out = dict(_header("verify", conf))
    out.update({"alpha": format_scalar(a), "beta": format_scalar(b), "results": results})
    out["passed"] = all(r["passed"] for r in results.values())
    _emit(_dumps(out), conf)
    return EXIT_OK if out["passed"] else EXIT_FAIL


# ---- construction ------------------------------------------------------------


def construct_small_measure(eta: Any, stages: int = 4, k_cap: int = 1_000_000) -> dict[str, Any]:
    """Build the block itinerary, k-schedule and certificate for a given η."""
    sched = decay_schedule(eta, stages=stages, k_cap=k_cap)
    ui = understandable_itinerary(sched.k_schedule)
    return {
        "eta": str(sched.eta),
        "k_schedule": sched.k_schedule,
        "marks": list(ui.marks),
        "epsilons": [str(e) for e in sched.epsilons],
        "certificate": sched.certificate,
        "certified_product": str(sched.product),
        "certified_product_float": float(sched.product),
        "nu_NS_lower_bound": str(sched.limit_bound),
        "nu_NS_lower_bound_float": float(sched.limit_bound),
        "alpha": ui.alpha.to_json(),
        "beta": ui.beta.to_json(),
        "irrational": True,
    }


def cmd_construct_small_measure(conf: dict[str, Any]) -> int:
    eta = _scalar(conf["eta"], "eta")
    if not eta.is_rational or not (ZERO < eta < 1):
        raise UsageError("--eta must be a rational in (0, 1)")
    _progress(f"searching block lengths for eta={eta}")
    try:
        data = construct_small_measure(eta, stages=int(conf["stages"]), k_cap=int(conf["k_cap"]))
    except RuntimeError as exc:
        raise CapExceeded(str(exc)) from exc
    out = dict(_header("construct-small-measure", conf))
    out.update(data)
    _emit(_dumps(out), conf)
    return EXIT_OK


# ---- sweep -------------------------------------------------------------------------


def _sweep_cell(args):
    from .cocycle import accumulate
    from .pet import periodic_measure_mc

    i, j, a_t, b_t, depth, mc, seed = args
    a, b = parse_scalar(a_t), parse_scalar(b_t)
    run = accumulate(a, b, depth)
    row = [i, j, a_t, b_t, len(run) - 1, f"{float(run[-1].nu):.15g}", int(run.boundary)]
    if mc:
        rep = periodic_measure_mc(a, b, mc, max_period=4, seed=seed)
        row.append(f"{rep.fraction_period4:.15g}")
    return row


def cmd_sweep(conf: dict[str, Any]) -> int:
    g = int(conf["grid"])
    if g < 1:
        raise UsageError("--grid must be positive")
    depth = int(conf["depth"])
    mc = int(conf["mc_samples"])
    jobs = []
    for i in range(g):
        for j in range(g):
            a = Scalar(2 * i + 1, 4 * g)
            b = Scalar(2 * j + 1, 4 * g)
            jobs.append((i, j, format_scalar(a), format_scalar(b), depth, mc, int(conf["seed"]) + i * g + j))
    workers = int(conf["workers"])
    _progress(f"sweeping {len(jobs)} cells with {workers} workers")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_sweep_cell, jobs, chunksize=8))
    else:
        rows = [_sweep_cell(j) for j in jobs]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = ["i", "j", "alpha", "beta", "depth", "nu", "boundary"]
    if mc:
        head.append("mc_period4")
    w.writerow(head)
    w.writerows(rows)
    _emit(buf.getvalue(), conf)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rexmap", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"rexmap {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, params=True):
        sp.add_argument("--config", help="JSON config file (flags take precedence)")
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--format", choices=["csv", "json", "svg"])
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)
        if params:
            sp.add_argument("--alpha", help='scalar text, e.g. "1/5" or "(2-1*sqrt(2))/2"')
            sp.add_argument("--beta")
            sp.add_argument("--itinerary", help="JSON file with alpha/beta itineraries")

    tile = sub.add_parser("tile", help="tiling output")
    tsub = tile.add_subparsers(dest="tile_command", required=True)
    tr = tsub.add_parser("render", help="render a Truchet tiling")
    common(tr)
    tr.add_argument("--x")
    tr.add_argument("--y")
    tr.add_argument("--window", help="WxH")
    tr.add_argument("--origin", help="M,N lower-left site")
    tr.add_argument("--input", help="window JSON with omega, eta, base")
    tr.add_argument("--renormalize", type=int)
    tr.add_argument("--tile-px", dest="tile_px", type=int)
    tr.add_argument("--max-steps", dest="max_steps", type=int)
    tr.set_defaults(func=cmd_tile_render)

    me = sub.add_parser("measure", help="cocycle table of nu(O_k)")
    common(me)
    me.add_argument("--depth", type=int)
    me.add_argument("--summary", help="write the JSON summary here")
    me.set_defaults(func=cmd_measure)

    mc = sub.add_parser("mc-periodic", help="Monte Carlo census of periodic points")
    common(mc)
    mc.add_argument("--samples", type=int)
    mc.add_argument("--max-period", dest="max_period", type=int)
    mc.add_argument("--max-steps", dest="max_steps", type=int)
    mc.set_defaults(func=cmd_mc_periodic)

    ve = sub.add_parser("verify", help="property suite")
    common(ve)
    ve.add_argument("--property")
    ve.add_argument("--grid", type=int)
    ve.add_argument("--samples", dest="verify_samples", type=int)
    ve.add_argument("--inject-fault", dest="inject_fault", choices=["flip-curve-sign"])
    ve.set_defaults(func=cmd_verify)

    cs = sub.add_parser("construct-small-measure", help="parameters with large non-periodic measure")
    common(cs, params=False)
    cs.add_argument("--eta")
    cs.add_argument("--stages", type=int)
    cs.add_argument("--k-cap", dest="k_cap", type=int)
    cs.set_defaults(func=cmd_construct_small_measure)

    sw = sub.add_parser("sweep", help="grid of nu(O_k) values")
    common(sw, params=False)
    sw.add_argument("--grid", type=int)
    sw.add_argument("--depth", type=int)
    sw.add_argument("--mc-samples", dest="mc_samples", type=int)
    sw.set_defaults(func=cmd_sweep)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        conf = _resolve(ns)
        return ns.func(conf)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapExceeded as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except BoundaryReached as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
