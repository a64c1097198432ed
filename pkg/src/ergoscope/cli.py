"""Command-line surface.

Every subcommand is a thin shell over the library and emits schema-stable
JSON (default) or CSV; ``--figures`` additionally renders matplotlib figures
next to the delimited output.  Exit codes: 0 completed (verdicts live in the
output), 1 usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import plots, zoo
from .chain import geometric_prefixes
from .classify import classify
from .errors import ErgoscopeError, ModelError
from .moments import default_schedule, exp_moment_scan, moment_ladder
from .simulate import estimate_moments
from .single_birth import (build_tableau, catastrophe_recurrence,
                           ergodicity_explicit, recurrence_explicit,
                           strong_explicit)
from .witness import (WitnessSequence, gen_nonergodic_witness,
                      gen_nonexp_witness, gen_nonstrong_witness,
                      verify_witness)

SCHEMA = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _parse_schedule(text: str) -> list[int]:
    if text.startswith("pow2:"):
        lo, hi = text[5:].split("..")
        return [2**k for k in range(int(lo), int(hi) + 1)]
    if text.startswith("list:"):
        text = text[5:]
    return [int(v) for v in text.split(",")]


def _parse_H(text: str) -> tuple[int, ...]:
    return tuple(sorted({int(v) for v in text.split(",")}))


def _load_json_arg(text: str):
    if text.startswith("@"):
        with open(text[1:], encoding="utf-8") as fh:
            return json.load(fh)
    return json.loads(text)


_PARAM_FLAGS = ("gamma", "family", "sites", "lam1", "lam2", "lam3", "lam4")


def _add_common(p: argparse.ArgumentParser, model: bool = True):
    if model:
        p.add_argument("--model", help="builtin name or @model-spec.json")
        p.add_argument("--params", help="JSON dict (inline or @file)")
        p.add_argument("--gamma", type=float)
        p.add_argument("--family")
        p.add_argument("--sites", type=int)
        for k in ("lam1", "lam2", "lam3", "lam4"):
            p.add_argument(f"--{k}", type=float)
        p.add_argument("--capacity", type=int, default=4096,
                       help="state enumeration cap for multi-dimensional models")
    p.add_argument("--H", default="0", help="target set, comma list")
    p.add_argument("--schedule", help='e.g. "pow2:4..17" or "16,32,64"')
    p.add_argument("--L", type=int, default=1, help="max polynomial order")
    p.add_argument("--lambda-grid", dest="lambda_grid",
                   help='"halving:N" (default halving:20) or a comma list')
    p.add_argument("--tol", type=float, default=1e-9,
                   help="verification tolerance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--figures", action="store_true",
                   help="render PNG figures next to the output")


def _resolve_model(args):
    if not args.model:
        raise ModelError("--model is required")
    if args.model.startswith("@"):
        cfg = _load_json_arg(args.model)
        zm = zoo.from_config(cfg)
    else:
        params = {}
        if args.params:
            params.update(_load_json_arg(args.params))
        for k in _PARAM_FLAGS:
            v = getattr(args, k, None)
            if v is not None:
                params[k] = v
        zm = zoo.from_config({"builtin": args.model, "params": params})
    enum = None
    if zm.spec is None:
        spec, enum = zm.indexed_spec(args.capacity)
    else:
        spec = zm.spec
    return zm, spec, enum


def _schedule_for(args, enum) -> list[int]:
    if enum is not None:
        return geometric_prefixes(enum.prefix_sizes())
    if args.schedule:
        return _parse_schedule(args.schedule)
    return default_schedule()


def _emit(args, payload: dict, csv_rows=None, csv_header=None,
          renderer=None) -> None:
    if args.format == "csv":
        if csv_rows is None:
            raise ModelError("this subcommand has no CSV form")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if csv_header:
            w.writerow(csv_header)
        w.writerows(csv_rows)
        text = buf.getvalue()
    else:
        text = json.dumps(payload, indent=1) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.figures and renderer is not None:
        stem = str(Path(args.out).with_suffix("")) if args.out else args.command
        for path in renderer(payload, stem):
            sys.stderr.write(f"figure: {path}\n")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_classify(args) -> int:
    zm, spec, enum = _resolve_model(args)
    schedule = _schedule_for(args, enum)
    grid_size = 20
    grid = None
    if args.lambda_grid:
        if args.lambda_grid.startswith("halving:"):
            grid_size = int(args.lambda_grid.split(":")[1])
        else:
            grid = [float(v) for v in args.lambda_grid.split(",")]
    report = classify(spec, H=_parse_H(args.H), L=args.L, schedule=schedule,
                      lambda_grid_size=grid_size,
                      single_birth=zm.single_birth,
                      sb_depth=schedule[-1])
    if grid is not None:
        report.consistency_messages.append(
            "explicit lambda grids apply to the expmoment subcommand")
    payload = report.to_dict()
    payload["params"] = zm.params
    if enum is not None:
        payload["enumeration"] = {"states": len(enum.states),
                                  "levels_closed": enum.levels_closed,
                                  "grade": "evidence (truncated enumeration)"}
    rows = []
    for tier, block in payload["tiers"].items():
        for lvl, val in zip(block["levels"], block["values"]):
            rows.append((tier, lvl, val))
    for lam, v in zip(payload["scan"].get("lambdas", []),
                      payload["scan"].get("verdicts", [])):
        rows.append(("exponential_scan", lam, v))
    _emit(args, payload, rows, ("tier", "level", "value"),
          plots.render_classify)
    return 0


def _cmd_moments(args) -> int:
    zm, spec, enum = _resolve_model(args)
    N = args.N if args.N else (
        geometric_prefixes(enum.prefix_sizes())[-1] if enum else 1024)
    H = _parse_H(args.H)
    tables = moment_ladder(spec, H, max(args.L, 1), N)
    payload = {
        "schema": SCHEMA, "model": spec.name, "params": zm.params,
        "H": list(H), "N": N,
        "tables": [{
            "order": t.order,
            "h_values": {str(h): v for h, v in t.h_values.items()},
            "interior_max": (t.interior_max
                             if np.isfinite(t.interior_max) else "inf"),
            "diverged": t.diverged,
            "values_preview": t.values[:32].tolist(),
        } for t in tables],
    }
    rows = []
    for t in tables:
        for h, v in t.h_values.items():
            rows.append((t.order, f"target_{h}", v))
        if args.full:
            for s, v in zip(t.unknown_states, t.values):
                rows.append((t.order, int(s), v))
        rows.append((t.order, "interior_max", t.interior_max))
    _emit(args, payload, rows, ("order", "state", "value"),
          plots.render_moments)
    return 0


def _cmd_expmoment(args) -> int:
    zm, spec, enum = _resolve_model(args)
    schedule = _schedule_for(args, enum)
    grid = None
    grid_size = 20
    if args.lambda_grid:
        if args.lambda_grid.startswith("halving:"):
            grid_size = int(args.lambda_grid.split(":")[1])
        else:
            grid = [float(v) for v in args.lambda_grid.split(",")]
    curve = exp_moment_scan(spec, _parse_H(args.H), schedule,
                            grid=grid, grid_size=grid_size)
    payload = {
        "schema": SCHEMA, "model": spec.name, "params": zm.params,
        "lambda_prime": curve.lam_prime,
        "lambda_prime_certified": curve.certified,
        "lambdas": [float(l) for l in curve.lambdas],
        "sweeps": [{
            "levels": sw.levels,
            "values": [v if np.isfinite(v) else "inf"
                       for v in sw.h_series().tolist()],
            "verdict": verdict.state,
        } for sw, verdict in zip(curve.sweeps, curve.verdicts)],
        "limit_gap": [g if np.isfinite(g) else "inf" for g in curve.limit_gap],
    }
    rows = []
    for lam, block in zip(payload["lambdas"], payload["sweeps"]):
        for lvl, val in zip(block["levels"], block["values"]):
            rows.append((lam, lvl, val))
    _emit(args, payload, rows, ("lambda", "level", "value"),
          plots.render_expmoment)
    return 0


def _cmd_sbp(args) -> int:
    zm, spec, enum = _resolve_model(args)
    if zm.single_birth is None:
        raise ModelError(f"model {zm.name!r} has no single-birth structure")
    K = args.K
    tab = build_tableau(zm.single_birth, K,
                        cross_check="auto" if args.cross_check else "off")
    erg = ergodicity_explicit(tab)
    rec = recurrence_explicit(tab)
    payload = {
        "schema": SCHEMA, "model": spec.name, "params": zm.params, "K": K,
        "recurrence": _explicit_dict(rec),
        "ergodicity": _explicit_dict(erg),
        "cross_check": tab.cross_check,
    }
    if erg.verdict.converged:
        st = strong_explicit(tab)
        payload["strong"] = _explicit_dict(st)
        payload["strong"]["sensitivity"] = st.sensitivity
    else:
        payload["strong"] = {"verdict": "inconclusive",
                             "notes": ["needs a converged ergodicity "
                                       "estimate first"]}
    if zm.name == "catastrophe":
        cr = catastrophe_recurrence(zm.alpha_vec, min(K, 1 << 20))
        payload["alpha_series"] = _explicit_dict(cr)
    rows = [(int(k), tab.hom[k], tab.par[k], tab.ratio_sup[k])
            for k in erg.windows]
    _emit(args, payload, rows, ("row", "hom", "par", "ratio_sup"),
          plots.render_sbp)
    return 0


def _explicit_dict(v) -> dict:
    return {
        "statistic": v.statistic,
        "verdict": v.verdict.state,
        "estimate": v.verdict.estimate,
        "descriptor": v.verdict.descriptor,
        "windows": [int(k) for k in v.windows],
        "values": [float(x) if np.isfinite(x) else "inf" for x in v.values],
        "notes": list(v.notes),
    }


def _cmd_witness_gen(args) -> int:
    zm, spec, enum = _resolve_model(args)
    H = _parse_H(args.H)
    schedule = _schedule_for(args, enum)
    if args.kind == "non_ergodic":
        w = gen_nonergodic_witness(spec, H, count=args.count,
                                   schedule=schedule)
    elif args.kind == "non_strong":
        w = gen_nonstrong_witness(spec, H, count=args.count,
                                  schedule=schedule)
    elif args.kind == "non_exponential":
        w = gen_nonexp_witness(spec, H, count=args.count or 20,
                               single_birth=zm.single_birth,
                               max_level=args.budget)
    else:
        raise ModelError(f"cannot generate witnesses of kind {args.kind!r}")
    payload = w.to_dict()
    payload["schema"] = SCHEMA
    payload["evidence"] = _jsonable(w.evidence)
    _emit(args, payload, None, None, None)
    return 0


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else "inf"
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _cmd_witness_check(args) -> int:
    zm, spec, enum = _resolve_model(args)
    w = WitnessSequence.from_dict(_load_json_arg(args.witness))
    H = _parse_H(args.H) if args.H != "0" or not w.H else w.H
    source = None
    if w.kind == "non_algebraic":
        order = w.order or 1
        max_state = max((t.max_state for t in w.terms), default=0)
        tables = moment_ladder(spec, H, order, max_state + 2)
        source = tables[-1].dense()
    rep = verify_witness(spec, H, w, tol=args.tol,
                         moment_source=source,
                         single_birth=zm.single_birth)
    payload = rep.to_dict()
    payload["schema"] = SCHEMA
    rows = [(k, e["max_violation"], e["statistic"], e.get("lambda", ""))
            for k, e in enumerate(payload["per_term"])]
    _emit(args, payload, rows, ("term", "max_violation", "statistic", "lambda"),
          plots.render_witness)
    return 0


def _cmd_simulate(args) -> int:
    zm, spec, enum = _resolve_model(args)
    ell = [int(v) for v in args.ell.split(",")] if args.ell else [1]
    lams = [float(v) for v in args.lambdas.split(",")] if args.lambdas else []
    res = estimate_moments(spec, _parse_H(args.H), args.start, ell, lams,
                           args.n, args.seed, capacity=args.capacity,
                           max_jumps=args.max_jumps)
    payload = {
        "schema": SCHEMA, "model": spec.name, "params": zm.params,
        "start": args.start, "n_samples": args.n, "seed": args.seed,
        "censored": res.censored_count,
        "estimates": [e.to_dict() for e in res.estimates],
        "sample_preview": res.samples[:512].tolist(),
    }
    rows = [(e.kind, e.param, e.mean, e.se, e.n, e.censored,
             ";".join(e.flags)) for e in res.estimates]
    _emit(args, payload, rows,
          ("kind", "param", "mean", "se", "n", "censored", "flags"),
          plots.render_simulate)
    return 0


def _cmd_zoo_list(args) -> int:
    payload = {"schema": SCHEMA, "models": zoo.zoo_list()}
    rows = [(m["name"], json.dumps(m["params"]), m["classes"])
            for m in payload["models"]]
    _emit(args, payload, rows, ("name", "params", "classes"), None)
    return 0


_LEVEL_CHECKS = {
    "brussel_log_level": ("brussel", "log_level"),
    "brussel_increment": ("brussel", "increment"),
    "multi_gamma_power_tail": ("multi_gamma", "power_tail"),
    "multi_gamma_loglog": ("multi_gamma", "loglog"),
    "multi_gamma_harmonic": ("multi_gamma", "harmonic"),
}


def _cmd_levels(args) -> int:
    if args.check not in _LEVEL_CHECKS:
        raise ModelError(f"unknown level check {args.check!r}")
    model, family = _LEVEL_CHECKS[args.check]
    if model == "brussel":
        rep = zoo.brussel_level_inequality_check(
            family, n_max=args.n_max, i_max=args.i_max,
            lam1=args.lam1 or 1.0, lam4=args.lam4 or 1.0,
            a_total=args.a_total)
    else:
        rep = zoo.multi_gamma_level_check(
            args.gamma if args.gamma is not None else
            (1.0 if family == "harmonic" else 2.0),
            family, n_max=args.n_max, i_max=args.i_max)
    payload = rep.to_dict()
    payload["schema"] = SCHEMA
    rows = [(k + 1, v) for k, v in enumerate(payload["statistic"])]
    _emit(args, payload, rows, ("window", "statistic"), plots.render_levels)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    p = _Parser(prog="ergoscope",
                description="ergodicity-hierarchy classification for "
                            "countable-state Markov chains")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", parents=[], help="full hierarchy report")
    _add_common(c)
    c.set_defaults(func=_cmd_classify)

    m = sub.add_parser("moments", help="polynomial moment ladder at one level")
    _add_common(m)
    m.add_argument("--N", type=int, help="truncation level")
    m.add_argument("--full", action="store_true",
                   help="include all interior values in CSV output")
    m.set_defaults(func=_cmd_moments)

    e = sub.add_parser("expmoment", help="exponential moment scan")
    _add_common(e)
    e.set_defaults(func=_cmd_expmoment)

    s = sub.add_parser("sbp", help="single-birth explicit criteria")
    _add_common(s)
    s.add_argument("--K", type=int, default=1 << 17, help="tableau rows")
    s.add_argument("--cross-check", action="store_true", dest="cross_check",
                   help="run the dual-form tableau check (capped rows)")
    s.set_defaults(func=_cmd_sbp)

    w = sub.add_parser("witness", help="witness sequences")
    wsub = w.add_subparsers(dest="witness_command", required=True)
    wg = wsub.add_parser("gen", help="generate a witness sequence")
    _add_common(wg)
    wg.add_argument("--kind", required=True,
                    choices=("non_ergodic", "non_strong", "non_exponential"))
    wg.add_argument("--count", type=int)
    wg.add_argument("--budget", type=int, default=1 << 20,
                    help="truncation budget for the exponential search")
    wg.set_defaults(func=_cmd_witness_gen)
    wc = wsub.add_parser("check", help="verify a witness file")
    _add_common(wc)
    wc.add_argument("--witness", required=True, help="witness JSON (@file)")
    wc.set_defaults(func=_cmd_witness_check)

    si = sub.add_parser("simulate", help="Monte Carlo return-time moments")
    _add_common(si)
    si.add_argument("--start", type=int, default=0)
    si.add_argument("--n", type=int, default=100_000, help="sample count")
    si.add_argument("--ell", default="1", help="moment orders, comma list")
    si.add_argument("--lambdas", help="exponential rates, comma list")
    si.add_argument("--max-jumps", type=int, default=10_000_000,
                    dest="max_jumps")
    si.set_defaults(func=_cmd_simulate, capacity=1_000_000)

    z = sub.add_parser("zoo", help="model catalog")
    zsub = z.add_subparsers(dest="zoo_command", required=True)
    zl = zsub.add_parser("list", help="list builtin models")
    _add_common(zl, model=False)
    zl.set_defaults(func=_cmd_zoo_list)

    lv = sub.add_parser("levels", help="level-reduction inequality checks")
    _add_common(lv, model=False)
    lv.add_argument("--check", required=True, choices=sorted(_LEVEL_CHECKS))
    lv.add_argument("--gamma", type=float)
    lv.add_argument("--n-max", type=int, default=1000, dest="n_max")
    lv.add_argument("--i-max", type=int, default=10_000, dest="i_max")
    lv.add_argument("--lam1", type=float)
    lv.add_argument("--lam4", type=float)
    lv.add_argument("--a-total", type=float, default=1.0, dest="a_total")
    lv.set_defaults(func=_cmd_levels)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    except (ModelError, ValueError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except ErgoscopeError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
