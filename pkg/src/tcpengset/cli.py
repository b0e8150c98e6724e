"""Command-line entry point: ``tcpengset <subcommand> ...``."""
import argparse
import csv
import io
import json
import math
import os
import re
import sys

import numpy as np

from . import __version__
from ._validation import InvalidParameters
from .dist import make_distribution, sample
from .harness import (TABLES, SweepSpec, acceptance_hash, compare, model_for, run_sweep,
                      size_interval_stats)
from .model import buffer_rule, evaluate, reference_rules
from .netsim import run_scenario
from .netsim.scenario import ScenarioError, parse_capacity, parse_label, scenario_from_config

OUT_ENV = "TCPENGSET_OUT"


def parse_duration(text):
    """'1s', '250ms', '50us' or a bare number of seconds."""
    m = re.fullmatch(r"\s*(\d+(?:\.\d*)?(?:[eE][-+]?\d+)?)\s*(s|ms|us)?\s*", str(text))
    if not m:
        raise argparse.ArgumentTypeError(f"bad duration {text!r}")
    scale = {"s": 1.0, "ms": 1e-3, "us": 1e-6, None: 1.0}[m.group(2)]
    return float(m.group(1)) * scale


def _capacity(text):
    try:
        return parse_capacity(text)
    except ScenarioError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        o = float(o)
    if isinstance(o, float) and (math.isinf(o) or math.isnan(o)):
        return str(o)
    return o


def _emit(args, name, payload, rows=None):
    """Write a JSON object or CSV rows to --out/<name> or stdout."""
    fmt = args.format
    if fmt == "csv":
        rows = rows if rows is not None else [payload]
        buf = io.StringIO()
        keys = []
        for r in rows:
            for k in r:
                if k not in keys:
                    keys.append(k)
        w = csv.DictWriter(buf, fieldnames=keys)
        w.writeheader()
        for r in rows:
            w.writerow({k: json.dumps(_jsonable(v)) if isinstance(v, (list, dict)) else _jsonable(v)
                        for k, v in r.items()})
        text = buf.getvalue()
    else:
        text = json.dumps(_jsonable(payload if rows is None else rows), indent=2, sort_keys=True) + "\n"
    out = _out_dir(args)
    if out is None:
        sys.stdout.write(text)
        return None
    p = os.path.join(out, f"{name}.{fmt}")
    with open(p, "w") as fh:
        fh.write(text)
    print(p)
    return p


def _out_dir(args):
    out = args.out or os.environ.get(OUT_ENV)
    if not out:
        return None
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise InvalidParameters(f"cannot create output directory {out!r}: {exc}")
    if not os.access(out, os.W_OK):
        raise InvalidParameters(f"output directory {out!r} is not writable")
    return out


def _scenario(args, need_n=True):
    """Scenario from --config and/or a label, with flag overrides applied."""
    fields = {}
    labelled = False
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
        if "label" in cfg:
            fields.update(parse_label(cfg.pop("label")))
            labelled = True
        fields.update(cfg)
    if getattr(args, "label", None):
        labelled = True
        for k, v in parse_label(args.label).items():
            if k in fields and fields[k] != v:
                raise ScenarioError(f"label sets {k}={v!r} but the config says {fields[k]!r}")
            fields[k] = v
    for flag, key in (("c1", "C1"), ("c2", "C2"), ("c3", "C3"), ("packet", "P"), ("ack", "a"),
                      ("wr", "W_R"), ("buffer", "B"), ("size", "F"), ("off", "OFF"), ("n", "N"),
                      ("seed", "seed"), ("nc", "Nc")):
        v = getattr(args, flag, None)
        if v is not None:
            fields[key] = v
    if getattr(args, "rtt0", None) is not None:
        fields["RTT0"] = args.rtt0
        fields.pop("D", None)
    if getattr(args, "delay", None) is not None:
        fields["D"] = args.delay
        fields["RTT0"] = None
    if "D" in fields and fields.get("D") is not None:
        fields.setdefault("RTT0", None)
    if "dist" not in fields and labelled:
        fields["dist"] = None
    if not need_n:
        fields.setdefault("N", 1)
    if "N" not in fields:
        raise ScenarioError("no source count: put N<count> in the label or pass --n")
    return scenario_from_config(fields)


def _add_common(p):
    p.add_argument("--config", help="JSON scenario file (fields of Scenario or a 'label')")
    p.add_argument("--seed", type=int)
    p.add_argument("--nc", type=int, help="connections to complete")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV}, else stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--paper-scale", action="store_true", help="10^7 packets per run instead of 10^6")


def _add_path_flags(p):
    p.add_argument("label", nargs="?", help="run label such as 100M10M2M-R50-W44-F12-E-N134")
    p.add_argument("--c1", type=_capacity)
    p.add_argument("--c2", type=_capacity)
    p.add_argument("--c3", type=_capacity)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--rtt0", type=parse_duration, help="empty-path round trip")
    g.add_argument("--delay", type=parse_duration, help="round-trip propagation delay")
    p.add_argument("--packet", type=int, help="data packet size in bytes")
    p.add_argument("--ack", type=int, help="ack size in bytes")
    p.add_argument("--wr", type=int, help="receiver window in packets")
    p.add_argument("--size", type=float, help="mean file size in packets")
    p.add_argument("--off", type=parse_duration, help="mean OFF time")
    p.add_argument("--buffer", type=int, help="bottleneck buffer in packets")


def _packets(args):
    return 10**7 if args.paper_scale else 10**6


def cmd_model(args):
    sc = _scenario(args, need_n=args.rho0 is None)
    F = int(sc.F)
    N = None if args.rho0 is not None else sc.N
    res = evaluate(sc.path, sc.W_R, F, sc.OFF, N=N, rho0_target=args.rho0, B=sc.B, L_target=args.loss)
    rec = res.record()
    rec.update({"h_kbps": res.sol.h / 1000, "h0_kbps": res.sol.h0 / 1000, "ON_ms": 1000 * res.sol.ON,
                "ON0_ms": 1000 * res.sol.ON0, "RTT0_ms": 1000 * sc.path.RTT0,
                "L_pct": None if res.L is None else 100 * res.L})
    if args.format == "csv":
        rec["P_j"] = " ".join(f"{p:.6g}" for p in rec["P_j"])
        rec["flights"] = " ".join(str(f) for f in rec["flights"])
    _emit(args, "model", rec)
    return 0


def cmd_dist(args):
    kw = {"A": args.A, "H": args.H}
    if args.alpha is not None:
        kw["alpha"] = args.alpha
    if args.omega is not None:
        kw["omega"] = args.omega
    d = make_distribution(args.kind, args.mean, **kw)
    if args.action == "describe":
        rec = d.describe()
        rec["mean_above_H"] = d.mean_above_tail(args.H)
        _emit(args, "dist", rec)
    else:
        rng = np.random.default_rng(args.seed if args.seed is not None else 1)
        xs = [sample(d, 1.0 - u) for u in rng.random(args.count)]
        _emit(args, "samples", {"samples": xs}, rows=[{"size": x} for x in xs] if args.format == "csv" else None)
    return 0


def cmd_simulate(args):
    sc = _scenario(args)
    trace = [] if args.trace else None
    m = run_scenario(sc, max_time=args.max_time, packets=_packets(args), trace=trace)
    out = _out_dir(args)
    if out is None:
        summ = m.summary()
        summ["drop_analysis"] = m.drop_analysis()
        _emit(args, "summary", summ)
    else:
        for p in m.write(out, args.format).values():
            print(p)
    if trace is not None:
        with open(args.trace, "w") as fh:
            fh.write("t_ns conn kind seq W S theta\n")
            for rec in trace:
                fh.write(" ".join(str(v) for v in rec) + "\n")
    return 0


def cmd_compare(args):
    sc = _scenario(args)
    res = model_for(sc)
    m = None if args.model_only else run_scenario(sc, packets=_packets(args))
    rep = compare(res, m).to_dict()
    rep["scenario"] = sc.name()
    if m is None:
        rep["occupancy"] = [{"j": j, "model": float(p)} for j, p in enumerate(res.sol.probs)]
    if m is not None:
        rep["size_intervals"] = size_interval_stats(m)
        rep["drop_analysis"] = m.drop_analysis()
    _emit(args, "compare", rep)
    return 0


def cmd_sweep(args):
    sc = _scenario(args, need_n=args.axis not in ("rho0", "N"))
    conv = int if args.axis in ("N", "B", "W_R") else float
    values = [conv(v) for v in args.values.split(",") if v]
    spec = SweepSpec(sc, args.axis, values, replications=args.replications, packets=_packets(args),
                     simulate=not args.model_only, workers=args.workers)
    rows = run_sweep(spec)
    _emit(args, "sweep", rows, rows=rows)
    return 0


def cmd_buffer_rule(args):
    br = buffer_rule(args.capacity, OFF=args.off, W_R=args.wr, L_target=args.loss)
    rec = {"C": args.capacity, "raw": br.raw, "recommended": br.recommended, "F_at_max": br.F_at_max,
           "RTT0_at_max": br.RTT_at_max, **reference_rules(args.capacity), "rows": br.rows}
    if args.format == "csv":
        _emit(args, "buffer_rule", rec, rows=br.rows)
    else:
        _emit(args, "buffer_rule", rec)
    return 0


def cmd_tables(args):
    fn = TABLES[args.name]
    kw = {}
    if args.name in ("table6", "table10"):
        kw = {"simulate": args.simulate, "packets": _packets(args)}
        if args.seed is not None:
            kw["seed"] = args.seed
    elif args.name == "fig8":
        kw = {"simulate": args.simulate, "packets": _packets(args)}
    rows = fn(**kw)
    _emit(args, args.name, rows, rows=rows)
    return 0


def cmd_acceptance(args):
    from .acceptance import ANALYTIC, CHECKS, DETERMINISTIC, run_checks
    if args.only:
        keys = [k.strip() for k in args.only.split(",") if k.strip()]
        bad = [k for k in keys if k not in CHECKS]
        if bad:
            raise InvalidParameters(f"unknown criteria {bad}; known: {sorted(CHECKS, key=int)}")
    elif args.quick:
        keys = list(ANALYTIC + DETERMINISTIC)
    else:
        keys = None
    verdicts = run_checks(keys, packets=_packets(args))
    for v in verdicts:
        print(v.line(), file=sys.stderr)
    rows = [v.to_dict() for v in verdicts]
    summary = {"acceptance_hash": acceptance_hash(), "passed": sum(v.passed for v in verdicts),
               "failed": sum(not v.passed for v in verdicts), "criteria": rows}
    if args.format == "csv":
        _emit(args, "acceptance", summary, rows=[{k: r[k] for k in ("criterion", "title", "passed", "note")}
                                                 for r in rows])
    else:
        _emit(args, "acceptance", summary)
    return 0 if summary["failed"] == 0 else 1


def build_parser():
    ap = argparse.ArgumentParser(prog="tcpengset", description=__doc__)
    ap.add_argument("--version", action="store_true", help="print version and acceptance fingerprint")
    sub = ap.add_subparsers(dest="cmd")

    p = sub.add_parser("model", help="evaluate the analytical model")
    _add_path_flags(p)
    _add_common(p)
    p.add_argument("--n", type=int, help="number of sources")
    p.add_argument("--rho0", type=float, help="target open-loop load instead of N")
    p.add_argument("--loss", type=float, help="target loss for the buffer estimate")
    p.set_defaults(fn=cmd_model)

    p = sub.add_parser("dist", help="file-size laws")
    p.add_argument("action", choices=("describe", "sample"))
    p.add_argument("--kind", type=str.upper, choices=("E", "EP", "EE"), required=True)
    p.add_argument("--mean", type=float, required=True)
    p.add_argument("--A", type=float, default=3.0)
    p.add_argument("--H", type=float, default=0.1)
    p.add_argument("--alpha", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--count", type=int, default=10)
    _add_common(p)
    p.set_defaults(fn=cmd_dist)

    p = sub.add_parser("simulate", help="run the packet simulator")
    _add_path_flags(p)
    _add_common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--max-time", type=parse_duration)
    p.add_argument("--trace", help="write a per-event trace to this file")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("compare", help="model against simulation for one setting")
    _add_path_flags(p)
    _add_common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--model-only", action="store_true")
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("sweep", help="sweep one parameter")
    _add_path_flags(p)
    _add_common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--axis", default="rho0", choices=("rho0", "N", "B", "F", "W_R", "dist"))
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--replications", type=int, default=3)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--model-only", action="store_true")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("buffer-rule", help="buffer size from the model")
    p.add_argument("--capacity", type=_capacity, required=True)
    p.add_argument("--off", type=parse_duration, default=1.0)
    p.add_argument("--wr", type=int, default=44)
    p.add_argument("--loss", type=float, default=0.01)
    _add_common(p)
    p.set_defaults(fn=cmd_buffer_rule)

    p = sub.add_parser("tables", help="data behind the result tables")
    p.add_argument("name", choices=sorted(TABLES))
    p.add_argument("--simulate", action="store_true")
    _add_common(p)
    p.set_defaults(fn=cmd_tables)

    p = sub.add_parser("acceptance", help="evaluate the acceptance criteria (exit 1 if any fail)")
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.add_argument("--quick", action="store_true", help="analytical and deterministic criteria only")
    _add_common(p)
    p.set_defaults(fn=cmd_acceptance)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.version:
        print(json.dumps({"version": __version__, "acceptance_hash": acceptance_hash()}))
        return 0
    if not args.cmd:
        ap.print_help()
        return 2
    try:
        return args.fn(args)
    except (InvalidParameters, OSError, KeyError) as exc:
        print(f"tcpengset {args.cmd}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
