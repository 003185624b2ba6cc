"""Command line front end.

Subcommands: build, genhard, audit, curve, solve.  Reports are JSON with a
schema number and floats written at 17 significant digits; wall-clock
timings go to a sidecar ``.timing.json`` so reruns give identical reports.
Exit codes: 0 success, 1 usage or I/O error, 2 audit failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import disc, hardgen, verify
from .core import CenterSet, WeightedPointSet, cost, read_points_csv, relative_error, write_points_csv
from .datasets import GENERATORS, dataset_1d
from .oned import Sorted1D, baseline_coreset, coreset_1d_1median_detailed, exact_kmedian_1d

SCHEMA = 1
EXIT_OK, EXIT_USAGE, EXIT_AUDIT = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


# -- JSON ----------------------------------------------------------------------------


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(x, ".17g")
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with floats at 17 significant digits and sorted keys."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_report(path: Path | None, report: dict, timing: dict | None = None) -> None:
    report = {"schema": SCHEMA, **report}
    text = to_json(report) + "\n"
    if path is None:
        sys.stdout.write(text)
        return
    path.write_text(text, encoding="utf-8")
    if timing is not None:
        path.with_suffix(".timing.json").write_text(to_json(timing) + "\n", encoding="utf-8")


# -- input ------------------------------------------------------------------------------


def _load(args) -> tuple[WeightedPointSet, dict]:
    if args.input and args.generate:
        raise UsageError("give either --input or --generate, not both")
    if args.input:
        return read_points_csv(args.input), {"input": str(args.input)}
    if args.generate:
        return dataset_1d(args.generate, args.n, args.seed), {"generate": args.generate, "n": args.n}
    raise UsageError("an input file (--input) or generator (--generate) is required")


def _check_eps(eps: float) -> None:
    if not 0 < eps < 1:
        raise UsageError("--eps must lie in (0, 1)")


def _construct(P: WeightedPointSet, algo: str, eps: float, k: int, z: float, seed: int):
    """Coreset plus construction details for one algorithm."""
    if algo == "alg1":
        if P.dim != 1:
            raise UsageError("alg1 needs 1-d input")
        res = coreset_1d_1median_detailed(Sorted1D.from_points(P), eps)
        return res.coreset, {"eps_internal": res.eps_internal, "opt": res.opt, "blocks": len(res.blocks)}
    if algo == "baseline":
        if P.dim != 1:
            raise UsageError("baseline needs 1-d input")
        s1 = Sorted1D.from_points(P)
        opt, _ = exact_kmedian_1d(s1, k)
        return baseline_coreset(s1, k, eps, opt=opt), {"opt": opt}
    if algo == "mixed":
        mc = disc.mixed_coreset(P, eps, z, seed=seed, check=False)
        return mc.subset, {"rounds": mc.rounds, "target": mc.target,
                           "rounds_log": [r.to_json() for r in mc.log]}
    raise UsageError(f"unknown algorithm {algo!r}")


def _audit(P, S, k: int, z: float, method: str, seed: int, budget: int, initial=None) -> verify.AuditReport:
    if method == "exact":
        if P.dim != 1 or z != 1:
            raise UsageError("exact audits need 1-d data and z = 1")
        if k == 1:
            return verify.audit_1d_1median(P, S)
        if k == 2:
            if len(P) + len(S) > verify.DEFAULT_ARRANGEMENT_CAP:
                rep = verify.audit_stochastic(P, S, k, z, budget, seed, initial)
                rep.extra["fallback"] = "arrangement cap exceeded; stochastic lower bound"
                return rep
            return verify.audit_1d_2median(P, S)
        raise UsageError("exact audits support k = 1 or k = 2 only")
    if method == "stochastic":
        return verify.audit_stochastic(P, S, k, z, budget, seed, initial)
    raise UsageError(f"unknown audit method {method!r}")


# -- commands ----------------------------------------------------------------------------


def cmd_build(args) -> int:
    _check_eps(args.eps)
    P, source = _load(args)
    t0 = time.perf_counter()
    S, details = _construct(P, args.algo, args.eps, args.k, args.z, args.seed)
    t_build = time.perf_counter() - t0
    report = {"command": "build", "algo": args.algo, "eps": args.eps, "k": args.k, "z": args.z,
              "seed": args.seed, "n": len(P), "source": source, "coreset_size": len(S), "details": details}
    failed = False
    t1 = time.perf_counter()
    if args.algo == "mixed":
        chk = verify.check_mixed_coreset(P, S, args.eps, args.z, samples=args.samples, seed=args.seed)
        report["audit"] = {"method": "mixed-check", **chk.to_json()}
        failed = chk.worst_ratio > 1
    elif args.audit != "none":
        rep = _audit(P, S, args.k, args.z, args.audit, args.seed, args.budget)
        report["audit"] = rep.to_json()
        failed = rep.method != "stochastic" and rep.max_rel_error > args.eps
    t_audit = time.perf_counter() - t1
    if args.output:
        write_points_csv(args.output, S)
        out = Path(args.report) if args.report else Path(args.output).with_suffix(".json")
    else:
        out = Path(args.report) if args.report else None
    write_report(out, report, {"build_seconds": t_build, "audit_seconds": t_audit})
    return EXIT_AUDIT if failed else EXIT_OK


def cmd_genhard(args) -> int:
    v = args.variant
    extra_files = {}
    if v == "interval":
        if args.eps is None:
            raise UsageError("--eps is required for the interval variant")
        inst = hardgen.gen_interval_instance(args.eps, args.m0)
        P = inst.points
        if args.copies:
            P = hardgen.gen_k_copies(inst, args.copies)
        cert = hardgen.interval_certificate(inst)
        if args.copies:
            cert["params"]["copies_k"] = args.copies
            cert["params"]["copy_offset"] = hardgen.default_copy_offset(inst)
    elif v in ("subspace-main", "subspace-appendix"):
        inst = hardgen.gen_subspace_instance(args.k, args.d, v.split("-")[1], args.z)
        P = inst.points
        cert = hardgen.subspace_certificate(inst)
        if "adversarial" in cert["expected_gaps"] and args.output:
            demo = Path(args.output).with_suffix(".keep80.csv")
            write_points_csv(demo, hardgen.keep_fraction_coreset(inst, 0.8))
            cert["expected_gaps"]["adversarial"]["coreset_file"] = demo.name
            extra_files["coreset"] = str(demo)
    else:
        raise UsageError(f"unknown variant {v!r}")
    summary = {"command": "genhard", "variant": v, "points": len(P), "certificate": cert}
    if args.output:
        write_points_csv(args.output, P)
        cpath = Path(args.output).with_suffix(".cert.json")
        write_report(cpath, cert)
        summary["files"] = {"points": str(args.output), "certificate": str(cpath), **extra_files}
    write_report(Path(args.report) if args.report else None, summary)
    return EXIT_OK


def _replay(P, S, cert: dict) -> tuple[dict, list]:
    z = float(cert.get("params", {}).get("z", 2.0))
    out, seeds = {}, []
    for name, rows in cert.get("queries", {}).items():
        C = CenterSet(np.asarray(rows, dtype=float))
        seeds.append(C)
        cP, cS = cost(P, C, z), cost(S, C, z)
        entry = {"cost_P": cP, "cost_S": cS, "gap": cP - cS, "rel_error": relative_error(cP, cS)}
        exp_cost = cert.get("expected_costs", {}).get(name)
        if exp_cost is not None:
            entry["expected_cost"] = exp_cost
            entry["cost_ok"] = abs(cP - exp_cost) <= hardgen.IDENTITY_RTOL * max(1.0, abs(exp_cost))
        exp_gap = cert.get("expected_gaps", {}).get(name)
        if exp_gap is not None:
            entry["expected_gap"] = exp_gap["gap"]
            entry["gap_ok"] = abs(entry["gap"] - exp_gap["gap"]) <= hardgen.IDENTITY_RTOL * max(1.0, abs(cP))
        out[name] = entry
    return out, seeds


def cmd_audit(args) -> int:
    P = read_points_csv(args.input)
    S = read_points_csv(args.coreset)
    if P.dim != S.dim:
        raise UsageError("data and coreset dimensions differ")
    report = {"command": "audit", "k": args.k, "z": args.z, "seed": args.seed,
              "n": len(P), "coreset_size": len(S)}
    seeds = None
    failed = False
    z = args.z
    if args.certificate:
        cert = json.loads(Path(args.certificate).read_text(encoding="utf-8"))
        replay, seeds = _replay(P, S, cert)
        report["certificate"] = replay
        z = float(cert.get("params", {}).get("z", z))
        report["z"] = z
        failed = not all(e.get("cost_ok", True) and e.get("gap_ok", True) for e in replay.values())
    k = seeds[0].k if seeds else args.k
    seeds = seeds or None
    report["k"] = k
    if args.fixed0:
        if args.method != "exact":
            raise UsageError("--fixed0 is an exact audit")
        k = report["k"] = 2
        rep = verify.audit_1d_2median_fixed0(P, S)
    else:
        rep = _audit(P, S, k, z, args.method, args.seed, args.budget, seeds)
    report["audit"] = rep.to_json()
    if args.grid:
        if P.dim != 1:
            raise UsageError("grid cross-check needs 1-d data")
        report["grid_check"] = _grid_check(P, S, k, args.fixed0, args.grid, rep.max_rel_error)
        failed = failed or not report["grid_check"]["exact_dominates"]
    if args.eps is not None and rep.max_rel_error > args.eps:
        failed = True
    write_report(Path(args.report) if args.report else None, report)
    return EXIT_AUDIT if failed else EXIT_OK


def _grid_check(P, S, k: int, fixed0: bool, size: int, exact: float) -> dict:
    sp, ss = Sorted1D.from_points(P), Sorted1D.from_points(S)
    lo = min(sp.coords[0], ss.coords[0]) if len(S) else sp.coords[0]
    hi = max(sp.coords[-1], ss.coords[-1]) if len(S) else sp.coords[-1]
    if fixed0:
        lo, hi = min(lo, 2 * lo, 0.0), max(hi, 2 * hi, 0.0)
    g = np.linspace(lo, hi, size)
    if fixed0:
        fp, fs = sp.cost_two(np.zeros_like(g), g), ss.cost_two(np.zeros_like(g), g)
    elif k == 1:
        fp, fs = sp.cost_one(g), ss.cost_one(g)
    elif k == 2:
        a, b = np.meshgrid(g[:: max(1, size // 1000)], g[:: max(1, size // 1000)])
        a, b = a.ravel(), b.ravel()
        fp, fs = sp.cost_two(a, b), ss.cost_two(a, b)
    else:
        raise UsageError("grid cross-check supports k = 1 or k = 2")
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(fp > 0, np.abs(fp - fs) / fp, 0.0)
    gmax = float(r.max())
    return {"grid_points": int(fp.size), "grid_max": gmax,
            "exact_dominates": bool(exact >= gmax * (1 - 1e-9) - 1e-15)}


def cmd_curve(args) -> int:
    P, source = _load(args)
    eps_list = [float(e) for e in args.eps] if args.eps else []
    for e in eps_list:
        _check_eps(e)
    rows = ["eps,size,max_rel_error,runtime"]
    s1 = Sorted1D.from_points(P)
    opt = None
    if args.algo == "baseline":
        opt, _ = exact_kmedian_1d(s1, args.k)
    for e in eps_list:
        t0 = time.perf_counter()
        if args.algo == "alg1":
            S = coreset_1d_1median_detailed(s1, e).coreset
        elif args.algo == "baseline":
            S = baseline_coreset(s1, args.k, e, opt=opt)
        else:
            raise UsageError("curve supports alg1 and baseline")
        runtime = time.perf_counter() - t0
        err = float("nan")
        if args.audit != "none":
            err = _audit(P, S, args.k if args.algo == "baseline" else 1, 1.0, args.audit,
                         args.seed, args.budget).max_rel_error
        rows.append(f"{e!r},{len(S)},{format(err, '.17g')},{runtime:.6f}")
    text = "\n".join(rows) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_solve(args) -> int:
    P = read_points_csv(args.input)
    if P.dim != 1:
        raise UsageError("solve needs 1-d input")
    if args.k < 1:
        raise UsageError("--k must be positive")
    opt, C = exact_kmedian_1d(Sorted1D.from_points(P), args.k)
    report = {"command": "solve", "k": args.k, "n": len(P), "opt": opt,
              "centers": C.centers.ravel().tolist()}
    write_report(Path(args.report) if args.report else None, report)
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lowdim-coreset", description="Coresets for low-dimensional k-median.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def data_opts(sp):
        sp.add_argument("--input", help="point CSV (header x0..x{d-1}[,w])")
        sp.add_argument("--generate", choices=sorted(GENERATORS), help="seeded 1-d generator instead of --input")
        sp.add_argument("--n", type=int, default=100_000, help="points for --generate")
        sp.add_argument("--seed", type=int, default=0)

    b = sub.add_parser("build", help="construct a coreset and audit it")
    data_opts(b)
    b.add_argument("--algo", choices=["alg1", "baseline", "mixed"], default="alg1")
    b.add_argument("--eps", type=float, required=True)
    b.add_argument("--k", type=int, default=1)
    b.add_argument("--z", type=float, default=1.0)
    b.add_argument("--audit", choices=["exact", "stochastic", "none"], default="exact")
    b.add_argument("--budget", type=int, default=2000, help="evaluations for stochastic audits")
    b.add_argument("--samples", type=int, default=10_000, help="centers for the mixed check")
    b.add_argument("--output", help="coreset CSV; the report goes next to it")
    b.add_argument("--report", help="report path (default: stdout or next to --output)")
    b.set_defaults(func=cmd_build)

    g = sub.add_parser("genhard", help="generate a hard instance and its certificate")
    g.add_argument("--variant", choices=["interval", "subspace-main", "subspace-appendix"], required=True)
    g.add_argument("--eps", type=float)
    g.add_argument("--m0", type=int, default=64, help="points per interval")
    g.add_argument("--copies", type=int, default=0, help="even k: emit k/2 shifted copies of the interval instance")
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--d", type=int, default=2)
    g.add_argument("--z", type=float, default=2.0)
    g.add_argument("--output", help="instance CSV; certificate written alongside")
    g.add_argument("--report")
    g.set_defaults(func=cmd_genhard)

    a = sub.add_parser("audit", help="measure the relative error of a coreset")
    a.add_argument("--input", required=True)
    a.add_argument("--coreset", required=True)
    a.add_argument("--method", choices=["exact", "stochastic"], default="exact")
    a.add_argument("--fixed0", action="store_true", help="exact audit of cost(., {0, c})")
    a.add_argument("--k", type=int, default=1)
    a.add_argument("--z", type=float, default=1.0)
    a.add_argument("--eps", type=float, help="fail with exit code 2 above this error")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--budget", type=int, default=2000)
    a.add_argument("--certificate", help="replay the queries of a genhard certificate")
    a.add_argument("--grid", type=int, default=0, help="also scan a grid of this size and compare")
    a.add_argument("--report")
    a.set_defaults(func=cmd_audit)

    c = sub.add_parser("curve", help="coreset size and error over a list of eps")
    data_opts(c)
    c.add_argument("--algo", choices=["alg1", "baseline"], default="alg1")
    c.add_argument("--eps", type=float, nargs="*", default=[])
    c.add_argument("--k", type=int, default=1)
    c.add_argument("--audit", choices=["exact", "stochastic", "none"], default="exact")
    c.add_argument("--budget", type=int, default=2000)
    c.add_argument("--output")
    c.set_defaults(func=cmd_curve)

    s = sub.add_parser("solve", help="exact 1-d k-median")
    s.add_argument("--input", required=True)
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--report")
    s.set_defaults(func=cmd_solve)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE
    except (UsageError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
