"""Command-line front end: gen, root, certify-sdp, oracle, bench.

Exit codes: 0 success, 1 I/O or input-format failure, 2 usage error.
``BILICOVER_SEED`` in the environment overrides the master seed.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

from .bench import STANDARD_SETTINGS, BenchPlan, run_bench, write_bench
from .lift import format_cut
from .model import InstanceFormatError, SignMode, format_instance, generate_instance, read_instance
from .oracle import solve_global
from .relax import write_lp
from .rootloop import LoopConfig, compute_metrics, report_rows_to_csv, run_mt_root, run_root
from .sdpcert import SdpStatus, verify_sdp_equals_mccormick
from .separate import SeparationConfig

SEED_ENV = "BILICOVER_SEED"


class UsageError(Exception):
    pass


def _seed(value: Optional[int]) -> int:
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return 0 if value is None else value


def _write(text: str, path: Optional[str]) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_gen(args) -> int:
    inst = generate_instance(args.m, args.n, args.p, args.sign_mode, _seed(args.seed))
    _write(format_instance(inst), args.output)
    return 0


def cmd_root(args) -> int:
    inst = read_instance(args.instance)
    sep = SeparationConfig(epsilon=args.epsilon, rng_seed=_seed(args.seed))
    cfg = LoopConfig(eps_z=args.eps_z, max_iter=args.max_iter, time_limit=args.time_limit, separation=sep)
    name = args.instance_id or os.path.basename(args.instance)
    if args.mt:
        rep = run_mt_root(inst, cfg)
        rep.instance_id = name
    else:
        rep = run_root(inst, cfg, instance_id=name, p=args.p)
    if args.z_opt is not None:
        compute_metrics(rep, args.z_opt)
    if args.write_lp:
        write_lp(rep.state, args.write_lp)
    if args.cuts_out:
        lines = [format_cut(c) for c in rep.state.cut_pool if hasattr(c, "partition")]
        _write("".join(s + "\n" for s in lines), args.cuts_out)
    _write(report_rows_to_csv([rep], timing=not args.no_timing), args.output)
    return 0


def cmd_certify(args) -> int:
    inst = read_instance(args.instance)
    res = verify_sdp_equals_mccormick(inst, tol=args.tol, method=args.method)
    if res.status is SdpStatus.INFEASIBLE:
        print("INFEASIBLE")
    else:
        print(f"VERIFIED z_mc={res.z_mc:.17g} min_eig={res.min_eig:.6e}")
    return 0


def cmd_oracle(args) -> int:
    if args.workers != 1:
        raise UsageError("only the deterministic single-worker search is available (--workers 1)")
    inst = read_instance(args.instance)
    res = solve_global(inst, gap_tol=args.gap_tol, node_cap=args.node_cap,
                       time_limit=None if args.deterministic else args.time_limit)
    line = f"{res.status.value.upper()} lb={res.lb:.17g} ub={res.ub:.17g} nodes={res.nodes}"
    if not args.deterministic:
        line += f" time_s={res.elapsed_s:.3f}"
    print(line)
    if res.point is not None and args.point:
        print("x " + " ".join(f"{v:.17g}" for v in res.point.x))
        print("y " + " ".join(f"{v:.17g}" for v in res.point.y))
    return 0


def _parse_settings(text: str):
    if text == "standard":
        return STANDARD_SETTINGS, True
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 3:
            raise UsageError(f"setting {chunk!r} must be m,n,p")
        try:
            out.append((int(parts[0]), int(parts[1]), float(parts[2])))
        except ValueError:
            raise UsageError(f"setting {chunk!r} must be m,n,p") from None
    if not out:
        raise UsageError("no settings given")
    return tuple(out), False


def cmd_bench(args) -> int:
    settings, _ = _parse_settings(args.settings)
    modes = {"both": (SignMode.NON_NEGATIVE, SignMode.MIXED_SIGNS),
             "NonNegative": (SignMode.NON_NEGATIVE,),
             "MixedSigns": (SignMode.MIXED_SIGNS,)}[args.sign_modes]
    try:
        plan = BenchPlan(settings, args.instances, modes, _seed(args.seed), args.t_heu, args.oracle_cap,
                         args.node_cap, args.incumbent_nodes, args.mt, check_window=not args.any_density)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    records = run_bench(plan, workers=args.workers)
    runs, summ = write_bench(records, args.out, timing=not args.no_timing, mt=args.mt)
    print(f"wrote {runs} ({len(records)} rows) and {summ}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bilicover", description="Lifted bilinear cover cuts at desk scale.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random instance file")
    g.add_argument("-m", type=int, required=True)
    g.add_argument("-n", type=int, required=True)
    g.add_argument("-p", type=float, required=True)
    g.add_argument("--sign-mode", choices=[s.value for s in SignMode], default="NonNegative")
    g.add_argument("--seed", type=int)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("root", help="run the root cutting-plane loop on an instance")
    r.add_argument("instance")
    r.add_argument("--eps-z", type=float, default=5e-3)
    r.add_argument("--max-iter", type=int)
    r.add_argument("--time-limit", type=float, default=60.0)
    r.add_argument("--epsilon", type=float, default=1e-2)
    r.add_argument("--seed", type=int)
    r.add_argument("-p", type=float, help="generation density (defaults to the observed density)")
    r.add_argument("--z-opt", type=float, help="reference optimum for the gap-closed columns")
    r.add_argument("--mt", action="store_true", help="use one square-root cut per row instead")
    r.add_argument("--instance-id")
    r.add_argument("--no-timing", action="store_true")
    r.add_argument("--write-lp", metavar="PATH", help="dump the final LP in CPLEX LP format")
    r.add_argument("--cuts-out", metavar="PATH", help="write one line per cut partition")
    r.add_argument("-o", "--output")
    r.set_defaults(func=cmd_root)

    for name in ("certify-sdp", "certify"):
        c = sub.add_parser(name, help="certify that the SDP bound equals McCormick")
        c.add_argument("instance")
        c.add_argument("--tol", type=float, default=1e-8)
        c.add_argument("--method", choices=["jacobi", "numpy"], default="jacobi")
        c.set_defaults(func=cmd_certify)

    o = sub.add_parser("oracle", help="spatial branch and bound")
    o.add_argument("instance")
    o.add_argument("--gap-tol", type=float, default=1e-6)
    o.add_argument("--node-cap", type=int, default=100_000)
    o.add_argument("--time-limit", type=float)
    o.add_argument("--deterministic", action="store_true", help="ignore time limits and omit timing output")
    o.add_argument("--workers", type=int, default=1)
    o.add_argument("--point", action="store_true", help="also print the incumbent")
    o.set_defaults(func=cmd_oracle)

    b = sub.add_parser("bench", help="run the benchmark protocol")
    b.add_argument("--settings", default="standard", help="'standard' (15 settings) or 'm,n,p;m,n,p;...'")
    b.add_argument("--instances", type=int, default=10)
    b.add_argument("--sign-modes", choices=["both", "NonNegative", "MixedSigns"], default="both")
    b.add_argument("--seed", type=int)
    b.add_argument("--t-heu", type=float, default=60.0)
    b.add_argument("--oracle-cap", type=int, default=12)
    b.add_argument("--node-cap", type=int, default=100_000)
    b.add_argument("--incumbent-nodes", type=int, default=200,
                   help="node budget for instances above the oracle cap")
    b.add_argument("--mt", action="store_true")
    b.add_argument("--no-timing", action="store_true")
    b.add_argument("--any-density", action="store_true", help="skip the n*p in [5, 20] check")
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--out", default="bench_out")
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (OSError, InstanceFormatError) as exc:
        print(f"bilicover: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
