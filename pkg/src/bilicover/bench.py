"""Benchmark harness: plan expansion, per-instance pipeline, CSV tables."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .model import SignMode, generate_instance
from .oracle import solve_global
from .rootloop import CSV_COLUMNS, LoopConfig, RunReport, compute_metrics, run_mt_root, run_root
from .separate import SeparationConfig

__all__ = [
    "STANDARD_SETTINGS",
    "BenchPlan",
    "BenchCase",
    "BenchRecord",
    "expand_plan",
    "run_case",
    "run_bench",
    "records_to_csv",
    "summary_to_csv",
    "write_bench",
]


def _standard_settings():
    out = []
    for m in (100, 250, 500):
        for n in (100, 250, 500):
            for p in (0.01, 0.02, 0.05):
                if 5.0 - 1e-9 <= n * p <= 20.0 + 1e-9:
                    out.append((m, n, p))
    return tuple(out)


STANDARD_SETTINGS = _standard_settings()


@dataclass(frozen=True)
class BenchPlan:
    settings: tuple = STANDARD_SETTINGS
    instances_per_setting: int = 10
    sign_modes: tuple = (SignMode.NON_NEGATIVE, SignMode.MIXED_SIGNS)
    master_seed: int = 0
    t_heu: float = 60.0
    oracle_cap: int = 12
    node_cap: int = 100_000
    incumbent_nodes: int = 200
    mt: bool = False
    check_window: bool = True

    def __post_init__(self):
        if self.instances_per_setting < 1:
            raise ValueError("instances_per_setting must be >= 1")
        for m, n, p in self.settings:
            if m < 1 or n < 1 or not 0 < p <= 1:
                raise ValueError(f"bad setting {(m, n, p)}")
            if self.check_window and not 5.0 - 1e-9 <= n * p <= 20.0 + 1e-9:
                raise ValueError(f"setting {(m, n, p)} has n*p = {n * p:g}, outside [5, 20]")


@dataclass(frozen=True)
class BenchCase:
    instance_id: str
    setting: int
    m: int
    n: int
    p: float
    sign_mode: SignMode
    seed: int


@dataclass
class BenchRecord:
    report: RunReport
    rho_mt_root: float = math.nan


def _instance_seed(master: int, setting: int, mode: int, k: int) -> int:
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=(3, setting, mode, k))
    return int(ss.generate_state(1, np.uint32)[0])


def expand_plan(plan: BenchPlan) -> list[BenchCase]:
    """Cases in setting-major, then sign mode, then instance order."""
    modes = [SignMode(s) for s in plan.sign_modes]
    cases = []
    for s, (m, n, p) in enumerate(plan.settings):
        for mode in modes:
            mi = 0 if mode is SignMode.NON_NEGATIVE else 1
            for k in range(plan.instances_per_setting):
                tag = "nn" if mi == 0 else "ms"
                cases.append(BenchCase(f"s{s:02d}-{tag}-{k:02d}", s, m, n, p, mode,
                                       _instance_seed(plan.master_seed, s, mi, k)))
    return cases


def run_case(case: BenchCase, plan: BenchPlan) -> BenchRecord:
    """gen -> root -> oracle (with and without root cuts) -> metrics."""
    rec = _run_case(case, plan)
    rec.report.state = None  # LP handles do not cross process boundaries
    return rec


def _run_case(case: BenchCase, plan: BenchPlan) -> BenchRecord:
    inst = generate_instance(case.m, case.n, case.p, case.sign_mode, case.seed)
    cfg = LoopConfig(time_limit=plan.t_heu, separation=SeparationConfig(rng_seed=case.seed))
    rep = run_root(inst, cfg, instance_id=case.instance_id, p=case.p)
    if rep.status == "infeasible":
        return BenchRecord(rep)

    exact = case.n <= plan.oracle_cap
    cap = plan.node_cap if exact else plan.incumbent_nodes
    plain = solve_global(inst, node_cap=cap)
    cut_rows = rep.state.linear_cuts if rep.state is not None else ()
    strong = solve_global(inst, node_cap=cap, extra_cuts=cut_rows)
    z_opt = min(plain.ub, strong.ub)
    proven = exact and (plain.status.value == "Optimal" or strong.status.value == "Optimal")
    if not math.isfinite(z_opt):
        rep.status = "no_incumbent"
        return BenchRecord(rep)
    # final bounds never exceed the best known primal value
    compute_metrics(rep, z_opt, z_baseline=min(plain.lb, z_opt), z_final=min(strong.lb, z_opt),
                    incumbent_only=not proven)

    rec = BenchRecord(rep)
    if plan.mt and case.sign_mode is SignMode.NON_NEGATIVE:
        mt = run_mt_root(inst, cfg)
        if mt.status != "infeasible":
            compute_metrics(mt, z_opt)
            rec.rho_mt_root = mt.rho_heu
    return rec


def _run_one(args):
    return run_case(*args)


def run_bench(plan: BenchPlan, workers: int = 1) -> list[BenchRecord]:
    """Run every case; results come back in plan order whatever ``workers`` is."""
    cases = expand_plan(plan)
    jobs = [(c, plan) for c in cases]
    if workers <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, jobs))


def _fmt(v) -> str:
    if v is None:
        return ""
    return format(float(v), ".17g")


def _columns(timing: bool, mt: bool):
    cols = [c for c in CSV_COLUMNS if timing or c != "heur_time_s"]
    if mt:
        cols.append("rho_mt_root")
    return cols


def records_to_csv(records: Sequence[BenchRecord], timing: bool = True, mt: bool = False) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=_columns(timing, mt), lineterminator="\n")
    w.writeheader()
    for r in records:
        row = r.report.csv_row(timing)
        if mt:
            row["rho_mt_root"] = _fmt(r.rho_mt_root)
        w.writerow(row)
    return buf.getvalue()


def _mean(vals) -> float:
    vals = [v for v in vals if v is not None and math.isfinite(v)]
    return float(np.mean(vals)) if vals else math.nan


def summary_to_csv(records: Sequence[BenchRecord], timing: bool = True, mt: bool = False) -> str:
    """Per (setting, sign mode) means of rho_heu, n_BC, heuristic time, rho, delta_rho."""
    groups: dict = {}
    for r in records:
        rep = r.report
        groups.setdefault((rep.m, rep.n, rep.p, rep.sign_mode), []).append(r)
    cols = ["m", "n", "p", "sign_mode", "instances", "rho_heu", "n_bc", "heur_time_s", "rho", "delta_rho"]
    if not timing:
        cols.remove("heur_time_s")
    if mt:
        cols.append("rho_mt_root")
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for (m, n, p, mode), recs in groups.items():
        reps = [r.report for r in recs]
        row = {
            "m": str(m), "n": str(n), "p": _fmt(p), "sign_mode": mode, "instances": str(len(recs)),
            "rho_heu": _fmt(_mean(x.rho_heu for x in reps)),
            "n_bc": _fmt(_mean(x.cuts_added for x in reps)),
            "rho": _fmt(_mean(x.rho for x in reps)),
            "delta_rho": _fmt(_mean(x.delta_rho for x in reps)),
        }
        if timing:
            row["heur_time_s"] = _fmt(_mean(x.heuristic_time_s for x in reps))
        if mt:
            row["rho_mt_root"] = _fmt(_mean(r.rho_mt_root for r in recs))
        w.writerow(row)
    return buf.getvalue()


def write_bench(records: Sequence[BenchRecord], out_dir, timing: bool = True, mt: bool = False) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runs = out / "runs.csv"
    summ = out / "summary.csv"
    runs.write_text(records_to_csv(records, timing, mt))
    summ.write_text(summary_to_csv(records, timing, mt))
    return runs, summ


def with_seed(plan: BenchPlan, seed: Optional[int]) -> BenchPlan:
    return plan if seed is None else replace(plan, master_seed=int(seed))
