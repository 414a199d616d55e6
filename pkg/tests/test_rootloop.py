import math

import numpy as np
import pytest

from bilicover.model import BilinearInstance, BilinearRow, SignMode, generate_instance
from bilicover.oracle import solve_global
from bilicover.rootloop import (
    CSV_COLUMNS,
    LoopConfig,
    RunReport,
    compute_metrics,
    default_iteration_limit,
    relative_change,
    report_rows_to_csv,
    run_mt_root,
    run_root,
)

from test_relax import mccormick_scipy, one_row


def test_config_validation():
    with pytest.raises(ValueError):
        LoopConfig(eps_z=0)
    with pytest.raises(ValueError):
        LoopConfig(max_iter=0)


def test_iteration_limit():
    inst = generate_instance(10, 100, 0.05, seed=0)
    assert default_iteration_limit(inst, p=0.05) == 50
    assert LoopConfig().iteration_limit(inst, 0.05) == 50
    assert LoopConfig(max_iter=3).iteration_limit(inst, 0.05) == 3
    assert default_iteration_limit(inst) == math.ceil(10 * inst.mean_row_size - 1e-9)


def test_relative_change_guard():
    assert relative_change(1.01, 1.0) == pytest.approx(0.01)
    assert relative_change(3e-3, 0.0) == pytest.approx(3e-3)


def test_satisfied_instance_needs_no_cuts():
    inst = one_row([0.5, 0.4], -0.2, cx=[0.3, 0.1], cy=[0.2, 0.9])
    rep = run_root(inst)
    assert rep.cuts_added == 0 and rep.iterations == 0
    assert rep.z_root == rep.z_mc == pytest.approx(0.0)


def test_three_pair_example():
    inst = one_row([1, 1, 1], 2)
    rep = run_root(inst)
    assert rep.z_mc == pytest.approx(mccormick_scipy(inst), abs=1e-9)
    assert rep.z_mc == pytest.approx(4.0, abs=1e-9)
    assert rep.z_root >= rep.z_mc - 1e-9


def test_infeasible_report():
    rep = run_root(one_row([1.0], 2.0))
    assert rep.status == "infeasible"
    assert math.isnan(rep.rho_heu)


@pytest.mark.parametrize("seed", range(4))
def test_history_monotone_and_cap(seed):
    inst = generate_instance(40, 50, 0.15, "MixedSigns" if seed % 2 else "NonNegative", seed=seed)
    rep = run_root(inst, LoopConfig(max_iter=2))
    assert rep.iterations <= 2
    zs = [z for _, z in rep.bound_history]
    assert all(b >= a - 1e-9 for a, b in zip(zs, zs[1:]))
    assert rep.z_root >= rep.z_mc - 1e-9
    assert rep.cuts_added == sum(rep.cuts_per_iteration) == len(rep.state.cut_pool)


def test_single_round_cap():
    inst = generate_instance(40, 50, 0.15, seed=7)
    rep = run_root(inst, LoopConfig(max_iter=1))
    assert len(rep.cuts_per_iteration) <= 1


def test_run_is_deterministic():
    inst = generate_instance(40, 50, 0.15, seed=8)
    a, b = run_root(inst), run_root(inst)
    assert a.z_root == b.z_root and a.cuts_per_iteration == b.cuts_per_iteration


def test_metrics_formula():
    rep = RunReport(z_mc=0.0, z_root=6.0)
    compute_metrics(rep, 10.0)
    assert rep.rho_heu == pytest.approx(60.0) and rep.status == "ok"
    compute_metrics(rep, 10.0, z_final=10.0, z_baseline=5.0)
    assert rep.rho == pytest.approx(100.0) and rep.delta_rho == pytest.approx(50.0)
    rep2 = RunReport(z_mc=3.0, z_root=3.0)
    compute_metrics(rep2, 8.0)
    assert rep2.rho_heu == 0.0
    rep3 = RunReport(z_mc=3.0, z_root=3.0)
    compute_metrics(rep3, 3.0)
    assert rep3.status == "degenerate_gap" and math.isnan(rep3.rho)
    rep4 = RunReport(z_mc=0.0, z_root=1.0)
    compute_metrics(rep4, 2.0, incumbent_only=True)
    assert rep4.status == "incumbent_only"


@pytest.mark.parametrize("seed", range(3))
def test_root_bound_below_optimum(seed):
    inst = generate_instance(6, 8, 0.7, "MixedSigns" if seed == 1 else "NonNegative", seed=seed)
    rep = run_root(inst)
    g = solve_global(inst, node_cap=20_000)
    assert g.status.value == "Optimal"
    assert rep.z_root <= g.ub + 1e-6
    compute_metrics(rep, g.ub)
    if rep.status == "ok":
        assert -1e-6 <= rep.rho_heu <= 100 + 1e-6


def test_mt_root():
    inst = generate_instance(30, 40, 0.2, "NonNegative", seed=2)
    rep = run_mt_root(inst)
    n_rows = sum(1 for r in inst.rows if r.rhs > 0)
    assert rep.cuts_added == n_rows
    assert rep.z_root >= rep.z_mc - 1e-9


def test_csv_row_layout():
    inst = generate_instance(20, 30, 0.2, seed=1)
    rep = run_root(inst, instance_id="a")
    text = report_rows_to_csv([rep])
    head, line = text.splitlines()
    assert head.split(",") == list(CSV_COLUMNS)
    assert line.split(",")[0] == "a"
    no_t = report_rows_to_csv([rep], timing=False).splitlines()[0].split(",")
    assert "heur_time_s" not in no_t and len(no_t) == len(CSV_COLUMNS) - 1
