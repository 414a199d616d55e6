import warnings

import numpy as np
import pytest
from scipy.optimize import linprog

from bilicover.cover import mt_cut, validate_partition
from bilicover.lift import build_cut
from bilicover.lp import LinearProgram, LPStatus
from bilicover.model import BilinearInstance, BilinearRow, PointXY, SignMode, generate_instance
from bilicover.oracle import sample_feasible
from bilicover.relax import (
    add_cut,
    add_cut_linearization,
    build_mccormick,
    refine_until_cut_feasible,
    solve,
    write_lp,
)
from bilicover.rootloop import run_root
from bilicover.separate import SeparationConfig, separate_all


def one_row(coef, rhs, cx=None, cy=None):
    coef = np.asarray(coef, float)
    n = coef.size
    row = BilinearRow(0, np.arange(n), coef, rhs)
    mode = SignMode.MIXED_SIGNS if np.any(coef < 0) else SignMode.NON_NEGATIVE
    cx = np.ones(n) if cx is None else np.asarray(cx, float)
    cy = np.ones(n) if cy is None else np.asarray(cy, float)
    return BilinearInstance(n, 1, cx, cy, (row,), mode, 0)


def mccormick_scipy(inst):
    """Same LP assembled independently for scipy's solver."""
    n = inst.n
    c = np.concatenate([inst.cx, inst.cy, np.zeros(n)])
    A, b = [], []
    for row in inst.rows:
        r = np.zeros(3 * n)
        r[2 * n + row.idx] = -row.coef
        A.append(r)
        b.append(-row.rhs)
    for i in range(n):
        for cols, vals, rhs in (([2 * n + i, i], [1, -1], 0), ([2 * n + i, n + i], [1, -1], 0),
                                ([i, n + i, 2 * n + i], [1, 1, -1], 1)):
            r = np.zeros(3 * n)
            r[cols] = vals
            A.append(r)
            b.append(rhs)
    res = linprog(c, A_ub=np.array(A), b_ub=np.array(b), bounds=[(0, 1)] * (3 * n), method="highs")
    return res.fun if res.status == 0 else np.inf


def test_forced_corner():
    sol = solve(build_mccormick(one_row([1.0], 1.0)))
    assert sol.optimal
    assert sol.z == pytest.approx(2.0, abs=1e-9)
    assert sol.point.x[0] == pytest.approx(1.0) and sol.w[0] == pytest.approx(1.0)


def test_quarter_rhs():
    sol = solve(build_mccormick(one_row([1.0], 0.25)))
    assert sol.z == pytest.approx(0.5, abs=1e-9)
    assert sol.point.x[0] == pytest.approx(0.25)
    assert sol.point.y[0] == pytest.approx(0.25)


def test_infeasible_row():
    sol = solve(build_mccormick(one_row([1.0], 2.0)))
    assert sol.status is LPStatus.INFEASIBLE
    assert not sol.optimal


def test_nonpositive_rhs_gives_origin():
    inst = one_row([0.5, -0.3], -0.1, cx=[0.2, 0.7], cy=[0.4, 0.1])
    sol = solve(build_mccormick(inst))
    assert sol.z == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(6))
def test_mccormick_matches_scipy_and_certificates(seed):
    inst = generate_instance(25, 30, 0.2, "MixedSigns" if seed % 2 else "NonNegative", seed=seed)
    sol = solve(build_mccormick(inst))
    assert sol.z == pytest.approx(mccormick_scipy(inst), abs=1e-7)
    assert sol.lp.primal_residual <= 1e-7
    assert sol.lp.relative_gap <= 1e-7
    x, y, w = sol.point.x, sol.point.y, sol.w
    assert np.all(w <= np.minimum(x, y) + 1e-7)
    assert np.all(w >= np.maximum(0, x + y - 1) - 1e-7)


def test_solve_is_deterministic():
    inst = generate_instance(30, 40, 0.15, "NonNegative", seed=4)
    a, b = solve(build_mccormick(inst)), solve(build_mccormick(inst))
    assert a.z == b.z
    assert np.array_equal(a.point.x, b.point.x)


def test_lp_core_small_problem():
    lp = LinearProgram(np.array([-1.0, -1.0]), np.zeros(2), np.full(2, 10.0))
    lp.add_rows([-np.inf], [4.0], [([0, 1], [1.0, 2.0])])
    lp.add_rows([-np.inf], [3.0], [([0], [1.0])])
    res = lp.solve()
    assert res.objective == pytest.approx(-3.5)
    assert res.dual_objective == pytest.approx(-3.5)


def _violated_cut():
    """A generated instance, its McCormick optimum and a cut violated there."""
    inst = generate_instance(20, 30, 0.2, "NonNegative", seed=5)
    state = build_mccormick(inst)
    sol = solve(state)
    cuts = separate_all(inst, sol.point, SeparationConfig())
    assert cuts
    return inst, state, sol, cuts[0]


def test_linearization_cuts_off_by_violation():
    inst = one_row([1.0, 1.0, 1.0], 2.0)
    state = build_mccormick(inst)
    cut = build_cut(validate_partition(inst.rows[0], [0, 0, 0]))
    at = PointXY(np.full(3, 0.5), np.full(3, 0.5))
    v = cut.rhs - cut.lhs(at)
    assert v == pytest.approx(0.5)
    row = add_cut_linearization(state, cut, at)
    assert row is not None
    lc = state.linear_cuts[-1]
    assert -lc.slack(at.x, at.y) == pytest.approx(v, abs=1e-12)
    assert add_cut_linearization(state, cut, at) is None
    assert state.linearization_counts.get(cut.cut_id) == 1


def test_linearization_satisfied_when_cut_holds():
    inst = one_row([1.0, 1.0, 1.0], 2.0)
    state = build_mccormick(inst)
    cut = build_cut(validate_partition(inst.rows[0], [0, 0, 0]))
    at = PointXY(np.array([1.0, 1.0, 0.3]), np.array([1.0, 0.9, 0.2]))
    assert cut.lhs(at) >= -1
    add_cut_linearization(state, cut, at)
    assert state.linear_cuts[-1].slack(at.x, at.y) >= -1e-12


def test_zero_gradient_warns():
    inst = one_row([1.0], 1.0)
    state = build_mccormick(inst)
    cut = mt_cut(inst.rows[0])
    cut._alpha[:] = 0.0
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        assert add_cut_linearization(state, cut, PointXY(np.ones(1), np.ones(1))) is None
    assert any("zero supergradient" in str(r.message) for r in rec)


def test_refine_empty_pool_and_satisfied_cut():
    inst = one_row([1.0, 1.0, 1.0], 2.0)
    state = build_mccormick(inst)
    z0 = solve(state).z
    assert refine_until_cut_feasible(state) == 0
    assert state.last.z == z0
    cut = build_cut(validate_partition(inst.rows[0], [0, 0, 0]))
    assert cut.lhs(state.last.point) >= -1
    add_cut(state, cut)
    assert refine_until_cut_feasible(state) == 0
    assert len(state.linear_cuts) == 0


def test_refine_reaches_cut_feasibility_and_is_monotone():
    inst, state, sol, cut = _violated_cut()
    add_cut(state, cut)
    passes = refine_until_cut_feasible(state, tol=1e-6, max_pass=50)
    assert passes < 50
    assert cut.lhs(state.last.point) >= -1 - 1e-6
    zs = [z for _, z in state.bound_history]
    assert all(b >= a - 1e-9 for a, b in zip(zs, zs[1:]))


def test_linearizations_valid_on_sampled_points():
    inst = generate_instance(10, 20, 0.4, "NonNegative", seed=11)
    rep = run_root(inst)
    assert rep.state.linear_cuts
    s = sample_feasible(inst, 5000, np.random.default_rng(1), proposal="mixed")
    for lc in rep.state.linear_cuts:
        assert lc.slack(s.x, s.y).min() >= -1e-9


def test_write_lp(tmp_path):
    inst, state, sol, cut = _violated_cut()
    add_cut_linearization(state, cut, sol.point)
    path = tmp_path / "m.lp"
    write_lp(state, path)
    text = path.read_text().lower()
    body = [ln for ln in text.splitlines() if not ln.startswith("\\")]
    assert body[0] == "minimize"
    assert "subject to" in text and "bounds" in text and text.rstrip().endswith("end")
    assert "x0" in text and "w29" in text
