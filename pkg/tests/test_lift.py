import math

import numpy as np
import pytest

from bilicover.cover import Label, eval_seed_lhs, partition_failure, validate_partition
from bilicover.lift import TermCase, build_cut, eval_cut_lhs, format_cut, supergradient
from bilicover.model import BilinearRow, PointXY, generate_instance
from bilicover.oracle import row_instance, sample_feasible
from bilicover.rootloop import run_root

from oracles import lhs_reference

I, J0, J1 = Label.I, Label.J0, Label.J1
NAMES = {I: "I", J0: "J0", J1: "J1"}


def row(coef, rhs, idx=None):
    coef = np.asarray(coef, float)
    idx = np.arange(coef.size) if idx is None else np.asarray(idx)
    return BilinearRow(0, idx, coef, rhs)


def cut_for(coef, rhs, labels):
    return build_cut(validate_partition(row(coef, rhs), labels))


def test_all_i_cut_is_seed():
    part = validate_partition(row([2, 2], 3), [I, I])
    cut = build_cut(part)
    rng = np.random.default_rng(0)
    for _ in range(20):
        p = PointXY(rng.random(2), rng.random(2))
        assert eval_cut_lhs(cut, p) == pytest.approx(eval_seed_lhs(part, p), abs=1e-14)
    assert eval_cut_lhs(cut, PointXY(np.zeros(2), np.zeros(2))) == pytest.approx(-2 * (2 + math.sqrt(2)))


def test_j0_plus_term():
    cut = cut_for([1, 1, 1, 1], 2, [I, I, I, J0])
    assert cut.partition.l_plus == pytest.approx(1.0)
    assert cut.cases[3] is TermCase.J0_PLUS
    assert cut.gamma(3, 0.5, 0.3) == pytest.approx(0.3)


def test_j1_minus_term():
    cut = cut_for([1, 1, 1, -2], 0, [I, I, I, J1])
    assert cut.partition.l_plus == pytest.approx(1.0)
    assert cut.cases[3] is TermCase.J1_MINUS
    assert cut.gamma(3, 1.0, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert cut.gamma(3, 0.0, 0.0) == pytest.approx(2.0)


def test_j1_plus_reduced_anchor():
    cut = cut_for([0.5, 0.5, 1], 1.5, [I, I, J1])
    part = cut.partition
    assert part.delta == pytest.approx(0.5)
    assert part.l_plus == pytest.approx(2.0) and part.l_minus == pytest.approx(2.0)
    assert cut.cases[2] is TermCase.J1_PLUS_REDUCED
    assert cut.gamma(2, 1.0, 1.0) == pytest.approx(0.0, abs=1e-15)


def test_j1_plus_full_case_selection():
    # I = {0.6, 0.9} covers d_lambda = 1.2: delta = 0.3, I^> = both, a_i0 = 0.6
    cut = cut_for([0.6, 0.9, 0.7, 0.5], 1.2 + 0.7 + 0.5, [I, I, J1, J1])
    assert cut.partition.a_i0 == pytest.approx(0.6)
    assert cut.cases[2] is TermCase.J1_PLUS_FULL
    assert cut.cases[3] is TermCase.J1_PLUS_REDUCED


def test_j0_minus_anchor():
    cut = cut_for([1, 1, -0.5], 1.5, [I, I, J0])
    assert cut.cases[2] is TermCase.J0_MINUS
    assert cut.gamma(2, 0.0, 0.0) == pytest.approx(0.0, abs=1e-15)


def test_supergradient_examples():
    cut = cut_for([1, 1, 1, 1], 2, [I, I, I, J0])
    sg = supergradient(cut, PointXY(np.array([0.5, 0.5, 0.5, 0.5]), np.array([0.5, 0.5, 0.5, 0.3])))
    assert sg.gx[3] == 0.0 and sg.gy[3] == pytest.approx(1.0)
    sg = supergradient(cut, PointXY(np.full(4, 0.4), np.full(4, 0.4)))
    assert sg.gx[3] == pytest.approx(1.0) and sg.gy[3] == 0.0
    seed = cut_for([1, 1, 1], 2, [I, I, I])
    sg = supergradient(seed, PointXY(np.full(3, 0.25), np.full(3, 0.25)))
    assert np.allclose(sg.gx, 0.5) and np.allclose(sg.gy, 0.5)


def test_format_cut():
    r = row([1, 1, 1, 1], 2, idx=[3, 5, 8, 9])
    cut = build_cut(validate_partition(r, [I, I, I, J0]))
    assert format_cut(cut) == "cut 0 I:3,5,8 J0:9 J1: lplus:1 lminus:1"


def test_invalid_partition_rejected():
    from bilicover.cover import InvalidPartition
    with pytest.raises(InvalidPartition):
        cut_for([3, 1], 2, [I, I])


def random_partition(rng, k=None):
    """A random row and a valid partition of it, built by construction."""
    while True:
        k = int(rng.integers(2, 8))
        a = rng.uniform(-1, 1, k)
        a[np.abs(a) < 0.05] = 0.3
        labels = rng.choice([I, J0, J1], size=k)
        pos = np.flatnonzero(a > 0)
        if pos.size == 0:
            continue
        cov = pos[rng.random(pos.size) < 0.6]
        if cov.size == 0:
            cov = pos[:1]
        labels[np.isin(np.arange(k), cov)] = I
        labels[(labels == I) & ~np.isin(np.arange(k), cov)] = J0
        s = a[cov].sum()
        delta = rng.uniform(0.02, 1.0) * a[cov].min()
        d = s - delta + a[labels == J1].sum()
        r = row(a, d)
        if partition_failure(r, labels) is None:
            return r, labels


def test_terms_match_reference_formulas():
    rng = np.random.default_rng(1)
    for _ in range(300):
        r, labels = random_partition(rng)
        cut = build_cut(validate_partition(r, labels))
        names = [NAMES[Label(v)] for v in labels]
        for _ in range(5):
            x, y = rng.random(r.size), rng.random(r.size)
            if rng.random() < 0.3:
                x[rng.random(r.size) < 0.4] = 1.0
                y[rng.random(r.size) < 0.4] = 0.0
            ref = lhs_reference(r.coef, names, r.rhs, x, y)
            assert cut.lhs_local(x, y) == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_anchor_identities():
    rng = np.random.default_rng(2)
    for _ in range(300):
        r, labels = random_partition(rng)
        cut = build_cut(validate_partition(r, labels))
        for pos in range(r.size):
            if labels[pos] == J0:
                assert abs(cut.gamma(pos, 0.0, 0.0)) <= 1e-9
            elif labels[pos] == J1:
                assert abs(cut.gamma(pos, 1.0, 1.0)) <= 1e-9


def test_concavity_and_overestimation():
    rng = np.random.default_rng(3)
    for _ in range(300):
        r, labels = random_partition(rng)
        cut = build_cut(validate_partition(r, labels))
        k = r.size
        p = (rng.random(k), rng.random(k))
        q = (rng.random(k), rng.random(k))
        for lam in (0.25, 0.5, 0.75):
            mid = cut.lhs_local(lam * p[0] + (1 - lam) * q[0], lam * p[1] + (1 - lam) * q[1])
            assert mid >= lam * cut.lhs_local(*p) + (1 - lam) * cut.lhs_local(*q) - 1e-9
        sg = cut.supergradient(PointXY(*q))
        over = sg.value + sg.gx @ (p[0] - q[0]) + sg.gy @ (p[1] - q[1])
        assert over >= cut.lhs_local(*p) - 1e-9
        assert sg.value >= cut.lhs_local(*q) - 1e-12


def test_supergradient_value_exact_off_the_floor():
    rng = np.random.default_rng(4)
    r, labels = random_partition(rng)
    cut = build_cut(validate_partition(r, labels))
    x, y = rng.uniform(0.1, 1, r.size), rng.uniform(0.1, 1, r.size)
    assert cut.supergradient(PointXY(x, y)).value == pytest.approx(cut.lhs_local(x, y), abs=1e-12)


def test_handmade_cut_valid_on_row_samples():
    r = row([1, 1, 1], 2)
    cut = build_cut(validate_partition(r, [J1, I, I]))
    s = sample_feasible(row_instance(r), 10_000, np.random.default_rng(5), proposal="mixed")
    vals = cut.lhs_local(s.x, s.y)
    assert vals.min() >= -1 - 1e-9
    ref = np.array([lhs_reference(r.coef, ["J1", "I", "I"], r.rhs, a, b) for a, b in zip(s.x[:200], s.y[:200])])
    assert np.allclose(vals[:200], ref, atol=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_generated_cuts_valid_on_their_row_sets(seed):
    inst = generate_instance(20, 30, 0.25, "MixedSigns" if seed % 2 else "NonNegative", seed=seed)
    rep = run_root(inst)
    rng = np.random.default_rng(seed)
    for cut in rep.state.cut_pool:
        s = sample_feasible(row_instance(cut.row), 2000, rng, proposal="mixed")
        assert cut.lhs_local(s.x, s.y).min() >= -1 - 1e-9
