import io

import numpy as np
import pytest

from bilicover.model import (
    BilinearInstance,
    BilinearRow,
    InstanceFormatError,
    PointXY,
    SignMode,
    evaluate_row,
    format_instance,
    generate_instance,
    parse_instance,
    read_instance,
    write_instance,
)


def test_generator_is_deterministic():
    a = generate_instance(20, 30, 0.2, "MixedSigns", seed=7)
    b = generate_instance(20, 30, 0.2, "MixedSigns", seed=7)
    c = generate_instance(20, 30, 0.2, "MixedSigns", seed=8)
    assert a == b
    assert format_instance(a) == format_instance(b)
    assert a != c


def test_generator_statistics():
    inst = generate_instance(200, 100, 0.05, "NonNegative", seed=1)
    assert abs(inst.density - 0.05) < 0.01
    assert np.all((inst.cx >= 0) & (inst.cx < 1))
    for row in inst.rows:
        assert row.size >= 1
        assert np.all((row.coef > 0) & (row.coef < 1))
        assert 0 <= row.rhs <= row.coef.sum()


def test_mixed_rows_are_feasible_at_ones():
    inst = generate_instance(200, 50, 0.2, "MixedSigns", seed=2)
    coefs = np.concatenate([r.coef for r in inst.rows])
    assert coefs.min() < 0 < coefs.max()
    ones = PointXY(np.ones(inst.n), np.ones(inst.n))
    assert inst.is_feasible(ones)
    for row in inst.rows:
        s = row.coef.sum()
        if s <= 0:
            assert s * 2 <= row.rhs <= s + 1e-15


def test_single_cell_instance():
    inst = generate_instance(1, 1, 1.0, seed=0)
    assert inst.m == inst.n == 1
    assert inst.rows[0].size == 1


@pytest.mark.parametrize("bad", [dict(m=0, n=1, p=0.5), dict(m=1, n=1, p=0.0), dict(m=1, n=1, p=1.5)])
def test_generator_rejects_bad_arguments(bad):
    with pytest.raises(ValueError):
        generate_instance(**bad)


def test_round_trip(tmp_path):
    inst = generate_instance(15, 12, 0.3, "MixedSigns", seed=3)
    path = tmp_path / "inst.txt"
    write_instance(inst, path)
    back = read_instance(path)
    assert back == inst
    assert np.array_equal(back.cx, inst.cx)
    assert all(np.array_equal(r.coef, s.coef) and r.rhs == s.rhs for r, s in zip(back.rows, inst.rows))


@pytest.mark.parametrize(
    "text, line",
    [
        ("", 1),
        ("bilin 1 1 NonNegative 0\ncx 1\ncy 1\nrow 0 1 1 0 1\n", 1),
        ("bilinear 1 1 Positive 0\ncx 1\ncy 1\nrow 0 1 1 0 1\n", 1),
        ("bilinear 1 1 NonNegative 0\ncx 1 2\ncy 1\nrow 0 1 1 0 1\n", 2),
        ("bilinear 1 1 NonNegative 0\ncx 1\ncy 1\nrow 0 1 2 0 1\n", 4),
        ("bilinear 1 1 NonNegative 0\ncx 1\ncy 1\nrow 0 1 1 3 1\n", 4),
        ("bilinear 1 1 NonNegative 0\ncx 1\ncy 1\nrow 0 1 1 0 abc\n", 4),
        ("bilinear 2 1 NonNegative 0\ncx 1\ncy 1\nrow 0 1 1 0 1\n", 4),
    ],
)
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(InstanceFormatError) as err:
        parse_instance(io.StringIO(text).read().splitlines())
    assert err.value.lineno == line


def test_point_clipping():
    pt = PointXY(np.array([1.0 + 1e-10, -1e-10]), np.array([0.5, 0.5]))
    assert pt.x.tolist() == [1.0, 0.0]
    with pytest.raises(ValueError):
        PointXY(np.array([1.1]), np.array([0.5]))


def test_evaluate_row():
    row = BilinearRow(0, np.array([0, 2]), np.array([1.0, -2.0]), 0.25)
    pt = PointXY(np.array([0.5, 0.0, 1.0]), np.array([1.0, 0.0, 0.25]))
    assert evaluate_row(row, pt) == pytest.approx(0.5 - 0.5 - 0.25)


def test_row_validation():
    with pytest.raises(ValueError):
        BilinearRow(0, np.array([0, 0]), np.array([1.0, 1.0]), 1.0)
    with pytest.raises(ValueError):
        BilinearInstance(1, 1, np.ones(1), np.ones(1), (BilinearRow(0, np.array([3]), np.array([1.0]), 1.0),),
                         SignMode.NON_NEGATIVE, 0)
