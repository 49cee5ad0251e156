import numpy as np
import pytest

from blockprice.expr import (
    ExprDomainError,
    const,
    eval_expr,
    exp,
    log,
    powi,
    sqr,
    sqrt,
    var,
)
from blockprice.interval import Box, Interval, interval_eval, is_empty


def box(los, his, ints=None):
    n = len(los)
    return Box(los, his, [False] * n if ints is None else ints)


def test_sqr_primitive_over_sign_change():
    iv = interval_eval(sqr(var(0)), box([-1.0], [2.0]))
    assert iv.lo <= 0.0 <= iv.lo + 1e-12
    assert abs(iv.hi - 4.0) < 1e-9


def test_addition():
    iv = interval_eval(var(0) + var(1), box([1.0, 3.0], [2.0, 4.0]))
    assert iv.lo <= 4.0 <= 6.0 <= iv.hi
    assert iv.hi - iv.lo < 2.0 + 1e-9


def test_division_by_interval_containing_zero():
    iv = interval_eval(var(0) / var(1), box([1.0, -1.0], [2.0, 1.0]))
    assert is_empty(iv)


def test_log_whole_box_violation():
    assert is_empty(interval_eval(log(var(0)), box([-2.0], [-1.0])))
    # partial violation clips instead of failing
    iv = interval_eval(log(var(0)), box([-1.0], [4.0]))
    assert not is_empty(iv)
    assert iv.lo == -np.inf


def test_integer_tightening():
    b = Box([0.2], [2.9], [True])
    assert b.tighten_integers()
    assert b.lo[0] == 1.0 and b.hi[0] == 2.0
    empty = Box([1.2], [1.8], [True])
    assert not empty.tighten_integers()


@pytest.mark.parametrize("seed", range(5))
def test_enclosure_random(seed):
    """eval at any point of the box lands inside the interval enclosure."""
    rng = np.random.default_rng(seed)
    ops = ["add", "sub", "mul", "div", "sqr", "sqrt", "neg", "powi", "exp", "log"]
    for _ in range(200):
        n = rng.integers(1, 4)
        lo = rng.uniform(-3, 2, n)
        hi = lo + rng.uniform(0.01, 3, n)
        b = box(lo, hi)
        e = _random_expr(rng, n, ops, depth=3)
        iv = interval_eval(e, b)
        for _ in range(5):
            pt = rng.uniform(lo, hi)
            try:
                v = eval_expr(e, pt)
            except ExprDomainError:
                continue
            if is_empty(iv):
                # marker from a zero-straddling denominator; individual points
                # with nonzero denominators still evaluate
                continue
            assert iv.lo <= v <= iv.hi, (e, pt, iv, v)


def _random_expr(rng, n, ops, depth):
    if depth == 0 or rng.random() < 0.3:
        if rng.random() < 0.5:
            return var(int(rng.integers(0, n)))
        return const(float(rng.uniform(-2, 2)))
    op = ops[rng.integers(0, len(ops))]
    a = _random_expr(rng, n, ops, depth - 1)
    if op == "add":
        return a + _random_expr(rng, n, ops, depth - 1)
    if op == "sub":
        return a - _random_expr(rng, n, ops, depth - 1)
    if op == "mul":
        return a * _random_expr(rng, n, ops, depth - 1)
    if op == "div":
        return a / _random_expr(rng, n, ops, depth - 1)
    if op == "sqr":
        return sqr(a)
    if op == "sqrt":
        return sqrt(a)
    if op == "neg":
        return -a
    if op == "powi":
        return powi(a, int(rng.integers(-2, 4)))
    if op == "exp":
        return exp(a)
    return log(a)


def test_empty_marker_propagates():
    e = sqr(log(var(0)))
    assert is_empty(interval_eval(e, box([-2.0], [-1.0])))


def test_interval_invariants():
    iv = Interval(1.0, 2.0)
    assert iv.lo <= iv.hi
    assert is_empty(Interval(2.0, 1.0))
