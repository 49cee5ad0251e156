import math

import numpy as np
import pytest

from blockprice.expr import (
    Expr,
    ExprDomainError,
    const,
    eval_expr,
    exp,
    expr_from_prefix,
    expr_to_prefix,
    log,
    max_var_index,
    powi,
    shift_vars,
    sqr,
    sqrt,
    substitute,
    var,
)


def test_sqr_of_negative():
    assert eval_expr(sqr(var(0)), [-2.0]) == 4.0


def test_product_minus_constant():
    e = var(0) * var(1) - 3.0
    assert eval_expr(e, [2.0, 5.0]) == 7.0


def test_log_domain_error():
    with pytest.raises(ExprDomainError):
        eval_expr(log(var(0)), [0.0])


def test_sqrt_domain_error():
    with pytest.raises(ExprDomainError):
        eval_expr(sqrt(const(-1.0)), [])


def test_division_by_zero():
    with pytest.raises(ExprDomainError):
        eval_expr(var(0) / var(1), [1.0, 0.0])


def test_operator_building():
    e = (2.0 * var(0) + 1.0) / (var(1) - 0.5)
    assert eval_expr(e, [1.0, 1.5]) == 3.0
    assert eval_expr(-var(0), [4.0]) == -4.0
    assert eval_expr(1.0 - var(0), [4.0]) == -3.0


def test_powi_and_exp():
    assert eval_expr(powi(var(0), 3), [2.0]) == 8.0
    assert eval_expr(powi(var(0), -2), [2.0]) == 0.25
    assert eval_expr(exp(const(0.0)), []) == 1.0
    with pytest.raises(ExprDomainError):
        eval_expr(powi(var(0), -1), [0.0])


def test_max_var_index_and_shift():
    e = sqr(var(2)) + var(0)
    assert max_var_index(e) == 2
    assert max_var_index(const(1.0)) == -1
    shifted = shift_vars(e, 5)
    assert max_var_index(shifted) == 7
    assert eval_expr(shifted, [0] * 5 + [1.0, 0, 3.0]) == 10.0


def test_substitute():
    e = sqr(var(1)) + var(0)
    closed = substitute(e, {1: const(3.0)})
    assert eval_expr(closed, [2.0, 99.0]) == 11.0


def test_prefix_round_trip():
    names = {0: "y0", 1: "z0"}
    index = {"y0": 0, "z0": 1}
    e = sqr(var(0)) - 4.0 + powi(var(1), 3) / 2.0
    data = expr_to_prefix(e, names.__getitem__)
    back = expr_from_prefix(data, index.__getitem__)
    rng = np.random.default_rng(0)
    for _ in range(20):
        pt = rng.uniform(-3, 3, size=2)
        assert eval_expr(back, pt) == eval_expr(e, pt)


def test_prefix_matches_documented_shape():
    e = sqr(var(0)) - 4.0
    data = expr_to_prefix(e, lambda i: f"y{i}")
    assert data == ["sub", ["sqr", ["var", "y0"]], ["const", 4.0]]


def test_unknown_op_rejected():
    with pytest.raises(ValueError):
        Expr("cos", (const(1.0),))
    with pytest.raises(ValueError):
        expr_from_prefix(["cos", ["const", 1.0]], lambda n: 0)


def test_nan_propagation_is_error():
    # inf - inf inside the tree surfaces as a domain error, not NaN
    big = exp(const(710.0))
    with pytest.raises((ExprDomainError, OverflowError)):
        eval_expr(big - big, [])
