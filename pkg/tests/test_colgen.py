import math

import numpy as np
import pytest

from blockprice.colgen import (
    BranchBound,
    Column,
    ColumnPool,
    DualPrices,
    InitialColumnsError,
    build_rmp_lp,
    column_from_pricing,
    init_columns,
    price_shared_column,
    solve_relaxed_mp,
)
from blockprice.expr import const, sqr, var
from blockprice.model import Block, InitialColumn, StructuredModel, validate_model
from blockprice.pricing import PricingResult, enumerate_feasible_designs
from blockprice.simplex import solve_lp


def int_block(p=1, lo=0, hi=3, objective=None, constraints=(), D=None, num_rows=1):
    return Block(
        D=np.ones((num_rows, p)) if D is None else np.asarray(D, float).reshape(num_rows, p),
        y_min=np.full(p, float(lo)),
        y_max=np.full(p, float(hi)),
        z_cont_min=[],
        z_cont_max=[],
        z_int_min=[],
        z_int_max=[],
        objective=sqr(var(0) - 2.0) if objective is None else objective,
        constraints=list(constraints),
    )


def two_block_model():
    """min (y1-2)^2 + (y2-1)^2 s.t. y1 + y2 >= 4, y in {0..3}^2 blockwise."""
    blocks = [
        int_block(objective=sqr(var(0) - 2.0)),
        int_block(objective=sqr(var(0) - 1.0)),
    ]
    m = StructuredModel(0, 0, [], np.zeros((1, 0)), [4.0], blocks=blocks)
    m.initial_columns = [InitialColumn(0, (3,), 1.0), InitialColumn(1, (3,), 4.0)]
    return validate_model(m)


def full_master_value(model, integer=False):
    """Oracle: LP (or MILP) over the fully enumerated column set."""
    pool = ColumnPool(model)
    for i, blk in enumerate(model.blocks):
        for design, cost in enumerate_feasible_designs(blk):
            pool.add(Column(i, design, cost))
    layout = build_rmp_lp(model, pool)
    if integer:
        from blockprice.simplex import solve_milp

        mask = np.zeros(layout.lp.num_vars, dtype=bool)
        mask[model.num_x :] = True
        return solve_milp(layout.lp, mask, gap=1e-12).objective
    return solve_lp(layout.lp).objective


def test_init_zero_dual_pricing():
    m = two_block_model()
    pool = init_columns(m, "zero-dual-pricing")
    col = pool.columns[(0, (2,))]
    assert col.cost == pytest.approx(0.0, abs=1e-9)


def test_init_singletons_and_missing_declaration():
    m = two_block_model()
    pool = init_columns(m, "singleton-designs")
    assert (0, (3,)) in pool.columns
    m2 = two_block_model()
    m2.initial_columns = None
    with pytest.raises(InitialColumnsError):
        init_columns(m2, "singleton-designs")


def test_init_error_when_no_feasible_design():
    blk = int_block(constraints=[const(1.0)])  # infeasible everywhere
    m = StructuredModel(0, 0, [], np.zeros((1, 0)), [0.0], blocks=[blk])
    validate_model(m)
    with pytest.raises(InitialColumnsError):
        init_columns(m, "zero-dual-pricing")


def test_rmp_shape_and_convexity_sense():
    m = two_block_model()
    pool = ColumnPool(m)
    pool.add(Column(0, (1,), 1.0))
    pool.add(Column(0, (2,), 0.0))
    layout = build_rmp_lp(m, pool)
    # x empty, 2 lambda columns; rows: 1 complicating + 2 convexity
    assert layout.lp.num_vars == 2
    assert layout.lp.num_rows == 3
    assert layout.lp.senses[1] == "="

    m.convexity = "at-most-one"
    layout2 = build_rmp_lp(m, pool)
    assert layout2.lp.senses[1] == "<="
    m.convexity = "equality"


def test_rmp_branch_bound_row():
    m = two_block_model()
    pool = ColumnPool(m)
    pool.add(Column(0, (1,), 1.0))
    pool.add(Column(0, (3,), 1.0))
    bb = BranchBound(0, 0, ">=", 2)
    layout = build_rmp_lp(m, pool, bounds=[bb])
    assert layout.lp.senses[-1] == ">="
    assert layout.lp.b[-1] == 2.0
    # only the (3,) column survives the bound filter, with coefficient 3
    assert layout.keys == [(0, (3,))]
    assert layout.lp.A[-1, 0] == 3.0


def test_column_from_pricing_cost():
    blk = int_block(objective=sqr(var(0)))
    duals = DualPrices(pi=np.array([2.0]), mu=np.zeros(1))
    res = PricingResult("optimal", np.array([1.0]), -1.0, -1.0)
    col = column_from_pricing(0, blk, res, duals)
    assert col.cost == pytest.approx(1.0)  # -1 + 2*1 + 0 = f(1) = 1
    res_bad = PricingResult("optimal", np.array([1.0]), 0.5, 0.5)
    with pytest.raises(ValueError):
        column_from_pricing(0, blk, res_bad, duals)


def test_colgen_reaches_enumeration_value():
    m = two_block_model()
    pool = init_columns(m, "singleton-designs")
    res = solve_relaxed_mp(m, pool, eps=1e-8)
    assert res.status == "optimal"
    oracle = full_master_value(m)
    assert res.objective == pytest.approx(oracle, abs=1e-6)
    assert res.lower <= oracle + 1e-6
    assert res.upper >= oracle - 1e-6


def test_colgen_trace_monotone_bounds():
    m = two_block_model()
    pool = init_columns(m, "singleton-designs")
    res = solve_relaxed_mp(m, pool, eps=1e-8, pricing_budget=1)
    ubs = [r.upper for r in res.trace]
    lbs = [r.lower for r in res.trace]
    assert all(b <= a + 1e-12 for a, b in zip(ubs, ubs[1:]))
    assert all(b >= a - 1e-12 for a, b in zip(lbs, lbs[1:]))


def test_zero_eps_pure_integer_closes_exactly():
    m = two_block_model()
    pool = init_columns(m, "singleton-designs")
    res = solve_relaxed_mp(m, pool, eps=0.0)
    assert res.status == "optimal"
    final = res.trace[-1]
    assert abs(final.sum_lower) <= 1e-9 * (1 + abs(final.v_rmp))


def test_initial_pool_already_optimal_one_round():
    # single block, no complicating rows: optimal column found at init
    blk = int_block(num_rows=0, objective=sqr(var(0) - 2.0))
    blk.D = np.zeros((0, 1))
    m = validate_model(StructuredModel(0, 0, [], np.zeros((0, 0)), [], blocks=[blk]))
    pool = init_columns(m, "zero-dual-pricing")
    res = solve_relaxed_mp(m, pool, eps=1e-8)
    assert res.status == "optimal"
    assert len(res.trace) == 1
    assert res.lower == pytest.approx(res.upper, abs=1e-9)


def test_adding_columns_never_raises_master_value():
    m = two_block_model()
    pool = init_columns(m, "singleton-designs")
    layout = build_rmp_lp(m, pool)
    v0 = solve_lp(layout.lp).objective
    pool.add(Column(0, (2,), 0.0))
    v1 = solve_lp(build_rmp_lp(m, pool).lp).objective
    assert v1 <= v0 + 1e-9


def test_early_prune_aborts():
    m = two_block_model()
    pool = init_columns(m, "singleton-designs")
    res = solve_relaxed_mp(m, pool, eps=1e-8, prune_threshold=-100.0)
    assert res.status == "pruned"


def test_infeasible_master_after_restoration_attempt():
    # complicating row demands y1 + y2 >= 9 but designs cap at 3 each
    blocks = [int_block(), int_block()]
    m = validate_model(StructuredModel(0, 0, [], np.zeros((1, 0)), [9.0], blocks=blocks))
    pool = ColumnPool(m)
    pool.add(Column(0, (3,), 1.0))
    pool.add(Column(1, (3,), 4.0))
    res = solve_relaxed_mp(m, pool, eps=1e-8)
    assert res.status == "infeasible"


def test_restoration_prices_missing_columns():
    # initial pool cannot satisfy y1 + y2 >= 4; repair must price better designs
    m = two_block_model()
    pool = ColumnPool(m)
    pool.add(Column(0, (0,), 4.0))
    pool.add(Column(1, (0,), 1.0))
    res = solve_relaxed_mp(m, pool, eps=1e-8)
    assert res.status == "optimal"
    assert res.objective == pytest.approx(full_master_value(m), abs=1e-6)


def shared_model(offsets=(1.0, 3.0)):
    """Scenario blocks sharing one design: min sum_i (y - o_i)^2, y in {0..4}."""
    blocks = [
        int_block(hi=4, num_rows=0, objective=sqr(var(0) - o), D=np.zeros((0, 1)))
        for o in offsets
    ]
    m = StructuredModel(
        0, 0, [], np.zeros((0, 0)), [], blocks=blocks, shared_design=True
    )
    return validate_model(m)


def test_shared_columns_priced_in_every_block():
    m = shared_model()
    pool = ColumnPool(m)
    costs, cuts = price_shared_column(pool, (2,))
    assert costs == {0: pytest.approx(1.0), 1: pytest.approx(1.0)}
    assert cuts == []
    assert pool.shared_designs() == [((2,), pytest.approx(2.0))]


def test_shared_identical_blocks_equal_costs():
    m = shared_model(offsets=(2.0, 2.0))
    pool = ColumnPool(m)
    costs, _ = price_shared_column(pool, (1,))
    assert costs[0] == pytest.approx(costs[1])


def test_shared_infeasible_block_marks_and_cuts():
    m = shared_model()
    # block 1 refuses designs below 2: g = 2 - y <= 0
    m.blocks[1].constraints.append(2.0 - var(0))
    pool = ColumnPool(m)
    costs, cuts = price_shared_column(pool, (1,))
    assert costs is None
    assert (1,) in pool.infeasible
    assert 1 in pool.infeasible[(1,)]
    assert len(cuts) == len(m.blocks)  # cut added to every subproblem
    # repeat is a no-op on the registry
    _, again = price_shared_column(pool, (1,))
    assert again == []


def test_shared_colgen_finds_compromise_design():
    m = shared_model(offsets=(1.0, 3.0))
    pool = init_columns(m, "zero-dual-pricing")
    res = solve_relaxed_mp(m, pool, eps=1e-8)
    assert res.status == "optimal"
    # best shared design: y=2 with total cost 2
    assert res.objective == pytest.approx(2.0, abs=1e-6)


def test_single_block_shared_reduces_to_plain_pricing():
    m = shared_model(offsets=(2.0,))
    pool = ColumnPool(m)
    costs, _ = price_shared_column(pool, (2,))
    assert costs == {0: pytest.approx(0.0)}
