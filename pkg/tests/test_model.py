import numpy as np
import pytest

from blockprice.expr import const, eval_expr, sqr, var
from blockprice.io import model_from_json, model_to_json
from blockprice.model import (
    Block,
    InitialColumn,
    ModelValidationError,
    StructuredModel,
    eval_flat_objective,
    flatten_fullspace,
    model_errors,
    validate_model,
)


def simple_block(num_rows=1, p=1, d=None):
    return Block(
        D=np.ones((num_rows, p)) if d is None else d,
        y_min=np.zeros(p),
        y_max=np.full(p, 3.0),
        z_cont_min=[],
        z_cont_max=[],
        z_int_min=[],
        z_int_max=[],
        objective=sqr(var(0)),
        constraints=[],
    )


def test_valid_single_block():
    m = StructuredModel(0, 0, [], np.zeros((0, 0)), [], blocks=[simple_block(0)])
    # no complicating rows: D must have 0 rows
    m.blocks[0].D = np.zeros((0, 1))
    assert validate_model(m) is m
    assert m.validated
    # idempotent
    assert validate_model(m) is m


def test_linking_row_mismatch():
    blk = simple_block(num_rows=2)
    m = StructuredModel(0, 0, [], np.zeros((1, 0)), [1.0], blocks=[blk])
    errors = model_errors(m)
    assert any("linking matrix row mismatch" in e for e in errors)
    with pytest.raises(ModelValidationError):
        validate_model(m)


def test_empty_y_box():
    blk = simple_block(num_rows=0)
    blk.y_min = np.array([2.0])
    blk.y_max = np.array([1.0])
    m = StructuredModel(0, 0, [], np.zeros((0, 0)), [], blocks=[blk])
    assert any("empty y box" in e for e in model_errors(m))


def test_dangling_variable_reference():
    blk = simple_block(num_rows=0)
    blk.objective = var(5)
    m = StructuredModel(0, 0, [], np.zeros((0, 0)), [], blocks=[blk])
    assert any("dangling" in e for e in model_errors(m))


def test_unbounded_z_rejected():
    blk = simple_block(num_rows=0)
    blk.z_cont_min = np.array([0.0])
    blk.z_cont_max = np.array([np.inf])
    m = StructuredModel(0, 0, [], np.zeros((0, 0)), [], blocks=[blk])
    assert any("unbounded z" in e for e in model_errors(m))


def two_block_model():
    blocks = [simple_block(num_rows=1), simple_block(num_rows=1)]
    return StructuredModel(0, 0, [], np.zeros((1, 0)), [1.0], blocks=blocks)


def test_flatten_dimensions_two_blocks():
    m = two_block_model()
    flat = flatten_fullspace(m)
    assert flat.num_vars == 2  # m + mbar + 2 block vars
    assert len(flat.constraints) == 0
    assert flat.row_coeffs.shape == (1, 2)
    assert flat.row_senses == [">="]


def test_flatten_nonanticipativity_rows():
    blocks = [simple_block(num_rows=0, p=2) for _ in range(3)]
    for b in blocks:
        b.D = np.zeros((0, 2))
    m = StructuredModel(0, 0, [], np.zeros((0, 0)), [], blocks=blocks, shared_design=True)
    flat = flatten_fullspace(m)
    eq_rows = [s for s in flat.row_senses if s == "="]
    assert len(eq_rows) == 2 * (3 - 1)


def test_flatten_objective_additivity():
    rng = np.random.default_rng(7)
    m = two_block_model()
    m.blocks[0].objective = sqr(var(0)) - 1.0
    m.blocks[1].objective = var(0) * 2.0
    flat = flatten_fullspace(m)
    for _ in range(20):
        pt = rng.uniform(0, 3, size=2)
        parts = sum(
            eval_expr(blk.objective, pt[i : i + 1]) for i, blk in enumerate(m.blocks)
        )
        assert abs(eval_flat_objective(flat, pt) - parts) < 1e-12


def test_json_round_trip_bit_identical():
    m = two_block_model()
    m.blocks[0].entity_weights = np.array([2.5])
    m.initial_columns = [InitialColumn(0, (1,), 1.0)]
    text = model_to_json(m)
    back = model_from_json(text)
    assert model_to_json(back) == text
    assert back.num_rows == 1
    assert back.initial_columns[0].design == (1,)


def test_json_with_z_and_closed_form():
    blk = Block(
        D=np.zeros((0, 1)),
        y_min=[0],
        y_max=[2],
        z_cont_min=[0.5],
        z_cont_max=[4.0],
        z_int_min=[0],
        z_int_max=[1],
        objective=var(1) + var(2) + const(0.0),
        constraints=[var(0) - var(2)],
        z_closed_form=[const(2.0)],
    )
    m = StructuredModel(0, 0, [], np.zeros((0, 0)), [], blocks=[blk])
    text = model_to_json(m)
    back = model_from_json(text)
    assert model_to_json(back) == text
    assert back.blocks[0].z_closed_form is not None


def test_at_most_one_requires_zero_design_in_box():
    blk = simple_block(num_rows=0)
    blk.y_min = np.array([1.0])
    m = StructuredModel(
        0, 0, [], np.zeros((0, 0)), [], blocks=[blk], convexity="at-most-one"
    )
    assert any("zero design" in e for e in model_errors(m))
