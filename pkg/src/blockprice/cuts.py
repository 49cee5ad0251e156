"""Infeasibility cuts appended to block pricing subproblems.

Two styles. "no-good" excludes exactly one design: the canonical linear
form for all-binary designs, and a quadratic lattice exclusion
``sum_j (y_j - ybar_j)^2 >= 1`` for general integer designs. The
"monotone-stage" style applies only when the instance declares monotone
feasibility in y (more capacity never hurts): auxiliary binaries force at
least one component to strictly exceed the infeasible design's count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .expr import Expr, const, sqr, var
from .model import Block

__all__ = ["CutRecord", "add_infeasibility_cut"]


@dataclass
class CutRecord:
    """Inspectable summary of one cut: linear rows as name->coeff maps."""

    style: str
    design: tuple[int, ...]
    rows: list[tuple[dict[str, float], str, float]] = field(default_factory=list)
    aux_added: int = 0


def _is_binary(block: Block) -> bool:
    return bool(np.all(block.y_min == 0.0) and np.all(block.y_max == 1.0))


def add_infeasibility_cut(
    block: Block, design, style: str = "no-good"
) -> tuple[Block, CutRecord]:
    """Return a new block with the cut appended, plus its record.

    Deduplication lives with the column pool, which tracks which designs
    already carry cuts per block; this function always appends.
    """
    design = tuple(int(v) for v in design)
    if len(design) != block.p:
        raise ValueError("design length does not match the block")
    if style == "no-good":
        return _no_good(block, design)
    if style == "monotone-stage":
        if not block.monotone_feasible:
            raise ValueError("monotone-stage cut requires the monotone feasibility declaration")
        return _monotone_stage(block, design)
    raise ValueError(f"unknown cut style {style!r}")


def _no_good(block: Block, design) -> tuple[Block, CutRecord]:
    if _is_binary(block):
        # sum_{j: ybar=1}(1 - y_j) + sum_{j: ybar=0} y_j >= 1
        expr: Expr = const(-1.0)
        coeffs: dict[str, float] = {}
        rhs = 1.0
        for j, yj in enumerate(design):
            if yj == 1:
                expr = expr + (1.0 - var(j))
                coeffs[f"y{j}"] = -1.0
                rhs -= 1.0
            else:
                expr = expr + var(j)
                coeffs[f"y{j}"] = 1.0
        record = CutRecord("no-good", design, rows=[(coeffs, ">=", rhs)])
        cut = -expr  # expr >= 0 in <= 0 orientation
    else:
        # integer lattice exclusion: sum (y_j - ybar_j)^2 >= 1
        dist: Expr = const(0.0)
        for j, yj in enumerate(design):
            dist = dist + sqr(var(j) - float(yj))
        cut = 1.0 - dist
        record = CutRecord("no-good", design, rows=[])
    new_block = _with_extra(block, [cut], aux=0)
    return new_block, record


def _monotone_stage(block: Block, design) -> tuple[Block, CutRecord]:
    """N_j + M_j z_j >= N^inf_j + 1 per stage, sum_j z_j <= |J| - 1.

    M_j equals the infeasible count whenever the stage lower bound is at
    least one unit (the relaxation then deactivates the row at z_j = 1);
    otherwise it is enlarged just enough to stay valid.
    """
    p = block.p
    aux_base = block.q_int  # names continue the integer-z sequence
    rows = []
    exprs: list[Expr] = []
    sum_aux: Expr = const(0.0)
    sum_coeffs: dict[str, float] = {}
    for j, n_inf in enumerate(design):
        m_j = float(max(n_inf, n_inf + 1 - int(block.y_min[j])))
        aux = var(p + block.q + aux_base + j)
        # (n_inf + 1) - y_j - m_j z_j <= 0
        exprs.append(const(float(n_inf + 1)) - var(j) - m_j * aux)
        rows.append(({f"y{j}": 1.0, f"w{aux_base + j}": m_j}, ">=", float(n_inf + 1)))
        sum_aux = sum_aux + aux
        sum_coeffs[f"w{aux_base + j}"] = 1.0
    exprs.append(sum_aux - float(p - 1))
    rows.append((sum_coeffs, "<=", float(p - 1)))
    record = CutRecord("monotone-stage", design, rows=rows, aux_added=p)
    return _with_extra(block, exprs, aux=p), record


def _with_extra(block: Block, new_constraints: list[Expr], aux: int) -> Block:
    return Block(
        D=block.D,
        y_min=block.y_min,
        y_max=block.y_max,
        z_cont_min=block.z_cont_min,
        z_cont_max=block.z_cont_max,
        z_int_min=np.concatenate([block.z_int_min, np.zeros(aux)]),
        z_int_max=np.concatenate([block.z_int_max, np.ones(aux)]),
        objective=block.objective,
        constraints=list(block.constraints) + new_constraints,
        entity_weights=block.entity_weights,
        monotone_feasible=block.monotone_feasible,
        z_closed_form=block.z_closed_form,
    )
