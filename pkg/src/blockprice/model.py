"""Block-structured MINLP instances.

A model couples a linear part (shared variables x, linking rows
``A x + sum_i D_i y_i >= b``) with independent nonlinear blocks. Each block
owns integer design variables y (finite bounds), optional continuous and
integer inner variables z (finite boxes, required by the interval solver),
a nonlinear objective, and nonlinear constraints normalized to ``g <= 0``.

Models are treated as immutable once validated and may be shared freely
across pricing workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .expr import Expr, const, eval_expr, max_var_index, shift_vars

__all__ = [
    "Block",
    "StructuredModel",
    "InitialColumn",
    "MonolithicMinlp",
    "ModelValidationError",
    "validate_model",
    "model_errors",
    "flatten_fullspace",
]

CONVEXITY_SENSES = ("equality", "at-most-one")


class ModelValidationError(ValueError):
    """Raised by validate_model; carries every violated invariant."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class InitialColumn(NamedTuple):
    block: int
    design: tuple[int, ...]
    cost: float


@dataclass
class Block:
    """One nonlinear block: design variables y, inner variables z, g <= 0.

    Variable indexing inside expressions: y occupies [0, p), continuous z
    occupies [p, p+q), integer z occupies [p+q, p+q+q_int).
    """

    D: np.ndarray
    y_min: np.ndarray
    y_max: np.ndarray
    z_cont_min: np.ndarray
    z_cont_max: np.ndarray
    z_int_min: np.ndarray
    z_int_max: np.ndarray
    objective: Expr
    constraints: list[Expr] = field(default_factory=list)
    entity_weights: np.ndarray | None = None
    monotone_feasible: bool = False
    z_closed_form: list[Expr] | None = None

    def __post_init__(self):
        self.D = np.atleast_2d(np.asarray(self.D, dtype=float))
        self.y_min = np.asarray(self.y_min, dtype=float)
        self.y_max = np.asarray(self.y_max, dtype=float)
        self.z_cont_min = np.asarray(self.z_cont_min, dtype=float)
        self.z_cont_max = np.asarray(self.z_cont_max, dtype=float)
        self.z_int_min = np.asarray(self.z_int_min, dtype=float)
        self.z_int_max = np.asarray(self.z_int_max, dtype=float)
        if self.entity_weights is not None:
            self.entity_weights = np.asarray(self.entity_weights, dtype=float)

    @property
    def p(self) -> int:
        return len(self.y_min)

    @property
    def q(self) -> int:
        return len(self.z_cont_min)

    @property
    def q_int(self) -> int:
        return len(self.z_int_min)

    @property
    def num_vars(self) -> int:
        return self.p + self.q + self.q_int

    def lower(self) -> np.ndarray:
        return np.concatenate([self.y_min, self.z_cont_min, self.z_int_min])

    def upper(self) -> np.ndarray:
        return np.concatenate([self.y_max, self.z_cont_max, self.z_int_max])

    def integer_mask(self) -> np.ndarray:
        mask = np.zeros(self.num_vars, dtype=bool)
        mask[: self.p] = True
        mask[self.p + self.q :] = True
        return mask

    def var_name(self, j: int) -> str:
        if j < self.p:
            return f"y{j}"
        if j < self.p + self.q:
            return f"z{j - self.p}"
        return f"w{j - self.p - self.q}"


@dataclass
class StructuredModel:
    """Linear part plus nonlinear blocks; see module docstring.

    ``convexity`` controls the selection rule per block in the column
    formulation: "equality" selects exactly one design per block,
    "at-most-one" additionally allows the empty (all-zero, zero-cost)
    design without a column. ``shared_design`` marks instances whose
    blocks are scenario copies of one design space that must all receive
    the same design.
    """

    num_x_cont: int
    num_x_int: int
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    blocks: list[Block] = field(default_factory=list)
    convexity: str = "equality"
    shared_design: bool = False
    initial_columns: list[InitialColumn] | None = None
    validated: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        nx = self.num_x_cont + self.num_x_int
        self.A = np.asarray(self.A, dtype=float).reshape(-1, nx) if nx else np.zeros(
            (len(np.atleast_1d(self.b)), 0)
        )
        self.b = np.atleast_1d(np.asarray(self.b, dtype=float))

    @property
    def num_x(self) -> int:
        return self.num_x_cont + self.num_x_int

    @property
    def num_rows(self) -> int:
        return len(self.b)


def _check_expr(e: Expr, limit: int, where: str, errors: list[str], box=None) -> None:
    if max_var_index(e) >= limit:
        errors.append(f"{where}: dangling variable reference (index >= {limit})")
    _walk_expr(e, where, errors, box)


def _walk_expr(e: Expr, where: str, errors: list[str], box) -> None:
    # Denominators (and bases of negative powers) must be sign-definite over
    # the block box, so the interval solver may prune on its domain marker.
    if e.op == "div" or (e.op == "powi" and e.exponent < 0):
        den = e.args[1] if e.op == "div" else e.args[0]
        if den.op == "const":
            if den.value == 0.0:
                errors.append(f"{where}: division by constant zero")
        elif box is not None and max_var_index(den) < len(box.lo):
            from .interval import interval_eval, is_empty

            iv = interval_eval(den, box)
            if is_empty(iv) or iv.lo <= 0.0 <= iv.hi:
                errors.append(f"{where}: denominator may vanish inside the variable box")
    for a in e.args:
        _walk_expr(a, where, errors, box)


def model_errors(model: StructuredModel) -> list[str]:
    """Collect every violated invariant (empty list means valid)."""
    errors: list[str] = []
    nx = model.num_x
    if len(model.c) != nx:
        errors.append(f"cost vector length {len(model.c)} != x dimension {nx}")
    if model.A.shape != (model.num_rows, nx):
        errors.append(
            f"linking matrix shape {model.A.shape} != ({model.num_rows}, {nx})"
        )
    if model.convexity not in CONVEXITY_SENSES:
        errors.append(f"unknown convexity sense {model.convexity!r}")
    if not model.blocks:
        errors.append("model has no blocks")

    for i, blk in enumerate(model.blocks):
        tag = f"block {i}"
        if blk.D.shape[1] != blk.p and blk.p > 0:
            errors.append(f"{tag}: linking matrix column count {blk.D.shape[1]} != p={blk.p}")
        if blk.D.shape[0] != model.num_rows:
            errors.append(f"{tag}: linking matrix row mismatch")
        if np.any(blk.y_min > blk.y_max):
            errors.append(f"{tag}: empty y box")
        for name, lo, hi in (
            ("y", blk.y_min, blk.y_max),
            ("z", blk.z_cont_min, blk.z_cont_max),
            ("w", blk.z_int_min, blk.z_int_max),
        ):
            if lo.size and not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
                errors.append(f"{tag}: unbounded {name} variables")
        if blk.z_cont_min.size and np.any(blk.z_cont_min > blk.z_cont_max):
            errors.append(f"{tag}: empty z box")
        if blk.z_int_min.size and np.any(blk.z_int_min > blk.z_int_max):
            errors.append(f"{tag}: empty integer z box")
        from .interval import Box

        box = Box(blk.lower(), blk.upper(), blk.integer_mask())
        if not (np.all(np.isfinite(box.lo)) and np.all(np.isfinite(box.hi))) or np.any(
            box.lo > box.hi
        ):
            box = None
        _check_expr(blk.objective, blk.num_vars, f"{tag} objective", errors, box)
        for k, g in enumerate(blk.constraints):
            _check_expr(g, blk.num_vars, f"{tag} constraint {k}", errors, box)
        if blk.z_closed_form is not None:
            if len(blk.z_closed_form) != blk.q:
                errors.append(f"{tag}: closed form must cover all {blk.q} continuous z")
            for k, e in enumerate(blk.z_closed_form):
                _check_expr(e, blk.p, f"{tag} closed form {k}", errors)
        if blk.entity_weights is not None and len(blk.entity_weights) != blk.p:
            errors.append(f"{tag}: entity weight length != p")

    if model.shared_design and model.blocks:
        first = model.blocks[0]
        for i, blk in enumerate(model.blocks[1:], start=1):
            if blk.p != first.p or blk.D.shape != first.D.shape:
                errors.append(f"block {i}: shared-design blocks must have identical design shape")
            elif np.any(blk.y_min != first.y_min) or np.any(blk.y_max != first.y_max):
                errors.append(f"block {i}: shared-design blocks must have identical y bounds")

    if model.convexity == "at-most-one":
        for i, blk in enumerate(model.blocks):
            if np.any(blk.y_min > 0) or np.any(blk.y_max < 0):
                errors.append(
                    f"block {i}: at-most-one convexity requires the zero design inside the y box"
                )

    if model.initial_columns:
        for col in model.initial_columns:
            if not (0 <= col.block < len(model.blocks)):
                errors.append(f"initial column references unknown block {col.block}")
            else:
                blk = model.blocks[col.block]
                y = np.asarray(col.design, dtype=float)
                if len(y) != blk.p or np.any(y < blk.y_min) or np.any(y > blk.y_max):
                    errors.append(f"initial column design {col.design} outside block {col.block} bounds")
    return errors


def validate_model(model: StructuredModel) -> StructuredModel:
    """Return the model marked valid, or raise ModelValidationError with all violations.

    Idempotent: a model that already passed validation is returned unchanged.
    """
    if model.validated:
        return model
    errors = model_errors(model)
    if errors:
        raise ModelValidationError(errors)
    model.validated = True
    return model


@dataclass
class MonolithicMinlp:
    """The undecomposed problem over one flat variable vector.

    Flat layout: x first (continuous then integer), then per block
    (y, continuous z, integer z). The flat objective is
    ``c . x_part + objective(flat vars)``; rows carry the linking
    constraints plus, in shared-design mode, the equalities tying all
    block designs to block 0's.
    """

    num_x: int
    lower: np.ndarray
    upper: np.ndarray
    is_integer: np.ndarray
    c: np.ndarray
    objective: Expr
    constraints: list[Expr]
    row_coeffs: np.ndarray
    row_senses: list[str]
    row_rhs: np.ndarray
    block_offsets: list[int]
    var_names: list[str]

    @property
    def num_vars(self) -> int:
        return len(self.lower)


def flatten_fullspace(model: StructuredModel) -> MonolithicMinlp:
    """Assemble the full-space problem the decomposition is equivalent to."""
    validate_model(model)
    nx = model.num_x
    lower = [np.zeros(nx)]
    upper = [np.full(nx, np.inf)]
    is_int = [np.concatenate([np.zeros(model.num_x_cont, bool), np.ones(model.num_x_int, bool)])]
    names = [f"x{j}" for j in range(nx)]

    offsets = []
    pos = nx
    objective: Expr = const(0.0)
    constraints: list[Expr] = []
    for i, blk in enumerate(model.blocks):
        offsets.append(pos)
        lower.append(blk.lower())
        upper.append(blk.upper())
        is_int.append(blk.integer_mask())
        names.extend(f"b{i}.{blk.var_name(j)}" for j in range(blk.num_vars))
        objective = objective + shift_vars(blk.objective, pos)
        constraints.extend(shift_vars(g, pos) for g in blk.constraints)
        pos += blk.num_vars

    num_vars = pos
    rows = []
    senses = []
    rhs = []
    for r in range(model.num_rows):
        coeffs = np.zeros(num_vars)
        coeffs[:nx] = model.A[r]
        for i, blk in enumerate(model.blocks):
            coeffs[offsets[i] : offsets[i] + blk.p] = blk.D[r]
        rows.append(coeffs)
        senses.append(">=")
        rhs.append(model.b[r])

    if model.shared_design:
        base = model.blocks[0]
        for i in range(1, len(model.blocks)):
            for j in range(base.p):
                coeffs = np.zeros(num_vars)
                coeffs[offsets[i] + j] = 1.0
                coeffs[offsets[0] + j] = -1.0
                rows.append(coeffs)
                senses.append("=")
                rhs.append(0.0)

    c = np.zeros(num_vars)
    c[:nx] = model.c
    return MonolithicMinlp(
        num_x=nx,
        lower=np.concatenate(lower) if lower else np.zeros(0),
        upper=np.concatenate(upper) if upper else np.zeros(0),
        is_integer=np.concatenate(is_int),
        c=c,
        objective=objective,
        constraints=constraints,
        row_coeffs=np.array(rows).reshape(len(rows), num_vars),
        row_senses=senses,
        row_rhs=np.asarray(rhs, dtype=float),
        block_offsets=offsets,
        var_names=names,
    )


def eval_flat_objective(flat: MonolithicMinlp, point: np.ndarray) -> float:
    """Objective of the flattened problem at a flat point."""
    return float(flat.c @ point) + eval_expr(flat.objective, point)
