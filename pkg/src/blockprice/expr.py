"""Expression trees for block objectives and constraints.

A small fixed algebra is enough for the supported problem families:
constants, variable references, the four arithmetic operations, negation,
square, square root, integer powers, exp, and log. Expressions are
immutable and reference block-local variables by integer index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "Expr",
    "ExprDomainError",
    "const",
    "var",
    "sqr",
    "sqrt",
    "powi",
    "exp",
    "log",
    "eval_expr",
    "max_var_index",
    "collect_vars",
    "shift_vars",
    "substitute",
    "expr_to_prefix",
    "expr_from_prefix",
]

_UNARY = {"neg", "sqr", "sqrt", "exp", "log"}
_BINARY = {"add", "sub", "mul", "div"}
_OPS = {"const", "var", "powi"} | _UNARY | _BINARY


class ExprDomainError(ValueError):
    """Evaluation left the domain: division by zero, log/sqrt of a negative."""


@dataclass(frozen=True)
class Expr:
    op: str
    args: tuple = ()
    value: float = 0.0
    index: int = -1
    exponent: int = 0

    def __post_init__(self):
        if self.op not in _OPS:
            raise ValueError(f"unknown expression op {self.op!r}")

    def __add__(self, other):
        return Expr("add", (self, _wrap(other)))

    def __radd__(self, other):
        return Expr("add", (_wrap(other), self))

    def __sub__(self, other):
        return Expr("sub", (self, _wrap(other)))

    def __rsub__(self, other):
        return Expr("sub", (_wrap(other), self))

    def __mul__(self, other):
        return Expr("mul", (self, _wrap(other)))

    def __rmul__(self, other):
        return Expr("mul", (_wrap(other), self))

    def __truediv__(self, other):
        return Expr("div", (self, _wrap(other)))

    def __rtruediv__(self, other):
        return Expr("div", (_wrap(other), self))

    def __neg__(self):
        return Expr("neg", (self,))


def _wrap(x) -> Expr:
    if isinstance(x, Expr):
        return x
    return const(float(x))


def const(value: float) -> Expr:
    return Expr("const", value=float(value))


def var(index: int) -> Expr:
    if index < 0:
        raise ValueError("variable index must be nonnegative")
    return Expr("var", index=index)


def sqr(e) -> Expr:
    return Expr("sqr", (_wrap(e),))


def sqrt(e) -> Expr:
    return Expr("sqrt", (_wrap(e),))


def powi(e, exponent: int) -> Expr:
    if exponent != int(exponent):
        raise ValueError("powi exponent must be an integer")
    return Expr("powi", (_wrap(e),), exponent=int(exponent))


def exp(e) -> Expr:
    return Expr("exp", (_wrap(e),))


def log(e) -> Expr:
    return Expr("log", (_wrap(e),))


def eval_expr(expr: Expr, assignment) -> float:
    """Evaluate ``expr`` at a point; raises ExprDomainError outside the domain."""
    try:
        val = _eval(expr, assignment)
    except OverflowError as err:
        raise ExprDomainError("numeric overflow during evaluation") from err
    if math.isnan(val):
        raise ExprDomainError("expression evaluated to NaN")
    return val


def _eval(e: Expr, x) -> float:
    op = e.op
    if op == "const":
        return e.value
    if op == "var":
        return float(x[e.index])
    if op == "add":
        return _eval(e.args[0], x) + _eval(e.args[1], x)
    if op == "sub":
        return _eval(e.args[0], x) - _eval(e.args[1], x)
    if op == "mul":
        return _eval(e.args[0], x) * _eval(e.args[1], x)
    if op == "div":
        den = _eval(e.args[1], x)
        if den == 0.0:
            raise ExprDomainError("division by zero")
        return _eval(e.args[0], x) / den
    if op == "neg":
        return -_eval(e.args[0], x)
    if op == "sqr":
        v = _eval(e.args[0], x)
        return v * v
    if op == "sqrt":
        v = _eval(e.args[0], x)
        if v < 0.0:
            raise ExprDomainError(f"sqrt of negative value {v}")
        return math.sqrt(v)
    if op == "powi":
        v = _eval(e.args[0], x)
        if e.exponent < 0 and v == 0.0:
            raise ExprDomainError("zero raised to a negative power")
        return v ** e.exponent
    if op == "exp":
        return math.exp(_eval(e.args[0], x))
    if op == "log":
        v = _eval(e.args[0], x)
        if v <= 0.0:
            raise ExprDomainError(f"log of non-positive value {v}")
        return math.log(v)
    raise AssertionError(op)


def max_var_index(expr: Expr) -> int:
    """Largest variable index referenced, or -1 for a constant expression."""
    if expr.op == "var":
        return expr.index
    if not expr.args:
        return -1
    return max(max_var_index(a) for a in expr.args)


def collect_vars(expr: Expr, into: set[int] | None = None) -> set[int]:
    """Set of variable indices referenced by the expression."""
    if into is None:
        into = set()
    if expr.op == "var":
        into.add(expr.index)
    for a in expr.args:
        collect_vars(a, into)
    return into


def shift_vars(expr: Expr, offset: int) -> Expr:
    """Rebuild the expression with every variable index shifted by ``offset``."""
    if expr.op == "var":
        return var(expr.index + offset)
    if not expr.args:
        return expr
    return Expr(
        expr.op,
        tuple(shift_vars(a, offset) for a in expr.args),
        value=expr.value,
        exponent=expr.exponent,
    )


def substitute(expr: Expr, replacements: dict[int, Expr]) -> Expr:
    """Replace variable references by expressions (used for closed-form z)."""
    if expr.op == "var":
        return replacements.get(expr.index, expr)
    if not expr.args:
        return expr
    return Expr(
        expr.op,
        tuple(substitute(a, replacements) for a in expr.args),
        value=expr.value,
        exponent=expr.exponent,
    )


def expr_to_prefix(expr: Expr, name_of) -> list:
    """Encode as a nested prefix list, e.g. ["sub", ["sqr", ["var", "y0"]], ["const", 4.0]]."""
    op = expr.op
    if op == "const":
        return ["const", expr.value]
    if op == "var":
        return ["var", name_of(expr.index)]
    if op == "powi":
        return ["powi", expr_to_prefix(expr.args[0], name_of), expr.exponent]
    return [op] + [expr_to_prefix(a, name_of) for a in expr.args]


def expr_from_prefix(data, index_of) -> Expr:
    """Decode the nested prefix list form; ``index_of`` maps variable names."""
    if not isinstance(data, list) or not data:
        raise ValueError(f"malformed expression node: {data!r}")
    op = data[0]
    if op == "const":
        return const(float(data[1]))
    if op == "var":
        return var(index_of(data[1]))
    if op == "powi":
        return powi(expr_from_prefix(data[1], index_of), int(data[2]))
    if op in _UNARY:
        if len(data) != 2:
            raise ValueError(f"{op} expects one argument")
        return Expr(op, (expr_from_prefix(data[1], index_of),))
    if op in _BINARY:
        if len(data) != 3:
            raise ValueError(f"{op} expects two arguments")
        return Expr(op, (expr_from_prefix(data[1], index_of), expr_from_prefix(data[2], index_of)))
    raise ValueError(f"unknown expression op {op!r}")
