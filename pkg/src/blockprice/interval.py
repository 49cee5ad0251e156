"""Interval arithmetic with outward rounding.

Every operation returns an enclosure of the exact pointwise results; one
ulp of outward rounding per operation keeps the enclosure property under
floating point. A whole-box domain violation (log of a non-positive
interval, division by an interval containing zero) is reported as the
EMPTY marker, which callers use to prune infeasible regions.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .expr import Expr

__all__ = ["Interval", "Box", "EMPTY", "is_empty", "interval_eval"]

_INF = math.inf


class Interval(NamedTuple):
    lo: float
    hi: float


# lo > hi marks the infeasible-domain result of an operation.
EMPTY = Interval(_INF, -_INF)


def is_empty(iv: Interval) -> bool:
    return iv.lo > iv.hi


def _out(lo: float, hi: float) -> Interval:
    """Widen one ulp outward so rounding never loses containment."""
    if lo > -_INF:
        lo = math.nextafter(lo, -_INF)
    if hi < _INF:
        hi = math.nextafter(hi, _INF)
    return Interval(lo, hi)


def iadd(a: Interval, b: Interval) -> Interval:
    return _out(a.lo + b.lo, a.hi + b.hi)


def isub(a: Interval, b: Interval) -> Interval:
    return _out(a.lo - b.hi, a.hi - b.lo)


def ineg(a: Interval) -> Interval:
    return Interval(-a.hi, -a.lo)


def imul(a: Interval, b: Interval) -> Interval:
    cands = (a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi)
    cands = [0.0 if math.isnan(v) else v for v in cands]  # 0 * inf at box corners
    return _out(min(cands), max(cands))


def idiv(a: Interval, b: Interval) -> Interval:
    if b.lo <= 0.0 <= b.hi:
        return EMPTY
    return imul(a, _out(1.0 / b.hi, 1.0 / b.lo))


def isqr(a: Interval) -> Interval:
    lo, hi = abs(a.lo), abs(a.hi)
    if lo > hi:
        lo, hi = hi, lo
    if a.lo <= 0.0 <= a.hi:
        lo = 0.0
    return _out(lo * lo, hi * hi)


def isqrt(a: Interval) -> Interval:
    if a.hi < 0.0:
        return EMPTY
    lo = max(a.lo, 0.0)
    return _out(math.sqrt(lo), math.sqrt(a.hi))


def ipowi(a: Interval, n: int) -> Interval:
    if n == 0:
        return Interval(1.0, 1.0)
    if n < 0:
        base = ipowi(a, -n)
        return idiv(Interval(1.0, 1.0), base)
    if n % 2 == 0:
        lo, hi = abs(a.lo), abs(a.hi)
        if lo > hi:
            lo, hi = hi, lo
        if a.lo <= 0.0 <= a.hi:
            lo = 0.0
        return _out(lo**n, hi**n)
    return _out(a.lo**n, a.hi**n)


def iexp(a: Interval) -> Interval:
    lo = math.exp(min(a.lo, 709.0))
    hi = _INF if a.hi > 709.0 else math.exp(a.hi)
    return _out(lo, hi)


def ilog(a: Interval) -> Interval:
    if a.hi <= 0.0:
        return EMPTY
    lo = -_INF if a.lo <= 0.0 else math.log(a.lo)
    return _out(lo, math.log(a.hi))


class Box:
    """Per-variable intervals with an integrality mask."""

    __slots__ = ("lo", "hi", "is_integer")

    def __init__(self, lo, hi, is_integer):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        self.is_integer = np.asarray(is_integer, dtype=bool)

    def __len__(self) -> int:
        return len(self.lo)

    def interval(self, j: int) -> Interval:
        return Interval(self.lo[j], self.hi[j])

    def widths(self) -> np.ndarray:
        return self.hi - self.lo

    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def tighten_integers(self) -> bool:
        """Snap integer bounds to the lattice; False if a dimension empties."""
        m = self.is_integer
        self.lo[m] = np.ceil(self.lo[m] - 1e-9)
        self.hi[m] = np.floor(self.hi[m] + 1e-9)
        return bool(np.all(self.lo <= self.hi + 1e-12))

    def copy(self) -> "Box":
        return Box(self.lo.copy(), self.hi.copy(), self.is_integer)

    def contains(self, point: np.ndarray, tol: float = 1e-9) -> bool:
        return bool(np.all(point >= self.lo - tol) and np.all(point <= self.hi + tol))


def interval_eval(expr: Expr, box: Box) -> Interval:
    """Enclosure of {eval_expr(expr, v) : v in box}; EMPTY on whole-box domain violation."""
    op = expr.op
    if op == "const":
        return Interval(expr.value, expr.value)
    if op == "var":
        return box.interval(expr.index)
    if op in ("add", "sub", "mul", "div"):
        a = interval_eval(expr.args[0], box)
        if is_empty(a):
            return EMPTY
        b = interval_eval(expr.args[1], box)
        if is_empty(b):
            return EMPTY
        if op == "add":
            return iadd(a, b)
        if op == "sub":
            return isub(a, b)
        if op == "mul":
            return imul(a, b)
        return idiv(a, b)
    a = interval_eval(expr.args[0], box)
    if is_empty(a):
        return EMPTY
    if op == "neg":
        return ineg(a)
    if op == "sqr":
        return isqr(a)
    if op == "sqrt":
        return isqrt(a)
    if op == "powi":
        return ipowi(a, expr.exponent)
    if op == "exp":
        return iexp(a)
    if op == "log":
        return ilog(a)
    raise AssertionError(op)
