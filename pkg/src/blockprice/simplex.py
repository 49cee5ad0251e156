"""Bounded revised simplex and a small branch-and-bound MILP layer.

The solver targets desk-scale restricted masters: dense linear algebra,
explicit variable bounds (no bound rows), phase-1 artificials for the
initial basis, Dantzig pricing with a Bland fallback after prolonged
stalling. Row duals follow the minimization convention that >=-rows carry
nonnegative duals and <=-rows nonpositive ones, which is exactly what the
pricing step consumes.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["LinearProgram", "LpSolution", "solve_lp", "solve_milp", "dual_objective"]

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-10
MAX_ITER = 200_000

_INF = math.inf


@dataclass
class LinearProgram:
    """min c.x  s.t.  A x (sense) b,  lo <= x <= hi."""

    c: np.ndarray
    A: np.ndarray
    senses: list[str]
    b: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = len(self.c)
        self.b = np.atleast_1d(np.asarray(self.b, dtype=float))
        self.A = np.asarray(self.A, dtype=float).reshape(len(self.b), n)
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        if len(self.senses) != len(self.b):
            raise ValueError("sense count != row count")
        if any(s not in ("<=", ">=", "=") for s in self.senses):
            raise ValueError("row senses must be <=, >= or =")
        if len(self.lo) != n or len(self.hi) != n:
            raise ValueError("bound vectors must match the variable count")

    @classmethod
    def from_triples(cls, c, triples, senses, b, lo, hi) -> "LinearProgram":
        n = len(c)
        A = np.zeros((len(b), n))
        for r, j, v in triples:
            A[int(r), int(j)] += float(v)
        return cls(c, A, list(senses), b, lo, hi)

    @property
    def num_vars(self) -> int:
        return len(self.c)

    @property
    def num_rows(self) -> int:
        return len(self.b)


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    objective: float = math.nan
    reduced_costs: np.ndarray | None = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class _Tableau:
    """Working state shared by the two simplex phases."""

    def __init__(self, lp: LinearProgram):
        m, n = lp.num_rows, lp.num_vars
        self.m, self.n_struct = m, n
        # one slack per row; its bounds encode the row sense
        slack_lo = np.zeros(m)
        slack_hi = np.zeros(m)
        for i, s in enumerate(lp.senses):
            if s == "<=":
                slack_lo[i], slack_hi[i] = 0.0, _INF
            elif s == ">=":
                slack_lo[i], slack_hi[i] = -_INF, 0.0
            else:
                slack_lo[i], slack_hi[i] = 0.0, 0.0
        self.lo = np.concatenate([lp.lo, slack_lo, np.zeros(m)])
        self.hi = np.concatenate([lp.hi, slack_hi, np.full(m, _INF)])
        self.A = np.hstack([lp.A, np.eye(m), np.zeros((m, m))])
        self.b = lp.b.copy()
        self.n_total = n + 2 * m
        self.art = np.arange(n + m, n + 2 * m)

        # rest values for nonbasic variables: a finite bound, else 0
        rest = np.where(
            np.isfinite(self.lo),
            self.lo,
            np.where(np.isfinite(self.hi), self.hi, 0.0),
        )
        self.value = rest.copy()
        resid = self.b - self.A[:, : n + m] @ rest[: n + m]
        for i in range(m):
            self.A[i, n + m + i] = 1.0 if resid[i] >= 0.0 else -1.0
        self.value[self.art] = np.abs(resid)
        self.basis = self.art.copy()
        self.in_basis = np.zeros(self.n_total, dtype=bool)
        self.in_basis[self.basis] = True
        self.iterations = 0

    def solve_basis(self):
        B = self.A[:, self.basis]
        try:
            binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            binv = np.linalg.pinv(B)
        return binv

    def refresh_basics(self, binv) -> None:
        nb = ~self.in_basis
        rhs = self.b - self.A[:, nb] @ self.value[nb]
        self.value[self.basis] = binv @ rhs

    def run(self, cost: np.ndarray, allow: np.ndarray) -> str:
        """Minimize cost over allowed columns; returns 'optimal' or 'unbounded'."""
        m = self.m
        stall = 0
        last_obj = _INF
        while True:
            self.iterations += 1
            if self.iterations > MAX_ITER:
                raise RuntimeError("simplex iteration limit exceeded")
            binv = self.solve_basis()
            self.refresh_basics(binv)
            y = binv.T @ cost[self.basis]
            d = cost - self.A.T @ y

            obj = float(cost @ self.value)
            if obj < last_obj - 1e-12 * (1.0 + abs(last_obj)):
                stall = 0
                last_obj = obj
            else:
                stall += 1
            use_bland = stall > 10 * max(m, 1)

            nb = ~self.in_basis & allow
            can_up = nb & (self.value < self.hi - FEAS_TOL) & (d < -OPT_TOL)
            can_dn = nb & (self.value > self.lo + FEAS_TOL) & (d > OPT_TOL)
            cand = np.flatnonzero(can_up | can_dn)
            if cand.size == 0:
                return "optimal"
            if use_bland:
                e = int(cand[0])
            else:
                e = int(cand[np.argmax(np.abs(d[cand]))])
            direction = 1.0 if can_up[e] else -1.0

            w = binv @ self.A[:, e]
            delta = -direction * w
            t_limit = self.hi[e] - self.lo[e]  # bound flip distance
            t_best = t_limit if np.isfinite(t_limit) else _INF
            leave_pos = -1
            leave_to = 0.0
            for k in range(m):
                dk = delta[k]
                vk = self.basis[k]
                xk = self.value[vk]
                if dk > PIVOT_TOL:
                    cap = self.hi[vk]
                    t = (cap - xk) / dk if np.isfinite(cap) else _INF
                    bound = cap
                elif dk < -PIVOT_TOL:
                    cap = self.lo[vk]
                    t = (cap - xk) / dk if np.isfinite(cap) else _INF
                    bound = cap
                else:
                    continue
                t = max(t, 0.0)
                if t < t_best - 1e-12 or (
                    t < t_best + 1e-12
                    and leave_pos >= 0
                    and abs(dk) > abs(delta[leave_pos])
                ):
                    t_best = t
                    leave_pos = k
                    leave_to = bound
            if not np.isfinite(t_best):
                return "unbounded"

            if leave_pos < 0:
                # bound flip: entering moves across to its other bound
                self.value[e] = self.hi[e] if direction > 0 else self.lo[e]
                continue
            leaving = self.basis[leave_pos]
            self.value[e] = self.value[e] + direction * t_best
            self.value[leaving] = leave_to
            self.basis[leave_pos] = e
            self.in_basis[leaving] = False
            self.in_basis[e] = True


def solve_lp(lp: LinearProgram) -> LpSolution:
    """Two-phase bounded simplex; duals follow the >=-rows-nonnegative convention."""
    if np.any(lp.lo > lp.hi + 1e-12):
        return LpSolution(status="infeasible")
    tab = _Tableau(lp)
    m, n = tab.m, tab.n_struct

    phase1_cost = np.zeros(tab.n_total)
    phase1_cost[tab.art] = 1.0
    allow = np.ones(tab.n_total, dtype=bool)
    status = tab.run(phase1_cost, allow)
    infeas = float(np.sum(tab.value[tab.art]))
    if status != "optimal" or infeas > FEAS_TOL * (1.0 + float(np.abs(lp.b).sum())):
        return LpSolution(status="infeasible", iterations=tab.iterations)

    # lock artificials out of phase 2
    tab.lo[tab.art] = 0.0
    tab.hi[tab.art] = 0.0
    tab.value[tab.art] = 0.0

    phase2_cost = np.zeros(tab.n_total)
    phase2_cost[:n] = lp.c
    status = tab.run(phase2_cost, allow)
    if status == "unbounded":
        return LpSolution(status="unbounded", iterations=tab.iterations)

    binv = tab.solve_basis()
    tab.refresh_basics(binv)
    y = binv.T @ phase2_cost[tab.basis]
    d = phase2_cost - tab.A.T @ y
    x = tab.value[:n].copy()
    return LpSolution(
        status="optimal",
        x=x,
        duals=y.copy(),
        objective=float(lp.c @ x),
        reduced_costs=d[:n].copy(),
        iterations=tab.iterations,
    )


def dual_objective(lp: LinearProgram, sol: LpSolution) -> float:
    """Dual objective at an optimal solution, including finite-bound terms."""
    val = float(lp.b @ sol.duals)
    for j in range(lp.num_vars):
        dj = sol.reduced_costs[j]
        if dj > 0 and np.isfinite(lp.lo[j]):
            val += dj * lp.lo[j]
        elif dj < 0 and np.isfinite(lp.hi[j]):
            val += dj * lp.hi[j]
    return val


def solve_milp(
    lp: LinearProgram,
    integer_mask,
    gap: float = 1e-9,
    node_limit: int = 200_000,
) -> LpSolution:
    """Branch and bound over solve_lp; masked entries are forced integral.

    Returns a point integral on the mask with objective within ``gap``
    (relative) of the optimum over the given columns. Used for
    integer-restricted restricted masters, so only upper-bound quality
    matters to callers; duals are not returned.
    """
    mask = np.asarray(integer_mask, dtype=bool)
    if mask.shape != (lp.num_vars,):
        raise ValueError("integer mask length must match the variable count")
    root = solve_lp(lp)
    if not mask.any() or not root.optimal:
        return root

    best_x = None
    best_obj = _INF

    def cutoff() -> float:
        if not math.isfinite(best_obj):
            return _INF
        return best_obj - gap * max(1.0, abs(best_obj))

    counter = 0
    heap = [(root.objective, counter, lp.lo.copy(), lp.hi.copy(), root)]
    nodes = 0
    while heap:
        bound, _, lo, hi, sol = heapq.heappop(heap)
        if bound >= cutoff():
            break  # best-first: remaining nodes cannot improve
        nodes += 1
        if nodes > node_limit:
            raise RuntimeError("MILP node limit exceeded")
        frac = np.where(mask, np.abs(sol.x - np.round(sol.x)), 0.0)
        j = int(np.argmax(frac))
        if frac[j] <= 1e-9:
            xr = sol.x.copy()
            xr[mask] = np.round(xr[mask])
            obj = float(lp.c @ xr)
            if obj < best_obj - 1e-12:
                best_obj, best_x = obj, xr
            continue
        floor_j = math.floor(sol.x[j])
        for child_lo, child_hi in (
            (lo, _clip(hi, j, floor_j)),
            (_clip(lo, j, floor_j + 1), hi),
        ):
            if child_lo[j] > child_hi[j]:
                continue
            child = LinearProgram(lp.c, lp.A, lp.senses, lp.b, child_lo, child_hi)
            csol = solve_lp(child)
            if csol.optimal and csol.objective < cutoff():
                counter += 1
                heapq.heappush(heap, (csol.objective, counter, child_lo, child_hi, csol))

    if best_x is None:
        return LpSolution(status="infeasible")
    return LpSolution(status="optimal", x=best_x, objective=best_obj)


def _clip(bounds: np.ndarray, j: int, value: float) -> np.ndarray:
    out = bounds.copy()
    out[j] = value
    return out
