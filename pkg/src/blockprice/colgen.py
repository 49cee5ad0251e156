"""Column generation for the relaxed master problem.

One iteration solves the restricted master LP, prices every block with the
resulting duals, adds every column whose reduced-cost upper bound is
negative, and tightens the bound sandwich

    v_rmp + sum_i l_i  <=  v_master  <=  v_rmp,

where l_i is each block's proven reduced-cost lower bound (clipped at zero
per block when the selection rule is at-most-one, whose convexity dual
cannot absorb positive reduced costs). Pricing runs in budget mode first
and escalates to exact mode once no budget-mode column prices negative,
so early termination of the subproblem solver never invalidates bounds.

Shared-design (non-anticipativity) instances keep a single set of columns:
each scenario prices independently with an equal share of the convexity
dual, proposals are re-priced in every scenario with the design fixed, and
scenario-infeasible proposals land in the infeasible set with a cut added
to every pricing subproblem. A joint pricing problem over all scenarios
closes the bound exactly when per-scenario proposals dry up.

An infeasible restricted master is repaired before it is declared
infeasible: phase-1 duals of the artificial-slack master price columns
that reduce the total row violation, and only a priced certificate that no
column helps declares the node infeasible.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .cuts import CutRecord, add_infeasibility_cut
from .expr import Expr, const, var
from .model import Block, StructuredModel
from .pricing import (
    PricingResult,
    block_cost_for_design,
    linear_prices,
    merge_shared_blocks,
    solve_pricing,
)
from .simplex import LinearProgram, solve_lp

__all__ = [
    "Column",
    "DualPrices",
    "BranchBound",
    "ColumnPool",
    "RelaxedMpResult",
    "InitialColumnsError",
    "init_columns",
    "build_rmp_lp",
    "column_from_pricing",
    "solve_relaxed_mp",
    "price_shared_column",
]

_INF = math.inf
ADD_TOL = 1e-9  # a column is added if u < -ADD_TOL
GAP_FLOOR = 1e-9  # floating-point floor on the colgen termination test


class BranchBound(NamedTuple):
    """One branching restriction on an original design variable."""

    block: int
    comp: int
    sense: str  # '<=' or '>='
    value: int


@dataclass
class Column:
    block: int
    design: tuple[int, ...]
    cost: float
    provenance: str = "priced"  # initial | priced | shared-repriced
    feasible: bool = True


@dataclass
class DualPrices:
    pi: np.ndarray
    mu: np.ndarray  # one per block (shared mode: the single value split equally)
    branch: dict[int, np.ndarray] = field(default_factory=dict)  # block -> extra y prices


class InitialColumnsError(RuntimeError):
    """The initial pool cannot make the restricted master feasible."""


class ColumnPool:
    """Global pool of feasible columns plus the shared-mode infeasible set.

    Blocks are carried here as working copies so infeasibility cuts can be
    appended without touching the validated model.
    """

    def __init__(self, model: StructuredModel):
        self.model = model
        self.shared = model.shared_design
        self.columns: dict[tuple[int, tuple], Column] = {}
        self.infeasible: dict[tuple, set[int]] = {}
        self.cut_designs: dict[int, set[tuple]] = {i: set() for i in range(len(model.blocks))}
        self.cut_records: list[CutRecord] = []
        self.blocks: list[Block] = list(model.blocks)

    def add(self, column: Column) -> bool:
        """Insert or improve; costs are upper bounds, so the minimum is kept."""
        if not column.feasible:
            self.infeasible.setdefault(column.design, set()).add(column.block)
            return False
        key = (column.block, column.design)
        old = self.columns.get(key)
        if old is None:
            self.columns[key] = column
            return True
        if column.cost < old.cost - 1e-12:
            old.cost = column.cost
            return True
        return False

    def for_block(self, i: int) -> list[Column]:
        return [c for (b, _), c in self.columns.items() if b == i]

    def block_infeasible(self, design: tuple) -> bool:
        return design in self.infeasible

    def shared_designs(self) -> list[tuple[tuple, float]]:
        """Designs feasible in every block, with their summed cost."""
        n = len(self.blocks)
        seen: dict[tuple, list[float]] = {}
        for (b, d), col in self.columns.items():
            seen.setdefault(d, [math.nan] * n)[b] = col.cost
        out = []
        for d, costs in seen.items():
            if d not in self.infeasible and not any(math.isnan(v) for v in costs):
                out.append((d, float(sum(costs))))
        return out

    def register_cut(self, design: tuple, style: str) -> list[CutRecord]:
        """Append the cut to every block's pricing subproblem, once per design."""
        records = []
        for i, blk in enumerate(self.blocks):
            if design in self.cut_designs[i]:
                continue
            new_block, record = add_infeasibility_cut(blk, design, style)
            self.blocks[i] = new_block
            self.cut_designs[i].add(design)
            self.cut_records.append(record)
            records.append(record)
        return records

    def total_columns(self) -> int:
        if self.shared:
            return len({d for (_, d) in self.columns}) + len(self.infeasible)
        return len(self.columns)


# -- node bound helpers -------------------------------------------------------


def node_y_bounds(model: StructuredModel, bounds, block: int):
    """Block design bounds tightened by a node's branching restrictions."""
    blk = model.blocks[block]
    lo = blk.y_min.copy()
    hi = blk.y_max.copy()
    for bb in bounds:
        if bb.block != block and not model.shared_design:
            continue
        if bb.sense == ">=":
            lo[bb.comp] = max(lo[bb.comp], bb.value)
        else:
            hi[bb.comp] = min(hi[bb.comp], bb.value)
    return lo, hi


def design_satisfies(design: tuple, bounds, block: int, shared: bool) -> bool:
    for bb in bounds:
        if bb.block != block and not shared:
            continue
        v = design[bb.comp]
        if bb.sense == ">=" and v < bb.value:
            return False
        if bb.sense == "<=" and v > bb.value:
            return False
    return True


def eligible_keys(pool: ColumnPool, bounds=(), excluded=frozenset()):
    """Column keys admitted at a node: inside its bounds, not excluded there."""
    if pool.shared:
        keys = []
        for d, cost in pool.shared_designs():
            if design_satisfies(d, bounds, 0, True) and d not in excluded:
                keys.append((d, cost))
        return keys
    keys = []
    for (b, d), col in pool.columns.items():
        if design_satisfies(d, bounds, b, False) and (b, d) not in excluded:
            keys.append(((b, d), col.cost))
    return keys


# -- restricted master construction -------------------------------------------


class RmpLayout(NamedTuple):
    lp: LinearProgram
    keys: list  # per lambda column: (block, design) or design in shared mode
    num_rows: int  # complicating rows
    conv_rows: int  # number of convexity rows
    branch_bounds: list


def build_rmp_lp(
    model: StructuredModel,
    pool: ColumnPool,
    bounds=(),
    excluded=frozenset(),
    *,
    phase1: bool = False,
) -> RmpLayout:
    """Assemble the restricted master LP for a node.

    Columns: x first, one lambda in [0, 1] per eligible column. Rows:
    complicating rows, one convexity row per block (a single one in shared
    mode), then one row per node branching bound over the aggregated
    originals. ``phase1`` swaps costs for artificial row slacks to measure
    infeasibility (used by the repair loop).
    """
    entries = eligible_keys(pool, bounds, excluded)
    keys = [k for k, _ in entries]
    costs = np.array([c for _, c in entries]) if entries else np.zeros(0)
    nx = model.num_x
    nlam = len(keys)
    bounds = list(bounds)

    conv_rows = 1 if pool.shared else len(model.blocks)
    nrows = model.num_rows + conv_rows + len(bounds)
    ncols = nx + nlam
    A = np.zeros((nrows, ncols))
    senses: list[str] = []
    b = np.zeros(nrows)

    A[: model.num_rows, :nx] = model.A
    for r in range(model.num_rows):
        senses.append(">=")
        b[r] = model.b[r]
    for k, key in enumerate(keys):
        col = nx + k
        if pool.shared:
            design = np.asarray(key, dtype=float)
            for r in range(model.num_rows):
                A[r, col] = sum(float(blk.D[r] @ design) for blk in model.blocks)
        else:
            blk_i, design = key
            design = np.asarray(design, dtype=float)
            for r in range(model.num_rows):
                A[r, col] = float(model.blocks[blk_i].D[r] @ design)

    conv_sense = "=" if model.convexity == "equality" else "<="
    for i in range(conv_rows):
        r = model.num_rows + i
        senses.append(conv_sense)
        b[r] = 1.0
        for k, key in enumerate(keys):
            if pool.shared or key[0] == i:
                A[r, nx + k] = 1.0

    for t, bb in enumerate(bounds):
        r = model.num_rows + conv_rows + t
        senses.append(bb.sense)
        b[r] = float(bb.value)
        for k, key in enumerate(keys):
            design = key if pool.shared else key[1]
            if pool.shared or key[0] == bb.block:
                A[r, nx + k] = float(design[bb.comp])

    lo = np.concatenate([np.zeros(nx), np.zeros(nlam)])
    hi = np.concatenate([np.full(nx, _INF), np.ones(nlam)])
    c = np.concatenate([model.c, costs])
    if phase1:
        # zero real costs, penalized artificial slacks on every row
        art_cols = []
        art_costs = []
        for r, s in enumerate(senses):
            sgs = (1.0,) if s == ">=" else (-1.0,) if s == "<=" else (1.0, -1.0)
            for sg in sgs:
                col = np.zeros(nrows)
                col[r] = sg
                art_cols.append(col)
                art_costs.append(1.0)
        if art_cols:
            A = np.hstack([A, np.column_stack(art_cols)])
            lo = np.concatenate([lo, np.zeros(len(art_cols))])
            hi = np.concatenate([hi, np.full(len(art_cols), _INF)])
        c = np.concatenate([np.zeros(ncols), np.asarray(art_costs)])
    lp = LinearProgram(c, A, senses, b, lo, hi)
    return RmpLayout(lp, keys, model.num_rows, conv_rows, bounds)


def extract_duals(model: StructuredModel, layout: RmpLayout, duals: np.ndarray) -> DualPrices:
    pi = duals[: layout.num_rows].copy()
    nblocks = len(model.blocks)
    if layout.conv_rows == 1 and model.shared_design:
        mu = np.full(nblocks, duals[layout.num_rows] / nblocks)
    else:
        mu = duals[layout.num_rows : layout.num_rows + layout.conv_rows].copy()
    branch: dict[int, np.ndarray] = {}
    for t, bb in enumerate(layout.branch_bounds):
        sigma = duals[layout.num_rows + layout.conv_rows + t]
        if sigma == 0.0:
            continue
        targets = range(nblocks) if model.shared_design else (bb.block,)
        for i in targets:
            vec = branch.setdefault(i, np.zeros(model.blocks[i].p))
            vec[bb.comp] += sigma
    return DualPrices(pi=pi, mu=mu, branch=branch)


# -- columns ------------------------------------------------------------------


def column_from_pricing(
    block_index: int,
    block: Block,
    result: PricingResult,
    duals: DualPrices,
) -> Column:
    """Turn a negatively-priced result into a column.

    The cost uses the reduced-cost upper bound, so it remains a valid
    upper bound on the true design cost even when pricing stopped early.
    """
    if result.upper >= 0.0:
        raise ValueError("pricing result is not column-worthy (u >= 0)")
    design = result.design(block)
    w = linear_prices(block, duals.pi, duals.branch.get(block_index))
    cost = result.upper + float(w @ np.asarray(design, dtype=float)) + float(duals.mu[block_index])
    return Column(block=block_index, design=design, cost=cost, provenance="priced")


def price_shared_column(pool: ColumnPool, design: tuple, *, gap: float = 1e-9):
    """Cost a proposed shared design in every block with the design fixed.

    Feasible blocks contribute pool entries; any infeasible block marks the
    design infeasible and registers a cut in all pricing subproblems.
    Returns (costs by block | None, cut records).
    """
    design = tuple(int(v) for v in design)
    costs: dict[int, float] = {}
    infeasible_blocks = []
    for i, blk in enumerate(pool.blocks):
        out = block_cost_for_design(blk, design, gap=gap)
        if out is None:
            infeasible_blocks.append(i)
        else:
            costs[i] = out[0]
    if infeasible_blocks:
        for i in infeasible_blocks:
            pool.add(Column(i, design, _INF, feasible=False))
        style = "monotone-stage" if pool.model.blocks[0].monotone_feasible else "no-good"
        records = pool.register_cut(design, style)
        return None, records
    for i, cost in costs.items():
        pool.add(Column(i, design, cost, provenance="shared-repriced"))
    return costs, []


# -- initial columns ----------------------------------------------------------


def init_columns(
    model: StructuredModel,
    strategy: str = "singleton-designs",
    *,
    pricing_gap: float = 1e-9,
    workers: int = 1,
) -> ColumnPool:
    """Build a pool that makes the root restricted master feasible.

    "singleton-designs" loads the instance-declared trivial designs with
    closed-form costs; "zero-dual-pricing" prices every block once with all
    duals at zero. Either way the root master is solved, repaired by
    feasibility pricing if needed, and an InitialColumnsError is raised if
    it stays infeasible.
    """
    pool = ColumnPool(model)
    if strategy == "singleton-designs":
        if not model.initial_columns:
            raise InitialColumnsError("instance declares no initial columns")
        for ic in model.initial_columns:
            pool.add(Column(ic.block, ic.design, ic.cost, provenance="initial"))
        if pool.shared:
            # singleton declarations in shared mode still need per-block costs
            for d in {ic.design for ic in model.initial_columns}:
                price_shared_column(pool, d, gap=pricing_gap)
    elif strategy == "zero-dual-pricing":
        proposals = []
        for i, blk in enumerate(pool.blocks):
            res = solve_pricing(blk, gap=pricing_gap)
            if res.status == "infeasible":
                if not pool.shared and model.convexity == "equality":
                    raise InitialColumnsError(f"block {i} has no feasible design")
                continue
            proposals.append((i, res))
        for i, res in proposals:
            design = res.design(pool.blocks[i])
            if pool.shared:
                price_shared_column(pool, design, gap=pricing_gap)
            else:
                pool.add(Column(i, design, res.upper, provenance="initial"))
    else:
        raise ValueError(f"unknown initial-column strategy {strategy!r}")

    layout = build_rmp_lp(model, pool)
    sol = solve_lp(layout.lp)
    if not sol.optimal:
        if not _restore_feasibility(model, pool, (), frozenset(), pricing_gap):
            raise InitialColumnsError("restricted master infeasible with the produced pool")
    return pool


# -- feasibility repair ---------------------------------------------------------


def _zero_cost_objective(block: Block, duals: DualPrices, block_index: int) -> Expr:
    w = linear_prices(block, duals.pi, duals.branch.get(block_index))
    e: Expr = const(0.0)
    for j in range(block.p):
        if w[j] != 0.0:
            e = e - const(w[j]) * var(j)
    return e - const(float(duals.mu[block_index]))


def _restore_feasibility(model, pool, bounds, excluded, pricing_gap, max_rounds=200) -> bool:
    """Phase-1 pricing loop: add violation-reducing columns or certify infeasible."""
    for _ in range(max_rounds):
        layout = build_rmp_lp(model, pool, bounds, excluded, phase1=True)
        sol = solve_lp(layout.lp)
        if not sol.optimal:
            return False
        if sol.objective <= 1e-9 * (1.0 + abs(model.b).sum() if model.num_rows else 1.0):
            return True
        duals = extract_duals(model, layout, sol.duals)
        added = False
        if pool.shared:
            joint = merge_shared_blocks(pool.blocks)
            total_mu = float(np.sum(duals.mu))
            joint_duals = DualPrices(duals.pi, np.array([total_mu]), {0: _sum_branch(duals, model)})
            y_lo, y_hi = node_y_bounds(model, bounds, 0)
            res = solve_pricing(
                joint,
                objective=_zero_cost_objective(joint, joint_duals, 0),
                gap=pricing_gap,
                y_lo=y_lo,
                y_hi=y_hi,
                extra_constraints=_exclusion_constraints(excluded, 0, True),
            )
            if res.status != "infeasible" and res.upper < -ADD_TOL:
                design = res.design(joint)
                costs, _ = price_shared_column(pool, design, gap=pricing_gap)
                added = costs is not None
        else:
            for i, blk in enumerate(pool.blocks):
                y_lo, y_hi = node_y_bounds(model, bounds, i)
                res = solve_pricing(
                    blk,
                    objective=_zero_cost_objective(blk, duals, i),
                    gap=pricing_gap,
                    y_lo=y_lo,
                    y_hi=y_hi,
                    extra_constraints=_exclusion_constraints(excluded, i, False),
                )
                if res.status == "infeasible" or res.upper >= -ADD_TOL:
                    continue
                design = res.design(blk)
                cost = block_cost_for_design(blk, design, gap=pricing_gap)
                if cost is None:
                    continue
                if pool.add(Column(i, design, cost[0], provenance="priced")):
                    added = True
        if not added:
            return False
    raise RuntimeError("feasibility repair did not converge")


def _sum_branch(duals: DualPrices, model) -> np.ndarray:
    total = np.zeros(model.blocks[0].p)
    for vec in duals.branch.values():
        total += vec
    return total


def _exclusion_constraints(excluded, block: int, shared: bool) -> list[Expr]:
    """No-good expressions for node-local design exclusions."""
    out = []
    for item in excluded:
        b, design = (0, item) if shared else item
        if not shared and b != block:
            continue
        dist: Expr = const(0.0)
        for j, yj in enumerate(design):
            dist = dist + ((var(j) - float(yj)) * (var(j) - float(yj)))
        out.append(1.0 - dist)
    return out


# -- the column generation loop -------------------------------------------------


class IterRecord(NamedTuple):
    iteration: int
    v_rmp: float
    lower: float
    upper: float
    sum_lower: float
    columns_added: int
    mode: str
    ms: float


@dataclass
class RelaxedMpResult:
    status: str  # optimal | infeasible | pruned
    objective: float = math.nan
    x: np.ndarray | None = None
    lam: dict | None = None
    duals: DualPrices | None = None
    lower: float = -_INF
    upper: float = _INF
    trace: list[IterRecord] = field(default_factory=list)
    keys: list = field(default_factory=list)
    iterations: int = 0


def _write_log(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "v_rmp", "lb", "ub", "columns_added", "pricing_mode", "wallclock_ms"])
        for r in trace:
            w.writerow([r.iteration, r.v_rmp, r.lower, r.upper, r.columns_added, r.mode, f"{r.ms:.3f}"])


def solve_relaxed_mp(
    model: StructuredModel,
    pool: ColumnPool,
    *,
    bounds=(),
    excluded=frozenset(),
    eps: float = 1e-6,
    pricing_budget: int | None = 500,
    pricing_gap: float = 1e-9,
    workers: int = 1,
    prune_threshold: float | None = None,
    log_path=None,
    deadline: float | None = None,
) -> RelaxedMpResult:
    """Column generation until the bound sandwich closes to ``eps`` (absolute).

    ``prune_threshold`` aborts the loop as soon as the running lower bound
    proves the node cannot beat the incumbent (early pruning); the result
    then has status "pruned" with valid bounds. A ``deadline`` (monotonic
    seconds) turns unfinished runs into status "limit" with valid bounds.
    """
    nblocks = len(model.blocks)
    lower = -_INF
    upper = _INF
    trace: list[IterRecord] = []
    mode = "budget" if pricing_budget is not None else "exact"
    exact_gap = pricing_gap if eps <= 0 else min(pricing_gap, eps / (2.0 * nblocks))
    stall = 0
    prev_v = _INF
    result = RelaxedMpResult(status="optimal")
    iteration = 0

    while True:
        iteration += 1
        t0 = time.perf_counter()
        layout = build_rmp_lp(model, pool, bounds, excluded)
        sol = solve_lp(layout.lp)
        if not sol.optimal:
            if _restore_feasibility(model, pool, bounds, excluded, pricing_gap):
                continue
            result.status = "infeasible"
            result.lower = _INF
            result.upper = _INF
            break
        v = sol.objective
        upper = v
        duals = extract_duals(model, layout, sol.duals)

        if v >= prev_v - 1e-12 * (1.0 + abs(v)):
            stall += 1
        else:
            stall = 0
        prev_v = v
        if stall >= 10 and mode == "budget":
            mode = "exact"

        gap = exact_gap if mode == "exact" else pricing_gap
        budget = None if mode == "exact" else pricing_budget
        results = _price_all(model, pool, duals, bounds, excluded, mode, gap, budget, workers)

        added = 0
        sum_lower = 0.0
        clip = model.convexity == "at-most-one"
        for i, res in results:
            li = res.lower
            if res.status == "infeasible":
                li = _INF
            sum_lower += min(0.0, li) if clip else li
            if res.status != "infeasible" and res.upper < -ADD_TOL:
                if pool.shared:
                    design = res.design(pool.blocks[i])
                    if design not in pool.infeasible and not any(
                        k == design for k, _ in eligible_keys(pool)
                    ):
                        costs, _ = price_shared_column(pool, design, gap=pricing_gap)
                        if costs is not None:
                            added += 1
                else:
                    if pool.add(column_from_pricing(i, pool.blocks[i], res, duals)):
                        added += 1
        lower = max(lower, v + sum_lower)

        trace.append(
            IterRecord(iteration, v, lower, upper, sum_lower, added,
                       mode, (time.perf_counter() - t0) * 1e3)
        )

        result.objective = v
        result.x = sol.x[: model.num_x].copy()
        result.lam = {k: float(sol.x[model.num_x + j]) for j, k in enumerate(layout.keys)}
        result.duals = duals
        result.keys = list(layout.keys)

        if prune_threshold is not None and lower >= prune_threshold:
            result.status = "pruned"
            break
        if upper - lower <= eps + GAP_FLOOR * (1.0 + abs(upper)):
            result.status = "optimal"
            break
        if deadline is not None and time.monotonic() > deadline:
            result.status = "limit"
            break
        if added == 0:
            if mode == "budget":
                mode = "exact"
                continue
            if pool.shared:
                if _shared_exact_round(model, pool, duals, bounds, excluded, exact_gap):
                    continue
                joint_lb = _shared_joint_bound(model, pool, duals, bounds, excluded, exact_gap)
                lower = max(lower, v + joint_lb)
                result.status = "optimal" if upper - lower <= eps + GAP_FLOOR * (
                    1.0 + abs(upper)
                ) else "limit"
                break
            raise RuntimeError("column generation stalled with exact pricing")

    result.lower = lower if result.status != "infeasible" else _INF
    result.upper = upper if result.status != "infeasible" else _INF
    result.trace = trace
    result.iterations = iteration
    if log_path:
        _write_log(log_path, trace)
    return result


def _price_all(model, pool, duals, bounds, excluded, mode, gap, budget, workers):
    """Price every block; deterministic merge in block order."""

    def one(i: int):
        blk = pool.blocks[i]
        y_lo, y_hi = node_y_bounds(model, bounds, i)
        return solve_pricing(
            blk,
            pi=duals.pi,
            mu=float(duals.mu[i]),
            extra_y_price=duals.branch.get(i),
            mode="exact" if mode == "exact" else "budget",
            gap=gap,
            node_budget=budget if budget is not None else 0,
            y_lo=y_lo,
            y_hi=y_hi,
            extra_constraints=_exclusion_constraints(excluded, i, pool.shared),
        )

    indices = range(len(pool.blocks))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            out = list(ex.map(one, indices))
    else:
        out = [one(i) for i in indices]
    return list(zip(indices, out))


def _joint_duals(model, pool, duals: DualPrices) -> DualPrices:
    total_mu = float(np.sum(duals.mu))
    return DualPrices(duals.pi, np.array([total_mu]), {0: _sum_branch(duals, model)})


def _shared_exact_round(model, pool, duals, bounds, excluded, gap) -> bool:
    """Exact joint pricing over all scenarios; True if a new column was added."""
    joint = merge_shared_blocks(pool.blocks)
    jd = _joint_duals(model, pool, duals)
    y_lo, y_hi = node_y_bounds(model, bounds, 0)
    res = solve_pricing(
        joint,
        pi=jd.pi,
        mu=float(jd.mu[0]),
        extra_y_price=jd.branch.get(0),
        gap=gap,
        y_lo=y_lo,
        y_hi=y_hi,
        extra_constraints=_exclusion_constraints(excluded, 0, True),
    )
    if res.status == "infeasible" or res.upper >= -ADD_TOL:
        return False
    design = res.design(joint)
    known = any(k == design for k, _ in eligible_keys(pool, bounds, excluded))
    if known:
        return False
    costs, _ = price_shared_column(pool, design, gap=gap)
    return costs is not None


def _shared_joint_bound(model, pool, duals, bounds, excluded, gap) -> float:
    joint = merge_shared_blocks(pool.blocks)
    jd = _joint_duals(model, pool, duals)
    y_lo, y_hi = node_y_bounds(model, bounds, 0)
    res = solve_pricing(
        joint,
        pi=jd.pi,
        mu=float(jd.mu[0]),
        extra_y_price=jd.branch.get(0),
        gap=gap,
        y_lo=y_lo,
        y_hi=y_hi,
        extra_constraints=_exclusion_constraints(excluded, 0, True),
    )
    if res.status == "infeasible":
        return _INF
    lb = res.lower
    if model.convexity == "at-most-one":
        lb = min(0.0, lb)
    return lb
