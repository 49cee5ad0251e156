"""Branch-and-price over the column master.

Nodes restrict original design variables with integer bound pairs and are
explored best-bound first (ties by depth, then id). Each node runs column
generation on its filtered column view; its running lower bound prunes the
node early against the incumbent. Fractional nodes get one restricted-
master MILP heuristic solve for an upper bound, then branch on an original
variable: most-fractional by default, or heaviest fractional entity when
the instance declares entity weights. The rare case of an integral
aggregated design with fractional selection weights over distinct designs
falls back to fixing/excluding one design (a selection-weight branch),
which is logged.
"""

from __future__ import annotations

import csv
import heapq
import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .colgen import (
    BranchBound,
    Column,
    ColumnPool,
    InitialColumnsError,
    RelaxedMpResult,
    build_rmp_lp,
    eligible_keys,
    init_columns,
    node_y_bounds,
    solve_relaxed_mp,
)
from .model import StructuredModel, validate_model
from .pricing import block_cost_for_design, solve_pricing
from .simplex import solve_milp

__all__ = [
    "BnpNode",
    "Incumbent",
    "BnpResult",
    "solve_bnp",
    "aggregate_originals",
    "choose_branch",
    "filter_columns",
    "early_prune",
    "recover_original_solution",
]

_INF = math.inf
LAMBDA_INT_TOL = 1e-6
FRAC_TOL = 1e-6


@dataclass
class BnpNode:
    node_id: int
    parent_id: int | None
    depth: int
    bounds: list[BranchBound] = field(default_factory=list)
    excluded: frozenset = frozenset()
    local_lb: float = -_INF
    status: str = "open"  # open | pruned | branched | integral | infeasible


@dataclass
class Incumbent:
    objective: float
    x: np.ndarray
    lam: dict
    designs: dict[int, tuple | None]
    inner: dict[int, np.ndarray | None]


@dataclass
class BnpResult:
    status: str  # optimal | limit | infeasible
    objective: float = math.nan
    lower: float = -_INF
    upper: float = _INF
    incumbent: Incumbent | None = None
    nodes: int = 0
    colgen_iterations: int = 0
    columns_generated: int = 0
    wallclock: float = 0.0
    branching_exercised: bool = False
    lambda_branches: int = 0
    tree_rows: list = field(default_factory=list)
    pool: ColumnPool | None = None

    @property
    def gap(self) -> float:
        if self.upper == _INF or self.lower == -_INF:
            return _INF
        return (self.upper - self.lower) / max(1.0, abs(self.upper))


class YReport(NamedTuple):
    yhat: dict[int, np.ndarray]
    conv_mass: dict[int, float]
    max_frac: float
    argmax: tuple[int, int] | None
    lam_fractional: bool
    lam: dict
    key_costs: dict


def aggregate_originals(lam: dict, model: StructuredModel, pool: ColumnPool) -> YReport:
    """Aggregated original designs yhat_i = sum_k lambda_k ybar_k per block.

    Empty blocks under at-most-one selection aggregate to the zero design.
    Reports the largest componentwise fractionality and whether any
    selection weight itself is fractional.
    """
    nblocks = len(model.blocks)
    yhat = {i: np.zeros(model.blocks[i].p) for i in range(nblocks)}
    mass = {i: 0.0 for i in range(nblocks)}
    lam_fractional = False
    costs = dict(eligible_keys(pool))
    for key, val in lam.items():
        if val <= LAMBDA_INT_TOL:
            continue
        if abs(val - round(val)) > LAMBDA_INT_TOL:
            lam_fractional = True
        targets = range(nblocks) if pool.shared else (key[0],)
        design = key if pool.shared else key[1]
        for i in targets:
            yhat[i] += val * np.asarray(design, dtype=float)
            mass[i] += val
    max_frac = 0.0
    argmax = None
    for i in sorted(yhat):
        for j, v in enumerate(yhat[i]):
            frac = abs(v - round(v))
            if frac > max_frac + 1e-15:
                max_frac = frac
                argmax = (i, j)
    return YReport(yhat, mass, max_frac, argmax, lam_fractional, dict(lam), costs)


class BranchDecision(NamedTuple):
    kind: str  # bound | lambda
    block: int
    comp: int | None
    floor: int | None
    design: tuple | None


def choose_branch(report: YReport, model: StructuredModel, rule: str = "most-fractional") -> BranchDecision:
    """Pick the branching target from an aggregation report.

    Raises if everything is already integral (contract violation). With
    integral aggregated designs but fractional weights over distinct
    designs, returns a selection-weight branch on the most expensive
    involved design.
    """
    frac_items = []
    for i in sorted(report.yhat):
        for j, v in enumerate(report.yhat[i]):
            f = abs(v - round(v))
            if f > FRAC_TOL:
                frac_items.append((i, j, v, f))
    if frac_items:
        if rule == "largest-entity-first":
            def weight(item):
                i, j, _, _ = item
                w = model.blocks[i].entity_weights
                return w[j] if w is not None else 0.0

            best = max(frac_items, key=lambda it: (weight(it), -it[0], -it[1]))
        elif rule == "most-fractional":
            best = max(frac_items, key=lambda it: (it[3], -it[0], -it[1]))
        else:
            raise ValueError(f"unknown branching rule {rule!r}")
        i, j, v, _ = best
        return BranchDecision("bound", i, j, math.floor(v), None)

    if not report.lam_fractional:
        raise ValueError("choose_branch called with integral aggregation and weights")
    # integral yhat, fractional weights over distinct designs: fix or exclude
    # the most expensive fractional design
    best_key = None
    best_cost = -_INF
    for key, val in report.lam.items():
        if val <= LAMBDA_INT_TOL or abs(val - round(val)) <= LAMBDA_INT_TOL:
            continue
        cost = report.key_costs.get(key, 0.0)
        if cost > best_cost:
            best_cost = cost
            best_key = key
    if best_key is None:
        raise ValueError("no fractional selection weight to branch on")
    if len(best_key) == 2 and isinstance(best_key[1], tuple):
        block, design = best_key  # (block, design) key
    else:
        block, design = 0, best_key  # shared-mode key is the design itself
    return BranchDecision("lambda", block, None, None, tuple(design))


def filter_columns(node: BnpNode, pool: ColumnPool) -> list:
    """Column keys admitted at a node (designs inside its branching bounds)."""
    return [k for k, _ in eligible_keys(pool, node.bounds, node.excluded)]


def early_prune(running_lb: float, global_ub: float, eps: float) -> bool:
    """Prune as soon as the running bound reaches the incumbent threshold."""
    return running_lb >= prune_threshold(global_ub, eps)


def prune_threshold(global_ub: float, eps: float) -> float:
    if global_ub == _INF:
        return _INF
    return global_ub - eps * abs(global_ub)


def recover_original_solution(
    lam: dict,
    pool: ColumnPool,
    model: StructuredModel,
    x: np.ndarray,
    *,
    pricing_gap: float = 1e-9,
) -> Incumbent:
    """Map an integral master solution back to (x, y, z) in the original model.

    Each selected design is re-solved with the design fixed, which both
    recovers attaining inner variables and corrects any stored cost that was
    only an upper bound (the correction can only lower the objective).
    """
    designs: dict[int, tuple | None] = {}
    inner: dict[int, np.ndarray | None] = {}
    chosen: dict[int, tuple] = {}
    for key, val in lam.items():
        if val < 0.5:
            continue
        if pool.shared:
            for i in range(len(model.blocks)):
                chosen[i] = tuple(key)
        else:
            chosen[key[0]] = tuple(key[1])
    total = float(model.c @ x) if model.num_x else 0.0
    for i, blk in enumerate(pool.blocks):
        if i not in chosen:
            designs[i] = None
            inner[i] = None
            continue
        design = chosen[i]
        out = block_cost_for_design(blk, design, gap=pricing_gap)
        if out is None:
            raise RuntimeError(f"selected design {design} is infeasible for block {i}")
        cost, point = out
        designs[i] = design
        inner[i] = point[blk.p :].copy()
        total += cost
        stored = pool.columns.get((i, design))
        if stored is not None and cost < stored.cost - 1e-9:
            stored.cost = cost  # stored value was an early-termination upper bound
    _verify_incumbent(model, x, designs, inner, pool)
    return Incumbent(objective=total, x=np.asarray(x, dtype=float), lam=dict(lam), designs=designs, inner=inner)


def _verify_incumbent(model, x, designs, inner, pool) -> None:
    lhs = model.A @ x if model.num_x else np.zeros(model.num_rows)
    for i, blk in enumerate(model.blocks):
        d = designs.get(i)
        if d is not None:
            lhs = lhs + blk.D @ np.asarray(d, dtype=float)
    if model.num_rows and np.any(lhs < model.b - 1e-7):
        raise RuntimeError("recovered point violates a complicating row")


def solve_bnp(
    model: StructuredModel,
    *,
    eps: float = 1e-3,
    node_limit: int = 10_000,
    time_limit: float | None = 600.0,
    colgen_eps: float = 1e-6,
    pricing_budget: int | None = 500,
    pricing_gap: float = 1e-9,
    workers: int = 1,
    branch_rule: str | None = None,
    init_strategy: str | None = None,
    tree_log_path=None,
    colgen_log_path=None,
) -> BnpResult:
    """Branch-and-price to a relative gap ``eps``.

    Returns certified bounds: the final lower bound is the minimum over
    open nodes (equal to the incumbent when the tree is exhausted).
    """
    validate_model(model)
    t_start = time.monotonic()
    deadline = None if time_limit is None else t_start + time_limit
    result = BnpResult(status="limit")
    if branch_rule is None:
        weighted = any(b.entity_weights is not None for b in model.blocks)
        branch_rule = "largest-entity-first" if weighted else "most-fractional"
    if init_strategy is None:
        init_strategy = "singleton-designs" if model.initial_columns else "zero-dual-pricing"

    try:
        pool = init_columns(model, init_strategy, pricing_gap=pricing_gap, workers=workers)
    except InitialColumnsError:
        result.status = "infeasible"
        result.lower = _INF
        result.wallclock = time.monotonic() - t_start
        return result

    upper = _INF
    incumbent: Incumbent | None = None
    next_id = 1
    heap: list[tuple[float, int, int, BnpNode]] = []
    root = BnpNode(0, None, 0)
    heapq.heappush(heap, (root.local_lb, root.depth, root.node_id, root))
    nodes_done = 0
    colgen_iters = 0
    tree_rows = []
    lambda_branches = 0

    def open_lb() -> float:
        return min((entry[0] for entry in heap), default=_INF)

    while heap:
        if deadline is not None and time.monotonic() > deadline:
            break
        if nodes_done >= node_limit:
            break
        lb_key, _, _, node = heapq.heappop(heap)
        if early_prune(node.local_lb, upper, eps):
            node.status = "pruned"
            continue
        nodes_done += 1
        t_node = time.perf_counter()

        _ensure_block_columns(model, pool, node, pricing_gap)
        res = solve_relaxed_mp(
            model,
            pool,
            bounds=node.bounds,
            excluded=node.excluded,
            eps=colgen_eps,
            pricing_budget=pricing_budget,
            pricing_gap=pricing_gap,
            workers=workers,
            prune_threshold=prune_threshold(upper, eps),
            deadline=deadline,
            log_path=colgen_log_path if node.node_id == 0 else None,
        )
        colgen_iters += res.iterations
        node.local_lb = max(node.local_lb, res.lower)

        if res.status == "infeasible":
            node.status = "infeasible"
        elif res.status == "pruned" or early_prune(node.local_lb, upper, eps):
            node.status = "pruned"
        elif res.status == "limit":
            node.status = "open"  # ran out of time mid-node; bounds stay valid
            heapq.heappush(heap, (node.local_lb, node.depth, node.node_id, node))
            tree_rows.append(_tree_row(node, upper, pool, t_node))
            break
        else:
            report = aggregate_originals(res.lam, model, pool)
            if not report.lam_fractional:
                cand = recover_original_solution(res.lam, pool, model, res.x, pricing_gap=pricing_gap)
                if cand.objective < upper - 1e-12:
                    upper, incumbent = cand.objective, cand
                node.status = "integral"
            else:
                milp_cand = _rmp_milp_heuristic(model, pool, node, res, pricing_gap)
                if milp_cand is not None and milp_cand.objective < upper - 1e-12:
                    upper, incumbent = milp_cand.objective, milp_cand
                if early_prune(node.local_lb, upper, eps):
                    node.status = "pruned"
                else:
                    decision = choose_branch(report, model, branch_rule)
                    children = _make_children(node, decision, pool.shared, next_id)
                    next_id += len(children)
                    if decision.kind == "lambda":
                        lambda_branches += 1
                    for child in children:
                        child.local_lb = max(child.local_lb, node.local_lb)
                        heapq.heappush(heap, (child.local_lb, child.depth, child.node_id, child))
                    node.status = "branched"
        tree_rows.append(_tree_row(node, upper, pool, t_node))

    if not heap:
        # tree exhausted: the incumbent is optimal (or the model infeasible)
        lower = upper
        status = "infeasible" if upper == _INF else "optimal"
    else:
        lower = min(open_lb(), upper)
        status = "limit"
        if upper < _INF and upper - lower <= eps * abs(upper) + 1e-12:
            status = "optimal"

    result.status = status
    result.objective = upper if upper < _INF else math.nan
    result.lower = lower
    result.upper = upper
    result.incumbent = incumbent
    result.nodes = nodes_done
    result.colgen_iterations = colgen_iters
    result.columns_generated = pool.total_columns()
    result.branching_exercised = nodes_done > 1
    result.lambda_branches = lambda_branches
    result.tree_rows = tree_rows
    result.pool = pool
    result.wallclock = time.monotonic() - t_start
    if tree_log_path:
        _write_tree_log(tree_log_path, tree_rows)
    return result


def _ensure_block_columns(model, pool, node, pricing_gap) -> None:
    """Re-seed blocks whose column view emptied under the node bounds."""
    keys = filter_columns(node, pool)
    if pool.shared:
        return  # shared designs are re-seeded through the repair loop
    present = {k[0] for k in keys}
    for i, blk in enumerate(pool.blocks):
        if i in present:
            continue
        y_lo, y_hi = node_y_bounds(model, node.bounds, i)
        res = solve_pricing(blk, gap=pricing_gap, y_lo=y_lo, y_hi=y_hi)
        if res.status == "infeasible":
            continue  # node-level infeasibility surfaces through the master
        design = res.design(blk)
        cost = block_cost_for_design(blk, design, gap=pricing_gap)
        if cost is not None:
            pool.add(Column(i, design, cost[0], provenance="priced"))


def _rmp_milp_heuristic(model, pool, node, res: RelaxedMpResult, pricing_gap):
    """One integer-restricted master solve per node for an upper bound."""
    layout = build_rmp_lp(model, pool, node.bounds, node.excluded)
    mask = np.zeros(layout.lp.num_vars, dtype=bool)
    mask[model.num_x :] = True
    if model.num_x_int:
        mask[model.num_x_cont : model.num_x] = True
    sol = solve_milp(layout.lp, mask, gap=1e-9)
    if not sol.optimal:
        return None
    lam = {k: float(sol.x[model.num_x + j]) for j, k in enumerate(layout.keys)}
    try:
        return recover_original_solution(
            lam, pool, model, sol.x[: model.num_x], pricing_gap=pricing_gap
        )
    except RuntimeError:
        return None


def _make_children(node: BnpNode, decision: BranchDecision, shared: bool, next_id: int) -> list[BnpNode]:
    if decision.kind == "bound":
        left = BnpNode(
            next_id,
            node.node_id,
            node.depth + 1,
            bounds=node.bounds + [BranchBound(decision.block, decision.comp, "<=", decision.floor)],
            excluded=node.excluded,
        )
        right = BnpNode(
            next_id + 1,
            node.node_id,
            node.depth + 1,
            bounds=node.bounds + [BranchBound(decision.block, decision.comp, ">=", decision.floor + 1)],
            excluded=node.excluded,
        )
        return [left, right]
    # selection-weight branch: fix the design in one child, exclude it in the other
    design = decision.design
    fix_bounds = list(node.bounds)
    for j, v in enumerate(design):
        fix_bounds.append(BranchBound(decision.block, j, "<=", int(v)))
        fix_bounds.append(BranchBound(decision.block, j, ">=", int(v)))
    fixed = BnpNode(next_id, node.node_id, node.depth + 1, bounds=fix_bounds, excluded=node.excluded)
    excl_key = design if shared else (decision.block, design)
    excluded = BnpNode(
        next_id + 1,
        node.node_id,
        node.depth + 1,
        bounds=list(node.bounds),
        excluded=node.excluded | {excl_key},
    )
    return [fixed, excluded]


def _tree_row(node: BnpNode, ub: float, pool: ColumnPool, t_node: float):
    return {
        "node": node.node_id,
        "parent": node.parent_id if node.parent_id is not None else "",
        "depth": node.depth,
        "lb": node.local_lb,
        "ub_after": ub,
        "columns_in_pool": pool.total_columns(),
        "status": node.status,
        "wallclock_ms": (time.perf_counter() - t_node) * 1e3,
    }


def _write_tree_log(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(
            fh,
            fieldnames=["node", "parent", "depth", "lb", "ub_after", "columns_in_pool", "status", "wallclock_ms"],
        )
        w.writeheader()
        for r in rows:
            w.writerow(r)
