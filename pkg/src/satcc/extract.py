"""Choosing one e-node per needed e-class.

``extract_ilp`` solves the DAG-cost problem exactly as a 0-1 program:

* ``x[n]`` selects node n; a class selects at most one node, a root class
  exactly one;
* a selected node forces each child class to select a node;
* acyclicity: a level per class with ``level(c) - level(k) >= 1`` on every
  selected edge c -> k, relaxed by a big-M otherwise.  Only edges inside a
  strongly connected component of the class graph can close a cycle, so
  levels exist just for classes in nontrivial components (M = component size).

A second solve keeps the optimal cost fixed and minimizes the summed creation
ranks of the selected nodes, so ties go to the oldest (input) form.
"""
from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .cost import DEFAULT_COST, CostModel, DagCost, dag_cost, node_cost
from .errors import ContractViolation, ExtractionError

log = logging.getLogger(__name__)

BRUTE_MAX_NODES = 25


@dataclass(frozen=True)
class ExtractLimits:
    max_time: float = 30.0

    def __post_init__(self):
        if self.max_time <= 0:
            raise ValueError("extraction time limit must be positive")


@dataclass
class Extraction:
    choice: dict  # class -> ENode
    roots: list
    method: str  # ilp | greedy | brute | original
    objective: DagCost
    warnings: list = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.objective.total


def root_classes(g, roots) -> list[int]:
    out = []
    for r in roots:
        c = getattr(r, "cls", r)
        c = g.find(c)
        if c not in out:
            out.append(c)
    return out


def relevant_classes(g, roots) -> list[int]:
    """Classes reachable from the roots through any node, in discovery order."""
    seen: dict = {}
    stack = list(reversed(root_classes(g, roots)))
    while stack:
        c = g.find(stack.pop())
        if c in seen:
            continue
        seen[c] = True
        for n in g.nodes(c):
            stack.extend(reversed(n.children))
    return list(seen)


def _finish(g, choice: dict, roots, m: CostModel, method: str, warnings=None) -> Extraction:
    rc = root_classes(g, roots)
    cost = dag_cost(choice, rc, m, g.find)
    pruned = {c: choice[c] for c in cost.per_class}
    return Extraction(pruned, list(roots), method, DagCost(cost.total, dict(cost.per_class)),
                      list(warnings or []))


def validate(g, x: Extraction) -> None:
    """Raise ContractViolation unless ``x`` is closed and acyclic."""
    state: dict = {}
    for r in root_classes(g, x.roots):
        stack = [(r, False)]
        while stack:
            c, done = stack.pop()
            c = g.find(c)
            if done:
                state[c] = 2
                continue
            if state.get(c) == 2:
                continue
            if state.get(c) == 1:
                raise ContractViolation(f"cycle through class {c}")
            n = x.choice.get(c)
            if n is None:
                raise ContractViolation(f"class {c} has no chosen node")
            if n not in g.classes[c].nodes:
                raise ContractViolation(f"chosen node {n} is not in class {c}")
            state[c] = 1
            stack.append((c, True))
            for k in n.children:
                k = g.find(k)
                if state.get(k) == 1:
                    raise ContractViolation(f"cycle through class {k}")
                if state.get(k) != 2:
                    stack.append((k, False))


# ------------------------------------------------------------------ original


def extract_original(g, roots, m: CostModel = DEFAULT_COST) -> Extraction:
    """The oldest node of each class; before saturation this is the input program.

    A node's children always hold older nodes than the node itself, so this
    selection is closed and acyclic.
    """
    choice = {}
    for c in relevant_classes(g, roots):
        cls = g.classes[c]
        choice[c] = min(cls.nodes, key=cls.nodes.get)
    return _finish(g, choice, roots, m, "original")


# -------------------------------------------------------------------- greedy


def extract_greedy(g, roots, m: CostModel = DEFAULT_COST) -> Extraction:
    classes = relevant_classes(g, roots)
    if not classes:
        return Extraction({}, list(roots), "greedy", DagCost(0, {}))
    INF = float("inf")
    best: dict = {c: (INF, None) for c in classes}
    changed = True
    while changed:
        changed = False
        for c in classes:
            cls = g.classes[c]
            for n in sorted(cls.nodes, key=cls.nodes.get):
                total = node_cost(n, m)
                for k in n.children:
                    total += best[g.find(k)][0]
                    if total == INF:
                        break
                if total < best[c][0]:
                    best[c] = (total, n)
                    changed = True
    choice = {c: n for c, (t, n) in best.items() if n is not None}
    return _finish(g, choice, roots, m, "greedy")


# ----------------------------------------------------------------------- ILP


def _solve(c, A, lo, hi, integrality, bounds, time_limit):
    cons = [LinearConstraint(A, lo, hi)] if A is not None else []
    return milp(c, constraints=cons, integrality=integrality, bounds=bounds,
                options={"time_limit": max(time_limit, 0.01), "mip_rel_gap": 0.0, "presolve": True})


def extract_ilp(g, roots, m: CostModel = DEFAULT_COST, lim: ExtractLimits = ExtractLimits()) -> Extraction:
    t0 = time.perf_counter()
    classes = relevant_classes(g, roots)
    if not classes:
        return Extraction({}, list(roots), "ilp", DagCost(0, {}))
    cidx = {c: i for i, c in enumerate(classes)}
    nodes = []  # (class, node, rank)
    for c in classes:
        cls = g.classes[c]
        for n in _undominated(g, c, m):
            nodes.append((c, n, cls.nodes[n]))
    nn, nc = len(nodes), len(classes)
    comp = _components(g, classes, cidx)
    sizes = np.bincount(comp, minlength=nc) if nc else np.zeros(0, int)
    leveled = [c for c in classes if sizes[comp[cidx[c]]] > 1]
    lidx = {c: nn + i for i, c in enumerate(leveled)}
    nl = len(leveled)
    nvar = nn + nl
    rows, cols, vals, lo, hi = [], [], [], [], []
    r = 0

    def row(entries, low, high):
        nonlocal r
        for j, v in entries:
            rows.append(r)
            cols.append(j)
            vals.append(v)
        lo.append(low)
        hi.append(high)
        r += 1

    by_class: dict = {c: [] for c in classes}
    for j, (c, _, _) in enumerate(nodes):
        by_class[c].append(j)
    rset = set(root_classes(g, roots))
    for c in classes:
        row([(j, 1.0) for j in by_class[c]], 1.0 if c in rset else 0.0, 1.0)
    ub = np.ones(nvar)
    lb = np.zeros(nvar)
    for c in leveled:
        ub[lidx[c]] = sizes[comp[cidx[c]]] - 1
    for j, (c, n, _) in enumerate(nodes):
        for k in dict.fromkeys(g.find(k) for k in n.children):
            if k == c:
                ub[j] = 0.0  # a node that is its own descendant can never be chosen
                continue
            # x_j <= sum(x in k)
            row([(j, 1.0)] + [(i, -1.0) for i in by_class[k]], -np.inf, 0.0)
            if comp[cidx[c]] == comp[cidx[k]]:
                # level(c) - level(k) >= 1 - M (1 - x_j)
                big_m = float(sizes[comp[cidx[c]]])
                row([(lidx[c], 1.0), (lidx[k], -1.0), (j, -big_m)], 1.0 - big_m, np.inf)
    A = coo_matrix((vals, (rows, cols)), shape=(r, nvar)).tocsr()
    integrality = np.concatenate([np.ones(nn), np.zeros(nl)])
    bounds = Bounds(lb, ub)
    cost_vec = np.concatenate([np.array([node_cost(n, m) for _, n, _ in nodes], float), np.zeros(nl)])

    res = _solve(cost_vec, A, lo, hi, integrality, bounds, lim.max_time - (time.perf_counter() - t0))
    if res.status != 0 or res.x is None:
        if res.status == 2:
            raise ExtractionError("extraction ILP is infeasible")
        msg = f"ILP extraction not proven optimal within {lim.max_time:g}s ({res.message}); using greedy"
        log.warning(msg)
        x = extract_greedy(g, roots, m)
        x.warnings.append(msg)
        return x
    best = int(round(res.fun))

    # tie-break: same cost, oldest nodes
    A2 = coo_matrix((np.concatenate([vals, cost_vec[:nn]]),
                     (np.concatenate([rows, np.full(nn, r)]), np.concatenate([cols, np.arange(nn)]))),
                    shape=(r + 1, nvar)).tocsr()
    rank_vec = np.concatenate([np.array([rk + 1 for _, _, rk in nodes], float), np.zeros(nl)])
    sol = res.x
    remaining = lim.max_time - (time.perf_counter() - t0)
    if remaining > 0.05:
        res2 = _solve(rank_vec, A2, lo + [-np.inf], hi + [best + 0.5], integrality, bounds, remaining)
        if res2.x is not None and res2.status in (0, 1):
            sol = res2.x
    choice = {}
    for j, (c, n, _) in enumerate(nodes):
        if sol[j] > 0.5:
            choice[c] = n
    x = _finish(g, choice, roots, m, "ilp")
    if x.total != best:
        raise ExtractionError(f"ILP objective {best} disagrees with DAG cost {x.total}")
    return x


def _undominated(g, c, m: CostModel) -> list:
    """Nodes of class c, dropping any node n for which another node o has a
    subset of n's child classes and a smaller (cost, rank).  Swapping n for o
    in a selection keeps it closed, adds no edge and costs no more, so an
    optimum survives the pruning."""
    cls = g.classes[c]
    keyed = sorted(((node_cost(n, m), cls.nodes[n], frozenset(g.find(k) for k in n.children), n)
                    for n in cls.nodes), key=lambda t: (t[0], t[1]))
    kept = []
    for cost, rank, kids, n in keyed:
        if not any(kk <= kids for _, _, kk, _ in kept):
            kept.append((cost, rank, kids, n))
    return [t[3] for t in sorted(kept, key=lambda t: t[1])]


def _components(g, classes, cidx) -> np.ndarray:
    """Strongly connected component label per class (edges through any node)."""
    src, dst = [], []
    for c in classes:
        for n in g.classes[c].nodes:
            for k in n.children:
                src.append(cidx[c])
                dst.append(cidx[g.find(k)])
    nc = len(classes)
    adj = coo_matrix((np.ones(len(src)), (src, dst)), shape=(nc, nc)).tocsr()
    _, labels = connected_components(adj, directed=True, connection="strong")
    return labels


# --------------------------------------------------------------- brute force


def extract_brute(g, roots, m: CostModel = DEFAULT_COST) -> Extraction:
    """Exhaustive search; a test oracle for small graphs only."""
    classes = relevant_classes(g, roots)
    total_nodes = sum(len(g.classes[c].nodes) for c in classes)
    if total_nodes > BRUTE_MAX_NODES:
        raise ValueError(f"brute-force extraction limited to {BRUTE_MAX_NODES} nodes, got {total_nodes}")
    if not classes:
        return Extraction({}, list(roots), "brute", DagCost(0, {}))
    options = [g.nodes(c) for c in classes]
    rc = root_classes(g, roots)
    best_choice, best_cost = None, None
    for combo in itertools.product(*options):
        choice = dict(zip(classes, combo))
        if not _acyclic_from(g, choice, rc):
            continue
        cost = dag_cost(choice, rc, m, g.find).total
        if best_cost is None or cost < best_cost:
            best_choice, best_cost = choice, cost
    if best_choice is None:
        raise ExtractionError("no acyclic selection exists")
    return _finish(g, best_choice, roots, m, "brute")


def _acyclic_from(g, choice, roots) -> bool:
    state: dict = {}

    def visit(c):
        st = state.get(c)
        if st == 1:
            return False
        if st == 2:
            return True
        state[c] = 1
        for k in choice[c].children:
            if not visit(g.find(k)):
                return False
        state[c] = 2
        return True

    return all(visit(r) for r in roots)


def extract(g, roots, method: str = "ilp", m: CostModel = DEFAULT_COST,
            lim: Optional[ExtractLimits] = None) -> Extraction:
    lim = lim or ExtractLimits()
    if method == "ilp":
        return extract_ilp(g, roots, m, lim)
    if method == "greedy":
        return extract_greedy(g, roots, m)
    if method == "brute":
        return extract_brute(g, roots, m)
    if method == "original":
        return extract_original(g, roots, m)
    raise ValueError(f"unknown extraction method {method!r}")
