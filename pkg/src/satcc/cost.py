"""Operation cost model and DAG cost of an extraction."""
from __future__ import annotations

from dataclasses import dataclass, field

from .egraph import ENode
from .errors import ContractViolation

LIGHT_OPS = ("+", "-", "*", "neg", "fma", "!", "<", "<=", ">", ">=", "==", "!=", "&&", "||")
HEAVY_OPS = ("load", "/", "%", "call")


@dataclass(frozen=True)
class CostModel:
    const_cost: int = 0
    leaf_cost: int = 1
    op_cost: int = 10
    heavy_cost: int = 100

    def __post_init__(self):
        if min(self.const_cost, self.leaf_cost, self.op_cost, self.heavy_cost) < 0:
            raise ValueError("costs must be nonnegative")
        if not self.heavy_cost > self.op_cost > self.leaf_cost >= self.const_cost:
            raise ValueError("expected heavy > op > leaf >= const")

    @classmethod
    def from_dict(cls, d: dict) -> "CostModel":
        return cls(**{k: int(v) for k, v in d.items() if k in cls.__dataclass_fields__})


DEFAULT_COST = CostModel()


def node_cost(n: ENode, m: CostModel = DEFAULT_COST) -> int:
    """Own cost of one node; children are priced through their classes."""
    if n.op == "const":
        return m.const_cost
    if n.op in ("var", "phi"):
        return m.leaf_cost
    if n.op in HEAVY_OPS:
        return m.heavy_cost
    if n.op in LIGHT_OPS:
        return m.op_cost
    raise ValueError(f"no cost for operator {n.op!r}")


@dataclass(frozen=True)
class DagCost:
    total: int
    per_class: dict = field(default_factory=dict)


def reachable(choice: dict, roots, find=lambda c: c) -> list:
    """Classes reachable from ``roots`` through chosen nodes, in DFS preorder."""
    seen: dict = {}
    stack = [find(r) for r in reversed(list(roots))]
    while stack:
        c = stack.pop()
        if c in seen:
            continue
        if c not in choice:
            raise ContractViolation(f"class {c} is reachable but has no chosen node")
        seen[c] = True
        stack.extend(find(k) for k in reversed(choice[c].children))
    return list(seen)


def dag_cost(choice: dict, roots, m: CostModel = DEFAULT_COST, find=lambda c: c) -> DagCost:
    """Sum of chosen-node costs over reachable classes, each class counted once."""
    per = {c: node_cost(choice[c], m) for c in reachable(choice, roots, find)}
    return DagCost(sum(per.values()), per)


def tree_cost(choice: dict, root, m: CostModel = DEFAULT_COST, find=lambda c: c) -> int:
    """Cost with no sharing: every use of a class pays for it again."""
    memo: dict = {}

    def go(c, active):
        c = find(c)
        if c in memo:
            return memo[c]
        if c in active:
            raise ContractViolation("cyclic selection")
        if c not in choice:
            raise ContractViolation(f"class {c} has no chosen node")
        n = choice[c]
        active.add(c)
        total = node_cost(n, m) + sum(go(k, active) for k in n.children)
        active.discard(c)
        memo[c] = total
        return total

    return go(root, set())
