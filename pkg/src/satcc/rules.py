"""Rewrite rules, constant folding and the saturation driver."""
from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from typing import Optional

from .egraph import EGraph, ENode, const_node

# Upper bound on nodes a single rule application can add: two template nodes
# (fma + neg for FMA2/FMA3), each of which may fold into one fresh constant.
MAX_NODES_PER_APPLICATION = 4


def parse_pattern(text: str):
    """``(+ ?a (* ?b ?c))`` -> ('+', '?a', ('*', '?b', '?c'))."""
    tokens = re.findall(r"\(|\)|[^\s()]+", text)
    pos = 0

    def read():
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError(f"unbalanced pattern: {text}")
        tok = tokens[pos]
        pos += 1
        if tok != "(":
            if tok == ")":
                raise ValueError(f"unbalanced pattern: {text}")
            return tok
        if pos >= len(tokens):
            raise ValueError(f"unbalanced pattern: {text}")
        op = tokens[pos]
        pos += 1
        args = []
        while pos < len(tokens) and tokens[pos] != ")":
            args.append(read())
        if pos >= len(tokens):
            raise ValueError(f"unbalanced pattern: {text}")
        pos += 1
        return (op,) + tuple(args)

    pat = read()
    if pos != len(tokens):
        raise ValueError(f"trailing tokens in pattern: {text}")
    return pat


def pattern_vars(p) -> set:
    if isinstance(p, str):
        return {p} if p.startswith("?") else set()
    return set().union(*(pattern_vars(a) for a in p[1:])) if len(p) > 1 else set()


@dataclass(frozen=True)
class RewriteRule:
    name: str
    pattern: object
    result: object

    def __post_init__(self):
        if isinstance(self.pattern, str):
            object.__setattr__(self, "pattern", parse_pattern(self.pattern))
        if isinstance(self.result, str):
            object.__setattr__(self, "result", parse_pattern(self.result))
        missing = pattern_vars(self.result) - pattern_vars(self.pattern)
        if missing:
            raise ValueError(f"rule {self.name}: result uses unbound {sorted(missing)}")
        if not isinstance(self.pattern, tuple):
            raise ValueError(f"rule {self.name}: pattern must be an operator application")


def default_rules() -> list[RewriteRule]:
    return [
        RewriteRule("FMA1", "(+ ?a (* ?b ?c))", "(fma ?a ?b ?c)"),
        RewriteRule("FMA2", "(- ?a (* ?b ?c))", "(fma ?a (neg ?b) ?c)"),
        RewriteRule("FMA3", "(- (* ?b ?c) ?a)", "(fma (neg ?a) ?b ?c)"),
        RewriteRule("COMM-ADD", "(+ ?a ?b)", "(+ ?b ?a)"),
        RewriteRule("COMM-MUL", "(* ?a ?b)", "(* ?b ?a)"),
        RewriteRule("ASSOC-ADD1", "(+ ?a (+ ?b ?c))", "(+ (+ ?a ?b) ?c)"),
        RewriteRule("ASSOC-ADD2", "(+ (+ ?a ?b) ?c)", "(+ ?a (+ ?b ?c))"),
        RewriteRule("ASSOC-MUL1", "(* ?a (* ?b ?c))", "(* (* ?a ?b) ?c)"),
        RewriteRule("ASSOC-MUL2", "(* (* ?a ?b) ?c)", "(* ?a (* ?b ?c))"),
    ]


def rules_by_name(names) -> list[RewriteRule]:
    table = {r.name: r for r in default_rules()}
    return [table[n] for n in names]


# ------------------------------------------------------------------ matching

def match_class(g: EGraph, pat, cid: int, subst: dict):
    """Yield every substitution extending ``subst`` under which ``pat`` matches ``cid``."""
    cid = g.find(cid)
    if isinstance(pat, str):
        if pat.startswith("?"):
            bound = subst.get(pat)
            if bound is None:
                s = dict(subst)
                s[pat] = cid
                yield s
            elif g.find(bound) == cid:
                yield subst
            return
        raise ValueError(f"bare literal {pat!r} in pattern")
    op, args = pat[0], pat[1:]
    for n in g.nodes(cid):
        if n.op != op or len(n.children) != len(args):
            continue
        yield from _match_children(g, args, n.children, 0, subst)


def _match_children(g, args, kids, i, subst):
    if i == len(args):
        yield subst
        return
    for s in match_class(g, args[i], kids[i], subst):
        yield from _match_children(g, args, kids, i + 1, s)


def instantiate(g: EGraph, tmpl, subst: dict) -> int:
    if isinstance(tmpl, str):
        return subst[tmpl]
    kids = tuple(instantiate(g, a, subst) for a in tmpl[1:])
    return g.add(ENode(tmpl[0], None, kids))


# ----------------------------------------------------------------- saturate

@dataclass(frozen=True)
class SaturationLimits:
    max_nodes: int = 10000
    max_time: float = 10.0
    max_iters: int = 10

    def __post_init__(self):
        if self.max_nodes <= 0 or self.max_time <= 0 or self.max_iters <= 0:
            raise ValueError("saturation limits must be positive")


@dataclass
class SaturationReport:
    iterations_run: int = 0
    nodes_final: int = 0
    stop_reason: str = "saturated"  # saturated | node_limit | time_limit | iter_limit
    per_rule_match_counts: dict = field(default_factory=dict)
    elapsed_s: float = 0.0


def constant_fold(g: EGraph) -> int:
    """Attach constants to every class whose value is fixed by constant operands.

    Returns the number of classes that gained a constant.
    """
    from .egraph import fold, FOLDABLE
    gained = 0
    changed = True
    while changed:
        changed = False
        for cid in g.class_ids():
            if cid not in g.classes or g.classes[cid].const is not None:
                continue
            for n in g.nodes(cid):
                if n.op not in FOLDABLE:
                    continue
                ks = [g.const_of(c) for c in n.children]
                if any(k is None for k in ks):
                    continue
                value = fold(n.op, [k[1] for k in ks])
                if value is None:
                    continue
                g.classes[cid].const = value
                g.union(cid, g.add(const_node(*value)))
                gained += 1
                changed = True
                break
        g.rebuild()
    return gained


def saturate(g: EGraph, rules: Optional[list] = None, limits: SaturationLimits = SaturationLimits()
             ) -> SaturationReport:
    rules = default_rules() if rules is None else list(rules)
    rep = SaturationReport(per_rule_match_counts={r.name: 0 for r in rules})
    t0 = time.perf_counter()
    deadline = t0 + limits.max_time
    g.fold_budget = limits.max_nodes
    stop: Optional[str] = None
    try:
        g.rebuild()
        for _ in range(limits.max_iters):
            if g.n_nodes >= limits.max_nodes:
                stop = "node_limit"
                break
            if time.perf_counter() >= deadline:
                stop = "time_limit"
                break
            # collect every match against a fixed graph, then apply
            matches = []
            for rule in rules:
                for cid in g.class_ids():
                    for s in match_class(g, rule.pattern, cid, {}):
                        matches.append((rule, cid, s))
                        rep.per_rule_match_counts[rule.name] += 1
                if time.perf_counter() >= deadline:
                    stop = "time_limit"
                    break
            if stop:
                break
            rep.iterations_run += 1
            nodes0, unions0 = g.n_nodes, g.n_unions
            for rule, cid, s in matches:
                if g.n_nodes >= limits.max_nodes:
                    stop = "node_limit"
                    break
                if time.perf_counter() >= deadline:
                    stop = "time_limit"
                    break
                g.union(cid, instantiate(g, rule.result, s))
            g.rebuild()
            if stop:
                break
            if g.n_nodes == nodes0 and g.n_unions == unions0:
                stop = "saturated"
                break
        else:
            stop = "iter_limit"
    finally:
        g.fold_budget = None
    rep.stop_reason = stop or "saturated"
    rep.nodes_final = g.n_nodes
    rep.elapsed_s = time.perf_counter() - t0
    return rep


__all__ = ["RewriteRule", "SaturationLimits", "SaturationReport", "default_rules", "rules_by_name",
           "saturate", "constant_fold", "match_class", "instantiate", "parse_pattern",
           "MAX_NODES_PER_APPLICATION"]
