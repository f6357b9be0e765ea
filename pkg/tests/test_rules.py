import math
import random
import time
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from satcc.egraph import EGraph, ENode, const_node
from satcc.rules import (
    MAX_NODES_PER_APPLICATION, RewriteRule, SaturationLimits, constant_fold, default_rules, instantiate,
    match_class, parse_pattern, pattern_vars, rules_by_name, saturate,
)


def evaluate(p, env, neg=lambda v: -v):
    """Independent evaluator for rule patterns; fma(a, b, c) = a + b*c."""
    if isinstance(p, str):
        return env[p]
    op, args = p[0], [evaluate(a, env, neg) for a in p[1:]]
    if op == "+":
        return args[0] + args[1]
    if op == "-":
        return args[0] - args[1]
    if op == "*":
        return args[0] * args[1]
    if op == "neg":
        return neg(args[0])
    if op == "fma":
        return args[0] + args[1] * args[2]
    raise AssertionError(op)


def var(g, name):
    return g.add(ENode("var", (name, (name, "outer"))))


def test_table_has_nine_rules_in_order():
    names = [r.name for r in default_rules()]
    assert names == ["FMA1", "FMA2", "FMA3", "COMM-ADD", "COMM-MUL",
                     "ASSOC-ADD1", "ASSOC-ADD2", "ASSOC-MUL1", "ASSOC-MUL2"]


@pytest.mark.parametrize("name,pattern,result", [
    ("FMA1", "(+ ?a (* ?b ?c))", "(fma ?a ?b ?c)"),
    ("FMA2", "(- ?a (* ?b ?c))", "(fma ?a (neg ?b) ?c)"),
    ("FMA3", "(- (* ?b ?c) ?a)", "(fma (neg ?a) ?b ?c)"),
    ("ASSOC-ADD2", "(+ (+ ?a ?b) ?c)", "(+ ?a (+ ?b ?c))"),
])
def test_rule_shapes(name, pattern, result):
    (r,) = rules_by_name([name])
    assert r.pattern == parse_pattern(pattern) and r.result == parse_pattern(result)


def test_pattern_parsing_errors():
    with pytest.raises(ValueError):
        parse_pattern("(+ ?a")
    with pytest.raises(ValueError):
        RewriteRule("bad", "(+ ?a ?b)", "(+ ?a ?z)")
    assert pattern_vars(parse_pattern("(fma ?a (neg ?b) ?c)")) == {"?a", "?b", "?c"}


@pytest.mark.parametrize("rule", default_rules(), ids=lambda r: r.name)
def test_rule_soundness_random_bindings(rule):
    rng = random.Random(1234)
    vs = sorted(pattern_vars(rule.pattern))
    for _ in range(1000):
        env = {v: rng.uniform(-1e3, 1e3) for v in vs}
        lhs, rhs = evaluate(rule.pattern, env), evaluate(rule.result, env)
        assert math.isclose(lhs, rhs, rel_tol=1e-12, abs_tol=0.0), (env, lhs, rhs)
        # and exactly on the real-number level
        q = {v: Fraction(x) for v, x in env.items()}
        assert evaluate(rule.pattern, q) == evaluate(rule.result, q)


@pytest.mark.parametrize("rule", default_rules(), ids=lambda r: r.name)
def test_rule_applies_in_graph(rule):
    g = EGraph()
    env = {v: var(g, v[1:]) for v in pattern_vars(rule.pattern)}
    root = instantiate(g, rule.pattern, env)
    (s,) = [s for s in match_class(g, rule.pattern, root, {}) if s == env] or [None]
    assert s is not None
    saturate(g, [rule], SaturationLimits(max_iters=1))
    assert list(match_class(g, rule.result, root, env))


def test_constant_fold_class():
    g = EGraph(fold_constants=False)
    c = g.add(ENode("*", None, (g.add(const_node("int", 2)), g.add(const_node("int", 3)))))
    h = g.add(ENode("+", None, (g.add(const_node("double", 1.5)), g.add(const_node("double", 2.5)))))
    x0 = g.add(ENode("*", None, (var(g, "x"), g.add(const_node("int", 0)))))
    assert constant_fold(g) == 2
    assert g.const_of(c) == ("int", 6)
    assert g.const_of(h) == ("double", 4.0)
    assert g.const_of(x0) is None


def test_comm_orbit_saturates():
    g = EGraph()
    a, b = var(g, "a"), var(g, "b")
    root = g.add(ENode("+", None, (a, b)))
    rep = saturate(g, rules_by_name(["COMM-ADD"]))
    assert rep.stop_reason == "saturated"
    assert g.lookup(ENode("+", None, (b, a))) == g.find(root)
    assert len(g.nodes(root)) == 2


def test_fma_after_two_iterations():
    g = EGraph()
    x, y, z = var(g, "x"), var(g, "y"), var(g, "z")
    root = g.add(ENode("+", None, (x, g.add(ENode("*", None, (y, z))))))
    rep = saturate(g, limits=SaturationLimits(max_iters=2))
    assert rep.iterations_run <= 2
    assert any(n.op == "fma" for n in g.nodes(root))


def test_saturation_iteration_limit():
    g = EGraph()
    root = var(g, "t0")
    for k in range(1, 12):
        root = g.add(ENode("+", None, (root, var(g, f"t{k}"))))
    rep = saturate(g, limits=SaturationLimits(max_iters=2))
    assert rep.stop_reason == "iter_limit" and rep.iterations_run == 2


_leaf = st.sampled_from(["x", "y", "z", "w"])


def _tree(inner):
    return st.tuples(st.sampled_from(["+", "-", "*"]), inner, inner)


@settings(max_examples=40, deadline=None)
@given(st.recursive(_leaf, _tree, max_leaves=10))
def test_comm_fma_saturates_small_graphs(tree):
    g = EGraph()

    def build(t):
        if isinstance(t, str):
            return var(g, t)
        return g.add(ENode(t[0], None, (build(t[1]), build(t[2]))))

    build(tree)
    if g.n_classes > 50:
        return
    t0 = time.perf_counter()
    rep = saturate(g, rules_by_name(["FMA1", "FMA2", "FMA3", "COMM-ADD", "COMM-MUL"]))
    assert rep.stop_reason == "saturated"
    assert time.perf_counter() - t0 < 1.0


def test_node_limit_overshoot_bound():
    g = EGraph()
    root = var(g, "t0")
    for k in range(1, 40):
        root = g.add(ENode("+", None, (root, var(g, f"t{k}"))))
    lim = SaturationLimits(max_nodes=10000, max_time=10.0, max_iters=10)
    rep = saturate(g, limits=lim)
    assert rep.stop_reason in ("node_limit", "time_limit", "iter_limit")
    assert rep.nodes_final == g.n_nodes
    assert rep.nodes_final < lim.max_nodes + MAX_NODES_PER_APPLICATION


def test_saturation_preserves_root_values():
    """Every node kept in a class evaluates to the class value (up to rounding)."""
    g = EGraph()
    xs = {n: var(g, n) for n in "abcd"}
    a, b, c, d = xs.values()
    prod = g.add(ENode("*", None, (b, c)))
    e1 = g.add(ENode("-", None, (a, prod)))
    root = g.add(ENode("+", None, (e1, g.add(ENode("*", None, (d, a))))))
    saturate(g)
    env = {xs[k]: v for k, v in zip("abcd", (1.25, -3.5, 7.0, 0.625))}

    def values(cid, depth=0):
        cid = g.find(cid)
        out = set()
        for n in g.nodes(cid):
            if n.op == "var":
                out.add(env[cid])
                continue
            if depth > 6:
                continue
            kids = [values(k, depth + 1) for k in n.children]
            if any(not k for k in kids):
                continue
            ks = [next(iter(k)) for k in kids]
            out.add(round(evaluate((n.op,) + tuple(f"?{i}" for i in range(len(ks))),
                                   {f"?{i}": v for i, v in enumerate(ks)}), 9))
        return out

    assert values(root) == {round(1.25 - (-3.5 * 7.0) + 0.625 * 1.25, 9)}
