import pytest

from satcc.cost import CostModel, dag_cost, node_cost, reachable, tree_cost
from satcc.egraph import EGraph, ENode, const_node
from satcc.errors import ContractViolation
from satcc.extract import extract_ilp


def var(g, name):
    return g.add(ENode("var", (name, (name, "outer"))))


def test_node_costs():
    assert node_cost(const_node("double", 3.14)) == 0
    assert node_cost(ENode("var", ("dt", ("dt", "outer")))) == 1
    assert node_cost(ENode("phi", ("if", 3, "x", ("x", "outer")))) == 1
    assert node_cost(ENode("load", (("njacZ", "outer"), "njacZ", ("init",)), (0, 1))) == 100
    for op in ("+", "-", "*", "fma", "<"):
        n = ENode(op, None, (0, 1, 2) if op == "fma" else (0, 1))
        assert node_cost(n) == 10
    assert node_cost(ENode("/", None, (0, 1))) == 100
    assert node_cost(ENode("call", "sqrt", (0,))) == 100


def test_custom_model():
    m = CostModel.from_dict({"heavy_cost": 50})
    assert node_cost(ENode("/", None, (0, 1)), m) == 50
    with pytest.raises(ValueError):
        CostModel(op_cost=-1)
    with pytest.raises(ValueError):
        CostModel(heavy_cost=5)


def test_load_selection_cost():
    g = EGraph()
    i = var(g, "i")
    ld = g.add(ENode("load", (("a", "outer"), "a", ("init",)), (i,)))
    choice = {c: g.nodes(c)[0] for c in g.class_ids()}
    assert dag_cost(choice, [ld]).total == 101


def _shared():
    g = EGraph()
    a, b, c, d = (var(g, n) for n in "abcd")
    ab = g.add(ENode("+", None, (a, b)))
    x = g.add(ENode("*", None, (ab, c)))
    y = g.add(ENode("*", None, (ab, d)))
    return g, [x, y], ab


def test_shared_subexpression_counted_once():
    g, roots, ab = _shared()
    choice = {c: g.nodes(c)[0] for c in g.class_ids()}
    cost = dag_cost(choice, roots)
    assert cost.total == 34
    trees = sum(tree_cost(choice, r) for r in roots)
    assert trees == 46 and cost.total < trees


def test_single_const_root():
    g = EGraph()
    k = g.add(const_node("int", 5))
    assert dag_cost({k: g.nodes(k)[0]}, [k]).total == 0


def test_missing_choice_is_contract_violation():
    g, roots, ab = _shared()
    choice = {c: g.nodes(c)[0] for c in g.class_ids() if c != ab}
    with pytest.raises(ContractViolation):
        reachable(choice, roots)


def test_dag_cost_matches_ilp_objective():
    g, roots, _ = _shared()
    x = extract_ilp(g, roots)
    assert dag_cost(x.choice, roots).total == x.total == 34
