import pytest
from hypothesis import given, settings, strategies as st

from satcc.corpus import corpus_path
from satcc.errors import KernelSyntaxError, UnsupportedConstructError
from satcc.frontend import find_regions, parse, parse_expr, print_expr, print_module
from satcc.frontend.ast import ArrayRef, Assign, Binary, Directive, FloatConst, For, IntConst, Var


def test_matmul_loop_nest(corpus):
    m = parse(corpus_path("matmul").read_text())
    (f,) = m.functions()
    loops = [s for s in f.body.stmts if isinstance(s, For)]
    assert len(loops) == 1
    outer = loops[0]
    assert outer.is_parallel
    mid = outer.body.stmts[0] if hasattr(outer.body, "stmts") else outer.body
    assert isinstance(mid, For) and mid.is_parallel
    inner = [s for s in mid.body.stmts if isinstance(s, For)]
    assert len(inner) == 1 and not inner[0].is_parallel


def test_empty_file():
    m = parse("")
    assert m.items == ()
    assert print_module(m) == ""
    assert find_regions(m) == []


@pytest.mark.parametrize("src", ["x = *p;", "void f(double *p) { p[0] = 1.0; }",
                                 "void f() { while (1) { } }"])
def test_unsupported(src):
    with pytest.raises((UnsupportedConstructError, KernelSyntaxError)):
        parse(src)


def test_pointer_deref_is_unsupported_construct():
    with pytest.raises(UnsupportedConstructError):
        parse("x = *p;")


def test_syntax_error_has_location():
    with pytest.raises(KernelSyntaxError) as ei:
        parse("void f() {\n  x = (1 + ;\n}")
    assert ei.value.line == 2


def test_regions_matmul():
    (r,) = find_regions(parse(corpus_path("matmul").read_text()))
    assert r.enclosing_loop_vars == ("i", "j")
    assert any(isinstance(s, For) for s in r.body)
    assert r.symbols["a"].dims == (16, 16)


def test_regions_zsolve_anchor_innermost_vector_loop():
    (r,) = find_regions(parse(corpus_path("zsolve").read_text()))
    assert r.enclosing_loop_vars == ("k", "i", "j")
    assert "vector" in r.anchor.pragmas[-1].markers


def test_no_pragmas_no_regions():
    m = parse("void f(int n, double a[4]) { for (int i = 0; i < n; i++) a[i] = 1.0; }")
    assert find_regions(m) == []


def test_directive_markers_ignore_clause_arguments():
    d = Directive.from_text("#pragma acc parallel loop num_gangs(vector)")
    assert d.markers == {"parallel"}
    d = Directive.from_text("#pragma omp target teams distribute parallel for")
    assert {"teams", "distribute", "parallel-for"} <= d.markers
    assert not Directive.from_text("#pragma unroll").is_parallel


def test_round_trip_corpus(corpus):
    for f in corpus:
        m = parse(f.read_text())
        assert parse(print_module(m)) == m, f.name


def test_pragma_lines_survive_printing():
    src = corpus_path("matmul").read_text()
    m = parse(src)
    want = [ln for ln in src.splitlines() if ln.lstrip().startswith("#pragma")]
    got = [ln for ln in print_module(m).splitlines() if ln.lstrip().startswith("#pragma")]
    assert [w.strip() for w in want] == [g.strip() for g in got]


def test_precedence_and_literals():
    e = parse_expr("a - b * c[i][j+1] / 2.0f")
    assert isinstance(e, Binary) and e.op == "-"
    assert isinstance(e.right, Binary) and e.right.op == "/"
    assert isinstance(e.right.left.right, ArrayRef)
    assert parse_expr("0x10").value == 16
    assert isinstance(parse_expr("1e-3"), FloatConst)


def test_compound_assignment_kept_and_desugared():
    m = parse("void f(double s, double a[4]) { s += a[1]; }")
    (st_,) = m.functions()[0].body.stmts
    assert isinstance(st_, Assign) and st_.op == "+="
    d = st_.desugared()
    assert isinstance(d, Binary) and d.op == "+"
    assert d.left == Var("s") and d.right == ArrayRef("a", (IntConst(1),))


# --- property: printing then parsing an expression is the identity

_names = st.sampled_from(["a", "b", "x", "tz1"])
_leaf = st.one_of(
    _names.map(Var),
    st.integers(0, 1000).map(IntConst),
    st.sampled_from([0.5, 1.0, 2.25, 1e-3]).map(lambda v: FloatConst(v, repr(v))),
)


def _extend(inner):
    return st.one_of(
        st.tuples(st.sampled_from(["+", "-", "*", "/", "<", "==", "&&"]), inner, inner).map(
            lambda t: Binary(t[0], t[1], t[2])),
        st.tuples(_names, st.lists(inner, min_size=1, max_size=2)).map(
            lambda t: ArrayRef(t[0], tuple(t[1]))),
    )


@settings(max_examples=300, deadline=None)
@given(st.recursive(_leaf, _extend, max_leaves=12))
def test_expr_round_trip(e):
    assert parse_expr(print_expr(e)) == e
