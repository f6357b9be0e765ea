import random

import pytest

from satcc.corpus import corpus_path
from satcc.errors import EvalError
from satcc.frontend import parse
from satcc.oracle import ArrayValue, Environment, diff_test, entry_functions, eval_region, random_env, run_function
from satcc.pipeline import PipelineConfig, optimize_module


def identity(n):
    return [1.0 if i == j else 0.0 for i in range(n) for j in range(n)]


def test_matmul_identity():
    m = parse(corpus_path("matmul").read_text())
    dims = (16, 16)
    zeros = [0.0] * 256
    eye = [1.0 if (k // 16 == k % 16 and k // 16 < 2) else 0.0 for k in range(256)]
    env = Environment(
        {"cx": 2, "cy": 2, "ax": 2, "alpha": 1.0, "beta": 0.0},
        {"a": ArrayValue(dims, list(eye)), "b": ArrayValue(dims, list(eye)),
         "c": ArrayValue(dims, [5.0] * 256), "r": ArrayValue(dims, list(zeros))},
    )
    run_function(m, "mm", env)
    r = env.arrays["r"].data
    assert [r[0], r[1], r[16], r[17]] == [1.0, 0.0, 0.0, 1.0]
    assert all(v == 0.0 for k, v in enumerate(r) if k not in (0, 1, 16, 17))


def test_straight_line():
    m = parse("int f() { int x; x = 1; x = x + 2; return x; }")
    assert run_function(m, "f", Environment()) == 3


def test_loop_sum():
    m = parse("void g(double s[1]) { double t = 0; for (int l = 0; l < 3; l++) t += l; s[0] = t; }")
    env = Environment({}, {"s": ArrayValue((1,), [0.0])})
    run_function(m, "g", env)
    assert env.arrays["s"].data == [3.0]


def test_c_int_semantics():
    m = parse("int f(int a, int b) { return a / b + a % b; }")
    assert run_function(m, "f", Environment({"a": -7, "b": 2})) == -3 + -1


def test_out_of_bounds_raises():
    m = parse("void f(double a[4], int i) { a[i] = 1.0; }")
    with pytest.raises(EvalError):
        run_function(m, "f", Environment({"i": 4}, {"a": ArrayValue((4,), [0.0] * 4)}))


def test_random_env_is_deterministic():
    m = parse(corpus_path("cg").read_text())
    e1 = random_env(m, "spmv", random.Random(7))
    e2 = random_env(m, "spmv", random.Random(7))
    assert e1.scalars == e2.scalars
    assert all(e1.arrays[k].data == e2.arrays[k].data for k in e1.arrays)
    assert 1 <= e1.scalars["nrows"] <= 8
    assert all(0 <= v <= 7 for v in e1.arrays["colidx"].data)


def test_identical_copy_has_zero_error():
    src = corpus_path("matmul").read_text()
    rep = diff_test(parse(src), parse(src), trials=30)
    assert rep.ok and rep.max_rel_err == 0 and rep.n_trials == 30


def test_sign_flip_mutation_detected():
    src = corpus_path("matmul").read_text()
    bad = src.replace("alpha * tmp + beta", "alpha * tmp - beta")
    assert bad != src
    rep = diff_test(parse(src), parse(bad), trials=20)
    assert not rep.ok and rep.failures


def test_zsolve_accsat_within_tolerance():
    m = parse(corpus_path("zsolve").read_text())
    text, _, _ = optimize_module(m, PipelineConfig.for_variant("accsat"))
    assert text != m.source
    rep = diff_test(m, parse(text), trials=100, tol_rel=1e-6)
    assert rep.ok and rep.max_rel_err <= 1e-6 and rep.n_trials == 100


def test_entry_functions_are_region_owners():
    m = parse("double h(double x) { return x * 2.0; }\n"
              "void f(double a[2]) {\n#pragma acc parallel loop\nfor (int i = 0; i < 1; i++) a[0] = h(a[1]);\n}")
    assert entry_functions(m) == ["f"]
    env = Environment({}, {"a": ArrayValue((2,), [0.0, 1.5])})
    run_function(m, "f", env)
    assert env.arrays["a"].data == [3.0, 1.5]
    assert entry_functions(parse("int g() { return 1; }\nint k() { return 2; }")) == ["g", "k"]


def test_eval_region_copies_input():
    m = parse("void f(int n, double a[4]) {\n#pragma acc parallel loop\nfor (int i = 0; i < n; i++) a[i] = 2.0;\n}")
    from satcc.frontend import find_regions
    (r,) = find_regions(m)
    env = Environment({"i": 1, "n": 4}, {"a": ArrayValue((4,), [0.0] * 4)})
    out = eval_region(r.body, env)
    assert out.arrays["a"].data == [0.0, 2.0, 0.0, 0.0]
    assert env.arrays["a"].data == [0.0] * 4
