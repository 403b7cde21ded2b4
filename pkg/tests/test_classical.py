"""Tests for classical expressions, states, and entailment."""

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from rqc.classical import (
    And, ArrayVal, BinOp, BitArrayShape, ClassicalState, Cmp, Const, Distinct,
    EvalError, Exists, Floor, Forall, Implies, IntRange, Neg, Not, Or, Sel,
    Store, Var, VerificationDomain, Window, conj, entails, eval_expr,
    expr_to_str, free_vars, holds, subst,
)


def sig(**kw):
    return ClassicalState(kw)


class TestEval:
    def test_linear_combination(self):
        # 2x - y at x=3, y=1
        t = BinOp("-", BinOp("*", Const(2), Var("x")), Var("y"))
        assert eval_expr(t, sig(x=3, y=1)) == 5

    def test_bit_window_value(self):
        # j[m:n] at j = (1,0,1) indexed from 1, m=1, n=3
        t = Window(Var("j"), Var("m"), Var("n"))
        s = sig(j=ArrayVal.from_list([1, 0, 1], start=1), m=1, n=3)
        assert eval_expr(t, s) == 5

    def test_floor_midpoint(self):
        t = Floor(BinOp("/", BinOp("+", Var("l"), Var("r")), Const(2)))
        assert eval_expr(t, sig(l=0, r=3)) == 1
        t2 = BinOp("div", BinOp("+", Var("l"), Var("r")), Const(2))
        assert eval_expr(t2, sig(l=0, r=3)) == 1

    def test_exact_division_is_a_fraction(self):
        t = BinOp("/", Const(1), BinOp("^", Const(2), Var("k")))
        assert eval_expr(t, sig(k=3)) == Fraction(1, 8)
        assert eval_expr(t, sig(k=0)) == 1

    def test_empty_window_is_zero(self):
        t = Window(Var("j"), Const(4), Const(3))
        assert eval_expr(t, sig(j=ArrayVal())) == 0

    def test_select_and_store(self):
        d = ArrayVal.from_list([7, 8, 9])
        assert eval_expr(Sel(Var("d"), Const(2)), sig(d=d)) == 9
        upd = Store(Var("d"), Const(2), Const(0))
        assert eval_expr(Sel(upd, Const(2)), sig(d=d)) == 0
        assert eval_expr(Sel(upd, Const(0)), sig(d=d)) == 7
        # the original binding is untouched
        assert eval_expr(Sel(Var("d"), Const(2)), sig(d=d)) == 9

    def test_unbound_variable_raises(self):
        with pytest.raises(EvalError, match="unbound"):
            eval_expr(Var("nope"), sig())

    def test_index_out_of_range_raises(self):
        with pytest.raises(EvalError, match="out of range"):
            eval_expr(Sel(Var("j"), Const(9)), sig(j=ArrayVal.from_list([1])))

    def test_division_by_zero_raises(self):
        with pytest.raises(EvalError, match="zero"):
            eval_expr(BinOp("/", Const(1), Const(0)), sig())

    def test_mod_and_negative_div_floor(self):
        assert eval_expr(BinOp("div", Const(-3), Const(2)), sig()) == -2
        assert eval_expr(BinOp("mod", Const(-3), Const(2)), sig()) == 1


class TestHolds:
    def test_simple_comparison(self):
        assert holds(Cmp("<=", Var("m"), Var("n")), sig(m=2, n=2))

    def test_bounded_forall_over_array(self):
        # forall k in [m:n-1] . i[k] = 1, with i[1]=1, i[2]=1, i[3]=0
        a = Forall("k", Var("m"), BinOp("-", Var("n"), Const(1)),
                   Cmp("=", Sel(Var("i"), Var("k")), Const(1)))
        s = sig(i=ArrayVal.from_list([1, 1, 0], start=1), m=1, n=3)
        assert holds(a, s)
        assert not holds(a, s.bind("n", 4))

    def test_distinctness_of_cells(self):
        a = Distinct((("q", (Var("x"),)), ("q", (Var("y"),))))
        assert not holds(a, sig(x=1, y=1))
        assert holds(a, sig(x=1, y=2))

    def test_distinct_across_arrays(self):
        a = Distinct((("q", (Const(0),)), ("p", (Const(0),))))
        assert holds(a, sig())

    def test_empty_forall_true_empty_exists_false(self):
        body = Cmp("=", Const(0), Const(1))
        assert holds(Forall("k", Const(3), Const(2), body), sig())
        assert not holds(Exists("k", Const(3), Const(2), body), sig())

    def test_implication_and_not(self):
        a = Implies(Cmp("<", Var("x"), Const(0)), Cmp("=", Const(0), Const(1)))
        assert holds(a, sig(x=5))
        assert holds(Not(Cmp("<", Var("x"), Const(0))), sig(x=5))


class TestEntails:
    def test_strict_less_gives_successor_bound(self):
        d = VerificationDomain.of({"m": IntRange(0, 8), "n": IntRange(0, 8)})
        ok, _ = entails(Cmp("<", Var("m"), Var("n")),
                        Cmp("<=", BinOp("+", Var("m"), Const(1)), Var("n")), d)
        assert ok

    def test_rank_equal_gives_decrement_below(self):
        d = VerificationDomain.of({"r": IntRange(0, 8), "z": IntRange(0, 8)})
        ok, _ = entails(Cmp("=", Var("r"), Var("z")),
                        Cmp("<", BinOp("-", Var("r"), Const(1)), Var("z")), d)
        assert ok

    def test_failure_returns_witness(self):
        d = VerificationDomain.of({"x": IntRange(0, 1)})
        ok, cex = entails(Const(True), Const(False), d)
        assert not ok and cex is not None

    def test_equal_rank_does_not_entail_strict_decrease(self):
        # the side condition that a same-rank recursive call would need
        d = VerificationDomain.of({"m": IntRange(0, 5), "n": IntRange(0, 5),
                                   "z": IntRange(0, 5)})
        pre = And(Cmp("<", Var("m"), Var("n")),
                  Cmp("=", BinOp("-", Var("n"), Var("m")), Var("z")))
        goal = Cmp("<", BinOp("-", Var("n"), Var("m")), Var("z"))
        ok, cex = entails(pre, goal, d)
        assert not ok and holds(pre, cex)

    def test_bit_array_domains_enumerate(self):
        d = VerificationDomain.of({"j": BitArrayShape(0, 2)})
        assert d.size() == 8
        a = Cmp("<=", Window(Var("j"), Const(0), Const(2)), Const(7))
        ok, _ = entails(Const(True), a, d)
        assert ok

    def test_uncovered_variable_raises(self):
        d = VerificationDomain.of({"x": IntRange(0, 1)})
        with pytest.raises(EvalError, match="cover"):
            entails(Cmp("=", Var("y"), Const(0)), Const(True), d)

    def test_constants_are_bound_in_every_state(self):
        d = VerificationDomain.of({"x": IntRange(0, 3)}, {"c": 2})
        ok, _ = entails(Cmp("<=", Var("x"), Const(3)),
                        Cmp("<=", Var("c"), Const(2)), d)
        assert ok

    def test_domain_json_round_trip(self):
        d = VerificationDomain.of(
            {"x": IntRange(0, 3), "j": BitArrayShape(1, 4)},
            {"c": Fraction(3, 8), "tbl": ArrayVal.from_list([1, 0], start=0)},
        )
        assert VerificationDomain.from_json(d.to_json()) == d


### substitution

class TestSubst:
    def test_simple_substitution(self):
        t = subst(Cmp("<", Var("m"), Var("n")), {"m": Const(3)})
        assert t == Cmp("<", Const(3), Var("n"))

    def test_simultaneous_swap(self):
        t = subst(BinOp("-", Var("a"), Var("b")), {"a": Var("b"), "b": Var("a")})
        assert t == BinOp("-", Var("b"), Var("a"))

    def test_quantifier_shadows_binding(self):
        a = Forall("k", Const(0), Var("n"), Cmp("=", Var("k"), Const(0)))
        assert subst(a, {"k": Const(9)}) == a

    def test_capture_is_avoided(self):
        # substituting n := k under a binder for k must rename the binder
        a = Forall("k", Const(0), Const(3), Cmp("<", Var("k"), Var("n")))
        out = subst(a, {"n": Var("k")})
        assert isinstance(out, Forall) and out.var != "k"
        assert out.body == Cmp("<", Var(out.var), Var("k"))

    def test_array_variable_replaced_by_store_term(self):
        t = Sel(Var("d"), Var("x"))
        out = subst(t, {"d": Store(Var("d"), Const(0), Const(1))})
        assert out == Sel(Store(Var("d"), Const(0), Const(1)), Var("x"))
        assert eval_expr(out, sig(d=ArrayVal.from_list([5, 6]), x=0)) == 1

    def test_free_vars(self):
        a = Forall("k", Var("m"), Var("n"), Cmp("=", Sel(Var("i"), Var("k")), Const(1)))
        assert free_vars(a) == {"m", "n", "i"}
        assert free_vars(Distinct((("q", (Var("x"),)),))) == {"x"}


### printing

class TestPrinting:
    def test_precedence_parentheses(self):
        t = BinOp("*", BinOp("+", Var("a"), Var("b")), Const(2))
        assert expr_to_str(t) == "(a + b) * 2"

    def test_window_and_sel(self):
        t = Window(Var("j"), Var("m"), BinOp("-", Var("n"), Const(1)))
        assert expr_to_str(t) == "j[m:n - 1]"

    def test_quantifier_form(self):
        a = Exists("k", Const(0), Var("n"), Cmp("=", Sel(Var("i"), Var("k")), Const(0)))
        assert expr_to_str(a) == "exists k in [0:n] . i[k] = 0"

    def test_conj_drops_trues(self):
        assert conj(Const(True), Var("p")) == Var("p")
        assert conj() == Const(True)


### property tests

_names = st.sampled_from(["x", "y", "z"])


def _terms(depth=2):
    base = st.one_of(st.integers(-4, 4).map(Const), _names.map(Var))
    if depth == 0:
        return base
    sub = _terms(depth - 1)
    return st.one_of(
        base,
        st.tuples(st.sampled_from(["+", "-", "*"]), sub, sub).map(
            lambda t: BinOp(*t)
        ),
    )


def _formulas(depth=2):
    cmps = st.tuples(st.sampled_from(["=", "<", "<="]), _terms(1), _terms(1)).map(
        lambda t: Cmp(*t)
    )
    if depth == 0:
        return cmps
    sub = _formulas(depth - 1)
    return st.one_of(
        cmps,
        st.tuples(sub, sub).map(lambda t: And(*t)),
        st.tuples(sub, sub).map(lambda t: Or(*t)),
        sub.map(Not),
    )


_states = st.fixed_dictionaries(
    {"x": st.integers(-5, 5), "y": st.integers(-5, 5), "z": st.integers(-5, 5)}
).map(ClassicalState)


@given(_formulas(), _formulas(), _states)
def test_conjunction_agrees_with_python_and(a, b, s):
    assert holds(And(a, b), s) == (holds(a, s) and holds(b, s))


@given(_formulas(2), _terms(1), _states)
def test_substitution_lemma(a, t, s):
    # A[x := t] at sigma  ==  A at sigma[x := sigma(t)]
    left = holds(subst(a, {"x": t}), s)
    right = holds(a, s.bind("x", eval_expr(t, s)))
    assert left == right


@given(_formulas(1), _states)
def test_print_parse_stability_of_truth(a, s):
    # printing never changes meaning (parsed back in the parser tests)
    assert isinstance(expr_to_str(a), str)
    assert holds(a, s) in (True, False)


@given(_formulas(1))
def test_entailment_reflexive(a):
    d = VerificationDomain.of(
        {"x": IntRange(-2, 2), "y": IntRange(-2, 2), "z": IntRange(-2, 2)}
    )
    ok, _ = entails(a, a, d)
    assert ok
