from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from microentropy.structures import (
    GROUP_SIGNATURE,
    MEASURE_SIGNATURE,
    build_measure_algebra,
    build_sym,
    cyclic_group,
    from_tables,
    subset_mask,
)
from microentropy.terms import (
    ContinuityModulus,
    Signature,
    TermError,
    app,
    check_term,
    closure,
    closure_to_depth,
    enumerate_term_constraints,
    eval_term,
    materialize_terms,
    parse_term,
    var,
)


def test_bare_variable_is_identity():
    S = build_measure_algebra(3)
    P = subset_mask([1, 3])
    assert eval_term(var(0), [P], S) == P


def test_union_with_complement():
    S = build_measure_algebra(3)
    t = parse_term("(union x0 (complement x1))")
    assert eval_term(t, [subset_mask([1]), subset_mask([1, 2])], S) == subset_mask([1, 3])


def test_square_of_three_cycle():
    S = build_sym(3)
    t = app("mult", var(0), var(0))
    c = S.index("p231")  # 1->2, 2->3, 3->1
    assert S.elements[eval_term(t, [c], S)] == "p312"


def test_wrong_argument_count():
    S = build_measure_algebra(2)
    with pytest.raises(TermError):
        eval_term(parse_term("(union x0 x1)"), [1], S)


def test_check_term_arity_and_symbols():
    check_term(parse_term("(mult x0 (inv x1))"), GROUP_SIGNATURE)
    with pytest.raises(TermError):
        check_term(parse_term("(mult x0)"), GROUP_SIGNATURE)
    with pytest.raises(TermError):
        check_term(parse_term("(frob x0)"), GROUP_SIGNATURE)
    with pytest.raises(TermError):
        check_term(parse_term("(mult x0 x2)"), GROUP_SIGNATURE)


def test_parse_errors():
    for bad in ["(union x0", ")", "(union x0 x1))", "()", ""]:
        with pytest.raises(TermError):
            parse_term(bad)


def test_str_roundtrip():
    t = parse_term("(union x0 (complement x1))")
    assert parse_term(str(t)) == t
    assert t.depth == 2 and t.n_vars == 2


def test_signature_validation():
    with pytest.raises(TermError):
        Signature((("x1", 0),))
    with pytest.raises(TermError):
        Signature((("f", 1), ("f", 2)))
    with pytest.raises(TermError):
        Signature((("f", 1),), (("s", 0),))
    with pytest.raises(TermError):
        Signature((("f", 1),), domain_labels=())


def test_closure_adds_complement():
    S = build_measure_algebra(3)
    P = subset_mask([1])
    out = closure([P], [parse_term("(complement x0)")], S)
    assert out == {P, subset_mask([2, 3])}


def test_closure_of_empty_set_under_constant():
    S = build_measure_algebra(3)
    assert closure([], [parse_term("(one)")], S) == {subset_mask([1, 2, 3])}


def test_generator_of_z4_closes_to_everything():
    Z4 = cyclic_group(4)
    g = Z4.index("g")
    B, fixed = closure_to_depth([g], Z4, 3, symbols=["mult"])
    assert B == set(range(4))
    assert fixed or len(B) == 4


def test_closure_fixed_point_flag():
    S = build_measure_algebra(2)
    B, fixed = closure_to_depth([subset_mask([1])], S, 6)
    assert fixed
    assert B == set(range(4))


def test_constraints_in_z2():
    Z2 = cyclic_group(2)
    e, g = Z2.index("e"), Z2.index("g")
    mult = [parse_term("(mult x0 x1)")]
    cons = {(c.args, c.out) for c in enumerate_term_constraints([e, g], mult, Z2)}
    # brute force over the 4 argument pairs
    expected = {((a, b), Z2.ops["mult"](a, b)) for a in (e, g) for b in (e, g)}
    assert cons == expected
    assert ((g, g), e) in cons and ((e, e), e) in cons


def test_constraints_empty_when_nothing_lands_in_F():
    Z4 = cyclic_group(4)
    g = Z4.index("g")
    assert enumerate_term_constraints([g], [parse_term("(mult x0 x1)")], Z4) == []


def test_identity_unary_symbol_constraints():
    sig = Signature((("f", 1),))
    S = from_tables(sig, ["a", "b", "c"], {"f": {(i,): i for i in range(3)}}, {},
                    [[Fraction(int(i != j)) for j in range(3)] for i in range(3)],
                    {"all": range(3)})
    cons = enumerate_term_constraints([0, 1, 2], [parse_term("(f x0)")], S)
    assert [(c.args, c.out) for c in cons] == [((0,), 0), ((1,), 1), ((2,), 2)]


def test_materialize_depth_one_measure():
    terms = materialize_terms(MEASURE_SIGNATURE, 1)
    assert {str(t) for t in terms} == {"(zero)", "(one)", "(complement x0)",
                                       "(union x0 x1)", "(intersection x0 x1)"}


def test_materialize_terms_are_linear_and_unique():
    terms = materialize_terms(GROUP_SIGNATURE, 2)
    assert len(set(terms)) == len(terms)
    for t in terms:
        vs = t.variables()
        assert len(vs) == len(set(vs))
        assert not t.is_variable


def test_materialize_monotone_in_depth():
    a = set(materialize_terms(GROUP_SIGNATURE, 1))
    b = set(materialize_terms(GROUP_SIGNATURE, 2))
    assert a < b


def test_continuity_modulus():
    eta = ContinuityModulus("union", ("all", "all"), [(Fraction(1, 4), Fraction(1, 2)), (1, 1)])
    assert eta(Fraction(1, 2)) == Fraction(1, 2)
    assert eta(1) == 1
    with pytest.raises(TermError):
        eta(Fraction(1, 8))
    with pytest.raises(TermError):
        ContinuityModulus("f", ("all",), [(Fraction(1, 2), Fraction(1, 2)), (Fraction(1, 4), 1)])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 15), st.integers(0, 15), st.integers(0, 15))
def test_de_morgan_by_evaluation(a, b, c):
    S = build_measure_algebra(4)
    lhs = parse_term("(complement (union x0 x1))")
    rhs = parse_term("(intersection (complement x0) (complement x1))")
    assert eval_term(lhs, [a, b], S) == eval_term(rhs, [a, b], S)
    dist = parse_term("(intersection x0 (union x1 x2))")
    assert eval_term(dist, [a, b, c], S) == (a & b) | (a & c)
