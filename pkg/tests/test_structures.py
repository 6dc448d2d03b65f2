from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from microentropy.structures import (
    ModelTooLarge,
    SoficMap,
    StructureError,
    build_dyn_measure_algebra,
    build_group,
    build_measure_algebra,
    build_sym,
    cell_masses,
    check_structure,
    compose,
    cyclic_group,
    fixed_points,
    format_sofic_map,
    from_tables,
    inverse,
    make_join_partition,
    model_family,
    parse_sofic_map,
    subset_mask,
)
from microentropy.terms import Signature

from _helpers import sym_perms


def test_measure_algebra_r1():
    S = build_measure_algebra(1)
    assert S.size == 2
    assert [S.states["mu"](i) for i in range(2)] == [0, 1]
    assert S.metric(0, 1) == 1


def test_disjoint_singletons_distance():
    S = build_measure_algebra(4)
    assert S.metric(subset_mask([1]), subset_mask([2])) == Fraction(1, 2)


def test_measure_algebra_r3():
    S = build_measure_algebra(3)
    assert S.size == 8
    assert S.states["mu"](subset_mask([1, 3])) == Fraction(2, 3)


@pytest.mark.parametrize("r", [1, 2, 3])
def test_builtin_models_are_sound(r):
    assert check_structure(build_measure_algebra(r)) == []
    assert check_structure(build_sym(r)) == []


def test_measure_algebra_too_large():
    with pytest.raises(ModelTooLarge):
        build_measure_algebra(17)
    with pytest.raises(ModelTooLarge):
        build_sym(9)


def test_sym2():
    S = build_sym(2)
    assert S.elements == ("p12", "p21")
    tau = S.states["tau"]
    assert tau(0) == 1 and tau(1) == 0
    assert S.metric(0, 1) == 1


def test_trace_of_transposition_in_sym3():
    S = build_sym(3)
    assert S.states["tau"](S.index("p213")) == Fraction(1, 3)


def test_sym3_metric_identity_by_hand():
    S = build_sym(3)
    a, b = S.index("p213"), S.index("p321")  # (1 2) and (1 3)
    prod = S.ops["mult"](a, S.ops["inv"](b))
    assert S.metric(a, b) == 1
    assert 1 - S.states["tau"](prod) == 1
    # (1 2)(1 3) has no fixed points: a 3-cycle
    assert fixed_points(compose((2, 1, 3), (3, 2, 1))) == 0


@pytest.mark.parametrize("r", [1, 2, 3, 4])
def test_hamming_metric_identity_exhaustive(r):
    for p in sym_perms(r):
        for q in sym_perms(r):
            ham = Fraction(sum(x != y for x, y in zip(p, q)), r)
            assert ham == 1 - Fraction(fixed_points(compose(p, inverse(q))), r)


def test_sym_group_axioms():
    S = build_sym(3)
    mult, inv, one = S.ops["mult"], S.ops["inv"], S.ops["one"]()
    for a in range(S.size):
        assert mult(a, inv(a)) == one
        for b in range(S.size):
            for c in range(S.size):
                assert mult(mult(a, b), c) == mult(a, mult(b, c))


def test_cyclic_group_tables():
    Z3 = cyclic_group(3)
    g, g2 = Z3.index("g"), Z3.index("g2")
    assert Z3.ops["mult"](g, g) == g2
    assert Z3.ops["inv"](g) == g2
    assert Z3.states["tau"](Z3.index("e")) == 1
    assert check_structure(Z3) == []


def test_build_group_rejects_non_group():
    with pytest.raises(StructureError):
        build_group(["e", "a"], {("e", "e"): "e", ("e", "a"): "a", ("a", "e"): "a",
                                 ("a", "a"): "a"}, "e")


def test_check_structure_catches_triangle_failure():
    sig = Signature((), domain_labels=("all",))
    D = [[0, 1, 3], [1, 0, 1], [3, 1, 0]]
    S = from_tables(sig, ["a", "b", "c"], {}, {}, D, {"all": range(3)})
    assert any("triangle" in p for p in check_structure(S))


def test_from_tables_non_total():
    sig = Signature((("f", 1),))
    with pytest.raises(StructureError, match="non-total"):
        from_tables(sig, ["a", "b"], {"f": {(0,): 0}}, {}, [[0, 1], [1, 0]], {"all": [0, 1]})


def test_identity_window_acts_trivially():
    sofic = SoficMap(("e",), {})
    S = build_dyn_measure_algebra(3, sofic, ["e"])
    assert all(S.ops["e"](x) == x for x in range(S.size))
    base = build_measure_algebra(3)
    assert S.elements == base.elements
    assert set(S.ops) == set(base.ops) | {"e"}


def test_four_cycle_pushes_forward():
    sofic = SoficMap(("e", "s"), {("s", 4): (2, 3, 4, 1)})
    S = build_dyn_measure_algebra(4, sofic, ["s"])
    assert S.ops["s"](subset_mask([1, 2])) == subset_mask([2, 3])
    assert check_structure(S) == []


def test_window_without_image_at_r():
    sofic = SoficMap(("e", "s"), {("s", 4): (2, 3, 4, 1)})
    with pytest.raises(StructureError):
        build_dyn_measure_algebra(3, sofic, ["s"])


def test_join_with_identity():
    assert make_join_partition("aabb", [(1, 2, 3, 4)]) == (("a",), ("a",), ("b",), ("b",))


def test_join_with_four_cycle():
    join = make_join_partition("aabb", [(1, 2, 3, 4), (2, 3, 4, 1)])
    assert join == (("a", "b"), ("a", "a"), ("b", "a"), ("b", "b"))
    assert len(set(join)) == 4


def test_join_duplicate_coordinates():
    pi = (2, 3, 4, 1)
    single = make_join_partition("abab", [pi])
    double = make_join_partition("abab", [pi, pi])
    classes = lambda labels: {frozenset(i for i, x in enumerate(labels) if x == c) for c in set(labels)}  # noqa: E731
    assert classes(single) == classes(double)


def test_cell_masses():
    assert cell_masses("aab") == {"a": Fraction(2, 3), "b": Fraction(1, 3)}
    assert cell_masses("ab", [Fraction(1, 4), Fraction(3, 4)]) == {"a": Fraction(1, 4),
                                                                   "b": Fraction(3, 4)}


def test_sofic_map_roundtrip():
    text = "identity e\ng 4 2 1 4 3\ng 2 2 1\n"
    sm = parse_sofic_map(text)
    assert sm.image("g", 4) == (2, 1, 4, 3)
    assert sm.image("e", 4) == (1, 2, 3, 4)
    assert parse_sofic_map(format_sofic_map(sm)) == sm


def test_sofic_map_rejects_bad_permutation():
    with pytest.raises(StructureError):
        parse_sofic_map("g 3 1 1 2\n")


def test_model_family_lookup():
    assert model_family("sym") is build_sym
    with pytest.raises(StructureError):
        model_family("hilbert")


@settings(max_examples=40, deadline=None)
@given(st.permutations(range(1, 6)), st.permutations(range(1, 6)))
def test_permutation_helpers(p, q):
    p, q = tuple(p), tuple(q)
    assert compose(p, inverse(p)) == tuple(range(1, 6))
    assert inverse(compose(p, q)) == compose(inverse(q), inverse(p))
