from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from mvdyn.covering import (
    CylinderFunction,
    CylinderSet,
    InfiniteTailSpec,
    TruncationError,
    act_sigma,
    act_sigma_word,
    act_tau,
    build_tail_graph,
    chi,
    covering_points,
    enumerate_tails,
    lift_p,
    partition_of_unity,
    separation_test,
    tau_determinism,
    words,
)
from mvdyn.dynsys import BUILTINS, FiniteDynSys, add_tail, builtin

import oracles


def graph(name):
    return build_tail_graph(builtin(name))


def test_p3_depth_one_cylinders():
    g = graph("P3")
    assert g.cylinders(1) == [((1,), (0, 0)), ((1,), (0, 2)), ((1,), (1, 1)),
                              ((2,), (0, 0)), ((2,), (0, 1)), ((2,), (2, 2))]


@pytest.mark.parametrize("D", [0, 1, 2, 3, 4])
def test_p3_cylinders_match_tail_description(D):
    assert set(graph("P3").cylinders(D)) == oracles.p3_cylinders_from_description(D)
    assert len(graph("P3").cylinders(D)) == 3 * 2**D


@pytest.mark.parametrize("name", BUILTINS)
def test_cylinders_match_brute_force(name):
    s = builtin(name)
    maps = [list(r) for r in s.sigma]
    g = build_tail_graph(s)
    assert set(g.live) == oracles.live(maps, s.m)
    for D in range(4):
        assert set(g.cylinders(D)) == oracles.tails_at_depth(maps, s.m, D)


def test_ns_live_set():
    assert graph("NS").live == {0}


def test_tau_sigma_inverse_on_functions():
    g = graph("P3")
    f = CylinderFunction.from_callable(g, 2, lambda k: Fraction(sum(k[0]) + 7 * k[1][-1]))
    for i in (1, 2):
        assert act_sigma(act_tau(f), i) == f


def test_sigma_word_order():
    g = graph("P3")
    f = CylinderFunction.from_callable(g, 3, lambda k: Fraction(hash(k) % 11))
    # f o sigma~_{12} = (f o sigma~_1) o sigma~_2
    assert act_sigma_word(f, (1, 2)) == act_sigma(act_sigma(f, 1), 2)
    pt = InfiniteTailSpec((), (), (1,), (0,))
    assert act_sigma_word(f, (1, 2))(pt) == f(pt.prepend_word(builtin("P3"), (1, 2)))


def test_chi_rejects_bad_labels():
    with pytest.raises(ValueError, match="malformed word"):
        chi(graph("P3"), (3,))


@pytest.mark.parametrize("name", BUILTINS)
def test_partition_of_unity(name):
    g = graph(name)
    assert all(partition_of_unity(g, k) for k in range(4))


@pytest.mark.parametrize("name", BUILTINS)
def test_tau_determinism(name):
    assert tau_determinism(graph(name), 3)["pass"]


def test_p_inverse_zero_p3():
    g = graph("P3")
    W = CylinderSet.p_inverse(g, [0])
    # X~ minus the two constant tails
    rest = CylinderSet.everything(g) - W
    assert rest.members == {((), (1,)), ((), (2,))}
    for d in range(3):
        Wd = W.refine(d)
        assert all(Wd.image_sigma(i) <= Wd for i in (1, 2))
        assert not Wd.image_tau() <= Wd
    assert "refine 0->2" in W.refine(2).provenance


def test_set_operations_refine_automatically():
    g = graph("FS2")
    a = CylinderSet.of_labels(g, (1,))
    b = CylinderSet.p_inverse(g, [0])
    assert (a | a.complement()).is_everything()
    assert (a & a.complement()).is_empty()
    assert (a - b) <= a
    assert CylinderSet.everything(g).coarsen().depth == 0


def test_separation_examples():
    assert separation_test(graph("FS2")).separates
    res = separation_test(graph("SW2"))
    assert not res.separates and res.witness_pair == (0, 1)
    s = builtin("SW2")
    t1, t2 = res.witness_tails
    t1.validate(s)
    t2.validate(s)
    assert [t1.label(k) for k in range(6)] == [t2.label(k) for k in range(6)]
    assert t1.x0 != t2.x0


@pytest.mark.parametrize("name", BUILTINS)
def test_enumerated_tails_are_valid(name):
    s = builtin(name)
    g = build_tail_graph(s)
    for t in enumerate_tails(g) + covering_points(g, max_len=3):
        t.validate(s)
        assert t.x0 in g.live
        assert t.shift().prepend(s, t.label(0)) == t


def test_covering_points_one_point_two_maps():
    g = graph("ONE2")
    pts = covering_points(g, max_len=3)
    assert len(pts) >= 3
    assert len(covering_points(graph("ONE1"), max_len=4)) == 1


def test_truncated_tail_boundary_raises():
    t = add_tail(builtin("NS"), 2)
    g = build_tail_graph(t.system, boundary=t.boundary)
    assert g.live == set(range(t.system.m))
    g.cylinders(0)
    with pytest.raises(TruncationError):
        g.cylinders(3)


def test_dot_export_p3():
    dot = graph("P3").to_dot()
    assert dot.count("->") == 6
    assert dot == graph("P3").to_dot()
    assert 'style=dashed' in graph("NS").to_dot()
    assert graph("ONE2").to_dot().count('"p" -> "p"') == 2


def test_lift_p_and_evaluation():
    s = builtin("P3")
    g = build_tail_graph(s)
    f = lift_p(g, [Fraction(5), Fraction(6), Fraction(7)], 1)
    pt = InfiniteTailSpec((1,), (0,), (2,), (2,))
    assert f(pt) == 7  # x_1 = 2


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.integers(1, 2), st.data())
def test_separation_against_two_tail_search(m, n, data):
    maps = [data.draw(st.lists(st.integers(0, m - 1), min_size=m, max_size=m)) for _ in range(n)]
    s = FiniteDynSys(tuple(str(k) for k in range(m)), tuple(map(tuple, maps)))
    res = separation_test(build_tail_graph(s))
    assert res.separates == (oracles.two_tail_search(maps, m) is None)
