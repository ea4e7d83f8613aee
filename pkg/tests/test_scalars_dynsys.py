import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from mvdyn import scalars
from mvdyn.dynsys import (
    BUILTINS,
    FiniteDynSys,
    InvalidSystem,
    add_tail,
    bi_invariant_sets,
    builtin,
    forward_orbit,
    invariant_sets,
    is_minimal,
    is_surjective,
    load_system,
    range_deficiency,
    weak_components,
)

import oracles


# -- scalars ----------------------------------------------------------------


def test_sqrt_exact_squares_and_surds():
    assert scalars.sqrt_exact(4) == 2
    r2 = scalars.sqrt_exact(2)
    assert r2 * r2 == 2
    assert scalars.sqrt_exact(8) * scalars.sqrt_exact(2) == 4
    assert (1 / r2) * r2 == 1


def test_quadsurd_rejects_mixed_radicands():
    with pytest.raises(ValueError):
        scalars.sqrt_exact(2) + scalars.sqrt_exact(3)


@given(st.integers(2, 12), st.integers(1, 11))
def test_roots_of_unity_sum_to_zero(M, k):
    if k % M == 0:
        return
    z = scalars.Cyclotomic.root(M, k)
    acc = scalars.Cyclotomic(M, [1])
    p = scalars.Cyclotomic(M, [1])
    for _ in range(M - 1):
        p = p * z
        acc = acc + p
    assert acc == 0
    assert abs(complex(z) ** M - 1) < 1e-12


def test_cyclotomic_conjugate_is_inverse():
    z = scalars.Cyclotomic.root(5, 2)
    assert z * z.conjugate() == 1


@given(st.fractions(max_denominator=50))
def test_encode_roundtrip_fraction(x):
    assert scalars.decode(scalars.encode(x)) == x


def test_encode_roundtrip_surd_and_complex():
    s = Fraction(1, 3) + scalars.sqrt_exact(5)
    assert scalars.decode(json.loads(json.dumps(scalars.encode(s)))) == s
    assert scalars.close(scalars.decode(scalars.encode(0.5 + 2j)), 0.5 + 2j)


# -- systems ----------------------------------------------------------------


@pytest.mark.parametrize("name", BUILTINS)
def test_builtins_roundtrip(name, tmp_path):
    s = builtin(name)
    path = tmp_path / "s.json"
    path.write_text(json.dumps(s.to_json()))
    assert load_system(path) == s


@pytest.mark.parametrize("obj, where", [
    ({"points": [], "maps": [[]]}, "points"),
    ({"points": ["a"], "maps": []}, "maps"),
    ({"points": ["a", "b"], "maps": [[0]]}, (0,)),
    ({"points": ["a"], "maps": [[1]]}, (0, 0)),
    ({"points": ["a"], "maps": [["0"]]}, (0, 0)),
    ({"points": ["a", "a"], "maps": [[0, 0]]}, "points"),
    ({"maps": [[0]]}, "points"),
    ([1, 2], "$"),
])
def test_invalid_systems_point_at_the_entry(obj, where):
    with pytest.raises(InvalidSystem) as err:
        FiniteDynSys.from_json(obj)
    assert err.value.where == where


def test_malformed_json(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{not json")
    with pytest.raises(InvalidSystem):
        load_system(p)


def test_apply_word_composes_right_to_left():
    s = builtin("P3")
    # sigma_1 sigma_2 (2) = sigma_1(2) = 0 ; sigma_2 sigma_1 (1) = sigma_2(1) = 0
    assert s.apply_word((1, 2), 2) == 0
    assert s.apply_word((2, 1), 1) == 0
    assert s.apply_word((), 2) == 2


def test_p3_lattices_match_example():
    s = builtin("P3")
    assert invariant_sets(s) == [frozenset(), frozenset({0}), frozenset({0, 1}),
                                 frozenset({0, 2}), frozenset({0, 1, 2})]
    assert bi_invariant_sets(s) == [frozenset(), frozenset({0, 1, 2})]
    mini = is_minimal(s)
    assert not mini and mini.witness_point == 0 and mini.witness_set == {0}


def test_range_deficiency():
    assert range_deficiency(builtin("NS")).deficiency == {1}
    assert is_surjective(builtin("FS2"))
    assert not is_surjective(builtin("NS"))


def test_dc_components():
    s = builtin("DC")
    assert weak_components(s) == [frozenset({0, 1}), frozenset({2, 3})]
    assert len(bi_invariant_sets(s)) == 4


def test_invariant_scan_guard():
    big = FiniteDynSys(tuple(str(k) for k in range(21)), (tuple(range(21)),))
    with pytest.raises(ValueError, match="guard"):
        invariant_sets(big)


def test_add_tail_structure():
    t = add_tail(builtin("NS"), 3)
    ext = t.system
    assert ext.m == 5 and t.U == {1}
    # (1,-1) -> 1 -> 0 under every map
    for i in (1, 2):
        assert ext.apply(i, t.tail_point(1, 1)) == 1
        assert ext.apply(i, t.tail_point(1, 3)) == t.tail_point(1, 2)
    assert range_deficiency(ext).deficiency == t.boundary
    assert t.truncation_stable
    assert add_tail(builtin("FS2"), 2).system == builtin("FS2")
    with pytest.raises(ValueError):
        add_tail(builtin("NS"), 0)


@st.composite
def small_systems(draw):
    m = draw(st.integers(1, 4))
    n = draw(st.integers(1, 3))
    maps = [draw(st.lists(st.integers(0, m - 1), min_size=m, max_size=m)) for _ in range(n)]
    return m, maps


@settings(max_examples=150, deadline=None)
@given(small_systems())
def test_lattices_against_brute_force(sysdata):
    m, maps = sysdata
    s = FiniteDynSys(tuple(str(k) for k in range(m)), tuple(map(tuple, maps)))
    assert set(invariant_sets(s)) == oracles.invariant_sets(maps, m)
    assert set(bi_invariant_sets(s)) == oracles.bi_invariant_sets(maps, m)
    assert is_minimal(s).minimal == oracles.minimal(maps, m)
    assert is_surjective(s) == oracles.surjective(maps, m)
    for x in range(m):
        assert x in forward_orbit(s, x)
