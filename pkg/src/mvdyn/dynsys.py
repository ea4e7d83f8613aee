"""Finite multivariable dynamical systems.

A system is a finite point set together with ``n`` total self-maps.  Points
are addressed by index internally; ``points`` holds their display names.
Maps are numbered from 1, so ``sys.apply(i, x)`` is sigma_i(x).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

DEFAULT_GUARD = 20


class InvalidSystem(ValueError):
    """Invalid system description; ``where`` locates the offending entry."""

    def __init__(self, message: str, where=None):
        super().__init__(message)
        self.where = where


@dataclass(frozen=True)
class FiniteDynSys:
    points: tuple[str, ...]
    sigma: tuple[tuple[int, ...], ...]
    name: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(str(p) for p in self.points))
        object.__setattr__(self, "sigma", tuple(tuple(int(y) for y in row) for row in self.sigma))
        m = len(self.points)
        if m < 1:
            raise InvalidSystem("a system needs at least one point", where="points")
        if len(set(self.points)) != m:
            raise InvalidSystem("point names must be distinct", where="points")
        if len(self.sigma) < 1:
            raise InvalidSystem("a system needs at least one map", where="maps")
        for i, row in enumerate(self.sigma):
            if len(row) != m:
                raise InvalidSystem(f"map {i} has length {len(row)}, expected {m}", where=(i,))
            for x, y in enumerate(row):
                if not 0 <= y < m:
                    raise InvalidSystem(f"maps[{i}][{x}] = {y} is not a point index", where=(i, x))

    @property
    def m(self) -> int:
        return len(self.points)

    @property
    def n(self) -> int:
        return len(self.sigma)

    @property
    def label(self) -> str:
        return self.name or "system"

    def apply(self, i: int, x: int) -> int:
        """sigma_i(x) for a 1-based map label i."""
        return self.sigma[i - 1][x]

    def apply_word(self, w: Sequence[int], x: int) -> int:
        """sigma_w(x) = sigma_{w[0]}(sigma_{w[1]}(... sigma_{w[-1]}(x)))."""
        for i in reversed(w):
            x = self.sigma[i - 1][x]
        return x

    def index(self, point) -> int:
        if isinstance(point, int) and not isinstance(point, bool):
            if 0 <= point < self.m:
                return point
            raise KeyError(f"unknown point index {point}")
        try:
            return self.points.index(str(point))
        except ValueError:
            raise KeyError(f"unknown point {point!r}") from None

    def names(self, xs: Iterable[int]) -> list[str]:
        return [self.points[x] for x in sorted(xs)]

    @property
    def all_points(self) -> frozenset:
        return frozenset(range(self.m))

    # -- serialisation --

    def to_json(self) -> dict:
        out = {"points": list(self.points), "maps": [list(r) for r in self.sigma]}
        if self.name is not None:
            out = {"name": self.name, **out}
        return out

    @classmethod
    def from_json(cls, obj) -> "FiniteDynSys":
        if not isinstance(obj, dict):
            raise InvalidSystem("system JSON must be an object", where="$")
        if "points" not in obj:
            raise InvalidSystem("missing field 'points'", where="points")
        if "maps" not in obj:
            raise InvalidSystem("missing field 'maps'", where="maps")
        points, maps = obj["points"], obj["maps"]
        if not isinstance(points, list):
            raise InvalidSystem("'points' must be a list", where="points")
        if not isinstance(maps, list) or not all(isinstance(r, list) for r in maps):
            raise InvalidSystem("'maps' must be a list of lists", where="maps")
        for i, row in enumerate(maps):
            for x, y in enumerate(row):
                if not isinstance(y, int) or isinstance(y, bool):
                    raise InvalidSystem(f"maps[{i}][{x}] is not an integer", where=(i, x))
        name = obj.get("name")
        if name is not None and not isinstance(name, str):
            raise InvalidSystem("'name' must be a string", where="name")
        return cls(tuple(points), tuple(tuple(r) for r in maps), name)


def load_system(path) -> FiniteDynSys:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidSystem(f"malformed JSON: {exc}", where=f"line {exc.lineno}") from None
    sys = FiniteDynSys.from_json(obj)
    if sys.name is None:
        sys = FiniteDynSys(sys.points, sys.sigma, Path(path).stem)
    return sys


BUILTINS = ("P3", "FS2", "SW2", "NS", "ONE1", "ONE2", "DC")


def builtin(name: str) -> FiniteDynSys:
    """Load one of the systems shipped in ``mvdyn/systems``."""
    key = name.upper()
    if key not in BUILTINS:
        raise KeyError(f"no builtin system {name!r}; choose from {', '.join(BUILTINS)}")
    text = resources.files("mvdyn").joinpath("systems", f"{key.lower()}.json").read_text()
    return FiniteDynSys.from_json(json.loads(text))


def builtins() -> list[FiniteDynSys]:
    return [builtin(k) for k in BUILTINS]


def resolve_system(spec: str) -> FiniteDynSys:
    """A file path, or the name of a builtin system."""
    p = Path(spec)
    if p.exists():
        return load_system(p)
    return builtin(spec)


# -- classical dynamics -----------------------------------------------------


@dataclass(frozen=True)
class RangeDeficiency:
    range_union: frozenset
    deficiency: frozenset
    surjective: bool


def range_deficiency(sys: FiniteDynSys) -> RangeDeficiency:
    image = frozenset(y for row in sys.sigma for y in row)
    U = sys.all_points - image
    return RangeDeficiency(image, U, not U)


def is_surjective(sys: FiniteDynSys) -> bool:
    return range_deficiency(sys).surjective


def forward_orbit(sys: FiniteDynSys, x) -> frozenset:
    x = sys.index(x)
    seen = {x}
    frontier = [x]
    while frontier:
        y = frontier.pop()
        for row in sys.sigma:
            z = row[y]
            if z not in seen:
                seen.add(z)
                frontier.append(z)
    return frozenset(seen)


def is_invariant(sys: FiniteDynSys, A) -> bool:
    return all(row[x] in A for row in sys.sigma for x in A)


def is_bi_invariant(sys: FiniteDynSys, A) -> bool:
    A = frozenset(A)
    return is_invariant(sys, A) and all(
        x in A for row in sys.sigma for x in range(sys.m) if row[x] in A
    )


def _canonical(sets: Iterable[frozenset]) -> list[frozenset]:
    return sorted(set(sets), key=lambda s: (len(s), sorted(s)))


def _guard(sys: FiniteDynSys, guard: int):
    if sys.m > guard:
        raise ValueError(
            f"exhaustive subset scan refused: |X| = {sys.m} exceeds guard {guard} "
            f"(2^{sys.m} candidate subsets)"
        )


def invariant_sets(sys: FiniteDynSys, guard: int = DEFAULT_GUARD) -> list[frozenset]:
    """Every subset A with sigma_i(A) contained in A, by exhaustive scan."""
    _guard(sys, guard)
    out = []
    for mask in range(1 << sys.m):
        A = frozenset(x for x in range(sys.m) if mask >> x & 1)
        if is_invariant(sys, A):
            out.append(A)
    return _canonical(out)


def weak_components(sys: FiniteDynSys) -> list[frozenset]:
    parent = list(range(sys.m))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for row in sys.sigma:
        for x, y in enumerate(row):
            ra, rb = find(x), find(y)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, set] = {}
    for x in range(sys.m):
        groups.setdefault(find(x), set()).add(x)
    return _canonical(frozenset(g) for g in groups.values())


def bi_invariant_sets(sys: FiniteDynSys, guard: int = DEFAULT_GUARD) -> list[frozenset]:
    """Unions of weakly connected components of the map graph.

    When ``|X| <= guard`` the result is cross-checked against a brute-force
    subset scan and an ``AssertionError`` is raised on disagreement.
    """
    comps = weak_components(sys)
    out = []
    for r in range(len(comps) + 1):
        for pick in itertools.combinations(comps, r):
            out.append(frozenset().union(*pick))
    out = _canonical(out)
    if sys.m <= guard:
        brute = _canonical(
            A for A in (
                frozenset(x for x in range(sys.m) if mask >> x & 1) for mask in range(1 << sys.m)
            ) if is_bi_invariant(sys, A)
        )
        assert brute == out, f"bi-invariant scan disagrees: {brute} vs {out}"
    return out


@dataclass(frozen=True)
class Minimality:
    minimal: bool
    witness_point: Optional[int] = None
    witness_set: Optional[frozenset] = None

    def __bool__(self):
        return self.minimal


def is_minimal(sys: FiniteDynSys) -> Minimality:
    # finite discrete X: a dense orbit is the whole space
    for x in range(sys.m):
        orb = forward_orbit(sys, x)
        if orb != sys.all_points:
            return Minimality(False, x, orb)
    return Minimality(True)


def full_orbit(sys: FiniteDynSys, x) -> frozenset:
    x = sys.index(x)
    return next(c for c in weak_components(sys) if x in c)


# -- adding a tail ----------------------------------------------------------


@dataclass(frozen=True)
class TailedSys:
    """A non-surjective system with a depth-K backward chain under each u in U.

    ``system`` is the extended finite system; the base points keep their
    indices and tail point (u, -k) gets index ``tail_index[(u, k)]``.
    """

    base: FiniteDynSys
    K: int
    system: FiniteDynSys
    U: frozenset
    tail_index: dict = field(compare=False)
    truncation_stable: Optional[bool] = None
    note: str = ""

    @property
    def base_points(self) -> frozenset:
        return frozenset(range(self.base.m))

    def tail_point(self, u: int, k: int) -> int:
        """Index of (u, -k); k = 0 is u itself."""
        if k == 0:
            return u
        return self.tail_index[(u, k)]

    @property
    def boundary(self) -> frozenset:
        """Deepest tail points; artefacts of truncating an infinite tail."""
        return frozenset(self.tail_index[(u, self.K)] for u in self.U)


def _tail_system(sys: FiniteDynSys, K: int):
    U = range_deficiency(sys).deficiency
    names = list(sys.points)
    index = {}
    for u in sorted(U):
        for k in range(1, K + 1):
            index[(u, k)] = len(names)
            names.append(f"({sys.points[u]},{-k})")
    maps = []
    for row in sys.sigma:
        new = list(row)
        for (u, k), idx in sorted(index.items(), key=lambda kv: kv[1]):
            new.append(u if k == 1 else index[(u, k - 1)])
        maps.append(tuple(new))
    tname = f"{sys.name}+tail{K}" if sys.name else None
    return FiniteDynSys(tuple(names), tuple(maps), tname), U, index


def _default_probe(t: TailedSys):
    ext = t.system
    U_ext = range_deficiency(ext).deficiency
    return (
        is_minimal(ext).minimal,
        U_ext == t.boundary,
        is_invariant(ext, t.base_points),
    )


def add_tail(
    sys: FiniteDynSys, K: int, probe: Optional[Callable[[TailedSys], object]] = None
) -> TailedSys:
    """Attach the tail (u, -1), ..., (u, -K) under every u not in the range.

    The true tail is infinite; ``truncation_stable`` records whether ``probe``
    gives the same answer at depth K and K + 1.
    """
    if K < 1:
        raise ValueError("tail depth K must be >= 1")
    if is_surjective(sys):
        return TailedSys(sys, K, sys, frozenset(), {}, True,
                         note="system is surjective; no tail added")
    probe = probe or _default_probe
    ext, U, index = _tail_system(sys, K)
    t = TailedSys(sys, K, ext, U, index,
                  note=f"truncated tail: the deficiency set of the extended system "
                       f"is the boundary {{(u,{-K})}}, an artefact of truncation")
    ext1, _, index1 = _tail_system(sys, K + 1)
    t1 = TailedSys(sys, K + 1, ext1, U, index1)
    stable = probe(t) == probe(t1)
    return TailedSys(sys, K, ext, U, index, stable, t.note)
