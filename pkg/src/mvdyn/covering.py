"""The covering system as the space of backward paths in the tail graph.

A point of the covering space is an infinite backward path
``(i_0, i_1, ...; x_0, x_1, ...)`` with ``sigma_{i_k}(x_{k+1}) = x_k``.  Such
points are never stored one by one.  Everything is done with *cylinders*:
a depth-D cylinder pins the first D labels and the first D+1 vertices, and
is encoded as the key ``(labels, vertices)``.  Locally constant functions
and clopen sets are sparse maps / sets of keys at a fixed depth.

Conventions:
    sigma~_i prepends:  (i, x) -> (i i_0 i_1 ..., sigma_i(x_0) x_0 x_1 ...)
    tau drops the first label and vertex; tau o sigma~_i = id.
    p(i, x) = x_0 and p_k = p o tau^k.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Optional, Sequence, Union

from . import scalars
from .dynsys import FiniteDynSys

Key = tuple  # (labels: tuple[int, ...], vertices: tuple[int, ...])


class TruncationError(RuntimeError):
    """A computation needed paths beyond a truncated tail."""


def key_depth(key: Key) -> int:
    return len(key[0])


def truncate(key: Key, depth: int) -> Key:
    labels, verts = key
    if depth > len(labels):
        raise ValueError(f"cannot truncate depth {len(labels)} key to depth {depth}")
    return labels[:depth], verts[: depth + 1]


def tau_key(key: Key) -> Key:
    return key[0][1:], key[1][1:]


# -- tail graph -------------------------------------------------------------


@dataclass(frozen=True)
class TailGraph:
    sys: FiniteDynSys
    edges: tuple  # (source y, label i, target sigma_i(y))
    live: frozenset
    boundary: frozenset = frozenset()
    preimages: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def n(self) -> int:
        return self.sys.n

    def sigma(self, i: int, x: int) -> int:
        return self.sys.sigma[i - 1][x]

    def extend(self, key: Key) -> list[Key]:
        """Depth+1 cylinders refining ``key``."""
        labels, verts = key
        last = verts[-1]
        pre = self.preimages[last]
        if not pre and last in self.boundary:
            raise TruncationError(
                f"vertex {self.sys.points[last]} sits on the truncation boundary; "
                f"no backward paths are available past it"
            )
        return [(labels + (i,), verts + (y,)) for i, y in pre]

    def cylinders(self, depth: int) -> list[Key]:
        if depth < 0:
            raise ValueError("depth must be >= 0")
        keys = [((), (x,)) for x in sorted(self.live)]
        for _ in range(depth):
            keys = [c for k in keys for c in self.extend(k)]
        return sorted(keys)

    def is_cylinder(self, key: Key) -> bool:
        labels, verts = key
        if len(verts) != len(labels) + 1 or verts[-1] not in self.live:
            return False
        return all(self.sigma(i, verts[k + 1]) == verts[k] for k, i in enumerate(labels))

    def sigma_key(self, i: int, key: Key) -> Key:
        """sigma~_i applied to a cylinder: depth goes up by one."""
        labels, verts = key
        return (i,) + labels, (self.sigma(i, verts[0]),) + verts

    def descendants(self, key: Key, depth: int) -> list[Key]:
        keys = [key]
        for _ in range(depth - key_depth(key)):
            keys = [c for k in keys for c in self.extend(k)]
        return keys

    def to_dot(self) -> str:
        pts = self.sys.points
        lines = [f'digraph "{self.sys.label}" {{']
        for x in range(self.sys.m):
            attrs = f'label="{pts[x]}"'
            if x not in self.live:
                attrs += ', style=dashed, color=gray'
            elif x in self.boundary:
                attrs += ', style=dotted'
            lines.append(f'  "{pts[x]}" [{attrs}];')
        for y, i, x in self.edges:
            lines.append(f'  "{pts[y]}" -> "{pts[x]}" [label="{i}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def complex_json(self, depth: int) -> dict:
        return {
            "depth": depth,
            "cylinders": [
                {"labels": list(l), "vertices": [self.sys.points[v] for v in vs]}
                for l, vs in self.cylinders(depth)
            ],
        }


def build_tail_graph(sys: FiniteDynSys, boundary: Iterable[int] = ()) -> TailGraph:
    """Tail graph with its live part.

    ``boundary`` vertices are declared live even though nothing maps to them;
    this is how a truncated tail stands in for an infinite one.
    """
    boundary = frozenset(boundary)
    edges = tuple(
        (y, i, sys.sigma[i - 1][y]) for i in range(1, sys.n + 1) for y in range(sys.m)
    )
    live = set(range(sys.m))
    changed = True
    while changed:
        changed = False
        for x in sorted(live):
            if x in boundary:
                continue
            if not any(t == x and y in live for y, _, t in edges):
                live.discard(x)
                changed = True
    pre: dict[int, tuple] = {}
    for x in range(sys.m):
        pre[x] = tuple(sorted((i, y) for y, i, t in edges if t == x and y in live))
    return TailGraph(sys, edges, frozenset(live), boundary, pre)


# -- locally constant functions --------------------------------------------


def _clean(values: dict) -> dict:
    return {k: v for k, v in values.items() if not (scalars.is_exact(v) and v == 0)}


class CylinderFunction:
    """A locally constant function on the covering space, at a fixed depth.

    ``values`` maps depth-D cylinder keys to scalars; absent keys are zero.
    Values are exact (Fraction and friends) unless floats are supplied.
    """

    __slots__ = ("graph", "depth", "values")

    def __init__(self, graph: TailGraph, depth: int, values: Optional[dict] = None):
        self.graph = graph
        self.depth = depth
        self.values = _clean({k: scalars.simplify(v) for k, v in (values or {}).items()})

    # construction helpers

    @classmethod
    def zero(cls, graph: TailGraph) -> "CylinderFunction":
        return cls(graph, 0, {})

    @classmethod
    def constant(cls, graph: TailGraph, c=1, depth: int = 0) -> "CylinderFunction":
        return cls(graph, depth, {k: c for k in graph.cylinders(depth)})

    @classmethod
    def from_callable(cls, graph: TailGraph, depth: int, fn: Callable[[Key], object]):
        return cls(graph, depth, {k: fn(k) for k in graph.cylinders(depth)})

    # evaluation and refinement

    @property
    def exact(self) -> bool:
        return all(scalars.is_exact(v) for v in self.values.values())

    def at(self, key: Key):
        if key_depth(key) < self.depth:
            raise ValueError(f"key of depth {key_depth(key)} cannot evaluate depth {self.depth}")
        return self.values.get(truncate(key, self.depth), Fraction(0))

    def __call__(self, point: "InfiniteTailSpec"):
        return self.at(point.key(self.depth))

    def refine(self, depth: int) -> "CylinderFunction":
        if depth == self.depth:
            return self
        if depth < self.depth:
            raise ValueError("refine can only increase depth")
        out = {}
        for k, v in self.values.items():
            for c in self.graph.descendants(k, depth):
                out[c] = v
        return CylinderFunction(self.graph, depth, out)

    def coarsen(self) -> "CylinderFunction":
        """The same function at the smallest depth that can carry it."""
        f = self
        while f.depth > 0:
            parents: dict = {}
            for k, v in f.values.items():
                parents.setdefault(truncate(k, f.depth - 1), []).append(v)
            ok = True
            out = {}
            for pk, vals in parents.items():
                kids = f.graph.extend(pk)
                if len(vals) != len(kids) or any(not scalars.close(v, vals[0]) for v in vals):
                    ok = False
                    break
                out[pk] = vals[0]
            if not ok:
                break
            f = CylinderFunction(f.graph, f.depth - 1, out)
        return f

    def _pair(self, other: "CylinderFunction"):
        if other.graph is not self.graph and other.graph != self.graph:
            raise ValueError("functions live on different covering systems")
        d = max(self.depth, other.depth)
        return self.refine(d), other.refine(d), d

    # algebra

    def __add__(self, other):
        if not isinstance(other, CylinderFunction):
            return NotImplemented
        a, b, d = self._pair(other)
        out = dict(a.values)
        for k, v in b.values.items():
            out[k] = out.get(k, 0) + v
        return CylinderFunction(self.graph, d, out)

    def __neg__(self):
        return CylinderFunction(self.graph, self.depth, {k: -v for k, v in self.values.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, CylinderFunction):
            a, b, d = self._pair(other)
            small, big = (a, b) if len(a.values) <= len(b.values) else (b, a)
            return CylinderFunction(
                self.graph, d,
                {k: v * big.values[k] for k, v in small.values.items() if k in big.values},
            )
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def scale(self, c) -> "CylinderFunction":
        if scalars.is_exact(c) and c == 0:
            return CylinderFunction(self.graph, self.depth, {})
        return CylinderFunction(self.graph, self.depth, {k: c * v for k, v in self.values.items()})

    def conj(self) -> "CylinderFunction":
        return CylinderFunction(
            self.graph, self.depth, {k: scalars.conj(v) for k, v in self.values.items()}
        )

    def map_values(self, fn) -> "CylinderFunction":
        return CylinderFunction(self.graph, self.depth, {k: fn(v) for k, v in self.values.items()})

    def is_zero(self) -> bool:
        return all(scalars.is_zero(v) for v in self.values.values())

    def __eq__(self, other):
        if not isinstance(other, CylinderFunction):
            return NotImplemented
        a, b, _ = self._pair(other)
        for k in set(a.values) | set(b.values):
            if not scalars.close(a.values.get(k, 0), b.values.get(k, 0)):
                return False
        return True

    __hash__ = None

    def support(self) -> "CylinderSet":
        return CylinderSet(
            self.graph, self.depth,
            frozenset(k for k, v in self.values.items() if not scalars.is_zero(v)),
        )

    def vanishes_on(self, A: "CylinderSet") -> bool:
        return (self.support() & A).is_empty()

    def max_abs(self):
        if not self.values:
            return Fraction(0)
        return max(scalars.abs_exact(v) for v in self.values.values())

    def __repr__(self):
        return f"CylinderFunction(depth={self.depth}, support={len(self.values)})"

    def to_json(self) -> list:
        pts = self.graph.sys.points
        return [
            {"labels": list(k[0]), "vertices": [pts[v] for v in k[1]], "value": scalars.encode(v)}
            for k, v in sorted(self.values.items())
        ]


def act_tau(f: CylinderFunction) -> CylinderFunction:
    """f o tau, at depth(f) + 1."""
    g = f.graph
    out = {}
    for k, v in f.values.items():
        for i in range(1, g.n + 1):
            out[g.sigma_key(i, k)] = v
    return CylinderFunction(g, f.depth + 1, out)


def act_sigma(f: CylinderFunction, i: int) -> CylinderFunction:
    """f o sigma~_i, at depth max(depth(f) - 1, 0)."""
    g = f.graph
    if not 1 <= i <= g.n:
        raise ValueError(f"label {i} outside 1..{g.n}")
    if f.depth == 0:
        out = {}
        for y in g.live:
            v = f.values.get(((), (g.sigma(i, y),)))
            if v is not None:
                out[((), (y,))] = v
        return CylinderFunction(g, 0, out)
    return CylinderFunction(
        g, f.depth - 1, {tau_key(k): v for k, v in f.values.items() if k[0][0] == i}
    )


def act_sigma_word(f: CylinderFunction, w: Sequence[int]) -> CylinderFunction:
    """f o sigma~_w with sigma~_w = sigma~_{w[0]} o ... o sigma~_{w[-1]}."""
    for i in w:
        f = act_sigma(f, i)
    return f


def act_tau_power(f: CylinderFunction, k: int) -> CylinderFunction:
    for _ in range(k):
        f = act_tau(f)
    return f


def chi(graph: TailGraph, w: Sequence[int]) -> CylinderFunction:
    """Indicator of the cylinder set of tails whose labels start with w."""
    w = tuple(w)
    for i in w:
        if not 1 <= i <= graph.n:
            raise ValueError(f"malformed word {w}: label {i} outside 1..{graph.n}")
    return CylinderFunction(
        graph, len(w), {k: Fraction(1) for k in graph.cylinders(len(w)) if k[0] == w}
    )


def lift_p(graph: TailGraph, g, k: int = 0) -> CylinderFunction:
    """g o p_k, where g is a sequence or mapping indexed by points."""
    if callable(g) and not hasattr(g, "__getitem__"):
        get = g
    else:
        get = g.__getitem__
    return CylinderFunction(graph, k, {c: get(c[1][k]) for c in graph.cylinders(k)})


def point_indicator(graph: TailGraph, xs: Iterable[int], k: int = 0) -> CylinderFunction:
    xs = frozenset(xs)
    return lift_p(graph, lambda x: Fraction(int(x in xs)), k)


# -- clopen sets ------------------------------------------------------------


class CylinderSet:
    """A clopen subset of the covering space: a set of depth-D cylinders.

    ``provenance`` records automatic refinements so tests can see the depth
    actually used.
    """

    __slots__ = ("graph", "depth", "members", "provenance")

    def __init__(self, graph: TailGraph, depth: int, members: Iterable[Key] = (), provenance=()):
        self.graph = graph
        self.depth = depth
        self.members = frozenset(members)
        self.provenance = tuple(provenance)

    @classmethod
    def everything(cls, graph: TailGraph, depth: int = 0) -> "CylinderSet":
        return cls(graph, depth, graph.cylinders(depth))

    @classmethod
    def empty(cls, graph: TailGraph) -> "CylinderSet":
        return cls(graph, 0, ())

    @classmethod
    def p_inverse(cls, graph: TailGraph, A: Iterable[int]) -> "CylinderSet":
        A = frozenset(A)
        return cls(graph, 0, (((), (x,)) for x in graph.live if x in A))

    @classmethod
    def of_labels(cls, graph: TailGraph, w: Sequence[int]) -> "CylinderSet":
        return chi(graph, w).support()

    def refine(self, depth: int) -> "CylinderSet":
        if depth == self.depth:
            return self
        if depth < self.depth:
            raise ValueError("refine can only increase depth")
        out = [c for k in self.members for c in self.graph.descendants(k, depth)]
        return CylinderSet(self.graph, depth, out,
                           self.provenance + (f"refine {self.depth}->{depth}",))

    def _pair(self, other: "CylinderSet"):
        d = max(self.depth, other.depth)
        return self.refine(d), other.refine(d), d

    def __or__(self, other):
        a, b, d = self._pair(other)
        return CylinderSet(self.graph, d, a.members | b.members, a.provenance + b.provenance)

    def __and__(self, other):
        a, b, d = self._pair(other)
        return CylinderSet(self.graph, d, a.members & b.members, a.provenance + b.provenance)

    def __sub__(self, other):
        a, b, d = self._pair(other)
        return CylinderSet(self.graph, d, a.members - b.members, a.provenance + b.provenance)

    def complement(self) -> "CylinderSet":
        return CylinderSet(
            self.graph, self.depth,
            frozenset(self.graph.cylinders(self.depth)) - self.members, self.provenance,
        )

    def __le__(self, other) -> bool:
        a, b, _ = self._pair(other)
        return a.members <= b.members

    def __eq__(self, other):
        if not isinstance(other, CylinderSet):
            return NotImplemented
        a, b, _ = self._pair(other)
        return a.members == b.members

    __hash__ = None

    def is_empty(self) -> bool:
        return not self.members

    def is_everything(self) -> bool:
        return self.complement().is_empty()

    def __contains__(self, point: "InfiniteTailSpec") -> bool:
        return point.key(self.depth) in self.members

    def indicator(self) -> CylinderFunction:
        return CylinderFunction(self.graph, self.depth, {k: Fraction(1) for k in self.members})

    def image_sigma(self, i: int) -> "CylinderSet":
        """sigma~_i(A), one level deeper."""
        return CylinderSet(self.graph, self.depth + 1,
                           (self.graph.sigma_key(i, k) for k in self.members), self.provenance)

    def image_tau(self) -> "CylinderSet":
        """tau(A), one level shallower (depth 0 stays at depth 0)."""
        g = self.graph
        if self.depth == 0:
            base = {k[1][0] for k in self.members}
            out = [((), (y,)) for y in g.live
                   if any(g.sigma(i, y) in base for i in range(1, g.n + 1))]
            return CylinderSet(g, 0, out, self.provenance)
        return CylinderSet(g, self.depth - 1, (tau_key(k) for k in self.members), self.provenance)

    def preimage_sigma(self, i: int) -> "CylinderSet":
        """sigma~_i^{-1}(A) = tau(A intersect X~_i)."""
        g = self.graph
        if self.depth == 0:
            base = {k[1][0] for k in self.members}
            return CylinderSet(g, 0, (((), (y,)) for y in g.live if g.sigma(i, y) in base),
                               self.provenance)
        return CylinderSet(g, self.depth - 1,
                           (tau_key(k) for k in self.members if k[0][0] == i), self.provenance)

    def preimage_tau(self, m: int = 1) -> "CylinderSet":
        """tau^{-m}(A): tails whose m-fold shift lands in A."""
        out = self
        for _ in range(m):
            out = CylinderSet(self.graph, out.depth + 1,
                              (self.graph.sigma_key(i, k) for k in out.members
                               for i in range(1, self.graph.n + 1)), out.provenance)
        return out

    def coarsen(self) -> "CylinderSet":
        f = self.indicator().coarsen()
        return CylinderSet(self.graph, f.depth, f.values.keys(), self.provenance)

    def sample(self, limit: int = 1) -> list[Key]:
        return sorted(self.members)[:limit]

    def __repr__(self):
        return f"CylinderSet(depth={self.depth}, size={len(self.members)})"

    def to_json(self) -> dict:
        pts = self.graph.sys.points
        return {
            "depth": self.depth,
            "cylinders": [
                {"labels": list(k[0]), "vertices": [pts[v] for v in k[1]]}
                for k in sorted(self.members)
            ],
        }


# -- eventually periodic points --------------------------------------------


@dataclass(frozen=True)
class InfiniteTailSpec:
    """An eventually periodic point of the covering space.

    Labels/vertices at position s are the prefix entries for s < len(prefix)
    and then cycle through the cycle entries forever.
    """

    prefix_labels: tuple
    prefix_vertices: tuple
    cycle_labels: tuple
    cycle_vertices: tuple

    def __post_init__(self):
        if len(self.prefix_labels) != len(self.prefix_vertices):
            raise ValueError("prefix labels and vertices must have equal length")
        if len(self.cycle_labels) != len(self.cycle_vertices) or not self.cycle_labels:
            raise ValueError("cycle must be a nonempty closed path")

    @property
    def p(self) -> int:
        return len(self.prefix_labels)

    @property
    def q(self) -> int:
        return len(self.cycle_labels)

    def label(self, s: int) -> int:
        if s < self.p:
            return self.prefix_labels[s]
        return self.cycle_labels[(s - self.p) % self.q]

    def vertex(self, s: int) -> int:
        if s < self.p:
            return self.prefix_vertices[s]
        return self.cycle_vertices[(s - self.p) % self.q]

    @property
    def x0(self) -> int:
        return self.vertex(0)

    def key(self, depth: int) -> Key:
        return (tuple(self.label(s) for s in range(depth)),
                tuple(self.vertex(s) for s in range(depth + 1)))

    def validate(self, sys: FiniteDynSys) -> None:
        for s in range(self.p + self.q):
            i, x, y = self.label(s), self.vertex(s), self.vertex(s + 1)
            if not 1 <= i <= sys.n or sys.sigma[i - 1][y] != x:
                raise ValueError(
                    f"inconsistent tail at position {s}: sigma_{i}({sys.points[y]}) "
                    f"!= {sys.points[x]}"
                )

    def prepend(self, sys: FiniteDynSys, i: int) -> "InfiniteTailSpec":
        """sigma~_i of this point."""
        return InfiniteTailSpec(
            (i,) + self.prefix_labels,
            (sys.sigma[i - 1][self.x0],) + self.prefix_vertices,
            self.cycle_labels, self.cycle_vertices,
        ).normalized()

    def prepend_word(self, sys: FiniteDynSys, w: Sequence[int]) -> "InfiniteTailSpec":
        pt = self
        for i in reversed(w):
            pt = pt.prepend(sys, i)
        return pt

    def shift(self) -> "InfiniteTailSpec":
        """tau of this point."""
        if self.p:
            return InfiniteTailSpec(self.prefix_labels[1:], self.prefix_vertices[1:],
                                    self.cycle_labels, self.cycle_vertices)
        return InfiniteTailSpec((), (), self.cycle_labels[1:] + self.cycle_labels[:1],
                                self.cycle_vertices[1:] + self.cycle_vertices[:1]).normalized()

    def normalized(self) -> "InfiniteTailSpec":
        cl, cv = self.cycle_labels, self.cycle_vertices
        q = len(cl)
        for d in range(1, q + 1):
            if q % d == 0 and cl == cl[:d] * (q // d) and cv == cv[:d] * (q // d):
                cl, cv = cl[:d], cv[:d]
                break
        pl, pv = list(self.prefix_labels), list(self.prefix_vertices)
        while pl and pl[-1] == cl[-1] and pv[-1] == cv[-1]:
            pl.pop()
            pv.pop()
            cl, cv = cl[-1:] + cl[:-1], cv[-1:] + cv[:-1]
        return InfiniteTailSpec(tuple(pl), tuple(pv), tuple(cl), tuple(cv))

    def describe(self, sys: FiniteDynSys) -> str:
        pts = sys.points
        pre = " ".join(f"{self.prefix_labels[s]}:{pts[self.prefix_vertices[s]]}"
                       for s in range(self.p))
        cyc = " ".join(f"{self.cycle_labels[s]}:{pts[self.cycle_vertices[s]]}"
                       for s in range(self.q))
        return f"[{pre}]({cyc})^inf"


def enumerate_tails(graph: TailGraph, x: Optional[int] = None, max_len: int = 6,
                    limit: Optional[int] = None) -> list[InfiniteTailSpec]:
    """Eventually periodic tails (lassos of distinct vertices) starting at x."""
    starts = sorted(graph.live) if x is None else [x]
    found: dict = {}
    for s in starts:
        stack = [((), (s,))]
        while stack:
            labels, verts = stack.pop()
            for i, y in reversed(graph.preimages[verts[-1]]):
                if y in verts:
                    p = verts.index(y)
                    spec = InfiniteTailSpec(labels[:p], verts[:p],
                                            labels[p:] + (i,), verts[p:]).normalized()
                    found.setdefault(spec, None)
                elif len(labels) + 1 < max_len:
                    stack.append((labels + (i,), verts + (y,)))
    out = sorted(found, key=lambda t: (t.p + t.q, t.key(t.p + t.q)))
    return out[:limit] if limit is not None else out


def covering_points(graph: TailGraph, x: Optional[int] = None, max_len: int = 4,
                    limit: Optional[int] = None) -> list[InfiniteTailSpec]:
    """Eventually periodic tails whose prefix plus cycle has length <= max_len.

    Unlike :func:`enumerate_tails` vertices may repeat, so one-point systems
    with several maps still yield many distinct tails.
    """
    starts = sorted(graph.live) if x is None else [x]
    found: dict = {}
    for s in starts:
        stack = [((), (s,))]
        while stack:
            labels, verts = stack.pop()
            m = len(labels)
            for p in range(m):
                if verts[p] == verts[m]:
                    spec = InfiniteTailSpec(labels[:p], verts[:p], labels[p:], verts[p:m])
                    found.setdefault(spec.normalized(), None)
            if m < max_len:
                for i, y in reversed(graph.preimages[verts[-1]]):
                    stack.append((labels + (i,), verts + (y,)))
    out = sorted(found, key=lambda t: (t.p + t.q, t.key(t.p + t.q)))
    return out[:limit] if limit is not None else out


# -- structural checks ------------------------------------------------------


@dataclass(frozen=True)
class SeparationResult:
    separates: bool
    witness_pair: Optional[tuple] = None
    witness_tails: Optional[tuple] = None


def separation_test(graph: TailGraph) -> SeparationResult:
    """Do the label prefixes alone separate the points of the covering space?

    Two distinct tails with one label sequence exist exactly when the
    off-diagonal pair graph has an infinite backward path; we compute the
    greatest set of off-diagonal pairs that each have a predecessor inside
    the set.
    """
    live = sorted(graph.live)
    E = {(x, y) for x in live for y in live if x != y}

    def preds(pair):
        x, y = pair
        px: dict = {}
        for i, a in graph.preimages[x]:
            px.setdefault(i, []).append(a)
        return [(i, (a, b)) for i, b in graph.preimages[y] for a in px.get(i, ())]

    changed = True
    while changed:
        changed = False
        for pair in sorted(E):
            if not any(q in E for _, q in preds(pair)):
                E.discard(pair)
                changed = True
    if not E:
        return SeparationResult(True)
    start = min(E)
    labels, path = [], [start]
    while True:
        i, q = min((i, q) for i, q in preds(path[-1]) if q in E)
        if q in path:
            p = path.index(q)
            labels.append(i)
            break
        labels.append(i)
        path.append(q)
    t1 = InfiniteTailSpec(tuple(labels[:p]), tuple(a for a, _ in path[:p]),
                          tuple(labels[p:]), tuple(a for a, _ in path[p:])).normalized()
    t2 = InfiniteTailSpec(tuple(labels[:p]), tuple(b for _, b in path[:p]),
                          tuple(labels[p:]), tuple(b for _, b in path[p:])).normalized()
    return SeparationResult(False, start, (t1, t2))


def partition_of_unity(graph: TailGraph, k: int) -> bool:
    """sum over |w| = k of chi_w equals the constant 1."""
    total = CylinderFunction.zero(graph)
    for w in words(graph.n, k):
        total = total + chi(graph, w)
    return total == CylinderFunction.constant(graph, 1)


def tau_determinism(graph: TailGraph, depth: int) -> dict:
    """Each tail has a unique tau-history: checked on cylinders up to ``depth``."""
    failures = []
    prev = graph.cylinders(0)
    for k in range(depth):
        cur = graph.cylinders(k + 1)
        prev_set, cur_set = set(prev), set(cur)
        for c in cur:
            if truncate(c, k) not in prev_set:
                failures.append(("refinement", k + 1, c))
            t = tau_key(c)
            if t not in prev_set:
                failures.append(("tau-undefined", k + 1, c))
            elif graph.sigma_key(c[0][0], t) != c:
                failures.append(("history", k + 1, c))
        for c in prev:
            if not any(truncate(d, k) == c for d in graph.extend(c)):
                failures.append(("dead-end", k, c))
        by_label: dict = {}
        for c in cur:
            by_label.setdefault(c[0][0], set()).add(c)
        if sum(len(v) for v in by_label.values()) != len(cur_set):
            failures.append(("overlap", k + 1, None))
        for i in range(1, graph.n + 1):
            image = {graph.sigma_key(i, c) for c in prev}
            if image != by_label.get(i, set()):
                failures.append(("sigma-bijection", k + 1, i))
        prev = cur
    return {"check": "tau-determinism", "depth": depth, "pass": not failures,
            "failures": failures[:5]}


def words(n: int, k: int) -> Iterator[tuple]:
    """All words of length k over 1..n, lexicographic."""
    if k == 0:
        yield ()
        return
    for w in words(n, k - 1):
        for i in range(1, n + 1):
            yield w + (i,)


def words_upto(n: int, k: int) -> Iterator[tuple]:
    for j in range(k + 1):
        yield from words(n, j)
