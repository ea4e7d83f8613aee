"""Exact model of the dense *-algebra spanned by t_u f t_v^*.

Elements are stored per degree d = |u| - |v| as a matrix of locally constant
functions at a common index level K (|v| = K, |u| = K + d).  Raising the
level uses the refinement identity

    t_u f t_v^* = sum_i t_{ui} (f o sigma~_i) t_{vi}^*,

which holds because the t_i are Cuntz isometries on the covering space.
Two elements are equal iff, degree by degree, their matrices agree once
raised to a common level; the coefficient map f_{u,v} = t_u^* b_d t_v makes
this faithful.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from . import scalars
from .covering import (
    CylinderFunction,
    CylinderSet,
    TailGraph,
    act_sigma,
    act_sigma_word,
    act_tau,
    act_tau_power,
    chi,
    words,
)
from .dynsys import is_surjective

Word = tuple


def _w(word) -> Word:
    if isinstance(word, str):
        return tuple(int(c) for c in word)
    return tuple(word)


class CoreElement:
    """A finite sum of terms t_u f t_v^* in canonical per-degree form."""

    __slots__ = ("graph", "parts")

    def __init__(self, graph: TailGraph, parts: Optional[dict] = None):
        # parts: degree -> (K, {(u, v): CylinderFunction})
        self.graph = graph
        clean = {}
        for d, (K, entries) in (parts or {}).items():
            entries = {uv: f for uv, f in entries.items() if not f.is_zero()}
            if entries:
                clean[d] = (K, entries)
        self.parts = clean

    # construction

    @classmethod
    def from_terms(cls, graph: TailGraph, terms: Iterable[tuple]) -> "CoreElement":
        """Build from (u, v, f) triples meaning t_u f t_v^*."""
        grouped: dict = {}
        for u, v, f in terms:
            u, v = _w(u), _w(v)
            if f.graph is not graph and f.graph != graph:
                raise ValueError("term function lives on a different covering system")
            grouped.setdefault(len(u) - len(v), []).append((u, v, f))
        parts = {}
        for d, ts in grouped.items():
            K = max(len(v) for _, v, _ in ts)
            entries: dict = {}
            for u, v, f in ts:
                for (uu, vv), g in _raise_term(u, v, f, K - len(v)):
                    entries[(uu, vv)] = entries[(uu, vv)] + g if (uu, vv) in entries else g
            parts[d] = (K, entries)
        return cls(graph, parts)

    @classmethod
    def term(cls, graph: TailGraph, u, f: Optional[CylinderFunction] = None, v=()) -> "CoreElement":
        if f is None:
            f = CylinderFunction.constant(graph, 1)
        return cls.from_terms(graph, [(u, v, f)])

    @classmethod
    def function(cls, f: CylinderFunction) -> "CoreElement":
        return cls.from_terms(f.graph, [((), (), f)])

    @classmethod
    def one(cls, graph: TailGraph) -> "CoreElement":
        return cls.function(CylinderFunction.constant(graph, 1))

    @classmethod
    def zero(cls, graph: TailGraph) -> "CoreElement":
        return cls(graph, {})

    # structure

    def degrees(self) -> list[int]:
        return sorted(self.parts)

    def level(self, d: int) -> int:
        return self.parts[d][0]

    def homogeneous(self, d: int) -> "CoreElement":
        return CoreElement(self.graph, {d: self.parts[d]} if d in self.parts else {})

    def raised(self, d: int, K: int) -> dict:
        """Degree-d matrix at level K (K must not be below the stored level)."""
        if d not in self.parts:
            return {}
        K0, entries = self.parts[d]
        if K < K0:
            raise ValueError(f"cannot lower degree-{d} data from level {K0} to {K}")
        if K == K0:
            return dict(entries)
        out: dict = {}
        for (u, v), f in entries.items():
            for uv, g in _raise_term(u, v, f, K - K0):
                out[uv] = out[uv] + g if uv in out else g
        return out

    def raise_to(self, levels: dict) -> "CoreElement":
        return CoreElement(self.graph, {
            d: (levels.get(d, K), self.raised(d, levels.get(d, K)))
            for d, (K, _) in self.parts.items()
        })

    def terms(self) -> list[tuple]:
        return [(u, v, f) for d in self.degrees() for (u, v), f in sorted(self.parts[d][1].items())]

    def coefficient(self, u, v) -> CylinderFunction:
        """f_{u,v} = t_u^* b_d t_v with d = |u| - |v|.

        Defined for |v| at or above the stored level of degree d.
        """
        u, v = _w(u), _w(v)
        d = len(u) - len(v)
        if d not in self.parts:
            return CylinderFunction.zero(self.graph)
        K0 = self.parts[d][0]
        if len(v) < K0:
            raise ValueError(f"coefficient index |v| = {len(v)} is below the stored level {K0}")
        return self.raised(d, len(v)).get((u, v), CylinderFunction.zero(self.graph))

    def extract(self, u, v) -> CylinderFunction:
        """t_u^* a_d t_v computed by multiplication, d = |u| - |v|."""
        u, v = _w(u), _w(v)
        g = self.graph
        part = self.homogeneous(len(u) - len(v))
        prod = multiply(multiply(CoreElement.term(g, (), None, u), part), CoreElement.term(g, v))
        return _level0(prod)

    # algebra

    def __add__(self, other: "CoreElement") -> "CoreElement":
        parts = {}
        for d in set(self.parts) | set(other.parts):
            K = max(self.parts.get(d, (0,))[0], other.parts.get(d, (0,))[0])
            a, b = self.raised(d, K), other.raised(d, K)
            for uv, f in b.items():
                a[uv] = a[uv] + f if uv in a else f
            parts[d] = (K, a)
        return CoreElement(self.graph, parts)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "CoreElement":
        return CoreElement(self.graph, {
            d: (K, {uv: f.scale(c) for uv, f in e.items()}) for d, (K, e) in self.parts.items()
        })

    def __mul__(self, other):
        if isinstance(other, CoreElement):
            return multiply(self, other)
        return self.scale(other)

    def __rmul__(self, c):
        return self.scale(c)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CoreElement):
            return NotImplemented
        for d in set(self.parts) | set(other.parts):
            K = max(self.parts.get(d, (0,))[0], other.parts.get(d, (0,))[0])
            a, b = self.raised(d, K), other.raised(d, K)
            zero = CylinderFunction.zero(self.graph)
            for uv in set(a) | set(b):
                if not a.get(uv, zero) == b.get(uv, zero):
                    return False
        return True

    __hash__ = None

    def is_zero(self) -> bool:
        return not self.parts

    def __repr__(self):
        desc = ", ".join(f"d={d}:K={K}:{len(e)}" for d, (K, e) in sorted(self.parts.items()))
        return f"CoreElement({desc})"

    # serialisation

    def canonical_json(self) -> dict:
        out = {}
        for d in self.degrees():
            K, entries = self.parts[d]
            fs = {uv: f.coarsen() for uv, f in entries.items()}
            D = max((f.depth for f in fs.values()), default=0)
            out[str(d)] = {
                "K": K,
                "D": D,
                "entries": [
                    ["".join(map(str, u)), "".join(map(str, v)), fs[(u, v)].refine(D).to_json()]
                    for (u, v) in sorted(fs)
                ],
            }
        return out

    @classmethod
    def from_canonical_json(cls, graph: TailGraph, obj: dict) -> "CoreElement":
        from . import scalars as sc
        index = {p: k for k, p in enumerate(graph.sys.points)}
        parts = {}
        for d, blob in obj.items():
            entries = {}
            for u, v, vals in blob["entries"]:
                values = {
                    (tuple(c["labels"]), tuple(index[x] for x in c["vertices"])): sc.decode(c["value"])
                    for c in vals
                }
                entries[(_w(u), _w(v))] = CylinderFunction(graph, blob["D"], values)
            parts[int(d)] = (blob["K"], entries)
        return cls(graph, parts)


def _level0(prod: CoreElement) -> CylinderFunction:
    # degree-0 element reduced to a single function when its level is 0
    if 0 not in prod.parts:
        return CylinderFunction.zero(prod.graph)
    K, entries = prod.parts[0]
    if K != 0:
        raise ValueError("coefficient extraction did not reduce to a function")
    return entries.get(((), ()), CylinderFunction.zero(prod.graph))


def _raise_term(u: Word, v: Word, f: CylinderFunction, steps: int):
    """Apply the refinement identity ``steps`` times to t_u f t_v^*."""
    items = [(u, v, f)]
    n = f.graph.n
    for _ in range(steps):
        nxt = []
        for uu, vv, g in items:
            for i in range(1, n + 1):
                h = act_sigma(g, i)
                if not h.is_zero():
                    nxt.append((uu + (i,), vv + (i,), h))
        items = nxt
    return [((uu, vv), g) for uu, vv, g in items]


def _mul_terms(t1, t2):
    """(t_u f t_v^*)(t_w g t_z^*) as a single term or None."""
    (u, v, f), (w, z, g) = t1, t2
    if w[: len(v)] == v:
        w2 = w[len(v):]
        h = act_sigma_word(f, w2) * g
        return u + w2, z, h
    if v[: len(w)] == w:
        v2 = v[len(w):]
        h = f * act_sigma_word(g, v2)
        return u, z + v2, h
    return None


def multiply(a: CoreElement, b: CoreElement) -> CoreElement:
    if a.graph is not b.graph and a.graph != b.graph:
        raise ValueError("elements live over different covering systems")
    terms = []
    for t1 in a.terms():
        for t2 in b.terms():
            r = _mul_terms(t1, t2)
            if r is not None and not r[2].is_zero():
                terms.append(r)
    return CoreElement.from_terms(a.graph, terms)


def adjoint(a: CoreElement) -> CoreElement:
    return CoreElement.from_terms(a.graph, [(v, u, f.conj()) for u, v, f in a.terms()])


# -- gauge action -----------------------------------------------------------


def gauge_scale(a: CoreElement, z) -> CoreElement:
    """Multiply the degree-d part by z**d.

    ``z`` may be a scalar of modulus one, or a pair (M, k) meaning the exact
    root of unity exp(2 pi i k / M).
    """
    if isinstance(z, tuple):
        M, k = z
        power = lambda d: scalars.Cyclotomic.root(M, k * d)
    else:
        power = lambda d: z**d if d >= 0 else scalars.conj(z) ** (-d)
    return CoreElement(a.graph, {
        d: (K, {uv: f.scale(power(d)) for uv, f in e.items()}) for d, (K, e) in a.parts.items()
    })


def gauge_expect(a: CoreElement) -> CoreElement:
    """Keep the degree-0 part only."""
    return a.homogeneous(0)


def gauge_average(a: CoreElement, M: Optional[int] = None) -> CoreElement:
    """Exact average of gauge_scale over all M-th roots of unity."""
    spread = max((abs(d) for d in a.degrees()), default=0)
    if M is None:
        M = spread + 1
    if M <= spread:
        raise ValueError(f"M = {M} must exceed the degree spread {spread}")
    total = CoreElement.zero(a.graph)
    for k in range(M):
        total = total + gauge_scale(a, (M, k))
    avg = total.scale(Fraction(1, M))
    return CoreElement(avg.graph, {
        d: (K, {uv: f.map_values(scalars.simplify) for uv, f in e.items()})
        for d, (K, e) in avg.parts.items()
    })


# -- V and alpha ------------------------------------------------------------


def _require_surjective(graph: TailGraph):
    if not is_surjective(graph.sys):
        raise ValueError(
            "the isometry V needs a surjective system "
            "(the Cuntz relation sum t_i t_i^* = 1 over the whole base)"
        )


def isometry_v(graph: TailGraph) -> CoreElement:
    """V = (1/sqrt n) sum_i t_i."""
    _require_surjective(graph)
    c = 1 / scalars.sqrt_exact(graph.n)
    one = CylinderFunction.constant(graph, 1)
    return CoreElement.from_terms(graph, [((i,), (), one.scale(c)) for i in range(1, graph.n + 1)])


def alpha(b: CoreElement) -> CoreElement:
    """alpha(b) = V b V^*."""
    V = isometry_v(b.graph)
    return multiply(multiply(V, b), adjoint(V))


def alpha_direct(b: CoreElement) -> CoreElement:
    """(1/n) sum_{i,j} t_i b t_j^*, computed termwise."""
    g = b.graph
    n = g.n
    terms = []
    for u, v, f in b.terms():
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                terms.append(((i,) + u, (j,) + v, f.scale(Fraction(1, n))))
    return CoreElement.from_terms(g, terms)


def word_power(graph: TailGraph, x: CoreElement, k: int) -> CoreElement:
    out = CoreElement.one(graph)
    for _ in range(k):
        out = multiply(out, x)
    return out


def recovery_identity(graph: TailGraph, u, f: CylinderFunction, v) -> tuple:
    """Both sides of (n^{k/2} t_u f t_v^* t_1^{*k}) V^k = t_u f t_v^*, k = |u| - |v| >= 0."""
    u, v = _w(u), _w(v)
    k = len(u) - len(v)
    if k < 0:
        raise ValueError("need |u| >= |v|")
    V = isometry_v(graph)
    c = scalars.sqrt_exact(graph.n) ** k if k else Fraction(1)
    # t_v^* t_1^{*k} = t_{1^k v}^*
    left = CoreElement.from_terms(graph, [(u, (1,) * k + v, f.scale(c))])
    lhs = multiply(left, word_power(graph, V, k))
    rhs = CoreElement.from_terms(graph, [(u, v, f)])
    return lhs, rhs


def range_projection_formula(w, f: CylinderFunction) -> tuple:
    """Both sides of t_w f t_w^* = chi_w (f o tau^{|w|})."""
    w = _w(w)
    g = f.graph
    lhs = CoreElement.from_terms(g, [(w, w, f)])
    rhs = CoreElement.function(chi(g, w) * act_tau_power(f, len(w)))
    return lhs, rhs


# -- tower B_k --------------------------------------------------------------


@dataclass
class TowerElement:
    """Level-k element of the core: an n^k x n^k matrix over C(X~)."""

    graph: TailGraph
    level: int
    matrix: dict = field(default_factory=dict)  # (u, v) -> CylinderFunction, |u| = |v| = level

    def __post_init__(self):
        for (u, v) in self.matrix:
            if len(u) != self.level or len(v) != self.level:
                raise ValueError(f"entry {(u, v)} does not sit at level {self.level}")
        self.matrix = {uv: f for uv, f in self.matrix.items() if not f.is_zero()}

    @classmethod
    def from_function(cls, f: CylinderFunction) -> "TowerElement":
        return cls(f.graph, 0, {((), ()): f})

    @classmethod
    def identity(cls, graph: TailGraph, level: int = 0) -> "TowerElement":
        one = CylinderFunction.constant(graph, 1)
        return cls(graph, level, {(w, w): one for w in words(graph.n, level)}) if level \
            else cls.from_function(one)

    def to_core(self) -> CoreElement:
        return CoreElement(self.graph, {0: (self.level, dict(self.matrix))})

    @classmethod
    def from_core(cls, a: CoreElement, level: Optional[int] = None) -> "TowerElement":
        if set(a.degrees()) - {0}:
            raise ValueError("tower elements are degree 0")
        K = a.level(0) if 0 in a.parts else 0
        level = K if level is None else level
        return cls(a.graph, level, a.raised(0, level) if 0 in a.parts else {})

    def __mul__(self, other: "TowerElement") -> "TowerElement":
        k = max(self.level, other.level)
        a, b = tower_raise(self, k), tower_raise(other, k)
        out: dict = {}
        for (u, w), f in a.matrix.items():
            for (w2, v), g in b.matrix.items():
                if w == w2:
                    out[(u, v)] = out[(u, v)] + f * g if (u, v) in out else f * g
        return TowerElement(self.graph, k, out)

    def __add__(self, other: "TowerElement") -> "TowerElement":
        k = max(self.level, other.level)
        a, b = tower_raise(self, k), tower_raise(other, k)
        out = dict(a.matrix)
        for uv, f in b.matrix.items():
            out[uv] = out[uv] + f if uv in out else f
        return TowerElement(self.graph, k, out)

    def adjoint(self) -> "TowerElement":
        return TowerElement(self.graph, self.level,
                            {(v, u): f.conj() for (u, v), f in self.matrix.items()})

    def __eq__(self, other) -> bool:
        return self.to_core() == other.to_core()


def tower_embed(b: TowerElement) -> TowerElement:
    """B_k -> B_{k+1}: E_{u,v} (x) f  ->  sum_i E_{ui,vi} (x) (f o sigma~_i)."""
    out: dict = {}
    for (u, v), f in b.matrix.items():
        for i in range(1, b.graph.n + 1):
            out[(u + (i,), v + (i,))] = act_sigma(f, i)
    return TowerElement(b.graph, b.level + 1, out)


def tower_raise(b: TowerElement, level: int) -> TowerElement:
    while b.level < level:
        b = tower_embed(b)
    return b


def alpha_tower(b: TowerElement) -> TowerElement:
    """E_{u,v} (x) f  ->  (1/n) sum_{i,j} E_{iu,jv} (x) f."""
    n = b.graph.n
    out = {}
    for (u, v), f in b.matrix.items():
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                out[((i,) + u, (j,) + v)] = f.scale(Fraction(1, n))
    return TowerElement(b.graph, b.level + 1, out)


def _common_depth(fs) -> int:
    return max((f.depth for f in fs), default=0)


def _pointwise_matrices(graph: TailGraph, rows: list, cols: list, entries: dict):
    D = _common_depth(entries.values())
    refined = {uv: f.refine(D) for uv, f in entries.items()}
    ri = {u: k for k, u in enumerate(rows)}
    ci = {v: k for k, v in enumerate(cols)}
    for cyl in graph.cylinders(D):
        M = {}
        for (u, v), f in refined.items():
            val = f.values.get(cyl)
            if val is not None:
                M[(ri[u], ci[v])] = val
        yield cyl, M


def tower_norm(b: TowerElement, exact: bool = True):
    """max over cylinders of the spectral norm of the pointwise matrix.

    Diagonal (including 1x1) pointwise matrices with exact entries give an
    exact answer; otherwise the norm comes from numpy's SVD.
    """
    idx = list(words(b.graph.n, b.level))
    return _matrix_norm(b.graph, idx, idx, b.matrix, exact)


def _matrix_norm(graph, rows, cols, entries, exact):
    vals = []
    for _, M in _pointwise_matrices(graph, rows, cols, entries):
        if not M:
            continue
        if exact and _is_monomial(M) and all(scalars.is_exact(v) for v in M.values()):
            # monomial matrix: the singular values are the moduli of the entries
            vals.append(max((scalars.abs_exact(v) for v in M.values()), key=float))
        else:
            A = np.zeros((len(rows), len(cols)), dtype=complex)
            for (r, c), v in M.items():
                A[r, c] = complex(v)
            vals.append(float(np.linalg.norm(A, 2)))
    if not vals:
        return Fraction(0)
    if all(scalars.is_exact(v) for v in vals):
        return max(vals, key=float)
    return max(float(v) for v in vals)


def _is_monomial(M: dict) -> bool:
    rows = [r for r, _ in M]
    cols = [c for _, c in M]
    return len(set(rows)) == len(rows) and len(set(cols)) == len(cols)


def homogeneous_norm(a: CoreElement, d: Optional[int] = None, exact: bool = True):
    """Norm of a homogeneous element via its rectangular coefficient matrix."""
    degs = a.degrees()
    if d is None:
        if len(degs) > 1:
            raise ValueError("homogeneous_norm needs a homogeneous element; use norm_bounds")
        d = degs[0] if degs else 0
    if set(degs) - {d}:
        raise ValueError(f"element has degrees {degs}, not only {d}")
    if d not in a.parts:
        return Fraction(0)
    K, entries = a.parts[d]
    rows = list(words(a.graph.n, K + d))
    cols = list(words(a.graph.n, K))
    return _matrix_norm(a.graph, rows, cols, entries, exact)


def norm_bounds(a: CoreElement) -> tuple:
    """Interval [max_d ||a_d||, sum_d ||a_d||] containing ||a||."""
    norms = [float(homogeneous_norm(a.homogeneous(d))) for d in a.degrees()]
    if not norms:
        return 0.0, 0.0
    return max(norms), sum(norms)


# -- ideals of the core -----------------------------------------------------


@dataclass
class IdealData:
    F: list  # F_0, ..., F_{pre+period-1}
    preperiod: int
    period: int
    tau_invariant: bool
    robust: bool
    bi_invariant: bool
    witnesses: dict = field(default_factory=dict)

    def F_at(self, k: int) -> CylinderSet:
        if k < len(self.F):
            return self.F[k]
        return self.F[self.preperiod + (k - self.preperiod) % self.period]

    @property
    def is_ideal(self) -> bool:
        return self.tau_invariant and self.robust


def tau_orbit(F0: CylinderSet, limit: int = 10_000):
    """F_k = tau^k(F_0) until the sequence repeats; returns (F, preperiod, period)."""
    seq = [F0]
    while len(seq) < limit:
        nxt = seq[-1].image_tau()
        for j, G in enumerate(seq):
            if G == nxt:
                return seq, j, len(seq) - j
        seq.append(nxt)
    raise RuntimeError("tau orbit did not close")


def ideal_from_set(F0: CylinderSet) -> IdealData:
    g = F0.graph
    F, pre, per = tau_orbit(F0)
    witnesses = {}

    tau_F = F0.image_tau()
    tau_inv = tau_F <= F0
    if not tau_inv:
        bad = (tau_F - F0)
        witnesses["tau_invariant"] = bad.sample(1)

    robust = True
    for m in range(1, F0.depth + pre + per + 2):
        hull = F_orbit_at(F, pre, per, m).preimage_tau(m)
        if not hull <= F0:
            robust = False
            witnesses["robust"] = {"m": m, "cylinder": (hull - F0).sample(1)}
            break

    sigma_inv = all(F0.image_sigma(i) <= F0 for i in range(1, g.n + 1))
    bi = sigma_inv and tau_inv
    if not sigma_inv:
        witnesses["sigma_invariant"] = next(
            i for i in range(1, g.n + 1) if not F0.image_sigma(i) <= F0)
    return IdealData(F, pre, per, tau_inv, robust, bi, witnesses)


def F_orbit_at(F, pre, per, k):
    if k < len(F):
        return F[k]
    return F[pre + (k - pre) % per]


def membership(a: CoreElement, J: IdealData) -> bool:
    """Is ``a`` in the ideal determined by J?

    For a bi-invariant set every coefficient must vanish on it.  Otherwise
    only the ideal of the core is defined, so ``a`` must be degree 0 and its
    level-k coefficients must vanish on F_k.
    """
    if not J.is_ideal:
        raise ValueError(f"F_0 does not define an ideal: witnesses {J.witnesses}")
    if J.bi_invariant:
        F = J.F[0]
        return all(f.vanishes_on(F) for _, _, f in a.terms())
    if set(a.degrees()) - {0}:
        raise ValueError(
            "only the ideal of the degree-0 core is defined for a set that is not "
            "bi-invariant; got an element with degrees " + str(a.degrees())
        )
    if 0 not in a.parts:
        return True
    K, entries = a.parts[0]
    Fk = J.F_at(K)
    return all(f.vanishes_on(Fk) for f in entries.values())


# -- the correspondence unitary --------------------------------------------


def _inner_E(xi: CylinderFunction, eta: CylinderFunction) -> CylinderFunction:
    # <xi, eta>(x) = sum_i conj(xi(sigma~_i x)) eta(sigma~_i x)
    g = xi.graph
    out = CylinderFunction.zero(g)
    for i in range(1, g.n + 1):
        out = out + act_sigma(xi, i).conj() * act_sigma(eta, i)
    return out


def _inner_F(xi: tuple, eta: tuple) -> CylinderFunction:
    out = CylinderFunction.zero(xi[0].graph)
    for a, b in zip(xi, eta):
        out = out + a.conj() * b
    return out


def _U(xi: CylinderFunction) -> tuple:
    return tuple(act_sigma(xi, i) for i in range(1, xi.graph.n + 1))


def _U_inverse(zeta: tuple) -> CylinderFunction:
    g = zeta[0].graph
    out = CylinderFunction.zero(g)
    for i, z in enumerate(zeta, start=1):
        out = out + chi(g, (i,)) * act_tau(z)
    return out


def correspondence_unitary(graph: TailGraph, depth: int) -> dict:
    """Check that U xi = xi o h is an inner-product preserving bimodule map E -> F.

    The spanning family is the set of depth-``depth`` cylinder indicators.
    """
    _require_surjective(graph)
    fam = [CylinderFunction(graph, depth, {k: Fraction(1)}) for k in graph.cylinders(depth)]
    failures = []
    n = graph.n
    Ufam = [_U(x) for x in fam]
    for a, xi in enumerate(fam):
        for b, eta in enumerate(fam):
            if not _inner_F(Ufam[a], Ufam[b]) == _inner_E(xi, eta):
                failures.append(("inner", a, b))
    for a, xi in enumerate(fam):
        for c, f in enumerate(fam):
            # left actions: E: f.xi = f xi ; F: (f.zeta)(x,i) = f(sigma~_i x) zeta(x,i)
            left = _U(f * xi)
            rightside = tuple(act_sigma(f, i) * Ufam[a][i - 1] for i in range(1, n + 1))
            if not all(p == q for p, q in zip(left, rightside)):
                failures.append(("left", a, c))
            # right actions: E: (xi.f)(x) = xi(x) f(tau x) ; F: (zeta.f)(x,i) = zeta(x,i) f(x)
            left = _U(xi * act_tau(f))
            rightside = tuple(Ufam[a][i] * f for i in range(n))
            if not all(p == q for p, q in zip(left, rightside)):
                failures.append(("right", a, c))
    # onto: every F-element from the family is U of something
    for a, xi in enumerate(fam):
        for i in range(n):
            zeta = tuple(xi if j == i else CylinderFunction.zero(graph) for j in range(n))
            if not all(p == q for p, q in zip(_U(_U_inverse(zeta)), zeta)):
                failures.append(("onto", a, i))
    return {"check": "correspondence-unitary", "depth": depth, "family": len(fam),
            "pass": not failures, "failures": failures[:5]}


# -- random elements for property suites ------------------------------------


def random_function(graph: TailGraph, rng: random.Random, depth: int = 1,
                    density: float = 0.6, span: int = 3) -> CylinderFunction:
    vals = {}
    for k in graph.cylinders(depth):
        if rng.random() < density:
            vals[k] = Fraction(rng.randint(-span, span), rng.randint(1, 2))
    return CylinderFunction(graph, depth, vals)


def random_word(n: int, rng: random.Random, max_len: int) -> Word:
    return tuple(rng.randint(1, n) for _ in range(rng.randint(0, max_len)))


def random_element(graph: TailGraph, rng: random.Random, terms: int = 2,
                   max_len: int = 2, depth: int = 1) -> CoreElement:
    ts = []
    for _ in range(terms):
        ts.append((random_word(graph.n, rng, max_len), random_word(graph.n, rng, max_len),
                   random_function(graph, rng, depth)))
    return CoreElement.from_terms(graph, ts)


def random_tower(graph: TailGraph, rng: random.Random, level: int = 1,
                 depth: int = 1) -> TowerElement:
    mat = {}
    for u in words(graph.n, level):
        for v in words(graph.n, level):
            if rng.random() < 0.5:
                mat[(u, v)] = random_function(graph, rng, depth)
    return TowerElement(graph, level, mat)


# -- full corner after adding a tail ---------------------------------------


def tail_graph_for(tailed) -> TailGraph:
    """Tail graph of the extended system with the truncation boundary kept live."""
    from .covering import build_tail_graph
    return build_tail_graph(tailed.system, boundary=tailed.boundary)


def tau_power_of_base(tailed, graph: TailGraph, k: int) -> tuple:
    """chi_{tau^k(X)} at depth 0, by set calculus and by listing tail points."""
    X = CylinderSet.p_inverse(graph, tailed.base_points)
    via_sets = X
    for _ in range(k):
        via_sets = via_sets.image_tau()
    listed = set(tailed.base_points)
    for u in tailed.U:
        for j in range(1, min(k, tailed.K) + 1):
            listed.add(tailed.tail_point(u, j))
    return via_sets, CylinderSet.p_inverse(graph, listed)


def corner_identity(tailed, graph: TailGraph, u, w, v, f: CylinderFunction,
                    g: CylinderFunction, starred: bool = False) -> tuple:
    """Both sides of (t_u f t_w^*) chi_X (t_w g t_v) = t_u (f g chi_{tau^k(X)}) t_v, k = |w|.

    With ``starred`` the right-hand factor is t_v^* on both sides.
    """
    u, w, v = _w(u), _w(w), _w(v)
    chi_X = CoreElement.function(CylinderSet.p_inverse(graph, tailed.base_points).indicator())
    via_sets, listed = tau_power_of_base(tailed, graph, len(w))
    if not via_sets == listed:
        raise AssertionError("tau^k(X) disagrees between set calculus and the tail listing")
    chi_k = via_sets.indicator()
    if starred:
        right = CoreElement.from_terms(graph, [(w, v, g)])
        rhs = CoreElement.from_terms(graph, [(u, v, f * g * chi_k)])
    else:
        right = multiply(CoreElement.from_terms(graph, [(w, (), g)]), CoreElement.term(graph, v))
        rhs = multiply(CoreElement.from_terms(graph, [(u, (), f * g * chi_k)]),
                       CoreElement.term(graph, v))
    lhs = multiply(multiply(CoreElement.from_terms(graph, [(u, w, f)]), chi_X), right)
    return lhs, rhs
