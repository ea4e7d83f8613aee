"""Truncated Fock representations and the checks run on them.

The Fock space is truncated to words of length at most L, listed in
length-lexicographic order.  Creation operators push words past L to zero,
so identities are asserted only on the interior: columns |w| < L unless a
check documents a tighter window.  Entries stay exact (Fraction and friends)
unless floating data is supplied.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence, Union

from . import scalars
from .corealg import CoreElement, adjoint, multiply
from .covering import (
    CylinderFunction,
    InfiniteTailSpec,
    TailGraph,
    act_sigma,
    build_tail_graph,
    lift_p,
    words,
    words_upto,
)
from .dynsys import FiniteDynSys, TailedSys, is_surjective, range_deficiency

DEFAULT_MAX_DIM = 100_000


class DimensionGuard(ValueError):
    pass


# -- exact sparse matrices --------------------------------------------------


class SparseMatrix:
    """Dictionary-of-keys matrix over exact or floating scalars."""

    __slots__ = ("shape", "data")

    def __init__(self, shape: tuple, data: Optional[dict] = None):
        self.shape = shape
        self.data = {k: v for k, v in (data or {}).items() if not scalars.is_zero(v, 0.0)}

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        return cls((n, n), {(k, k): Fraction(1) for k in range(n)})

    @classmethod
    def diagonal(cls, values: Sequence) -> "SparseMatrix":
        return cls((len(values), len(values)), {(k, k): v for k, v in enumerate(values)})

    def __getitem__(self, rc):
        return self.data.get(rc, Fraction(0))

    def __matmul__(self, other: "SparseMatrix") -> "SparseMatrix":
        if self.shape[1] != other.shape[0]:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        rows: dict = {}
        for (r, c), v in other.data.items():
            rows.setdefault(r, []).append((c, v))
        out: dict = {}
        for (r, m), a in self.data.items():
            for c, b in rows.get(m, ()):
                out[(r, c)] = out.get((r, c), 0) + a * b
        return SparseMatrix((self.shape[0], other.shape[1]), out)

    def __add__(self, other: "SparseMatrix") -> "SparseMatrix":
        out = dict(self.data)
        for k, v in other.data.items():
            out[k] = out.get(k, 0) + v
        return SparseMatrix(self.shape, out)

    def __neg__(self):
        return SparseMatrix(self.shape, {k: -v for k, v in self.data.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "SparseMatrix":
        return SparseMatrix(self.shape, {k: c * v for k, v in self.data.items()})

    def adjoint(self) -> "SparseMatrix":
        return SparseMatrix((self.shape[1], self.shape[0]),
                            {(c, r): scalars.conj(v) for (r, c), v in self.data.items()})

    def max_abs(self, rows: Optional[Iterable[int]] = None,
                cols: Optional[Iterable[int]] = None):
        rs = None if rows is None else set(rows)
        cs = None if cols is None else set(cols)
        best = Fraction(0)
        for (r, c), v in self.data.items():
            if (rs is None or r in rs) and (cs is None or c in cs):
                a = scalars.abs_exact(v)
                if float(a) > float(best):
                    best = a
        return best

    def to_triplets(self) -> list:
        return [[r, c, scalars.encode(v)] for (r, c), v in sorted(self.data.items())]

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return self.shape == other.shape and scalars.is_zero((self - other).max_abs())

    __hash__ = None


def _deviation_ok(dev) -> bool:
    return scalars.is_zero(dev) if scalars.is_exact(dev) else float(dev) <= scalars.FLOAT_TOL


def _report(check: str, dev, interior: int, **extra) -> dict:
    return {"check": check, "maxDeviation": scalars.encode(dev) if scalars.is_exact(dev) else float(dev),
            "interiorDim": interior, "pass": _deviation_ok(dev), **extra}


# -- truncated representations ----------------------------------------------


@dataclass
class TruncatedRep:
    """A Fock representation truncated at word length L.

    ``kind`` is "orbit" (a point of a finite system), "covering" (an
    eventually periodic point of the covering space) or "tail" (an orbit
    representation carrying marked window subspaces).
    """

    kind: str
    n: int
    L: int
    basis: list
    point_at: Callable  # word -> point (base index or InfiniteTailSpec)
    sys: Optional[FiniteDynSys] = None
    graph: Optional[TailGraph] = None
    window_labels: tuple = ()  # i_0 ... i_{S-1}
    window_vertices: tuple = ()  # x_0 ... x_S
    index: dict = field(default_factory=dict)

    def __post_init__(self):
        self.index = {w: k for k, w in enumerate(self.basis)}

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def S(self) -> int:
        return len(self.window_labels)

    def interior(self) -> list[int]:
        return [k for k, w in enumerate(self.basis) if len(w) < self.L]

    def columns(self, lo: int = 0, hi: Optional[int] = None) -> list[int]:
        hi = self.L if hi is None else hi
        return [k for k, w in enumerate(self.basis) if lo <= len(w) <= hi]

    def shift(self, i: int) -> SparseMatrix:
        """Truncated left creation operator L_i."""
        out = {}
        for k, w in enumerate(self.basis):
            if len(w) < self.L:
                out[(self.index[(i,) + w], k)] = Fraction(1)
        return SparseMatrix((self.dim, self.dim), out)

    def word_shift(self, u: Sequence[int]) -> SparseMatrix:
        out = {}
        u = tuple(u)
        for k, w in enumerate(self.basis):
            if len(w) + len(u) <= self.L:
                out[(self.index[u + w], k)] = Fraction(1)
        return SparseMatrix((self.dim, self.dim), out)

    def value(self, f, w):
        """f at the point attached to basis word w."""
        pt = self.point_at(w)
        if isinstance(f, CylinderFunction):
            if isinstance(pt, InfiniteTailSpec):
                return f(pt)
            if f.depth != 0:
                raise ValueError("an orbit representation of a base point only sees depth-0 functions")
            return f.values.get(((), (pt,)), Fraction(0))
        if callable(f):
            return f(pt)
        return f[pt]

    def function(self, f) -> SparseMatrix:
        """Diagonal operator lambda(f) = diag(f(point_at(w)))."""
        return SparseMatrix.diagonal([self.value(f, w) for w in self.basis])

    def window_embedding(self, s: int) -> dict:
        """Word index in H_s -> word index in H_S, via xi_w -> xi_{w i_s ... i_{S-1}}."""
        suffix = tuple(self.window_labels[s:])
        out = {}
        for w in words_upto(self.n, self.L - len(suffix)):
            out[w] = self.index[w + suffix]
        return out

    def dump(self) -> dict:
        return {
            "kind": self.kind, "n": self.n, "L": self.L,
            "basis": ["".join(map(str, w)) for w in self.basis],
            "shifts": {str(i): self.shift(i).to_triplets() for i in range(1, self.n + 1)},
        }


def fock_dim(n: int, L: int) -> int:
    return L + 1 if n == 1 else (n ** (L + 1) - 1) // (n - 1)


def _basis(n: int, L: int, max_dim: int) -> list:
    if L < 0:
        raise ValueError("Fock depth L must be >= 0")
    d = fock_dim(n, L)
    if d > max_dim:
        raise DimensionGuard(f"Fock dimension {d} for n={n}, L={L} exceeds guard {max_dim}")
    return list(words_upto(n, L))


def build_orbit_rep(sys: FiniteDynSys, x, L: int, max_dim: int = DEFAULT_MAX_DIM) -> TruncatedRep:
    x = sys.index(x)
    return TruncatedRep("orbit", sys.n, L, _basis(sys.n, L, max_dim),
                        lambda w: sys.apply_word(w, x), sys=sys)


def build_covering_rep(graph: TailGraph, spec: InfiniteTailSpec, L: int,
                       max_dim: int = DEFAULT_MAX_DIM) -> TruncatedRep:
    """Orbit representation of a point of the covering space under sigma~."""
    spec.validate(graph.sys)
    cache: dict = {}

    def point_at(w):
        if w not in cache:
            cache[w] = spec.prepend_word(graph.sys, w)
        return cache[w]

    return TruncatedRep("covering", graph.n, L, _basis(graph.n, L, max_dim), point_at,
                        sys=graph.sys, graph=graph)


def build_tail_rep(sys: FiniteDynSys, spec: Union[InfiniteTailSpec, tuple], S: int, L: int,
                   max_dim: int = DEFAULT_MAX_DIM) -> TruncatedRep:
    """Window S of the infinite tail representation.

    ``spec`` is an eventually periodic tail, or a finite backward path
    ``(labels, vertices)`` with at least S labels (for truncated tails).  The
    result is the orbit representation of x_S with the windows H_s, s < S,
    marked through xi_w -> xi_{w i_s ... i_{S-1}}.
    """
    if isinstance(spec, InfiniteTailSpec):
        spec.validate(sys)
        labels = tuple(spec.label(s) for s in range(S))
        verts = tuple(spec.vertex(s) for s in range(S + 1))
    else:
        labels, verts = tuple(spec[0])[:S], tuple(spec[1])[: S + 1]
        if len(labels) < S:
            raise ValueError(f"window S={S} is longer than the supplied path")
        for s, i in enumerate(labels):
            if sys.apply(i, verts[s + 1]) != verts[s]:
                raise ValueError(f"path is not a backward orbit at position {s}")
    if S > L:
        raise ValueError("window S must not exceed the Fock depth L")
    xS = verts[S]
    rep = TruncatedRep("tail", sys.n, L, _basis(sys.n, L, max_dim),
                       lambda w: sys.apply_word(w, xS), sys=sys,
                       window_labels=labels, window_vertices=verts)
    rep_check = check_window_coherence(rep)
    if not rep_check["pass"]:
        raise AssertionError(f"window embedding inconsistent: {rep_check}")
    return rep


# -- checks -----------------------------------------------------------------


def _indicators(sys: FiniteDynSys) -> list:
    return [(lambda y: (lambda z: Fraction(int(z == y))))(y) for y in range(sys.m)]


def check_covariance(rep: TruncatedRep) -> dict:
    """lambda(f) L_i = L_i lambda(f o sigma_i) on interior columns."""
    cols = rep.interior()
    dev = Fraction(0)
    if rep.kind == "covering":
        g = rep.graph
        fams = [CylinderFunction(g, 1, {k: Fraction(1)}) for k in g.cylinders(1)]
        pairs = [(f, lambda f, i: act_sigma(f, i)) for f in fams]
    else:
        sys = rep.sys
        pairs = [(f, lambda f, i: (lambda z: f(sys.apply(i, z)))) for f in _indicators(sys)]
    for i in range(1, rep.n + 1):
        Li = rep.shift(i)
        for f, compose in pairs:
            diff = rep.function(f) @ Li - Li @ rep.function(compose(f, i))
            dev = max(dev, diff.max_abs(cols=cols), key=float)
    return _report("covariance", dev, len(cols), kind=rep.kind)


def check_row_isometry(rep: TruncatedRep) -> dict:
    """L_i^* L_j = delta_ij I on interior columns."""
    cols = rep.interior()
    I = SparseMatrix.identity(rep.dim)
    shifts = [rep.shift(i) for i in range(1, rep.n + 1)]
    dev = Fraction(0)
    for a, Li in enumerate(shifts):
        for b, Lj in enumerate(shifts):
            diff = Li.adjoint() @ Lj
            if a == b:
                diff = diff - I
            dev = max(dev, diff.max_abs(cols=cols), key=float)
    return _report("row-isometry", dev, len(cols), kind=rep.kind)


def check_cuntz_completeness(rep: TruncatedRep) -> dict:
    """sum_i L_i L_i^* = I on the images of the windows H_s, s < S."""
    if rep.kind != "tail" or rep.S < 1:
        raise ValueError("Cuntz completeness is checked on a tail representation with S >= 1")
    cols = sorted(set(rep.window_embedding(rep.S - 1).values()))
    total = SparseMatrix((rep.dim, rep.dim))
    for i in range(1, rep.n + 1):
        Li = rep.shift(i)
        total = total + Li @ Li.adjoint()
    dev = (total - SparseMatrix.identity(rep.dim)).max_abs(cols=cols)
    return _report("cuntz-completeness", dev, len(cols), window=rep.S)


def check_window_coherence(rep: TruncatedRep) -> dict:
    """lambda_{x_S} on the image of H_s agrees with lambda_{x_s}, for every s < S."""
    sys = rep.sys
    dev = Fraction(0)
    count = 0
    for s in range(rep.S):
        xs = rep.window_vertices[s]
        emb = rep.window_embedding(s)
        for f in _indicators(sys):
            for w, k in emb.items():
                count += 1
                d = scalars.abs_exact(rep.value(f, rep.basis[k]) - f(sys.apply_word(w, xs)))
                dev = max(dev, d, key=float)
    return _report("window-coherence", dev, count, window=rep.S)


def maximality_flag(sys: FiniteDynSys, x) -> bool:
    """The orbit representation at x is maximal iff x is outside every range."""
    return sys.index(x) in range_deficiency(sys).deficiency


def check_rho_intertwine(sys: FiniteDynSys, spec: InfiniteTailSpec, L: int,
                         x=None, max_dim: int = DEFAULT_MAX_DIM) -> dict:
    """lambda_{(i,x)} o rho = lambda_x: f o p and s_i go to the same matrices."""
    if not is_surjective(sys):
        raise ValueError("the intertwining check needs a surjective system")
    if x is not None and sys.index(x) != spec.x0:
        raise ValueError(f"tail starts at {sys.points[spec.x0]}, not at {x}")
    g = build_tail_graph(sys)
    cov = build_covering_rep(g, spec, L, max_dim)
    base = build_orbit_rep(sys, spec.x0, L, max_dim)
    dev = Fraction(0)
    for y in range(sys.m):
        ind = [Fraction(int(z == y)) for z in range(sys.m)]
        lifted = cov.function(lift_p(g, ind))
        dev = max(dev, (lifted - base.function(ind)).max_abs(), key=float)
    for i in range(1, sys.n + 1):
        dev = max(dev, (cov.shift(i) - base.shift(i)).max_abs(), key=float)
    return _report("rho-intertwine", dev, cov.dim, point=spec.describe(sys))


# -- numeric evaluation of the symbolic span --------------------------------


def eval_terms(terms: Iterable[tuple], rep: TruncatedRep) -> SparseMatrix:
    """sum of L_u lambda(f) L_v^* over raw (u, v, f) terms."""
    out: dict = {}
    for u, v, f in terms:
        u, v = tuple(u), tuple(v)
        for k, y in enumerate(rep.basis):
            if y[: len(v)] != v:
                continue
            rest = y[len(v):]
            if len(u) + len(rest) > rep.L:
                continue
            val = rep.value(f, rest)
            if not scalars.is_zero(val, 0.0):
                r = rep.index[u + rest]
                out[(r, k)] = out.get((r, k), 0) + val
    return SparseMatrix((rep.dim, rep.dim), out)


def eval_core(a: CoreElement, rep: TruncatedRep) -> SparseMatrix:
    return eval_terms(a.terms(), rep)


def _top_level(*elements: CoreElement) -> int:
    return max((e.level(d) for e in elements for d in e.degrees()), default=0)


def _creation_excess(a: CoreElement) -> int:
    return max([0] + a.degrees())


def check_eval_product(a: CoreElement, b: CoreElement, rep: TruncatedRep,
                       ab: Optional[CoreElement] = None) -> dict:
    """evalCore(ab) = evalCore(a) evalCore(b) on the columns where the
    truncation and the Cuntz relation (off the vacuum) are both honest."""
    ab = multiply(a, b) if ab is None else ab
    lo = _top_level(ab)
    hi = rep.L - _creation_excess(a) - _creation_excess(b)
    cols = rep.columns(lo, hi)
    diff = eval_core(ab, rep) - eval_core(a, rep) @ eval_core(b, rep)
    return _report("eval-product", diff.max_abs(cols=cols), len(cols), window=[lo, hi])


def check_eval_adjoint(a: CoreElement, rep: TruncatedRep) -> dict:
    b = adjoint(a)
    lo = _top_level(a, b)
    idx = rep.columns(lo)
    diff = eval_core(b, rep) - eval_core(a, rep).adjoint()
    return _report("eval-adjoint", diff.max_abs(rows=idx, cols=idx), len(idx))


def check_eval_isometry(V: CoreElement, rep: TruncatedRep) -> dict:
    """evalCore(V)^* evalCore(V) = I on interior columns."""
    M = eval_core(V, rep)
    cols = rep.interior()
    diff = M.adjoint() @ M - SparseMatrix.identity(rep.dim)
    return _report("eval-isometry", diff.max_abs(cols=cols), len(cols))


def check_eval_equal(lhs_terms, rhs_terms, rep: TruncatedRep, lo: int, name: str) -> dict:
    """Two raw term lists give the same operator on columns |y| >= lo."""
    cols = rep.columns(lo)
    diff = eval_terms(lhs_terms, rep) - eval_terms(rhs_terms, rep)
    return _report(name, diff.max_abs(cols=cols), len(cols))


# -- adding a tail ----------------------------------------------------------


def tail_multiplicity(tailed: TailedSys, u, k: int, L: int,
                      max_dim: int = DEFAULT_MAX_DIM) -> dict:
    """Decompose the orbit representation at (u, -k) restricted to the base.

    The generators are the base point indicators (extended by zero) and the
    compressions chi_X s_i chi_X.  Expect alpha = sum_{s<k} n^s annihilated
    basis vectors and beta = n^k blocks, block y spanned by xi_{v y} with
    |y| = k, each entrywise equal to the orbit representation at u
    truncated at L - k.
    """
    base = tailed.base
    u = base.index(u)
    if u not in tailed.U:
        raise ValueError(f"{base.points[u]} is in the range of the maps; no tail hangs below it")
    if not 0 <= k <= tailed.K:
        raise ValueError(f"k = {k} outside 0..{tailed.K}")
    if k > L:
        raise ValueError("k must not exceed the Fock depth L")
    ext = tailed.system
    n = ext.n
    rep = build_orbit_rep(ext, tailed.tail_point(u, k), L, max_dim)
    small = build_orbit_rep(base, u, L - k, max_dim)

    chiX = SparseMatrix.diagonal([Fraction(int(rep.point_at(w) < base.m)) for w in rep.basis])
    gens_big, gens_small = [], []
    for y in range(base.m):
        gens_big.append(rep.function(lambda z, y=y: Fraction(int(z == y))))
        gens_small.append(small.function(lambda z, y=y: Fraction(int(z == y))))
    for i in range(1, n + 1):
        gens_big.append(chiX @ rep.shift(i) @ chiX)
        gens_small.append(small.shift(i))

    touched = set()
    for G in gens_big:
        for (r, c) in G.data:
            touched.add(r)
            touched.add(c)
    annihilated = [w for kk, w in enumerate(rep.basis) if kk not in touched]
    alpha_expected = sum(n**s for s in range(k))
    alpha_ok = len(annihilated) == alpha_expected and all(len(w) < k for w in annihilated)

    blocks = list(words(n, k))
    block_of = {}
    for y in blocks:
        for v in small.basis:
            block_of[rep.index[v + y]] = (y, small.index[v])
    mismatches = 0
    for G, H in zip(gens_big, gens_small):
        for (r, c), val in G.data.items():
            if r not in block_of or c not in block_of:
                mismatches += 1
                continue
            (yr, vr), (yc, vc) = block_of[r], block_of[c]
            if yr != yc or not scalars.close(val, H[(vr, vc)]):
                mismatches += 1
        # every small entry must be reproduced in each block
        for (r, c), val in H.data.items():
            for y in blocks:
                big = G[(rep.index[small.basis[r] + y], rep.index[small.basis[c] + y])]
                if not scalars.close(big, val):
                    mismatches += 1
    beta_ok = mismatches == 0 and len(blocks) == n**k
    counts_ok = alpha_expected + n**k * small.dim == rep.dim
    return {
        "check": "tail-multiplicity",
        "u": base.points[u], "k": k, "L": L,
        "alpha": len(annihilated), "alphaExpected": alpha_expected,
        "beta": len(blocks), "betaExpected": n**k,
        "blockDim": small.dim, "mismatches": mismatches,
        "maxDeviation": "0" if mismatches == 0 else None,
        "interiorDim": rep.dim,
        "pass": alpha_ok and beta_ok and counts_ok,
    }


def check_corner_compression(a: CoreElement, chi_X: CylinderFunction, rep: TruncatedRep) -> dict:
    """evalCore(chi_X a chi_X) = P evalCore(a) P with P = lambda(chi_X)."""
    cX = CoreElement.function(chi_X)
    sandwich = multiply(multiply(cX, a), cX)
    P = rep.function(chi_X)
    lo = _top_level(sandwich, a)
    cols = rep.columns(lo)
    diff = eval_core(sandwich, rep) - P @ eval_core(a, rep) @ P
    return _report("corner-compression", diff.max_abs(cols=cols), len(cols))
