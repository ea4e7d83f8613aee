"""Structural conclusions for a finite system.

For n >= 2 the envelope is simple exactly when the system is minimal.  For
n = 1 that criterion does not apply and the envelope is a crossed product
by Z.  When the label cylinders separate the points of the covering space
of a surjective system the envelope is the Cuntz algebra O_n.
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field
from typing import Iterator, Optional

from .covering import CylinderSet, build_tail_graph, separation_test
from .dynsys import (
    FiniteDynSys,
    add_tail,
    forward_orbit,
    invariant_sets,
    is_invariant,
    is_minimal,
    is_surjective,
    range_deficiency,
)

SIMPLE = "Simple"
NOT_SIMPLE = "NotSimple"
N1 = "TheoremInapplicableN1"
ON = "IsomorphicToOn"
INCONCLUSIVE = "Inconclusive"


@dataclass
class Verdict:
    minimal: bool
    surjective: bool
    simplicity: str
    onDetection: str
    witnesses: dict = field(default_factory=dict)
    truncationDepths: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


def _is_one_point_identity(sys: FiniteDynSys) -> bool:
    return sys.m == 1 and sys.n == 1


def on_detect(sys: FiniteDynSys) -> tuple[str, dict]:
    """O_n detection by point separation; silent (Inconclusive) otherwise."""
    if not is_surjective(sys):
        raise ValueError("O_n detection is only defined for surjective systems")
    res = separation_test(build_tail_graph(sys))
    if res.separates:
        return ON, {"separation": True, "algebra": f"O_{sys.n}"}
    a, b = res.witness_pair
    return INCONCLUSIVE, {
        "separation": False,
        "pair": [sys.points[a], sys.points[b]],
        "tails": [t.describe(sys) for t in res.witness_tails],
        "note": "separation is sufficient for O_n, not necessary; no negative claim",
    }


def simplicity_verdict(sys: FiniteDynSys, tail_K: int = 3) -> Verdict:
    mini = is_minimal(sys)
    surj = is_surjective(sys)
    witnesses: dict = {}
    depths: dict = {}
    if not mini.minimal:
        witnesses["invariantSet"] = sys.names(mini.witness_set)
        witnesses["orbitOf"] = sys.points[mini.witness_point]

    if surj:
        on, on_w = on_detect(sys)
        witnesses["separation"] = on_w
    else:
        on = INCONCLUSIVE
        tailed = add_tail(sys, tail_K)
        U = range_deficiency(sys).deficiency
        depths = {"tailK": tail_K, "truncationStable": tailed.truncation_stable}
        witnesses["deficiency"] = sys.names(U)
        witnesses["chain"] = [
            f"{', '.join(sys.names(U))} not in the range of any map, so the system is not surjective",
            "a system that is not surjective is not minimal",
            "after adding a tail, X is a proper invariant subset of the extended system, "
            "so the extended system is not minimal either",
            "the envelope is a full corner of the envelope of the extended system; "
            "Morita equivalence preserves the ideal lattice",
        ]
        if not tailed.truncation_stable:
            witnesses["truncationWarning"] = tailed.note

    if sys.n == 1:
        note = "n = 1: the envelope is a crossed product by Z over the covering space"
        if _is_one_point_identity(sys):
            note += "; here the C*-envelope is C(T), which is not simple"
        witnesses["n1Note"] = note
        simplicity = N1
    else:
        simplicity = SIMPLE if mini.minimal else NOT_SIMPLE
    return Verdict(mini.minimal, surj, simplicity, on, witnesses, depths)


# -- bi-invariant witness chain ---------------------------------------------


@dataclass
class WitnessChain:
    sets: list
    checks: list
    valid: bool

    def to_json(self) -> dict:
        return {
            "valid": self.valid,
            "sizes": [len(W.members) for W in self.sets],
            "checks": self.checks,
            "sets": [W.to_json() for W in self.sets],
        }


def bi_invariant_witness(sys: FiniteDynSys, A, depth: int = 3) -> WitnessChain:
    """Clopen chain W_0 = p^{-1}(A), W_{k+1} = union_i sigma~_i(W_k).

    Each W_k must be nonempty and proper, W_{k+1} inside W_k, with
    tau(W_{k+1}) inside W_k and sigma~_i(W_k) inside W_{k+1}.  The chain is a
    finite shadow of the proper closed bi-invariant set given by its
    intersection.
    """
    if not is_surjective(sys):
        raise ValueError("the witness chain is built on surjective systems")
    A = frozenset(sys.index(a) for a in A)
    if not A or A == sys.all_points:
        raise ValueError("A must be a nonempty proper subset")
    if not is_invariant(sys, A):
        raise ValueError(f"A = {sys.names(A)} is not invariant")
    g = build_tail_graph(sys)
    W = [CylinderSet.p_inverse(g, A)]
    for _ in range(depth):
        nxt = CylinderSet(g, W[-1].depth + 1, ())
        for i in range(1, sys.n + 1):
            nxt = nxt | W[-1].image_sigma(i)
        W.append(nxt)
    checks = []
    for k, Wk in enumerate(W):
        checks.append({"k": k, "nonempty": not Wk.is_empty(), "proper": not Wk.is_everything()})
    for k in range(depth):
        c = checks[k + 1]
        c["nested"] = W[k + 1] <= W[k]
        c["tauStep"] = W[k + 1].image_tau() <= W[k]
        c["sigmaStep"] = all(W[k].image_sigma(i) <= W[k + 1] for i in range(1, sys.n + 1))
    valid = all(all(v for key, v in c.items() if key != "k") for c in checks)
    return WitnessChain(W, checks, valid)


# -- exhaustive scans -------------------------------------------------------


def all_systems(max_points: int, n: int) -> Iterator[FiniteDynSys]:
    """Every system with 1..max_points points and n maps."""
    for m in range(1, max_points + 1):
        maps = list(itertools.product(range(m), repeat=m))
        for choice in itertools.product(maps, repeat=n):
            yield FiniteDynSys(tuple(str(k) for k in range(m)), choice)


def enumeration_scan(max_points: int = 3, n: int = 2, witness_depth: int = 2) -> dict:
    """Verdict/minimality equivalences over all small systems."""
    total = 0
    failures = []
    findings = []
    for sys in all_systems(max_points, n):
        total += 1
        v = simplicity_verdict(sys)
        proper = [A for A in invariant_sets(sys) if A and A != sys.all_points]
        mini = v.minimal
        orbit_mini = all(forward_orbit(sys, x) == sys.all_points for x in range(sys.m))
        ok = (mini == orbit_mini) and (mini == (not proper))
        if n >= 2:
            ok = ok and ((v.simplicity == SIMPLE) == mini)
        if mini and not v.surjective:
            ok = False
        if v.surjective and not mini:
            chain = bi_invariant_witness(sys, proper[0], witness_depth)
            ok = ok and chain.valid
        if not ok:
            failures.append(sys.to_json())
        if n >= 2 and v.onDetection == ON and v.simplicity != SIMPLE:
            findings.append(sys.to_json())
        if len(failures) > 20:
            break
    return {
        "check": "enumeration-equivalence",
        "systems": total, "maxPoints": max_points, "n": n,
        "failures": failures, "onImpliesSimpleCounterexamples": findings,
        "pass": not failures,
    }
