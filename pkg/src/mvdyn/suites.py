"""Named check suites run by ``mvdyn check`` and the acceptance tests.

Each check returns a :class:`CheckResult`.  Suites never raise on a failing
identity; they record it.  A check that cannot run on a system (for example
V on a non-surjective system) is reported as skipped with the reason.
"""

from __future__ import annotations

import random
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from . import corealg as ca
from . import fockrep as fr
from .covering import (
    CylinderFunction,
    CylinderSet,
    TailGraph,
    act_sigma,
    build_tail_graph,
    covering_points,
    partition_of_unity,
    separation_test,
    tau_determinism,
    words,
    words_upto,
)
from .dynsys import (
    FiniteDynSys,
    add_tail,
    bi_invariant_sets,
    invariant_sets,
    is_minimal,
    is_surjective,
    range_deficiency,
)
from .verdict import bi_invariant_witness


@dataclass
class CheckResult:
    name: str
    suite: str
    passed: Optional[bool]  # None means skipped
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def status(self) -> str:
        return "skip" if self.passed is None else ("pass" if self.passed else "FAIL")

    def to_json(self) -> dict:
        out = asdict(self)
        out["status"] = self.status
        out.pop("seconds")
        return out


@dataclass
class SuiteConfig:
    depth: int = 3
    fock_depth: int = 3
    tail_window: int = 2
    tail_k: int = 3
    seed: int = 0
    max_dim: int = fr.DEFAULT_MAX_DIM
    random_trials: int = 100
    eval_pairs: int = 50
    covering_points: int = 3


def _run(name: str, suite: str, fn: Callable[[], tuple]) -> CheckResult:
    t0 = time.perf_counter()
    try:
        passed, detail = fn()
    except _Skip as exc:
        passed, detail = None, {"reason": str(exc)}
    return CheckResult(name, suite, passed, detail, time.perf_counter() - t0)


class _Skip(Exception):
    pass


def _need_surjective(sys: FiniteDynSys):
    if not is_surjective(sys):
        raise _Skip("needs a surjective system")


def function_family(g: TailGraph, depth: int = 1) -> list[CylinderFunction]:
    """Cylinder indicators at ``depth``: a spanning family of C(X~) at that depth."""
    return [CylinderFunction(g, depth, {k: Fraction(1)}) for k in g.cylinders(depth)]


# -- symbolic ---------------------------------------------------------------


def check_range_projection(g: TailGraph, max_len: int, rng: random.Random) -> tuple:
    fam = function_family(g, 1) + [ca.random_function(g, rng, 2)]
    bad = []
    count = 0
    for w in words_upto(g.n, max_len):
        for f in fam:
            lhs, rhs = ca.range_projection_formula(w, f)
            count += 1
            if not lhs == rhs:
                bad.append(list(w))
    return not bad, {"cases": count, "failedWords": bad[:5]}


def check_refinement(g: TailGraph, max_len: int, rng: random.Random, L: int) -> tuple:
    """t_u f t_v^* = sum_i t_{ui}(f o sigma~_i)t_{vi}^*, three ways.

    Canonical equality, coefficient extraction by multiplication, and (on
    surjective systems) numeric evaluation of the raw term lists.
    """
    pts = covering_points(g, max_len=3, limit=1) if is_surjective(g.sys) else []
    rep = fr.build_covering_rep(g, pts[0], L) if pts else None
    count = 0
    bad = []
    pairs = [(u, v) for u in words_upto(g.n, max_len) for v in words_upto(g.n, max_len)]
    for u, v in pairs:
        f = ca.random_function(g, rng, 1)
        raw_rhs = [(u + (i,), v + (i,), act_sigma(f, i)) for i in range(1, g.n + 1)]
        lhs = ca.CoreElement.from_terms(g, [(u, v, f)])
        rhs = ca.CoreElement.from_terms(g, raw_rhs)
        ok = lhs == rhs
        for uu, vv, h in raw_rhs:
            ok = ok and lhs.extract(uu, vv) == h
        if rep is not None and len(v) + 1 <= L:
            ok = ok and fr.check_eval_equal([(u, v, f)], raw_rhs, rep, len(v) + 1, "refine")["pass"]
        count += 1
        if not ok:
            bad.append([list(u), list(v)])
    return not bad, {"cases": count, "numericRoute": rep is not None, "failed": bad[:5]}


def check_partition(g: TailGraph, max_len: int) -> tuple:
    res = {k: partition_of_unity(g, k) for k in range(max_len + 1)}
    return all(res.values()), {"levels": list(res)}


def check_v_isometry(g: TailGraph) -> tuple:
    _need_surjective(g.sys)
    V = ca.isometry_v(g)
    ok = ca.multiply(ca.adjoint(V), V) == ca.CoreElement.one(g)
    VV = ca.multiply(V, ca.adjoint(V))
    proj = ca.multiply(VV, VV) == VV
    unital = ca.alpha(ca.CoreElement.one(g)) == VV
    return ok and proj and unital, {"VstarV": ok, "VVstarProjection": proj, "alphaOne": unital}


def check_alpha_ad_v(g: TailGraph, trials: int, rng: random.Random) -> tuple:
    _need_surjective(g.sys)
    bad = 0
    for _ in range(trials):
        b = ca.random_tower(g, rng, rng.randint(0, 1), 1)
        via_tower = ca.alpha_tower(b).to_core()
        via_v = ca.alpha(b.to_core())
        if not via_tower == via_v:
            bad += 1
    return bad == 0, {"trials": trials, "failures": bad}


def check_alpha_endomorphism(g: TailGraph, trials: int, rng: random.Random) -> tuple:
    _need_surjective(g.sys)
    bad = 0
    for _ in range(trials):
        a, b = ca.random_element(g, rng), ca.random_element(g, rng)
        if not ca.alpha(ca.multiply(a, b)) == ca.multiply(ca.alpha(a), ca.alpha(b)):
            bad += 1
        if not ca.alpha(ca.adjoint(a)) == ca.adjoint(ca.alpha(a)):
            bad += 1
    return bad == 0, {"trials": trials, "failures": bad}


def check_recovery(g: TailGraph, max_k: int, rng: random.Random) -> tuple:
    _need_surjective(g.sys)
    count, bad = 0, []
    for k in range(max_k + 1):
        for v in words_upto(g.n, 1):
            for u in words(g.n, len(v) + k):
                f = ca.random_function(g, rng, 1)
                lhs, rhs = ca.recovery_identity(g, u, f, v)
                count += 1
                if not lhs == rhs:
                    bad.append([list(u), list(v)])
    return not bad, {"cases": count, "failed": bad[:5]}


def check_gauge(g: TailGraph, trials: int, rng: random.Random) -> tuple:
    bad_avg = bad_idem = 0
    for _ in range(trials):
        a = ca.random_element(g, rng, terms=3)
        if not ca.gauge_average(a) == ca.gauge_expect(a):
            bad_avg += 1
        e = ca.gauge_expect(a)
        if not ca.gauge_expect(e) == e:
            bad_idem += 1
    return bad_avg == 0 and bad_idem == 0, {"trials": trials, "averageFailures": bad_avg,
                                            "idempotenceFailures": bad_idem}


def symbolic_suite(sys: FiniteDynSys, cfg: SuiteConfig) -> list[CheckResult]:
    g = build_tail_graph(sys)
    rng = random.Random(cfg.seed)
    d = cfg.depth
    trials = max(1, cfg.random_trials // 5)
    out = [
        _run("range-projection-formula", "symbolic", lambda: check_range_projection(g, d, rng)),
        _run("refinement-identity", "symbolic",
             lambda: check_refinement(g, d, rng, d + 2)),
        _run("partition-of-unity", "symbolic", lambda: check_partition(g, d)),
        _run("v-isometry", "symbolic", lambda: check_v_isometry(g)),
        _run("alpha-equals-ad-v", "symbolic", lambda: check_alpha_ad_v(g, cfg.random_trials, rng)),
        _run("alpha-endomorphism", "symbolic", lambda: check_alpha_endomorphism(g, trials, rng)),
        _run("recovery-identity", "symbolic", lambda: check_recovery(g, 2, rng)),
        _run("gauge-expectation", "symbolic", lambda: check_gauge(g, trials, rng)),
    ]
    return out


# -- numeric ----------------------------------------------------------------


def _merge(reports: list) -> tuple:
    worst = max((float(Fraction(r["maxDeviation"])) if isinstance(r["maxDeviation"], str)
                 else float(r["maxDeviation"] or 0) for r in reports), default=0.0)
    return all(r["pass"] for r in reports), {"reports": len(reports), "maxDeviation": worst}


def check_orbit_reps(sys: FiniteDynSys, L: int, max_dim: int) -> tuple:
    reps = []
    for x in range(sys.m):
        for l in range(1, L + 1):
            rep = fr.build_orbit_rep(sys, x, l, max_dim)
            reps += [fr.check_covariance(rep), fr.check_row_isometry(rep)]
    return _merge(reps)


def check_intertwine(sys: FiniteDynSys, L: int, count: int, max_dim: int) -> tuple:
    _need_surjective(sys)
    g = build_tail_graph(sys)
    reports = []
    for x in range(sys.m):
        pts = covering_points(g, x, max_len=4, limit=count)
        reports += [fr.check_rho_intertwine(sys, p, L, x, max_dim) for p in pts]
    ok, detail = _merge(reports)
    per_point = len(reports) / sys.m
    detail["pointsPerBasePoint"] = per_point
    return ok, detail


def check_eval_products(sys: FiniteDynSys, L: int, pairs: int, rng: random.Random,
                        max_dim: int) -> tuple:
    g = build_tail_graph(sys)
    pt = covering_points(g, max_len=3, limit=1)[0]
    rep = fr.build_covering_rep(g, pt, L, max_dim)
    reports = []
    for _ in range(pairs):
        a = ca.random_element(g, rng, max_len=1)
        b = ca.random_element(g, rng, max_len=1)
        reports.append(fr.check_eval_product(a, b, rep))
        reports.append(fr.check_eval_adjoint(a, rep))
    if is_surjective(sys):
        reports.append(fr.check_eval_isometry(ca.isometry_v(g), rep))
    reports.append(fr.check_covariance(rep))
    return _merge(reports)


def check_tail_reps(sys: FiniteDynSys, S: int, L: int, max_dim: int) -> tuple:
    g = build_tail_graph(sys)
    pts = covering_points(g, max_len=3)
    if not pts:
        raise _Skip("no covering points")
    reports = []
    for p in pts[:4]:
        rep = fr.build_tail_rep(sys, p, S, max(L, S))
        reports += [fr.check_window_coherence(rep), fr.check_cuntz_completeness(rep)]
    return _merge(reports)


def check_tail_multiplicity(sys: FiniteDynSys, K: int, L: int, max_dim: int) -> tuple:
    if is_surjective(sys):
        raise _Skip("system is surjective; no tail to add")
    tailed = add_tail(sys, K)
    reports = []
    for u in sorted(tailed.U):
        for k in range(0, min(K, L) + 1):
            reports.append(fr.tail_multiplicity(tailed, u, k, L, max_dim))
    ok = all(r["pass"] for r in reports)
    return ok, {"cases": [{"u": r["u"], "k": r["k"], "alpha": r["alpha"], "beta": r["beta"]}
                          for r in reports], "truncationStable": tailed.truncation_stable}


def check_corner(sys: FiniteDynSys, K: int, rng: random.Random) -> tuple:
    if is_surjective(sys):
        raise _Skip("system is surjective; no tail to add")
    results = {}
    for depth in (K, K + 1):
        tailed = add_tail(sys, depth)
        g = ca.tail_graph_for(tailed)
        bad = 0
        count = 0
        for w in words_upto(sys.n, K):
            for u in words_upto(sys.n, 1):
                for v in words_upto(sys.n, 1):
                    f, h = ca.random_function(g, rng, 0), ca.random_function(g, rng, 0)
                    for starred in (False, True):
                        lhs, rhs = ca.corner_identity(tailed, g, u, w, v, f, h, starred)
                        count += 1
                        bad += not lhs == rhs
        results[depth] = (bad, count)
    ok = all(b == 0 for b, _ in results.values())
    return ok, {"tailDepths": {str(k): {"failures": b, "cases": c} for k, (b, c) in results.items()}}


def check_maximality(sys: FiniteDynSys) -> tuple:
    U = range_deficiency(sys).deficiency
    flags = {sys.points[x]: fr.maximality_flag(sys, x) for x in range(sys.m)}
    return all(flags[sys.points[x]] == (x in U) for x in range(sys.m)), {"maximal": flags}


def numeric_suite(sys: FiniteDynSys, cfg: SuiteConfig) -> list[CheckResult]:
    rng = random.Random(cfg.seed + 1)
    L = cfg.fock_depth
    return [
        _run("covariance-and-row-isometry", "numeric",
             lambda: check_orbit_reps(sys, max(L, 4), cfg.max_dim)),
        _run("maximality-criterion", "numeric", lambda: check_maximality(sys)),
        _run("covering-intertwining", "numeric",
             lambda: check_intertwine(sys, L, cfg.covering_points, cfg.max_dim)),
        _run("eval-multiplicative", "numeric",
             lambda: check_eval_products(sys, L + 2, cfg.eval_pairs, rng, cfg.max_dim)),
        _run("tail-window-cuntz", "numeric",
             lambda: check_tail_reps(sys, cfg.tail_window, L, cfg.max_dim)),
        _run("tail-multiplicity", "numeric",
             lambda: check_tail_multiplicity(sys, cfg.tail_k, L + 1, cfg.max_dim)),
        _run("full-corner-identity", "numeric", lambda: check_corner(sys, cfg.tail_k, rng)),
    ]


# -- set calculus -----------------------------------------------------------


def check_lattices(sys: FiniteDynSys) -> tuple:
    inv = invariant_sets(sys)
    bi = bi_invariant_sets(sys)
    ok = frozenset() in inv and sys.all_points in inv and all(B in inv for B in bi)
    return ok, {"invariant": [sys.names(A) for A in inv], "biInvariant": [sys.names(B) for B in bi]}


def check_lifted_sets(sys: FiniteDynSys, depth: int) -> tuple:
    """p^{-1}(A) is sigma~-invariant for invariant A; tau-invariant iff A is bi-invariant."""
    g = build_tail_graph(sys)
    rows = []
    ok = True
    for A in invariant_sets(sys):
        W = CylinderSet.p_inverse(g, A)
        sig = all(W.image_sigma(i) <= W for i in range(1, sys.n + 1))
        tau = W.image_tau() <= W
        expected_tau = _tau_closed_on_live(sys, g, frozenset(A) & g.live)
        ok = ok and sig and tau == expected_tau
        # the same flags at a refined depth
        Wd = W.refine(min(depth, 2))
        ok = ok and (Wd.image_tau() <= Wd) == tau
        rows.append({"A": sys.names(A), "sigmaInvariant": sig, "tauInvariant": tau})
    return ok, {"sets": rows}


def _tau_closed_on_live(sys, g, A) -> bool:
    # every live preimage of a point of A lies in A
    return all(y in A for x in A for _, y in g.preimages[x])


def check_witness_chain(sys: FiniteDynSys, depth: int) -> tuple:
    _need_surjective(sys)
    if is_minimal(sys).minimal:
        proper = [A for A in invariant_sets(sys) if A and A != sys.all_points]
        return not proper, {"minimal": True, "properInvariantSets": len(proper)}
    A = is_minimal(sys).witness_set
    chain = bi_invariant_witness(sys, A, depth)
    return chain.valid, {"A": sys.names(A), "sizes": [len(W.members) for W in chain.sets]}


def check_ideal_flags(sys: FiniteDynSys, depth: int) -> tuple:
    """F_{k+1} = tau(F_k); robust sets satisfy F_k = union_i sigma~_i(F_{k+1})."""
    g = build_tail_graph(sys)
    family = [CylinderSet.everything(g), CylinderSet.empty(g)]
    for A in invariant_sets(sys):
        family.append(CylinderSet.p_inverse(g, A))
    for k in g.cylinders(1)[:6]:
        family.append(CylinderSet(g, 1, [k]))
    ok = True
    rows = []
    for F0 in family:
        J = ca.ideal_from_set(F0)
        horizon = len(J.F) + 2
        seq_ok = all(J.F_at(k).image_tau() == J.F_at(k + 1) for k in range(horizon))
        robust_ok = True
        if J.robust:
            for k in range(horizon):
                union = CylinderSet(g, J.F_at(k + 1).depth + 1, ())
                for i in range(1, g.n + 1):
                    union = union | J.F_at(k + 1).image_sigma(i)
                robust_ok = robust_ok and union == J.F_at(k)
        bi_ok = (not J.bi_invariant) or all(J.F_at(k) == F0 for k in range(horizon))
        ok = ok and seq_ok and robust_ok and bi_ok
        rows.append({"size": len(F0.members), "depth": F0.depth, "tauInvariant": J.tau_invariant,
                     "robust": J.robust, "biInvariant": J.bi_invariant})
    return ok, {"sets": rows}


def check_separation(g: TailGraph) -> tuple:
    """A non-separation witness must be two distinct valid tails with equal labels."""
    res = separation_test(g)
    if res.separates:
        return True, {"separates": True}
    t1, t2 = res.witness_tails
    t1.validate(g.sys)
    t2.validate(g.sys)
    horizon = 2 * (t1.p + t1.q + t2.p + t2.q)
    same_labels = all(t1.label(s) == t2.label(s) for s in range(horizon))
    distinct = any(t1.vertex(s) != t2.vertex(s) for s in range(horizon))
    return same_labels and distinct, {"separates": False,
                                      "pair": [g.sys.points[x] for x in res.witness_pair]}


def check_correspondence(sys: FiniteDynSys, depth: int) -> tuple:
    _need_surjective(sys)
    rep = ca.correspondence_unitary(build_tail_graph(sys), min(depth, 2))
    return rep["pass"], {"family": rep["family"], "failures": rep["failures"]}


def check_tower(sys: FiniteDynSys, trials: int, rng: random.Random) -> tuple:
    g = build_tail_graph(sys)
    worst = 0.0
    for _ in range(trials):
        b = ca.random_tower(g, rng, rng.randint(0, 1), 1)
        a, c = ca.tower_norm(b), ca.tower_norm(ca.tower_embed(b))
        worst = max(worst, abs(float(a) - float(c)))
    return worst <= 1e-10, {"trials": trials, "maxNormDrift": worst}


def set_suite(sys: FiniteDynSys, cfg: SuiteConfig) -> list[CheckResult]:
    g = build_tail_graph(sys)
    rng = random.Random(cfg.seed + 2)
    return [
        _run("invariant-lattices", "sets", lambda: check_lattices(sys)),
        _run("lifted-invariant-sets", "sets", lambda: check_lifted_sets(sys, cfg.depth)),
        _run("bi-invariant-witness-chain", "sets", lambda: check_witness_chain(sys, cfg.depth)),
        _run("ideal-sequences", "sets", lambda: check_ideal_flags(sys, cfg.depth)),
        _run("tau-determinism", "sets", lambda: (lambda r: (r["pass"], r))(tau_determinism(g, cfg.depth))),
        _run("separation-test", "sets", lambda: check_separation(g)),
        _run("correspondence-unitary", "sets", lambda: check_correspondence(sys, cfg.depth)),
        _run("tower-embedding-isometric", "sets",
             lambda: check_tower(sys, cfg.random_trials // 5 or 1, rng)),
    ]


def all_suites(sys: FiniteDynSys, cfg: SuiteConfig) -> list[CheckResult]:
    return symbolic_suite(sys, cfg) + numeric_suite(sys, cfg) + set_suite(sys, cfg)
