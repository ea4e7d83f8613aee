"""Independent brute-force oracles.

Nothing here imports the package's own algorithms; systems are passed as
plain lists of maps, ``maps[i][x]`` being sigma_{i+1}(x).
"""

from __future__ import annotations

import itertools
from fractions import Fraction


def subsets(m):
    for mask in range(1 << m):
        yield frozenset(x for x in range(m) if mask >> x & 1)


def invariant(maps, A):
    return all(s[x] in A for s in maps for x in A)


def bi_invariant(maps, A):
    return invariant(maps, A) and all(x in A for s in maps for x in range(len(s)) if s[x] in A)


def invariant_sets(maps, m):
    return {A for A in subsets(m) if invariant(maps, A)}


def bi_invariant_sets(maps, m):
    return {A for A in subsets(m) if bi_invariant(maps, A)}


def minimal(maps, m):
    """Every forward orbit is all of X (breadth-first search from each point)."""
    for x in range(m):
        seen, frontier = {x}, [x]
        while frontier:
            y = frontier.pop()
            for s in maps:
                if s[y] not in seen:
                    seen.add(s[y])
                    frontier.append(s[y])
        if len(seen) != m:
            return False
    return True


def surjective(maps, m):
    return {s[x] for s in maps for x in range(m)} == set(range(m))


def live(maps, m):
    """x is live iff it has a backward walk of length m (pigeonhole gives a cycle)."""
    out = set()
    for x in range(m):
        layer = {x}
        for _ in range(m):
            layer = {y for z in layer for s in maps for y in range(m) if s[y] == z}
        if layer:
            out.add(x)
    return out


def all_systems(max_points, n):
    for m in range(1, max_points + 1):
        for choice in itertools.product(itertools.product(range(m), repeat=m), repeat=n):
            yield m, [list(c) for c in choice]


def two_tail_search(maps, m):
    """Search for two distinct tails with equal labels.

    Depth-first over simple backward paths of pairs (x_k, y_k), x_k != y_k,
    with one shared label per step; a revisited pair closes a lasso.  The
    bound on prefix plus cycle is 2|X|^2.  Returns (labels, xs, ys, p) for
    the lasso (cycle starts at position p) or None.
    """
    lv = live(maps, m)
    bound = 2 * m * m
    for x0 in sorted(lv):
        for y0 in sorted(lv):
            if x0 == y0:
                continue
            stack = [([], [(x0, y0)])]
            while stack:
                labels, path = stack.pop()
                if len(path) > bound:
                    continue
                x, y = path[-1]
                for i, s in enumerate(maps, start=1):
                    for a in range(m):
                        if s[a] != x or a not in lv:
                            continue
                        for b in range(m):
                            if s[b] != y or b not in lv:
                                continue
                            if (a, b) in path:
                                p = path.index((a, b))
                                lab = labels + [i]
                                return lab, [q[0] for q in path], [q[1] for q in path], p
                            stack.append((labels + [i], path + [(a, b)]))
    return None


# -- Fock space, from the definitions ---------------------------------------


def fock_words(n, L):
    out = [()]
    layer = [()]
    for _ in range(L):
        layer = [w + (i,) for w in layer for i in range(1, n + 1)]
        out += layer
    return out


def apply_word(maps, w, x):
    for i in reversed(w):
        x = maps[i - 1][x]
    return x


def dense_orbit_rep(maps, x, L):
    """(basis, {i: L_i as nested lists}, diag(y) -> list of diagonal values)."""
    n = len(maps)
    basis = fock_words(n, L)
    pos = {w: k for k, w in enumerate(basis)}
    d = len(basis)
    shifts = {}
    for i in range(1, n + 1):
        M = [[0] * d for _ in range(d)]
        for w in basis:
            if len(w) < L:
                M[pos[(i,) + w]][pos[w]] = 1
        shifts[i] = M
    def diag(f):
        return [f(apply_word(maps, w, x)) for w in basis]
    return basis, shifts, diag


# -- covering space, from the definitions -----------------------------------


def tails_at_depth(maps, m, D):
    """Depth-D cylinders as (labels, vertices), grown from the live set."""
    lv = live(maps, m)
    keys = [((), (x,)) for x in sorted(lv)]
    for _ in range(D):
        keys = [(l + (i,), v + (y,)) for l, v in keys
                for i, s in enumerate(maps, start=1) for y in range(m)
                if s[y] == v[-1] and y in lv]
    return set(keys)


def p3_cylinders_from_description(D):
    """Depth-D cylinders of the three-point example, read off its tail list.

    The tails are (1^inf at 1), (2^inf at 2), (any labels, all zeros), and
    for k >= 1 the tails with k zeros followed by 1s (label 2 at the switch,
    then 1s) or by 2s (label 1 at the switch, then 2s).
    """
    out = {((1,) * D, (1,) * (D + 1)), ((2,) * D, (2,) * (D + 1))}
    for labels in itertools.product((1, 2), repeat=D):
        out.add((labels, (0,) * (D + 1)))
    for k in range(1, D + 1):
        for head in itertools.product((1, 2), repeat=k - 1):
            for top, switch in ((1, 2), (2, 1)):
                labels = head + (switch,) + (top,) * (D - k)
                verts = (0,) * k + (top,) * (D + 1 - k)
                out.add((labels[:D], verts))
    return out


def prepend(maps, labels, verts, w):
    """sigma~_w of a (finite prefix of a) tail."""
    labels, verts = list(labels), list(verts)
    for i in reversed(w):
        verts.insert(0, maps[i - 1][verts[0]])
        labels.insert(0, i)
    return labels, verts


def dense_eval(maps, labels, verts, L, terms):
    """Matrix of sum t_u f t_v^* on the truncated Fock space of a covering point.

    ``terms`` holds (u, v, depth, values) with values keyed by cylinder
    (labels, vertices); the point is given by a long enough finite prefix.
    Returns {(row_word, col_word): value}.
    """
    n = len(maps)
    basis = fock_words(n, L)
    out = {}
    for u, v, depth, values in terms:
        for y in basis:
            if tuple(y[: len(v)]) != tuple(v):
                continue
            rest = tuple(y[len(v):])
            if len(u) + len(rest) > L:
                continue
            lab, ver = prepend(maps, labels, verts, rest)
            key = (tuple(lab[:depth]), tuple(ver[: depth + 1]))
            val = values.get(key, 0)
            if val:
                r = tuple(u) + rest
                out[(r, y)] = out.get((r, y), 0) + val
    return {k: x for k, x in out.items() if x != 0}
