"""Displacement of an automorphism at points and over simplices.

The displacement of a self map at a marked metric graph is the maximal
stretch of a loop, and it is attained on a finite candidate set: cyclically
reduced loops crossing every unoriented edge at most twice, with decorations
drawn from a finite per-vertex pool.  Over a whole projectivized simplex the
infimum is computed by bisection, each probe being an exact rational
feasibility question.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .graphs import (
    Elliptic, Loop, base, cyclic_reduce, is_cyclically_reduced, loop_length, rev,
)
from .lp import solve_lp


class BudgetExceeded(RuntimeError):
    pass


def candidate_decorations(graph, maps=(), chosen=None, extra=None):
    """Per-vertex decoration pool for loop enumeration.

    Finite vertex groups always contribute every element; this pool only
    matters at vertices with infinite group, where it holds the identity,
    the chosen generator and its inverse, and every decoration appearing in
    the edge images of the given maps at that vertex.
    """
    pool = {}
    for v in graph.vertices:
        G = graph.group(v)
        if not G.is_infinite:
            continue
        elts = {G.identity().key: G.identity()}
        if chosen is not None and chosen.has(G):
            h = chosen.get(G)
            elts[h.key] = h
            elts[h.inverse().key] = h.inverse()
        for gname in G.gens or ():
            g = G.free_gen(gname)
            elts[g.key] = g
            elts[g.inverse().key] = g.inverse()
        for f in maps:
            for p in f.edge_images.values():
                for g, e in p.steps:
                    if g.group is G:
                        elts[g.key] = g
                        elts[g.inverse().key] = g.inverse()
                t = p.tail
                if t.group is G:
                    elts[t.key] = t
                    elts[t.inverse().key] = t.inverse()
        for g in (extra or {}).get(v, []):
            elts[g.key] = g
        pool[v] = sorted(elts.values(), key=lambda g: str(g))
    return pool


def _decorations_at(graph, v, pool):
    G = graph.group(v)
    if v in pool:
        return pool[v]
    if G.is_finite or G.is_trivial:
        return G.all_elements()
    return [G.identity()]


def enumerate_loops(graph, max_per_edge=2, max_len=None, pool=None, budget=2_000_000):
    """All cyclically reduced loops, one per rotation/inversion class.

    Crossing bound is per unoriented edge; decorations come from the pool
    (every element at finite vertices).  Deterministic order.
    """
    pool = pool or {}
    if max_len is None:
        max_len = max_per_edge * len(graph.edges)
    seen = {}
    nodes = 0
    oriented = graph.oriented_edges()

    def extend(start, steps, counts):
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise BudgetExceeded(f"loop enumeration exceeded {budget} nodes")
        v = graph.tv(steps[-1][1]) if steps else start
        if steps and v == start:
            loop = Loop(graph, tuple(steps))
            if is_cyclically_reduced(loop):
                canon = loop.canonical(with_inversion=True)
                seen.setdefault(canon.serial(), canon)
        if len(steps) >= max_len:
            return
        prev = steps[-1][1] if steps else None
        for e in graph.germs_at(v):
            if counts.get(base(e), 0) >= max_per_edge:
                continue
            for g in _decorations_at(graph, v, pool):
                if prev is not None and e == rev(prev) and g.is_identity:
                    continue
                counts[base(e)] = counts.get(base(e), 0) + 1
                steps.append((g, e))
                extend(start, steps, counts)
                steps.pop()
                counts[base(e)] -= 1

    for v in sorted(graph.vertices):
        extend(v, [], {})
    return [seen[k] for k in sorted(seen)]


def candidate_loops(graph, maps=(), chosen=None, extra=None, budget=2_000_000):
    pool = candidate_decorations(graph, maps=maps, chosen=chosen, extra=extra)
    return enumerate_loops(graph, max_per_edge=2, pool=pool, budget=budget)


@dataclass(frozen=True)
class Stretch:
    value: Fraction
    witness: object  # Loop or None

    def __str__(self):
        return f"{self.value} (witness {self.witness})"


def loop_stretch(f, loop, metric_dom, metric_cod):
    """L([f(loop)]) / L(loop); zero when the image is elliptic."""
    den = loop_length(loop, metric_dom)
    if den == 0:
        raise ValueError("loop has zero length")
    img = f.apply_loop(loop)
    num = loop_length(img, metric_cod)
    return Fraction(num) / Fraction(den)


def lambda_point(f, metric_dom, metric_cod=None, chosen=None, budget=2_000_000):
    """Displacement at a point: maximal candidate stretch, with witness."""
    metric_cod = metric_cod if metric_cod is not None else metric_dom
    best = None
    for loop in candidate_loops(f.domain, maps=(f,), chosen=chosen, budget=budget):
        r = loop_stretch(f, loop, metric_dom, metric_cod)
        if best is None or r > best.value:
            best = Stretch(r, loop)
    if best is None:
        raise ValueError("graph carries no candidate loop")
    return best


def oracle_lambda(f, metric_dom, metric_cod=None, l_max=10, chosen=None,
                  budget=5_000_000):
    """Exhaustive stretch maximum over all loops of combinatorial length
    at most l_max.  Slow; used to validate the candidate policy."""
    metric_cod = metric_cod if metric_cod is not None else metric_dom
    pool = candidate_decorations(f.domain, maps=(f,), chosen=chosen)
    best = None
    loops = enumerate_loops(f.domain, max_per_edge=l_max, max_len=l_max,
                            pool=pool, budget=budget)
    for loop in loops:
        r = loop_stretch(f, loop, metric_dom, metric_cod)
        if best is None or r > best.value:
            best = Stretch(r, loop)
    if best is None:
        raise ValueError("graph carries no loop of length <= l_max")
    return best


def stretch_between(h, metric_dom, metric_cod, chosen=None):
    """Lipschitz distance factor Lambda(X, Y) along a comparison map h."""
    best = None
    for loop in candidate_loops(h.domain, maps=(h,), chosen=chosen):
        r = loop_stretch(h, loop, metric_dom, metric_cod)
        if best is None or r > best.value:
            best = Stretch(r, loop)
    return best


# ---------------------------------------------------------------------------
# Displacement over a simplex


@dataclass(frozen=True)
class SimplexDisplacement:
    low: Fraction
    high: Fraction
    metric: dict           # minimizing (to tolerance) unit-volume metric
    on_boundary: bool      # infimum approached on the simplex boundary
    candidates: tuple      # the loop set used

    @property
    def value(self):
        return (self.low + self.high) / 2

    def contains(self, x, rel_tol=Fraction(0)):
        return self.low * (1 - rel_tol) <= x <= self.high * (1 + rel_tol)


def _loop_rows(f, loops):
    """Per loop: unoriented edge counts of gamma and of [f(gamma)]."""
    names = sorted(f.domain.edges)
    idx = {n: i for i, n in enumerate(names)}
    rows = []
    for loop in loops:
        b = [0] * len(names)
        for _, e in loop.steps:
            b[idx[base(e)]] += 1
        a = [0] * len(names)
        img = f.apply_loop(loop)
        if not isinstance(img, Elliptic):
            for _, e in img.steps:
                a[idx[base(e)]] += 1
        rows.append((tuple(a), tuple(b)))
    return names, rows


def _feasible(names, rows, lam):
    """Max m subject to sum x = 1, x_i >= m, and a.x <= lam * b.x per loop.

    Variables are the edge lengths plus m.  Returns (m_opt, x) or None when
    no metric in the closed simplex satisfies every stretch constraint.
    """
    n = len(names)
    a_ub = []
    b_ub = []
    for a, b in rows:
        a_ub.append([Fraction(ai) - lam * bi for ai, bi in zip(a, b)] + [Fraction(0)])
        b_ub.append(Fraction(0))
    for i in range(n):
        row = [Fraction(0)] * (n + 1)
        row[i] = Fraction(-1)
        row[n] = Fraction(1)
        a_ub.append(row)
        b_ub.append(Fraction(0))
    c = [Fraction(0)] * n + [Fraction(1)]
    a_eq = [[Fraction(1)] * n + [Fraction(0)]]
    status, value, x = solve_lp(c, a_ub=a_ub, b_ub=b_ub, a_eq=a_eq, b_eq=[Fraction(1)])
    if status != "optimal" or value < 0:
        return None
    return value, x[:n]


def lambda_simplex(f, chosen=None, rel_tol=Fraction(1, 2 ** 40), budget=2_000_000):
    """Infimum of the displacement over the closed projectivized simplex.

    Bisection on the stretch bound; each probe is an exact rational linear
    feasibility problem over the candidate loops.  The returned interval
    [low, high] brackets the infimum with high/low - 1 <= rel_tol; when the
    infimum is 1 exactly the interval collapses to a point.
    """
    loops = candidate_loops(f.domain, maps=(f,), chosen=chosen, budget=budget)
    names, rows = _loop_rows(f, loops)
    n = len(names)

    probe_one = _feasible(names, rows, Fraction(1))
    if probe_one is not None:
        m, x = probe_one
        metric = dict(zip(names, x))
        return SimplexDisplacement(Fraction(1), Fraction(1), metric,
                                   on_boundary=(m == 0), candidates=tuple(loops))

    bary = {name: Fraction(1, n) for name in names}
    hi = f.lipschitz(bary, bary)
    probe_hi = _feasible(names, rows, hi)
    if probe_hi is None:
        raise RuntimeError("displacement bisection: barycentric bound infeasible")
    best_m, best_x = probe_hi
    lo = Fraction(1)
    while hi - lo > rel_tol * lo:
        mid = (lo + hi) / 2
        mid = mid.limit_denominator(2 ** 64)
        if mid <= lo or mid >= hi:
            mid = (lo + hi) / 2
        res = _feasible(names, rows, mid)
        if res is None:
            lo = mid
        else:
            hi = mid
            best_m, best_x = res
    metric = dict(zip(names, best_x))
    return SimplexDisplacement(lo, hi, metric, on_boundary=(best_m == 0),
                               candidates=tuple(loops))
