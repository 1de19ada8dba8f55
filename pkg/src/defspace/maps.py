"""Straight maps between graphs of groups and their legality structures.

A straight map f sends vertices to vertices, each positive edge to a reduced
edge path, and carries a homomorphism of vertex groups; decorations transform
through those homomorphisms, so f(g . x) = phi(g) . f(x).  On top of this sit
turn images, the gate equivalences of f and of its iterates, and the train
track certificate.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .groups import GroupHom
from .graphs import (
    Elliptic, GraphError, Loop, MarkedGraph, Path, Turn,
    base, cyclic_reduce, make_turn, point_path, reduce_path, rev,
)


class MapError(ValueError):
    """Structurally invalid straight map."""


class StraightMap:
    """Map of graphs of groups, determined by vertex/edge images and
    vertex-group homomorphisms.

    ``edge_images`` maps every positive edge of the domain to a Path in the
    codomain (possibly a point: a collapsed edge).
    """

    def __init__(self, domain, codomain, vmap, vgroup_maps, edge_images):
        self.domain = domain
        self.codomain = codomain
        self.vmap = dict(vmap)
        self.vgroup_maps = dict(vgroup_maps)
        self.edge_images = {}
        for name in domain.edges:
            if name not in edge_images:
                raise MapError(f"no image for edge {name!r}")
            p = edge_images[name]
            self.edge_images[name] = reduce_path(p)
        self._check()

    def _check(self):
        for v in self.domain.vertices:
            if v not in self.vmap:
                raise MapError(f"no image for vertex {v!r}")
            if self.vmap[v] not in self.codomain.vertices:
                raise MapError(f"vertex image {self.vmap[v]!r} not in codomain")
            hom = self.vgroup_maps.get(v)
            if hom is None:
                raise MapError(f"no group homomorphism at vertex {v!r}")
            if hom.src is not self.domain.group(v):
                raise MapError(f"homomorphism at {v!r} has the wrong source")
            if hom.dst is not self.codomain.group(self.vmap[v]):
                raise MapError(f"homomorphism at {v!r} has the wrong target")
        for name, p in self.edge_images.items():
            a, b = self.domain.edges[name]
            if p.start != self.vmap[a] or p.end != self.vmap[b]:
                raise MapError(f"image of edge {name!r} joins the wrong vertices")

    # -- application -------------------------------------------------------

    def hom_at(self, v) -> GroupHom:
        return self.vgroup_maps[v]

    def apply_elt(self, v, g):
        return self.hom_at(v).apply(g)

    def image_of_edge(self, e) -> Path:
        """Image of an oriented edge, as a path."""
        p = self.edge_images[base(e)]
        return p.reverse() if e.startswith("~") else p

    def edge_is_collapsed(self, e):
        return self.image_of_edge(e).is_point

    def apply_path(self, path, reduced=True) -> Path:
        out = point_path(self.codomain, self.vmap[path.start])
        v = path.start
        for g, e in path.steps:
            gp = point_path(self.codomain, self.vmap[v], self.apply_elt(v, g))
            out = out.concat(gp).concat(self.image_of_edge(e))
            v = self.domain.tv(e)
        tailp = point_path(self.codomain, self.vmap[v], self.apply_elt(v, path.tail))
        out = out.concat(tailp)
        return reduce_path(out) if reduced else out

    def apply_loop(self, loop):
        """Image of a loop, cyclically reduced; may be Elliptic."""
        p = self.apply_path(loop.to_path(), reduced=False)
        if p.is_point:
            return Elliptic(self.codomain, p.start, p.tail)
        return cyclic_reduce(Loop(self.codomain, _close(p)))

    def image_germ(self, germ):
        """First germ of the image of a decorated germ, or None if collapsed.

        Returns (h, c) with h a decoration and c an oriented edge of the
        codomain, so that f(g . e-germ) starts with h . c.
        """
        g, e = germ
        v = self.domain.iv(e)
        p = self.image_of_edge(e)
        if p.is_point:
            return None
        h0, c = p.steps[0]
        return (self.apply_elt(v, g) * h0, c)

    def image_turn(self, turn):
        """Image turn, or None if either germ is collapsed."""
        a = self.image_germ(turn.germs[0])
        b = self.image_germ(turn.germs[1])
        if a is None or b is None:
            return None
        return make_turn(self.codomain, a, b)

    # -- composition and norms --------------------------------------------

    def compose(self, inner):
        """self after inner."""
        if inner.codomain is not self.domain:
            raise MapError("composition domains do not match")
        vmap = {v: self.vmap[inner.vmap[v]] for v in inner.domain.vertices}
        homs = {v: self.hom_at(inner.vmap[v]).compose(inner.hom_at(v))
                for v in inner.domain.vertices}
        imgs = {name: self.apply_path(inner.edge_images[name])
                for name in inner.domain.edges}
        return StraightMap(inner.domain, self.codomain, vmap, homs, imgs)

    def edge_stretch(self, metric_dom, metric_cod):
        """Per-edge stretch factors lambda_e = L(f(e)) / L(e)."""
        out = {}
        for name in self.domain.edges:
            num = sum(Fraction(metric_cod[base(e)]) for _, e in self.edge_images[name].steps)
            out[name] = num / Fraction(metric_dom[name])
        return out

    def lipschitz(self, metric_dom, metric_cod):
        return max(self.edge_stretch(metric_dom, metric_cod).values())

    def tension_edges(self, metric_dom, metric_cod):
        st = self.edge_stretch(metric_dom, metric_cod)
        top = max(st.values())
        return sorted(n for n, v in st.items() if v == top)

    def is_simplicial(self):
        return all(len(p) == 1 for p in self.edge_images.values())

    def combinatorial_volume(self):
        """Sum of combinatorial lengths of edge images."""
        return sum(len(p) for p in self.edge_images.values())


def _close(p):
    """Steps of the loop obtained by folding a path's tail into its head."""
    (g0, e0), rest = p.steps[0], p.steps[1:]
    return ((p.tail * g0, e0),) + rest


def identity_map(graph):
    vmap = {v: v for v in graph.vertices}
    homs = {v: GroupHom.identity(graph.group(v)) for v in graph.vertices}
    imgs = {}
    for name in graph.edges:
        a, b = graph.edges[name]
        one = graph.identity_elt(a)
        imgs[name] = Path(graph, a, ((one, name),), graph.identity_elt(b))
    return StraightMap(graph, graph, vmap, homs, imgs)


# ---------------------------------------------------------------------------
# Gate structures and legality


def illegal_turns(f):
    """All non-degenerate illegal turns of a self straight map.

    A turn is illegal when its two germs have the same image germ.  For each
    unordered pair of germs at a vertex there is at most one decoration g
    making [a, g.b] illegal; when the undecorated image germs share an edge it
    is g = phi^{-1}(h_a . h_b^{-1}), provided that preimage exists.

    Returns (illegal, collapsed_germs): the illegal turns, and the oriented
    edges whose image collapses (every turn containing them degenerates).
    """
    graph = f.domain
    illegal = {}
    collapsed = sorted(e for e in graph.oriented_edges() if f.edge_is_collapsed(e))
    for v in graph.vertices:
        G = graph.group(v)
        hom = f.hom_at(v)
        germs = graph.germs_at(v)
        firsts = {}
        for e in germs:
            img = f.image_germ((G.identity(), e))
            if img is not None:
                firsts[e] = img
        for i, a in enumerate(germs):
            if a not in firsts:
                continue
            ha, ca = firsts[a]
            for b in germs[i:]:
                if b not in firsts:
                    continue
                hb, cb = firsts[b]
                if ca != cb:
                    continue
                # f(a) and f(g.b) share a first germ iff phi(g) = ha * hb^-1
                target = ha * hb.inverse()
                for g in _preimages(hom, target):
                    t = make_turn(graph, (G.identity(), a), (g, b))
                    if not t.is_trivial:
                        illegal.setdefault(t.key(), t)
    return [illegal[k] for k in sorted(illegal)], collapsed


def _preimages(hom, target):
    """All preimages of a target element under a vertex-group homomorphism."""
    G = hom.src
    if G.is_finite or G.is_trivial:
        return [g for g in G.all_elements() if hom.apply(g) == target]
    try:
        inv = hom.inverse()
    except Exception:
        raise MapError(
            "cannot enumerate preimages under a non-invertible homomorphism "
            f"of the infinite group {G.name!r}")
    g = inv.apply(target)
    return [g] if hom.apply(g) == target else []


def default_kmax(graph):
    """Default iteration bound for turn-orbit legality checks."""
    n = len(graph.oriented_edges())
    return n * n + 16


def turn_orbit_status(f, turn, k_max=None):
    """Track the orbit of a turn under image_turn.

    Returns ('illegal', r) if the r-th image is degenerate or collapses,
    ('legal', r) if the orbit revisits a turn (it then stays non-degenerate
    forever), or ('unresolved', k_max) if neither happens within the bound.
    """
    if k_max is None:
        k_max = default_kmax(f.domain)
    seen = {turn.key(): 0}
    t = turn
    for r in range(1, k_max + 1):
        if t.is_trivial:
            return ("illegal", r - 1)
        nxt = f.image_turn(t)
        if nxt is None or nxt.is_trivial:
            return ("illegal", r)
        if nxt.is_degenerate and nxt.germs[0][0].key == nxt.germs[1][0].key:
            return ("illegal", r)
        if nxt.key() in seen:
            return ("legal", r)
        seen[nxt.key()] = r
        t = nxt
    return ("unresolved", k_max)


def is_fk_legal(f, turn, k_max=None):
    """Tri-state: True, False, or None when the orbit did not close up."""
    status, _ = turn_orbit_status(f, turn, k_max)
    if status == "legal":
        return True
    if status == "illegal":
        return False
    return None


def is_f_legal(f, turn):
    t = f.image_turn(turn)
    return t is not None and not t.is_trivial


def path_is_legal(f, path, k_max=None):
    """Tri-state legality of every turn crossed by a path."""
    from .graphs import path_turns
    verdict = True
    for t in path_turns(path):
        s = is_fk_legal(f, t, k_max)
        if s is False:
            return False
        if s is None:
            verdict = None
    return verdict


def loop_is_legal(f, loop, k_max=None):
    from .graphs import is_cyclically_reduced, loop_turns
    if not is_cyclically_reduced(loop):
        return False
    verdict = True
    for t in loop_turns(loop):
        s = is_fk_legal(f, t, k_max)
        if s is False:
            return False
        if s is None:
            verdict = None
    return verdict


def gates_at(f, v, germs=None):
    """Gates of the one-step equivalence at a vertex.

    Two undecorated germs are in one gate when some decoration makes the turn
    between them illegal, or when either collapses.  Returns the partition of
    the requested germs (default: all germs at v) as sorted tuples.
    """
    graph = f.domain
    if germs is None:
        germs = graph.germs_at(v)
    collapsed = [e for e in germs if f.edge_is_collapsed(e)]
    live = [e for e in germs if not f.edge_is_collapsed(e)]
    ill, _ = illegal_turns(f)
    adj = {e: set() for e in live}
    for t in ill:
        if t.vertex != v:
            continue
        (_, e1), (_, e2) = t.germs
        if e1 in adj and e2 in adj:
            adj[e1].add(e2)
            adj[e2].add(e1)
    parts = []
    seen = set()
    for e in live:
        if e in seen:
            continue
        comp = {e}
        frontier = [e]
        while frontier:
            x = frontier.pop()
            for y in adj[x]:
                if y not in comp:
                    comp.add(y)
                    frontier.append(y)
        seen |= comp
        parts.append(tuple(sorted(comp)))
    if collapsed:
        parts.append(tuple(sorted(collapsed)))
    return sorted(parts)


def gate_count(f, v, germs=None):
    parts = gates_at(f, v, germs)
    # collapsed germs do not form a genuine gate for legality purposes
    return sum(1 for p in parts if not f.edge_is_collapsed(p[0]))


@dataclass(frozen=True)
class TrainTrackReport:
    is_train_track: object  # True / False / None (unresolved certification)
    edge_verdicts: dict
    vertex_gates: dict
    failures: tuple

    def __bool__(self):
        return self.is_train_track is True


def train_track_report(f, k_max=None):
    """Certify that a self straight map is a train track map.

    Needs every edge to map over a path all of whose turns stay legal under
    iteration, and enough gates at every vertex so that legal turns exist;
    at a vertex with trivial vertex group that means at least two gates,
    while a non-trivial vertex group always admits legal decorated turns at
    a single non-collapsed germ.
    """
    graph = f.domain
    failures = []
    edge_verdicts = {}
    certified = True
    for name in graph.edges:
        if f.edge_is_collapsed(name):
            edge_verdicts[name] = False
            failures.append(f"edge {name!r} is collapsed")
            continue
        p = f.edge_images[name]
        if any(f.edge_is_collapsed(e) for _, e in p.steps):
            edge_verdicts[name] = False
            failures.append(f"image of edge {name!r} crosses a collapsed edge")
            continue
        edge_verdicts[name] = path_is_legal(f, p, k_max)
        if edge_verdicts[name] is False:
            failures.append(f"image of edge {name!r} crosses an illegal turn")
        elif edge_verdicts[name] is None:
            certified = None
    vertex_gates = {}
    for v in graph.vertices:
        parts = gates_at(f, v)
        vertex_gates[v] = parts
        live = gate_count(f, v)
        if graph.is_free_vertex(v):
            if live < 2:
                failures.append(f"vertex {v!r} has {live} gate(s), needs 2")
        else:
            if live < 1:
                failures.append(f"non-free vertex {v!r} has every germ collapsed")
    ok = True
    for verdict in edge_verdicts.values():
        if verdict is False:
            ok = False
    if any("gate" in msg or "collapsed" in msg for msg in failures):
        ok = False
    if ok and certified is None:
        ok = None
    return TrainTrackReport(ok, edge_verdicts, vertex_gates, tuple(failures))
