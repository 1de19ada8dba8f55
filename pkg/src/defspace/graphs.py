"""Graphs of groups with trivial edge groups: paths, loops, turns, metrics.

Oriented edges are plain strings; the reversal of edge ``"e"`` is spelled
``"~e"``.  A decorated edge path is a sequence of (group element, oriented
edge) steps plus a trailing decoration; a loop drops the trailing decoration
and is read cyclically.  All values are immutable.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .groups import GroupElement, GroupError, VertexGroup, element_sort_key


class GraphError(ValueError):
    """Structurally invalid graph, path, or turn."""


def rev(e):
    """The reversed oriented edge."""
    return e[1:] if e.startswith("~") else "~" + e


def base(e):
    """Unoriented (positive) name of an oriented edge."""
    return e[1:] if e.startswith("~") else e


def is_positive(e):
    return not e.startswith("~")


class MarkedGraph:
    """A finite connected graph with a vertex group at every vertex.

    Edge groups are trivial by construction.  ``edges`` maps each positive
    edge name to its (initial, terminal) vertex pair.
    """

    def __init__(self, vertices, edges):
        self.vertices = dict(sorted(vertices.items()))
        self.edges = dict(sorted(edges.items()))
        for name in self.edges:
            if name.startswith("~"):
                raise GraphError(f"edge name {name!r} may not start with '~'")
        for name, (a, b) in self.edges.items():
            if a not in self.vertices or b not in self.vertices:
                raise GraphError(f"edge {name!r} has an unknown endpoint")

    def group(self, v) -> VertexGroup:
        return self.vertices[v]

    def iv(self, e):
        a, b = self.edges[base(e)]
        return b if e.startswith("~") else a

    def tv(self, e):
        return self.iv(rev(e))

    def oriented_edges(self):
        out = []
        for name in self.edges:
            out.append(name)
            out.append("~" + name)
        return out

    def germs_at(self, v):
        """Oriented edges starting at v, sorted; a loop contributes both germs."""
        return sorted(e for e in self.oriented_edges() if self.iv(e) == v)

    def valence(self, v):
        return len(self.germs_at(v))

    def is_free_vertex(self, v):
        return self.group(v).is_trivial

    def non_free_vertices(self):
        return [v for v in self.vertices if not self.is_free_vertex(v)]

    def is_connected(self):
        if not self.vertices:
            return False
        seen = {next(iter(self.vertices))}
        frontier = list(seen)
        while frontier:
            v = frontier.pop()
            for e in self.germs_at(v):
                w = self.tv(e)
                if w not in seen:
                    seen.add(w)
                    frontier.append(w)
        return len(seen) == len(self.vertices)

    def topological_rank(self):
        """Rank of the fundamental group of the underlying graph."""
        return len(self.edges) - len(self.vertices) + 1

    def splitting_signature(self):
        """Sorted multiset of non-trivial vertex-group kinds, plus free rank."""
        kinds = []
        for v in sorted(self.vertices):
            g = self.group(v)
            if not g.is_trivial:
                kinds.append((g.kind, g.order() or g.rank))
        return (tuple(sorted(kinds)), self.topological_rank())

    def identity_elt(self, v):
        return self.group(v).identity()

    def __repr__(self):
        return f"MarkedGraph(V={list(self.vertices)}, E={list(self.edges)})"


def validate(graph):
    """Diagnostics list; the graph is acceptable iff the list is empty."""
    problems = []
    if not graph.is_connected():
        problems.append("graph is not connected")
    for v in graph.vertices:
        if graph.is_free_vertex(v) and graph.valence(v) <= 2:
            problems.append(
                f"vertex {v!r} has trivial group but valence {graph.valence(v)} <= 2")
    return problems


def check_metric(graph, metric, closure=False):
    """Check a length assignment; in closure mode zero lengths must form a forest."""
    problems = []
    for name in graph.edges:
        if name not in metric:
            problems.append(f"edge {name!r} has no length")
        elif metric[name] < 0 or (not closure and metric[name] == 0):
            problems.append(f"edge {name!r} has non-positive length {metric[name]}")
    for name in metric:
        if name not in graph.edges:
            problems.append(f"length given for unknown edge {name!r}")
    if closure and not problems:
        zero = {n for n in graph.edges if metric[n] == 0}
        if zero and not _is_forest(graph, zero):
            problems.append("zero-length edges do not form a forest")
    return problems


def _is_forest(graph, edge_names):
    parent = {v: v for v in graph.vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for name in edge_names:
        a, b = graph.edges[name]
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        parent[ra] = rb
    return True


def volume(graph, metric):
    return sum(metric[name] for name in graph.edges)


# ---------------------------------------------------------------------------
# Decorated paths and loops


@dataclass(frozen=True)
class Path:
    """Edge path g1 e1 g2 e2 ... gk ek g_{k+1}; may be empty (a vertex)."""

    graph: MarkedGraph
    start: str
    steps: tuple  # ((GroupElement, oriented edge), ...)
    tail: GroupElement

    def __post_init__(self):
        v = self.start
        for g, e in self.steps:
            if g.group is not self.graph.group(v):
                raise GraphError(f"decoration {g!r} is not in the group of vertex {v!r}")
            if self.graph.iv(e) != v:
                raise GraphError(f"edge {e!r} does not start at {v!r}")
            v = self.graph.tv(e)
        if self.tail.group is not self.graph.group(v):
            raise GraphError("trailing decoration sits at the wrong vertex")

    @property
    def end(self):
        v = self.start
        for _, e in self.steps:
            v = self.graph.tv(e)
        return v

    def __len__(self):
        return len(self.steps)

    @property
    def is_point(self):
        return not self.steps

    def reverse(self):
        v = self.start
        verts = [v]
        for _, e in self.steps:
            v = self.graph.tv(e)
            verts.append(v)
        steps = []
        g_next = self.tail
        for (g, e) in reversed(self.steps):
            steps.append((g_next.inverse(), rev(e)))
            g_next = g
        return Path(self.graph, verts[-1], tuple(steps), g_next.inverse())

    def concat(self, other):
        if other.graph is not self.graph or other.start != self.end:
            raise GraphError("paths do not concatenate")
        if not other.steps:
            return Path(self.graph, self.start, self.steps, self.tail * other.tail)
        (g0, e0), rest = other.steps[0], other.steps[1:]
        steps = self.steps + ((self.tail * g0, e0),) + rest
        return Path(self.graph, self.start, steps, other.tail)

    def __str__(self):
        if not self.steps:
            return f"({self.start}|{self.tail})"
        bits = []
        for g, e in self.steps:
            if not g.is_identity:
                bits.append("{%s}" % g)
            bits.append(e)
        if not self.tail.is_identity:
            bits.append("{%s}" % self.tail)
        return " ".join(bits)


def point_path(graph, v, g=None):
    g = g if g is not None else graph.identity_elt(v)
    return Path(graph, v, (), g)


def edge_path(graph, *items, tail=None):
    """Convenience builder: items are oriented edges or GroupElements."""
    steps = []
    pending = None
    start = None
    for it in items:
        if isinstance(it, GroupElement):
            pending = it if pending is None else pending * it
        else:
            v = graph.iv(it)
            if start is None:
                start = v
            g = pending if pending is not None else graph.identity_elt(v)
            steps.append((g, it))
            pending = None
    if start is None:
        raise GraphError("edge_path needs at least one edge; use point_path instead")
    endv = graph.tv(steps[-1][1])
    t = graph.identity_elt(endv)
    if pending is not None:
        t = t * pending
    if tail is not None:
        t = t * tail
    return Path(graph, start, tuple(steps), t)


def reduce_path(path):
    """The unique reduced representative with the same endpoints."""
    graph = path.graph
    stack = []  # of (g, e)
    pending = None  # decoration accumulated after the last surviving edge

    def absorb(g):
        nonlocal pending
        pending = g if pending is None else pending * g

    for (g, e) in path.steps:
        gg = g if pending is None else pending * g
        pending = None
        if stack and stack[-1][1] == rev(e) and gg.is_identity:
            prev_g, _ = stack.pop()
            absorb(prev_g)
        else:
            stack.append((gg, e))
    t = path.tail if pending is None else pending * path.tail
    return Path(graph, path.start, tuple(stack), t)


@dataclass(frozen=True)
class Loop:
    """Cyclic word g1 e1 ... gk ek, decorations preceding their edges."""

    graph: MarkedGraph
    steps: tuple

    def __post_init__(self):
        if not self.steps:
            raise GraphError("a loop needs at least one edge; use Elliptic for points")
        k = len(self.steps)
        for i, (g, e) in enumerate(self.steps):
            v = self.graph.iv(e)
            if g.group is not self.graph.group(v):
                raise GraphError("loop decoration in the wrong vertex group")
            nxt = self.steps[(i + 1) % k][1]
            if self.graph.tv(e) != self.graph.iv(nxt):
                raise GraphError("loop edges do not concatenate")

    def __len__(self):
        return len(self.steps)

    @property
    def basepoint(self):
        return self.graph.iv(self.steps[0][1])

    def rotate(self, i):
        return Loop(self.graph, self.steps[i:] + self.steps[:i])

    def reverse(self):
        k = len(self.steps)
        steps = []
        for i in range(k - 1, -1, -1):
            g_next = self.steps[(i + 1) % k][0]
            steps.append((g_next.inverse(), rev(self.steps[i][1])))
        # rotate so the decoration of the first edge is attached correctly
        return Loop(self.graph, tuple(steps))

    def to_path(self):
        """Cut at the basepoint: a path with identity tail."""
        v = self.basepoint
        return Path(self.graph, v, self.steps, self.graph.identity_elt(v))

    def edge_counts(self, oriented=False):
        counts = {}
        for _, e in self.steps:
            key = e if oriented else base(e)
            counts[key] = counts.get(key, 0) + 1
        return counts

    def serial(self):
        return tuple((_elt_key(g), e) for g, e in self.steps)

    def canonical(self, with_inversion=False):
        """Least cyclic rotation (optionally also over the reversed loop)."""
        candidates = [self.rotate(i) for i in range(len(self.steps))]
        if with_inversion:
            r = self.reverse()
            candidates += [r.rotate(i) for i in range(len(r.steps))]
        return min(candidates, key=lambda l: l.serial())

    def __str__(self):
        bits = []
        for g, e in self.steps:
            if not g.is_identity:
                bits.append("{%s}" % g)
            bits.append(e)
        return " ".join(bits)


@dataclass(frozen=True)
class Elliptic:
    """A conjugacy class fixing a vertex: the residue of a fully collapsed loop."""

    graph: MarkedGraph
    vertex: str
    elt: GroupElement

    @property
    def is_trivial(self):
        return self.elt.is_identity

    def __str__(self):
        return f"elliptic({self.elt} at {self.vertex})"


def _elt_key(g):
    return element_sort_key(g)


def cyclic_reduce(loop):
    """Cyclically reduced representative, or the Elliptic residue."""
    graph = loop.graph
    p = reduce_path(loop.to_path())
    steps = list(p.steps)
    carry = p.tail  # decoration at the seam, to fold into the first step
    carry_vertex = loop.basepoint
    while True:
        if not steps:
            return Elliptic(graph, carry_vertex, carry)
        if not carry.is_identity:
            g0, e0 = steps[0]
            steps[0] = (carry * g0, e0)
            carry = graph.identity_elt(graph.iv(e0))
        if len(steps) >= 2 and steps[0][1] == rev(steps[-1][1]) and steps[0][0].is_identity:
            glast, _ = steps.pop()
            _, e0 = steps.pop(0)
            carry = glast
            carry_vertex = graph.tv(e0)
            continue
        break
    return Loop(graph, tuple(steps))


def is_cyclically_reduced(loop):
    k = len(loop.steps)
    for i in range(k):
        g, e = loop.steps[i]
        prev = loop.steps[(i - 1) % k][1]
        if e == rev(prev) and g.is_identity:
            return False
    return True


# ---------------------------------------------------------------------------
# Turns


@dataclass(frozen=True)
class Turn:
    """Canonicalized unordered pair of decorated germs at a vertex.

    Use :func:`make_turn`; the constructor expects already-canonical data.
    """

    graph: MarkedGraph
    vertex: str
    germs: tuple  # ((GroupElement, edge), (GroupElement, edge)) canonical

    @property
    def is_trivial(self):
        (g1, e1), (g2, e2) = self.germs
        return e1 == e2 and g1.key == g2.key

    @property
    def is_degenerate(self):
        return self.germs[0][1] == self.germs[1][1]

    @property
    def group(self):
        return self.graph.group(self.vertex)

    @property
    def kind(self):
        g = self.group
        if g.is_trivial:
            return "free"
        if g.is_finite:
            return "finite"
        return "infinite"

    def key(self):
        (g1, e1), (g2, e2) = self.germs
        return (self.vertex, e1, _elt_key(g1), e2, _elt_key(g2))

    def __str__(self):
        (g1, e1), (g2, e2) = self.germs
        d1 = "" if g1.is_identity else "{%s}" % g1
        d2 = "" if g2.is_identity else "{%s}" % g2
        return f"[{d1}{e1}, {d2}{e2}]"


def _germ_key(germ):
    g, e = germ
    return (e, _elt_key(g))


def make_turn(graph, germ1, germ2):
    """Canonical turn for the pair {germ1, germ2}, modulo the diagonal action."""
    g1, e1 = germ1
    g2, e2 = germ2
    v = graph.iv(e1)
    if graph.iv(e2) != v:
        raise GraphError("turn germs must share their initial vertex")
    G = graph.group(v)
    if g1.group is not G or g2.group is not G:
        raise GraphError("turn decorations must lie in the vertex group")
    candidates = []
    if G.kind == "finite":
        translates = [G.element(i) for i in range(len(G.elements))]
    else:
        translates = None
    for a, b in ((germ1, germ2), (germ2, germ1)):
        if translates is None:
            h = a[0].inverse()
            cand = ((h * a[0], a[1]), (h * b[0], b[1]))
            candidates.append(cand)
        else:
            for h in translates:
                candidates.append(((h * a[0], a[1]), (h * b[0], b[1])))
    best = min(candidates, key=lambda pr: (_germ_key(pr[0]), _germ_key(pr[1])))
    return Turn(graph, v, best)


def loop_turns(loop):
    """The k turns cyclically crossed by a k-edge loop."""
    if not is_cyclically_reduced(loop):
        raise GraphError("loop_turns needs a cyclically reduced loop")
    graph = loop.graph
    k = len(loop.steps)
    out = []
    for i in range(k):
        _, e = loop.steps[i]
        g_next, e_next = loop.steps[(i + 1) % k]
        v = graph.tv(e)
        out.append(make_turn(graph, (graph.identity_elt(v), rev(e)), (g_next, e_next)))
    return out


def path_turns(path):
    graph = path.graph
    out = []
    for i in range(len(path.steps) - 1):
        _, e = path.steps[i]
        g_next, e_next = path.steps[i + 1]
        v = graph.tv(e)
        out.append(make_turn(graph, (graph.identity_elt(v), rev(e)), (g_next, e_next)))
    return out


def crossing_count(loop_or_elliptic, turn):
    """#(gamma, tau): crossings of the cyclically reduced representative."""
    if isinstance(loop_or_elliptic, Elliptic):
        return 0
    red = cyclic_reduce(loop_or_elliptic)
    if isinstance(red, Elliptic):
        return 0
    tk = turn.key()
    return sum(1 for t in loop_turns(red) if t.key() == tk)


def loop_length(loop_or_elliptic, metric):
    if isinstance(loop_or_elliptic, Elliptic):
        return Fraction(0)
    red = cyclic_reduce(loop_or_elliptic)
    if isinstance(red, Elliptic):
        return Fraction(0)
    return sum(Fraction(metric[base(e)]) for _, e in red.steps)


def all_turns(graph, decorations=None):
    """All turns with decorations drawn from a per-vertex element list.

    For finite vertex groups the full group is used; for infinite vertex
    groups the caller must supply decorations (default: identity only).
    """
    seen = {}
    for v in graph.vertices:
        G = graph.group(v)
        germs = graph.germs_at(v)
        if G.is_finite:
            elts = G.all_elements()
        else:
            elts = [G.identity()]
            if decorations:
                elts += [g for g in decorations.get(v, []) if g.group is G]
        for i, a in enumerate(germs):
            for b in germs[i:]:
                for g in elts:
                    t = make_turn(graph, (G.identity(), a), (g, b))
                    if not t.is_trivial:
                        seen.setdefault(t.key(), t)
    return [seen[k] for k in sorted(seen)]


def to_dot(graph, metric=None):
    """DOT rendering: vertex labels show group kinds, edges show lengths."""
    lines = ["graph {"]
    for v in graph.vertices:
        g = graph.group(v)
        label = v if g.is_trivial else f"{v} ({g.name})"
        lines.append(f'  "{v}" [label="{label}"];')
    for name, (a, b) in graph.edges.items():
        label = name if metric is None else f"{name}={metric[name]}"
        lines.append(f'  "{a}" -- "{b}" [label="{label}"];')
    lines.append("}")
    return "\n".join(lines)
