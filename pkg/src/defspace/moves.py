"""Elementary moves on marked metric graphs: folds, unfolds, collapses.

A fold of a turn identifies initial segments of its two germs; the inverse
move reads the new trivalent vertex and undoes the identification.  Forest
collapses quotient a subforest and come with a section map whose simplicial
volume controls the length of a directed folding path back to the original.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .groups import GroupHom, VertexGroup
from .graphs import (
    GraphError, Loop, MarkedGraph, Path, _is_forest, base, is_positive,
    make_turn, point_path, reduce_path, rev, validate,
)
from .maps import MapError, StraightMap, identity_map


class MoveError(ValueError):
    pass


@dataclass(frozen=True)
class MoveRecord:
    kind: str
    domain: MarkedGraph
    domain_metric: dict
    result: MarkedGraph
    result_metric: dict
    forward: StraightMap   # domain -> result
    backward: StraightMap  # result -> domain
    data: dict = field(default_factory=dict)


def _fresh(names, stem):
    i = 0
    while f"{stem}{i}" in names:
        i += 1
    return f"{stem}{i}"


def _single_edge_path(graph, e, head=None, tail=None):
    v = graph.iv(e)
    w = graph.tv(e)
    g = head if head is not None else graph.identity_elt(v)
    t = tail if tail is not None else graph.identity_elt(w)
    return Path(graph, v, ((g, e),), t)


def _identity_images(graph_from, graph_to):
    """Edge images for a map that keeps every edge (same names, new endpoints)."""
    imgs = {}
    for name in graph_from.edges:
        imgs[name] = _single_edge_path(graph_to, name)
    return imgs


def fold_turn(graph, metric, turn, t, rep=None, new_edge=None, new_vertex=None):
    """Fold a non-degenerate turn by an amount t.

    Identifies the initial segments of the two germs of the turn, creating a
    fresh free trivalent vertex and a fresh edge of length t.  Requires
    0 < t < min of the germ edge lengths (strictly below half the length for
    a loop edge folded onto its own reverse).  Returns a MoveRecord whose
    forward map is the fold and whose backward map collapses the new edge;
    if a self representative is supplied the record carries its transport.
    """
    t = Fraction(t)
    (g1, e1), (g2, e2) = turn.germs
    v = turn.vertex
    G = graph.group(v)
    # translate so the first germ carries the identity decoration
    g = g1.inverse() * g2
    if e1 == e2 and g.is_identity:
        raise MoveError("cannot fold a trivial turn")
    if e1 == e2:
        raise MoveError("cannot fold a turn on a single oriented germ")
    loop_case = base(e1) == base(e2)
    l1 = Fraction(metric[base(e1)])
    l2 = Fraction(metric[base(e2)])
    if loop_case:
        if not (0 < t < l1 / 2):
            raise MoveError(f"fold amount {t} not in (0, {l1}/2)")
    else:
        if not (0 < t < min(l1, l2)):
            raise MoveError(f"fold amount {t} not in (0, min({l1}, {l2}))")

    w = new_vertex if new_vertex is not None else _fresh(graph.vertices, "w")
    n = new_edge if new_edge is not None else _fresh(graph.edges, "n")
    if w in graph.vertices:
        raise MoveError(f"vertex name {w!r} already used")
    if n in graph.edges:
        raise MoveError(f"edge name {n!r} already used")

    vertices = dict(graph.vertices)
    vertices[w] = VertexGroup.trivial("1")
    edges = dict(graph.edges)
    new_metric = {k: Fraction(vv) for k, vv in metric.items()}

    def reattach(e_or):
        name = base(e_or)
        a, b = edges[name]
        if is_positive(e_or):
            edges[name] = (w, b)
        else:
            edges[name] = (a, w)

    if loop_case:
        reattach(e1)
        reattach(rev(e1))
        new_metric[base(e1)] = l1 - 2 * t
    else:
        reattach(e1)
        reattach(e2)
        new_metric[base(e1)] = l1 - t
        new_metric[base(e2)] = l2 - t
    edges[n] = (v, w)
    new_metric[n] = t
    result = MarkedGraph(vertices, edges)

    homs = {u: GroupHom.identity(graph.group(u)) for u in graph.vertices}
    q_imgs = _identity_images(graph, result)
    one_v = graph.identity_elt(v)
    if loop_case:
        # q(e1) = n . e1' . ~n . g
        p = Path(result, v, ((one_v, n), (result.identity_elt(result.iv(e1)), e1),
                             (result.identity_elt(w), rev(n))), g)
        q_imgs[base(e1)] = p if is_positive(e1) else p.reverse()
    else:
        p1 = Path(result, v, ((one_v, n),), result.identity_elt(w)).concat(
            _single_edge_path(result, e1))
        q_imgs[base(e1)] = p1 if is_positive(e1) else p1.reverse()
        p2 = Path(result, v, ((g.inverse(), n),), result.identity_elt(w)).concat(
            _single_edge_path(result, e2))
        q_imgs[base(e2)] = p2 if is_positive(e2) else p2.reverse()
    q = StraightMap(graph, result, {u: u for u in graph.vertices}, homs, q_imgs)

    # backward: collapse n, sending the shifted germs back across the turn
    b_homs = dict(homs)
    b_homs[w] = GroupHom(vertices[w], G)
    b_imgs = {name: _single_edge_path(graph, name)
              for name in result.edges if name != n}
    b_imgs[n] = point_path(graph, v)
    if loop_case:
        # p(e1') = e1 . g^{-1}
        pe = Path(graph, graph.iv(e1), ((graph.identity_elt(graph.iv(e1)), e1),),
                  g.inverse())
        b_imgs[base(e1)] = pe if is_positive(e1) else pe.reverse()
    else:
        pe1 = _single_edge_path(graph, e1)
        b_imgs[base(e1)] = pe1 if is_positive(e1) else pe1.reverse()
        pe2 = _single_edge_path(graph, e2, head=g)
        b_imgs[base(e2)] = pe2 if is_positive(e2) else pe2.reverse()
    b_vmap = {u: u for u in graph.vertices}
    b_vmap[w] = v
    back = StraightMap(result, graph, b_vmap, b_homs, b_imgs)

    data = {"turn": turn, "t": t, "new_edge": n, "new_vertex": w,
            "decoration": g, "loop_case": loop_case,
            "germ1": e1, "germ2": e2}
    if rep is not None:
        data["rep"] = q.compose(rep).compose(back)
    return MoveRecord("fold", graph, dict(metric), result, new_metric, q, back, data)


def unfold_turn(graph, metric, n, first_germ=None, decoration=None, rep=None):
    """Undo a fold along the edge n.

    The terminal vertex of n must be free and trivalent.  Reconstructs the
    unfolded graph, then replays the fold to recover the forward and
    backward maps; folding the result by the length of n gives back the
    input exactly.
    """
    if n not in graph.edges:
        raise MoveError(f"no edge named {n!r}")
    w = graph.tv(n)
    v = graph.iv(n)
    if v == w:
        raise MoveError(f"edge {n!r} is a loop; cannot unfold along it")
    if not graph.is_free_vertex(w) or graph.valence(w) != 3:
        raise MoveError(f"vertex {w!r} is not free trivalent")
    germs = [e for e in graph.germs_at(w) if e != rev(n)]
    if len(germs) != 2:
        raise MoveError(f"edge {n!r} does not end at an unfoldable vertex")
    d1, d2 = germs
    if first_germ is not None:
        if first_germ not in (d1, d2):
            raise MoveError(f"{first_germ!r} is not a germ at {w!r}")
        if first_germ == d2:
            d1, d2 = d2, d1
    tn = Fraction(metric[n])
    loop_case = base(d1) == base(d2)

    vertices = {u: g for u, g in graph.vertices.items() if u != w}
    edges = {}
    for name, (a, b) in graph.edges.items():
        if name == n:
            continue
        edges[name] = (v if a == w else a, v if b == w else b)
    new_metric = {}
    for name in edges:
        new_metric[name] = Fraction(metric[name])
    if loop_case:
        new_metric[base(d1)] += 2 * tn
    else:
        new_metric[base(d1)] += tn
        new_metric[base(d2)] += tn
    unfolded = MarkedGraph(vertices, edges)
    problems = validate(unfolded)
    if problems:
        raise MoveError("unfolding produces an invalid graph: " + "; ".join(problems))

    G = unfolded.group(v)
    g = decoration if decoration is not None else G.identity()
    if loop_case:
        turn = make_turn(unfolded, (G.identity(), d1), (g, rev(d1)))
    else:
        turn = make_turn(unfolded, (G.identity(), d1), (g, d2))
    # replay the fold; fold_turn canonicalizes the germ order through the turn
    rec = fold_turn(unfolded, new_metric, _raw_turn(unfolded, v, d1, g, rev(d1) if loop_case else d2),
                    tn, rep=None, new_edge=n, new_vertex=w)
    if rec.result.edges != graph.edges or rec.result_metric != {
            k: Fraction(vv) for k, vv in metric.items()}:
        raise MoveError("unfold/fold replay mismatch")
    data = {"turn": turn, "t": tn, "removed_edge": n, "removed_vertex": w,
            "decoration": g, "loop_case": loop_case}
    if rep is not None:
        data["rep"] = rec.forward.compose(rep).compose(rec.backward)
    return MoveRecord("unfold", graph, dict(metric), unfolded, new_metric,
                      rec.backward, rec.forward, data)


def _raw_turn(graph, v, e1, g, e2):
    """A turn with the germ order and decoration exactly as given."""
    from .graphs import Turn
    G = graph.group(v)
    return Turn(graph, v, ((G.identity(), e1), (g, e2)))


# ---------------------------------------------------------------------------
# Forest collapses and sections


def _forest_components(graph, forest):
    comp = {}
    for name in forest:
        a, b = graph.edges[name]
        comp.setdefault(a, a)
        comp.setdefault(b, b)

    def find(x):
        while comp[x] != x:
            comp[x] = comp[comp[x]]
            x = comp[x]
        return x

    for name in forest:
        a, b = graph.edges[name]
        ra, rb = find(a), find(b)
        if ra != rb:
            comp[ra] = rb
    groups = {}
    for vtx in comp:
        groups.setdefault(find(vtx), set()).add(vtx)
    return list(groups.values())


def collapse_forest(graph, metric, forest, rep=None):
    """Collapse a sub-forest; each component may hold at most one non-free
    vertex, which becomes the root of the collapsed component.

    The record's forward map is the collapse; the backward map is the
    section sending each surviving edge e to gamma_a . e . gamma_b, the
    connectors running through the collapsed trees.
    """
    forest = sorted(set(forest))
    for name in forest:
        if name not in graph.edges:
            raise MoveError(f"no edge named {name!r}")
    if not _is_forest(graph, forest):
        raise MoveError("edge set contains a cycle")
    components = _forest_components(graph, forest)
    root_of = {}
    for comp in components:
        nonfree = sorted(u for u in comp if not graph.is_free_vertex(u))
        if len(nonfree) > 1:
            raise MoveError(
                "a collapsed component holds several non-free vertices: "
                + ", ".join(nonfree))
        root = nonfree[0] if nonfree else min(comp)
        for u in comp:
            root_of[u] = root
    proj = {u: root_of.get(u, u) for u in graph.vertices}

    vertices = {u: g for u, g in graph.vertices.items() if proj[u] == u}
    edges = {}
    for name, (a, b) in graph.edges.items():
        if name in forest:
            continue
        edges[name] = (proj[a], proj[b])
    collapsed = MarkedGraph(vertices, edges)
    problems = validate(collapsed)
    if problems:
        raise MoveError("collapse produces an invalid graph: " + "; ".join(problems))
    new_metric = {name: Fraction(metric[name]) for name in edges}

    homs = {}
    for u in graph.vertices:
        r = proj[u]
        if u == r:
            homs[u] = GroupHom.identity(graph.group(u))
        else:
            homs[u] = GroupHom(graph.group(u), graph.group(r))
    q_imgs = {}
    for name in graph.edges:
        if name in forest:
            a, _ = graph.edges[name]
            q_imgs[name] = point_path(collapsed, proj[a])
        else:
            q_imgs[name] = _single_edge_path(collapsed, name)
    q = StraightMap(graph, collapsed, proj, homs, q_imgs)

    # section: connectors through the collapsed trees, identity decorations
    tree_adj = {}
    for name in forest:
        a, b = graph.edges[name]
        tree_adj.setdefault(a, []).append((name, b))
        tree_adj.setdefault(b, []).append(("~" + name, a))

    def connector(src, dst):
        """Edge path in the forest from src to dst, as oriented edge names."""
        if src == dst:
            return []
        prev = {src: None}
        queue = [src]
        while queue:
            x = queue.pop(0)
            for e_or, y in sorted(tree_adj.get(x, [])):
                if y not in prev:
                    prev[y] = (x, e_or)
                    queue.append(y)
        if dst not in prev:
            raise MoveError("collapsed component is not connected in the forest")
        out = []
        x = dst
        while prev[x] is not None:
            px, e_or = prev[x]
            out.append(e_or)
            x = px
        return list(reversed(out))

    s_homs = {u: GroupHom.identity(collapsed.group(u)) for u in collapsed.vertices}
    s_vmap = {u: u for u in collapsed.vertices}
    s_imgs = {}
    for name in collapsed.edges:
        a_x, b_x = graph.edges[name]
        pre = connector(proj[a_x], a_x)
        post = connector(b_x, proj[b_x])
        p = point_path(graph, proj[a_x])
        for e_or in pre:
            p = p.concat(_single_edge_path(graph, e_or))
        p = p.concat(_single_edge_path(graph, name))
        for e_or in post:
            p = p.concat(_single_edge_path(graph, e_or))
        s_imgs[name] = p
    s = StraightMap(collapsed, graph, s_vmap, s_homs, s_imgs)

    data = {"forest": tuple(forest), "roots": {frozenset(c): root_of[next(iter(c))]
                                               for c in components},
            "svol": s.combinatorial_volume()}
    if rep is not None:
        data["rep"] = q.compose(rep).compose(s)
    return MoveRecord("collapse", graph, dict(metric), collapsed, new_metric,
                      q, s, data)


def unfold_forest(graph, metric, forest_rec=None, *, big_graph=None,
                  big_metric_forest=None, collapse_edges=None, rep=None):
    """Blow a graph up along a forest: the inverse of collapse_forest.

    Given the bigger graph (same edge names plus the forest edges) and
    lengths for the forest edges, produces the collapse record of the big
    graph and returns it reversed, so the forward map is the section
    p with p(e) = gamma_a . e . gamma_b and svol(p) recorded.
    """
    if big_graph is None or collapse_edges is None:
        raise MoveError("unfold_forest needs the blown-up graph and its forest")
    big_metric = {}
    for name in big_graph.edges:
        if name in collapse_edges:
            big_metric[name] = Fraction(big_metric_forest[name])
        else:
            big_metric[name] = Fraction(metric[name])
    rec = collapse_forest(big_graph, big_metric, collapse_edges, rep=None)
    if rec.result.edges != graph.edges:
        raise MoveError("blown-up graph does not collapse back onto the input")
    data = {"forest": tuple(sorted(collapse_edges)), "svol": rec.data["svol"]}
    if rep is not None:
        data["rep"] = rec.forward.compose(rep).compose(rec.backward)
    return MoveRecord("unfold-forest", graph, dict(metric), big_graph,
                      big_metric, rec.backward, rec.forward, data)


# ---------------------------------------------------------------------------
# Directed folding paths


@dataclass
class FoldingStep:
    vertex: str
    germ1: str
    germ2: str
    decoration: object
    result_map: StraightMap


def subdivide_to_simplicial(p):
    """Subdivide domain edges so every edge maps onto at most one edge.

    Returns an equivalent map whose edge images are single edges or points.
    Subdivision vertices are fresh free vertices; lengths are not tracked
    (directed folding paths are combinatorial).
    """
    X, Y = p.domain, p.codomain
    vertices = dict(X.vertices)
    edges = {}
    imgs = {}
    vmap = dict(p.vmap)
    homs = dict(p.vgroup_maps)
    for name in X.edges:
        img = p.edge_images[name]
        k = len(img)
        if k <= 1:
            edges[name] = X.edges[name]
            imgs[name] = img
            continue
        a, b = X.edges[name]
        chain = [a]
        for i in range(k - 1):
            u = _fresh(vertices, f"{name}_s")
            vertices[u] = VertexGroup.trivial("1")
            chain.append(u)
        chain.append(b)
        verts_on_img = [img.start]
        vtx = img.start
        for _, e in img.steps:
            vtx = Y.tv(e)
            verts_on_img.append(vtx)
        for i in range(k):
            seg = _fresh_edge_name(edges, X.edges, f"{name}_p")
            edges[seg] = (chain[i], chain[i + 1])
            g, e = img.steps[i]
            tail = img.tail if i == k - 1 else Y.identity_elt(verts_on_img[i + 1])
            imgs[seg] = Path(Y, verts_on_img[i], ((g, e),), tail)
            if i < k - 1:
                vmap[chain[i + 1]] = verts_on_img[i + 1]
                homs[chain[i + 1]] = GroupHom(vertices[chain[i + 1]],
                                              Y.group(verts_on_img[i + 1]))
    dom = MarkedGraph(vertices, edges)
    fixed_imgs = {}
    for name in edges:
        q = imgs[name]
        fixed_imgs[name] = Path(Y, q.start, q.steps, q.tail)
    return StraightMap(dom, Y, vmap, homs, fixed_imgs)


def _fresh_edge_name(edges, more, stem):
    i = 0
    while f"{stem}{i}" in edges or f"{stem}{i}" in more:
        i += 1
    return f"{stem}{i}"


def _is_undecorated(p):
    for img in p.edge_images.values():
        if not img.tail.is_identity:
            return False
        for g, _ in img.steps:
            if not g.is_identity:
                return False
    return True


def _foldable_pair(p):
    """A vertex and undecorated germ pair with the same image edge, if any.

    Directed folding paths here handle undecorated simplicial maps only,
    which covers every section of a forest collapse; decorated maps raise
    before reaching this point.
    """
    X = p.domain
    for v in sorted(X.vertices):
        G = X.group(v)
        germs = X.germs_at(v)
        firsts = {}
        for e in germs:
            img = p.image_germ((G.identity(), e))
            if img is not None:
                firsts[e] = img[1]
        for i, a in enumerate(germs):
            if a not in firsts:
                continue
            for b in germs[i + 1:]:
                if b not in firsts or base(a) == base(b):
                    continue
                if firsts[a] == firsts[b]:
                    return (v, a, b)
    return None


def fold_step(p, v, a, b):
    """Identify edges a and b fully; the image map factors through.

    The far endpoints merge; at most one of them may carry a non-trivial
    group (both non-trivial would change the fundamental group).
    """
    X, Y = p.domain, p.codomain
    ua, ub = X.tv(a), X.tv(b)
    keep, drop = ua, ub
    if keep != drop:
        if not X.group(drop).is_trivial:
            if not X.group(keep).is_trivial:
                raise MoveError(
                    f"fold would merge two non-free vertices {ua!r}, {ub!r}")
            keep, drop = drop, keep
    name_b = base(b)
    vertices = {u: gg for u, gg in X.vertices.items()
                if u != drop or drop == keep}
    edges = {}
    for name, (x, y) in X.edges.items():
        if name == name_b:
            continue
        nx = keep if x == drop else x
        ny = keep if y == drop else y
        edges[name] = (nx, ny)
    dom = MarkedGraph(vertices, edges)
    vmap = {u: p.vmap[u] for u in vertices}
    homs = {u: p.vgroup_maps[u] for u in vertices}
    imgs = {}
    for name in edges:
        img = p.edge_images[name]
        imgs[name] = Path(Y, img.start, img.steps, img.tail)
    return StraightMap(dom, Y, vmap, homs, imgs)


def directed_folding_path(p, max_steps=None):
    """Fold a map to an immersion, one full simplicial fold at a time.

    Subdivides first so every edge maps over at most one edge; each step
    removes one edge, so the path length never exceeds svol(p).
    """
    if not _is_undecorated(p):
        raise MoveError("directed folding supports undecorated maps only")
    q = subdivide_to_simplicial(p)
    steps = []
    limit = max_steps if max_steps is not None else q.combinatorial_volume() + 1
    while len(steps) < limit:
        pair = _foldable_pair(q)
        if pair is None:
            break
        v, a, b = pair
        q = fold_step(q, v, a, b)
        steps.append(FoldingStep(v, a, b, None, q))
    return q, steps


def is_immersion(p):
    return _foldable_pair(p) is None
