"""Vertex groups and their elements.

Three kinds of vertex group are supported: the trivial group, finite groups
given by an explicit multiplication table, and finitely generated free groups
whose elements are freely reduced words.  This is enough to decorate every
graph of groups the toolkit works with: finite groups can be enumerated, and
free groups supply infinitely many distinct elements with decidable equality.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional


class GroupError(ValueError):
    """Structural problem with a group, an element, or a homomorphism."""


class VertexGroup:
    """A vertex group: ``trivial``, ``finite`` (by table) or ``free``.

    Instances are immutable and compared *by identity*: two structurally equal
    tables still describe different vertex groups of a splitting.
    """

    __slots__ = ("kind", "name", "elements", "table", "identity_id",
                 "inverse_ids", "rank", "gens")

    def __init__(self, kind, name, elements=None, table=None, rank=None, gens=None):
        self.kind = kind
        self.name = name
        self.elements = tuple(elements) if elements is not None else None
        self.table = tuple(tuple(r) for r in table) if table is not None else None
        self.rank = rank
        self.gens = tuple(gens) if gens is not None else None
        self.identity_id = None
        self.inverse_ids = None
        if kind == "finite":
            self._check_table()
        elif kind == "free":
            if rank is None or rank < 1:
                raise GroupError(f"free group {name!r} needs rank >= 1")
            if gens is None or len(self.gens) != rank:
                raise GroupError(f"free group {name!r} needs {rank} generator names")
        elif kind == "trivial":
            pass
        else:
            raise GroupError(f"unknown group kind {kind!r}")

    # -- construction helpers ------------------------------------------------

    @staticmethod
    def trivial(name="1"):
        return VertexGroup("trivial", name)

    @staticmethod
    def free(name, rank, gens=None):
        if gens is None:
            gens = tuple(f"x{i}" for i in range(rank)) if rank > 1 else ("x",)
        return VertexGroup("free", name, rank=rank, gens=gens)

    @staticmethod
    def cyclic(name, order, letter="s"):
        """Finite cyclic group of the given order, elements 1, s, s^2, ..."""
        if order < 1:
            raise GroupError("cyclic order must be >= 1")
        names = ["1"] + [letter if k == 1 else f"{letter}{k}" for k in range(1, order)]
        table = [[(i + j) % order for j in range(order)] for i in range(order)]
        return VertexGroup("finite", name, elements=names, table=table)

    @staticmethod
    def finite_from_table(name, element_names, table):
        return VertexGroup("finite", name, elements=element_names, table=table)

    def _check_table(self):
        if not self.elements or self.table is None:
            raise GroupError(f"finite group {self.name!r} needs elements and table")
        n = len(self.elements)
        if len(set(self.elements)) != n:
            raise GroupError(f"duplicate element names in {self.name!r}")
        if len(self.table) != n or any(len(r) != n for r in self.table):
            raise GroupError(f"table of {self.name!r} is not {n}x{n}")
        for r in self.table:
            if any(not (0 <= x < n) for x in r):
                raise GroupError(f"table of {self.name!r} has out-of-range entries")
        ident = None
        for i in range(n):
            if all(self.table[i][j] == j and self.table[j][i] == j for j in range(n)):
                ident = i
                break
        if ident is None:
            raise GroupError(f"group {self.name!r} has no identity")
        self.identity_id = ident
        inv = [None] * n
        for i in range(n):
            for j in range(n):
                if self.table[i][j] == ident and self.table[j][i] == ident:
                    inv[i] = j
                    break
            if inv[i] is None:
                raise GroupError(f"element {self.elements[i]!r} of {self.name!r} has no inverse")
        self.inverse_ids = tuple(inv)
        if n <= 64:
            for a, b, c in itertools.product(range(n), repeat=3):
                if self.table[self.table[a][b]][c] != self.table[a][self.table[b][c]]:
                    raise GroupError(f"table of {self.name!r} is not associative")

    # -- basic queries -------------------------------------------------------

    @property
    def is_trivial(self):
        return self.kind == "trivial"

    @property
    def is_finite(self):
        return self.kind in ("trivial", "finite")

    @property
    def is_infinite(self):
        return self.kind == "free"

    def order(self):
        if self.kind == "trivial":
            return 1
        if self.kind == "finite":
            return len(self.elements)
        return None

    def identity(self):
        if self.kind == "free":
            return GroupElement(self, ())
        return GroupElement(self, self.identity_id if self.kind == "finite" else 0)

    def element(self, key):
        """Build an element from a table id (finite) or a (gen, exp) word (free)."""
        if self.kind == "free":
            return GroupElement(self, _normalize_word(self, key))
        if self.kind == "trivial":
            if key not in (0, None, ()):
                raise GroupError("the trivial group has only the identity")
            return GroupElement(self, 0)
        if not (0 <= key < len(self.elements)):
            raise GroupError(f"bad element id {key} for {self.name!r}")
        return GroupElement(self, key)

    def element_by_name(self, name):
        if self.kind != "finite":
            raise GroupError("element_by_name only applies to finite groups")
        try:
            return GroupElement(self, self.elements.index(name))
        except ValueError:
            raise GroupError(f"no element {name!r} in {self.name!r}") from None

    def all_elements(self):
        if self.kind == "trivial":
            return [self.identity()]
        if self.kind == "finite":
            return [GroupElement(self, i) for i in range(len(self.elements))]
        raise GroupError(f"cannot enumerate the infinite group {self.name!r}")

    def free_gen(self, name, exp=1):
        if self.kind != "free":
            raise GroupError("free_gen only applies to free groups")
        if name not in self.gens:
            raise GroupError(f"no generator {name!r} in {self.name!r}")
        return GroupElement(self, _normalize_word(self, ((name, exp),)))

    def __repr__(self):
        return f"VertexGroup({self.kind}:{self.name})"


def _normalize_word(group, word):
    """Freely reduce a (gen, exp) sequence: merge runs, drop zero exponents."""
    out = []
    for gen, exp in word:
        if gen not in group.gens:
            raise GroupError(f"unknown generator {gen!r} in {group.name!r}")
        if exp == 0:
            continue
        if out and out[-1][0] == gen:
            merged = out[-1][1] + exp
            out.pop()
            if merged:
                out.append((gen, merged))
        else:
            out.append((gen, exp))
    return tuple(out)


@dataclass(frozen=True)
class GroupElement:
    """An element of a vertex group.

    ``key`` is a table id for finite groups (int) and a freely reduced
    ``((gen, exp), ...)`` tuple for free groups.  Equality is syntactic on
    this canonical form.
    """

    group: VertexGroup
    key: object

    def __post_init__(self):
        # dataclass hash would call VertexGroup.__eq__/__hash__: identity, fine
        pass

    @property
    def is_identity(self):
        if self.group.kind == "free":
            return self.key == ()
        if self.group.kind == "trivial":
            return True
        return self.key == self.group.identity_id

    def __mul__(self, other):
        if other.group is not self.group:
            raise GroupError("cannot multiply elements of different vertex groups")
        g = self.group
        if g.kind == "free":
            return GroupElement(g, _normalize_word(g, self.key + other.key))
        if g.kind == "trivial":
            return self
        return GroupElement(g, g.table[self.key][other.key])

    def inverse(self):
        g = self.group
        if g.kind == "free":
            return GroupElement(g, tuple((gen, -e) for gen, e in reversed(self.key)))
        if g.kind == "trivial":
            return self
        return GroupElement(g, g.inverse_ids[self.key])

    def word_length(self):
        if self.group.kind != "free":
            return 0 if self.is_identity else 1
        return sum(abs(e) for _, e in self.key)

    def __str__(self):
        g = self.group
        if g.kind == "trivial":
            return "1"
        if g.kind == "finite":
            return g.elements[self.key]
        if not self.key:
            return "1"
        parts = []
        for gen, exp in self.key:
            parts.append(gen if exp == 1 else f"{gen}^{exp}")
        return "*".join(parts)

    def __repr__(self):
        return f"<{self} in {self.group.name}>"


class GroupHom:
    """A homomorphism between vertex groups, given on generators.

    For finite groups the data is a full id-to-id mapping; for free groups a
    mapping of generators to elements of the codomain.  Isomorphism inversion
    is supported for finite bijective maps and for free groups whose
    generators map to signed generators (which covers every fixture; other
    free-group automorphisms raise).
    """

    __slots__ = ("src", "dst", "finite_map", "gen_images")

    def __init__(self, src, dst, finite_map=None, gen_images=None):
        self.src = src
        self.dst = dst
        self.finite_map = tuple(finite_map) if finite_map is not None else None
        self.gen_images = dict(gen_images) if gen_images is not None else None
        self._check()

    @staticmethod
    def identity(group):
        if group.kind == "free":
            return GroupHom(group, group,
                            gen_images={g: group.free_gen(g) for g in group.gens})
        if group.kind == "finite":
            return GroupHom(group, group, finite_map=range(len(group.elements)))
        return GroupHom(group, group)

    def _check(self):
        if self.src.kind == "trivial":
            return
        if self.src.kind == "finite":
            if self.dst.kind != "finite" or self.finite_map is None:
                raise GroupError("finite groups must map to finite groups by a table")
            n = len(self.src.elements)
            if len(self.finite_map) != n:
                raise GroupError("finite map has wrong size")
            for i, j in itertools.product(range(n), repeat=2):
                lhs = self.finite_map[self.src.table[i][j]]
                rhs = self.dst.table[self.finite_map[i]][self.finite_map[j]]
                if lhs != rhs:
                    raise GroupError("finite map is not a homomorphism")
            return
        if self.dst.kind != "free" or self.gen_images is None:
            raise GroupError("free groups must map to free groups on generators")
        for g in self.src.gens:
            if g not in self.gen_images:
                raise GroupError(f"missing image of generator {g!r}")
            if self.gen_images[g].group is not self.dst:
                raise GroupError(f"image of {g!r} lies in the wrong group")

    def apply(self, elt):
        if elt.group is not self.src:
            raise GroupError("element does not belong to the domain group")
        if self.src.kind == "trivial":
            return self.dst.identity()
        if self.src.kind == "finite":
            return GroupElement(self.dst, self.finite_map[elt.key])
        out = self.dst.identity()
        for gen, exp in elt.key:
            img = self.gen_images[gen]
            if exp < 0:
                img, exp = img.inverse(), -exp
            for _ in range(exp):
                out = out * img
        return out

    def compose(self, inner):
        """self o inner."""
        if inner.dst is not self.src:
            raise GroupError("homomorphisms do not compose")
        if inner.src.kind == "trivial":
            return GroupHom(inner.src, self.dst)
        if inner.src.kind == "finite":
            return GroupHom(inner.src, self.dst,
                            finite_map=[self.finite_map[j] for j in inner.finite_map])
        return GroupHom(inner.src, self.dst,
                        gen_images={g: self.apply(img)
                                    for g, img in inner.gen_images.items()})

    def is_bijective(self):
        if self.src.kind == "trivial":
            return self.dst.kind == "trivial" or self.dst.order() == 1
        if self.src.kind == "finite":
            return (len(set(self.finite_map)) == len(self.finite_map)
                    and self.dst.order() == self.src.order())
        return self._signed_permutation() is not None

    def _signed_permutation(self):
        """If every generator maps to a signed generator, return that data."""
        if self.src.rank != self.dst.rank:
            return None
        seen = {}
        for g in self.src.gens:
            img = self.gen_images[g]
            if len(img.key) != 1 or abs(img.key[0][1]) != 1:
                return None
            tgt, sign = img.key[0]
            if tgt in seen:
                return None
            seen[tgt] = (g, sign)
        return seen

    def inverse(self):
        if self.src.kind == "trivial":
            if self.dst.kind == "trivial":
                return GroupHom(self.dst, self.src)
            raise GroupError("not invertible")
        if self.src.kind == "finite":
            if not self.is_bijective():
                raise GroupError(f"finite map {self.src.name}->{self.dst.name} is not bijective")
            inv = [None] * len(self.finite_map)
            for i, j in enumerate(self.finite_map):
                inv[j] = i
            return GroupHom(self.dst, self.src, finite_map=inv)
        perm = self._signed_permutation()
        if perm is None:
            raise GroupError(
                "can only invert free-group maps sending generators to signed generators")
        return GroupHom(self.dst, self.src,
                        gen_images={tgt: self.src.free_gen(g, sign)
                                    for tgt, (g, sign) in perm.items()})


@dataclass(frozen=True)
class ChosenElements:
    """The chosen non-trivial element h_v for each non-trivial vertex group."""

    choices: tuple  # ((VertexGroup, GroupElement), ...)

    @staticmethod
    def make(pairs):
        items = []
        for group, elt in pairs:
            if elt.group is not group:
                raise GroupError("chosen element lies in the wrong group")
            if elt.is_identity:
                raise GroupError(f"chosen element for {group.name!r} must be non-trivial")
            items.append((group, elt))
        return ChosenElements(tuple(items))

    def get(self, group):
        for g, e in self.choices:
            if g is group:
                return e
        raise GroupError(f"no chosen element for group {group.name!r}")

    def has(self, group):
        return any(g is group for g, _ in self.choices)


def element_sort_key(elt):
    """A total order on elements of one group, for canonical forms."""
    if elt.group.kind == "free":
        return (1, elt.word_length(), elt.key)
    return (0, 0, elt.key if elt.key is not None else 0)
