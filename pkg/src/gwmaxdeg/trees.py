"""Finite ordered rooted trees, truncated partial trees, and graft events.

A finite tree is stored as its preorder out-degree sequence (the root's
degree, then the first child's whole subtree, and so on).  That sequence
determines the tree: position i starts a subtree that ends at the first
index where the running count 1 + sum(deg - 1) returns to zero.  Ulam-Harris
labels (tuples of positive integers, root = ()) are materialized only at the
API boundary; preorder coincides with the lexicographic order of labels.

Partial trees are the truncated views produced by the limit-tree samplers
and by ``truncate``: each node is MATERIALIZED (degree known), INFINITE
(infinite out-degree, finite prefix of children present) or FRONTIER
(subtree not expanded, degree unknown).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, NamedTuple, Sequence, Union

from .errors import GWError, LawError, UndecidableError

__all__ = [
    "FiniteTree",
    "Label",
    "Mark",
    "PartialNode",
    "PartialTree",
    "GraftKind",
    "GraftEvent",
    "MaxDegreeInfo",
    "subtree_span",
    "truncate",
    "graft_right_partial",
]

Label = tuple  # tuple of positive ints; () is the root


def subtree_span(degrees: Sequence[int], start: int) -> int:
    """End index (exclusive) of the subtree rooted at preorder position start."""
    pending = 1
    i = start
    n = len(degrees)
    while pending:
        if i >= n:
            raise LawError("degree sequence ends inside a subtree")
        pending += degrees[i] - 1
        i += 1
    return i


class FiniteTree:
    """Immutable finite ordered rooted tree."""

    __slots__ = ("_deg",)

    def __init__(self, degrees: Iterable[int]):
        deg = tuple(int(d) for d in degrees)
        if not deg:
            raise LawError("a tree has at least its root")
        pending = 1
        for i, d in enumerate(deg):
            if d < 0:
                raise LawError(f"negative out-degree at preorder position {i}")
            pending += d - 1
            if pending == 0 and i != len(deg) - 1:
                raise LawError("degree sequence continues past the end of the tree")
        if pending != 0:
            raise LawError("degree sequence ends inside the tree")
        self._deg = deg

    # -- constructors ---------------------------------------------------

    @classmethod
    def leaf(cls) -> "FiniteTree":
        return cls((0,))

    @classmethod
    def from_children(cls, children: Sequence["FiniteTree"]) -> "FiniteTree":
        deg = [len(children)]
        for c in children:
            deg.extend(c._deg)
        return cls(deg)

    @classmethod
    def from_json(cls, obj) -> "FiniteTree":
        """Nested-list form: [] is a leaf, [[], []] a root with two leaf children."""
        if not isinstance(obj, list):
            raise LawError("finite-tree JSON must be a (possibly nested) list")
        deg: list[int] = []

        def walk(node):
            deg.append(len(node))
            for child in node:
                if not isinstance(child, list):
                    raise LawError("finite-tree JSON must contain only lists")
                walk(child)

        walk(obj)
        return cls(deg)

    # -- basic queries ----------------------------------------------------

    @property
    def degrees(self) -> tuple:
        return self._deg

    @property
    def size(self) -> int:
        return len(self._deg)

    @property
    def max_out_degree(self) -> int:
        return max(self._deg)

    @property
    def root_degree(self) -> int:
        return self._deg[0]

    def __len__(self) -> int:
        return len(self._deg)

    def __eq__(self, other) -> bool:
        return isinstance(other, FiniteTree) and self._deg == other._deg

    def __hash__(self) -> int:
        return hash(self._deg)

    def __repr__(self) -> str:
        return f"FiniteTree{self._deg!r}"

    def to_json(self) -> list:
        def build(i: int) -> tuple[list, int]:
            k = self._deg[i]
            out = []
            j = i + 1
            for _ in range(k):
                child, j = build(j)
                out.append(child)
            return out, j

        obj, _ = build(0)
        return obj

    # -- labels -----------------------------------------------------------

    def vertices(self) -> tuple:
        """All Ulam-Harris labels in preorder (= lexicographic) order."""
        out = []
        path: list[int] = []
        # walk the degree sequence keeping the current label
        remaining: list[int] = []
        for d in self._deg:
            out.append(tuple(path))
            if d > 0:
                remaining.append(d)
                path.append(1)
            else:
                while remaining and path:
                    if remaining[-1] == 1:
                        remaining.pop()
                        path.pop()
                    else:
                        remaining[-1] -= 1
                        path[-1] += 1
                        break
        return tuple(out)

    def leaves(self) -> tuple:
        verts = self.vertices()
        return tuple(v for v, d in zip(verts, self._deg) if d == 0)

    def position(self, label: Label) -> int:
        """Preorder index of the vertex with this label; KeyError if absent."""
        pos = 0
        for coord in label:
            k = self._deg[pos]
            if not (1 <= coord <= k):
                raise KeyError(f"label {label!r} not in tree")
            pos += 1
            for _ in range(coord - 1):
                pos = subtree_span(self._deg, pos)
        return pos

    def __contains__(self, label) -> bool:
        try:
            self.position(tuple(label))
        except KeyError:
            return False
        return True

    def out_degree(self, label: Label) -> int:
        return self._deg[self.position(label)]

    def depth(self) -> int:
        d = 0
        cur = 0
        best = 0
        pending: list[int] = []
        for deg in self._deg:
            best = max(best, cur)
            if deg > 0:
                pending.append(deg)
                cur += 1
            else:
                while pending:
                    if pending[-1] == 1:
                        pending.pop()
                        cur -= 1
                    else:
                        pending[-1] -= 1
                        break
        return best

    # -- decomposition ------------------------------------------------------

    def subtree_at(self, label: Label) -> "FiniteTree":
        i = self.position(label)
        j = subtree_span(self._deg, i)
        return FiniteTree(self._deg[i:j])

    def child_forest(self, label: Label) -> tuple:
        """The out_degree(label) child subtrees, in order (empty for leaves)."""
        i = self.position(label)
        k = self._deg[i]
        out = []
        j = i + 1
        for _ in range(k):
            e = subtree_span(self._deg, j)
            out.append(FiniteTree(self._deg[j:e]))
            j = e
        return tuple(out)

    def complement_at(self, label: Label) -> "FiniteTree":
        """The tree with the strict descendants of label removed (label kept as leaf)."""
        i = self.position(label)
        j = subtree_span(self._deg, i)
        return FiniteTree(self._deg[:i] + (0,) + self._deg[j:])

    def decompose(self, label: Label):
        """(subtree above, child forest, tree below) at the given vertex."""
        return self.subtree_at(label), self.child_forest(label), self.complement_at(label)

    # -- grafting -----------------------------------------------------------

    def graft_leaf(self, label: Label, scion: "FiniteTree") -> "FiniteTree":
        """Replace the leaf at label by the tree scion."""
        i = self.position(label)
        if self._deg[i] != 0:
            raise LawError(f"graft site {label!r} is not a leaf")
        return FiniteTree(self._deg[:i] + scion._deg + self._deg[i + 1 :])

    def graft_right(self, label: Label, scion: "FiniteTree") -> "FiniteTree":
        """Append scion's child subtrees after the existing children of label.

        The scion's root is discarded (its children become new children of
        the site, shifted right); grafting the single-vertex tree is the
        identity.
        """
        i = self.position(label)
        ell = self._deg[i]
        j = i + 1
        for _ in range(ell):
            j = subtree_span(self._deg, j)
        return FiniteTree(
            self._deg[:i]
            + (ell + scion._deg[0],)
            + self._deg[i + 1 : j]
            + scion._deg[1:]
            + self._deg[j:]
        )

    # -- weights ------------------------------------------------------------

    def log_weight(self, law) -> float:
        """log of the product of per-vertex offspring probabilities (-inf on a zero factor)."""
        total = 0.0
        for d in self._deg:
            p = law.pmf(d)
            if p == 0.0:
                return -math.inf
            total += math.log(p)
        return total

    def weight(self, law) -> float:
        return math.exp(self.log_weight(law))


# ----------------------------------------------------------------------
# partial trees
# ----------------------------------------------------------------------


class Mark(Enum):
    MATERIALIZED = "materialized"
    INFINITE = "infinite"
    FRONTIER = "frontier"


@dataclass(frozen=True)
class PartialNode:
    """Node of a truncated tree.

    MATERIALIZED: out_degree is the true degree; children holds the
    materialized prefix (shorter than out_degree only after a width cut).
    INFINITE: out_degree is conceptually infinite; children is a finite
    prefix.  FRONTIER: nothing below (or at) this vertex was expanded.
    """

    mark: Mark
    out_degree: int | None
    children: tuple = ()
    special: bool = False

    def __post_init__(self):
        if self.mark is Mark.FRONTIER and (self.out_degree is not None or self.children):
            raise LawError("frontier nodes carry no degree and no children")
        if self.mark is Mark.MATERIALIZED:
            if self.out_degree is None or self.out_degree < len(self.children):
                raise LawError("materialized node needs out_degree >= len(children)")
        if self.mark is Mark.INFINITE and self.out_degree is not None:
            raise LawError("infinite nodes carry no finite degree")

    @property
    def width_cut(self) -> bool:
        return self.mark is Mark.MATERIALIZED and len(self.children) < self.out_degree


class MaxDegreeInfo(NamedTuple):
    value: float  # int-valued float, or math.inf
    lower_bound_only: bool


class PartialTree:
    """A truncated realization of a (possibly infinite) tree."""

    __slots__ = ("root", "depth_limit", "width_limit", "special_path", "infinite_vertex")

    def __init__(
        self,
        root: PartialNode,
        *,
        depth_limit: int | None = None,
        width_limit: int | None = None,
        special_path: tuple = (),
        infinite_vertex: Label | None = None,
    ):
        self.root = root
        self.depth_limit = depth_limit
        self.width_limit = width_limit
        self.special_path = special_path
        self.infinite_vertex = infinite_vertex
        count = sum(1 for n, _ in self.walk() if n.mark is Mark.INFINITE)
        if count > 1:
            raise LawError("a partial tree has at most one infinite vertex")

    def walk(self) -> Iterator[tuple]:
        """Yield (node, label) pairs in preorder."""
        stack = [(self.root, ())]
        while stack:
            node, label = stack.pop()
            yield node, label
            for idx in range(len(node.children) - 1, -1, -1):
                stack.append((node.children[idx], label + (idx + 1,)))

    @property
    def size(self) -> int:
        return sum(1 for _ in self.walk())

    def node_at(self, label: Label) -> PartialNode:
        node = self.root
        for coord in label:
            node = node.children[coord - 1]
        return node

    def max_out_degree(self) -> MaxDegreeInfo:
        has_inf = False
        incomplete = False
        best = 0
        for node, _ in self.walk():
            if node.mark is Mark.INFINITE:
                has_inf = True
            elif node.mark is Mark.FRONTIER:
                incomplete = True
            else:
                best = max(best, node.out_degree)
                if node.width_cut:
                    incomplete = True
        if has_inf:
            return MaxDegreeInfo(math.inf, False)
        return MaxDegreeInfo(float(best), incomplete)

    def to_finite(self) -> FiniteTree:
        """Erase marks and unexpanded regions (frontier vertices become leaves)."""

        def build(node: PartialNode) -> FiniteTree:
            kids = [build(c) for c in node.children]
            return FiniteTree.from_children(kids)

        return build(self.root)

    def to_json(self):
        def build(node: PartialNode):
            if node.mark is Mark.FRONTIER:
                return {"frontier": True}
            kids = [build(c) for c in node.children]
            if node.mark is Mark.INFINITE:
                return {"inf": True, "children": kids}
            if node.width_cut:
                return {"deg": node.out_degree, "children": kids}
            return kids

        return build(self.root)

    @classmethod
    def from_json(cls, obj) -> "PartialTree":
        def build(o) -> PartialNode:
            if isinstance(o, list):
                kids = tuple(build(c) for c in o)
                return PartialNode(Mark.MATERIALIZED, len(kids), kids)
            if isinstance(o, dict):
                if o.get("frontier"):
                    return PartialNode(Mark.FRONTIER, None)
                kids = tuple(build(c) for c in o.get("children", []))
                if o.get("inf"):
                    return PartialNode(Mark.INFINITE, None, kids)
                if "deg" in o:
                    return PartialNode(Mark.MATERIALIZED, int(o["deg"]), kids)
            raise LawError("malformed partial-tree JSON")

        return cls(build(obj))

    def __eq__(self, other) -> bool:
        return isinstance(other, PartialTree) and self.root == other.root

    def __repr__(self) -> str:  # pragma: no cover
        m = self.max_out_degree()
        return f"PartialTree(size={self.size}, max_deg={m.value}, inf={self.infinite_vertex})"


def truncate(tree: Union[FiniteTree, PartialTree], depth: int, width: int) -> PartialTree:
    """Keep vertices of depth <= depth whose label coordinates are all <= width.

    Depth-cut parents become FRONTIER (their expansion is dropped wholesale);
    width-cut parents keep their known degree with a shortened child prefix.
    Deterministic; used for display and for bounding sampler output.
    """
    if depth < 0 or width < 0:
        raise LawError("truncation parameters must be non-negative")

    if isinstance(tree, FiniteTree):
        deg = tree.degrees

        def build_f(i: int, d: int) -> tuple[PartialNode, int]:
            k = deg[i]
            if k > 0 and d == depth:
                return PartialNode(Mark.FRONTIER, None), subtree_span(deg, i)
            kids = []
            j = i + 1
            for c in range(k):
                if c < width:
                    node, j = build_f(j, d + 1)
                    kids.append(node)
                else:
                    j = subtree_span(deg, j)
            return PartialNode(Mark.MATERIALIZED, k, tuple(kids)), j

        root, _ = build_f(0, 0)
        return PartialTree(root, depth_limit=depth, width_limit=width)

    def build_p(node: PartialNode, d: int) -> PartialNode:
        if node.mark is Mark.FRONTIER:
            return node
        if node.children and d == depth:
            return PartialNode(Mark.FRONTIER, None)
        if node.mark is Mark.MATERIALIZED and node.out_degree > 0 and d == depth:
            return PartialNode(Mark.FRONTIER, None)
        kids = tuple(build_p(c, d + 1) for c in node.children[:width])
        if node.mark is Mark.INFINITE:
            return PartialNode(Mark.INFINITE, None, kids, node.special)
        return PartialNode(Mark.MATERIALIZED, node.out_degree, kids, node.special)

    inf_label = tree.infinite_vertex
    if inf_label is not None and (len(inf_label) > depth or any(c > width for c in inf_label)):
        inf_label = None
    return PartialTree(
        build_p(tree.root, 0),
        depth_limit=depth,
        width_limit=width,
        special_path=tuple(p for p in tree.special_path if len(p) <= depth),
        infinite_vertex=inf_label,
    )


def graft_right_partial(base: FiniteTree, label: Label, scion: PartialTree) -> PartialTree:
    """Right-graft a partial scion onto a finite base (result is partial).

    The scion's root is discarded; its child subtrees are appended after the
    site's existing children, as in FiniteTree.graft_right.
    """
    if scion.root.mark is Mark.FRONTIER:
        raise LawError("cannot right-graft an unexpanded scion")
    deg = base.degrees
    pos = base.position(label)

    def build(i: int) -> tuple[PartialNode, int]:
        k = deg[i]
        kids = []
        j = i + 1
        for _ in range(k):
            node, j = build(j)
            kids.append(node)
        if i == pos:
            kids.extend(scion.root.children)
            if scion.root.mark is Mark.INFINITE:
                return PartialNode(Mark.INFINITE, None, tuple(kids)), j
            return PartialNode(Mark.MATERIALIZED, k + scion.root.out_degree, tuple(kids)), j
        return PartialNode(Mark.MATERIALIZED, k, tuple(kids)), j

    root, _ = build(0)
    inf_label = None
    if scion.infinite_vertex is not None:
        shift = base.out_degree(label)
        head = scion.infinite_vertex
        if head:
            inf_label = tuple(label) + (head[0] + shift,) + tuple(head[1:])
        else:
            inf_label = tuple(label)
    elif scion.root.mark is Mark.INFINITE:
        inf_label = tuple(label)
    return PartialTree(root, infinite_vertex=inf_label)


# ----------------------------------------------------------------------
# graft events
# ----------------------------------------------------------------------


class GraftKind(Enum):
    LEAF_GRAFT = "leaf-graft"
    RIGHT_GRAFT_PLUS = "right-graft-plus"


@dataclass(frozen=True)
class GraftEvent:
    """A probe set of trees: everything obtainable by grafting at a site.

    LEAF_GRAFT: trees equal to ``base`` outside the strict subtree of the
    leaf ``site`` (an arbitrary tree replaces that leaf).
    RIGHT_GRAFT_PLUS: trees equal to ``base`` except for extra child
    subtrees of ``site`` appended after its existing children, with the
    site's resulting degree at least ``k``.
    """

    kind: GraftKind
    base: FiniteTree
    site: Label
    k: int = 0

    def __post_init__(self):
        object.__setattr__(self, "site", tuple(self.site))
        pos = self.base.position(self.site)  # raises KeyError if absent
        if self.kind is GraftKind.LEAF_GRAFT:
            if self.base.degrees[pos] != 0:
                raise LawError("leaf-graft site must be a leaf of the base tree")
        if self.k < 0:
            raise LawError("offspring threshold must be non-negative")

    @property
    def site_degree(self) -> int:
        return self.base.out_degree(self.site)

    def probe_id(self) -> str:
        degs = ".".join(str(d) for d in self.base.degrees)
        site = ".".join(str(c) for c in self.site) or "root"
        if self.kind is GraftKind.LEAF_GRAFT:
            return f"T[{degs}]@{site}"
        return f"T+[{degs}]@{site}:k{self.k}"

    # -- membership -------------------------------------------------------

    def contains(self, tree: Union[FiniteTree, PartialTree, Sequence[int]]) -> bool:
        if isinstance(tree, PartialTree):
            return self._contains_partial(tree)
        if isinstance(tree, FiniteTree):
            return self._contains_degrees(tree.degrees)
        return self._contains_degrees(tree)

    def _contains_degrees(self, sd: Sequence[int]) -> bool:
        td = self.base.degrees
        i = self.base.position(self.site)
        if len(sd) <= i or tuple(sd[:i]) != td[:i]:
            return False
        if self.kind is GraftKind.LEAF_GRAFT:
            j = subtree_span(sd, i)
            return tuple(sd[j:]) == td[i + 1 :]
        ell = td[i]
        js = sd[i]
        if js < max(ell, self.k):
            return False
        e_t = i + 1
        for _ in range(ell):
            e_t = subtree_span(td, e_t)
        width = e_t - (i + 1)
        if tuple(sd[i + 1 : i + 1 + width]) != td[i + 1 : e_t]:
            return False
        q = i + 1 + width
        try:
            for _ in range(js - ell):
                q = subtree_span(sd, q)
        except GWError:
            return False
        return tuple(sd[q:]) == td[e_t:]

    def _contains_partial(self, pt: PartialTree) -> bool:
        """Membership for truncated trees; UndecidableError when the answer
        depends on an unexpanded region."""
        base = self.base
        site_pos = base.position(self.site)

        def match_exact(node: PartialNode, sub: FiniteTree) -> bool:
            # does this partial node's subtree equal the finite subtree?
            if node.mark is Mark.FRONTIER:
                raise UndecidableError("frontier vertex inside the probe region")
            if node.mark is Mark.INFINITE:
                return False
            k = sub.root_degree
            if node.out_degree != k:
                return False
            if len(node.children) < k:
                raise UndecidableError("width cut inside the probe region")
            forest = sub.child_forest(())
            return all(match_exact(c, f) for c, f in zip(node.children, forest))

        def walk(node: PartialNode, pos: int) -> bool:
            # node corresponds to base preorder position pos
            if pos == site_pos:
                if self.kind is GraftKind.LEAF_GRAFT:
                    return True  # anything below the site is fine
                ell = base.degrees[pos]
                if node.mark is Mark.FRONTIER:
                    raise UndecidableError("site vertex not expanded")
                deg = math.inf if node.mark is Mark.INFINITE else node.out_degree
                if deg < max(ell, self.k):
                    return False
                if len(node.children) < ell:
                    raise UndecidableError("site children not all materialized")
                forest = base.child_forest(self.site)
                return all(match_exact(c, f) for c, f in zip(node.children[:ell], forest))
            if node.mark is Mark.FRONTIER:
                raise UndecidableError("probe region not expanded")
            if node.mark is Mark.INFINITE:
                return False
            k = base.degrees[pos]
            if node.out_degree != k:
                return False
            if len(node.children) < k:
                raise UndecidableError("width cut inside the probe region")
            j = pos + 1
            for c in range(k):
                if not walk(node.children[c], j):
                    return False
                j = subtree_span(base.degrees, j)
            return True

        return walk(pt.root, 0)


def max_out_degree(tree: Union[FiniteTree, PartialTree]):
    """Spec-level dispatch: plain int for finite trees, annotated value otherwise."""
    if isinstance(tree, FiniteTree):
        return tree.max_out_degree
    return tree.max_out_degree()
