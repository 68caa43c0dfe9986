"""Exhaustive small-tree enumeration and exact probability formulas.

This module is the ground truth the samplers and the convergence harness
are tested against.  Enumeration covers all ordered rooted trees up to a
vertex cap in a deterministic canonical order (by size, then by preorder
degree sequence lexicographically), so golden files are stable.  The exact
formulas cover:

* probabilities of graft sets under the limit trees (spine constructions),
* conditional graft probabilities under the tree conditioned on {M = n},
  evaluated through the fixed-point table rather than by enumeration,
* enumeration-based event bounds with an explicit unenumerated-mass gap.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Iterator, Mapping, NamedTuple

from .errors import LawError, NullEventError, RegimeError
from .maxdeg import MaxDegTable
from .offspring import Criticality, OffspringLaw
from .trees import FiniteTree, GraftEvent, GraftKind, Label

__all__ = [
    "TreeEnumeration",
    "enumerate_trees",
    "EventBound",
    "exact_event_prob",
    "limit_graft_prob",
    "limit_graft_plus_prob",
    "graft_weight_D",
    "ConditionedValue",
    "exact_conditioned_graft",
    "exact_conditioned_graft_plus",
    "empirical_tv",
]

# memo: (size, degree cap) -> tuple of degree tuples, sorted canonically
_CACHE: dict = {}


def _compositions(total: int, parts: int) -> Iterator[tuple]:
    """Ordered compositions of ``total`` into ``parts`` positive integers."""
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _trees_of_size(size: int, cap: int) -> tuple:
    cap = min(cap, size - 1) if size > 1 else 0
    key = (size, cap)
    cached = _CACHE.get(key)
    if cached is not None:
        return cached
    if size == 1:
        out = ((0,),)
    else:
        acc = []
        for k in range(1, cap + 1):
            for comp in _compositions(size - 1, k):
                parts = [_trees_of_size(s, cap) for s in comp]
                # cartesian product, iteratively to avoid deep recursion
                idx = [0] * k
                while True:
                    deg = (k,)
                    for j, p in enumerate(parts):
                        deg = deg + p[idx[j]]
                    acc.append(deg)
                    j = k - 1
                    while j >= 0:
                        idx[j] += 1
                        if idx[j] < len(parts[j]):
                            break
                        idx[j] = 0
                        j -= 1
                    if j < 0:
                        break
        acc.sort()
        out = tuple(acc)
    _CACHE[key] = out
    return out


class TreeEnumeration:
    """All ordered rooted trees with at most ``max_vertices`` vertices and
    out-degrees at most ``max_degree`` (None = unrestricted), each exactly
    once, in canonical order."""

    def __init__(self, max_vertices: int, max_degree: int | None = None):
        if max_vertices < 1:
            raise LawError("enumeration needs at least one vertex")
        if max_degree is not None and max_degree < 0:
            raise LawError("degree cap must be non-negative")
        self.max_vertices = max_vertices
        self.max_degree = max_degree

    def _cap(self, size: int) -> int:
        cap = size - 1
        if self.max_degree is not None:
            cap = min(cap, self.max_degree)
        return cap

    def degree_tuples(self) -> Iterator[tuple]:
        for size in range(1, self.max_vertices + 1):
            yield from _trees_of_size(size, self._cap(size))

    def __iter__(self) -> Iterator[FiniteTree]:
        for deg in self.degree_tuples():
            yield FiniteTree(deg)

    def count_by_size(self) -> list:
        return [
            len(_trees_of_size(size, self._cap(size)))
            for size in range(1, self.max_vertices + 1)
        ]

    def weighted(self, law: OffspringLaw) -> Iterator[tuple]:
        """(tree, weight) pairs; weights are the GW probabilities."""
        for tree in self:
            yield tree, tree.weight(law)


def enumerate_trees(max_vertices: int, max_degree: int | None = None) -> TreeEnumeration:
    return TreeEnumeration(max_vertices, max_degree)


# ----------------------------------------------------------------------
# enumeration-based event probabilities
# ----------------------------------------------------------------------


class EventBound(NamedTuple):
    lower: float
    mass_gap: float  # math.inf when no finite bound is available (critical laws)


def exact_event_prob(
    law: OffspringLaw,
    predicate: Callable[[FiniteTree], bool],
    max_vertices: int,
    max_degree: int | None = None,
) -> EventBound:
    """Lower bound on P(predicate(tree)) from enumerating trees up to the cap.

    The gap bounds the unenumerated mass via Markov on the total progeny,
    P(|tree| > V) <= 1 / ((1 - mean) V), finite only for sub-critical laws.
    ``max_degree`` restricts the enumeration; it is the caller's promise
    that the predicate fails (or the law vanishes) beyond that degree.
    """
    cls = law.require(
        Criticality.CRITICAL, Criticality.SUBCRITICAL, context="enumeration bound"
    )
    cap = max_degree
    sup = law.support_sup
    if sup is not None:
        cap = sup if cap is None else min(cap, sup)
    total = []
    for tree, w in TreeEnumeration(max_vertices, cap).weighted(law):
        if w > 0.0 and predicate(tree):
            total.append(w)
    lower = math.fsum(total)
    if cls is Criticality.SUBCRITICAL:
        gap = 1.0 / ((1.0 - law.mean) * max_vertices)
    else:
        gap = math.inf
    return EventBound(lower, gap)


# ----------------------------------------------------------------------
# limit-tree graft probabilities
# ----------------------------------------------------------------------


def limit_graft_prob(law: OffspringLaw, tree: FiniteTree, site: Label) -> float:
    """P(limit tree lands in the leaf-graft set of (tree, site)) for a
    critical law: weight(tree) / p_0."""
    law.require(Criticality.CRITICAL, context="leaf-graft limit value")
    GraftEvent(GraftKind.LEAF_GRAFT, tree, tuple(site))  # validates the site
    return tree.weight(law) / law.pmf(0)


def graft_weight_D(law: OffspringLaw, tree: FiniteTree, site: Label) -> float:
    """The graft weight D(tree, site): weight of the tree below the site
    (site's own degree factor removed) times the weight of its child forest."""
    site = tuple(site)
    below = tree.complement_at(site)
    forest = tree.child_forest(site)
    log_d = below.log_weight(law) - math.log(law.pmf(0))
    for sub in forest:
        log_d += sub.log_weight(law)
    return math.exp(log_d)


def limit_graft_plus_prob(law: OffspringLaw, tree: FiniteTree, site: Label, k: int) -> float:
    """P(limit tree lands in the right-graft set of (tree, site) with the
    site's degree >= k), for a sub-critical law:

        D(tree, site) * (1 - mean + E[(X - ell)_+ 1_{X >= k}]),  ell = deg(site).
    """
    law.require(Criticality.SUBCRITICAL, context="right-graft limit value")
    site = tuple(site)
    GraftEvent(GraftKind.RIGHT_GRAFT_PLUS, tree, site, k)  # validates
    ell = tree.out_degree(site)
    bracket = (1.0 - law.mean) + law.partial_plus_expect(ell, k)
    return graft_weight_D(law, tree, site) * bracket


# ----------------------------------------------------------------------
# conditional graft probabilities at finite n
# ----------------------------------------------------------------------


class ConditionedValue(NamedTuple):
    value: float
    mass_gap: float  # 0.0 on the identity path


def exact_conditioned_graft(
    law: OffspringLaw,
    tree: FiniteTree,
    site: Label,
    n: int,
    table: MaxDegTable,
    fallback_vertices: int = 12,
) -> ConditionedValue:
    """P(tree-valued GW draw lands in the leaf-graft set | M = n).

    For n > M(tree) this is exactly weight(tree)/p_0, independent of n (the
    q_n factors cancel; grafting cannot change the maximum below level n).
    For n <= M(tree) the identity does not apply and an enumeration bound
    with its mass gap is returned instead.
    """
    if law.pmf(n) == 0.0:
        raise NullEventError(f"p_{n} = 0: conditioning on {{M = {n}}} is a null event")
    if not (law.pmf(0) > 0.0):
        raise RegimeError("conditional graft probabilities need p_0 > 0")
    site = tuple(site)
    event = GraftEvent(GraftKind.LEAF_GRAFT, tree, site)
    if n > tree.max_out_degree:
        return ConditionedValue(tree.weight(law) / law.pmf(0), 0.0)
    qn = table.q(n)
    lower, gap = exact_event_prob(
        law,
        lambda s: s.max_out_degree == n and event.contains(s),
        fallback_vertices,
    )
    return ConditionedValue(lower / qn, gap / qn)


def exact_conditioned_graft_plus(
    law: OffspringLaw,
    tree: FiniteTree,
    site: Label,
    k: int,
    n: int,
    table: MaxDegTable,
) -> float:
    """P(GW draw lands in the right-graft-plus set of (tree, site, k) | M = n),
    for a sub-critical law and n > M(tree).

    Joint probability via the site-degree decomposition:

        D(tree, site) * ( p_n H(n)^{n-ell}
                          + sum_{j = max(ell+1, k)}^{n-1} p_j P_{j-ell}(M = n) )

    with ell = deg(site); divided by q_n for the conditional value.  The
    forest point masses come from the factored form (no naive differencing).
    """
    law.require(Criticality.SUBCRITICAL, context="conditional right-graft probability")
    if law.pmf(n) == 0.0:
        raise NullEventError(f"p_{n} = 0: conditioning on {{M = {n}}} is a null event")
    site = tuple(site)
    GraftEvent(GraftKind.RIGHT_GRAFT_PLUS, tree, site, k)  # validates
    if n <= tree.max_out_degree:
        raise LawError(
            f"conditional right-graft identity needs n > M(tree) = {tree.max_out_degree}"
        )
    ell = tree.out_degree(site)
    if k > n:
        return 0.0
    table.extend(n)
    terms = [law.pmf(n) * table.forest_cdf(n - ell, n)]
    for j in range(max(ell + 1, k), n):
        pj = law.pmf(j)
        if pj > 0.0:
            terms.append(pj * table.forest_q(j - ell, n))
    joint = graft_weight_D(law, tree, site) * math.fsum(terms)
    return joint / table.q(n)


# ----------------------------------------------------------------------
# empirical total variation
# ----------------------------------------------------------------------


def empirical_tv(
    samples: Iterable,
    exact: Mapping[FiniteTree, float],
    max_vertices: int,
) -> float:
    """Total-variation distance between the empirical law of the samples and
    an exact law given on all trees with at most ``max_vertices`` vertices.

    Mass outside the covered range is lumped into a single residual cell on
    both sides; the exact lump is 1 - sum(exact.values()).
    """
    counts: dict = {}
    total = 0
    lump = 0
    for s in samples:
        tree = s if isinstance(s, FiniteTree) else FiniteTree(s)
        total += 1
        if tree.size <= max_vertices:
            counts[tree] = counts.get(tree, 0) + 1
        else:
            lump += 1
    exact_lump = 1.0 - math.fsum(exact.values())
    if total == 0:
        # degenerate contract: an empty sample is all lump
        diffs = [abs(0.0 - p) for p in exact.values()]
        diffs.append(abs(1.0 - exact_lump))
        return 0.5 * math.fsum(diffs)
    diffs = []
    seen_keys = set(counts)
    for key, p in exact.items():
        emp = counts.get(key, 0) / total
        diffs.append(abs(emp - p))
        seen_keys.discard(key)
    for key in seen_keys:  # sampled trees the exact map does not cover
        diffs.append(counts[key] / total)
    diffs.append(abs(lump / total - exact_lump))
    return 0.5 * math.fsum(diffs)
