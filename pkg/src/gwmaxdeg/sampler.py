"""Seeded samplers: plain GW trees, conditioned trees, and limit trees.

Conditioning strategy for {M = n}: draw from the transformed offspring law
p̂_m = p_m H(n)^m / H(n) (m <= n), under which the tree law is exactly the
GW law conditioned on {M <= n}; reject until the maximum hits n.  The
acceptance probability is q_n / H(n) per trial, so the expected cost is
H(n)/q_n, reported up front so callers can refuse infeasible levels.
Raw rejection from the unconditioned law would need ~1/q_n trials instead.

Conditioning on {M > n} first inverts the value K of the maximum from its
tail law (a mixture over k > n), then delegates to the {M = K} sampler.

Reproducibility: every draw is a pure function of (law, SampleConfig); the
RNG stream is PCG64 seeded with SeedSequence((seed, stream[, chunk])), and
batch chunking is fixed-size so results do not depend on worker counts.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import BudgetExceededError, LawError, NullEventError, TrialLimitError
from .maxdeg import MaxDegTable
from .offspring import Criticality, OffspringLaw
from .trees import FiniteTree, Mark, PartialNode, PartialTree

__all__ = [
    "SampleConfig",
    "ConditionedLaw",
    "EqDraw",
    "sample_gw",
    "sample_conditioned_le",
    "sample_conditioned_eq",
    "sample_conditioned_gt",
    "sample_limit_tree",
    "expected_trials",
    "sample_eq_batch",
    "BATCH_CHUNK",
]

# Fixed batch chunk: results are chunk-seeded, so they are identical no
# matter how many workers process the chunks.
BATCH_CHUNK = 25_000


@dataclass(frozen=True)
class SampleConfig:
    """Seeding and resource limits for one sampling task."""

    seed: int
    stream: int = 0
    vertex_budget: int = 1_000_000
    depth: int | None = None
    width: int = 8

    def __post_init__(self):
        if self.seed < 0 or self.stream < 0:
            raise LawError("seed and stream id must be non-negative integers")
        if self.vertex_budget < 1:
            raise LawError("vertex budget must be at least 1")
        if self.width < 0 or (self.depth is not None and self.depth < 0):
            raise LawError("truncation parameters must be non-negative")

    def generator(self, *extra: int) -> np.random.Generator:
        ss = np.random.SeedSequence((self.seed, self.stream) + tuple(extra))
        return np.random.Generator(np.random.PCG64(ss))


class ConditionedLaw:
    """Offspring law of a GW tree conditioned on {M <= n}.

    p̂_m = p_m H(n)^m / H(n) for m <= n; the product over a tree telescopes
    to weight(t)/H(n), which is exactly the conditioned tree law.
    """

    def __init__(self, law: OffspringLaw, n: int, table: MaxDegTable):
        table.extend(n)
        if not (law.pmf(0) > 0.0):
            raise LawError("conditioned sampling needs p_0 > 0")
        self.base = law
        self.n = n
        log_h = table.log_H(n)
        m = np.arange(n + 1, dtype=np.float64)
        raw = law.pmf_array(n) * np.exp((m - 1.0) * log_h)
        self.pmf = raw
        self.raw_total = float(math.fsum(raw.tolist()))
        self.mean = float(np.dot(m, raw))
        cdf = np.cumsum(raw)
        cdf[-1] = 1.0
        self._cdf = cdf

    def inversion_cdf(self) -> np.ndarray:
        return self._cdf


def _require_as_finite(law: OffspringLaw, context: str) -> None:
    law.require(Criticality.CRITICAL, Criticality.SUBCRITICAL, context=context)


def sample_gw(law: OffspringLaw, cfg: SampleConfig, generator=None) -> FiniteTree:
    """One exact draw of the GW tree (depth-first generation)."""
    _require_as_finite(law, "GW sampling")
    gen = generator if generator is not None else cfg.generator()
    degrees, status = kernels.generate_degrees(gen, law.inversion_cdf(), cfg.vertex_budget)
    if status == kernels.STATUS_BUDGET:
        raise BudgetExceededError(
            f"tree exceeded the vertex budget ({cfg.vertex_budget}); "
            "raise the budget or retry with another stream",
            vertices=cfg.vertex_budget,
        )
    return FiniteTree(degrees)


def conditioned_offspring(law: OffspringLaw, n: int, table: MaxDegTable | None = None) -> ConditionedLaw:
    _require_as_finite(law, "conditioned sampling")
    table = table if table is not None else MaxDegTable(law, n)
    return ConditionedLaw(law, n, table)


def sample_conditioned_le(
    law: OffspringLaw,
    n: int,
    cfg: SampleConfig,
    table: MaxDegTable | None = None,
    generator=None,
) -> FiniteTree:
    """One exact draw from dist(tree | M <= n); M <= n by construction."""
    cond = law if isinstance(law, ConditionedLaw) else conditioned_offspring(law, n, table)
    gen = generator if generator is not None else cfg.generator()
    degrees, status = kernels.generate_degrees(gen, cond.inversion_cdf(), cfg.vertex_budget)
    if status == kernels.STATUS_BUDGET:
        raise BudgetExceededError(
            f"conditioned tree exceeded the vertex budget ({cfg.vertex_budget})",
            vertices=cfg.vertex_budget,
        )
    return FiniteTree(degrees)


class EqDraw(NamedTuple):
    tree: FiniteTree
    trials: int


def expected_trials(law: OffspringLaw, n: int, table: MaxDegTable | None = None) -> float:
    table = table if table is not None else MaxDegTable(law, n)
    return table.expected_eq_trials(n)


def _eq_guards(law: OffspringLaw, n: int, table: MaxDegTable | None, max_trials):
    _require_as_finite(law, "conditioned sampling")
    if law.pmf(n) == 0.0:
        raise NullEventError(
            f"p_{n} = 0, so q_{n} = 0: conditioning on {{M = {n}}} is a null event"
        )
    table = table if table is not None else MaxDegTable(law, n)
    est = table.expected_eq_trials(n)
    if max_trials is None:
        max_trials = int(50.0 * est) + 1000
    if est > max_trials:
        raise TrialLimitError(
            f"expected trial count {est:.3g} exceeds the allowance {max_trials}; "
            "refusing up front",
            expected_trials=est,
        )
    return table, est, max_trials


def sample_conditioned_eq(
    law: OffspringLaw,
    n: int,
    cfg: SampleConfig,
    table: MaxDegTable | None = None,
    max_trials: int | None = None,
    generator=None,
) -> EqDraw:
    """One exact draw from dist(tree | M = n), with its rejection trial count."""
    table, est, max_trials = _eq_guards(law, n, table, max_trials)
    cond = ConditionedLaw(law, n, table)
    gen = generator if generator is not None else cfg.generator()
    degrees, trials, status = kernels.generate_eq(
        gen, cond.inversion_cdf(), n, cfg.vertex_budget, max_trials
    )
    if status == kernels.STATUS_BUDGET:
        raise BudgetExceededError(
            f"conditioned tree exceeded the vertex budget ({cfg.vertex_budget})",
            vertices=cfg.vertex_budget,
        )
    if status == kernels.STATUS_TRIALS:
        raise TrialLimitError(
            f"no acceptance in {trials} trials (expected {est:.3g} per draw)",
            trials=trials,
            expected_trials=est,
        )
    return EqDraw(FiniteTree(degrees), trials)


def sample_conditioned_gt(
    law: OffspringLaw,
    n: int,
    cfg: SampleConfig,
    table: MaxDegTable | None = None,
    max_trials: int | None = None,
    generator=None,
) -> EqDraw:
    """One exact draw from dist(tree | M > n).

    Realized as the mixture over {M = k}, k > n: invert the value of the
    maximum from its tail law, then sample conditioned on that exact value.
    """
    _require_as_finite(law, "conditioned sampling")
    sup = law.support_sup
    if sup is not None and n >= sup:
        raise NullEventError(
            "bounded offspring law: conditioning on a maximal out-degree "
            f"above the support (sup = {sup}) is a null event"
        )
    table = table if table is not None else MaxDegTable(law, n)
    gen = generator if generator is not None else cfg.generator()
    k = table.tail_inverse(n, gen.random())
    return sample_conditioned_eq(law, k, cfg, table, max_trials, generator=gen)


# ----------------------------------------------------------------------
# limit trees (size-biased spine constructions)
# ----------------------------------------------------------------------


def _partial_from_degrees(degrees: np.ndarray) -> PartialNode:
    """Rebuild a PartialNode tree from a kernel degree array with -1 frontier marks."""
    pos = 0

    def build() -> PartialNode:
        nonlocal pos
        d = int(degrees[pos])
        pos += 1
        if d < 0:
            return PartialNode(Mark.FRONTIER, None)
        kids = tuple(build() for _ in range(d))
        return PartialNode(Mark.MATERIALIZED, d, kids)

    node = build()
    if pos != len(degrees):
        raise LawError("degree array does not encode a single tree")
    return node


def sample_limit_tree(law: OffspringLaw, cfg: SampleConfig, generator=None) -> PartialTree:
    """Sample the size-biased limit tree, truncated at depth/width from cfg.

    The spine draws from the size-biased law; a finite outcome k places k
    children with one (uniform) special, an infinite outcome (sub-critical
    laws only) marks the vertex INFINITE and materializes cfg.width normal
    children.  Normal vertices grow plain GW trees, depth-truncated.  One
    uniform per decision, in preorder, so draws are reproducible.
    """
    _require_as_finite(law, "limit-tree sampling")
    if cfg.depth is None:
        raise LawError("limit-tree sampling needs a truncation depth (cfg.depth)")
    biased = law.bias()
    gen = generator if generator is not None else cfg.generator()
    cdf = law.inversion_cdf()
    h = cfg.depth
    special_path = []
    infinite_vertex: tuple | None = None

    def grow_normal(depth_left: int) -> PartialNode:
        degrees, status = kernels.generate_depth_truncated(
            gen, cdf, depth_left, cfg.vertex_budget
        )
        if status == kernels.STATUS_BUDGET:
            raise BudgetExceededError(
                f"off-spine subtree exceeded the vertex budget ({cfg.vertex_budget})",
                vertices=cfg.vertex_budget,
            )
        return _partial_from_degrees(degrees)

    def grow_special(depth: int, label: tuple) -> PartialNode:
        nonlocal infinite_vertex
        special_path.append(label)
        if depth == h:
            return PartialNode(Mark.FRONTIER, None)

        k = biased.sample(gen)
        if k == math.inf:
            infinite_vertex = label
            kids = tuple(grow_normal(h - depth - 1) for _ in range(cfg.width))
            return PartialNode(Mark.INFINITE, None, kids, special=True)
        k = int(k)
        chosen = int(gen.random() * k)  # uniform special child
        if chosen >= k:
            chosen = k - 1
        kids = []
        for i in range(k):
            if i == chosen:
                kids.append(grow_special(depth + 1, label + (i + 1,)))
            else:
                kids.append(grow_normal(h - depth - 1))
        node = PartialNode(Mark.MATERIALIZED, k, tuple(kids), special=True)
        return node

    root = grow_special(0, ())
    return PartialTree(
        root,
        depth_limit=h,
        width_limit=cfg.width,
        special_path=tuple(special_path),
        infinite_vertex=infinite_vertex,
    )


# ----------------------------------------------------------------------
# batches
# ----------------------------------------------------------------------


class BatchResult(NamedTuple):
    degree_arrays: list
    total_trials: int


def _eq_chunk(args):
    law, n, cfg, chunk_index, count, max_trials = args
    table = MaxDegTable(law, n)
    cond = ConditionedLaw(law, n, table)
    cdf = cond.inversion_cdf()
    gen = cfg.generator(chunk_index)
    est = table.expected_eq_trials(n)
    if max_trials is None:
        max_trials = int(50.0 * est) + 1000
    out = []
    total = 0
    for _ in range(count):
        degrees, trials, status = kernels.generate_eq(
            gen, cdf, n, cfg.vertex_budget, max_trials
        )
        total += trials
        if status == kernels.STATUS_BUDGET:
            raise BudgetExceededError("conditioned tree exceeded the vertex budget")
        if status == kernels.STATUS_TRIALS:
            raise TrialLimitError(
                f"no acceptance in {trials} trials", trials=trials, expected_trials=est
            )
        out.append(degrees)
    return out, total


def sample_eq_batch(
    law: OffspringLaw,
    n: int,
    count: int,
    cfg: SampleConfig,
    table: MaxDegTable | None = None,
    max_trials: int | None = None,
    threads: int = 1,
) -> BatchResult:
    """Draw ``count`` trees from dist(tree | M = n) as raw degree arrays.

    Work is split into fixed-size chunks with per-chunk derived streams;
    ``threads`` only caps worker parallelism, the output is identical for
    any thread count.
    """
    table, _, max_trials = _eq_guards(law, n, table, max_trials)
    chunks = []
    index = 0
    remaining = count
    while remaining > 0:
        size = min(BATCH_CHUNK, remaining)
        chunks.append((law, n, cfg, index, size, max_trials))
        index += 1
        remaining -= size
    if threads > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_eq_chunk, chunks))
    else:
        results = [_eq_chunk(c) for c in chunks]
    arrays: list = []
    total = 0
    for chunk_arrays, chunk_trials in results:
        arrays.extend(chunk_arrays)
        total += chunk_trials
    return BatchResult(arrays, total)
