"""Pure-Python generation kernels (reference semantics).

Bit-compatible with the compiled kernels in ``_speedups``: both consume one
``next_double`` from the generator's bit stream per materialized vertex, in
preorder, and map it to an offspring count by upper-bound inversion on the
cumulative table (first index with cdf[i] > u).  A given seed therefore
produces identical trees on either backend.

Trees are returned as preorder out-degree sequences (int64 arrays); the
depth-truncated variant marks unexpanded frontier vertices with -1 (no
uniform is consumed for them).
"""

from __future__ import annotations

from bisect import bisect_right

import numpy as np

BACKEND = "python"

STATUS_OK = 0
STATUS_BUDGET = 1
STATUS_TRIALS = 2


def _generate(random, cdf, budget):
    """One preorder degree list, or None if the vertex budget is exceeded."""
    degrees = []
    append = degrees.append
    stack = [1]
    count = 0
    while stack:
        if stack[-1] == 1:
            stack.pop()
        else:
            stack[-1] -= 1
        count += 1
        if count > budget:
            return None
        k = bisect_right(cdf, random())
        append(k)
        if k:
            stack.append(k)
    return degrees


def generate_degrees(generator, cdf, budget):
    """Sample one tree; returns (int64 degree array or None, status)."""
    degrees = _generate(generator.random, list(cdf), budget)
    if degrees is None:
        return None, STATUS_BUDGET
    return np.array(degrees, dtype=np.int64), STATUS_OK


def generate_eq(generator, cdf, target, budget, max_trials):
    """Rejection-sample a tree whose maximal out-degree equals target.

    The cdf must already encode the conditioned law (support <= target), so
    rejection only discards trees with maximum strictly below target.
    Returns (degree array or None, trials, status).
    """
    random = generator.random
    cdf_l = list(cdf)
    trials = 0
    while trials < max_trials:
        trials += 1
        degrees = _generate(random, cdf_l, budget)
        if degrees is None:
            return None, trials, STATUS_BUDGET
        if max(degrees) == target:
            return np.array(degrees, dtype=np.int64), trials, STATUS_OK
    return None, trials, STATUS_TRIALS


def generate_depth_truncated(generator, cdf, max_depth, budget):
    """Sample a tree expanded only above depth max_depth.

    Vertices at depth == max_depth are emitted as -1 (frontier, degree not
    drawn); vertices above it are materialized normally.  Returns
    (int64 degree array or None, status).
    """
    random = generator.random
    cdf_l = list(cdf)
    degrees = []
    append = degrees.append
    stack = [(1, 0)]
    count = 0
    while stack:
        rem, depth = stack[-1]
        if rem == 1:
            stack.pop()
        else:
            stack[-1] = (rem - 1, depth)
        count += 1
        if count > budget:
            return None, STATUS_BUDGET
        if depth >= max_depth:
            append(-1)
            continue
        k = bisect_right(cdf_l, random())
        append(k)
        if k:
            stack.append((k, depth + 1))
    return np.array(degrees, dtype=np.int64), STATUS_OK
