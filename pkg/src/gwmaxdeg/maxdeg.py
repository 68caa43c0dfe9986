"""Exact law of the maximal out-degree of a Galton-Watson tree.

H(n) = P(max out-degree <= n) is the unique root in [0, 1] of

    f_n(y) = sum_{m <= n} p_m y^m - y

(root the out-degree of the root vertex; the n+1 truncated generating
function is a strict contraction below the mean).  All solving happens in
the tail variable z = 1 - y, where

    g_n(z) = z - sum_{m <= n} p_m (1 - (1-z)^m) - tail(n)

is increasing and convex with g_n(0) = -tail(n) < 0 and g_n(1) = p_0 > 0.
Working in z keeps full relative precision in Hbar(n) = 1 - H(n), which for
large n is the only way the point masses q_n = Hbar(n-1) - Hbar(n) and the
ratios p_n / q_n survive in double precision.

Tables are filled sequentially: g_n evaluated at the previous root is
p_n (1-z)^n >= 0, so Newton started there descends monotonically (convexity)
to the new root.  Consequences: q_n >= 0 structurally, and p_n = 0 copies
the previous entry so q_n = 0 holds exactly, not just within tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import LawError, NullEventError, RegimeError
from .offspring import Criticality, OffspringLaw

__all__ = [
    "RESIDUAL_TOL",
    "solve_H",
    "MaxDegTable",
    "TailRow",
    "TailReport",
    "theorem_tail_report",
]

RESIDUAL_TOL = 1e-12

# Below this the point masses are beyond certified double precision and the
# report suppresses the numbers instead of emitting noise.
Q_FLOOR = 1e-300

_MAX_NEWTON = 200


def _check_solvable(law: OffspringLaw) -> None:
    law.require(Criticality.CRITICAL, Criticality.SUBCRITICAL, context="max-out-degree solving")
    if not (law.pmf(0) > 0.0):
        raise RegimeError(
            "max-out-degree law degenerates when p_0 = 0 (the fixed point is not unique)"
        )


class _TailEquation:
    """g_n and g_n' for one truncation level n, vectorized over the pmf."""

    def __init__(self, law: OffspringLaw, n: int):
        pm = law.pmf_array(n)
        self.tail = law.tail(n)
        self.p = pm[1:]
        self.m = np.arange(1, n + 1, dtype=np.float64)
        self.pmf0 = pm

    def g(self, z: float) -> float:
        if z == 0.0:
            return -self.tail
        lw = math.log1p(-z)
        terms = self.p * (-np.expm1(self.m * lw))
        return z - (float(np.sum(terms)) + self.tail)

    def gprime(self, z: float) -> float:
        lw = math.log1p(-z)
        terms = self.p * self.m * np.exp((self.m - 1.0) * lw)
        return 1.0 - float(np.sum(terms))

    def residual(self, z: float) -> float:
        """|sum_{m<=n} p_m H^m - H| evaluated literally in the y variable."""
        y = 1.0 - z
        powers = np.power(y, np.arange(len(self.pmf0), dtype=np.float64))
        return abs(math.fsum((self.pmf0 * powers).tolist()) - y)


def _newton_descend(eq: _TailEquation, z: float) -> float:
    """Monotone Newton from a point with g(z) >= 0 down to the root."""
    for _ in range(_MAX_NEWTON):
        gv = eq.g(z)
        if gv <= 0.0:
            break
        gp = eq.gprime(z)
        if gp <= 0.0:
            break  # cannot happen for mean <= 1; bail to current iterate
        step = gv / gp
        z_new = z - step
        if z_new < 0.0:
            z_new = 0.0
        if z_new >= z:
            break
        z = z_new
    return z


def solve_H(law: OffspringLaw, n: int):
    """Solve the level-n fixed point from scratch.

    Returns (hbar, residual): the tail value Hbar(n) = 1 - H(n) at full
    relative precision, and the literal fixed-point residual certificate.
    Bounded laws with tail(n) = 0 return exactly (0.0, 0.0), i.e. H(n) = 1.
    """
    if n < 0:
        raise LawError("level n must be non-negative")
    _check_solvable(law)
    if law.tail(n) == 0.0:
        return 0.0, 0.0
    if n == 0:
        hbar = 1.0 - law.pmf(0)
        return hbar, 0.0
    eq = _TailEquation(law, n)
    # bisect until the upper end is close, then descend by Newton; the
    # bracket [0, 1] is guaranteed by g(0) < 0 < g(1) = p_0
    lo, hi = 0.0, 1.0
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if eq.g(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-9:
            break
    z = _newton_descend(eq, hi)
    return z, eq.residual(z)


class MaxDegTable:
    """Solved values of the maximal-out-degree law for one offspring law.

    Stores Hbar(n) (tail values, full relative precision) and the per-entry
    fixed-point residual certificates.  Extendable on demand; the law is
    immutable and the table append-only, so sharing a built table is safe.
    """

    def __init__(self, law: OffspringLaw, n_max: int = 0):
        _check_solvable(law)
        self.law = law
        self._hbar: list[float] = [1.0 - law.pmf(0)]
        self._resid: list[float] = [0.0]
        self.extend(n_max)

    @classmethod
    def build(cls, law: OffspringLaw, n_max: int) -> "MaxDegTable":
        return cls(law, n_max)

    @property
    def n_max(self) -> int:
        return len(self._hbar) - 1

    def extend(self, n: int) -> None:
        while self.n_max < n:
            m = self.n_max + 1
            prev = self._hbar[-1]
            if prev == 0.0 or self.law.pmf(m) == 0.0:
                # p_m = 0 leaves the equation unchanged: exact copy, q_m = 0
                self._hbar.append(prev)
                self._resid.append(self._resid[-1])
                continue
            if self.law.tail(m) == 0.0:
                self._hbar.append(0.0)
                self._resid.append(0.0)
                continue
            eq = _TailEquation(self.law, m)
            z = _newton_descend(eq, prev)
            self._hbar.append(z)
            self._resid.append(eq.residual(z))

    # -- accessors ----------------------------------------------------------

    def Hbar(self, n: int) -> float:
        self.extend(n)
        return self._hbar[n]

    def H(self, n: int) -> float:
        if n == 0:
            # the level-0 equation is linear; report its root exactly
            return self.law.pmf(0)
        return 1.0 - self.Hbar(n)

    def residual(self, n: int) -> float:
        self.extend(n)
        return self._resid[n]

    def q(self, n: int) -> float:
        """P(max out-degree = n), by tail-variable differencing."""
        if n < 0:
            raise LawError("level n must be non-negative")
        if n == 0:
            return self.law.pmf(0)
        self.extend(n)
        return self._hbar[n - 1] - self._hbar[n]

    def log_H(self, n: int) -> float:
        return math.log1p(-self.Hbar(n))

    def forest_cdf(self, k: int, n: int) -> float:
        """P(max out-degree of a k-forest <= n) = H(n)^k."""
        if k < 0:
            raise LawError("forest size must be non-negative")
        if k == 0:
            return 1.0
        return math.exp(k * self.log_H(n))

    def forest_q(self, m: int, n: int) -> float:
        """P(max out-degree of an m-forest = n), in factored form.

        q_n sum_{i=1..m} H(n)^{m-i} H(n-1)^{i-1}; naive differencing of
        H^m would cancel catastrophically for large n.
        """
        if m < 0:
            raise LawError("forest size must be non-negative")
        if n < 1:
            raise LawError("forest point masses need n >= 1")
        if m == 0:
            return 0.0
        qn = self.q(n)
        if qn == 0.0:
            return 0.0
        la = self.log_H(n)
        lb = self.log_H(n - 1)
        i = np.arange(1, m + 1, dtype=np.float64)
        return qn * float(np.sum(np.exp((m - i) * la + (i - 1.0) * lb)))

    def expected_eq_trials(self, n: int) -> float:
        """Expected rejection trials for conditioning on {max out-degree = n}."""
        qn = self.q(n)
        if qn == 0.0:
            raise NullEventError(
                f"q_{n} = 0 (p_{n} = 0): conditioning on a null event"
            )
        return self.H(n) / qn

    def tail_inverse(self, n: int, u: float) -> int:
        """Smallest K > n with (Hbar(n) - Hbar(K)) / Hbar(n) > u (inversion of
        the law of M given M > n)."""
        hb = self.Hbar(n)
        if hb == 0.0:
            raise NullEventError("no mass above level n")
        target = hb * (1.0 - u)
        k = n + 1
        while self.Hbar(k) >= target:
            k += 1
            if k > n + 10_000_000:
                raise LawError("tail inversion failed to terminate")
        return k


# ----------------------------------------------------------------------
# tail-equivalence report
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class TailRow:
    n: int
    p_n: float
    q_n: float
    ratio: float | None  # p_n / q_n; None when below the certified floor
    H_n_n: float  # H(n)^n
    nFbar: float  # n * tail(n)
    residual: float
    underflow: bool


@dataclass(frozen=True)
class TailReport:
    rows: tuple
    applies: bool  # the sub-critical tail-equivalence limits apply
    one_minus_mean: float

    def to_csv(self, fh) -> None:
        fh.write("n,p_n,q_n,ratio,H_n_n,nFbar,residual\n")
        for r in self.rows:
            q = "" if r.underflow else repr(r.q_n)
            ratio = "" if r.ratio is None else repr(r.ratio)
            fh.write(
                f"{r.n},{r.p_n!r},{q},{ratio},{r.H_n_n!r},{r.nFbar!r},{r.residual!r}\n"
            )


def theorem_tail_report(law: OffspringLaw, n_max: int, table: MaxDegTable | None = None) -> TailReport:
    """Tail-equivalence diagnostics along {n : p_n > 0}.

    For sub-critical unbounded laws the ratio column converges to 1 - mean
    and H(n)^n to 1; for critical laws the numbers are still emitted but
    the report is marked non-applicable (the sub-critical limit statement
    does not cover them).  Bounded laws are rejected: beyond the support
    the conditioning events are null.
    """
    cls = law.require(
        Criticality.CRITICAL, Criticality.SUBCRITICAL, context="tail-equivalence report"
    )
    if law.is_bounded:
        raise RegimeError(
            "bounded offspring law: the maximal out-degree cannot exceed the "
            "support, so the tail diagnostics are empty beyond it"
        )
    table = table if table is not None else MaxDegTable(law)
    table.extend(n_max)
    rows = []
    for n in range(n_max + 1):
        p_n = law.pmf(n)
        if p_n == 0.0:
            continue
        q_n = table.q(n)
        under = q_n < Q_FLOOR
        rows.append(
            TailRow(
                n=n,
                p_n=p_n,
                q_n=q_n,
                ratio=None if under else p_n / q_n,
                H_n_n=table.forest_cdf(n, n) if n > 0 else 1.0,
                nFbar=n * law.tail(n),
                residual=table.residual(n),
                underflow=under,
            )
        )
    return TailReport(
        rows=tuple(rows),
        applies=(cls is Criticality.SUBCRITICAL),
        one_minus_mean=1.0 - law.mean,
    )
