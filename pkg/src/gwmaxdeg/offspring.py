"""Offspring distributions: named families, moments, tails, size-biased law.

An offspring law is a pmf p on the non-negative integers with finite positive
mean.  Everything downstream (the fixed-point solver for the maximal
out-degree, the samplers, the enumeration oracle) talks only to the interface
defined here: pointwise pmf, analytic mean, and tail functionals evaluated at
full relative precision.

Conventions:

* ``tail(n)``              is  P(X > n)        (the survival function),
* ``tail_first_moment(n)`` is  E[X; X > n] = sum_{j>n} j p_j.

Named families implement both in closed form.  Infinite supports are never
silently truncated: every cutoff used for sampling tables carries a certified
bound, because the downstream tail-equivalence diagnostics are exactly about
tail behavior and truncation artifacts would corrupt them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln, zeta

from .errors import LawError, RegimeError

__all__ = [
    "CRITICALITY_TOL",
    "Criticality",
    "OffspringLaw",
    "GeometricLaw",
    "PoissonLaw",
    "PowerLawLaw",
    "ExplicitLaw",
    "CustomLaw",
    "BiasedLaw",
    "law_from_json",
    "law_to_json",
]

# Classification tolerance on the mean; named critical families (poisson(1),
# geometric(1/2)) land exactly on 1.0 in double precision, so they classify
# as critical without any fuzz.
CRITICALITY_TOL = 1e-12

# Inversion tables stop growing once the cdf reaches 1.0 in double precision;
# this cap only guards against a runaway loop on a malformed custom law.
_TABLE_CAP = 100_000_000


class Criticality(str, Enum):
    SUBCRITICAL = "sub-critical"
    CRITICAL = "critical"
    SUPERCRITICAL = "super-critical"


class OffspringLaw:
    """Common interface of all offspring-law families.

    Subclasses provide ``pmf``, ``mean``, ``tail``, ``tail_first_moment``
    and ``support_sup``; the base class derives classification, the
    size-biased law, truncated expectations and the sampling table.
    """

    family = "abstract"

    # ------------------------------------------------------------------
    # mandatory surface
    # ------------------------------------------------------------------

    def pmf(self, k: int) -> float:
        raise NotImplementedError

    @property
    def mean(self) -> float:
        raise NotImplementedError

    def tail(self, n: int) -> float:
        """P(X > n), full relative precision."""
        raise NotImplementedError

    def tail_first_moment(self, n: int) -> float:
        """E[X; X > n], full relative precision."""
        raise NotImplementedError

    @property
    def support_sup(self) -> int | None:
        """Largest k with p_k > 0, or None for unbounded support."""
        raise NotImplementedError

    # ------------------------------------------------------------------
    # derived surface
    # ------------------------------------------------------------------

    @property
    def is_bounded(self) -> bool:
        return self.support_sup is not None

    @property
    def is_unbounded(self) -> bool:
        return self.support_sup is None

    def cdf(self, n: int) -> float:
        return 1.0 - self.tail(n)

    def pmf_array(self, n: int) -> np.ndarray:
        """p_0 .. p_n as a float64 vector."""
        return np.array([self.pmf(k) for k in range(n + 1)], dtype=np.float64)

    def classify(self) -> Criticality:
        mu = self.mean
        if abs(mu - 1.0) <= CRITICALITY_TOL:
            return Criticality.CRITICAL
        if mu < 1.0:
            return Criticality.SUBCRITICAL
        return Criticality.SUPERCRITICAL

    def require(self, *allowed: Criticality, context: str = "operation") -> Criticality:
        cls = self.classify()
        if cls not in allowed:
            wanted = " or ".join(a.value for a in allowed)
            raise RegimeError(
                f"{context} requires a {wanted} offspring law; "
                f"got {cls.value} (mean {self.mean:.12g})"
            )
        return cls

    def bias(self) -> "BiasedLaw":
        """Size-biased law: mass k*p_k at each finite k, mass 1 - mean at infinity."""
        cls = self.classify()
        if cls is Criticality.SUPERCRITICAL:
            raise RegimeError(
                "size-biased law undefined for a super-critical offspring law "
                "(the atom at infinity would be negative)"
            )
        atom_inf = 0.0 if cls is Criticality.CRITICAL else 1.0 - self.mean
        return BiasedLaw(self, atom_inf)

    def partial_plus_expect(self, ell: int, k: int) -> float:
        """E[(X - ell)_+ 1_{X >= k}] = sum_{j >= max(ell+1, k)} (j - ell) p_j."""
        if ell < 0 or k < 0:
            raise LawError("ell and k must be non-negative")
        j0 = max(ell + 1, k)
        return self.tail_first_moment(j0 - 1) - ell * self.tail(j0 - 1)

    @cached_property
    def _inversion_cdf(self) -> np.ndarray:
        return self._build_inversion_cdf()

    def inversion_cdf(self) -> np.ndarray:
        """Cumulative table for inversion sampling; last entry is exactly 1.0.

        Entry k is cdf(k) = 1 - tail(k), so each atom is correct to the ulp
        and the table ends exactly where the survival function underflows
        relative to 1 (certified cutoff below double resolution).
        """
        return self._inversion_cdf

    def _build_inversion_cdf(self) -> np.ndarray:
        sup = self.support_sup
        if sup is not None:
            vals = [1.0 - self.tail(k) for k in range(sup + 1)]
            vals[-1] = 1.0  # tail(sup) == 0 analytically; pin against summation fuzz
            return np.asarray(vals, dtype=np.float64)
        size = 64
        while True:
            vals = np.array([1.0 - self.tail(k) for k in range(size)], dtype=np.float64)
            if vals[-1] == 1.0:
                stop = int(np.argmax(vals == 1.0))
                return vals[: stop + 1]
            size *= 2
            if size > _TABLE_CAP:
                raise LawError("inversion table did not saturate; tail decays too slowly")

    def to_json(self) -> dict:
        raise LawError(f"family {self.family!r} has no JSON form")

    def __repr__(self) -> str:  # pragma: no cover
        return f"{type(self).__name__}(mean={self.mean:.6g})"


# ----------------------------------------------------------------------
# named families
# ----------------------------------------------------------------------


@dataclass(frozen=True, repr=False)
class GeometricLaw(OffspringLaw):
    """p_k = (1 - a) a^k on k >= 0, with a in (0, 1); mean a / (1 - a)."""

    a: float
    family = "geometric"

    def __post_init__(self):
        if not (0.0 < self.a < 1.0):
            raise LawError(f"geometric parameter must lie in (0, 1); got {self.a}")

    def pmf(self, k: int) -> float:
        return (1.0 - self.a) * self.a**k if k >= 0 else 0.0

    @property
    def mean(self) -> float:
        return self.a / (1.0 - self.a)

    def tail(self, n: int) -> float:
        return self.a ** (n + 1)

    def tail_first_moment(self, n: int) -> float:
        # sum_{j >= J} j a^j = a^J (J (1-a) + a) / (1-a)^2 with J = n + 1
        j = n + 1
        return self.a**j * (j * (1.0 - self.a) + self.a) / (1.0 - self.a)

    @property
    def support_sup(self) -> int | None:
        return None

    def pmf_array(self, n: int) -> np.ndarray:
        return (1.0 - self.a) * self.a ** np.arange(n + 1, dtype=np.float64)

    def to_json(self) -> dict:
        return {"family": "geometric", "a": self.a}


@dataclass(frozen=True, repr=False)
class PoissonLaw(OffspringLaw):
    """p_k = e^{-lam} lam^k / k!; mean lam."""

    lam: float
    family = "poisson"

    def __post_init__(self):
        if not (self.lam > 0.0 and math.isfinite(self.lam)):
            raise LawError(f"poisson rate must be positive and finite; got {self.lam}")

    def pmf(self, k: int) -> float:
        if k < 0:
            return 0.0
        return math.exp(-self.lam + k * math.log(self.lam) - math.lgamma(k + 1))

    @property
    def mean(self) -> float:
        return self.lam

    def tail(self, n: int) -> float:
        # ascending series of positive terms from n+1; terms are eventually
        # geometric with ratio lam/m < 1, so the stop test certifies the sum
        t = self.pmf(n + 1)
        if t == 0.0:
            return 0.0
        s = t
        m = n + 1
        while True:
            m += 1
            t *= self.lam / m
            s += t
            if m > self.lam and t < s * 1e-17:
                return s

    def tail_first_moment(self, n: int) -> float:
        # j p_j = lam p_{j-1}, so E[X; X > n] = lam P(X >= n)
        return self.lam * (self.pmf(n) + self.tail(n))

    @property
    def support_sup(self) -> int | None:
        return None

    def pmf_array(self, n: int) -> np.ndarray:
        k = np.arange(n + 1, dtype=np.float64)
        return np.exp(-self.lam + k * math.log(self.lam) - gammaln(k + 1))

    def to_json(self) -> dict:
        return {"family": "poisson", "lambda": self.lam}


@dataclass(frozen=True, repr=False)
class PowerLawLaw(OffspringLaw):
    """p_k = c k^{-alpha} for k >= 1, p_0 = 1 - c zeta(alpha); needs alpha > 2."""

    c: float
    alpha: float
    family = "power-law"

    def __post_init__(self):
        if not (self.alpha > 2.0):
            raise LawError(
                f"power-law exponent must exceed 2 for a finite mean; got {self.alpha}"
            )
        if not (self.c > 0.0):
            raise LawError(f"power-law coefficient must be positive; got {self.c}")
        if self.p0 < 0.0:
            raise LawError(
                f"power-law mass at 0 is negative (c zeta(alpha) = {self.c * float(zeta(self.alpha, 1)):.6g} > 1)"
            )

    @property
    def p0(self) -> float:
        return 1.0 - self.c * float(zeta(self.alpha, 1))

    def pmf(self, k: int) -> float:
        if k < 0:
            return 0.0
        if k == 0:
            return self.p0
        return self.c * float(k) ** (-self.alpha)

    @property
    def mean(self) -> float:
        return self.c * float(zeta(self.alpha - 1.0, 1))

    def tail(self, n: int) -> float:
        return self.c * float(zeta(self.alpha, n + 1))

    def tail_first_moment(self, n: int) -> float:
        return self.c * float(zeta(self.alpha - 1.0, n + 1))

    @property
    def support_sup(self) -> int | None:
        return None

    def pmf_array(self, n: int) -> np.ndarray:
        out = np.empty(n + 1, dtype=np.float64)
        out[0] = self.p0
        if n >= 1:
            k = np.arange(1, n + 1, dtype=np.float64)
            out[1:] = self.c * k ** (-self.alpha)
        return out

    def _build_inversion_cdf(self) -> np.ndarray:
        # vectorized Hurwitz-zeta tails; the scalar loop of the base class
        # would issue ~1e4 scipy calls for alpha near 2
        size = 64
        while True:
            ks = np.arange(size, dtype=np.float64)
            vals = 1.0 - self.c * zeta(self.alpha, ks + 1.0)
            if vals[-1] == 1.0:
                stop = int(np.argmax(vals == 1.0))
                return np.ascontiguousarray(vals[: stop + 1])
            size *= 2
            if size > _TABLE_CAP:
                raise LawError("inversion table did not saturate; tail decays too slowly")

    def to_json(self) -> dict:
        return {"family": "power-law", "c": self.c, "alpha": self.alpha}


class ExplicitLaw(OffspringLaw):
    """Finite-support law given by an explicit pmf vector."""

    family = "explicit"

    def __init__(self, probs: Sequence[float]):
        probs = [float(p) for p in probs]
        if not probs:
            raise LawError("explicit pmf must be non-empty")
        for k, p in enumerate(probs):
            if not (p >= 0.0) or not math.isfinite(p):
                raise LawError(f"explicit pmf entry p_{k} = {p} is invalid")
        total = math.fsum(probs)
        if abs(total - 1.0) > 1e-12:
            raise LawError(f"explicit pmf sums to {total!r}, not 1 (tolerance 1e-12)")
        while len(probs) > 1 and probs[-1] == 0.0:
            probs.pop()
        self._probs = tuple(probs)
        self._sup = len(probs) - 1
        n = len(probs)
        # suffix sums from the right keep full relative precision in the tail
        self._suffix = [math.fsum(probs[k:]) for k in range(n)] + [0.0]
        self._suffix_m = [math.fsum(j * probs[j] for j in range(k, n)) for k in range(n)] + [0.0]
        mu = self._suffix_m[0]
        if not (mu > 0.0):
            raise LawError("explicit pmf has zero mean (point mass at 0), violating 0 < mean")

    @property
    def probs(self) -> tuple:
        return self._probs

    def pmf(self, k: int) -> float:
        if 0 <= k <= self._sup:
            return self._probs[k]
        return 0.0

    @property
    def mean(self) -> float:
        return self._suffix_m[0]

    def tail(self, n: int) -> float:
        if n < 0:
            return 1.0
        if n >= self._sup:
            return 0.0
        return self._suffix[n + 1]

    def tail_first_moment(self, n: int) -> float:
        if n < 0:
            return self.mean
        if n >= self._sup:
            return 0.0
        return self._suffix_m[n + 1]

    @property
    def support_sup(self) -> int | None:
        return self._sup

    def pmf_array(self, n: int) -> np.ndarray:
        out = np.zeros(n + 1, dtype=np.float64)
        upto = min(n, self._sup)
        out[: upto + 1] = self._probs[: upto + 1]
        return out

    def to_json(self) -> dict:
        return {"family": "explicit", "pmf": list(self._probs)}

    def __repr__(self) -> str:  # pragma: no cover
        return f"ExplicitLaw({list(self._probs)!r})"


class CustomLaw(OffspringLaw):
    """Law given by a pmf callable.

    Finite support: pass ``support_sup`` and everything is derived by exact
    summation.  Unbounded support: ``mean``, ``tail`` and
    ``tail_first_moment`` callables must be supplied by the caller (with
    certified accuracy); a remainder bound for the first moment cannot be
    derived from finitely many pmf evaluations alone.
    """

    family = "custom"

    def __init__(
        self,
        pmf: Callable[[int], float],
        *,
        support_sup: int | None = None,
        mean: float | None = None,
        tail: Callable[[int], float] | None = None,
        tail_first_moment: Callable[[int], float] | None = None,
    ):
        self._pmf = pmf
        if support_sup is not None:
            inner = ExplicitLaw([pmf(k) for k in range(support_sup + 1)])
            self._inner: OffspringLaw | None = inner
            return
        self._inner = None
        if mean is None or tail is None or tail_first_moment is None:
            raise LawError(
                "unbounded custom law requires mean, tail and tail_first_moment "
                "callables (certified summation cannot bound the remainders)"
            )
        self._mean = float(mean)
        if not (self._mean > 0.0 and math.isfinite(self._mean)):
            raise LawError(f"custom law mean must be positive and finite; got {mean}")
        self._tail = tail
        self._tfm = tail_first_moment
        # cheap self-consistency probe of the supplied closed forms
        head = math.fsum(pmf(k) for k in range(65))
        if abs(head + tail(64) - 1.0) > 1e-10:
            raise LawError("custom pmf and tail are inconsistent (partial sum + tail != 1)")

    def pmf(self, k: int) -> float:
        if self._inner is not None:
            return self._inner.pmf(k)
        return float(self._pmf(k)) if k >= 0 else 0.0

    @property
    def mean(self) -> float:
        return self._inner.mean if self._inner is not None else self._mean

    def tail(self, n: int) -> float:
        return self._inner.tail(n) if self._inner is not None else float(self._tail(n))

    def tail_first_moment(self, n: int) -> float:
        if self._inner is not None:
            return self._inner.tail_first_moment(n)
        return float(self._tfm(n))

    @property
    def support_sup(self) -> int | None:
        return self._inner.support_sup if self._inner is not None else None


# ----------------------------------------------------------------------
# size-biased law
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class BiasedLaw:
    """Size-biased offspring law on N union {infinity}.

    atom(k) = k p_k for finite k, atom at infinity = 1 - mean (exactly 0 for
    critical laws by construction).  Sampling uses inversion over the finite
    atoms with a lazily grown table, so heavy tails need no giant upfront
    cutoff; a uniform beyond the finite mass maps to infinity.
    """

    base: OffspringLaw
    atom_inf: float
    _cum: list = field(default_factory=list, repr=False, compare=False)

    def atom(self, k: int) -> float:
        if k < 0:
            raise LawError("atom index must be non-negative")
        return k * self.base.pmf(k)

    def atoms_array(self, n: int) -> np.ndarray:
        return np.arange(n + 1, dtype=np.float64) * self.base.pmf_array(n)

    @property
    def finite_mass(self) -> float:
        return 1.0 - self.atom_inf

    def sample(self, generator: np.random.Generator) -> int | float:
        """One draw; returns an int k >= 1 or math.inf."""
        u = generator.random()
        if u >= self.finite_mass:
            return math.inf
        cum = self._cum
        if not cum:
            cum.append(self.atom(1))
        sup = self.base.support_sup
        while u >= cum[-1]:
            k = len(cum) + 1
            if sup is not None and k > sup:
                return sup  # float defect between fsum'd mass and closed cum
            nxt = cum[-1] + self.atom(k)
            if nxt == cum[-1] and k > 1_000_000:
                return len(cum)  # table plateaued below u at the ulp level
            cum.append(nxt)
        # first index with cum[i] > u; atom k = i + 1
        lo, hi = 0, len(cum)
        while lo < hi:
            mid = (lo + hi) // 2
            if cum[mid] <= u:
                lo = mid + 1
            else:
                hi = mid
        return lo + 1


# ----------------------------------------------------------------------
# JSON forms
# ----------------------------------------------------------------------


def law_to_json(law: OffspringLaw) -> dict:
    return law.to_json()


def law_from_json(spec: dict) -> OffspringLaw:
    """Build a law from its JSON form, e.g. {"family": "geometric", "a": 0.33}."""
    if not isinstance(spec, dict) or "family" not in spec:
        raise LawError("law spec must be an object with a 'family' key")
    family = spec["family"]
    try:
        if family == "geometric":
            return GeometricLaw(float(spec["a"]))
        if family == "poisson":
            return PoissonLaw(float(spec.get("lambda", spec.get("lam"))))
        if family == "power-law":
            return PowerLawLaw(float(spec["c"]), float(spec["alpha"]))
        if family == "explicit":
            return ExplicitLaw(spec["pmf"])
    except (KeyError, TypeError) as exc:
        raise LawError(f"malformed parameters for family {family!r}: {exc}") from exc
    raise LawError(f"unknown law family {family!r}")
