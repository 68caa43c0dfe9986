"""Verification harness for the local limits of conditioned GW trees.

Two runners:

* ``run_critical_check``: critical laws, leaf-graft probes.  The exact
  conditional graft probability is constant in the conditioning level n
  (an identity, not just a limit) and equals the spine-tree value; Monte
  Carlo rows cross-check selected levels; point rows verify that
  P(tree = t | M = n) vanishes for n above t's maximum.

* ``run_subcritical_check``: sub-critical laws, right-graft probes with an
  offspring threshold.  The exact conditional values converge to the
  condensation-tree value; the verdict demands the gap at the largest level
  be below tolerance and below the gap at the smallest level.

Reports are deterministic (fixed probe order, seeds derived from the suite
seed and the level) and serialize to CSV or JSON byte-identically across
runs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from . import oracle
from .errors import RegimeError
from .maxdeg import MaxDegTable
from .offspring import Criticality, OffspringLaw, law_to_json
from .sampler import SampleConfig, sample_eq_batch
from .trees import FiniteTree, GraftEvent, GraftKind

__all__ = [
    "Probe",
    "ProbeSuite",
    "Row",
    "Report",
    "default_probe_trees",
    "default_critical_suite",
    "default_subcritical_suite",
    "run_critical_check",
    "run_subcritical_check",
    "emit_report",
]

DEFAULT_TOLERANCE = 1e-3
EXACT_MATCH_TOL = 1e-10
DEFAULT_MC_SAMPLES = 200_000


@dataclass(frozen=True)
class Probe:
    event: GraftEvent

    @property
    def id(self) -> str:
        return self.event.probe_id()


@dataclass
class ProbeSuite:
    """A batch of graft probes evaluated along a range of conditioning levels."""

    law: OffspringLaw
    probes: list
    n_values: list
    seed: int = 0
    tolerance: float = DEFAULT_TOLERANCE
    mc_n_values: list = field(default_factory=list)
    mc_samples: int = DEFAULT_MC_SAMPLES
    threads: int = 1
    vertex_budget: int = 1_000_000

    def __post_init__(self):
        self.n_values = sorted({int(n) for n in self.n_values})
        self.mc_n_values = sorted({int(n) for n in self.mc_n_values})
        if not self.n_values:
            return
        for n in self.mc_n_values:
            if n not in self.n_values:
                raise ValueError("Monte Carlo levels must be among the probed levels")


@dataclass(frozen=True)
class Row:
    probe_id: str
    n: int | None
    method: str  # "exact" | "mc" | "point" | "skip"
    estimate: float | None
    ci_low: float | None
    ci_high: float | None
    limit: float | None
    gap: float | None
    passed: bool | None  # None for informational/skip rows


@dataclass
class Report:
    regime: str
    law: dict
    tolerance: float
    rows: list
    verdict: str
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"


def default_probe_trees() -> list:
    """Five small fixtures: singleton, root+1, root+2, 3-path, root->child->2."""
    return [
        FiniteTree((0,)),
        FiniteTree((1, 0)),
        FiniteTree((2, 0, 0)),
        FiniteTree((1, 1, 0)),
        FiniteTree((1, 2, 0, 0)),
    ]


def default_critical_suite(law: OffspringLaw, n_values, **kw) -> ProbeSuite:
    probes = [
        Probe(GraftEvent(GraftKind.LEAF_GRAFT, t, x))
        for t in default_probe_trees()
        for x in t.leaves()
    ]
    return ProbeSuite(law=law, probes=probes, n_values=list(n_values), **kw)


def default_subcritical_suite(law: OffspringLaw, n_values, ks=(0, 2, 5), **kw) -> ProbeSuite:
    probes = [
        Probe(GraftEvent(GraftKind.RIGHT_GRAFT_PLUS, t, x, k))
        for t in default_probe_trees()
        for x in t.leaves()
        for k in ks
    ]
    return ProbeSuite(law=law, probes=probes, n_values=list(n_values), **kw)


def _usable_levels(law: OffspringLaw, suite: ProbeSuite, probe: Probe) -> list:
    m = probe.event.base.max_out_degree
    return [n for n in suite.n_values if n > m and law.pmf(n) > 0.0]


def _mc_batches(suite: ProbeSuite, table: MaxDegTable) -> dict:
    """One shared sample batch per Monte Carlo level (seeded by the level)."""
    out = {}
    for n in suite.mc_n_values:
        if suite.law.pmf(n) == 0.0:
            continue
        cfg = SampleConfig(
            seed=suite.seed, stream=n, vertex_budget=suite.vertex_budget
        )
        batch = sample_eq_batch(
            suite.law, n, suite.mc_samples, cfg, table, threads=suite.threads
        )
        out[n] = [tuple(int(d) for d in arr) for arr in batch.degree_arrays]
    return out


def _mc_row(probe: Probe, n: int, samples, reference: float, limit: float) -> Row:
    hits = sum(1 for deg in samples if probe.event.contains(deg))
    count = len(samples)
    est = hits / count
    se_emp = math.sqrt(max(est * (1.0 - est), 0.0) / count)
    se_ref = math.sqrt(max(reference * (1.0 - reference), 0.0) / count)
    covered = abs(est - reference) <= 3.0 * se_ref + 1e-12
    return Row(
        probe_id=probe.id,
        n=n,
        method="mc",
        estimate=est,
        ci_low=est - 3.0 * se_emp,
        ci_high=est + 3.0 * se_emp,
        limit=limit,
        gap=abs(est - reference),
        passed=covered,
    )


def run_critical_check(suite: ProbeSuite) -> Report:
    """Evaluate leaf-graft probes against the spine-tree values (critical law)."""
    law = suite.law
    law.require(Criticality.CRITICAL, context="critical-limit check")
    if law.is_bounded:
        raise RegimeError(
            "critical-limit check needs an unbounded offspring law "
            "(bounded laws admit no arbitrarily large maximal out-degree)"
        )
    for probe in suite.probes:
        if probe.event.kind is not GraftKind.LEAF_GRAFT:
            raise RegimeError("critical-limit probes must be leaf-graft events")
    table = MaxDegTable(law, max(suite.n_values, default=0))
    batches = _mc_batches(suite, table)
    rows: list = []
    notes: list = []
    for probe in suite.probes:
        t, x = probe.event.base, probe.event.site
        limit = oracle.limit_graft_prob(law, t, x)
        levels = _usable_levels(law, suite, probe)
        for n in suite.n_values:
            if n not in levels:
                rows.append(Row(probe.id, n, "skip", None, None, None, limit, None, None))
                notes.append(f"{probe.id}: level {n} skipped (needs n > M(t) and p_n > 0)")
                continue
            value, _ = oracle.exact_conditioned_graft(law, t, x, n, table)
            gap = abs(value - limit)
            rows.append(Row(probe.id, n, "exact", value, None, None, limit, gap, gap <= EXACT_MATCH_TOL))
        for n in suite.mc_n_values:
            if n in levels and n in batches:
                rows.append(_mc_row(probe, n, batches[n], limit, limit))
        # point check: conditioned on a level above M(t), the probability of
        # drawing exactly t is zero (the maximum would be wrong)
        above = [n for n in levels if n > t.max_out_degree]
        if above:
            n = above[-1]
            exact_zero = t.weight(law) if t.max_out_degree == n else 0.0
            ok = exact_zero == 0.0
            if n in batches:
                ok = ok and not any(deg == t.degrees for deg in batches[n])
            rows.append(Row(probe.id, n, "point", exact_zero, None, None, 0.0, exact_zero, ok))
    return _finish(suite, rows, notes, "critical")


def run_subcritical_check(suite: ProbeSuite) -> Report:
    """Evaluate right-graft probes against the condensation values (sub-critical law)."""
    law = suite.law
    law.require(Criticality.SUBCRITICAL, context="sub-critical-limit check")
    if law.is_bounded:
        raise RegimeError(
            "bounded offspring law: conditioning on large maximal out-degree "
            "is a null event, no limit check is possible"
        )
    for probe in suite.probes:
        if probe.event.kind is not GraftKind.RIGHT_GRAFT_PLUS:
            raise RegimeError("sub-critical-limit probes must be right-graft events")
    table = MaxDegTable(law, max(suite.n_values, default=0))
    batches = _mc_batches(suite, table)
    rows: list = []
    notes: list = []
    for probe in suite.probes:
        ev = probe.event
        t, x, k = ev.base, ev.site, ev.k
        limit = oracle.limit_graft_plus_prob(law, t, x, k)
        levels = _usable_levels(law, suite, probe)
        gaps: dict = {}
        for n in suite.n_values:
            if n not in levels:
                rows.append(Row(probe.id, n, "skip", None, None, None, limit, None, None))
                notes.append(f"{probe.id}: level {n} skipped (needs n > M(t) and p_n > 0)")
                continue
            value = oracle.exact_conditioned_graft_plus(law, t, x, k, n, table)
            gaps[n] = abs(value - limit)
            rows.append(Row(probe.id, n, "exact", value, None, None, limit, gaps[n], None))
        if gaps:
            n_lo, n_hi = min(gaps), max(gaps)
            converged = gaps[n_hi] <= suite.tolerance and (
                n_lo == n_hi or gaps[n_hi] <= gaps[n_lo]
            )
            for i, row in enumerate(rows):
                if row.probe_id == probe.id and row.method == "exact" and row.passed is None:
                    rows[i] = Row(
                        row.probe_id, row.n, row.method, row.estimate,
                        None, None, row.limit, row.gap,
                        converged if row.n == n_hi else True,
                    )
        for n in suite.mc_n_values:
            if n in levels and n in batches:
                reference = oracle.exact_conditioned_graft_plus(law, t, x, k, n, table)
                rows.append(_mc_row(probe, n, batches[n], reference, limit))
    return _finish(suite, rows, notes, "subcritical")


def _finish(suite: ProbeSuite, rows: list, notes: list, regime: str) -> Report:
    checked = [r for r in rows if r.passed is not None]
    if not suite.probes:
        verdict = "NO PROBES"
    elif all(r.passed for r in checked):
        verdict = "PASS"
    else:
        verdict = "FAIL"
    return Report(
        regime=regime,
        law=law_to_json(suite.law),
        tolerance=suite.tolerance,
        rows=rows,
        verdict=verdict,
        notes=notes,
    )


# ----------------------------------------------------------------------
# serialization
# ----------------------------------------------------------------------

_CSV_HEADER = "probe_id,n,method,estimate,ci_low,ci_high,limit,gap,verdict\n"


def _cell(x) -> str:
    if x is None:
        return ""
    return repr(x)


def _row_verdict(r: Row) -> str:
    if r.passed is None:
        return "SKIP" if r.method == "skip" else "INFO"
    return "PASS" if r.passed else "FAIL"


def emit_report(report: Report, fmt: str, fh) -> None:
    """Write the report as CSV or JSON (deterministic bytes)."""
    if fmt == "csv":
        fh.write(_CSV_HEADER)
        for r in report.rows:
            fh.write(
                ",".join(
                    [
                        r.probe_id,
                        "" if r.n is None else str(r.n),
                        r.method,
                        _cell(r.estimate),
                        _cell(r.ci_low),
                        _cell(r.ci_high),
                        _cell(r.limit),
                        _cell(r.gap),
                        _row_verdict(r),
                    ]
                )
                + "\n"
            )
        fh.write(f"# verdict: {report.verdict}\n")
        return
    if fmt == "json":
        payload = {
            "regime": report.regime,
            "law": report.law,
            "tolerance": report.tolerance,
            "verdict": report.verdict,
            "rows": [
                {
                    "probe_id": r.probe_id,
                    "n": r.n,
                    "method": r.method,
                    "estimate": r.estimate,
                    "ci_low": r.ci_low,
                    "ci_high": r.ci_high,
                    "limit": r.limit,
                    "gap": r.gap,
                    "verdict": _row_verdict(r),
                }
                for r in report.rows
            ],
            "notes": report.notes,
        }
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
        return
    raise ValueError(f"unknown report format {fmt!r}")
