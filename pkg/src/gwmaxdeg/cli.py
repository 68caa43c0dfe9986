"""Command-line interface: maxdeg, sample, oracle and verify subcommands.

Exit codes: 0 success (and PASS verdicts), 1 verification FAIL, 2 invalid
input (malformed law, wrong regime, null-event conditioning, bad flags).
Diagnostics go to stderr; data goes to --out or stdout.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import convergence, oracle
from .errors import GWError, LawError, NullEventError
from .maxdeg import MaxDegTable, theorem_tail_report
from .offspring import Criticality, OffspringLaw, law_from_json
from .sampler import (
    BATCH_CHUNK,
    SampleConfig,
    sample_conditioned_eq,
    sample_conditioned_gt,
    sample_conditioned_le,
    sample_gw,
    sample_limit_tree,
)
from .trees import FiniteTree, GraftEvent, GraftKind

DEFAULT_SEED_ENV = "GWMAXDEG_SEED"


def _load_law(spec: str) -> OffspringLaw:
    text = spec.strip()
    if not text.startswith("{"):
        try:
            with open(text, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise LawError(f"cannot read law spec {spec!r}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LawError(f"law spec is not valid JSON: {exc}") from exc
    return law_from_json(obj)


def _default_seed() -> int:
    raw = os.environ.get(DEFAULT_SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError as exc:
        raise LawError(f"{DEFAULT_SEED_ENV} must be an integer, got {raw!r}") from exc


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _parse_event(obj: dict) -> GraftEvent:
    try:
        tree = FiniteTree.from_json(obj["tree"])
        site = tuple(obj.get("site", []))
        kind = obj.get("kind", "leaf-graft")
        if kind in ("leaf-graft", "leaf"):
            return GraftEvent(GraftKind.LEAF_GRAFT, tree, site)
        if kind in ("right-graft-plus", "right+"):
            return GraftEvent(GraftKind.RIGHT_GRAFT_PLUS, tree, site, int(obj.get("k", 0)))
    except KeyError as exc:
        raise LawError(f"event spec missing key {exc}") from exc
    raise LawError(f"unknown event kind {obj.get('kind')!r}")


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------


def _cmd_maxdeg(args) -> int:
    law = _load_law(args.law)
    report = theorem_tail_report(law, args.n_max)
    if not report.applies:
        print(
            "note: law is not sub-critical; tail-equivalence limits do not apply, "
            "numbers are reported as-is",
            file=sys.stderr,
        )
    fh, close = _open_out(args.out)
    try:
        report.to_csv(fh)
    finally:
        if close:
            fh.close()
    return 0


def _sample_chunk(payload) -> tuple:
    """One chunk of draws (top-level so process pools can pickle it).

    Each chunk owns the derived stream (seed, stream, chunk_index), so the
    output is a function of the chunk split only, never of the worker count.
    """
    law_json, mode, n, cfg, chunk_index, size = payload
    law = law_from_json(law_json)
    cfg = SampleConfig(**cfg)
    gen = cfg.generator(chunk_index)
    table = MaxDegTable(law, n) if mode in ("le", "eq", "gt") else None
    lines = []
    trials = 0
    for _ in range(size):
        if mode == "gw":
            obj = sample_gw(law, cfg, generator=gen).to_json()
        elif mode == "le":
            obj = sample_conditioned_le(law, n, cfg, table, generator=gen).to_json()
        elif mode == "eq":
            draw = sample_conditioned_eq(law, n, cfg, table, generator=gen)
            trials += draw.trials
            obj = draw.tree.to_json()
        elif mode == "gt":
            draw = sample_conditioned_gt(law, n, cfg, table, generator=gen)
            trials += draw.trials
            obj = draw.tree.to_json()
        else:  # limit
            pt = sample_limit_tree(law, cfg, generator=gen)
            obj = {
                "tree": pt.to_json(),
                "special_path": [list(p) for p in pt.special_path],
                "infinite_vertex": (
                    None if pt.infinite_vertex is None else list(pt.infinite_vertex)
                ),
            }
        lines.append(json.dumps(obj, separators=(",", ":")))
    return lines, trials


def _cmd_sample(args) -> int:
    law = _load_law(args.law)
    cfg = SampleConfig(
        seed=args.seed,
        stream=args.stream,
        vertex_budget=args.budget,
        depth=args.depth,
        width=args.width,
    )
    if args.mode in ("le", "eq", "gt") and args.n is None:
        raise LawError(f"mode {args.mode!r} needs --n")
    if args.mode in ("le", "eq", "gt"):
        MaxDegTable(law, args.n)  # validate law/level before touching the filesystem
        if args.mode == "eq" and law.pmf(args.n) == 0.0:
            raise NullEventError(
                f"p_{args.n} = 0, so q_{args.n} = 0: conditioning on "
                f"{{M = {args.n}}} is a null event"
            )
        sup = law.support_sup
        if args.mode == "gt" and sup is not None and args.n >= sup:
            raise NullEventError(
                "bounded offspring law: conditioning on a maximal out-degree "
                f"above the support (sup = {sup}) is a null event"
            )
    law_json = law.to_json()
    cfg_dict = dict(
        seed=cfg.seed,
        stream=cfg.stream,
        vertex_budget=cfg.vertex_budget,
        depth=cfg.depth,
        width=cfg.width,
    )
    chunks = []
    index = 0
    remaining = args.count
    while remaining > 0:
        size = min(BATCH_CHUNK, remaining)
        chunks.append((law_json, args.mode, args.n, cfg_dict, index, size))
        index += 1
        remaining -= size
    if args.threads > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            results = list(pool.map(_sample_chunk, chunks))
    else:
        results = [_sample_chunk(c) for c in chunks]
    fh, close = _open_out(args.out)
    trials_total = 0
    try:
        for lines, trials in results:
            trials_total += trials
            for line in lines:
                fh.write(line + "\n")
    finally:
        if close:
            fh.close()
    if args.mode in ("eq", "gt") and args.count:
        print(
            f"{args.count} draws, {trials_total} rejection trials "
            f"({trials_total / args.count:.2f} per draw)",
            file=sys.stderr,
        )
    return 0


def _cmd_oracle(args) -> int:
    law = _load_law(args.law)
    out: dict = {"law": law.to_json(), "max_vertices": args.max_vertices}
    if args.event is None:
        bound = oracle.exact_event_prob(law, lambda t: True, args.max_vertices)
        out["enumeration"] = {
            "event": "all trees",
            "lower": bound.lower,
            "mass_gap": "unbounded" if math.isinf(bound.mass_gap) else bound.mass_gap,
        }
    else:
        spec = json.loads(args.event)
        event = _parse_event(spec)
        bound = oracle.exact_event_prob(
            law, event.contains, args.max_vertices, max_degree=args.max_degree
        )
        out["event"] = spec
        out["enumeration"] = {
            "lower": bound.lower,
            "mass_gap": "unbounded" if math.isinf(bound.mass_gap) else bound.mass_gap,
        }
        cls = law.classify()
        if event.kind is GraftKind.LEAF_GRAFT and cls is Criticality.CRITICAL:
            out["limit"] = oracle.limit_graft_prob(law, event.base, event.site)
        elif event.kind is GraftKind.RIGHT_GRAFT_PLUS and cls is Criticality.SUBCRITICAL:
            out["limit"] = oracle.limit_graft_plus_prob(law, event.base, event.site, event.k)
        if spec.get("n") is not None:
            n = int(spec["n"])
            table = MaxDegTable(law, n)
            if event.kind is GraftKind.LEAF_GRAFT:
                value, gap = oracle.exact_conditioned_graft(
                    law, event.base, event.site, n, table
                )
                out["conditioned"] = {"n": n, "value": value, "mass_gap": gap}
            else:
                value = oracle.exact_conditioned_graft_plus(
                    law, event.base, event.site, event.k, n, table
                )
                out["conditioned"] = {"n": n, "value": value, "mass_gap": 0.0}
    fh, close = _open_out(args.out)
    try:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")
    finally:
        if close:
            fh.close()
    return 0


def _cmd_verify(args) -> int:
    law = _load_law(args.law)
    n_values = list(range(args.n_min, args.n_max + 1))
    mc_levels = []
    if args.mc_at:
        mc_levels = [int(x) for x in args.mc_at.split(",") if x.strip()]
    kw = dict(
        seed=args.seed,
        tolerance=args.tolerance,
        mc_n_values=mc_levels,
        mc_samples=args.mc_samples,
        threads=args.threads,
    )
    if args.probes:
        with open(args.probes, "r", encoding="utf-8") as fh:
            probe_specs = json.load(fh)
        probes = [convergence.Probe(_parse_event(p)) for p in probe_specs]
        suite = convergence.ProbeSuite(law=law, probes=probes, n_values=n_values, **kw)
    elif args.regime == "critical":
        suite = convergence.default_critical_suite(law, n_values, **kw)
    else:
        suite = convergence.default_subcritical_suite(law, n_values, **kw)
    if args.regime == "critical":
        report = convergence.run_critical_check(suite)
    else:
        report = convergence.run_subcritical_check(suite)
    fh, close = _open_out(args.out)
    try:
        convergence.emit_report(report, args.format, fh)
    finally:
        if close:
            fh.close()
    print(f"verdict: {report.verdict}", file=sys.stderr)
    return 0 if report.verdict in ("PASS", "NO PROBES") else 1


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gwmaxdeg",
        description=(
            "Maximal out-degree of Galton-Watson trees: exact laws, "
            "conditioned samplers, and local-limit verification."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_law(p):
        p.add_argument("--law", required=True, help="offspring law: inline JSON or a file path")

    p = sub.add_parser("maxdeg", help="tail-equivalence report for the max-out-degree law")
    add_law(p)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--out", default=None, help="CSV output path (default stdout)")
    p.set_defaults(func=_cmd_maxdeg)

    p = sub.add_parser("sample", help="draw trees (plain, conditioned, or limit)")
    add_law(p)
    p.add_argument("--mode", choices=["gw", "le", "eq", "gt", "limit"], required=True)
    p.add_argument("--n", type=int, default=None, help="conditioning level for le/eq/gt")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--budget", type=int, default=1_000_000, help="vertex budget per tree")
    p.add_argument("--depth", type=int, default=12, help="truncation depth (limit mode)")
    p.add_argument("--width", type=int, default=8, help="children kept at an infinite vertex")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None, help="JSONL output path (default stdout)")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("oracle", help="exact enumeration bounds and limit values")
    add_law(p)
    p.add_argument("--max-vertices", type=int, required=True)
    p.add_argument("--max-degree", type=int, default=None)
    p.add_argument("--event", default=None, help="JSON graft-event probe")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("verify", help="run the local-limit verification harness")
    add_law(p)
    p.add_argument("--regime", choices=["critical", "subcritical"], required=True)
    p.add_argument("--probes", default=None, help="JSON file with probe events")
    p.add_argument("--n-min", type=int, required=True)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--tolerance", type=float, default=convergence.DEFAULT_TOLERANCE)
    p.add_argument("--mc-at", default="", help="comma-separated levels for MC cross-checks")
    p.add_argument("--mc-samples", type=int, default=convergence.DEFAULT_MC_SAMPLES)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "seed") and args.seed is None:
        args.seed = _default_seed()
    try:
        return args.func(args)
    except GWError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
