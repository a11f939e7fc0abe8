"""Command-line front end.

Exit codes: 0 claim verified, 1 claim not verified, 2 usage error.
Every JSON document starts with the fully resolved configuration.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _fraction(s: str) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {s}") from exc


def _k_range(s: str) -> range:
    lo, _, hi = s.partition(":")
    try:
        lo_i, hi_i = int(lo), int(hi)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("expected LO:HI") from exc
    if lo_i < 1 or hi_i < lo_i:
        raise argparse.ArgumentTypeError("need 1 <= LO <= HI")
    return range(lo_i, hi_i + 1)


def _shift_list(s: str) -> list[int]:
    try:
        return [int(v) for v in s.replace(" ", "").split(",") if v]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s}") from exc


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # subcommands repeat the global flags; their defaults are suppressed so a
    # value given before the subcommand is not overwritten
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--seed", type=int, default=d(0), help="seed for all random streams (default 0)")
    g.add_argument("--format", choices=("json", "csv"), default=d("json"))
    g.add_argument("--out", type=Path, default=d(None), help="write output here instead of stdout")
    g.add_argument("--threads", type=_positive_int, default=d(1),
                   help="worker cap for the multiprecision backend; results do not depend on it")
    g.add_argument("-v", "--verbose", action="store_true", default=d(False))
    return g


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(suppress=True)
    p = _Parser(prog="primegaps", description="Sieve certificates, admissible tuples and prime-gap experiments.",
                parents=[_global_flags(suppress=False)])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    o = sub.add_parser("optimize", parents=[common], help="certify sum J / I > target on a symmetric basis")
    o.add_argument("--k", type=int, help="dimension; omit when --k-range is given")
    o.add_argument("--k-range", type=_k_range, help="LO:HI, return the smallest certified k")
    o.add_argument("--family", default="even", help="basis family: even (default), p1p2, p1p2p3")
    o.add_argument("--max-degree", type=int, default=23)
    o.add_argument("--target", type=_fraction, default=Fraction(4))
    o.add_argument("--tolerance", type=float, default=1e-12)

    pl = sub.add_parser("pipeline", parents=[common], help="theta -> k -> admissible tuple -> gap bound")
    pl.add_argument("--theta", type=_fraction, default=Fraction(1, 2))
    pl.add_argument("--k-range", type=_k_range, default=None)
    pl.add_argument("--family", default="even")
    pl.add_argument("--max-degree", type=int, default=23)
    pl.add_argument("--tuple-budget", type=int, default=2000)

    t = sub.add_parser("tuple", parents=[common], help="admissible tuples")
    tsub = t.add_subparsers(dest="action", required=True, parser_class=_Parser)
    tv = tsub.add_parser("verify", parents=[common])
    tv.add_argument("shifts", nargs="?", type=_shift_list, help="comma-separated shifts")
    tv.add_argument("--file", type=Path, help="JSON file: an array or an object with a 'shifts' array")
    tv.add_argument("--stored", type=int, choices=(54,), help="verify a tuple shipped with the package")
    ts = tsub.add_parser("search", parents=[common])
    ts.add_argument("--k", type=int, required=True)
    ts.add_argument("--budget", type=int, default=2000)
    tp = tsub.add_parser("shifted-primes", parents=[common])
    tp.add_argument("--k", type=int, required=True)

    c = sub.add_parser("cover", parents=[common], help="residue-class covers of [1, y] by primes <= x")
    c.add_argument("--strategy", default="erdos-rankin",
                   choices=("trivial", "erdos-rankin", "greedy-only", "random-weighted"))
    c.add_argument("--x", type=int, required=True)
    c.add_argument("--y", default="auto", help="interval length or 'auto' for the largest covered y")
    c.add_argument("--z", default="auto", help="small/medium threshold or 'auto'")
    c.add_argument("--budget", type=int, default=64, help="verification probes for --y auto")
    c.add_argument("--emit-witness", action="store_true", help="include the CRT gap witness")

    g = sub.add_parser("gaps", parents=[common], help="empirical prime-gap statistics")
    gsub = g.add_subparsers(dest="action", required=True, parser_class=_Parser)
    gs = gsub.add_parser("scan", parents=[common])
    gs.add_argument("--limit", type=int, default=10**6)
    gs.add_argument("--check", action="store_true", help="also run the independent second scan and compare")
    gc = gsub.add_parser("curves", parents=[common])
    gc.add_argument("--limit", type=int, default=10**6)
    gc.add_argument("--step", type=int, default=10**5)
    gi = gsub.add_parser("intervals", parents=[common])
    gi.add_argument("--X", type=int, default=10**6)
    gi.add_argument("--y", type=int, default=100)
    gi.add_argument("--c", type=float, default=1.0)
    gp = gsub.add_parser("count", parents=[common])
    gp.add_argument("--limit", type=int, default=10**6)

    e = sub.add_parser("expect", parents=[common], help="expected prime count and guaranteed primes")
    e.add_argument("--ratio", type=_fraction, required=True)
    e.add_argument("--theta", type=_fraction, required=True)
    e.add_argument("--k", type=int, default=1)

    cc = sub.add_parser("concentrate", parents=[common], help="moments and Monte Carlo for the product choice")
    cc.add_argument("--k", type=int, nargs="+", default=[50, 100, 1000])
    cc.add_argument("--samples", type=int, default=20000)
    cc.add_argument("--threshold", type=float, default=0.5)

    w = sub.add_parser("weights", parents=[common], help="direct sieve-weight evaluation for small k")
    w.add_argument("--shifts", type=_shift_list, required=True)
    w.add_argument("--R", type=float, required=True)
    w.add_argument("--X", type=int, required=True)
    w.add_argument("--ell", type=int, default=0, help="F~ = (1 - P1)^ell")
    return p


# ---------------------------------------------------------------- commands

def cmd_optimize(a) -> tuple[dict, int, list | None]:
    from .optimizer import SearchExhausted, family_forms, min_k_certify, solve_ratio
    from .simplex import FAMILIES

    if a.family not in FAMILIES:
        raise UsageError(f"unknown family {a.family!r}; choose from {sorted(FAMILIES)}")
    if a.max_degree < 0:
        raise UsageError("--max-degree must be >= 0")
    if a.k_range is not None:
        try:
            res = min_k_certify(a.target, a.k_range, family=a.family, max_degree=a.max_degree,
                                tolerance=a.tolerance)
        except SearchExhausted as exc:
            return {"success": False, "rejected": {str(k): f"{v:.12f}" for k, v in exc.rejected.items()}}, EXIT_FAIL, None
        doc = res.to_json()
        doc["success"] = True
        return doc, EXIT_OK, None
    if a.k is None or a.k < 1:
        raise UsageError("--k must be a positive integer")
    forms = family_forms(a.k, a.family, a.max_degree)
    cert = solve_ratio(forms, tolerance=a.tolerance, target=a.target)
    ok = cert.exceeds_target and cert.verify()
    doc = cert.to_json()
    doc["verified"] = ok
    rows = [{"degree": d, "lambda": v} for d, v in sorted(cert.degree_profile.items())]
    return doc, EXIT_OK if ok else EXIT_FAIL, rows


def cmd_pipeline(a):
    from .tuples import gap_bound_pipeline

    if not 0 < a.theta <= 1:
        raise UsageError("--theta must lie in (0, 1]")
    res = gap_bound_pipeline(a.theta, k_range=a.k_range, family=a.family, max_degree=a.max_degree,
                             tuple_budget=a.tuple_budget)
    doc = res.to_json()
    if res.success:
        doc["statement"] = f"liminf (p_(n+1) - p_n) <= {res.gap_bound}"
    return doc, EXIT_OK if res.success else EXIT_FAIL, None


def _load_shifts(a) -> list[int]:
    given = [x is not None for x in (a.shifts, a.file, a.stored)]
    if sum(given) != 1:
        raise UsageError("give exactly one of SHIFTS, --file, --stored")
    if a.stored:
        from .tuples import load_tuple54
        return list(load_tuple54().shifts)
    if a.file:
        try:
            data = json.loads(a.file.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read {a.file}: {exc}") from exc
        data = data["shifts"] if isinstance(data, dict) else data
        return [int(v) for v in data]
    return a.shifts


def cmd_tuple(a):
    from .tuples import AdmissibleTuple, is_admissible, narrowest_tuple, primes_after_k_tuple

    if a.action == "verify":
        shifts = _load_shifts(a)
        if len(shifts) < 1 or any(y <= x for x, y in zip(shifts, shifts[1:])):
            raise UsageError("shifts must be nonempty and strictly increasing")
        res = is_admissible(shifts)
        doc = {"k": len(shifts), "shifts": shifts, "admissible": res.admissible,
               "diameter": shifts[-1] - shifts[0]}
        if res:
            t = AdmissibleTuple(tuple(shifts))
            doc["witnesses"] = {str(p): r for p, r in sorted(res.witnesses.items())}
            doc["witnesses_verified"] = t.verify_witnesses()
        else:
            doc["covering_prime"] = res.covering_prime
        return doc, EXIT_OK if res else EXIT_FAIL, None
    if a.k < 1 or (a.action == "search" and a.k < 2):
        raise UsageError("--k too small")
    if a.action == "search":
        r = narrowest_tuple(a.k, a.budget)
        return r.to_json(), EXIT_OK, None
    t = primes_after_k_tuple(a.k)
    return t.to_json(), EXIT_OK, None


def cmd_cover(a):
    from .covering import crt_witness, default_z, make_plan, max_covered_y, verify_cover

    if a.x < 2:
        raise UsageError("--x must be >= 2")
    z = None
    if a.z != "auto":
        try:
            z = float(a.z)
        except ValueError as exc:
            raise UsageError("--z must be a number or 'auto'") from exc
    try:
        if a.y == "auto":
            res = max_covered_y(a.x, a.strategy, budget=a.budget, z=z, seed=a.seed)
            plan = res.plan
            doc = {"x": a.x, "strategy": a.strategy, "max_covered_y": res.y, "probes": res.probes,
                   "budget_exhausted": res.exhausted, "y_over_x": res.y / a.x}
            covered = plan is not None
            uncovered: list[int] = []
        else:
            try:
                y = int(a.y)
            except ValueError as exc:
                raise UsageError("--y must be an integer or 'auto'") from exc
            if y < 1:
                raise UsageError("--y must be >= 1")
            plan = make_plan(a.strategy, a.x, y, z, a.seed)
            covered, uncovered = verify_cover(plan)
            doc = {"x": a.x, "y": y, "strategy": a.strategy, "covered": covered, "uncovered": uncovered}
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if a.strategy in ("erdos-rankin", "random-weighted"):
        doc["z"] = default_z(a.x) if z is None else z
    if plan is not None:
        doc["plan"] = plan.to_json()
        if a.emit_witness and covered:
            w = crt_witness(plan)
            doc["witness"] = w.to_json()
            doc["witness_verified"] = w.verify()
    rows = None
    if plan is not None:
        rows = [{"x": a.x, "strategy": a.strategy, "y": plan.y, "seed": a.seed}]
    return doc, EXIT_OK if covered else EXIT_FAIL, rows


def cmd_gaps(a):
    from . import primes as pc

    if a.action == "scan":
        if a.limit < 3:
            raise UsageError("--limit must be >= 3")
        recs = pc.max_gap_scan(a.limit)
        rows = [{"p": r.p, "next": r.next, "gap": r.gap} for r in recs]
        doc = {"limit": a.limit, "records": rows}
        code = EXIT_OK
        if a.check:
            other = pc.max_gap_scan_pairwise(a.limit)
            doc["independent_scan_agrees"] = other == recs
            code = EXIT_OK if other == recs else EXIT_FAIL
        return doc, code, rows
    if a.action == "curves":
        if a.limit < 1000 or a.step < 1:
            raise UsageError("need --limit >= 1000 and --step >= 1")
        rows = pc.gap_growth_curves(a.limit, a.step)
        return {"limit": a.limit, "step": a.step, "rows": rows}, EXIT_OK, rows
    if a.action == "intervals":
        if a.X < 2 or a.y < 1:
            raise UsageError("need --X >= 2 and --y >= 1")
        r = pc.interval_prime_counts(a.X, a.y, a.c, seed=a.seed)
        rows = [{"count": c, "frequency": f} for c, f in sorted(r.histogram.items())]
        doc = {"X": r.X, "y": r.y, "exhaustive": r.exhaustive, "n_x": r.n_x, "mean": r.mean,
               "threshold": r.threshold, "meeting_threshold": r.meeting_threshold,
               "histogram": {str(c): f for c, f in sorted(r.histogram.items())}}
        return doc, EXIT_OK, rows
    if a.limit < 2:
        raise UsageError("--limit must be >= 2")
    n = int(len(pc.sieve_range(2, a.limit + 1)))
    return {"limit": a.limit, "pi": n}, EXIT_OK, [{"limit": a.limit, "pi": n}]


def cmd_expect(a):
    from .optimizer import ExpectationParams, guaranteed_primes

    try:
        params = ExpectationParams(a.theta, a.ratio, a.k)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    E, m = guaranteed_primes(params)
    doc = {"ratio": str(a.ratio), "theta": str(a.theta), "expectation_limit": str(E),
           "expectation_limit_decimal": float(E), "m": m}
    return doc, EXIT_OK if m >= 2 else EXIT_FAIL, [doc]


def cmd_concentrate(a):
    import math

    from .measure import g_moments, mc_concentration, product_ratio_lower_bound

    if any(k < 2 for k in a.k) or a.samples < 10_000 or not a.threshold > 0:
        raise UsageError("need every k >= 2, --samples >= 10000 and --threshold > 0")
    rows = []
    for k in a.k:
        prof = g_moments(k)
        mc = mc_concentration(k, a.samples, a.threshold, a.seed)
        rb = product_ratio_lower_bound(k, a.samples, a.seed)
        rows.append({
            "k": k, "mu": prof.mu, "sigma2": prof.sigma2, "norm": prof.norm,
            "mu_times_3k": 3 * k * prof.mu, "k_sigma2": prof.k_sigma2, "k_int_g_sq": prof.k_int_g_sq,
            "p_below_threshold": mc.estimate, "p_radius": mc.radius,
            "bound": rb.bound, "bound_over_log_k": rb.bound / math.log(k),
        })
    return {"threshold": a.threshold, "samples": a.samples, "rows": rows}, EXIT_OK, rows


def cmd_weights(a):
    from .simplex import SymPoly
    from .weights import empirical_weight_expectation

    k = len(a.shifts)
    if not 1 <= k <= 4 or a.ell < 0:
        raise UsageError("need 1 to 4 shifts and --ell >= 0")
    try:
        st = empirical_weight_expectation(a.shifts, a.R, a.X, SymPoly.boundary(k, a.ell))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    doc = {"k": k, "shifts": a.shifts, "R": a.R, "X": a.X, "ell": a.ell,
           "raw_weight_sum": st.raw_weight_sum, "mean_weight": st.mean_weight,
           "prime_hit_expectation": st.prime_hit_expectation, "n_count": st.n_count}
    return doc, EXIT_OK, [doc]


COMMANDS = {
    "optimize": cmd_optimize,
    "pipeline": cmd_pipeline,
    "tuple": cmd_tuple,
    "cover": cmd_cover,
    "gaps": cmd_gaps,
    "expect": cmd_expect,
    "concentrate": cmd_concentrate,
    "weights": cmd_weights,
}


def _resolved_config(a) -> dict:
    out = {}
    for key, v in sorted(vars(a).items()):
        if key == "verbose":
            continue
        if isinstance(v, Fraction):
            v = str(v)
        elif isinstance(v, range):
            v = f"{v.start}:{v.stop - 1}"
        elif isinstance(v, Path):
            v = str(v)
        out[key] = v
    return out


def _to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    wr = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    wr.writeheader()
    for r in rows:
        wr.writerow({k: ("" if v is None else f"{v:.12g}" if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        import flint
        flint.ctx.threads = a.threads
    except ImportError:  # pragma: no cover
        pass
    try:
        doc, code, rows = COMMANDS[a.command](a)
    except UsageError as exc:
        print(f"primegaps: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if a.format == "csv":
        if not rows:
            print("primegaps: error: this command has no tabular output; use --format json", file=sys.stderr)
            return EXIT_USAGE
        text = _to_csv(rows)
    else:
        envelope = {"schema": "primegaps/run/1", "version": __version__, "config": _resolved_config(a),
                    "exit_code": code, "result": doc}
        text = json.dumps(envelope, indent=2, sort_keys=True) + "\n"
    if a.out:
        a.out.write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
