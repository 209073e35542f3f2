"""Command-line front end for the expander lab.

Every subcommand builds a list of records (dicts with a ``pass`` field),
writes them as CSV or JSON, and exits 0 when all pass, 1 when a check
failed, 2 on usage errors and 3 on resource or convergence failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Callable

from expander_lab import __version__
from expander_lab.errors import ConsistencyError, DomainError, NumericalError, ResourceError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3
BASELINE_SCHEMA = 1
DEFAULT_BASELINE = "selberg_baseline.json"


def fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _jsonable(x):
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, float):
        return float(f"{x:.12g}")
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    return str(x)


# -- reports -------------------------------------------------------------------


@dataclass
class SuiteReport:
    command: str
    columns: list[str]
    records: list[dict]
    config: dict
    paper_ref: str
    timings: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.get("pass", True) for r in self.records)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.records:
            w.writerow([fmt(r.get(c, "")) for c in self.columns])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "tool": "expander_lab",
            "version": __version__,
            "command": self.command,
            "config": self.config,
            "pass": self.passed,
            "records": [dict(r, paper_ref=self.paper_ref) for r in self.records],
        }
        if self.notes:
            doc["notes"] = self.notes
        if self.timings:
            doc["timings"] = self.timings
        return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


# -- argument helpers ------------------------------------------------------------


def _prime_list(text: str) -> list[int]:
    from expander_lab.finite_projective import check_prime

    try:
        out = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise DomainError(f"expected comma-separated primes, got {text!r}") from None
    if not out:
        raise DomainError("empty prime list")
    for p in out:
        check_prime(p)
    return out


def _primes(args, default: list[int]) -> list[int]:
    from expander_lab.finite_projective import primes_up_to

    if getattr(args, "p", None):
        ps = _prime_list(args.p)
    elif getattr(args, "max_prime", None):
        ps = primes_up_to(args.max_prime)
    else:
        ps = list(default)
    return sorted(set(ps))


def _q_list(args, default: list[int]) -> list[int]:
    return sorted(set(_prime_list(args.q))) if args.q else list(default)


def _threads(args) -> int:
    if args.threads is not None:
        n = args.threads
    else:
        env = os.environ.get("EXPANDER_LAB_THREADS", "1")
        try:
            n = int(env)
        except ValueError:
            raise DomainError(f"EXPANDER_LAB_THREADS={env!r} is not an integer") from None
    if n < 1:
        raise DomainError("thread count must be positive")
    return n


def _chain(args):
    from expander_lab.wassermann_lab import parse_chain

    return parse_chain(args.chain or "3,7,43")


# -- commands -----------------------------------------------------------------------


def cmd_projective_enumerate(args) -> SuiteReport:
    from expander_lab.finite_projective import enumerate_space

    p = _primes(args, [5])[0]
    space = enumerate_space(p, args.dim)
    recs = [
        {"index": i, "coords": " ".join(map(str, pt.coords)), "label": pt.label()}
        for i, pt in enumerate(space.points)
    ]
    if len(space) != space.closed_form_size():
        raise ConsistencyError(f"|P^{args.dim}(F_{p})| = {len(space)} disagrees with the closed form")
    return SuiteReport(
        "projective enumerate", ["index", "coords", "label"], recs, {"p": p, "dim": args.dim},
        "projective space size formula",
    )


def cmd_verify_actions(args) -> SuiteReport:
    from expander_lab.group_actions import verify_action_formulas

    recs = []
    for p in _primes(args, _default_small()):
        r = verify_action_formulas(p)
        recs.append({"p": p, "checked": r.checked, "failures": len(r.failures), "pass": r.passed})
    return SuiteReport(
        "verify actions", ["p", "checked", "failures", "pass"], recs, {"primes": [r["p"] for r in recs]},
        "SL2 generator actions on the projective line",
    )


def _default_small() -> list[int]:
    from expander_lab.finite_projective import primes_up_to

    return primes_up_to(31)


def cmd_verify_irreducibility(args) -> SuiteReport:
    from expander_lab.group_actions import generator_permutations, sl2_lazy_set, sl3_symmetric_set
    from expander_lab.representations import commutant_report, h_eigenspace_check

    group = args.group
    default = _default_small() if group == "sl2" else [3, 5, 7]
    gens = sl2_lazy_set() if group == "sl2" else sl3_symmetric_set()
    recs = []
    for p in _primes(args, default):
        perms = [g for _, g in generator_permutations(p, gens)]
        rep = commutant_report(perms)
        rec = {"group": group, "p": p, "linear_solve": rep.linear_solve, "orbitals": rep.orbital_count}
        ok = rep.linear_solve == rep.orbital_count == 2
        if group == "sl2":
            eig = h_eigenspace_check(p)
            rec["h_eigenspace"] = eig.dimension
            ok = ok and eig.passed
        rec["pass"] = ok
        recs.append(rec)
    cols = ["group", "p", "linear_solve", "orbitals", "h_eigenspace", "pass"]
    if group != "sl2":
        cols.remove("h_eigenspace")
    return SuiteReport(
        "verify irreducibility", cols, recs, {"group": group, "primes": [r["p"] for r in recs]},
        "two-dimensional commutant: irreducible mean-zero part",
    )


def cmd_verify_fixed_space(args) -> SuiteReport:
    from expander_lab.finite_projective import primes_up_to
    from expander_lab.representations import pair_fixed_space

    ps = _primes(args, primes_up_to(13))
    recs = []
    for q in ps:
        for p in ps:
            if p == q:
                continue
            r = pair_fixed_space(q, p)
            recs.append({"q": q, "p": p, "dimension": r.dimension, "orbits": r.orbit_count,
                         "constant": r.spanned_by_constants, "pass": r.passed})
    return SuiteReport(
        "verify fixed-space", ["q", "p", "dimension", "orbits", "constant", "pass"], recs,
        {"primes": ps}, "Schur: invariant vectors of a pair tensor product are constant",
    )


def _sl2_records(args) -> list[dict]:
    from expander_lab.selberg_lab import sl2_gap_survey

    primes = _primes(args, _default_small())
    survey = sl2_gap_survey(primes, args.generators, _threads(args))
    return [
        {"p": r.p, "n": r.n, "second_eigenvalue": r.second_eigenvalue, "gap": r.gap,
         "top_multiplicity": r.top_multiplicity, "pass": r.passed and r.gap > args.min_gap}
        for r in survey
    ]


SL2_COLUMNS = ["p", "n", "second_eigenvalue", "gap", "top_multiplicity", "pass"]


def cmd_gap_sl2(args) -> SuiteReport:
    recs = _sl2_records(args)
    cfg = {"generators": args.generators, "min_gap": args.min_gap, "primes": [r["p"] for r in recs]}
    return SuiteReport("gap sl2", SL2_COLUMNS, recs, cfg, "uniform SL2 congruence spectral gap")


def cmd_gap_sl3(args) -> SuiteReport:
    from expander_lab.wassermann_lab import sl3_kazhdan_survey

    qs = _q_list(args, [3, 7])
    recs = [
        {"q": r.q, "dim": r.dimension, "top_multiplicity": r.top_multiplicity, "orbitals": r.orbitals,
         "epsilon": r.epsilon, "pass": r.passed}
        for r in sl3_kazhdan_survey(qs, _threads(args))
    ]
    return SuiteReport(
        "gap sl3", ["q", "dim", "top_multiplicity", "orbitals", "epsilon", "pass"], recs, {"q": qs},
        "Kazhdan gap of the SL3 averaging operator",
    )


def cmd_witness_norm(args) -> SuiteReport:
    import math

    from expander_lab.selberg_lab import chi_orthogonal_displacement, witness_norm

    qs = _q_list(args, [3, 5, 7, 11, 13])
    recs = []
    for q in qs:
        norm = witness_norm(q)
        disp = chi_orthogonal_displacement(q)
        recs.append({"q": q, "norm": norm, "displacement": disp,
                     "pass": abs(norm - 4) <= 1e-9 and abs(disp - math.sqrt(2)) <= 1e-12})
    return SuiteReport(
        "witness-norm", ["q", "norm", "displacement", "pass"], recs, {"q": qs},
        "norm-4 witness from a sign diagonal",
    )


def cmd_beta_test(args) -> SuiteReport:
    from expander_lab.selberg_lab import beta_property_suite

    r = beta_property_suite(args.samples, args.seed)
    rec = {"samples": r.samples, "failures": r.failures, "worst_ratio": r.worst_ratio, "pass": r.passed}
    return SuiteReport(
        "beta-test", ["samples", "failures", "worst_ratio", "pass"], [rec],
        {"samples": args.samples, "seed": args.seed}, "explicit near-fixed-vector modulus",
    )


def cmd_appendix_chain(args) -> SuiteReport:
    from expander_lab.wassermann_lab import dirichlet_chain

    chain = _chain(args) if args.chain else dirichlet_chain(args.length, args.start)
    recs = [{"index": i, "prime": p, "pass": True} for i, p in enumerate(chain.primes)]
    return SuiteReport(
        "appendix chain", ["index", "prime"], recs, {"primes": list(chain.primes)},
        "congruence chain p = 1 mod q",
    )


def cmd_appendix_xsets(args) -> SuiteReport:
    from expander_lab.wassermann_lab import x_set

    recs = []
    for p in _chain(args).primes:
        xs = x_set(p)
        recs.append({"p": p, "size": xs.size, "lower": xs.lower, "upper": xs.upper, "pass": xs.passed})
    return SuiteReport(
        "appendix xsets", ["p", "size", "lower", "upper", "pass"], recs, {"chain": args.chain or "3,7,43"},
        "half-density sets X_p",
    )


def cmd_appendix_disjoint(args) -> SuiteReport:
    from expander_lab.wassermann_lab import triple_disjointness

    chain = _chain(args)
    recs = [{"p": p, "q": q, "pass": triple_disjointness(p, q)} for p, q in chain.pairs()]
    return SuiteReport(
        "appendix disjoint", ["p", "q", "pass"], recs, {"chain": list(chain.primes)},
        "empty triple intersection of shifted X_p",
    )


def cmd_appendix_fbound(args) -> SuiteReport:
    from expander_lab.wassermann_lab import f_bound

    chain = _chain(args)
    recs = []
    for p, q in chain.pairs():
        r = f_bound(p, q)
        recs.append({"p": p, "q": q, "max": r.maximum, "pass": r.passed})
    return SuiteReport(
        "appendix fbound", ["p", "q", "max", "pass"], recs, {"chain": list(chain.primes)},
        "averaged shifted indicators at most 2/3",
    )


def cmd_appendix_tnorm(args) -> SuiteReport:
    from expander_lab.wassermann_lab import t_norm_formula

    qs = _q_list(args, [3, 7])
    recs = []
    for q in qs:
        r = t_norm_formula(q)
        recs.append({"q": q, "n": r.n, "x_size": r.x_size, "closed_form": r.closed_form,
                     "matrix_value": r.matrix_value, "pass": r.passed})
    return SuiteReport(
        "appendix tnorm", ["q", "n", "x_size", "closed_form", "matrix_value", "pass"], recs, {"q": qs},
        "cut-down norm of the normalized off-diagonal intertwiner below 25/36",
    )


def cmd_appendix_trace(args) -> SuiteReport:
    from expander_lab.wassermann_lab import trace_identity, x_set

    qs = _q_list(args, [3, 7])
    recs = []
    for q in qs:
        v = trace_identity(q)
        xs = x_set(q)
        recs.append({"q": q, "value": v, "pass": v == Fraction(xs.size, xs.n) and v > Fraction(1, 3)})
    return SuiteReport(
        "appendix trace", ["q", "value", "pass"], recs, {"q": qs}, "trace pairing with e_q exceeds 1/3",
    )


def cmd_appendix_tqbound(args) -> SuiteReport:
    from expander_lab.wassermann_lab import tq_prime_bound

    chain = _chain(args)
    recs = []
    for p, q in chain.pairs():
        r = tq_prime_bound(q, p)
        recs.append({"q": q, "p": p, "value": r.value, "bound": r.bound, "pass": r.passed})
    return SuiteReport(
        "appendix tqbound", ["q", "p", "value", "bound", "pass"], recs, {"chain": list(chain.primes)},
        "cross-prime cut-down norm at most 8/9",
    )


def cmd_appendix_gap(args) -> SuiteReport:
    from expander_lab.wassermann_lab import gap_experiment

    qs = _q_list(args, [3])
    recs = []
    for q in qs:
        r = gap_experiment(q, args.standin)
        recs.append({"q": q, "standin": r.stand_in, "dim": r.dimension, "two_mult": r.two_multiplicity,
                     "k1_dim": r.k1_dimension, "gap": r.gap_below_two, "epsilon_emp": r.epsilon_emp,
                     "slack": r.slack, "method": r.method, "pass": r.passed})
    return SuiteReport(
        "appendix gap", ["q", "standin", "dim", "two_mult", "k1_dim", "gap", "epsilon_emp", "pass"], recs,
        {"q": qs, "standin": args.standin}, "isolated eigenvalue 2 of r_q",
    )


def cmd_appendix_projection(args) -> SuiteReport:
    from expander_lab.wassermann_lab import spectral_projection_trace

    qs = _q_list(args, [3])
    recs = []
    for q in qs:
        r = spectral_projection_trace(q, args.standin)
        recs.append({"q": q, "standin": r.stand_in, "rank": r.rank, "tau": r.tau,
                     "idempotence_error": r.idempotence_error, "pass": r.passed})
    return SuiteReport(
        "appendix projection", ["q", "standin", "rank", "tau", "idempotence_error", "pass"], recs,
        {"q": qs, "standin": args.standin}, "spectral projection of r_q has positive trace",
    )


# -- baselines ---------------------------------------------------------------------


@dataclass
class BaselineDiff:
    regressions: list[dict]
    additions: list[int]
    missing: list[int]

    @property
    def passed(self) -> bool:
        return not self.regressions


def load_baseline(path: str | None) -> dict:
    if path is None:
        text = resources.files("expander_lab").joinpath("data", DEFAULT_BASELINE).read_text()
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise DomainError(f"cannot read baseline {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"baseline is not valid JSON: {exc}") from None
    if doc.get("schema_version") != BASELINE_SCHEMA:
        raise DomainError(f"baseline schema {doc.get('schema_version')!r} != {BASELINE_SCHEMA}")
    return doc


def compare_baseline(records: list[dict], baseline: dict, tol: float) -> BaselineDiff:
    """Flag gaps that shrank below baseline - tol; new primes are additions."""
    gaps = {int(k): float(v) for k, v in baseline["gaps"].items()}
    seen = set()
    regressions, additions = [], []
    for r in records:
        p = r["p"]
        seen.add(p)
        if p not in gaps:
            additions.append(p)
        elif r["gap"] < gaps[p] - tol:
            regressions.append({"p": p, "baseline": gaps[p], "gap": r["gap"]})
    return BaselineDiff(regressions, additions, sorted(set(gaps) - seen))


def baseline_document(records: list[dict], generators: str) -> dict:
    return {
        "schema_version": BASELINE_SCHEMA,
        "generators": generators,
        "gaps": {str(r["p"]): float(f"{r['gap']:.12g}") for r in records},
        "min_gap": float(f"{min(r['gap'] for r in records):.12g}"),
    }


def cmd_baseline_compare(args) -> SuiteReport:
    base = load_baseline(args.baseline)
    if base.get("generators") != args.generators:
        raise DomainError(f"baseline uses {base.get('generators')} generators, not {args.generators}")
    if not (args.p or args.max_prime):
        args.p = ",".join(sorted(base["gaps"], key=int))
    records = _sl2_records(args)
    diff = compare_baseline(records, base, args.tol_eig)
    bad = {r["p"] for r in diff.regressions}
    base_gaps = {int(k): v for k, v in base["gaps"].items()}
    recs = []
    for r in records:
        status = "addition" if r["p"] in diff.additions else ("regression" if r["p"] in bad else "ok")
        recs.append({"p": r["p"], "gap": r["gap"], "baseline": base_gaps.get(r["p"], ""),
                     "status": status, "pass": r["p"] not in bad})
    notes = [f"missing from run: {diff.missing}"] if diff.missing else []
    return SuiteReport(
        "baseline compare", ["p", "gap", "baseline", "status", "pass"], recs,
        {"tolerance": args.tol_eig, "generators": args.generators}, "uniform SL2 congruence spectral gap",
        notes=notes,
    )


def cmd_baseline_write(args) -> SuiteReport:
    records = _sl2_records(args)
    doc = baseline_document(records, args.generators)
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        args.out = None  # the baseline itself was the output
    return SuiteReport("baseline write", SL2_COLUMNS, records, {"generators": args.generators},
                       "uniform SL2 congruence spectral gap")


# -- parser ---------------------------------------------------------------------------


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("tolerance must be positive")
    return v


def _common(sp: argparse.ArgumentParser):
    sp.add_argument("--p", help="comma-separated primes")
    sp.add_argument("--q", help="comma-separated primes")
    sp.add_argument("--chain", help="comma-separated prime chain, e.g. 3,7,43")
    sp.add_argument("--max-prime", type=int, help="use every prime up to this bound")
    sp.add_argument("--standin", default="trivial", help="trivial or perm:R")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.add_argument("--out", help="write the report here instead of stdout")
    sp.add_argument("--baseline", help="baseline JSON (default: packaged SL2 baseline)")
    sp.add_argument("--tol-eig", type=_positive_float, default=1e-9, help="baseline comparison tolerance")
    sp.add_argument("--min-gap", type=_positive_float, default=1e-3, help="required SL2 gap")
    sp.add_argument("--threads", type=int, help="worker threads (fallback: EXPANDER_LAB_THREADS)")
    sp.add_argument("--generators", choices=["symmetric", "lazy"], default="symmetric")
    sp.add_argument("--group", choices=["sl2", "sl3"], default="sl2")
    sp.add_argument("--dim", type=int, choices=[1, 2], default=1)
    sp.add_argument("--length", type=int, default=3)
    sp.add_argument("--start", type=int, default=3)
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--timings", action="store_true", help="include wall-clock timings in JSON")


COMMANDS: dict[tuple[str, ...], Callable] = {
    ("projective", "enumerate"): cmd_projective_enumerate,
    ("verify", "actions"): cmd_verify_actions,
    ("verify", "irreducibility"): cmd_verify_irreducibility,
    ("verify", "fixed-space"): cmd_verify_fixed_space,
    ("gap", "sl2"): cmd_gap_sl2,
    ("gap", "sl3"): cmd_gap_sl3,
    ("witness-norm",): cmd_witness_norm,
    ("beta-test",): cmd_beta_test,
    ("appendix", "chain"): cmd_appendix_chain,
    ("appendix", "xsets"): cmd_appendix_xsets,
    ("appendix", "disjoint"): cmd_appendix_disjoint,
    ("appendix", "fbound"): cmd_appendix_fbound,
    ("appendix", "tnorm"): cmd_appendix_tnorm,
    ("appendix", "trace"): cmd_appendix_trace,
    ("appendix", "tqbound"): cmd_appendix_tqbound,
    ("appendix", "gap"): cmd_appendix_gap,
    ("appendix", "projection"): cmd_appendix_projection,
    ("baseline", "compare"): cmd_baseline_compare,
    ("baseline", "write"): cmd_baseline_write,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="expander-lab", description="Spectral experiments on congruence quotients.")
    parser.add_argument("--version", action="version", version=f"expander_lab {__version__}")
    top = parser.add_subparsers(dest="group_name", required=True)
    groups: dict[str, argparse._SubParsersAction] = {}
    for key, fn in COMMANDS.items():
        if len(key) == 1:
            sp = top.add_parser(key[0], help=(fn.__doc__ or "").strip() or None)
            _common(sp)
            sp.set_defaults(func=fn)
            continue
        if key[0] not in groups:
            g = top.add_parser(key[0])
            groups[key[0]] = g.add_subparsers(dest="sub_name", required=True)
        sp = groups[key[0]].add_parser(key[1])
        _common(sp)
        sp.set_defaults(func=fn)
    return parser


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    start = time.perf_counter()
    try:
        report = args.func(args)
    except DomainError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_USAGE
    except (ResourceError, NumericalError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_RESOURCE
    except ConsistencyError as exc:
        print(f"internal consistency check failed: {exc}", file=stderr)
        return EXIT_FAIL
    if args.timings:
        report.timings = {"wall_seconds": time.perf_counter() - start}
    text = report.to_json() if args.format == "json" else report.to_csv()
    if args.out:
        Path(args.out).write_text(text)
    else:
        stdout.write(text)
    for note in report.notes:
        print(f"note: {note}", file=stderr)
    if not report.passed:
        failed = sum(not r.get("pass", True) for r in report.records)
        print(f"{failed} of {len(report.records)} checks failed", file=stderr)
        return EXIT_FAIL
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
