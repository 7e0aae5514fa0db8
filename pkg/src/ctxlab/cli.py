"""Command-line interface.

Exit codes: 0 success or noncontextual, 1 failed verification (an
equivalence disagreement), 2 input error, 3 size guard exceeded,
10 contextual.
"""
from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .consistify import consistify, verify_equivalence
from .contextuality import (
    CONTEXTUAL,
    DEFAULT_MAX_ASSIGNMENTS,
    DEFAULT_MAX_COLUMNS,
    NotConsistentlyConnected,
    RuleNotApplicable,
    TooLarge,
    decide_contextual,
    decide_contextual_constrained,
    decide_traditional,
    hull_oracle,
)
from .couplings import RULES
from .feasibility import DimensionMismatch
from .generators import (
    GeneratorSpec,
    InfeasibleSpec,
    UnknownName,
    corpus_specs,
    gen_named,
    gen_system,
    noisy_pr,
)
from .hvm import NoWitness, contextual_diagnostic, hvm_from_witness, hvm_reproduces
from .io import (
    Report,
    SystemFileSyntaxError,
    format_rational,
    parse_document,
    serialize_hvm,
    serialize_system,
    verdict_to_dict,
)
from .model import (
    SystemValidationError,
    UnknownContent,
    connections,
    is_consistently_connected,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2
EXIT_GUARD = 3
EXIT_CONTEXTUAL = 10

INPUT_ERRORS = (
    SystemFileSyntaxError,
    SystemValidationError,
    RuleNotApplicable,
    NotConsistentlyConnected,
    UnknownName,
    UnknownContent,
    InfeasibleSpec,
    DimensionMismatch,
    NoWitness,
    OSError,
)


def _read(path: str):
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    return parse_document(text)


def _format_stats(system) -> dict:
    return {
        "contents": len(system.contents),
        "contexts": len(system.contexts),
        "pairs": len(system.format.incidence),
        "alphabet_sizes": {q: len(system.alphabet(q)) for q in system.contents},
    }


def _verdict_code(status: str) -> int:
    return EXIT_CONTEXTUAL if status == CONTEXTUAL else EXIT_OK


def cmd_validate(args, report: Report) -> int:
    system, constraints = _read(args.system)
    report.stats = _format_stats(system)
    report.details["constraint_contents"] = sorted(constraints)
    return EXIT_OK


def cmd_marginals(args, report: Report) -> int:
    system, _ = _read(args.system)
    report.stats = _format_stats(system)
    report.details["connections"] = {
        conn.content: {c: dict(zip(m.alphabet.outcomes, m.probs)) for c, m in conn.marginals}
        for conn in connections(system)
    }
    return EXIT_OK


def cmd_consistency(args, report: Report) -> int:
    system, _ = _read(args.system)
    result = is_consistently_connected(system)
    report.stats = _format_stats(system)
    report.details["consistently_connected"] = result.consistent
    report.details["violations"] = [list(v) for v in result.violations]
    return EXIT_OK


def cmd_decide(args, report: Report) -> int:
    system, constraints = _read(args.system)
    report.stats = _format_stats(system)
    if args.constrained:
        verdict = decide_contextual_constrained(system, constraints, max_columns=args.max_columns)
    elif args.traditional:
        verdict = decide_traditional(system, max_columns=args.max_columns)
    else:
        verdict = decide_contextual(system, args.rule, prune=not args.full,
                                    max_columns=args.max_columns)
    report.verdicts.append(verdict_to_dict(verdict))
    if verdict.certificate is not None:
        report.certificates.append(report.verdicts[-1]["certificate"])
    report.timing["decide_seconds"] = verdict.seconds
    return _verdict_code(verdict.status)


def cmd_oracle(args, report: Report) -> int:
    system, _ = _read(args.system)
    report.stats = _format_stats(system)
    verdict = hull_oracle(system, args.rule, max_assignments=args.max_assignments)
    report.verdicts.append(verdict_to_dict(verdict))
    if verdict.certificate is not None:
        report.certificates.append(report.verdicts[-1]["certificate"])
    report.timing["oracle_seconds"] = verdict.seconds
    return _verdict_code(verdict.status)


def cmd_consistify(args, report: Report) -> int:
    system, _ = _read(args.system)
    cons = consistify(system, args.rule)
    text = serialize_system(cons.system)
    report.stats = _format_stats(system)
    report.details["consistified"] = _format_stats(cons.system)
    report.details["consistently_connected"] = is_consistently_connected(cons.system).consistent
    if args.out:
        Path(args.out).write_text(text)
        report.details["written"] = args.out
    else:
        report.details["system_file"] = text
    return EXIT_OK


def _equivalence_row(system, rule: str, max_columns: int) -> dict:
    r = verify_equivalence(system, rule, max_columns=max_columns)
    return {
        "status": r.original.status,
        "consistified_status": r.consistified.status,
        "agree": r.agree,
        "ok": r.ok,
        "consistent": is_consistently_connected(system).consistent,
        "contents": len(system.contents),
        "contexts": len(system.contexts),
        "pairs": len(system.format.incidence),
        "consistified_contents": r.format_counts["contents"],
        "consistified_contexts": r.format_counts["contexts"],
        "lp_rows": r.original.lp_shape[0],
        "lp_columns": r.original.lp_shape[1],
        "consistified_lp_rows": r.consistified.lp_shape[0],
        "consistified_lp_columns": r.consistified.lp_shape[1],
        "certificates_verified": r.original.verified and r.consistified.verified,
        "witness_transfer": r.witness_transfer,
        "seconds": round(r.original.seconds + r.consistified.seconds, 6),
    }


def _spec_row(args) -> dict:
    spec, rule, max_columns = args
    row = _equivalence_row(gen_system(spec), rule, max_columns)
    row["seed"] = spec.seed
    return row


def run_batch(specs, rule: str, max_columns: int = DEFAULT_MAX_COLUMNS, jobs: int = 1) -> list[dict]:
    work = [(spec, rule, max_columns) for spec in specs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_spec_row, work, chunksize=8))
    return [_spec_row(w) for w in work]


def cmd_verify_equivalence(args, report: Report) -> int:
    if args.count:
        rows = run_batch(corpus_specs(args.count, args.seed), args.rule, args.max_columns, args.jobs)
    else:
        if not args.system:
            raise SystemFileSyntaxError(0, "give a system file or --count")
        system, _ = _read(args.system)
        rows = [_equivalence_row(system, args.rule, args.max_columns)]
        report.stats = _format_stats(system)
    report.verdicts = rows
    failures = [i for i, r in enumerate(rows) if not r["ok"]]
    report.details["checked"] = len(rows)
    report.details["disagreements"] = sum(1 for r in rows if not r["agree"])
    report.details["failures"] = failures
    report.timing["total_seconds"] = sum(r["seconds"] for r in rows)
    return EXIT_FAILED if failures else EXIT_OK


def cmd_hvm(args, report: Report) -> int:
    system, _ = _read(args.system)
    verdict = decide_contextual(system, args.rule, max_columns=args.max_columns)
    report.verdicts.append(verdict_to_dict(verdict, include_witness=False))
    if verdict.status == CONTEXTUAL:
        cons = consistify(system, args.rule).system
        report.details["diagnostic"] = contextual_diagnostic(cons)
        return EXIT_CONTEXTUAL
    hvm = hvm_from_witness(verdict, system)
    report.details["context_dependent"] = hvm.context_dependent
    report.details["atoms"] = len(hvm.atoms)
    report.details["reproduces"] = hvm_reproduces(hvm, system)
    text = serialize_hvm(hvm)
    if args.out:
        Path(args.out).write_text(text)
        report.details["written"] = args.out
    else:
        report.details["hvm_table"] = text
    return EXIT_OK


def cmd_gen(args, report: Report) -> int:
    if args.name:
        system = gen_named(args.name)
    else:
        system = gen_system(GeneratorSpec(
            seed=args.seed,
            max_contents=args.max_contents,
            max_contexts=args.max_contexts,
            alphabet_sizes=tuple(args.alphabet_sizes),
            density=Fraction(args.density),
            consistency=args.consistency,
            precision=args.precision,
            min_contents=args.min_contents,
            min_contexts=args.min_contexts,
        ))
    text = serialize_system(system)
    report.stats = _format_stats(system)
    if args.out:
        Path(args.out).write_text(text)
        report.details["written"] = args.out
    else:
        args.stdout.write(text)
        report.details["suppress"] = True
    return EXIT_OK


def cmd_report(args, report: Report) -> int:
    from .plotting import plot_corpus, plot_noise_sweep, write_csv

    out = Path(args.out or "report")
    rows = run_batch(corpus_specs(args.count, args.seed), args.rule, args.max_columns, args.jobs)
    fields = list(rows[0]) if rows else []
    write_csv(out / "corpus.csv", rows, fields)
    plot_corpus(rows, out / "corpus.png")

    sweep = []
    for k in range(args.grid + 1):
        v = Fraction(k, args.grid)
        verdict = decide_contextual(noisy_pr(v), args.rule)
        oracle = hull_oracle(noisy_pr(v), args.rule)
        sweep.append({
            "visibility": format_rational(v),
            "status": verdict.status,
            "oracle_status": oracle.status,
            "lp_rows": verdict.lp_shape[0],
            "lp_columns": verdict.lp_shape[1],
        })
    write_csv(out / "noise_sweep.csv", sweep, list(sweep[0]))
    plot_noise_sweep(sweep, out / "noise_sweep.png")

    report.details["files"] = sorted(str(p) for p in out.iterdir())
    report.details["checked"] = len(rows)
    report.details["disagreements"] = sum(1 for r in rows if not r["agree"])
    report.details["noise_boundary"] = [r["visibility"] for r in sweep if r["status"] == CONTEXTUAL][:1]
    return EXIT_FAILED if any(not r["ok"] for r in rows) else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--rule", choices=sorted(RULES), default="comonotonic")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output file (system/HVM file, or directory for report)")
    common.add_argument("--max-columns", type=int, default=DEFAULT_MAX_COLUMNS)

    parser = argparse.ArgumentParser(prog="ctxlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_, system=True, nargs=None):
        p = sub.add_parser(name, parents=[common], help=help_)
        if system:
            p.add_argument("system", nargs=nargs, help="system file, or - for stdin")
        p.set_defaults(func=func)
        return p

    add("validate", cmd_validate, "check a system file")
    add("marginals", cmd_marginals, "print every connection's marginals")
    add("consistency", cmd_consistency, "list connections with unequal marginals")
    p = add("decide", cmd_decide, "decide contextuality under a coupling rule")
    p.add_argument("--traditional", action="store_true", help="identity rule; requires consistency")
    p.add_argument("--constrained", action="store_true", help="use the file's [constraints] section")
    p.add_argument("--full", action="store_true", help="do not prune forced-zero columns")
    add("consistify", cmd_consistify, "write the consistified system")
    p = add("verify-equivalence", cmd_verify_equivalence,
            "compare a system's verdict with its consistification's traditional verdict", nargs="?")
    p.add_argument("--count", type=int, default=0, help="check N seeded random systems instead")
    p.add_argument("--jobs", type=int, default=1)
    add("hvm", cmd_hvm, "extract a hidden-variable model from a witness")
    p = add("gen", cmd_gen, "write a canned or random system file", system=False)
    p.add_argument("name", nargs="?", help="pr-box, classical-corr, noisy-pr(p/q), eq2-format-demo, epr-format")
    p.add_argument("--max-contents", type=int, default=3)
    p.add_argument("--max-contexts", type=int, default=4)
    p.add_argument("--min-contents", type=int, default=1)
    p.add_argument("--min-contexts", type=int, default=1)
    p.add_argument("--alphabet-sizes", type=int, nargs="+", default=[2])
    p.add_argument("--density", default="1/2")
    p.add_argument("--consistency", choices=("consistent", "inconsistent", "either"), default="either")
    p.add_argument("--precision", type=int, default=64)
    p = add("oracle", cmd_oracle, "decide by enumerating deterministic assignments")
    p.add_argument("--max-assignments", type=int, default=DEFAULT_MAX_ASSIGNMENTS)
    p = add("report", cmd_report, "batch run with CSV tables and figures", system=False)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--grid", type=int, default=8, help="visibility grid k/GRID for the noise sweep")
    p.add_argument("--jobs", type=int, default=1)
    return parser


def run_cli(argv: Optional[Sequence[str]] = None, stdout=None) -> tuple[Report, int]:
    """Run one command; returns the report and the exit code."""
    stdout = stdout or sys.stdout
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args.stdout = stdout
    report = Report(command=argv)
    started = time.perf_counter()
    try:
        code = args.func(args, report)
    except TooLarge as exc:
        report.details["error"] = f"guard exceeded: {exc}"
        code = EXIT_GUARD
    except INPUT_ERRORS as exc:
        report.details["error"] = f"{type(exc).__name__}: {exc}"
        code = EXIT_INPUT
    report.exit_code = code
    report.timing["wall_seconds"] = round(time.perf_counter() - started, 6)
    if not report.details.pop("suppress", False):
        text = report.to_json() if args.format == "json" else report.to_text()
        if args.out and args.command not in ("gen", "consistify", "hvm", "report"):
            Path(args.out).write_text(text)
        else:
            stdout.write(text if text.endswith("\n") else text + "\n")
    return report, code


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run_cli(argv)[1]


if __name__ == "__main__":
    sys.exit(main())
