"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line.

All checks are exact rational comparisons.
"""
import itertools
import time
from fractions import Fraction as F

import pytest

from conftest import SYSTEMS_DIR, TALLY
from oracles import max_equality_by_lp
from ctxlab.consistify import consistify, verify_equivalence
from ctxlab.contextuality import (
    CONTEXTUAL,
    NONCONTEXTUAL,
    build_decision_lp,
    decide_contextual,
    decide_traditional,
    hull_oracle,
)
from ctxlab.couplings import (
    comonotonic_coupling,
    identity_coupling,
    max_equality_bound,
    pairwise_equality_prob,
)
from ctxlab.feasibility import (
    FeasiblePoint,
    InfeasibilityCertificate,
    LinearSystem,
    Optimum,
    maximize,
    solve_feasibility,
    verify_result,
)
from ctxlab.generators import (
    classical_corr,
    corpus_specs,
    epr_format,
    eq2_format_demo,
    gen_system,
    noisy_pr,
    pr_box,
)
from ctxlab.hvm import hvm_from_witness, hvm_reproduces
from ctxlab.io import parse_document, serialize_system
from ctxlab.model import BINARY, Connection, Marginal, is_consistently_connected, make_system

CORPUS_SEED = 20240611
GRID = [F(k, 8) for k in range(9)]


def announce(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
    assert ok, detail


def canned():
    return {
        "pr-box": pr_box(),
        "classical-corr": classical_corr(),
        "eq2-format-demo": eq2_format_demo(),
        "epr-format": epr_format(),
        **{f"noisy-pr({v})": noisy_pr(v) for v in GRID},
    }


def chsh_correlated(agree):
    pairs = {"1": ("1", "2"), "2": ("2", "3"), "3": ("3", "4"), "4": ("1", "4")}
    bunches = {c: (qs, [a / 2, (1 - a) / 2, (1 - a) / 2, a / 2]) for (c, qs), a in zip(pairs.items(), agree)}
    return make_system({q: "01" for q in "1234"}, bunches)


@pytest.fixture(scope="module")
def corpus():
    specs = corpus_specs(200, CORPUS_SEED)
    return [gen_system(s) for s in specs]


@pytest.fixture(scope="module")
def equivalence(corpus):
    started = time.perf_counter()
    reports = [verify_equivalence(s, "comonotonic") for s in corpus]
    return reports, time.perf_counter() - started


def test_1_equivalence_round_trip(capsys, corpus, equivalence):
    reports, seconds = equivalence
    consistent = sum(is_consistently_connected(s).consistent for s in corpus)
    largest = max(len(s.contents) for s in corpus), max(len(s.contexts) for s in corpus)
    disagreements = sum(not r.agree for r in reports)
    unverified = sum(not (r.original.verified and r.consistified.verified) for r in reports)
    contextual = sum(r.original.status == CONTEXTUAL for r in reports)
    ok = (
        len(corpus) >= 200 and 0 < consistent < len(corpus) and largest[0] <= 3 and largest[1] <= 4
        and disagreements == 0 and unverified == 0 and seconds < 300
    )
    announce(capsys, 1, ok,
             f"{len(corpus)} systems ({consistent} consistent, {contextual} contextual, "
             f"largest {largest[0]}x{largest[1]}), {disagreements} disagreements, "
             f"{unverified} unverified, {seconds:.1f}s")


def test_2_consistification_structure(capsys, corpus):
    bad = []
    for i, s in enumerate(list(corpus) + list(canned().values())):
        out = consistify(s, "comonotonic").system
        if not (
            is_consistently_connected(out).consistent
            and len(out.contents) == len(s.format.incidence)
            and len(out.contexts) == len(s.contexts) + len(s.contents)
            and all(len(out.format.contexts_of(q)) == 2 for q in out.contents)
        ):
            bad.append(i)
    eq2 = consistify(eq2_format_demo()).system
    epr = consistify(epr_format()).system
    counts = (len(eq2.contents), len(eq2.contexts)), (len(epr.contents), len(epr.contexts))
    ok = not bad and counts == ((9, 7), (8, 8))
    announce(capsys, 2, ok,
             f"{len(corpus) + len(canned())} systems checked, {len(bad)} structural failures; "
             f"three-content format -> {counts[0][0]}x{counts[0][1]}, cyclic -> {counts[1][0]}x{counts[1][1]}")


def test_3_reduction_to_traditional(capsys):
    systems = [gen_system(s) for s in corpus_specs(120, CORPUS_SEED + 1, consistency="consistent")]
    systems += [noisy_pr(v) for v in GRID]
    systems += [chsh_correlated(a) for a in itertools.product([F(0), F(1, 4), F(7, 8), F(1)], repeat=4)]
    mismatched = 0
    contextual = 0
    for s in systems:
        assert is_consistently_connected(s).consistent
        a = decide_contextual(s, "comonotonic").status
        b = decide_contextual(s, "identity").status
        mismatched += a != b
        contextual += a == CONTEXTUAL
    ok = len(systems) >= 100 and mismatched == 0
    announce(capsys, 3, ok,
             f"{len(systems)} consistent systems ({contextual} contextual), "
             f"{mismatched} comonotonic/identity mismatches")


def test_4_oracle_agreement(capsys, corpus, equivalence):
    reports, _ = equivalence
    mismatched = []
    for i, (s, r) in enumerate(zip(corpus, reports)):
        if hull_oracle(s, "comonotonic").status != r.original.status:
            mismatched.append(i)
    for name, s in canned().items():
        for rule in ("identity", "comonotonic"):
            if hull_oracle(s, rule).status != decide_contextual(s, rule).status:
                mismatched.append(name)
    ok = not mismatched
    announce(capsys, 4, ok,
             f"{len(corpus)} corpus systems + {len(canned())} canned systems x 2 rules, "
             f"{len(mismatched)} LP/oracle mismatches")


def test_5_canned_verdicts(capsys):
    got = {
        "pr-box": decide_contextual(pr_box()).status,
        "classical-corr": decide_contextual(classical_corr()).status,
    }
    sweep = {v: decide_contextual(noisy_pr(v)).status for v in GRID}
    oracle = {v: hull_oracle(noisy_pr(v), "identity").status for v in GRID}
    expected_sweep = {v: CONTEXTUAL if v > F(1, 2) else NONCONTEXTUAL for v in GRID}
    ok = (
        got == {"pr-box": CONTEXTUAL, "classical-corr": NONCONTEXTUAL}
        and sweep == expected_sweep == oracle
    )
    boundary = min(v for v, st in sweep.items() if st == CONTEXTUAL)
    announce(capsys, 5, ok,
             f"pr-box {got['pr-box']}, classical-corr {got['classical-corr']}, "
             f"noisy-pr contextual from {boundary} on the k/8 grid (last noncontextual 1/2)")


def lp_max_equality(p, r):
    """max P(X=Y) for binary marginals, by exact LP over the four cells 00, 01, 10, 11."""
    ls = LinearSystem(["00", "01", "10", "11"])
    ls.add_row([0, 0, 1, 1], "=", p)
    ls.add_row([0, 1, 0, 1], "=", r)
    ls.add_row([1, 1, 1, 1], "=", 1)
    opt = maximize(ls, [1, 0, 0, 1])
    assert isinstance(opt, Optimum)
    return opt.value


def test_6_coupling_rule_laws(capsys):
    grid = sorted({F(a, d) for d in range(1, 17) for a in range(d + 1)})
    failures = 0
    checked = 0
    for p, r in itertools.product(grid, repeat=2):
        conn = Connection("q", BINARY, (("a", Marginal(BINARY, (1 - p, p))), ("b", Marginal(BINARY, (1 - r, r)))))
        j = comonotonic_coupling(conn)
        checked += 1
        if j.marginal(0).probs != (1 - p, p) or j.marginal(1).probs != (1 - r, r):
            failures += 1
        if p == r and j != identity_coupling(conn):
            failures += 1
        eq = pairwise_equality_prob(j, 0, 1)
        formula = min(p, r) + min(1 - p, 1 - r)
        if not eq == formula == max_equality_bound(j.marginal(0), j.marginal(1)) == lp_max_equality(p, r) == max_equality_by_lp(p, r):
            failures += 1
    ok = failures == 0
    announce(capsys, 6, ok,
             f"{checked} binary marginal pairs over {len(grid)} grid points (denominators <= 16), "
             f"{failures} law violations")


def test_8_hidden_variable_models(capsys, corpus, equivalence):
    reports, _ = equivalence
    built = failed = 0
    for s, r in zip(corpus, reports):
        if r.original.status == NONCONTEXTUAL:
            built += 1
            failed += not hvm_reproduces(hvm_from_witness(r.original, s), s)
    context_free = context_bound = 0
    consistent = [s for s in corpus if is_consistently_connected(s).consistent]
    consistent += [classical_corr()] + [noisy_pr(v) for v in GRID if v <= F(1, 2)]
    for s in consistent:
        hvm = hvm_from_witness(decide_contextual(s, "identity"), s)
        built += 1
        failed += not hvm_reproduces(hvm, s)
        if hvm.context_dependent:
            context_bound += 1
        else:
            context_free += 1
    ok = failed == 0 and context_bound == 0
    announce(capsys, 8, ok,
             f"{built} models built, {failed} failed to reproduce; identity-rule models on "
             f"{len(consistent)} consistent systems: {context_free} context-free")


def test_9_io_round_trip(capsys, corpus):
    failures = 0
    files = sorted(SYSTEMS_DIR.glob("*.sys"))
    for path in files:
        s, cons = parse_document(path.read_text())
        text = serialize_system(s, cons)
        failures += parse_document(text) != (s, cons) or serialize_system(*parse_document(text)) != text
    generated = list(corpus) + list(canned().values()) + [consistify(s).system for s in corpus[:50]]
    for s in generated:
        text = serialize_system(s)
        back = parse_document(text)[0]
        failures += back != s or serialize_system(back) != text
    ok = failures == 0 and len(files) > 0
    announce(capsys, 9, ok,
             f"{len(files)} shipped files + {len(generated)} generated systems, {failures} round-trip failures")


def test_7_lp_soundness(capsys):
    # runs last: the session tally covers every decision and oracle LP solved so far
    lp = build_decision_lp(noisy_pr(F(3, 4)), "identity", prune=False)
    cert = solve_feasibility(lp)
    point_lp = build_decision_lp(noisy_pr(F(1, 4)), "identity", prune=False)
    point = solve_feasibility(point_lp)
    assert isinstance(cert, InfeasibilityCertificate) and isinstance(point, FeasiblePoint)
    tampered = []
    ys = list(cert.row_multipliers)
    k = next(i for i, y in enumerate(ys) if y)
    ys[k] += 1
    tampered.append((lp, InfeasibilityCertificate(tuple(ys), cert.nonneg_multipliers)))
    zs = list(cert.nonneg_multipliers)
    zs[0] -= 1
    tampered.append((lp, InfeasibilityCertificate(cert.row_multipliers, tuple(zs))))
    for j in (0, len(point.values) - 1):
        xs = list(point.values)
        xs[j] += F(1, 64)
        tampered.append((point_lp, FeasiblePoint(tuple(xs))))
    tampered.append((point_lp, FeasiblePoint(tuple(-x for x in point.values))))
    caught = sum(not verify_result(ls, r) for ls, r in tampered)
    ok = TALLY.checked > 0 and TALLY.failed == 0 and caught == len(tampered)
    announce(capsys, 7, ok,
             f"{TALLY.checked - TALLY.failed}/{TALLY.checked} solver outputs verified; "
             f"{caught}/{len(tampered)} tampered results rejected")
