"""Contextuality decisions as exact LP feasibility problems.

The unknowns are the probabilities of an overall coupling: one jointly
distributed variable per (content, context) pair. A system is noncontextual
under a coupling rule when some overall coupling reproduces every bunch and,
for every content, marginalizes onto that connection as exactly the rule's
coupling.

By default the column set is *pruned*: an outcome tuple whose projection onto
some bunch, or onto some rule coupling, has probability zero is forced to
zero by an equality row with nonnegative coefficients, so it is never
generated. The pruned and full problems are feasible together.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .couplings import (
    IDENTITY,
    ConnectionConstraintSet,
    CouplingRule,
    JointDistribution,
    get_rule,
)
from .feasibility import (
    DimensionMismatch,
    FeasiblePoint,
    InfeasibilityCertificate,
    LinearSystem,
    solve_feasibility,
    verify_result,
)
from .model import (
    Alphabet,
    System,
    connection_of,
    is_consistently_connected,
    pair_label,
    product_space,
    space_size,
)

NONCONTEXTUAL = "Noncontextual"
CONTEXTUAL = "Contextual"

DEFAULT_MAX_COLUMNS = 2**18
DEFAULT_MAX_ASSIGNMENTS = 2**20


class RuleNotApplicable(ValueError):
    pass


class NotConsistentlyConnected(ValueError):
    pass


class TooLarge(RuntimeError):
    pass


@dataclass(frozen=True)
class AnalysisConfig:
    """A theory: a coupling rule plus restrictions on admissible systems."""

    rule: str = "comonotonic"
    dichotomous_only: bool = False
    max_alphabet: Optional[int] = None
    max_columns: int = DEFAULT_MAX_COLUMNS
    max_assignments: int = DEFAULT_MAX_ASSIGNMENTS

    def admits(self, system: System) -> bool:
        sizes = [len(system.alphabet(q)) for q in system.contents]
        if self.dichotomous_only and any(k != 2 for k in sizes):
            return False
        if self.max_alphabet is not None and any(k > self.max_alphabet for k in sizes):
            return False
        rule = get_rule(self.rule)
        return all(rule(connection_of(system, q)) is not None for q in system.contents)


def coupling_variables(system: System) -> list[tuple[str, str]]:
    """(content, context) pairs of an overall coupling, content-major."""
    return system.format.pairs()


class CouplingLP(LinearSystem):
    """A :class:`LinearSystem` whose columns are outcome tuples of a coupling."""

    def __init__(self, variables: Sequence[tuple[str, str]], alphabets: Sequence[Alphabet]):
        super().__init__()
        self.variables = list(variables)
        self.alphabets = list(alphabets)

    def joint(self, values: Sequence[Fraction]) -> JointDistribution:
        labels = [pair_label(q, c) for q, c in self.variables]
        return JointDistribution(
            tuple(zip(labels, self.alphabets)),
            {t: v for t, v in zip(self.columns, values) if v},
        )


def _rule_targets(system: System, rule: CouplingRule) -> dict[str, JointDistribution]:
    targets = {}
    for q in system.contents:
        out = rule(connection_of(system, q))
        if out is None:
            raise RuleNotApplicable(
                f"rule {rule.name!r} defines no coupling for content {q!r}"
            )
        targets[q] = out
    return targets


def _enumerate_columns(
    system: System,
    allowed: Mapping[str, Sequence[tuple[str, ...]]],
    bunch_supports: Optional[Mapping[str, set]],
    max_columns: int,
) -> list[tuple[str, ...]]:
    """Outcome tuples built connection by connection, filtered by bunch support."""
    variables = coupling_variables(system)
    pos = {v: i for i, v in enumerate(variables)}
    order = list(system.contents)
    # a bunch can be checked once its last content (in order) is placed
    checks: dict[str, list[tuple[list[int], set]]] = {q: [] for q in order}
    if bunch_supports is not None:
        for c in system.contexts:
            qs = system.format.contents_of(c)
            last = max(qs, key=order.index)
            checks[last].append(([pos[(q, c)] for q in qs], bunch_supports[c]))
    partial: list[tuple[str, ...]] = [()]
    for q in order:
        grown = []
        for head in partial:
            for block in allowed[q]:
                t = head + block
                if all(tuple(t[i] for i in idx) in sup for idx, sup in checks[q]):
                    grown.append(t)
            if len(grown) > max_columns:
                raise TooLarge(
                    f"more than {max_columns} coupling columns; raise max_columns to proceed"
                )
        partial = grown
    return partial


def _coupling_lp(
    system: System,
    targets: Mapping[str, JointDistribution],
    constraints: Mapping[str, ConnectionConstraintSet],
    prune: bool,
    max_columns: int,
) -> CouplingLP:
    variables = coupling_variables(system)
    alphabets = [system.alphabet(q) for q, _ in variables]
    pos = {v: i for i, v in enumerate(variables)}
    allowed = {}
    for q in system.contents:
        k = len(system.format.contexts_of(q))
        full = product_space([system.alphabet(q)] * k)
        if prune and q in targets:
            allowed[q] = targets[q].support()
        else:
            allowed[q] = full
    supports = None
    if prune:
        supports = {c: system.bunch(c).support() for c in system.contexts}
    if not prune:
        n = space_size(alphabets)
        if n > max_columns:
            raise TooLarge(f"full product space has {n} columns > {max_columns}")
    cols = _enumerate_columns(system, allowed, supports, max_columns)

    lp = CouplingLP(variables, alphabets)
    lp.columns = cols
    ncols = len(cols)
    lp.add_row({j: 1 for j in range(ncols)}, "=", 1, ("norm",))

    for c in system.contexts:
        b = system.bunch(c)
        idx = [pos[(q, c)] for q in b.variables]
        groups: dict[tuple[str, ...], list[int]] = {}
        for j, t in enumerate(cols):
            groups.setdefault(tuple(t[i] for i in idx), []).append(j)
        for t, p in zip(b.outcomes(), b.probs):
            members = groups.get(t, [])
            if members or p:
                lp.add_row({j: 1 for j in members}, "=", p, ("bunch", c, t))

    for q in system.contents:
        idx = [pos[(q, c)] for c in system.format.contexts_of(q)]
        if q not in targets and q not in constraints:
            continue
        groups = {}
        for j, t in enumerate(cols):
            groups.setdefault(tuple(t[i] for i in idx), []).append(j)
        space = product_space([system.alphabet(q)] * len(idx))
        if q in targets:
            target = targets[q]
            for t in space:
                members = groups.get(t, [])
                p = target.prob(t)
                if members or p:
                    lp.add_row({j: 1 for j in members}, "=", p, ("conn", q, t))
        if q in constraints:
            for k, (coeffs, rel, bound) in enumerate(constraints[q].constraints):
                if len(coeffs) != len(space):
                    raise DimensionMismatch(
                        f"constraint {k} on content {q!r} has {len(coeffs)} coefficients, "
                        f"connection space has {len(space)}"
                    )
                row = {}
                for t, a in zip(space, coeffs):
                    if a:
                        for j in groups.get(t, []):
                            row[j] = Fraction(a)
                lp.add_row(row, rel, bound, ("constraint", q, k))
    return lp


def build_decision_lp(
    system: System,
    rule: CouplingRule | str,
    *,
    prune: bool = True,
    max_columns: int = DEFAULT_MAX_COLUMNS,
) -> CouplingLP:
    """LP whose feasibility means the system is noncontextual under ``rule``.

    Rows: normalization, one block per bunch (the coupling's marginal on that
    context equals the bunch) and one block per connection (its marginal on
    the connection equals the rule's coupling). With ``prune=False`` the
    columns are the whole product space of the coupling variables.
    """
    rule = get_rule(rule)
    targets = _rule_targets(system, rule)
    return _coupling_lp(system, targets, {}, prune, max_columns)


@dataclass
class Verdict:
    status: str
    rule: str
    witness: Optional[JointDistribution] = None
    certificate: Optional[InfeasibilityCertificate] = None
    verified: bool = False
    lp_shape: tuple[int, int] = (0, 0)
    seconds: float = 0.0
    lp: Optional[LinearSystem] = field(default=None, repr=False, compare=False)
    weights: Optional[dict] = field(default=None, repr=False)

    @property
    def contextual(self) -> bool:
        return self.status == CONTEXTUAL


def _solve(lp: LinearSystem, rule_name: str, started: float) -> Verdict:
    result = solve_feasibility(lp)
    ok = verify_result(lp, result)
    if not ok:
        # a solver bug, never a property of the input
        raise AssertionError("solver output failed exact verification")
    if isinstance(result, FeasiblePoint):
        witness = lp.joint(result.values) if isinstance(lp, CouplingLP) else None
        return Verdict(NONCONTEXTUAL, rule_name, witness=witness, verified=ok,
                       lp_shape=lp.shape, seconds=time.perf_counter() - started, lp=lp)
    return Verdict(CONTEXTUAL, rule_name, certificate=result, verified=ok,
                   lp_shape=lp.shape, seconds=time.perf_counter() - started, lp=lp)


def decide_contextual(
    system: System,
    rule: CouplingRule | str = "comonotonic",
    *,
    prune: bool = True,
    max_columns: int = DEFAULT_MAX_COLUMNS,
) -> Verdict:
    started = time.perf_counter()
    rule = get_rule(rule)
    lp = build_decision_lp(system, rule, prune=prune, max_columns=max_columns)
    return _solve(lp, rule.name, started)


def decide_relaxed(
    system: System,
    rule: CouplingRule | str,
    skip: Iterable[str],
    *,
    max_columns: int = DEFAULT_MAX_COLUMNS,
) -> Verdict:
    """Like :func:`decide_contextual` but leaves the connections in ``skip`` uncoupled."""
    started = time.perf_counter()
    rule = get_rule(rule)
    skip = set(skip)
    targets = {q: t for q, t in _rule_targets(system, rule).items() if q not in skip}
    return _solve(_coupling_lp(system, targets, {}, True, max_columns), rule.name, started)


def decide_traditional(system: System, **kwargs) -> Verdict:
    """Traditional contextuality: every connection coupled as an identity."""
    report = is_consistently_connected(system)
    if not report.consistent:
        q, c1, c2 = report.violations[0]
        raise NotConsistentlyConnected(
            f"content {q!r} is distributed differently in contexts {c1!r} and {c2!r}"
        )
    return decide_contextual(system, IDENTITY, **kwargs)


def decide_contextual_constrained(
    system: System,
    constraints: Mapping[str, ConnectionConstraintSet] | Sequence[ConnectionConstraintSet],
    *,
    max_columns: int = DEFAULT_MAX_COLUMNS,
) -> Verdict:
    """Noncontextuality with each connection coupling confined to a polytope.

    Contents without a constraint set are unconstrained.
    """
    started = time.perf_counter()
    if not isinstance(constraints, Mapping):
        constraints = {cs.content: cs for cs in constraints}
    for q in constraints:
        if q not in system.format.alphabets:
            raise DimensionMismatch(f"constraints given for unknown content {q!r}")
    lp = _coupling_lp(system, {}, constraints, True, max_columns)
    return _solve(lp, "constrained", started)


def witness_is_valid(system: System, rule: CouplingRule | str, witness: JointDistribution) -> bool:
    """Check by marginalization that ``witness`` reproduces bunches and rule couplings."""
    rule = get_rule(rule)
    if not witness.is_distribution():
        return False
    index = {label: i for i, label in enumerate(witness.labels)}
    try:
        for c in system.contexts:
            b = system.bunch(c)
            m = witness.marginalize([index[pair_label(q, c)] for q in b.variables])
            if m.probs != b.probs:
                return False
        for q in system.contents:
            cs = system.format.contexts_of(q)
            m = witness.marginalize([index[pair_label(q, c)] for c in cs])
            target = rule(connection_of(system, q))
            if target is None or m.masses != target.masses:
                return False
    except KeyError:
        return False
    return True


def moment_coordinates(system: System, rule: CouplingRule) -> list[tuple[tuple, Fraction]]:
    """Target vector: every bunch probability, then every rule-coupling probability."""
    coords = []
    for c in system.contexts:
        b = system.bunch(c)
        coords.extend((("bunch", c, t), p) for t, p in zip(b.outcomes(), b.probs))
    for q in system.contents:
        target = rule(connection_of(system, q))
        if target is None:
            raise RuleNotApplicable(f"rule {rule.name!r} defines no coupling for content {q!r}")
        for t in product_space(target.alphabets):
            coords.append((("conn", q, t), target.prob(t)))
    return coords


def hull_oracle(
    system: System,
    rule: CouplingRule | str = "comonotonic",
    *,
    max_assignments: int = DEFAULT_MAX_ASSIGNMENTS,
) -> Verdict:
    """Decide membership of the moment vector in the hull of deterministic assignments.

    Every global assignment of the coupling variables is a vertex whose
    moment vector is a 0/1 indicator; the system is noncontextual iff the
    target moment vector is a convex mixture of these. Built from scratch,
    without the row construction used by :func:`decide_contextual`.
    """
    started = time.perf_counter()
    rule = get_rule(rule)
    pairs = coupling_variables(system)
    alphabets = [system.alphabet(q) for q, _ in pairs]
    total = space_size(alphabets)
    if total > max_assignments:
        raise TooLarge(f"{total} global assignments exceed the guard {max_assignments}")

    coords = moment_coordinates(system, rule)
    target = dict(coords)
    where = {p: i for i, p in enumerate(pairs)}
    ctx_idx = [(c, [where[(q, c)] for q in system.bunch(c).variables]) for c in system.contexts]
    conn_idx = [(q, [where[(q, c)] for c in system.format.contexts_of(q)]) for q in system.contents]

    vertices = []
    hits: dict[tuple, list[int]] = {}
    for a in itertools.product(*(al.outcomes for al in alphabets)):
        keys = [("bunch", c, tuple(a[i] for i in idx)) for c, idx in ctx_idx]
        keys += [("conn", q, tuple(a[i] for i in idx)) for q, idx in conn_idx]
        # a vertex touching a zero-target coordinate must get zero weight
        if any(target[k] == 0 for k in keys):
            continue
        j = len(vertices)
        vertices.append(a)
        for k in keys:
            hits.setdefault(k, []).append(j)

    ls = LinearSystem(list(vertices))
    ls.add_row({j: 1 for j in range(len(vertices))}, "=", 1, ("weights",))
    for key, p in coords:
        if p:
            ls.add_row({j: 1 for j in hits.get(key, [])}, "=", p, key)
    result = solve_feasibility(ls)
    ok = verify_result(ls, result)
    if not ok:
        raise AssertionError("oracle LP output failed exact verification")
    elapsed = time.perf_counter() - started
    if isinstance(result, FeasiblePoint):
        weights = {v: w for v, w in zip(vertices, result.values) if w}
        labels = [pair_label(q, c) for q, c in pairs]
        witness = JointDistribution(tuple(zip(labels, alphabets)), weights)
        return Verdict(NONCONTEXTUAL, rule.name, witness=witness, verified=ok,
                       lp_shape=ls.shape, seconds=elapsed, lp=ls, weights=weights)
    return Verdict(CONTEXTUAL, rule.name, certificate=result, verified=ok,
                   lp_shape=ls.shape, seconds=elapsed, lp=ls)
