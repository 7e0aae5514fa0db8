"""Canonical modeling and consistification.

For a system with incidence pairs ``(q, c)``, the consistified system has one
content per pair, labeled ``q@c``, and two kinds of contexts:

* main contexts ``bunch:c`` holding the variables ``q@c`` of context ``c``
  with exactly the source bunch distribution;
* auxiliary contexts ``conn:q`` holding the variables ``q@c`` over all
  contexts of ``q``, distributed as the rule's coupling of the connection.

Each consistified content therefore lies in exactly two contexts, and its two
variables share a distribution, so the result is consistently connected.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .contextuality import (
    RuleNotApplicable,
    Verdict,
    decide_contextual,
    decide_traditional,
    witness_is_valid,
    DEFAULT_MAX_COLUMNS,
)
from .couplings import CouplingRule, JointDistribution, get_rule
from .model import (
    BunchDistribution,
    System,
    SystemFormat,
    connection_of,
    is_consistently_connected,
    pair_label,
    validate_system,
)

MAIN = "bunch:"
AUX = "conn:"


class NotACoupling(ValueError):
    pass


def main_context(c: str) -> str:
    return MAIN + c


def aux_context(q: str) -> str:
    return AUX + q


@dataclass(frozen=True)
class ConsistifiedSystem:
    """A consistified system plus the map back to the source format.

    ``content_of`` sends each consistified content to its source ``(q, c)``;
    ``main_of`` and ``aux_of`` send consistified contexts to the source
    context and content they stand for.
    """

    system: System
    rule: str
    content_of: dict[str, tuple[str, str]] = field(default_factory=dict)
    main_of: dict[str, str] = field(default_factory=dict)
    aux_of: dict[str, str] = field(default_factory=dict)

    def source_format(self) -> SystemFormat:
        """Rebuild the source format from the consistified one alone."""
        alphabets = {}
        incidence = set()
        for label, (q, c) in self.content_of.items():
            alphabets[q] = self.system.alphabet(label)
            incidence.add((q, c))
        contexts = tuple(sorted(self.main_of.values()))
        return SystemFormat(
            {q: alphabets[q] for q in sorted(alphabets)}, contexts, frozenset(incidence)
        )


def consistify(system: System, rule: CouplingRule | str = "comonotonic") -> ConsistifiedSystem:
    rule = get_rule(rule)
    fmt = system.format
    alphabets = {}
    content_of = {}
    incidence = set()
    for q, c in fmt.pairs():
        label = pair_label(q, c)
        alphabets[label] = fmt.alphabets[q]
        content_of[label] = (q, c)
        incidence.add((label, main_context(c)))
        incidence.add((label, aux_context(q)))
    bunches = {}
    main_of = {}
    aux_of = {}
    for c in fmt.contexts:
        b = system.bunch(c)
        name = main_context(c)
        main_of[name] = c
        bunches[name] = BunchDistribution(
            name, tuple(pair_label(q, c) for q in b.variables), b.alphabets, b.probs
        )
    for q in fmt.contents:
        conn = connection_of(system, q)
        coupling = rule(conn)
        if coupling is None:
            raise RuleNotApplicable(f"rule {rule.name!r} defines no coupling for content {q!r}")
        name = aux_context(q)
        aux_of[name] = q
        bunches[name] = BunchDistribution(
            name,
            tuple(pair_label(q, c) for c in conn.contexts),
            coupling.alphabets,
            coupling.probs,
        )
    contexts = tuple(sorted(bunches))
    out = validate_system(System(SystemFormat(alphabets, contexts, frozenset(incidence)), bunches))
    return ConsistifiedSystem(out, rule.name, content_of, main_of, aux_of)


def consistify_coupling(coupling: JointDistribution, system: System) -> JointDistribution:
    """Embed an overall coupling of ``system`` into its consistification.

    The variable for ``(q, c)`` appears twice, once per consistified context,
    with literally the same value.
    """
    expected = [pair_label(q, c) for q, c in system.format.pairs()]
    if list(coupling.labels) != expected:
        raise NotACoupling(f"coupling variables {list(coupling.labels)} != {expected}")
    if not coupling.is_distribution():
        raise NotACoupling("coupling is not a probability distribution")
    index = {label: i for i, label in enumerate(coupling.labels)}
    for c in system.contexts:
        b = system.bunch(c)
        m = coupling.marginalize([index[pair_label(q, c)] for q in b.variables])
        if m.probs != b.probs:
            raise NotACoupling(f"coupling does not reproduce the bunch of context {c!r}")

    # consistified overall-coupling variables, content-major as usual
    targets = []
    for src, q, c in sorted((pair_label(q, c), q, c) for q, c in system.format.pairs()):
        for ctx in sorted((main_context(c), aux_context(q))):
            targets.append((pair_label(src, ctx), system.alphabet(q), index[src]))
    variables = tuple((label, alphabet) for label, alphabet, _ in targets)
    masses = {tuple(t[i] for _, _, i in targets): p for t, p in coupling.masses.items()}
    return JointDistribution(variables, masses)


@dataclass
class EquivalenceReport:
    rule: str
    original: Verdict
    consistified: Verdict
    consistently_connected: bool
    format_counts: dict
    witness_transfer: Optional[bool] = None

    @property
    def agree(self) -> bool:
        return self.original.status == self.consistified.status

    @property
    def ok(self) -> bool:
        return (
            self.agree
            and self.consistently_connected
            and self.original.verified
            and self.consistified.verified
            and self.witness_transfer is not False
        )


def format_counts(system: System, cons: ConsistifiedSystem) -> dict:
    inc = cons.system.format
    return {
        "source_contents": len(system.contents),
        "source_contexts": len(system.contexts),
        "source_pairs": len(system.format.incidence),
        "contents": len(cons.system.contents),
        "contexts": len(cons.system.contexts),
        "contexts_per_content": sorted({len(inc.contexts_of(q)) for q in inc.contents}),
    }


def verify_equivalence(
    system: System,
    rule: CouplingRule | str = "comonotonic",
    *,
    max_columns: int = DEFAULT_MAX_COLUMNS,
) -> EquivalenceReport:
    """Decide the source system under ``rule`` and its consistification traditionally.

    When the source is noncontextual its witness is also pushed through
    :func:`consistify_coupling` and checked as a traditional witness of the
    consistified system.
    """
    rule = get_rule(rule)
    cons = consistify(system, rule)
    v1 = decide_contextual(system, rule, max_columns=max_columns)
    v2 = decide_traditional(cons.system, max_columns=max_columns)
    transfer = None
    if v1.witness is not None:
        lifted = consistify_coupling(v1.witness, system)
        transfer = witness_is_valid(cons.system, "identity", lifted)
    return EquivalenceReport(
        rule.name,
        v1,
        v2,
        is_consistently_connected(cons.system).consistent,
        format_counts(system, cons),
        transfer,
    )
