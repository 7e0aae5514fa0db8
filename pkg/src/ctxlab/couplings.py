"""Couplings of connections and well-fitting coupling rules.

A coupling rule maps a connection (a list of marginals that are *not*
jointly distributed) to one joint distribution having those marginals. A
rule is well-fitting when the output always preserves the marginals, is the
identity coupling whenever all marginals coincide, and is deterministic.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .model import Alphabet, AlphabetMismatch, Connection, Marginal, product_space

ZERO = Fraction(0)


@dataclass(frozen=True)
class JointDistribution:
    """Exact joint law of labeled discrete variables.

    Stored sparsely as a mapping from outcome tuples (in variable order) to
    positive probabilities; :attr:`probs` gives the dense vector over the
    lexicographic product space.
    """

    variables: tuple[tuple[str, Alphabet], ...]
    masses: Mapping[tuple[str, ...], Fraction] = field(default_factory=dict)

    def __post_init__(self):
        alphas = [a for _, a in self.variables]
        items = [(tuple(t), Fraction(p)) for t, p in self.masses.items() if p]
        for t, _ in items:
            if len(t) != len(alphas):
                raise ValueError(f"outcome {t} does not match {len(alphas)} variables")
        # iteration order is lexicographic in alphabet order
        items.sort(key=lambda kv: tuple(a.index(x) for a, x in zip(alphas, kv[0])))
        object.__setattr__(self, "masses", dict(items))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.variables)

    @property
    def alphabets(self) -> tuple[Alphabet, ...]:
        return tuple(a for _, a in self.variables)

    @property
    def probs(self) -> tuple[Fraction, ...]:
        return tuple(self.masses.get(t, ZERO) for t in product_space(self.alphabets))

    def prob(self, outcome: Sequence[str]) -> Fraction:
        return self.masses.get(tuple(outcome), ZERO)

    def support(self) -> list[tuple[str, ...]]:
        return list(self.masses)

    def total(self) -> Fraction:
        return sum(self.masses.values(), ZERO)

    def is_distribution(self) -> bool:
        return self.total() == 1 and all(p > 0 for p in self.masses.values())

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def marginalize(self, indices: Sequence[int]) -> "JointDistribution":
        acc: dict[tuple[str, ...], Fraction] = {}
        for t, p in self.masses.items():
            key = tuple(t[i] for i in indices)
            acc[key] = acc.get(key, ZERO) + p
        return JointDistribution(tuple(self.variables[i] for i in indices), acc)

    def marginal(self, i: int) -> Marginal:
        joint = self.marginalize([i])
        alphabet = self.variables[i][1]
        return Marginal(alphabet, tuple(joint.prob((a,)) for a in alphabet))

    def relabel(self, labels: Sequence[str]) -> "JointDistribution":
        return JointDistribution(
            tuple((new, a) for new, (_, a) in zip(labels, self.variables)), self.masses
        )


@dataclass(frozen=True)
class CouplingRule:
    """A named deterministic map from connections to couplings.

    ``apply`` returns ``None`` when the rule does not define a coupling for
    the connection (the identity rule on unequal marginals).
    """

    name: str
    apply: Callable[[Connection], Optional[JointDistribution]]

    def __call__(self, conn: Connection) -> Optional[JointDistribution]:
        return self.apply(conn)


def _coupling_variables(conn: Connection) -> tuple[tuple[str, Alphabet], ...]:
    return tuple((c, conn.alphabet) for c in conn.contexts)


def identity_coupling(conn: Connection) -> Optional[JointDistribution]:
    """Diagonal coupling; ``None`` unless all marginals are equal."""
    first = conn.marginals[0][1]
    if any(m.probs != first.probs for _, m in conn.marginals[1:]):
        return None
    k = len(conn)
    return JointDistribution(
        _coupling_variables(conn),
        {(a,) * k: p for a, p in zip(conn.alphabet.outcomes, first.probs)},
    )


def quantile_cells(marginals: Sequence[Marginal]) -> list[tuple[tuple[int, ...], Fraction]]:
    """Partition (0, 1] at the joint CDF breakpoints.

    Each cell is returned as (outcome index per marginal, cell length).
    A variable takes outcome ``m`` on ``(F(m-1), F(m)]``.
    """
    cdfs = [list(itertools.accumulate(m.probs)) for m in marginals]
    breaks = sorted({x for cdf in cdfs for x in cdf if x > 0})
    cells = []
    lo = ZERO
    for hi in breaks:
        # first outcome whose cumulative probability reaches the cell's right end
        idx = tuple(next(j for j, f in enumerate(cdf) if f >= hi) for cdf in cdfs)
        cells.append((idx, hi - lo))
        lo = hi
    return cells


def comonotonic_coupling(conn: Connection) -> JointDistribution:
    """All variables driven by one uniform variable through their quantiles."""
    alphabet = conn.alphabet
    masses: dict[tuple[str, ...], Fraction] = {}
    for idx, length in quantile_cells([m for _, m in conn.marginals]):
        t = tuple(alphabet.outcomes[i] for i in idx)
        masses[t] = masses.get(t, ZERO) + length
    return JointDistribution(_coupling_variables(conn), masses)


def product_coupling(conn: Connection) -> JointDistribution:
    """Independent coupling; not well-fitting, used as a negative control."""
    masses = {}
    for t in product_space([conn.alphabet] * len(conn)):
        p = Fraction(1)
        for (_, m), x in zip(conn.marginals, t):
            p *= m[x]
        masses[t] = p
    return JointDistribution(_coupling_variables(conn), masses)


IDENTITY = CouplingRule("identity", identity_coupling)
COMONOTONIC = CouplingRule("comonotonic", comonotonic_coupling)
RULES = {r.name: r for r in (IDENTITY, COMONOTONIC)}


def get_rule(rule: str | CouplingRule) -> CouplingRule:
    if isinstance(rule, CouplingRule):
        return rule
    try:
        return RULES[rule]
    except KeyError:
        raise ValueError(f"unknown coupling rule {rule!r}; choose from {sorted(RULES)}") from None


def pairwise_equality_prob(joint: JointDistribution, i: int, j: int) -> Fraction:
    """Probability that variables ``i`` and ``j`` take the same value."""
    n = len(joint.variables)
    for k in (i, j):
        if not -n <= k < n:
            raise IndexError(f"variable index {k} out of range for {n} variables")
    if joint.variables[i][1] != joint.variables[j][1]:
        raise AlphabetMismatch(f"variables {i} and {j} have different alphabets")
    return sum((p for t, p in joint.masses.items() if t[i] == t[j]), ZERO)


def max_equality_bound(m1: Marginal, m2: Marginal) -> Fraction:
    """Largest possible P(X = Y) over all couplings: sum of pointwise minima."""
    return sum((min(a, b) for a, b in zip(m1.probs, m2.probs)), ZERO)


@dataclass(frozen=True)
class ConnectionConstraintSet:
    """Linear constraints on the coupling of one connection.

    Each constraint is ``(coefficients, relation, bound)`` where the
    coefficient vector runs over the connection's lexicographic product space
    and ``relation`` is one of ``"<="``, ``"="``, ``">="``.
    """

    content: str
    constraints: tuple[tuple[tuple[Fraction, ...], str, Fraction], ...]

    @classmethod
    def point(cls, content: str, joint: JointDistribution) -> "ConnectionConstraintSet":
        """Equality constraints pinning the coupling to ``joint``."""
        space = product_space(joint.alphabets)
        rows = []
        for k, t in enumerate(space):
            coeffs = tuple(Fraction(int(m == k)) for m in range(len(space)))
            rows.append((coeffs, "=", joint.prob(t)))
        return cls(content, tuple(rows))


@dataclass
class WellFittingReport:
    rule: str
    checked: int = 0
    violations: list[tuple[int, str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_well_fitting(rule: CouplingRule, conns: Iterable[Connection]) -> WellFittingReport:
    """Check marginal preservation, identity reduction and determinism.

    Violations are ``(connection index, law, detail)``. A rule returning no
    coupling is reported under the law ``"not-applicable"``.
    """
    report = WellFittingReport(rule.name)
    for n, conn in enumerate(conns):
        report.checked += 1
        out = rule(conn)
        if out is None:
            report.violations.append((n, "not-applicable", f"content {conn.content!r}"))
            continue
        if not out.is_distribution():
            report.violations.append((n, "distribution", f"total mass {out.total()}"))
        for i, (c, m) in enumerate(conn.marginals):
            if out.marginal(i).probs != m.probs:
                report.violations.append((n, "marginal-preservation", f"context {c!r}"))
        ident = identity_coupling(conn)
        if ident is not None and out != ident:
            report.violations.append((n, "identity-reduction", "equal marginals, non-identity output"))
        if rule(conn) != out:
            report.violations.append((n, "determinism", "repeated application differs"))
    return report
