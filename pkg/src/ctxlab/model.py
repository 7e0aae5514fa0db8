"""Systems of random variables: formats, bunches, connections.

A system is a set of variables ``R[q, c]`` indexed by a content ``q`` and a
context ``c``. Variables sharing a context form a *bunch* and are jointly
distributed; variables sharing a content form a *connection* and are not.
Everything here is exact: probabilities are :class:`fractions.Fraction`.

Canonical ordering: contents and contexts sort by label, product outcome
spaces are enumerated lexicographically with the last variable fastest.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence


class SystemValidationError(ValueError):
    """Base class for invalid-system errors."""


class MissingBunch(SystemValidationError):
    pass


class AlphabetMismatch(SystemValidationError):
    pass


class ProbabilitySumError(SystemValidationError):
    pass


class DanglingIncidence(SystemValidationError):
    pass


class InvalidSystem(SystemValidationError):
    """Structural problems not covered by the more specific errors."""


class UnknownContent(KeyError):
    pass


@dataclass(frozen=True)
class Alphabet:
    """Ordered finite list of outcome labels; list position is the order."""

    outcomes: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "outcomes", tuple(str(o) for o in self.outcomes))
        if not self.outcomes:
            raise InvalidSystem("alphabet must have at least one outcome")
        if len(set(self.outcomes)) != len(self.outcomes):
            raise InvalidSystem(f"duplicate outcome in alphabet {self.outcomes}")

    def __len__(self) -> int:
        return len(self.outcomes)

    def __iter__(self) -> Iterator[str]:
        return iter(self.outcomes)

    def index(self, outcome: str) -> int:
        return self.outcomes.index(outcome)


BINARY = Alphabet(("0", "1"))


def product_space(alphabets: Sequence[Alphabet]) -> list[tuple[str, ...]]:
    """All outcome tuples, lexicographic with the last variable fastest."""
    return list(itertools.product(*(a.outcomes for a in alphabets)))


def space_size(alphabets: Sequence[Alphabet]) -> int:
    n = 1
    for a in alphabets:
        n *= len(a)
    return n


@dataclass(frozen=True)
class SystemFormat:
    """The triple (contents, contexts, incidence).

    ``alphabets`` maps each content label to its alphabet; ``incidence`` holds
    the ``(content, context)`` pairs saying which content is recorded in which
    context.
    """

    alphabets: Mapping[str, Alphabet]
    contexts: tuple[str, ...]
    incidence: frozenset[tuple[str, str]]

    @property
    def contents(self) -> tuple[str, ...]:
        return tuple(sorted(self.alphabets))

    def contents_of(self, context: str) -> tuple[str, ...]:
        return tuple(sorted(q for q, c in self.incidence if c == context))

    def contexts_of(self, content: str) -> tuple[str, ...]:
        return tuple(sorted(c for q, c in self.incidence if q == content))

    def pairs(self) -> list[tuple[str, str]]:
        """Incidence pairs in canonical (content-major) order."""
        return sorted(self.incidence)


@dataclass(frozen=True)
class Marginal:
    alphabet: Alphabet
    probs: tuple[Fraction, ...]

    def __getitem__(self, outcome: str) -> Fraction:
        return self.probs[self.alphabet.index(outcome)]

    def as_dict(self) -> dict[str, Fraction]:
        return dict(zip(self.alphabet.outcomes, self.probs))


@dataclass(frozen=True)
class BunchDistribution:
    """Joint law of the variables recorded in one context.

    ``probs`` is dense over the lexicographic product of ``alphabets``.
    """

    context: str
    variables: tuple[str, ...]
    alphabets: tuple[Alphabet, ...]
    probs: tuple[Fraction, ...]

    def outcomes(self) -> list[tuple[str, ...]]:
        return product_space(self.alphabets)

    def table(self) -> dict[tuple[str, ...], Fraction]:
        return dict(zip(self.outcomes(), self.probs))

    def support(self) -> set[tuple[str, ...]]:
        return {t for t, p in zip(self.outcomes(), self.probs) if p}

    def marginal(self, variable: str) -> Marginal:
        i = self.variables.index(variable)
        alphabet = self.alphabets[i]
        acc = dict.fromkeys(alphabet.outcomes, Fraction(0))
        for t, p in zip(self.outcomes(), self.probs):
            acc[t[i]] += p
        return Marginal(alphabet, tuple(acc[a] for a in alphabet.outcomes))


@dataclass(frozen=True)
class System:
    format: SystemFormat
    bunches: Mapping[str, BunchDistribution] = field(default_factory=dict)

    @property
    def contents(self) -> tuple[str, ...]:
        return self.format.contents

    @property
    def contexts(self) -> tuple[str, ...]:
        return self.format.contexts

    def alphabet(self, content: str) -> Alphabet:
        return self.format.alphabets[content]

    def bunch(self, context: str) -> BunchDistribution:
        return self.bunches[context]


@dataclass(frozen=True)
class Connection:
    """Marginals of one content across all contexts recording it."""

    content: str
    alphabet: Alphabet
    marginals: tuple[tuple[str, Marginal], ...]

    @property
    def contexts(self) -> tuple[str, ...]:
        return tuple(c for c, _ in self.marginals)

    def __len__(self) -> int:
        return len(self.marginals)


def _as_fraction(p) -> Fraction:
    if isinstance(p, Fraction):
        return p
    if isinstance(p, float):
        raise InvalidSystem(f"probabilities must be exact, got float {p!r}")
    return Fraction(p)


def make_system(
    alphabets: Mapping[str, Iterable[str] | Alphabet],
    bunches: Mapping[str, tuple[Sequence[str], Mapping[tuple, object] | Sequence]],
) -> System:
    """Convenience constructor followed by :func:`validate_system`.

    ``bunches`` maps a context label to ``(variables, table)`` where
    ``table`` is either a dense probability list (lexicographic over the
    listed variables' alphabets) or a mapping from outcome tuples to
    probabilities, with omitted tuples meaning zero.
    """
    alph = {
        str(q): a if isinstance(a, Alphabet) else Alphabet(tuple(a))
        for q, a in alphabets.items()
    }
    incidence = set()
    raw_bunches = {}
    for c, (variables, table) in bunches.items():
        c = str(c)
        variables = tuple(str(v) for v in variables)
        for v in variables:
            incidence.add((v, c))
        try:
            alphas = tuple(alph[v] for v in variables)
        except KeyError as exc:
            raise DanglingIncidence(
                f"context {c!r} references unknown content {exc.args[0]!r}"
            ) from None
        if isinstance(table, Mapping):
            keyed = {
                tuple(str(x) for x in (k if isinstance(k, tuple) else (k,))): v
                for k, v in table.items()
            }
            space = product_space(alphas)
            unknown = set(keyed) - set(space)
            if unknown:
                raise AlphabetMismatch(
                    f"context {c!r}: outcome tuples {sorted(unknown)} outside the declared alphabets"
                )
            probs = tuple(_as_fraction(keyed.get(t, 0)) for t in space)
        else:
            probs = tuple(_as_fraction(p) for p in table)
        raw_bunches[c] = BunchDistribution(c, variables, alphas, probs)
    fmt = SystemFormat(alph, tuple(sorted(raw_bunches)), frozenset(incidence))
    return validate_system(System(fmt, raw_bunches))


def _canonical_bunch(b: BunchDistribution) -> BunchDistribution:
    order = sorted(range(len(b.variables)), key=lambda i: b.variables[i])
    if order == list(range(len(b.variables))):
        return b
    table = b.table()
    alphas = tuple(b.alphabets[i] for i in order)
    probs = tuple(
        table[tuple(t[order.index(i)] for i in range(len(order)))]
        for t in product_space(alphas)
    )
    return BunchDistribution(
        b.context, tuple(b.variables[i] for i in order), alphas, probs
    )


def validate_system(raw: System) -> System:
    """Check every structural and probabilistic invariant of ``raw``.

    Returns a system with bunch variables in canonical order. Validating an
    already valid, canonical system returns an equal object.
    """
    fmt = raw.format
    contents = set(fmt.alphabets)
    contexts = list(fmt.contexts)
    if not contents:
        raise InvalidSystem("system has no contents")
    if not contexts:
        raise InvalidSystem("system has no contexts")
    if len(set(contexts)) != len(contexts):
        raise InvalidSystem("duplicate context label")
    for label in list(contents) + contexts:
        if not isinstance(label, str) or not label:
            raise InvalidSystem(f"labels must be non-empty strings, got {label!r}")
    for q, c in fmt.incidence:
        if q not in contents:
            raise DanglingIncidence(f"incidence ({q!r}, {c!r}): unknown content {q!r}")
        if c not in contexts:
            raise DanglingIncidence(f"incidence ({q!r}, {c!r}): unknown context {c!r}")
    for q in contents:
        if not fmt.contexts_of(q):
            raise DanglingIncidence(f"content {q!r} appears in no context")
    for c in contexts:
        if not fmt.contents_of(c):
            raise DanglingIncidence(f"context {c!r} contains no content")

    bunches = {}
    for c in sorted(contexts):
        if c not in raw.bunches:
            raise MissingBunch(f"no bunch for context {c!r}")
        b = raw.bunches[c]
        if b.context != c:
            raise InvalidSystem(f"bunch stored under {c!r} is labeled {b.context!r}")
        if len(set(b.variables)) != len(b.variables):
            raise InvalidSystem(f"context {c!r}: duplicate variable in bunch")
        if set(b.variables) != set(fmt.contents_of(c)):
            raise DanglingIncidence(
                f"context {c!r}: bunch variables {sorted(b.variables)} "
                f"do not match incidence {list(fmt.contents_of(c))}"
            )
        if len(b.alphabets) != len(b.variables):
            raise InvalidSystem(f"context {c!r}: one alphabet per variable required")
        for q, a in zip(b.variables, b.alphabets):
            if a != fmt.alphabets[q]:
                raise AlphabetMismatch(
                    f"content {q!r} has alphabet {list(a.outcomes)} in context "
                    f"{c!r} but {list(fmt.alphabets[q].outcomes)} in its declaration"
                )
        if len(b.probs) != space_size(b.alphabets):
            raise InvalidSystem(
                f"context {c!r}: expected {space_size(b.alphabets)} probabilities, "
                f"got {len(b.probs)}"
            )
        if any(type(p) is int for p in b.probs):
            b = replace(b, probs=tuple(Fraction(p) for p in b.probs))
        for p in b.probs:
            if not isinstance(p, Fraction):
                raise InvalidSystem(f"context {c!r}: non-rational probability {p!r}")
            if p < 0 or p > 1:
                raise ProbabilitySumError(f"context {c!r}: probability {p} outside [0, 1]")
        total = sum(b.probs, Fraction(0))
        if total != 1:
            raise ProbabilitySumError(f"context {c!r}: probabilities sum to {total}, not 1")
        bunches[c] = _canonical_bunch(b)
    extra = set(raw.bunches) - set(contexts)
    if extra:
        raise DanglingIncidence(f"bunches for undeclared contexts {sorted(extra)}")

    validated = System(
        SystemFormat(
            {q: fmt.alphabets[q] for q in sorted(contents)},
            tuple(sorted(contexts)),
            frozenset(fmt.incidence),
        ),
        bunches,
    )
    return raw if validated == raw else validated


def connection_of(system: System, q: str) -> Connection:
    """Marginals of content ``q`` in each context, by exact summation."""
    if q not in system.format.alphabets:
        raise UnknownContent(q)
    return Connection(
        q,
        system.alphabet(q),
        tuple((c, system.bunch(c).marginal(q)) for c in system.format.contexts_of(q)),
    )


def connections(system: System) -> list[Connection]:
    return [connection_of(system, q) for q in system.contents]


@dataclass(frozen=True)
class ConsistencyReport:
    consistent: bool
    violations: tuple[tuple[str, str, str], ...]

    def __bool__(self) -> bool:
        return self.consistent


def is_consistently_connected(system: System) -> ConsistencyReport:
    """Check that every connection's marginals coincide exactly.

    Violations are ``(content, context1, context2)`` triples for each pair of
    contexts whose marginals of the content differ.
    """
    violations = []
    for conn in connections(system):
        for (c1, m1), (c2, m2) in itertools.combinations(conn.marginals, 2):
            if m1.probs != m2.probs:
                violations.append((conn.content, c1, c2))
    return ConsistencyReport(not violations, tuple(violations))


def mix_systems(a: System, b: System, weight: Fraction) -> System:
    """Convex mixture ``weight * a + (1 - weight) * b`` of same-format systems."""
    if a.format != b.format:
        raise InvalidSystem("mixture requires identical formats")
    weight = Fraction(weight)
    bunches = {}
    for c in a.contexts:
        ba, bb = a.bunch(c), b.bunch(c)
        bunches[c] = BunchDistribution(
            c,
            ba.variables,
            ba.alphabets,
            tuple(weight * x + (1 - weight) * y for x, y in zip(ba.probs, bb.probs)),
        )
    return validate_system(System(a.format, bunches))


def uniform_system(fmt: SystemFormat) -> System:
    bunches = {}
    for c in fmt.contexts:
        variables = fmt.contents_of(c)
        alphas = tuple(fmt.alphabets[q] for q in variables)
        n = space_size(alphas)
        bunches[c] = BunchDistribution(c, variables, alphas, (Fraction(1, n),) * n)
    return validate_system(System(fmt, bunches))


_SPECIAL = set("@:()\\")


def _wrap(label: str) -> str:
    if not _SPECIAL & set(label):
        return label
    escaped = "".join("\\" + ch if ch in "()\\" else ch for ch in label)
    return f"({escaped})"


def pair_label(q: str, c: str) -> str:
    """Render the variable with content ``q`` in context ``c`` as ``q@c``.

    Labels containing ``@ : ( ) \\`` are parenthesized, with ``( ) \\``
    backslash-escaped inside, so the pair stays recoverable with
    :func:`split_pair_label`.
    """
    return f"{_wrap(q)}@{_wrap(c)}"


def _split_top(label: str, sep: str) -> list[str]:
    parts, depth, cur = [], 0, []
    chars = iter(label)
    for ch in chars:
        if ch == "\\":
            cur.append(ch + next(chars, ""))
            continue
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def _unwrap(s: str) -> str:
    if not (s.startswith("(") and s.endswith(")")):
        return s
    out, chars = [], iter(s[1:-1])
    for ch in chars:
        out.append(next(chars, "") if ch == "\\" else ch)
    return "".join(out)


def split_pair_label(label: str) -> tuple[str, str]:
    parts = _split_top(label, "@")
    if len(parts) != 2 or not all(parts):
        raise ValueError(f"not a pair label: {label!r}")
    return _unwrap(parts[0]), _unwrap(parts[1])
