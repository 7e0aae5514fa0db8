"""System files and reports.

System file grammar (one statement per line, ``#`` starts a comment,
tokens are separated by whitespace, the lone token ``:`` is a separator)::

    [contents]
    <content> : <outcome> <outcome> ...      # alphabet in order
    [contexts]
    <context> : <content> <content> ...      # fixes tuple order below
    [bunches]
    context <context>
    <outcome> ... : <rational>               # one outcome per listed content
    [constraints]                            # optional
    content <content>
    <coef> ... <relation> <rational>         # relation is <=, = or >=

A rational is an integer or ``p/q`` with ``q > 0``. Omitted outcome tuples
have probability zero. Labels may contain any non-whitespace characters
except ``#``, must not be exactly ``:`` and must not start with ``[``.

:func:`serialize_system` writes the canonical form: sorted labels, contents
listed in canonical order within each context, nonzero tuples only.
"""
from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Mapping, Optional

from .couplings import ConnectionConstraintSet
from .hvm import HiddenVariableModel
from .model import (
    Alphabet,
    BunchDistribution,
    DanglingIncidence,
    Marginal,
    System,
    SystemFormat,
    product_space,
    validate_system,
)

SECTIONS = ("contents", "contexts", "bunches", "constraints")
_RATIONAL = re.compile(r"^-?[0-9]+(?:/[0-9]+)?$")


class SystemFileSyntaxError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def parse_rational(token: str, lineno: int = 0) -> Fraction:
    if not _RATIONAL.match(token):
        raise SystemFileSyntaxError(lineno, f"not a rational: {token!r}")
    if "/" in token:
        num, den = token.split("/")
        if int(den) == 0:
            raise SystemFileSyntaxError(lineno, f"zero denominator in {token!r}")
        return Fraction(int(num), int(den))
    return Fraction(int(token))


def format_rational(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _split(tokens: list[str], lineno: int) -> tuple[list[str], list[str]]:
    if tokens.count(":") != 1:
        raise SystemFileSyntaxError(lineno, "expected exactly one ':' separator")
    k = tokens.index(":")
    return tokens[:k], tokens[k + 1:]


def parse_document(text: str) -> tuple[System, dict[str, ConnectionConstraintSet]]:
    """Parse a system file, returning the validated system and any constraints."""
    alphabets: dict[str, Alphabet] = {}
    contexts: dict[str, list[str]] = {}
    tables: dict[str, dict[tuple[str, ...], Fraction]] = {}
    constraint_rows: dict[str, list] = {}
    section = None
    current = None
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            name = line[1:-1].strip() if line.endswith("]") else None
            if name not in SECTIONS:
                raise SystemFileSyntaxError(lineno, f"unknown section {line!r}")
            if name in seen:
                raise SystemFileSyntaxError(lineno, f"section [{name}] repeated")
            seen.add(name)
            section, current = name, None
            continue
        tokens = line.split()
        if section is None:
            raise SystemFileSyntaxError(lineno, "statement before any section header")
        if section == "contents":
            head, outcomes = _split(tokens, lineno)
            if len(head) != 1 or not outcomes:
                raise SystemFileSyntaxError(lineno, "expected '<content> : <outcome> ...'")
            if head[0] in alphabets:
                raise SystemFileSyntaxError(lineno, f"content {head[0]!r} declared twice")
            if len(set(outcomes)) != len(outcomes):
                raise SystemFileSyntaxError(lineno, f"duplicate outcome for {head[0]!r}")
            alphabets[head[0]] = Alphabet(tuple(outcomes))
        elif section == "contexts":
            head, members = _split(tokens, lineno)
            if len(head) != 1 or not members:
                raise SystemFileSyntaxError(lineno, "expected '<context> : <content> ...'")
            if head[0] in contexts:
                raise SystemFileSyntaxError(lineno, f"context {head[0]!r} declared twice")
            if len(set(members)) != len(members):
                raise SystemFileSyntaxError(lineno, f"context {head[0]!r} repeats a content")
            contexts[head[0]] = members
        elif section == "bunches":
            if tokens[0] == "context" and ":" not in tokens:
                if len(tokens) != 2:
                    raise SystemFileSyntaxError(lineno, "expected 'context <label>'")
                current = tokens[1]
                if current not in contexts:
                    raise SystemFileSyntaxError(lineno, f"bunch for undeclared context {current!r}")
                if current in tables:
                    raise SystemFileSyntaxError(lineno, f"second bunch for context {current!r}")
                tables[current] = {}
                continue
            if current is None:
                raise SystemFileSyntaxError(lineno, "probability line before 'context <label>'")
            outcome, value = _split(tokens, lineno)
            if len(value) != 1:
                raise SystemFileSyntaxError(lineno, "expected a single rational after ':'")
            members = contexts[current]
            if len(outcome) != len(members):
                raise SystemFileSyntaxError(
                    lineno, f"context {current!r} has {len(members)} variables, got {len(outcome)} outcomes"
                )
            for q, x in zip(members, outcome):
                if q in alphabets and x not in alphabets[q].outcomes:
                    raise SystemFileSyntaxError(lineno, f"{x!r} is not an outcome of content {q!r}")
            key = tuple(outcome)
            if key in tables[current]:
                raise SystemFileSyntaxError(lineno, f"outcome {key} listed twice")
            tables[current][key] = parse_rational(value[0], lineno)
        else:
            if tokens[0] == "content" and len(tokens) == 2:
                current = tokens[1]
                constraint_rows.setdefault(current, [])
                continue
            if current is None:
                raise SystemFileSyntaxError(lineno, "constraint before 'content <label>'")
            if len(tokens) < 2 or tokens[-2] not in ("<=", "=", ">="):
                raise SystemFileSyntaxError(lineno, "expected '<coef> ... <relation> <rational>'")
            coeffs = tuple(parse_rational(t, lineno) for t in tokens[:-2])
            constraint_rows[current].append((coeffs, tokens[-2], parse_rational(tokens[-1], lineno)))

    for name in ("contents", "contexts", "bunches"):
        if name not in seen:
            raise SystemFileSyntaxError(0, f"missing section [{name}]")

    incidence = set()
    bunches = {}
    for c, members in contexts.items():
        for q in members:
            if q not in alphabets:
                raise DanglingIncidence(f"context {c!r} references unknown content {q!r}")
            incidence.add((q, c))
        if c not in tables:
            continue  # validate_system reports the missing bunch
        alphas = tuple(alphabets[q] for q in members)
        probs = tuple(tables[c].get(t, Fraction(0)) for t in product_space(alphas))
        bunches[c] = BunchDistribution(c, tuple(members), alphas, probs)
    fmt = SystemFormat(alphabets, tuple(contexts), frozenset(incidence))
    system = validate_system(System(fmt, bunches))

    constraints = {}
    for q, rows in constraint_rows.items():
        if q not in alphabets:
            raise DanglingIncidence(f"constraints for unknown content {q!r}")
        constraints[q] = ConnectionConstraintSet(q, tuple(rows))
    return system, constraints


def parse_system(text: str) -> System:
    return parse_document(text)[0]


def serialize_system(
    system: System, constraints: Optional[Mapping[str, ConnectionConstraintSet]] = None
) -> str:
    lines = ["[contents]"]
    for q in system.contents:
        lines.append(f"{q} : {' '.join(system.alphabet(q).outcomes)}")
    lines.append("[contexts]")
    for c in system.contexts:
        lines.append(f"{c} : {' '.join(system.bunch(c).variables)}")
    lines.append("[bunches]")
    for c in system.contexts:
        b = system.bunch(c)
        lines.append(f"context {c}")
        for t, p in zip(b.outcomes(), b.probs):
            if p:
                lines.append(f"{' '.join(t)} : {format_rational(p)}")
    if constraints:
        lines.append("[constraints]")
        for q in sorted(constraints):
            lines.append(f"content {q}")
            for coeffs, rel, bound in constraints[q].constraints:
                row = " ".join(format_rational(a) for a in coeffs)
                lines.append(f"{row} {rel} {format_rational(bound)}")
    return "\n".join(lines) + "\n"


def normalize(text: str) -> str:
    system, constraints = parse_document(text)
    return serialize_system(system, constraints)


# -- reports -----------------------------------------------------------------


def to_jsonable(obj: Any) -> Any:
    """Fractions become rational strings, tuples become lists."""
    if isinstance(obj, Fraction):
        return format_rational(obj)
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return obj


@dataclass
class Report:
    """Machine-readable outcome of one CLI command."""

    command: list[str]
    exit_code: int = 0
    verdicts: list[dict] = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    certificates: list[dict] = field(default_factory=list)
    timing: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return to_jsonable(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_dict(cls, data: Mapping) -> "Report":
        return cls(**{k: data[k] for k in cls.__dataclass_fields__ if k in data})

    @classmethod
    def from_json(cls, text: str) -> "Report":
        return cls.from_dict(json.loads(text))

    def to_text(self) -> str:
        """``key: value`` lines; values are compact JSON so the text parses back."""
        data = self.to_dict()
        lines = []
        for key in sorted(data):
            lines.append(f"{key}: {json.dumps(data[key], sort_keys=True, ensure_ascii=False)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Report":
        data = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            key, _, value = line.partition(": ")
            data[key] = json.loads(value)
        return cls.from_dict(data)


def verdict_to_dict(verdict, *, include_witness: bool = True) -> dict:
    """Status, LP size, timing, and the witness support or nonzero Farkas multipliers."""
    rows, cols = verdict.lp_shape
    out = {
        "status": verdict.status,
        "rule": verdict.rule,
        "verified": verdict.verified,
        "lp_rows": rows,
        "lp_columns": cols,
        "seconds": round(verdict.seconds, 6),
    }
    if verdict.witness is not None and include_witness:
        out["witness"] = {
            "variables": list(verdict.witness.labels),
            "support": [[list(t), format_rational(p)] for t, p in verdict.witness.masses.items()],
        }
    if verdict.certificate is not None:
        labels = [r.label for r in verdict.lp.rows] if verdict.lp is not None else []
        out["certificate"] = {
            "rows": [
                [to_jsonable(labels[i]) if labels else i, format_rational(y)]
                for i, y in enumerate(verdict.certificate.row_multipliers)
                if y
            ],
        }
    return out


def serialize_hvm(hvm) -> str:
    """Atom table followed by one response row per argument (values in atom order)::

        [atoms]
        λ0 : 1/2
        [responses]
        <argument> : <value at λ0> <value at λ1> ...
    """
    lines = ["[atoms]"]
    for atom, p in zip(hvm.atoms, hvm.lam.probs):
        lines.append(f"{atom} : {format_rational(p)}")
    lines.append(f"[responses {'context-dependent' if hvm.context_dependent else 'context-free'}]")
    args = sorted({arg for arg, _ in hvm.response})
    for arg in args:
        lines.append(f"{arg} : {' '.join(hvm.response[(arg, atom)] for atom in hvm.atoms)}")
    return "\n".join(lines) + "\n"


def parse_hvm(text: str) -> HiddenVariableModel:
    atoms, probs, response = [], [], {}
    section = None
    dependent = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            section = line.strip("[]").split()[0]
            dependent = "context-dependent" in line
            continue
        head, rest = _split(line.split(), lineno)
        if section == "atoms":
            atoms.append(head[0])
            probs.append(parse_rational(rest[0], lineno))
        elif section == "responses":
            if len(rest) != len(atoms):
                raise SystemFileSyntaxError(lineno, "one response value per atom required")
            for atom, value in zip(atoms, rest):
                response[(head[0], atom)] = value
        else:
            raise SystemFileSyntaxError(lineno, "statement outside [atoms]/[responses]")
    return HiddenVariableModel(Marginal(Alphabet(tuple(atoms)), tuple(probs)), response, dependent)
