"""Hidden-variable models read off noncontextual witnesses.

The hidden variable ranges over the support atoms of the witness coupling;
the response table gives each variable's value on each atom. When every
atom assigns one value per content regardless of context, the table is
keyed by content alone (context-free); otherwise it is keyed by ``q@c``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .contextuality import NONCONTEXTUAL, Verdict, decide_relaxed, decide_traditional
from .couplings import IDENTITY
from .model import Alphabet, Marginal, System, pair_label, product_space


class NoWitness(ValueError):
    pass


class CoverageError(KeyError):
    pass


@dataclass(frozen=True)
class HiddenVariableModel:
    lam: Marginal
    response: Mapping[tuple[str, str], str]
    context_dependent: bool

    @property
    def atoms(self) -> tuple[str, ...]:
        return self.lam.alphabet.outcomes

    def value(self, q: str, c: str, atom: str) -> str:
        key = (pair_label(q, c), atom) if self.context_dependent else (q, atom)
        try:
            return self.response[key]
        except KeyError:
            raise CoverageError(f"no response for {key[0]!r} at atom {atom!r}") from None


def hvm_from_witness(verdict: Verdict, system: System) -> HiddenVariableModel:
    if verdict.status != NONCONTEXTUAL or verdict.witness is None:
        raise NoWitness("verdict is contextual; there is no witness coupling")
    witness = verdict.witness
    pairs = system.format.pairs()
    index = {label: i for i, label in enumerate(witness.labels)}
    atoms = [f"λ{k}" for k in range(len(witness.masses))]
    lam = Marginal(Alphabet(tuple(atoms)), tuple(witness.masses.values()))
    per_pair = {}
    for atom, t in zip(atoms, witness.masses):
        for q, c in pairs:
            per_pair[(pair_label(q, c), atom)] = t[index[pair_label(q, c)]]
    context_free = all(
        len({per_pair[(pair_label(q, c), atom)] for c in system.format.contexts_of(q)}) == 1
        for atom in atoms
        for q in system.contents
    )
    if context_free:
        response = {}
        for atom in atoms:
            for q in system.contents:
                c = system.format.contexts_of(q)[0]
                response[(q, atom)] = per_pair[(pair_label(q, c), atom)]
        return HiddenVariableModel(lam, response, False)
    return HiddenVariableModel(lam, per_pair, True)


def hvm_reproduces(hvm: HiddenVariableModel, system: System) -> bool:
    """Push the hidden variable through the responses and compare every bunch."""
    for c in system.contexts:
        b = system.bunch(c)
        acc = {t: Fraction(0) for t in product_space(b.alphabets)}
        for atom, p in zip(hvm.atoms, hvm.lam.probs):
            t = tuple(hvm.value(q, c, atom) for q in b.variables)
            if t not in acc:
                return False
            acc[t] += p
        if tuple(acc.values()) != b.probs:
            return False
    return True


def double_context_equality(hvm: HiddenVariableModel, consistified: System) -> bool:
    """For a consistified system: each ``q@c`` takes one value per atom in both its contexts."""
    for atom in hvm.atoms:
        for q in consistified.contents:
            values = {hvm.value(q, c, atom) for c in consistified.format.contexts_of(q)}
            if len(values) != 1:
                return False
    return True


def contextual_diagnostic(consistified: System) -> list[str]:
    """Consistified contents whose identity constraint alone blocks noncontextuality.

    For each content, the identity requirement is dropped for that content
    only (its two variables may then differ); the content is listed when
    the relaxed problem becomes feasible. An empty list on a contextual
    system means no single content suffices.
    """
    if decide_traditional(consistified).status == NONCONTEXTUAL:
        return []
    return [
        q
        for q in consistified.contents
        if decide_relaxed(consistified, IDENTITY, skip={q}).status == NONCONTEXTUAL
    ]
