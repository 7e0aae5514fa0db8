"""Seeded random systems and the canned example systems.

Random draws come from SplitMix64 (Steele, Lea & Flood 2014): a 64-bit
state advanced by the golden-ratio increment and finalized by two
xor-shift-multiply rounds. It is tiny and has a fixed published definition,
so a seed reproduces the same systems in any language. Probabilities are
multinomial counts over a grid of ``precision`` units, so every denominator
divides ``precision``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .model import (
    BINARY,
    Alphabet,
    BunchDistribution,
    System,
    SystemFormat,
    make_system,
    mix_systems,
    product_space,
    uniform_system,
    validate_system,
)

MASK64 = (1 << 64) - 1


class InfeasibleSpec(ValueError):
    pass


class UnknownName(KeyError):
    pass


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Integer in ``[0, n)`` by multiply-shift (Lemire, without rejection)."""
        return (self.next() * n) >> 64

    def between(self, lo: int, hi: int) -> int:
        return lo + self.below(hi - lo + 1)

    def chance(self, p: Fraction) -> bool:
        p = Fraction(p)
        return self.below(p.denominator) < p.numerator


@dataclass(frozen=True)
class GeneratorSpec:
    seed: int = 0
    max_contents: int = 3
    max_contexts: int = 4
    alphabet_sizes: tuple[int, ...] = (2,)
    density: Fraction = Fraction(1, 2)
    consistency: str = "either"
    precision: int = 64
    min_contents: int = 1
    min_contexts: int = 1

    def __post_init__(self):
        object.__setattr__(self, "density", Fraction(self.density))
        if self.max_contents < 1 or self.max_contexts < 1 or self.precision < 1:
            raise InfeasibleSpec("bounds must be positive")
        if not 1 <= self.min_contents <= self.max_contents:
            raise InfeasibleSpec("need 1 <= min_contents <= max_contents")
        if not 1 <= self.min_contexts <= self.max_contexts:
            raise InfeasibleSpec("need 1 <= min_contexts <= max_contexts")
        if not 0 <= self.density <= 1:
            raise InfeasibleSpec(f"density {self.density} outside [0, 1]")
        if not self.alphabet_sizes or min(self.alphabet_sizes) < 1:
            raise InfeasibleSpec("alphabet sizes must be positive")
        if self.consistency not in ("consistent", "inconsistent", "either"):
            raise InfeasibleSpec(f"unknown consistency mode {self.consistency!r}")
        if self.seed < 0 or self.seed > MASK64:
            raise InfeasibleSpec("seed must be a 64-bit unsigned integer")


def random_distribution(rng: SplitMix64, n: int, precision: int) -> tuple[Fraction, ...]:
    """``precision`` unit masses dropped into ``n`` cells uniformly."""
    counts = [0] * n
    for _ in range(precision):
        counts[rng.below(n)] += 1
    return tuple(Fraction(k, precision) for k in counts)


def _random_format(rng: SplitMix64, spec: GeneratorSpec) -> SystemFormat:
    nq = rng.between(spec.min_contents, spec.max_contents)
    nc = rng.between(spec.min_contexts, spec.max_contexts)
    contents = [f"q{i + 1}" for i in range(nq)]
    contexts = [f"c{i + 1}" for i in range(nc)]
    alphabets = {}
    for q in contents:
        k = spec.alphabet_sizes[rng.below(len(spec.alphabet_sizes))]
        alphabets[q] = BINARY if k == 2 else Alphabet(tuple(str(i) for i in range(k)))
    incidence = {(q, c) for c in contexts for q in contents if rng.chance(spec.density)}
    for c in contexts:
        if not any(cc == c for _, cc in incidence):
            incidence.add((contents[rng.below(nq)], c))
    for q in contents:
        if not any(qq == q for qq, _ in incidence):
            incidence.add((q, contexts[rng.below(nc)]))
    return SystemFormat(alphabets, tuple(contexts), frozenset(incidence))


def gen_system(spec: GeneratorSpec) -> System:
    """A validated random system, reproducible from ``spec.seed``.

    Consistent mode draws one joint distribution over all contents and
    marginalizes it per context, so all connections agree exactly.
    """
    rng = SplitMix64(spec.seed)
    fmt = _random_format(rng, spec)
    mode = spec.consistency
    if mode == "either":
        mode = "consistent" if rng.below(2) else "inconsistent"
    bunches = {}
    if mode == "consistent":
        contents = fmt.contents
        alphas = [fmt.alphabets[q] for q in contents]
        space = product_space(alphas)
        glob = dict(zip(space, random_distribution(rng, len(space), spec.precision)))
        for c in fmt.contexts:
            qs = fmt.contents_of(c)
            idx = [contents.index(q) for q in qs]
            calphas = tuple(fmt.alphabets[q] for q in qs)
            acc = dict.fromkeys(product_space(calphas), Fraction(0))
            for t, p in glob.items():
                acc[tuple(t[i] for i in idx)] += p
            bunches[c] = BunchDistribution(c, qs, calphas, tuple(acc.values()))
    else:
        for c in fmt.contexts:
            qs = fmt.contents_of(c)
            calphas = tuple(fmt.alphabets[q] for q in qs)
            n = len(product_space(calphas))
            bunches[c] = BunchDistribution(c, qs, calphas, random_distribution(rng, n, spec.precision))
    return validate_system(System(fmt, bunches))


# cyclic CHSH format: settings 1 and 3 on one side, 2 and 4 on the other
_CHSH_CONTEXTS = {"1": ("1", "2"), "2": ("2", "3"), "3": ("3", "4"), "4": ("1", "4")}
_HALF = Fraction(1, 2)


def chsh_system(anti: Optional[str] = "4") -> System:
    """Cyclic four-context binary system; ``anti`` names the anticorrelated context."""
    alph = {q: BINARY for q in "1234"}
    bunches = {}
    for c, qs in _CHSH_CONTEXTS.items():
        if c == anti:
            table = {("0", "1"): _HALF, ("1", "0"): _HALF}
        else:
            table = {("0", "0"): _HALF, ("1", "1"): _HALF}
        bunches[c] = (qs, table)
    return make_system(alph, bunches)


def pr_box() -> System:
    return chsh_system(anti="4")


def classical_corr() -> System:
    return chsh_system(anti=None)


def noisy_pr(visibility) -> System:
    """``visibility * PR + (1 - visibility) * uniform``."""
    v = Fraction(visibility)
    if not 0 <= v <= 1:
        raise ValueError(f"visibility {v} outside [0, 1]")
    box = pr_box()
    return mix_systems(box, uniform_system(box.format), v)


def eq2_format_demo() -> System:
    alph = {q: BINARY for q in "123"}
    fmt_contexts = {"1": "12", "2": "23", "3": "13", "4": "123"}
    fmt = SystemFormat(
        alph,
        tuple(fmt_contexts),
        frozenset((q, c) for c, qs in fmt_contexts.items() for q in qs),
    )
    return uniform_system(fmt)


def epr_format() -> System:
    fmt = SystemFormat(
        {q: BINARY for q in "1234"},
        tuple(_CHSH_CONTEXTS),
        frozenset((q, c) for c, qs in _CHSH_CONTEXTS.items() for q in qs),
    )
    return uniform_system(fmt)


NAMES = ("pr-box", "classical-corr", "noisy-pr(λ)", "eq2-format-demo", "epr-format")
_NOISY = re.compile(r"^noisy-pr\((?P<v>[0-9]+(?:/[0-9]+)?)\)$")


def gen_named(name: str) -> System:
    """One of the canned systems; ``noisy-pr(3/4)`` takes a rational visibility."""
    fixed = {
        "pr-box": pr_box,
        "classical-corr": classical_corr,
        "eq2-format-demo": eq2_format_demo,
        "epr-format": epr_format,
    }
    if name in fixed:
        return fixed[name]()
    m = _NOISY.match(name)
    if m:
        return noisy_pr(Fraction(m.group("v")))
    raise UnknownName(f"unknown system {name!r}; choose from {', '.join(NAMES)}")


def corpus_specs(count: int, seed: int = 0, consistency: Optional[str] = None,
                 max_contents: int = 3, max_contexts: int = 4) -> list[GeneratorSpec]:
    """Specs for a reproducible batch of random binary systems.

    Per-system seeds come from one SplitMix64 stream; consistency mode,
    incidence density and grid precision cycle so the batch mixes sparse and
    full formats, coarse and fine tables.
    """
    rng = SplitMix64(seed)
    modes = ("consistent", "inconsistent", "either")
    densities = (Fraction(1, 2), Fraction(3, 4), Fraction(1))
    precisions = (4, 8, 64)
    specs = []
    for i in range(count):
        specs.append(GeneratorSpec(
            seed=rng.next(),
            max_contents=max_contents,
            max_contexts=max_contexts,
            density=densities[i % 3],
            consistency=consistency or modes[(i // 3) % 3],
            precision=precisions[(i // 9) % 3],
        ))
    return specs
