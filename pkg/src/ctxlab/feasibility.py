"""Exact rational LP feasibility by phase-1 simplex with Bland's rule.

All variables are implicitly nonnegative. Inequalities get slack columns,
every row gets an artificial column, and phase 1 minimizes the sum of the
artificials. A positive optimum yields a Farkas certificate read off the
final tableau; a zero optimum yields an exact feasible point. Nothing is
trusted: :func:`verify_result` re-checks either outcome by substitution.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Mapping, Optional, Sequence, Union

ZERO = Fraction(0)
ONE = Fraction(1)
RELATIONS = ("<=", "=", ">=")


class DimensionMismatch(ValueError):
    pass


class Unbounded(ArithmeticError):
    pass


@dataclass
class Row:
    coeffs: dict[int, Fraction]
    relation: str
    bound: Fraction
    label: Hashable = None

    def dense(self, n: int) -> list[Fraction]:
        out = [ZERO] * n
        for j, v in self.coeffs.items():
            out[j] = v
        return out

    def evaluate(self, x: Sequence[Fraction]) -> Fraction:
        return sum((v * x[j] for j, v in self.coeffs.items()), ZERO)

    def holds(self, x: Sequence[Fraction]) -> bool:
        lhs = self.evaluate(x)
        if self.relation == "<=":
            return lhs <= self.bound
        if self.relation == ">=":
            return lhs >= self.bound
        return lhs == self.bound


@dataclass
class LinearSystem:
    """Rows over nonnegative columns, stored sparsely."""

    columns: list[Hashable] = field(default_factory=list)
    rows: list[Row] = field(default_factory=list)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.columns)

    def add_column(self, label: Hashable) -> int:
        self.columns.append(label)
        return len(self.columns) - 1

    def add_row(
        self,
        coeffs: Union[Mapping[int, object], Sequence[object]],
        relation: str,
        bound,
        label: Hashable = None,
    ) -> Row:
        n = len(self.columns)
        if relation not in RELATIONS:
            raise ValueError(f"relation must be one of {RELATIONS}, got {relation!r}")
        if isinstance(coeffs, Mapping):
            sparse = {}
            for j, v in coeffs.items():
                if not 0 <= j < n:
                    raise DimensionMismatch(f"column index {j} outside 0..{n - 1}")
                if v:
                    sparse[j] = Fraction(v)
        else:
            if len(coeffs) != n:
                raise DimensionMismatch(f"row has {len(coeffs)} coefficients, system has {n} columns")
            sparse = {j: Fraction(v) for j, v in enumerate(coeffs) if v}
        row = Row(sparse, relation, Fraction(bound), label)
        self.rows.append(row)
        return row

    def check(self) -> None:
        n = len(self.columns)
        for i, row in enumerate(self.rows):
            if row.relation not in RELATIONS:
                raise ValueError(f"row {i}: bad relation {row.relation!r}")
            for j in row.coeffs:
                if not 0 <= j < n:
                    raise DimensionMismatch(f"row {i}: column index {j} outside 0..{n - 1}")


@dataclass(frozen=True)
class FeasiblePoint:
    values: tuple[Fraction, ...]

    feasible = True


@dataclass(frozen=True)
class InfeasibilityCertificate:
    """Farkas multipliers proving ``0 <= bound < 0``.

    ``row_multipliers[i]`` is nonnegative for ``<=`` rows, nonpositive for
    ``>=`` rows and free for ``=`` rows; ``nonneg_multipliers[j] >= 0``
    multiplies ``-x_j <= 0``. The combined row has all-zero coefficients and
    a strictly negative right-hand side.
    """

    row_multipliers: tuple[Fraction, ...]
    nonneg_multipliers: tuple[Fraction, ...]

    feasible = False

    def combine(self, ls: LinearSystem) -> tuple[list[Fraction], Fraction]:
        """Coefficients and bound of the multiplier-weighted sum of rows."""
        n = len(ls.columns)
        coeffs = [-z for z in self.nonneg_multipliers]
        bound = ZERO
        for y, row in zip(self.row_multipliers, ls.rows):
            if not y:
                continue
            for j, v in row.coeffs.items():
                coeffs[j] += y * v
            bound += y * row.bound
        return coeffs[:n], bound


FeasibilityResult = Union[FeasiblePoint, InfeasibilityCertificate]


def verify_result(ls: LinearSystem, r: FeasibilityResult) -> bool:
    """Re-check a point or certificate by exact substitution."""
    n = len(ls.columns)
    if isinstance(r, FeasiblePoint):
        if len(r.values) != n:
            return False
        if any(v < 0 for v in r.values):
            return False
        return all(row.holds(r.values) for row in ls.rows)
    if isinstance(r, InfeasibilityCertificate):
        if len(r.row_multipliers) != len(ls.rows) or len(r.nonneg_multipliers) != n:
            return False
        for y, row in zip(r.row_multipliers, ls.rows):
            if row.relation == "<=" and y < 0:
                return False
            if row.relation == ">=" and y > 0:
                return False
        if any(z < 0 for z in r.nonneg_multipliers):
            return False
        coeffs, bound = r.combine(ls)
        return all(c == 0 for c in coeffs) and bound < 0
    return False


class _Tableau:
    """Dense phase-1 tableau over original, slack and artificial columns."""

    def __init__(self, ls: LinearSystem):
        ls.check()
        self.ls = ls
        m, n = ls.shape
        self.m, self.n = m, n
        slack_of = {}
        for i, row in enumerate(ls.rows):
            if row.relation != "=":
                slack_of[i] = n + len(slack_of)
        self.n_slack = len(slack_of)
        self.art0 = n + self.n_slack
        self.width = self.art0 + m
        self.signs = []
        self.T: list[list[Fraction]] = []
        for i, row in enumerate(ls.rows):
            r = [ZERO] * (self.width + 1)
            for j, v in row.coeffs.items():
                r[j] = v
            if i in slack_of:
                r[slack_of[i]] = ONE if row.relation == "<=" else -ONE
            r[-1] = row.bound
            sign = -1 if row.bound < 0 else 1
            if sign < 0:
                r = [-v for v in r]
            r[self.art0 + i] = ONE
            self.signs.append(sign)
            self.T.append(r)
        self.basis = [self.art0 + i for i in range(m)]
        self.allowed = self.art0  # columns >= this never enter
        self.cost = [ZERO] * self.width
        for i in range(m):
            self.cost[self.art0 + i] = ONE
        self._reprice()

    def _reprice(self) -> None:
        d = self.cost[:] + [ZERO]
        for i, b in enumerate(self.basis):
            cb = self.cost[b]
            if cb:
                row = self.T[i]
                for j, v in enumerate(row):
                    if v:
                        d[j] -= cb * v
        self.d = d

    def pivot(self, r: int, j: int) -> None:
        T = self.T
        prow = T[r]
        piv = prow[j]
        if piv != 1:
            prow = [v / piv if v else v for v in prow]
            T[r] = prow
        nz = [l for l, v in enumerate(prow) if v]
        for k in range(self.m):
            if k == r:
                continue
            row = T[k]
            f = row[j]
            if f:
                for l in nz:
                    row[l] -= f * prow[l]
        f = self.d[j]
        if f:
            d = self.d
            for l in nz:
                d[l] -= f * prow[l]
        self.basis[r] = j

    def run(self) -> None:
        """Bland's rule: lowest-index entering column, lowest-index leaving basic."""
        while True:
            d = self.d
            j = next((l for l in range(self.allowed) if d[l] < 0), None)
            if j is None:
                return
            best = None
            for i, row in enumerate(self.T):
                a = row[j]
                if a > 0:
                    ratio = row[-1] / a
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                raise Unbounded(f"objective unbounded along column {j}")
            self.pivot(best[1], j)

    def objective(self) -> Fraction:
        return -self.d[-1]

    def point(self) -> tuple[Fraction, ...]:
        x = [ZERO] * self.n
        for i, b in enumerate(self.basis):
            if b < self.n:
                x[b] = self.T[i][-1]
        return tuple(x)

    def certificate(self) -> InfeasibilityCertificate:
        # y' = c_B B^{-1}; B^{-1} sits in the artificial columns
        m = self.m
        yprime = [ZERO] * m
        for i, b in enumerate(self.basis):
            cb = self.cost[b]
            if cb:
                row = self.T[i]
                for k in range(m):
                    v = row[self.art0 + k]
                    if v:
                        yprime[k] += cb * v
        y = [-yprime[k] * self.signs[k] for k in range(m)]
        z = [ZERO] * self.n
        for yi, row in zip(y, self.ls.rows):
            if yi:
                for j, v in row.coeffs.items():
                    z[j] += yi * v
        return InfeasibilityCertificate(tuple(y), tuple(z))

    def drive_out_artificials(self) -> None:
        """Pivot zero-level artificials out of the basis; drop redundant rows."""
        keep = []
        for i in range(self.m):
            b = self.basis[i]
            if b >= self.art0:
                row = self.T[i]
                j = next((l for l in range(self.art0) if row[l]), None)
                if j is not None:
                    self.pivot(i, j)
                    keep.append(i)
                # otherwise the row is a combination of the others
            else:
                keep.append(i)
        self.T = [self.T[i] for i in keep]
        self.basis = [self.basis[i] for i in keep]
        self.m = len(keep)

    def dump(self) -> str:
        out = io.StringIO()
        out.write(f"# tableau {self.m} x {self.width} (original {self.n}, slack {self.n_slack})\n")
        out.write("basis " + " ".join(str(b) for b in self.basis) + "\n")
        out.write("cost  " + " ".join(str(v) for v in self.d) + "\n")
        for i, row in enumerate(self.T):
            out.write(f"r{i:<4} " + " ".join(str(v) for v in row) + "\n")
        return out.getvalue()


def solve_feasibility(ls: LinearSystem, debug: Optional[io.TextIOBase] = None) -> FeasibilityResult:
    """Decide whether ``ls`` has a nonnegative solution, exactly.

    Returns a :class:`FeasiblePoint` or an :class:`InfeasibilityCertificate`.
    Pass a text stream as ``debug`` to receive the final tableau.
    """
    tab = _Tableau(ls)
    tab.run()
    if debug is not None:
        debug.write(tab.dump())
    if tab.objective() == 0:
        return FeasiblePoint(tab.point())
    return tab.certificate()


@dataclass(frozen=True)
class Optimum:
    value: Fraction
    point: FeasiblePoint


def maximize(ls: LinearSystem, objective: Union[Mapping[int, object], Sequence[object]]):
    """Maximize a linear objective over ``ls`` (phase 1 then phase 2).

    Returns :class:`Optimum`, or the infeasibility certificate if there is
    no feasible point. Raises :class:`Unbounded` when unbounded.
    """
    n = len(ls.columns)
    if isinstance(objective, Mapping):
        obj = {j: Fraction(v) for j, v in objective.items()}
    else:
        if len(objective) != n:
            raise DimensionMismatch(f"objective has {len(objective)} entries, system has {n} columns")
        obj = {j: Fraction(v) for j, v in enumerate(objective)}
    tab = _Tableau(ls)
    tab.run()
    if tab.objective() != 0:
        return tab.certificate()
    tab.drive_out_artificials()
    tab.cost = [ZERO] * tab.width
    for j, v in obj.items():
        tab.cost[j] = -v
    tab._reprice()
    tab.run()
    x = tab.point()
    value = sum((v * x[j] for j, v in obj.items()), ZERO)
    return Optimum(value, FeasiblePoint(x))
