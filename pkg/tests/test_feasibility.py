from dataclasses import replace
from fractions import Fraction as F
import io

import pytest
from hypothesis import given, strategies as st

from ctxlab.contextuality import build_decision_lp, hull_oracle
from ctxlab.feasibility import (
    DimensionMismatch,
    FeasiblePoint,
    InfeasibilityCertificate,
    LinearSystem,
    Optimum,
    Unbounded,
    maximize,
    solve_feasibility,
    verify_result,
)
from ctxlab.generators import pr_box


def one_var(*rows):
    ls = LinearSystem(["x"])
    for rel, b in rows:
        ls.add_row([1], rel, b)
    return ls


def test_equality_feasible():
    ls = one_var(("=", 1))
    r = solve_feasibility(ls)
    assert isinstance(r, FeasiblePoint) and r.values == (1,)
    assert verify_result(ls, r)


def test_negative_upper_bound_infeasible():
    ls = one_var(("<=", -1))
    r = solve_feasibility(ls)
    assert isinstance(r, InfeasibilityCertificate)
    assert verify_result(ls, r)


def test_pr_box_full_lp_infeasible():
    lp = build_decision_lp(pr_box(), "identity", prune=False)
    r = solve_feasibility(lp)
    assert isinstance(r, InfeasibilityCertificate)
    assert verify_result(lp, r)


def test_tampered_point_fails():
    ls = LinearSystem(["x", "y"])
    ls.add_row([1, 1], "=", 1)
    ls.add_row([1, -1], "<=", 0)
    r = solve_feasibility(ls)
    assert verify_result(ls, r)
    bumped = FeasiblePoint((r.values[0] + F(1, 1000),) + r.values[1:])
    assert not verify_result(ls, bumped)
    assert not verify_result(ls, FeasiblePoint(r.values[:1]))


def test_tampered_certificate_fails():
    lp = build_decision_lp(pr_box(), "identity", prune=False)
    r = solve_feasibility(lp)
    assert verify_result(lp, r)
    ys = list(r.row_multipliers)
    k = next(i for i, y in enumerate(ys) if y)
    ys[k] *= 2
    assert not verify_result(lp, replace(r, row_multipliers=tuple(ys)))
    assert not verify_result(lp, replace(r, row_multipliers=tuple(-y for y in r.row_multipliers)))


def test_certificate_sign_rules_enforced():
    ls = one_var(("<=", -1))
    # right combination, wrong sign on a <= row
    assert not verify_result(ls, InfeasibilityCertificate((F(-1),), (F(1),)))
    assert verify_result(ls, InfeasibilityCertificate((F(1),), (F(1),)))
    ls = one_var((">=", 1), ("<=", 0))
    r = solve_feasibility(ls)
    assert verify_result(ls, r)
    assert r.row_multipliers[0] <= 0 <= r.row_multipliers[1]


def test_dimension_mismatch():
    ls = LinearSystem(["x", "y"])
    with pytest.raises(DimensionMismatch):
        ls.add_row([1], "=", 1)
    with pytest.raises(DimensionMismatch):
        ls.add_row({5: 1}, "=", 1)


def test_debug_tableau_dump():
    buf = io.StringIO()
    solve_feasibility(one_var(("=", 1)), debug=buf)
    assert buf.getvalue()


def test_maximize():
    ls = LinearSystem(["x", "y"])
    ls.add_row([1, 1], "=", 1)
    opt = maximize(ls, [1, 2])
    assert isinstance(opt, Optimum) and opt.value == 2 and opt.point.values == (0, 1)
    assert isinstance(maximize(one_var(("<=", -1)), [1]), InfeasibilityCertificate)
    with pytest.raises(Unbounded):
        maximize(one_var((">=", 0)), [1])


@st.composite
def planted_systems(draw):
    """Random rows with a known nonnegative solution; relations loosened around it."""
    n = draw(st.integers(1, 5))
    m = draw(st.integers(1, 6))
    x = draw(st.lists(st.fractions(0, 3, max_denominator=4), min_size=n, max_size=n))
    ls = LinearSystem([f"x{j}" for j in range(n)])
    for _ in range(m):
        a = draw(st.lists(st.integers(-3, 3), min_size=n, max_size=n))
        rel = draw(st.sampled_from(["=", "<=", ">="]))
        slack = draw(st.integers(0, 2)) if rel != "=" else 0
        b = sum(F(ai) * xi for ai, xi in zip(a, x))
        ls.add_row(a, rel, b + slack if rel == "<=" else b - slack)
    return ls


@given(planted_systems())
def test_planted_feasible_systems_are_found(ls):
    r = solve_feasibility(ls)
    assert isinstance(r, FeasiblePoint)
    assert verify_result(ls, r)


@given(planted_systems(), st.integers(1, 3))
def test_every_output_verifies(ls, shift):
    # shifting one bound may or may not break feasibility; either way the result must check out
    row = ls.rows[0]
    ls.rows[0] = replace(row, bound=row.bound - shift if row.relation != "<=" else row.bound - 10 * shift)
    assert verify_result(ls, solve_feasibility(ls))


@given(planted_systems())
def test_solver_is_deterministic(ls):
    assert solve_feasibility(ls) == solve_feasibility(ls)


def test_oracle_lp_outputs_verify():
    v = hull_oracle(pr_box(), "identity")
    assert v.verified and verify_result(v.lp, v.certificate)
