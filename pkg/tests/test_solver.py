import numpy as np
import pytest
from scipy.optimize import NonlinearConstraint, minimize

from rsma_noma.solver import (ConvexProgram, LinearRow, LogRow, LogTerm, QuadRow,
                              SolveStatus, constraint_violations, format_program,
                              objective_value, solve)


def test_single_log_hits_bound():
    prog = ConvexProgram(n=1, obj_affine=np.zeros(1),
                         obj_logs=[LogTerm(1.0, np.array([1.0]), 0.0)],
                         upper=np.array([2.0]))
    out = solve(prog, tol=1e-8)
    assert out.status is SolveStatus.OPTIMAL
    assert out.x[0] == pytest.approx(2.0, abs=1e-6)
    assert out.objective_value == pytest.approx(1.0, abs=1e-6)


def test_symmetric_log_split():
    prog = ConvexProgram(
        n=2, obj_affine=np.zeros(2),
        obj_logs=[LogTerm(1.0, np.array([1.0, 0.0]), 1.0),
                  LogTerm(1.0, np.array([0.0, 1.0]), 1.0)],
        linear_rows=[LinearRow(np.array([1.0, 1.0]), -2.0, "budget")])
    out = solve(prog, tol=1e-8)
    assert out.status is SolveStatus.OPTIMAL
    assert out.x == pytest.approx([1.0, 1.0], abs=1e-5)
    assert out.objective_value == pytest.approx(2.0, abs=1e-6)


def test_quadratic_boundary():
    prog = ConvexProgram(n=1, obj_affine=np.array([1.0]),
                         quad_rows=[QuadRow(np.array([1.0]), 0.0, np.array([0.0]), -1.0, "q")])
    out = solve(prog, tol=1e-8)
    assert out.status is SolveStatus.OPTIMAL
    assert out.x[0] == pytest.approx(2.0, abs=1e-6)


def test_log_row_feasible_region():
    # 3 <= log2(1 + x), minimize x  ->  x = 7
    prog = ConvexProgram(
        n=1, obj_affine=np.array([-1.0]), upper=np.array([20.0]),
        log_rows=[LogRow(np.zeros(1), 3.0, (LogTerm(1.0, np.array([1.0]), 1.0),),
                         np.zeros(1), 0.0, "floor")])
    out = solve(prog, tol=1e-8)
    assert out.status is SolveStatus.OPTIMAL
    assert out.x[0] == pytest.approx(7.0, abs=1e-5)


def test_infeasible_box():
    prog = ConvexProgram(n=1, obj_affine=np.array([1.0]), upper=np.array([-1.0]))
    assert solve(prog, tol=1e-8).status is SolveStatus.INFEASIBLE


def test_infeasible_rows():
    prog = ConvexProgram(n=1, obj_affine=np.array([1.0]), upper=np.array([5.0]),
                         linear_rows=[LinearRow(np.array([1.0]), -10.0, "ge10"),
                                      LinearRow(np.array([-1.0]), 2.0, "le-2")])
    # x >= 10 impossible with x <= 5 -> wait: first row says x <= 10; flip signs
    prog = ConvexProgram(n=1, obj_affine=np.array([1.0]), upper=np.array([5.0]),
                         linear_rows=[LinearRow(np.array([-1.0]), 10.0, "x_ge_10")])
    assert solve(prog, tol=1e-8).status is SolveStatus.INFEASIBLE


def test_unbounded_detection():
    prog = ConvexProgram(n=1, obj_affine=np.array([1.0]))
    assert solve(prog, tol=1e-8).status is SolveStatus.UNBOUNDED


def test_max_iterations_status():
    prog = ConvexProgram(
        n=2, obj_affine=np.zeros(2),
        obj_logs=[LogTerm(1.0, np.array([1.0, 0.0]), 1.0),
                  LogTerm(1.0, np.array([0.0, 1.0]), 1.0)],
        linear_rows=[LinearRow(np.array([1.0, 1.0]), -2.0, "budget")])
    out = solve(prog, tol=1e-8, max_iter=3)
    assert out.status is SolveStatus.MAX_ITERATIONS
    assert out.x is None


def test_determinism():
    rng = np.random.default_rng(5)
    a = rng.uniform(0.5, 2.0, size=(3, 4))
    prog1 = ConvexProgram(
        n=4, obj_affine=rng.uniform(-0.1, 0.1, 4),
        obj_logs=[LogTerm(1.0, a[i], 0.5) for i in range(3)],
        linear_rows=[LinearRow(np.ones(4), -3.0, "budget")])
    out1 = solve(prog1, tol=1e-8)
    out2 = solve(prog1, tol=1e-8)
    assert out1.status is SolveStatus.OPTIMAL
    assert np.array_equal(out1.x, out2.x)
    assert out1.objective_value == out2.objective_value
    assert out1.iterations == out2.iterations


def test_weight_scaling_keeps_argmax():
    base_logs = [LogTerm(1.0, np.array([1.0, 0.0]), 0.2),
                 LogTerm(2.0, np.array([0.0, 1.0]), 0.1)]
    rows = [LinearRow(np.array([1.0, 1.0]), -1.0, "budget")]
    p1 = ConvexProgram(n=2, obj_affine=np.zeros(2), obj_logs=base_logs, linear_rows=rows)
    scaled = [LogTerm(5.0 * t.weight, t.coeffs, t.offset) for t in base_logs]
    p2 = ConvexProgram(n=2, obj_affine=np.zeros(2), obj_logs=scaled, linear_rows=rows)
    x1 = solve(p1, tol=1e-9).x
    x2 = solve(p2, tol=1e-9).x
    assert x1 == pytest.approx(x2, abs=1e-6)


def _independent_violations(prog, x):
    """Constraint check written from scratch against the program definition."""
    worst = 0.0
    for row in prog.linear_rows:
        worst = max(worst, float(row.coeffs @ x + row.offset))
    for row in prog.log_rows:
        val = float(row.lhs_coeffs @ x + row.lhs_offset - row.rhs_coeffs @ x - row.rhs_offset)
        for term in row.logs:
            val -= term.weight * np.log2(term.coeffs @ x + term.offset)
        worst = max(worst, val)
    for row in prog.quad_rows:
        u = float(row.u_coeffs @ x + row.u_offset)
        worst = max(worst, 0.25 * u * u + float(row.v_coeffs @ x + row.v_offset))
    worst = max(worst, float(np.max(prog.lower - x)), float(np.max(x - prog.upper)))
    return worst


def test_optimal_points_feasible_at_1e7():
    rng = np.random.default_rng(11)
    for trial in range(10):
        n = 4
        logs = [LogTerm(float(rng.uniform(0.5, 2.0)), rng.uniform(0.2, 1.5, n),
                        float(rng.uniform(0.05, 0.5))) for _ in range(3)]
        rows = [LinearRow(rng.uniform(0.3, 1.0, n), -float(rng.uniform(1.0, 3.0)), "r")]
        prog = ConvexProgram(n=n, obj_affine=rng.uniform(-0.05, 0.05, n),
                             obj_logs=logs, linear_rows=rows, upper=np.full(n, 5.0))
        out = solve(prog, tol=1e-8)
        assert out.status is SolveStatus.OPTIMAL
        assert _independent_violations(prog, out.x) <= 1e-7
        assert out.kkt_residual <= 1e-8


def test_cross_check_against_scipy():
    rng = np.random.default_rng(21)
    n = 3
    logs = [LogTerm(1.0, rng.uniform(0.4, 1.2, n), 0.3) for _ in range(3)]
    budget = rng.uniform(0.5, 1.0, n)
    quad = QuadRow(np.array([1.0, 1.0, 0.0]), 0.0, np.array([0.0, 0.0, 0.2]), -1.5, "q")
    prog = ConvexProgram(n=n, obj_affine=np.array([0.0, 0.0, 0.05]), obj_logs=logs,
                         linear_rows=[LinearRow(budget, -2.0, "budget")],
                         quad_rows=[quad], upper=np.full(n, 10.0))
    out = solve(prog, tol=1e-9)
    assert out.status is SolveStatus.OPTIMAL

    def neg_obj(x):
        return -objective_value(prog, x)

    cons = [
        NonlinearConstraint(lambda x: budget @ x, -np.inf, 2.0),
        NonlinearConstraint(
            lambda x: 0.25 * (x[0] + x[1]) ** 2 + 0.2 * x[2] - 1.5, -np.inf, 0.0),
    ]
    ref = minimize(neg_obj, np.full(n, 0.3), method="SLSQP",
                   bounds=[(0.0, 10.0)] * n, constraints=[
                       {"type": "ineq", "fun": lambda x: 2.0 - budget @ x},
                       {"type": "ineq",
                        "fun": lambda x: 1.5 - 0.25 * (x[0] + x[1]) ** 2 - 0.2 * x[2]}],
                   options={"maxiter": 500, "ftol": 1e-12})
    assert ref.success
    assert out.objective_value == pytest.approx(-ref.fun, abs=1e-6)


def test_solution_matches_analytic_weighted_waterfill():
    # maximize 2*log2(x) + log2(y) s.t. x + y <= 3: x = 2, y = 1
    prog = ConvexProgram(
        n=2, obj_affine=np.zeros(2),
        obj_logs=[LogTerm(2.0, np.array([1.0, 0.0]), 0.0),
                  LogTerm(1.0, np.array([0.0, 1.0]), 0.0)],
        linear_rows=[LinearRow(np.ones(2), -3.0, "budget")])
    out = solve(prog, tol=1e-9)
    assert out.x == pytest.approx([2.0, 1.0], abs=1e-5)


def test_constraint_violations_order_and_sign():
    prog = ConvexProgram(n=1, obj_affine=np.array([1.0]), upper=np.array([2.0]),
                         linear_rows=[LinearRow(np.array([1.0]), -1.0, "le1")])
    v = constraint_violations(prog, np.array([1.5]))
    assert v[0] == pytest.approx(0.5)      # linear row violated
    assert v[1] == pytest.approx(-1.5)     # lower bound satisfied
    assert v[2] == pytest.approx(-0.5)     # upper bound satisfied


def test_format_program_mentions_rows():
    prog = ConvexProgram(n=1, obj_affine=np.array([1.0]), upper=np.array([2.0]),
                         linear_rows=[LinearRow(np.array([1.0]), -1.0, "cap")])
    text = format_program(prog)
    assert "maximize" in text and "[cap]" in text and "x0" in text
