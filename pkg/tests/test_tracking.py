"""Tracking objective, adjoint subgradients, descent."""

import numpy as np
import pytest
import scipy.sparse.linalg as spla

from biobstacle import (
    ArmijoParams,
    BopProblem,
    ControlOperator,
    ControlProblem,
    ObstaclePair,
    OperatorSpec,
    adjoint_subgradient,
    assemble,
    classify_sets,
    descent_loop,
    objective,
    solve_bop,
)
from biobstacle.errors import InvalidD, InvalidSpec
from biobstacle.problems import smooth_field, strict_instance, unit_grid


def _unconstrained_cp(n=10, alpha=1e-3):
    """Identity control, obstacles far away: J is smooth with a closed-form
    gradient we can write down independently."""
    grid = unit_grid(n, dim=2)
    operator = assemble(grid, OperatorSpec("laplacian_plus_reaction", reaction=1.0))
    control = ControlOperator(grid, kind="identity")
    problem = BopProblem(
        operator=operator,
        control=control,
        obstacles=ObstaclePair(grid, np.full(grid.total, -50.0), np.full(grid.total, 50.0)),
    )
    rng = np.random.default_rng(21)
    y_target = smooth_field(grid, rng, amplitude=0.01)
    return ControlProblem(bop=problem, y_target=y_target, alpha=alpha), rng


def test_gradient_matches_dense_formula():
    """For the unconstrained identity-control case,
    g = mass * A^{-T} (mass (y - y_target)) + alpha * mass * u exactly."""
    cp, rng = _unconstrained_cp()
    grid = cp.bop.grid
    u = grid.function(rng.standard_normal(grid.total))
    sol = solve_bop(cp.bop, u)
    assert classify_sets(sol).counts()["inactive"] == grid.total
    sub = adjoint_subgradient(cp, u, solution=sol)
    A = cp.bop.operator.matrix
    q = spla.spsolve(A.T.tocsc(), grid.mass * (sol.y.values - cp.y_target.values))
    expected = grid.mass * q + cp.alpha * grid.mass * u.values
    np.testing.assert_allclose(sub.g.values, expected, atol=1e-14)


def test_gradient_matches_central_differences():
    cp, rng = _unconstrained_cp()
    grid = cp.bop.grid
    u = grid.function(rng.standard_normal(grid.total))
    sub = adjoint_subgradient(cp, u)
    t = 1e-5
    for _ in range(4):
        w = rng.standard_normal(grid.total)
        jp = objective(cp, u.with_values(u.values + t * w))
        jm = objective(cp, u.with_values(u.values - t * w))
        cd = (jp - jm) / (2 * t)
        assert float(sub.g.values @ w) == pytest.approx(cd, rel=1e-6, abs=1e-14)


def test_adjoint_identity_is_machine_exact():
    inst = strict_instance(unit_grid(16, dim=2))
    rng = np.random.default_rng(6)
    grid = inst["problem"].grid
    y_target = grid.function(inst["y_star"].values - 0.001)
    cp = ControlProblem(bop=inst["problem"], y_target=y_target, alpha=1e-8)
    u = grid.function(inst["u"].values + smooth_field(grid, rng, amplitude=0.05).values)
    sub = adjoint_subgradient(cp, u)
    from biobstacle import control_derivative_matrix
    fprime = control_derivative_matrix(cp.bop.control, u)
    for _ in range(5):
        w = rng.standard_normal(grid.total)
        lhs = float((fprime.T @ sub.q.values) @ w)
        rhs = float(sub.q.values @ (fprime @ w))
        assert lhs == pytest.approx(rhs, abs=1e-18)


def test_subgradient_respects_one_sided_domain():
    inst = strict_instance(unit_grid(16, dim=2))
    grid = inst["problem"].grid
    cp = ControlProblem(bop=inst["problem"],
                        y_target=grid.function(inst["y_star"].values - 0.002),
                        alpha=1e-8)
    sub = adjoint_subgradient(cp, inst["u"], side="lower")
    sol = solve_bop(cp.bop, inst["u"])
    part = classify_sets(sol)
    assert (sub.q.values[part.lower] == 0.0).all()
    assert (sub.q.values[part.upper] == 0.0).all()
    with pytest.raises(InvalidD):
        adjoint_subgradient(cp, inst["u"], side="diagonal")


def test_descent_strictly_decreases_objective():
    cp, rng = _unconstrained_cp(alpha=1e-2)
    grid = cp.bop.grid
    u0 = grid.function(rng.standard_normal(grid.total))
    trace = descent_loop(cp, u0, steps=20)
    values = [row["objective"] for row in trace.rows]
    assert len(values) == 20
    assert trace.termination == "max_steps"
    assert all(b < a for a, b in zip(values, values[1:]))
    assert objective(cp, trace.u_final) == pytest.approx(values[-1])


def test_descent_reaches_grad_tol_on_easy_problem():
    cp, rng = _unconstrained_cp(alpha=1.0)
    grid = cp.bop.grid
    u0 = grid.function(0.01 * rng.standard_normal(grid.total))
    params = ArmijoParams(grad_tol=1e-12)
    trace = descent_loop(cp, u0, steps=2000, params=params)
    assert trace.termination == "grad_tol"
    final_grad = trace.rows[-1]["grad_norm"] if trace.rows else 0.0
    assert final_grad <= 1e-10 or trace.rows == []


def test_objective_value_formula():
    cp, rng = _unconstrained_cp(alpha=0.5)
    grid = cp.bop.grid
    u = grid.function(rng.standard_normal(grid.total))
    sol = solve_bop(cp.bop, u)
    expected = 0.5 * grid.mass * float(
        ((sol.y.values - cp.y_target.values) ** 2).sum()
    ) + 0.25 * grid.mass * float((u.values ** 2).sum())
    assert objective(cp, u) == pytest.approx(expected, rel=1e-14)


def test_negative_tikhonov_weight_rejected():
    cp, _ = _unconstrained_cp()
    with pytest.raises(InvalidSpec):
        ControlProblem(bop=cp.bop, y_target=cp.y_target, alpha=-1.0)
