"""Tracking objective, adjoint-based subgradients, and a descent loop.

J(u) = 1/2 ||y(u) - y_target||_M^2 + alpha/2 ||u||_M^2 with the mass-weighted
norm ||v||_M^2 = mass * sum v_i^2. Subgradients come from the adjoint of the
reduced derivative system on a one-sided domain D:

    (A_DD)^T q_D = (mass * (y - y_target))_D,   q = 0 outside D,
    g = f'(u)^T q + alpha * mass * u.

g is a plain-dot functional on control space: g . w equals the directional
derivative of J along w wherever J is differentiable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .controls import control_derivative_matrix
from .derivatives import SIDES, domain_for_side, reduced_linear_solve
from .errors import InvalidD, InvalidSpec
from .grid import GridFunction, mass_norm, require_same_grid
from .multipliers import EPS_ACTIVE, EPS_MULT, classify_sets
from .obstacle import BopProblem, BopSolution, solve_bop


@dataclass(frozen=True, eq=False)
class ControlProblem:
    bop: BopProblem
    y_target: GridFunction
    alpha: float = 1e-4

    def __post_init__(self):
        require_same_grid(self.bop.operator, self.y_target)
        if self.alpha < 0:
            raise InvalidSpec(f"Tikhonov weight must be >= 0, got {self.alpha}")


@dataclass(frozen=True, eq=False)
class Subgradient:
    g: GridFunction
    q: GridFunction
    D_used: np.ndarray
    side: str


@dataclass(frozen=True)
class ArmijoParams:
    initial_step: float | None = None   # None: 1/mass, a scale-aware default
    shrink: float = 0.5
    growth: float = 2.0
    c1: float = 1e-4
    max_backtracks: int = 60
    grad_tol: float = 0.0


def objective(cp: ControlProblem, u: GridFunction,
              solution: BopSolution | None = None) -> float:
    if solution is None:
        solution = solve_bop(cp.bop, u, method="pdas")
    misfit = solution.y.with_values(solution.y.values - cp.y_target.values)
    return 0.5 * mass_norm(misfit) ** 2 + 0.5 * cp.alpha * mass_norm(u) ** 2


def adjoint_subgradient(
    cp: ControlProblem,
    u: GridFunction,
    side: str = "lower",
    solution: BopSolution | None = None,
    eps_active: float = EPS_ACTIVE,
    eps_mult: float = EPS_MULT,
) -> Subgradient:
    """Subgradient of J at u from the side's reduced adjoint system."""
    if side not in SIDES:
        raise InvalidD(f"side must be one of {SIDES}, got {side!r}")
    if solution is None:
        solution = solve_bop(cp.bop, u, method="pdas")
    partition = classify_sets(solution, eps_active, eps_mult)
    D = domain_for_side(partition, side)
    grid = cp.bop.grid
    j_y = grid.mass * (solution.y.values - cp.y_target.values)
    q = reduced_linear_solve(cp.bop.operator, j_y, D, adjoint=True)
    fprime = control_derivative_matrix(cp.bop.control, u)
    g = fprime.T @ q + cp.alpha * grid.mass * u.values
    return Subgradient(
        g=grid.function(g), q=grid.function(q), D_used=D, side=side
    )


@dataclass(frozen=True, eq=False)
class DescentTrace:
    rows: list            # dicts: iter, objective, step, grad_norm, side
    u_final: GridFunction
    termination: str      # max_steps | grad_tol | line_search_failure
    line_search_failures: int


def descent_loop(
    cp: ControlProblem,
    u0: GridFunction,
    steps: int = 50,
    side: str = "lower",
    params: ArmijoParams = ArmijoParams(),
) -> DescentTrace:
    """Projected-free subgradient descent u <- u - s*g with Armijo backtracking.

    Line-search failures are recorded in the trace (termination reason), never
    raised; every accepted step strictly decreases the objective.
    """
    grid = cp.bop.grid
    u = u0
    j = objective(cp, u)
    trial = params.initial_step if params.initial_step is not None else 1.0 / grid.mass
    rows = []
    failures = 0
    termination = "max_steps"
    for it in range(1, steps + 1):
        sub = adjoint_subgradient(cp, u, side=side)
        g = sub.g.values
        slope = -float(g @ g)       # directional derivative along -g
        grad_norm = float(np.sqrt(-slope))
        if grad_norm <= params.grad_tol:
            termination = "grad_tol"
            break
        s = trial
        accepted = False
        for _ in range(params.max_backtracks):
            u_try = u.with_values(u.values - s * g)
            j_try = objective(cp, u_try)
            if j_try <= j + params.c1 * s * slope:
                accepted = True
                break
            s *= params.shrink
        if not accepted:
            failures += 1
            rows.append({"iter": it, "objective": j, "step": 0.0,
                         "grad_norm": grad_norm, "side": side})
            termination = "line_search_failure"
            break
        u, j = u_try, j_try
        rows.append({"iter": it, "objective": j, "step": s,
                     "grad_norm": grad_norm, "side": side})
        trial = s * params.growth
    return DescentTrace(
        rows=rows, u_final=u, termination=termination,
        line_search_failures=failures,
    )
