"""One-step schemes and full-trajectory drivers.

All implicit schemes are semi-implicit: the drift is evaluated at the new
state and resolved by the nonlinear solver, every noise term is evaluated at
the old state and enters the solver's right-hand side.  The drift-implicit
schemes refuse to run unless C_b*h < 1 (well-posedness gate).

Trajectory blow-up (state norm above 1e12, or non-finite) is a reportable
runtime event, raised as BlowupError with the offending step index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fbm import SamplePath
from .fields import (
    DiffusionField,
    DriftField,
    first_order_composition,
    second_order_composition,
)
from .grids import Grid
from .lift import RoughLift
from .solver import DEFAULT_TOL, ConvergenceError, StepSizeError, solve_step

__all__ = [
    "BLOWUP_NORM",
    "Problem",
    "Trajectory",
    "BlowupError",
    "SchemeStepError",
    "implicit_euler_additive",
    "explicit_euler",
    "semi_implicit_euler",
    "semi_implicit_milstein",
    "semi_implicit_milstein3",
    "simplified_milstein",
    "simplified_milstein3",
    "boundedness_bound",
    "dump_trajectory_csv",
]

BLOWUP_NORM = 1e12


class BlowupError(RuntimeError):
    """Numerical trajectory left the trust region (overflow/divergence)."""

    def __init__(self, step: int, value_norm: float):
        super().__init__(f"trajectory blew up at step {step} (|y| = {value_norm:.3e})")
        self.step = step
        self.value_norm = value_norm


class SchemeStepError(RuntimeError):
    """Implicit solve failed inside a trajectory; carries the step index."""

    def __init__(self, step: int, cause: ConvergenceError):
        super().__init__(f"implicit solve failed at step {step}: {cause}")
        self.step = step
        self.residual = cause.residual


@dataclass(frozen=True)
class Problem:
    """Coefficients, initial condition and horizon of one equation."""

    drift: DriftField
    xi: np.ndarray
    T: float
    diffusion: DiffusionField | None = None

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float).reshape(-1)
        if xi.size != self.drift.dim:
            raise ValueError(f"initial condition has dim {xi.size}, drift has {self.drift.dim}")
        if self.diffusion is not None and self.diffusion.dim != self.drift.dim:
            raise ValueError(
                f"diffusion state dim {self.diffusion.dim} != drift dim {self.drift.dim}"
            )
        if not self.T > 0.0:
            raise ValueError(f"horizon must be positive, got T={self.T}")
        object.__setattr__(self, "xi", xi)

    @property
    def dim(self) -> int:
        return self.drift.dim

    @property
    def additive(self) -> bool:
        return self.diffusion is None


@dataclass(frozen=True)
class Trajectory:
    grid: Grid
    states: np.ndarray  # (N + 1, d)


def _check_gate(problem: Problem, h: float) -> None:
    cb = problem.drift.one_sided_lipschitz
    if cb * h >= 1.0:
        raise StepSizeError(
            f"implicit scheme needs C_b*h < 1, got C_b={cb}, h={h} (C_b*h={cb * h})"
        )


def _check_grid(problem: Problem, grid: Grid) -> None:
    if abs(grid.T - problem.T) > 1e-12 * max(1.0, problem.T):
        raise ValueError(f"driver lives on [0, {grid.T}] but the problem horizon is {problem.T}")


def _require_additive(problem: Problem, path: SamplePath) -> None:
    if not problem.additive:
        raise ValueError("additive-noise scheme applied to a multiplicative problem")
    if path.m != problem.dim:
        raise ValueError(f"additive driver has {path.m} components, state has {problem.dim}")


def _require_multiplicative(problem: Problem, m: int) -> None:
    if problem.additive:
        raise ValueError("multiplicative scheme needs a diffusion field")
    if m != problem.diffusion.noise_dim:
        raise ValueError(f"driver has {m} components, diffusion expects {problem.diffusion.noise_dim}")


def _guard(y: np.ndarray, step: int) -> None:
    n = float(np.linalg.norm(y))
    if not np.isfinite(n) or n > BLOWUP_NORM:
        raise BlowupError(step, n)


def _implicit_trajectory(problem, grid, explicit_term, tol) -> Trajectory:
    _check_gate(problem, grid.h)
    _check_grid(problem, grid)
    states = np.empty((grid.N + 1, problem.dim))
    states[0] = problem.xi
    y = problem.xi.copy()
    for j in range(grid.N):
        r = y + explicit_term(j, y)
        try:
            y = solve_step(problem.drift, grid.h, r, tol=tol).solution
        except ConvergenceError as err:
            raise SchemeStepError(j, err) from err
        _guard(y, j)
        states[j + 1] = y
    return Trajectory(grid, states)


def implicit_euler_additive(problem: Problem, path: SamplePath, tol: float = DEFAULT_TOL) -> Trajectory:
    """Drift-implicit Euler for additive noise:
    y_{j+1} = y_j + h*b(y_{j+1}) + (x_{j+1} - x_j)."""
    _require_additive(problem, path)
    dx = np.diff(path.values, axis=0)
    return _implicit_trajectory(problem, path.grid, lambda j, y: dx[j], tol)


def explicit_euler(problem: Problem, path: SamplePath) -> Trajectory:
    """Forward Euler: y_{j+1} = y_j + h*b(y_j) + noise increment, with the
    noise increment x_{j+1} - x_j for additive problems and
    sigma(y_j) (x_{j+1} - x_j) for multiplicative ones."""
    if problem.additive:
        _require_additive(problem, path)
    else:
        _require_multiplicative(problem, path.m)
    _check_grid(problem, path.grid)
    grid = path.grid
    dx = np.diff(path.values, axis=0)
    states = np.empty((grid.N + 1, problem.dim))
    states[0] = problem.xi
    y = problem.xi.copy()
    for j in range(grid.N):
        noise = dx[j] if problem.additive else problem.diffusion.func(y) @ dx[j]
        y = y + grid.h * problem.drift(y) + noise
        _guard(y, j)
        states[j + 1] = y
    return Trajectory(grid, states)


def semi_implicit_euler(problem: Problem, lift: RoughLift, tol: float = DEFAULT_TOL) -> Trajectory:
    """Semi-implicit Euler: noise term sigma(y_j) x_{j,j+1}, drift implicit."""
    _require_multiplicative(problem, lift.m)
    sig = problem.diffusion
    dx = lift.increments

    def term(j, y):
        return sig.func(y) @ dx[j]

    return _implicit_trajectory(problem, lift.grid, term, tol)


def semi_implicit_milstein(problem: Problem, lift: RoughLift, tol: float = DEFAULT_TOL) -> Trajectory:
    """Semi-implicit Milstein: adds the first-order composition contracted
    against the level-2 tensor of the supplied lift."""
    _require_multiplicative(problem, lift.m)
    sig = problem.diffusion
    dx = lift.increments
    X2 = lift.level2

    def term(j, y):
        E = first_order_composition(sig, y)
        return sig.func(y) @ dx[j] + np.einsum("ija,ij->a", E, X2[j])

    return _implicit_trajectory(problem, lift.grid, term, tol)


def semi_implicit_milstein3(problem: Problem, lift: RoughLift, tol: float = DEFAULT_TOL) -> Trajectory:
    """Third-order semi-implicit Milstein: additionally contracts the
    second-order composition against the level-3 tensor."""
    _require_multiplicative(problem, lift.m)
    if not lift.has_level3:
        raise ValueError("third-order scheme needs a lift with level-3 tensors")
    sig = problem.diffusion
    dx = lift.increments
    X2 = lift.level2
    X3 = lift.level3

    def term(j, y):
        E = first_order_composition(sig, y)
        F = second_order_composition(sig, y)
        return (
            sig.func(y) @ dx[j]
            + np.einsum("ija,ij->a", E, X2[j])
            + np.einsum("ijka,ijk->a", F, X3[j])
        )

    return _implicit_trajectory(problem, lift.grid, term, tol)


def simplified_milstein(problem: Problem, path: SamplePath, tol: float = DEFAULT_TOL) -> Trajectory:
    """Simplified Milstein: the level-2 tensor is replaced by half the product
    of increments, so only the path is needed."""
    _require_multiplicative(problem, path.m)
    sig = problem.diffusion
    dx = np.diff(path.values, axis=0)

    def term(j, y):
        v = dx[j]
        E = first_order_composition(sig, y)
        return sig.func(y) @ v + 0.5 * np.einsum("ija,i,j->a", E, v, v)

    return _implicit_trajectory(problem, path.grid, term, tol)


def simplified_milstein3(problem: Problem, path: SamplePath, tol: float = DEFAULT_TOL) -> Trajectory:
    """Simplified third-order Milstein: level-2 and level-3 tensors replaced
    by scaled products of increments."""
    _require_multiplicative(problem, path.m)
    sig = problem.diffusion
    dx = np.diff(path.values, axis=0)

    def term(j, y):
        v = dx[j]
        E = first_order_composition(sig, y)
        F = second_order_composition(sig, y)
        return (
            sig.func(y) @ v
            + 0.5 * np.einsum("ija,i,j->a", E, v, v)
            + np.einsum("ijka,i,j,k->a", F, v, v, v) / 6.0
        )

    return _implicit_trajectory(problem, path.grid, term, tol)


def boundedness_bound(problem: Problem, path: SamplePath) -> float:
    """A-priori uniform bound for the drift-implicit additive recursion,
    valid whenever 2*C_b*h <= 1:

    exp(2*C_b*T) * (|xi| + T * max_{n>=1} |b(x_n)|) + max_n |x_n|.
    """
    _require_additive(problem, path)
    cb = problem.drift.one_sided_lipschitz
    T = path.grid.T
    b_max = max(float(np.linalg.norm(problem.drift(x))) for x in path.values[1:])
    x_max = float(np.max(np.linalg.norm(path.values, axis=1)))
    xi_norm = float(np.linalg.norm(problem.xi))
    return float(np.exp(2.0 * cb * T) * (xi_norm + b_max * T) + x_max)


def dump_trajectory_csv(trajectory: Trajectory, target) -> None:
    """Write one row per node with columns t, y1..yd."""
    d = trajectory.states.shape[1]
    header = "t," + ",".join(f"y{i + 1}" for i in range(d))
    lines = [header]
    for t, row in zip(trajectory.grid.nodes, trajectory.states):
        lines.append(",".join(f"{v:.17g}" for v in (t, *row)))
    with open(target, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
