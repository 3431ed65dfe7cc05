"""Implicit Euler time stepping with product-quadrature memory.

Each step solves the strictly monotone stationary equation

    M(v^n) := (1/tau) v^n + A(v^n) + tau*gamma_1 * B v^n = rhs^n

by damped Newton with a conjugate-gradient inner solver, falling back to a
relaxed Picard iteration when the Jacobian is unavailable or Newton stalls.
The memory value is advanced by the exact O(1) exponential recurrence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .kernel import KernelSpec, TimeGrid
from .memory import GridFunction, MemoryState, initial_memory_state, k_update_recurrence
from .operators import ProblemInstance


class InnerSolverError(RuntimeError):
    """Conjugate gradients failed to reach the requested residual."""


class StepFailureError(RuntimeError):
    """Neither Newton nor the Picard fallback converged at some step."""

    def __init__(self, step: int, residual_history: list[float]):
        self.step = step
        self.residual_history = residual_history
        super().__init__(
            f"step {step} failed to converge; last residuals "
            f"{residual_history[-3:]}"
        )


@dataclass(frozen=True)
class StepperConfig:
    N: int = 256
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    damping_max_halvings: int = 30
    cg_tol: float = 1e-12
    cg_max_iter: int = 0  # 0 -> 10 * dimension
    picard_fallback: bool = True
    picard_relax: float = 0.5
    picard_max_iter: int = 5000

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"step count must be >= 1, got N={self.N}")
        for name in ("newton_tol", "cg_tol", "picard_relax"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class Trajectory:
    grid: TimeGrid
    v: GridFunction
    K: GridFunction
    newton_iters: np.ndarray  # per step 1..N, index 0 unused (0)
    residuals: np.ndarray


def linear_subsolve(action, rhs: np.ndarray, cg_tol: float, cg_max_iter: int) -> np.ndarray:
    """Conjugate gradients for a symmetric positive definite operator given as
    a matrix-free action; relative residual <= cg_tol or InnerSolverError."""
    x = np.zeros_like(rhs)
    r = rhs.copy()
    rhs_norm = np.linalg.norm(rhs)
    if rhs_norm == 0.0:
        return x
    p = r.copy()
    rr = float(r @ r)
    for _ in range(cg_max_iter):
        if math.sqrt(rr) <= cg_tol * rhs_norm:
            return x
        Ap = action(p)
        alpha = rr / float(p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        rr_new = float(r @ r)
        p = r + (rr_new / rr) * p
        rr = rr_new
    if math.sqrt(rr) <= cg_tol * rhs_norm:
        return x
    raise InnerSolverError(
        f"CG stalled at relative residual {math.sqrt(rr) / rhs_norm:.3e} "
        f"(target {cg_tol:.3e})"
    )


def assemble_rhs(
    prev_v: np.ndarray,
    memory: MemoryState,
    f_n: np.ndarray,
    B: np.ndarray,
    spec: KernelSpec,
    tau: float,
) -> np.ndarray:
    """Right-hand side of the per-step equation with the implicit memory term
    tau*gamma_1*B v^n kept on the left:

        rhs = f^n + v^{n-1}/tau - exp(-lam*tau) B K^{n-1}
              - (1 - exp(-lam*tau)) B u0 ,

    which equals f^n + v^{n-1}/tau - B u0 - tau * sum_{j<n} gamma_{n-j+1} B v^j.
    """
    if prev_v.shape != memory.K_n.shape:
        raise ValueError(f"dimension mismatch: {prev_v.shape} vs {memory.K_n.shape}")
    decay = math.exp(-spec.lam * tau)
    w1 = -math.expm1(-spec.lam * tau)
    return f_n + prev_v / tau - decay * (B @ memory.K_n) - w1 * (B @ memory.u0)


def step_solve(
    problem: ProblemInstance,
    config: StepperConfig,
    tau: float,
    rhs: np.ndarray,
    v_guess: np.ndarray,
) -> tuple[np.ndarray, int, float]:
    """Solve M(v) = rhs; returns (v, newton_iterations, final_residual)."""
    A, B = problem.A, problem.B.matrix
    tg1 = -math.expm1(-problem.kernel.lam * tau)  # tau * gamma_1
    cg_max = config.cg_max_iter if config.cg_max_iter > 0 else 10 * problem.A.dim

    def residual(v):
        return v / tau + A.apply(v) + tg1 * (B @ v) - rhs

    # scale with the solution magnitude, not ||rhs|| (which grows like 1/tau)
    target = config.newton_tol * (1.0 + np.linalg.norm(v_guess))
    v = v_guess.copy()
    F = residual(v)
    res = float(np.linalg.norm(F))
    history = [res]
    iters = 0

    if A.jacobian is not None:
        while res > target and iters < config.newton_max_iter:
            J = A.jacobian(v)
            action = lambda w: w / tau + J @ w + tg1 * (B @ w)
            try:
                d = linear_subsolve(action, -F, config.cg_tol, cg_max)
            except InnerSolverError:
                break
            alpha = 1.0
            improved = False
            for _ in range(config.damping_max_halvings + 1):
                v_trial = v + alpha * d
                F_trial = residual(v_trial)
                res_trial = float(np.linalg.norm(F_trial))
                if res_trial < res:
                    v, F, res = v_trial, F_trial, res_trial
                    improved = True
                    break
                alpha *= 0.5
            iters += 1
            history.append(res)
            if not improved:
                break

    if res > target and config.picard_fallback:
        # v_{k+1} = v_k + relax * (M0^{-1}(rhs - A v_k) - v_k) with the
        # constant SPD part M0 = (1/tau) I + tau*gamma_1*B factorised once
        M0 = np.eye(problem.A.dim) / tau + tg1 * B
        chol = cho_factor(M0)
        for _ in range(config.picard_max_iter):
            v_new = cho_solve(chol, rhs - A.apply(v))
            v = v + config.picard_relax * (v_new - v)
            F = residual(v)
            res = float(np.linalg.norm(F))
            history.append(res)
            if res <= target:
                break

    if res > target:
        raise StepFailureError(step=-1, residual_history=history)
    return v, iters, res


def cell_averages(problem: ProblemInstance, grid: TimeGrid) -> np.ndarray:
    """Per-step data averages f^n = (1/tau) int_{t_{n-1}}^{t_n} f dt, n=1..N."""
    nodes = grid.nodes
    return np.array(
        [problem.forcing.cell_average(nodes[n - 1], nodes[n]) for n in range(1, grid.N + 1)]
    )


def run(problem: ProblemInstance, config: StepperConfig) -> Trajectory:
    """Integrate the full scheme and return the assembled trajectory."""
    grid = TimeGrid(N=config.N, T=problem.kernel.T)
    tau = grid.tau
    d = problem.A.dim
    f_avg = cell_averages(problem, grid)

    v_values = np.empty((config.N + 1, d))
    K_values = np.empty((config.N + 1, d))
    newton_iters = np.zeros(config.N + 1, dtype=int)
    residuals = np.zeros(config.N + 1)

    v_values[0] = problem.v0
    state = initial_memory_state(problem.u0)
    K_values[0] = state.K_n

    for n in range(1, config.N + 1):
        rhs = assemble_rhs(v_values[n - 1], state, f_avg[n - 1], problem.B.matrix,
                           problem.kernel, tau)
        try:
            v_n, iters, res = step_solve(problem, config, tau, rhs, v_values[n - 1])
        except StepFailureError as exc:
            raise StepFailureError(step=n, residual_history=exc.residual_history) from None
        state = k_update_recurrence(state, v_n, problem.kernel, grid)
        v_values[n] = v_n
        K_values[n] = state.K_n
        newton_iters[n] = iters
        residuals[n] = res

    return Trajectory(
        grid=grid,
        v=GridFunction(grid=grid, values=v_values),
        K=GridFunction(grid=grid, values=K_values),
        newton_iters=newton_iters,
        residuals=residuals,
    )
