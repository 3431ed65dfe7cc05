"""Discrete and continuous Volterra memory operators.

The discrete operator is

    K^n = u0 + tau * sum_{j=1..n} gamma_{n-j+1} v^j ,   K^0 = u0 .

Production stepping uses the O(1)-per-step recurrence

    K^n = exp(-lam*tau) * K^{n-1} + (1 - exp(-lam*tau)) * (v^n + u0),

which is an exact algebraic rearrangement of the weight difference property;
the O(n) direct sum is retained as a test oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .kernel import KernelSpec, QuadWeights, TimeGrid
from .reporting import ReportEntry


class QuadratureError(RuntimeError):
    """Composite quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class MemoryState:
    """Running memory value K^n at step n (K^0 = u0)."""

    u0: np.ndarray
    K_n: np.ndarray
    n: int

    def __post_init__(self):
        if self.n == 0 and not np.array_equal(self.K_n, self.u0):
            raise ValueError("memory state at step 0 must equal u0")


@dataclass(frozen=True)
class GridFunction:
    """Values v^0..v^N on a uniform time grid, each a vector of dimension d."""

    grid: TimeGrid
    values: np.ndarray  # shape (N+1, d)

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[0] != self.grid.N + 1:
            raise ValueError(
                f"expected values of shape (N+1, d) = ({self.grid.N + 1}, d), "
                f"got {self.values.shape}"
            )

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def initial_memory_state(u0: np.ndarray) -> MemoryState:
    return MemoryState(u0=u0, K_n=u0.copy(), n=0)


def k_apply_direct(u0: np.ndarray, v: GridFunction, w: QuadWeights, n: int) -> np.ndarray:
    """Direct summation u0 + tau * sum_{j=1..n} gamma_{n-j+1} v^j."""
    if not 1 <= n <= v.grid.N:
        raise IndexError(f"step index {n} out of range 1..{v.grid.N}")
    gamma = w.gamma[:n][::-1]  # gamma_{n-j+1} for j = 1..n
    return u0 + v.grid.tau * gamma @ v.values[1 : n + 1]


def k_apply_direct_all(u0: np.ndarray, v: GridFunction, w: QuadWeights) -> GridFunction:
    """Direct summation at every step; O(N^2 d) hot loop."""
    values = _kernels.memory_direct_all(
        np.ascontiguousarray(u0, dtype=np.float64),
        np.ascontiguousarray(v.values, dtype=np.float64),
        np.ascontiguousarray(w.gamma, dtype=np.float64),
        v.grid.tau,
    )
    return GridFunction(grid=v.grid, values=values)


def k_update_recurrence(
    state: MemoryState, v_n: np.ndarray, spec: KernelSpec, grid: TimeGrid
) -> MemoryState:
    """Advance the memory one step with the exact exponential recurrence."""
    if v_n.shape != state.K_n.shape:
        raise ValueError(f"dimension mismatch: {v_n.shape} vs {state.K_n.shape}")
    decay = math.exp(-spec.lam * grid.tau)
    w1 = -math.expm1(-spec.lam * grid.tau)  # 1 - exp(-lam*tau)
    K_next = decay * state.K_n + w1 * (v_n + state.u0)
    return MemoryState(u0=state.u0, K_n=K_next, n=state.n + 1)


def k_continuous(
    u0: np.ndarray,
    v,
    spec: KernelSpec,
    t: float,
    tol: float = 1e-10,
    max_doublings: int = 24,
) -> np.ndarray:
    """Evaluate (Kv)(t) = u0 + int_0^t k(t-s) v(s) ds by composite Simpson
    with panel doubling.  Oracle only; ``v`` is a callable s -> vector."""
    if not 0.0 <= t <= spec.T:
        raise ValueError(f"time {t} outside [0, {spec.T}]")
    if t == 0.0:
        return np.asarray(u0, dtype=float).copy()

    def estimate(panels: int) -> np.ndarray:
        s = np.linspace(0.0, t, 2 * panels + 1)
        k_vals = spec.lam * np.exp(-spec.lam * (t - s))
        v_vals = np.array([np.atleast_1d(v(si)) for si in s], dtype=float)
        sw = np.ones(2 * panels + 1)
        sw[1:-1:2] = 4.0
        sw[2:-1:2] = 2.0
        sw *= t / (6.0 * panels)
        return (sw * k_vals) @ v_vals

    prev = estimate(1)
    panels = 2
    for _ in range(max_doublings):
        cur = estimate(panels)
        if np.max(np.abs(cur - prev)) < tol * (1.0 + np.max(np.abs(cur))):
            return u0 + cur
        prev = cur
        panels *= 2
    raise QuadratureError(f"memory quadrature did not reach tol={tol} at t={t}")


def k_positivity_check(
    u0: np.ndarray,
    v: GridFunction,
    w: QuadWeights,
    spec: KernelSpec,
    B: np.ndarray,
    n: int | None = None,
    abs_tol_scale: float = 1e-10,
) -> ReportEntry:
    """Discrete positive-type inequality of the memory term.

    Checks, with K^j the direct-sum memory values and ||x||_B^2 = x.B.x,

        2 tau sum_{j<=n} <B K^j, v^j>
            >= tau/(e^{lam tau}-1) * (||K^n||_B^2 - ||u0||_B^2)
               + tau sum_{j<=n} ||K^j||_B^2 - T ||u0||_B^2 .
    """
    if n is None:
        n = v.grid.N
    tau = v.grid.tau
    K = k_apply_direct_all(u0, v, w).values
    BK = K @ B.T
    lhs = 2.0 * tau * float(np.sum(BK[1 : n + 1] * v.values[1 : n + 1]))
    norm_K_sq = np.sum(BK * K, axis=1)
    rhs = (
        tau / math.expm1(spec.lam * tau) * (norm_K_sq[n] - norm_K_sq[0])
        + tau * float(np.sum(norm_K_sq[1 : n + 1]))
        - v.grid.T * norm_K_sq[0]
    )
    scale = 1.0 + abs(lhs) + abs(rhs)
    # inequality is rhs <= lhs; report with lhs/rhs swapped into the
    # "entry.lhs <= entry.rhs" convention
    return ReportEntry(
        name="memory_positivity",
        lhs=rhs,
        rhs=lhs,
        abs_tol=abs_tol_scale * scale,
        tag="discrete-memory-positive-type",
    )
