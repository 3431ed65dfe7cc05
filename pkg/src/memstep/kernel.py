"""Exponential memory kernel and its product-quadrature weights.

The memory integral is discretised with weights

    gamma_i = integral_0^1 k((i - s) * tau) ds,   k(z) = lam * exp(-lam * z),

which for the exponential kernel have the closed form
``gamma_i = (exp(lam*tau) - 1)/tau * exp(-lam*t_i)``.  The closed form is the
production path; :func:`weights_numeric` is a composite-Simpson oracle used by
the test suite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class KernelSpec:
    """Exponential kernel ``k(z) = lam * exp(-lam * z)``; 1/lam is the average
    relaxation time, T the final time."""

    lam: float
    T: float

    def __post_init__(self):
        if not self.lam > 0.0:
            raise ValueError(f"kernel rate must be positive, got lam={self.lam}")
        if not self.T > 0.0:
            raise ValueError(f"final time must be positive, got T={self.T}")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_n = n * tau, n = 0..N, with tau = T/N."""

    N: int
    T: float

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"step count must be >= 1, got N={self.N}")
        if not self.T > 0.0:
            raise ValueError(f"final time must be positive, got T={self.T}")

    @property
    def tau(self) -> float:
        return self.T / self.N

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.N + 1)


@dataclass(frozen=True)
class QuadWeights:
    """Product-quadrature weights; ``gamma[i-1]`` holds gamma_i for i = 1..N."""

    gamma: np.ndarray

    def __post_init__(self):
        if np.any(self.gamma <= 0.0):
            raise ValueError("quadrature weights must be positive")

    def gamma_i(self, i: int) -> float:
        if not 1 <= i <= len(self.gamma):
            raise IndexError(f"weight index {i} out of range 1..{len(self.gamma)}")
        return float(self.gamma[i - 1])


def kernel_eval(spec: KernelSpec, z: float) -> float:
    """Evaluate k(z) = lam * exp(-lam * z) for z >= 0."""
    if z < 0.0:
        raise ValueError(f"kernel argument must be nonnegative, got z={z}")
    return spec.lam * math.exp(-spec.lam * z)


def weights_closed_form(spec: KernelSpec, grid: TimeGrid) -> QuadWeights:
    """Closed-form weights gamma_i = (exp(lam*tau)-1)/tau * exp(-lam*t_i).

    The prefactor is evaluated with expm1 so that the tau -> 0 limit
    gamma_1 -> lam = k(0) is numerically clean.
    """
    tau = grid.tau
    rate = math.expm1(spec.lam * tau) / tau
    i = np.arange(1, grid.N + 1)
    return QuadWeights(gamma=rate * np.exp(-spec.lam * tau * i))


def weights_numeric(spec: KernelSpec, grid: TimeGrid, panels: int) -> QuadWeights:
    """Weights by composite Simpson quadrature of the defining integrals.

    Test oracle for :func:`weights_closed_form`.  Each integral over (0,1) is
    split into ``panels`` Simpson panels (two subintervals per panel).
    """
    if panels < 1:
        raise ValueError(f"panel count must be >= 1, got {panels}")
    tau = grid.tau
    s = np.linspace(0.0, 1.0, 2 * panels + 1)
    simpson_w = np.ones(2 * panels + 1)
    simpson_w[1:-1:2] = 4.0
    simpson_w[2:-1:2] = 2.0
    simpson_w *= 1.0 / (6.0 * panels)
    i = np.arange(1, grid.N + 1)
    # k((i - s)*tau) factors as exp(-lam*tau*i) * lam*exp(lam*tau*s), so the
    # Simpson sum over s is shared by every weight
    inner = (spec.lam * np.exp(spec.lam * tau * s)) @ simpson_w
    return QuadWeights(gamma=inner * np.exp(-spec.lam * tau * i))


def weights_l1_sum(spec: KernelSpec, grid: TimeGrid, w: QuadWeights) -> float:
    """tau * sum_i gamma_i; telescopes to 1 - exp(-lam*T), the L1 norm of k."""
    return grid.tau * float(np.sum(w.gamma))
