"""Finite-dimensional operator instances.

Shipped instances:

* ``make_diag_linear``   -- A(v) = a*v, the linear oracle case (quadratic
  growth, outside the p > 2 class; flagged on the descriptor),
* ``make_scalar_cubic``  -- A(v) = a3*v^3 + a1*v componentwise, p = 4,
* ``make_p_laplacian_1d`` -- finite-difference 1-D p-Laplacian with zero
  boundary values,

and for the memory-coupling operator:

* ``make_scaled_identity_spd`` -- B = b*I,
* ``make_laplacian_spd_1d``    -- (2,-1) second-difference matrix / h^2.

All duality pairings are plain Euclidean dot products; the discrete
energy-space norm of each monotone operator is carried on the descriptor.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .kernel import KernelSpec

JAC_EPS = 1e-8  # flux regularisation inside the p-Laplacian Jacobian only


@dataclass(frozen=True)
class MonotoneOperatorDescriptor:
    """Monotone operator A with p-coercivity <A v, v> >= mu_A ||v||_VA^p - c_A."""

    name: str
    dim: int
    apply: Callable[[np.ndarray], np.ndarray]
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]]
    p: float
    mu_A: float
    beta_A: float
    c_A: float
    va_norm: Callable[[np.ndarray], float]
    uniformly_monotone: bool = False
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SpdOperatorDescriptor:
    """Symmetric strongly positive operator given by a dense matrix."""

    name: str
    dim: int
    matrix: np.ndarray
    mu_B: float
    beta_B: float
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.array_equal(self.matrix, self.matrix.T):
            raise ValueError("operator matrix must be exactly symmetric")
        np.linalg.cholesky(self.matrix)  # raises if not positive definite

    def bnorm(self, v: np.ndarray) -> float:
        return float(np.sqrt(b_inner(self, v, v)))


def b_inner(B: SpdOperatorDescriptor, v: np.ndarray, w: np.ndarray) -> float:
    if v.shape != w.shape or v.shape != (B.dim,):
        raise ValueError(f"dimension mismatch: {v.shape}, {w.shape}, expected ({B.dim},)")
    return float(v @ (B.matrix @ w))


class Forcing:
    """Right-hand side f with per-step cell averages (1/tau) int f dt."""

    def __call__(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def cell_average(self, t0: float, t1: float) -> np.ndarray:
        # 4-point Gauss-Legendre per cell; overridden where an
        # antiderivative is available.
        x, w = np.polynomial.legendre.leggauss(4)
        mid, half = 0.5 * (t0 + t1), 0.5 * (t1 - t0)
        vals = np.array([self(mid + half * xi) for xi in x])
        return 0.5 * (w @ vals)


class ZeroForcing(Forcing):
    def __init__(self, dim: int):
        self.dim = dim

    def __call__(self, t: float) -> np.ndarray:
        return np.zeros(self.dim)

    def cell_average(self, t0: float, t1: float) -> np.ndarray:
        return np.zeros(self.dim)


class ConstantForcing(Forcing):
    def __init__(self, value: np.ndarray):
        self.value = np.asarray(value, dtype=float)

    def __call__(self, t: float) -> np.ndarray:
        return self.value.copy()

    def cell_average(self, t0: float, t1: float) -> np.ndarray:
        return self.value.copy()


class PolynomialForcing(Forcing):
    """f(t) = sum_k coeffs[k] * t^k times a fixed direction vector."""

    def __init__(self, coeffs, direction: np.ndarray):
        self.poly = np.polynomial.Polynomial(coeffs)
        self.direction = np.asarray(direction, dtype=float)

    def __call__(self, t: float) -> np.ndarray:
        return float(self.poly(t)) * self.direction

    def cell_average(self, t0: float, t1: float) -> np.ndarray:
        anti = self.poly.integ()
        return float(anti(t1) - anti(t0)) / (t1 - t0) * self.direction


class SineForcing(Forcing):
    """f(t) = amp * sin(omega * t) times a fixed direction vector."""

    def __init__(self, amp: float, omega: float, direction: np.ndarray):
        self.amp = amp
        self.omega = omega
        self.direction = np.asarray(direction, dtype=float)

    def __call__(self, t: float) -> np.ndarray:
        return self.amp * np.sin(self.omega * t) * self.direction

    def cell_average(self, t0: float, t1: float) -> np.ndarray:
        avg = self.amp * (np.cos(self.omega * t0) - np.cos(self.omega * t1)) / (
            self.omega * (t1 - t0)
        )
        return avg * self.direction


@dataclass(frozen=True)
class ProblemInstance:
    A: MonotoneOperatorDescriptor
    B: SpdOperatorDescriptor
    u0: np.ndarray
    v0: np.ndarray
    forcing: Forcing
    kernel: KernelSpec

    def __post_init__(self):
        d = self.A.dim
        if self.B.dim != d or self.u0.shape != (d,) or self.v0.shape != (d,):
            raise ValueError("operator and data dimensions disagree")


def make_diag_linear(a: float, dim: int = 1) -> MonotoneOperatorDescriptor:
    """Linear A(v) = a*v with a > 0; the exactly solvable oracle instance.

    Uniformly monotone with exponent 2, hence outside the p > 2 class; kept
    for oracle comparisons and flagged as such."""
    if not a > 0.0:
        raise ValueError(f"linear coefficient must be positive, got a={a}")
    eye = np.eye(dim)
    return MonotoneOperatorDescriptor(
        name="linear",
        dim=dim,
        apply=lambda v: a * v,
        jacobian=lambda v: a * eye,
        p=2.0,
        mu_A=a,
        beta_A=a,
        c_A=0.0,
        va_norm=lambda v: float(np.linalg.norm(v)),
        uniformly_monotone=True,
        params={"a": a},
    )


def make_scalar_cubic(a3: float, a1: float, dim: int = 1) -> MonotoneOperatorDescriptor:
    """Componentwise cubic A(v) = a3*v^3 + a1*v, p = 4."""
    if a3 < 0.0 or a1 < 0.0:
        raise ValueError("cubic coefficients must be nonnegative")
    if a3 == 0.0 and a1 == 0.0:
        raise ValueError("cubic operator needs a3 > 0 or a1 > 0 (coercivity fails)")
    return MonotoneOperatorDescriptor(
        name="cubic",
        dim=dim,
        apply=lambda v: a3 * v**3 + a1 * v,
        jacobian=lambda v: np.diag(3.0 * a3 * v**2 + a1),
        p=4.0,
        mu_A=a3,
        beta_A=a3 + a1,
        c_A=0.0,
        va_norm=lambda v: float(np.linalg.norm(v, 4)),
        params={"a3": a3, "a1": a1},
    )


def make_p_laplacian_1d(m: int, p: float, L: float = 1.0) -> MonotoneOperatorDescriptor:
    """Finite-difference p-Laplacian A(v)_i = -D_-(|D_+ v|^{p-2} D_+ v)_i on m
    interior nodes of (0, L) with zero boundary values."""
    if m < 2:
        raise ValueError(f"need at least 2 interior nodes, got m={m}")
    if not p > 2.0:
        raise ValueError(f"exponent must lie in (2, inf), got p={p}")
    h = L / (m + 1)

    def apply(v: np.ndarray) -> np.ndarray:
        return _kernels.p_laplacian_apply(np.ascontiguousarray(v, dtype=np.float64), p, h)

    def jacobian(v: np.ndarray) -> np.ndarray:
        fw = _kernels.p_laplacian_face_weights(
            np.ascontiguousarray(v, dtype=np.float64), p, h, JAC_EPS
        )
        J = np.zeros((m, m))
        main = (fw[:-1] + fw[1:]) / h**2
        off = -fw[1:-1] / h**2
        np.fill_diagonal(J, main)
        J[np.arange(m - 1), np.arange(1, m)] = off
        J[np.arange(1, m), np.arange(m - 1)] = off
        return J

    def va_norm(v: np.ndarray) -> float:
        g = np.diff(v, prepend=0.0, append=0.0) / h
        return float((h * np.sum(np.abs(g) ** p)) ** (1.0 / p))

    # <A v, v> = sum |D_+ v|^p = ||v||_VA^p / h under the Euclidean pairing
    return MonotoneOperatorDescriptor(
        name="p_laplacian",
        dim=m,
        apply=apply,
        jacobian=jacobian,
        p=p,
        mu_A=1.0 / h,
        beta_A=2.0 / h ** (p - 1.0),
        c_A=0.0,
        va_norm=va_norm,
        params={"m": m, "p": p, "L": L, "h": h},
    )


def make_scaled_identity_spd(b: float, dim: int = 1) -> SpdOperatorDescriptor:
    if not b > 0.0:
        raise ValueError(f"identity scale must be positive, got b={b}")
    return SpdOperatorDescriptor(
        name="identity",
        dim=dim,
        matrix=b * np.eye(dim),
        mu_B=b,
        beta_B=b,
        params={"b": b},
    )


def make_laplacian_spd_1d(m: int, L: float = 1.0) -> SpdOperatorDescriptor:
    """Standard (2,-1) second-difference matrix scaled by 1/h^2."""
    if m < 2:
        raise ValueError(f"need at least 2 interior nodes, got m={m}")
    h = L / (m + 1)
    M = (np.diag(np.full(m, 2.0)) + np.diag(np.full(m - 1, -1.0), 1)
         + np.diag(np.full(m - 1, -1.0), -1)) / h**2
    # eigenvalues 2(1 - cos(k pi/(m+1)))/h^2, k = 1..m
    mu = 2.0 * (1.0 - np.cos(np.pi / (m + 1))) / h**2
    beta = 2.0 * (1.0 - np.cos(m * np.pi / (m + 1))) / h**2
    return SpdOperatorDescriptor(
        name="laplacian",
        dim=m,
        matrix=M,
        mu_B=mu,
        beta_B=beta,
        params={"m": m, "L": L, "h": h},
    )
