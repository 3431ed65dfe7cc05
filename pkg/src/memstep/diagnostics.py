"""Quantitative verification experiments.

Each experiment reruns the solver under controlled perturbations and compares
discrete energy functionals against their predicted bounds:

* ``oracle_system5``          -- fine RK4 reference on the equivalent coupled
  ODE system v' + Av + Bu = f, u' = lam*(v + u0 - u),
* ``convergence_study``       -- self/oracle convergence ladder,
* ``stability_check_i/_ii``   -- continuous dependence on (v0, u0, f),
* ``lambda_perturbation_check`` -- the fully explicit Lipschitz bound in the
  relaxation-rate parameter,
* ``apriori_report``          -- boundedness of the discrete energy estimate.

Discrete Bochner norms use the left-endpoint rule tau * sum_n ||g^n||^2,
matching the piecewise-constant prolongation of grid functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .kernel import KernelSpec, TimeGrid
from .memory import GridFunction
from .operators import ProblemInstance
from .reporting import DiagnosticsReport, ReportEntry
from .stepper import StepperConfig, Trajectory, cell_averages, run


class ConfigurationError(ValueError):
    """Experiment invoked on an instance that does not meet its hypotheses."""


@dataclass(frozen=True)
class ConvergenceRow:
    N: int
    tau: float
    error: float
    order: float  # nan for the first row


@dataclass(frozen=True)
class ConvergenceTable:
    rows: tuple[ConvergenceRow, ...]

    @property
    def orders(self) -> np.ndarray:
        return np.array([r.order for r in self.rows[1:]])

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.error for r in self.rows])


def oracle_system5(
    problem: ProblemInstance, fine_steps: int, out_N: int
) -> tuple[GridFunction, GridFunction]:
    """Classical RK4 on the coupled first-order system equivalent to the
    memory equation; returns (v, u) sampled on the out_N grid."""
    if fine_steps % out_N != 0:
        raise ValueError(f"fine_steps={fine_steps} must be a multiple of out_N={out_N}")
    lam = problem.kernel.lam
    T = problem.kernel.T
    A, B = problem.A, problem.B.matrix
    f = problem.forcing
    u0 = problem.u0

    def rhs(t, v, u):
        return f(t) - A.apply(v) - B @ u, lam * (v + u0 - u)

    h = T / fine_steps
    stride = fine_steps // out_N
    grid = TimeGrid(N=out_N, T=T)
    v_out = np.empty((out_N + 1, A.dim))
    u_out = np.empty((out_N + 1, A.dim))
    v, u = problem.v0.copy(), u0.copy()
    v_out[0], u_out[0] = v, u
    for step in range(fine_steps):
        t = step * h
        k1v, k1u = rhs(t, v, u)
        k2v, k2u = rhs(t + h / 2, v + h / 2 * k1v, u + h / 2 * k1u)
        k3v, k3u = rhs(t + h / 2, v + h / 2 * k2v, u + h / 2 * k2u)
        k4v, k4u = rhs(t + h, v + h * k3v, u + h * k3u)
        v = v + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        u = u + h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
        if (step + 1) % stride == 0:
            v_out[(step + 1) // stride] = v
            u_out[(step + 1) // stride] = u
    return GridFunction(grid=grid, values=v_out), GridFunction(grid=grid, values=u_out)


def linear_expm_reference(
    problem: ProblemInstance, out_N: int
) -> tuple[GridFunction, GridFunction]:
    """Matrix-exponential solution of the coupled system for linear A(v) = a*v
    and zero forcing; cross-check for the RK4 oracle."""
    if problem.A.name != "linear":
        raise ConfigurationError("matrix-exponential reference needs the linear instance")
    a = problem.A.params["a"]
    lam = problem.kernel.lam
    d = problem.A.dim
    B = problem.B.matrix
    M = np.block([[-a * np.eye(d), -B], [lam * np.eye(d), -lam * np.eye(d)]])
    g = np.concatenate([np.zeros(d), lam * problem.u0])
    y0 = np.concatenate([problem.v0, problem.u0])
    shift = np.linalg.solve(M, g)
    grid = TimeGrid(N=out_N, T=problem.kernel.T)
    v_out = np.empty((out_N + 1, d))
    u_out = np.empty((out_N + 1, d))
    for n, t in enumerate(grid.nodes):
        y = scipy.linalg.expm(M * t) @ (y0 + shift) - shift
        v_out[n], u_out[n] = y[:d], y[d:]
    return GridFunction(grid=grid, values=v_out), GridFunction(grid=grid, values=u_out)


def convergence_study(
    problem: ProblemInstance,
    N_list: Sequence[int],
    config: StepperConfig | None = None,
    reference: str = "oracle",
    fine_steps: int | None = None,
    ref_multiplier: int = 8,
) -> ConvergenceTable:
    """Max-norm errors against a reference trajectory over a dyadic N ladder.

    ``reference="oracle"`` uses the RK4 system solve; ``"self"`` uses a run at
    ref_multiplier * max(N_list) steps (for nonlinear instances without a
    closed-form solution).
    """
    N_list = list(N_list)
    if any(b != 2 * a for a, b in zip(N_list, N_list[1:])):
        raise ValueError("N ladder must be dyadic and increasing")
    base = config or StepperConfig()

    if reference == "oracle":
        fine = fine_steps or (32 * N_list[-1])
        ref_v, _ = oracle_system5(problem, fine, out_N=N_list[-1])
    elif reference == "self":
        N_ref = ref_multiplier * N_list[-1]
        ref_v = run(problem, _with_N(base, N_ref)).v
    else:
        raise ValueError(f"unknown reference kind {reference!r}")

    rows = []
    prev_err = None
    for N in N_list:
        traj = run(problem, _with_N(base, N))
        stride = ref_v.grid.N // N
        err = float(np.max(np.linalg.norm(traj.v.values - ref_v.values[::stride], axis=1)))
        order = math.log2(prev_err / err) if prev_err else float("nan")
        rows.append(ConvergenceRow(N=N, tau=traj.grid.tau, error=err, order=order))
        prev_err = err
    return ConvergenceTable(rows=tuple(rows))


def _with_N(config: StepperConfig, N: int) -> StepperConfig:
    from dataclasses import replace

    return replace(config, N=N)


def _bnorm_sq(B: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.sum((x @ B.T) * x, axis=-1)


def _forcing_diff_l1(problem: ProblemInstance, perturbed: ProblemInstance,
                     grid: TimeGrid) -> float:
    f = cell_averages(problem, grid)
    f_hat = cell_averages(perturbed, grid)
    return grid.tau * float(np.sum(np.linalg.norm(f - f_hat, axis=1)))


def stability_lhs_i(traj: Trajectory, traj_hat: Trajectory,
                    problem: ProblemInstance) -> np.ndarray:
    """Per-step stability functional ||v-v_hat||_H^2 + (1/lam)||K-K_hat||_B^2
    + tau*sum ||K-K_hat||_B^2 evaluated at every t_n."""
    B = problem.B.matrix
    lam = problem.kernel.lam
    tau = traj.grid.tau
    dv = traj.v.values - traj_hat.v.values
    dK = traj.K.values - traj_hat.K.values
    dK_bsq = _bnorm_sq(B, dK)
    running = tau * np.cumsum(dK_bsq[1:])
    lhs = np.empty(traj.grid.N + 1)
    lhs[0] = np.sum(dv[0] ** 2) + dK_bsq[0] / lam
    lhs[1:] = np.sum(dv[1:] ** 2, axis=1) + dK_bsq[1:] / lam + running
    return lhs


def stability_check_i(
    problem: ProblemInstance,
    perturbed: ProblemInstance,
    config: StepperConfig | None = None,
    c_bound: float = 100.0,
) -> DiagnosticsReport:
    """Continuous dependence on (v0, u0, f) for a fixed operator pair.

    With identical data the functional must vanish (uniqueness); otherwise the
    sup over time of LHS/data must stay below the generic-constant ceiling
    ``c_bound``.
    """
    if problem.A is not perturbed.A or problem.B is not perturbed.B:
        raise ConfigurationError("stability experiments require identical operators")
    cfg = config or StepperConfig()
    traj = run(problem, cfg)
    traj_hat = run(perturbed, cfg)
    lhs = float(np.max(stability_lhs_i(traj, traj_hat, problem)))
    data = (
        float(np.sum((problem.v0 - perturbed.v0) ** 2))
        + _bnorm_sq(problem.B.matrix, problem.u0 - perturbed.u0)
        + _forcing_diff_l1(problem, perturbed, traj.grid) ** 2
    )
    report = DiagnosticsReport()
    if data == 0.0:
        scale = 1.0 + float(np.max(np.abs(traj.v.values)))
        report.add(ReportEntry(
            name="uniqueness_zero_difference", lhs=lhs, rhs=0.0,
            abs_tol=1e-14 * scale, tag="identical-data-uniqueness"))
    else:
        report.add(ReportEntry(
            name="stability_i_sup_ratio", lhs=lhs, rhs=c_bound * data,
            tag="data-perturbation-stability"))
    return report


def stability_check_ii(
    problem: ProblemInstance,
    perturbed: ProblemInstance,
    config: StepperConfig | None = None,
    mu: float | None = None,
    c_bound: float = 100.0,
) -> DiagnosticsReport:
    """Variant of the stability check for uniformly monotone A, adding
    mu * tau * sum ||v - v_hat||_VA^p to the functional and measuring the data
    difference in the dual exponent norm."""
    if problem.A is not perturbed.A or problem.B is not perturbed.B:
        raise ConfigurationError("stability experiments require identical operators")
    if mu is None:
        if not problem.A.uniformly_monotone:
            raise ConfigurationError(
                f"instance {problem.A.name!r} is not flagged uniformly monotone; "
                "pass mu explicitly for locally uniform cases"
            )
        mu = problem.A.mu_A
    cfg = config or StepperConfig()
    traj = run(problem, cfg)
    traj_hat = run(perturbed, cfg)
    p = problem.A.p
    tau = traj.grid.tau
    dv = traj.v.values - traj_hat.v.values
    extra = mu * tau * np.concatenate(
        [[0.0], np.cumsum([problem.A.va_norm(x) ** p for x in dv[1:]])]
    )
    lhs = float(np.max(stability_lhs_i(traj, traj_hat, problem) + extra))
    pp = p / (p - 1.0)
    f = cell_averages(problem, traj.grid)
    f_hat = cell_averages(perturbed, traj.grid)
    df_dual = (tau * float(np.sum(np.linalg.norm(f - f_hat, ord=pp, axis=1) ** pp))) ** (2.0 / pp)
    data = (
        float(np.sum((problem.v0 - perturbed.v0) ** 2))
        + _bnorm_sq(problem.B.matrix, problem.u0 - perturbed.u0)
        + df_dual
    )
    report = DiagnosticsReport()
    if data == 0.0:
        scale = 1.0 + float(np.max(np.abs(traj.v.values)))
        report.add(ReportEntry(
            name="uniqueness_zero_difference", lhs=lhs, rhs=0.0,
            abs_tol=1e-14 * scale, tag="identical-data-uniqueness"))
    else:
        report.add(ReportEntry(
            name="stability_ii_sup_ratio", lhs=lhs, rhs=c_bound * data,
            tag="data-perturbation-stability-uniform"))
    return report


def stability_ladder(
    make_perturbed: Callable[[float], ProblemInstance],
    problem: ProblemInstance,
    deltas: Sequence[float],
    config: StepperConfig | None = None,
    ratio_spread_bound: float = 2.0,
) -> DiagnosticsReport:
    """Run a delta ladder of data perturbations and check sup LHS / delta^2 is
    constant within ``ratio_spread_bound``."""
    cfg = config or StepperConfig()
    traj = run(problem, cfg)
    ratios = []
    report = DiagnosticsReport()
    for delta in deltas:
        traj_hat = run(make_perturbed(delta), cfg)
        lhs = float(np.max(stability_lhs_i(traj, traj_hat, problem)))
        ratios.append(lhs / delta**2)
        # quadratic decay in the perturbation size, generic-constant ceiling
        report.add(ReportEntry(
            name=f"stability_lhs_delta_{delta:g}", lhs=lhs, rhs=100.0 * delta**2,
            tag="data-perturbation-stability"))
    spread = max(ratios) / min(ratios)
    report.add(ReportEntry(
        name="stability_ratio_spread", lhs=spread, rhs=ratio_spread_bound,
        tag="data-perturbation-stability"))
    return report


def lambda_perturbation_check(
    problem: ProblemInstance,
    mu: float,
    config: StepperConfig | None = None,
    richardson: bool = True,
) -> DiagnosticsReport:
    """Explicit Lipschitz bound in the relaxation-rate parameter:

        ||v_lam(T) - v_mu(T)||_H^2 + int_0^T ||K_lam v_lam - K_mu v_mu||_B^2
            <= lam^2/2 * (1 + lam^2 T^2) * |1/lam - 1/mu|^2 * ||v_lam||^2_{L2(B)}.

    The bound holds for exact solutions; the discrete check adds a
    first-order Richardson slack estimated from an N vs 2N comparison.
    """
    if mu <= 0.0:
        raise ValueError(f"perturbed rate must be positive, got mu={mu}")
    cfg = config or StepperConfig()
    lam = problem.kernel.lam
    T = problem.kernel.T

    def both_sides(n_steps: int) -> tuple[float, float]:
        c = _with_N(cfg, n_steps)
        traj = run(problem, c)
        pert = ProblemInstance(
            A=problem.A, B=problem.B, u0=problem.u0, v0=problem.v0,
            forcing=problem.forcing, kernel=KernelSpec(lam=mu, T=T))
        traj_mu = run(pert, c)
        tau = traj.grid.tau
        B = problem.B.matrix
        dv_T = traj.v.values[-1] - traj_mu.v.values[-1]
        dK_bsq = _bnorm_sq(B, traj.K.values - traj_mu.K.values)
        lhs = float(np.sum(dv_T**2)) + tau * float(np.sum(dK_bsq[1:]))
        v_l2b = tau * float(np.sum(_bnorm_sq(B, traj.v.values[1:])))
        rhs = 0.5 * lam**2 * (1.0 + lam**2 * T**2) * (1.0 / lam - 1.0 / mu) ** 2 * v_l2b
        return lhs, rhs

    lhs, rhs = both_sides(cfg.N)
    report = DiagnosticsReport()
    if richardson:
        lhs2, _ = both_sides(2 * cfg.N)
        slack = 2.0 * abs(lhs - lhs2) + 1e-12
        report.add(ReportEntry(
            name=f"lambda_perturbation_mu_{mu:g}", lhs=lhs, rhs=rhs,
            abs_tol=slack, tag="relaxation-rate-lipschitz"))
    else:
        report.add(ReportEntry(
            name=f"lambda_perturbation_mu_{mu:g}_raw", lhs=lhs, rhs=rhs,
            tag="relaxation-rate-lipschitz"))
    return report


def apriori_lhs(traj: Trajectory, problem: ProblemInstance) -> float:
    """Discrete energy functional at the final step."""
    tau = traj.grid.tau
    lam = problem.kernel.lam
    T = traj.grid.T
    v = traj.v.values
    jumps = float(np.sum(np.linalg.norm(np.diff(v, axis=0), axis=1) ** 2))
    va_sum = tau * float(np.sum([problem.A.va_norm(x) ** problem.A.p for x in v[1:]]))
    k_term = T / math.expm1(lam * T) * _bnorm_sq(problem.B.matrix, traj.K.values[-1])
    return float(np.sum(v[-1] ** 2)) + jumps + problem.A.mu_A * va_sum + float(k_term)


def apriori_data(problem: ProblemInstance, grid: TimeGrid) -> float:
    """Data functional 1 + ||u0||_B^2 + ||v0||_H^2 + (tau sum ||f^n||_H)^2;
    the data split is taken as f_0 = 0, f_1 = f."""
    f = cell_averages(problem, grid)
    f_l1 = grid.tau * float(np.sum(np.linalg.norm(f, axis=1)))
    return (
        1.0
        + float(_bnorm_sq(problem.B.matrix, problem.u0))
        + float(np.sum(problem.v0**2))
        + f_l1**2
    )


def apriori_report(
    traj: Trajectory, problem: ProblemInstance, c_bound: float = 100.0
) -> DiagnosticsReport:
    lhs = apriori_lhs(traj, problem)
    data = apriori_data(problem, traj.grid)
    report = DiagnosticsReport()
    report.add(ReportEntry(
        name="apriori_energy_bound", lhs=lhs, rhs=c_bound * data,
        tag="discrete-energy-estimate"))
    return report
