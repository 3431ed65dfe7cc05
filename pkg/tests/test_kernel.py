import math

import numpy as np
import pytest

from memstep.kernel import (
    KernelSpec,
    QuadWeights,
    TimeGrid,
    kernel_eval,
    weights_closed_form,
    weights_l1_sum,
    weights_numeric,
)


def test_kernel_eval_at_zero_is_rate():
    assert kernel_eval(KernelSpec(lam=1.0, T=1.0), 0.0) == 1.0
    assert kernel_eval(KernelSpec(lam=2.0, T=1.0), 0.0) == 2.0


def test_kernel_eval_closed_form():
    assert kernel_eval(KernelSpec(lam=1.0, T=2.0), 1.0) == pytest.approx(
        0.3678794411714423, rel=1e-15)


def test_kernel_eval_rejects_negative_argument():
    with pytest.raises(ValueError):
        kernel_eval(KernelSpec(lam=1.0, T=1.0), -0.1)


@pytest.mark.parametrize("lam,T", [(-1.0, 1.0), (0.0, 1.0), (1.0, 0.0), (1.0, -2.0)])
def test_kernel_spec_rejects_nonpositive_parameters(lam, T):
    with pytest.raises(ValueError):
        KernelSpec(lam=lam, T=T)


def test_grid_rejects_zero_steps():
    with pytest.raises(ValueError):
        TimeGrid(N=0, T=1.0)


def test_weights_rejects_nonpositive():
    with pytest.raises(ValueError):
        QuadWeights(gamma=np.array([1.0, -0.1]))


def test_closed_form_first_weight():
    spec, grid = KernelSpec(lam=1.0, T=1.0), TimeGrid(N=10, T=1.0)
    w = weights_closed_form(spec, grid)
    assert w.gamma_i(1) == pytest.approx((1 - math.exp(-0.1)) / 0.1, rel=1e-12)
    assert w.gamma_i(1) == pytest.approx(0.9516258196, rel=1e-9)


def test_first_weight_tends_to_rate_as_tau_vanishes():
    lam = 3.7
    prev_gap = None
    for N in [10, 100, 1000, 10_000, 100_000]:
        w = weights_closed_form(KernelSpec(lam=lam, T=1.0), TimeGrid(N=N, T=1.0))
        gap = abs(w.gamma_i(1) - lam)
        if prev_gap is not None:
            assert gap < prev_gap / 5
        prev_gap = gap
    assert gap < 1e-4


def test_tiny_rate_times_tau_is_cancellation_free():
    # lam*tau = 1e-12; naive (exp(x)-1)/tau would lose most digits
    w = weights_closed_form(KernelSpec(lam=1e-12, T=1.0), TimeGrid(N=1, T=1.0))
    assert w.gamma_i(1) == pytest.approx(1e-12, rel=1e-12)


@pytest.mark.parametrize("lam,T,N", [(0.5, 1.0, 10), (1.0, 4.0, 100), (5.0, 2.0, 37)])
def test_weight_ratio_and_difference_recurrence(lam, T, N):
    spec, grid = KernelSpec(lam=lam, T=T), TimeGrid(N=N, T=T)
    g = weights_closed_form(spec, grid).gamma
    tau = grid.tau
    assert np.all(g > 0)
    assert np.all(np.diff(g) < 0)
    np.testing.assert_allclose(g[1:] / g[:-1], math.exp(-lam * tau), rtol=1e-12)
    np.testing.assert_allclose(
        g[1:] - g[:-1], -(math.exp(lam * tau) - 1.0) * g[1:], rtol=1e-12)


@pytest.mark.parametrize("lam,T,N", [(0.5, 1.0, 10), (1.0, 4.0, 64), (5.0, 0.5, 13)])
def test_weight_sum_telescopes_to_kernel_l1_norm(lam, T, N):
    spec, grid = KernelSpec(lam=lam, T=T), TimeGrid(N=N, T=T)
    w = weights_closed_form(spec, grid)
    assert weights_l1_sum(spec, grid, w) == pytest.approx(
        -math.expm1(-lam * T), rel=1e-12)


def test_numeric_weights_match_closed_form():
    spec, grid = KernelSpec(lam=1.0, T=1.0), TimeGrid(N=10, T=1.0)
    g = weights_closed_form(spec, grid).gamma
    gn = weights_numeric(spec, grid, panels=1 << 15).gamma
    np.testing.assert_allclose(gn, g, rtol=1e-12)


def test_numeric_weights_single_step():
    spec, grid = KernelSpec(lam=2.0, T=1.5), TimeGrid(N=1, T=1.5)
    gn = weights_numeric(spec, grid, panels=1 << 12).gamma
    assert gn[0] == pytest.approx(-math.expm1(-2.0 * 1.5) / 1.5, rel=1e-12)


def test_numeric_weights_reject_bad_panels():
    with pytest.raises(ValueError):
        weights_numeric(KernelSpec(lam=1.0, T=1.0), TimeGrid(N=2, T=1.0), panels=0)


def test_numeric_weights_fourth_order_in_panels():
    spec, grid = KernelSpec(lam=4.0, T=1.0), TimeGrid(N=4, T=1.0)
    g = weights_closed_form(spec, grid).gamma
    errs = [np.max(np.abs(weights_numeric(spec, grid, panels=p).gamma - g))
            for p in (4, 8, 16, 32)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 3.7)
