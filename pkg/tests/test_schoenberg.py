import math

import numpy as np
import pytest

from carnot_heat import (
    FitFailureError,
    InvalidDimensionError,
    KernelProfile,
    build_counterexample,
    build_counterexample_grid,
    check_dominance_under_heat_flow,
    fit_measure,
    heisenberg_center_slice,
    mass_near_zero_ratio,
    reconstruct_kernel_slice,
    sample_kernel,
)
from carnot_heat.schoenberg import default_tau_grid, default_u_grid


@pytest.fixture(scope="module")
def measure_x0():
    return fit_measure(0.0, 1)


def test_default_grids_shape():
    tau = default_tau_grid()
    u = default_u_grid()
    assert tau[0] > 0 and np.all(np.diff(tau) > 0)
    assert u[0] == 0.0 and np.all(np.diff(u) > 0)


def test_fit_quality_at_origin(measure_x0):
    mu = measure_x0
    peak = KernelProfile(0.0, 1).at_zero()
    assert mu.fit_residual <= 1e-12
    assert mu.diagnostics["kkt"] <= 1e-10
    assert mu.diagnostics["active_atoms"] >= 10
    assert np.all(mu.weights >= 0.0)
    # total mass equals the profile value at zero frequency
    assert abs(mu.mass() - peak) <= 1e-13 * peak
    want = 1.0 / (32.0 * math.pi)
    assert abs(mu.first_inverse_moment() - want) <= 1e-12 * want


def test_mixture_matches_profile(measure_x0):
    prof = KernelProfile(0.0, 1)
    u = np.linspace(0.0, 5.0, 57)
    got = measure_x0.mixture(u)
    want = prof(u)
    assert np.max(np.abs(got - want)) <= 1e-10 * want[0]


def test_reconstruction_matches_center_slice(measure_x0):
    z = np.array([0.0, 0.5, 1.0, 2.0, 3.0])
    rec = reconstruct_kernel_slice(measure_x0, 1, z)
    want = np.array([heisenberg_center_slice(1.0, zz) for zz in z])
    assert np.max(np.abs(rec - want) / want) <= 1e-11


def test_off_axis_fit_inverse_moment(structure11, evaluator11):
    from carnot_heat import GroupPoint, eval_kernel
    mu = fit_measure(1.0, 1)
    want = complex(eval_kernel(structure11, 1.0,
                               GroupPoint(np.array([1.0, 0.0]),
                                          np.zeros(1)),
                               evaluator=evaluator11)).real
    assert abs(mu.first_inverse_moment() - want) <= 1e-8 * want


def test_single_atom_recovery():
    u = np.linspace(0.0, 6.0, 480)
    tau = np.concatenate([np.geomspace(0.2, 0.9, 12), [1.0],
                          np.geomspace(1.1, 5.0, 12)])
    mu = fit_measure(0.0, 1, tau_grid=tau, u_grid=u,
                     profile=lambda uu: np.exp(-np.pi * uu * uu))
    k = int(np.argmin(np.abs(mu.tau - 1.0)))
    assert abs(mu.weights[k] - 1.0) <= 1e-10
    assert np.max(np.delete(mu.weights, k)) <= 1e-12


def test_two_atom_recovery():
    u = np.linspace(0.0, 6.0, 480)
    tau = np.array([0.5, 0.8, 1.0, 1.3, 1.7, 2.0, 2.6, 3.5])

    def profile(uu):
        return 0.5 * np.exp(-np.pi * uu * uu) \
            + 0.5 * np.exp(-4.0 * np.pi * uu * uu)

    mu = fit_measure(0.0, 1, tau_grid=tau, u_grid=u, profile=profile)
    for target in (1.0, 2.0):
        k = int(np.argmin(np.abs(mu.tau - target)))
        assert abs(mu.weights[k] - 0.5) <= 1e-10
    others = [w for t, w in zip(mu.tau, mu.weights)
              if abs(t - 1.0) > 1e-9 and abs(t - 2.0) > 1e-9]
    assert max(others) <= 1e-12


def test_fit_guards():
    with pytest.raises(InvalidDimensionError):
        fit_measure(0.0, 1, tau_grid=np.array([1.0]))
    with pytest.raises(InvalidDimensionError):
        fit_measure(0.0, 1, tau_grid=np.array([2.0, 1.0, 3.0]))
    with pytest.raises(FitFailureError):
        fit_measure(0.0, 1, tau_grid=np.array([5.0, 7.0]))


def test_restricted_measure(measure_x0):
    mu = measure_x0
    low = mu.restricted(0.0, 1.0)
    # atoms keep their grid, weights outside the window go to zero
    assert np.array_equal(low.tau, mu.tau)
    assert np.all(low.weights[mu.tau > 1.0] == 0.0)
    inside = mu.tau <= 1.0
    assert np.array_equal(low.weights[inside], mu.weights[inside])
    assert low.mass() < mu.mass()
    assert low.diagnostics["restricted"] is True
    full = mu.restricted(0.0, np.inf)
    assert abs(full.mass() - mu.mass()) <= 1e-15 * mu.mass()


def test_counterexample_tail_ratio_decreasing(measure_x0):
    ce = build_counterexample(measure_x0, 1.0, 1)
    assert not ce.warning
    ratios = [float(ce(z)) / heisenberg_center_slice(1.0, z)
              for z in (2.0, 4.0, 6.0, 8.0)]
    assert all(r > 0 for r in ratios)
    assert all(a > b for a, b in zip(ratios, ratios[1:]))
    # small-scale atoms only: Gaussian tail against the kernel's
    # exponential tail
    assert ratios[0] <= 1e-3
    assert ratios[-1] <= 1e-50


def test_counterexample_degenerate_cutoffs(measure_x0):
    empty = build_counterexample(measure_x0, 0.0, 1)
    assert "identically zero" in empty.warning
    assert float(empty(1.0)) == 0.0
    everything = build_counterexample(measure_x0, 1e9, 1)
    assert "full kernel slice" in everything.warning
    want = heisenberg_center_slice(1.0, 1.0)
    assert abs(float(everything(1.0)) - want) <= 1e-10 * want


def test_mass_near_zero_cutoffs():
    rep0 = mass_near_zero_ratio(0.0, 1, a=0.6)
    rep1 = mass_near_zero_ratio(1.0, 1, a=0.6)
    assert rep0["ratio"] >= 10.0
    assert rep1["ratio"] >= 10.0
    assert rep0["restricted_residual"] > rep0["unrestricted_residual"]
    # a cutoff below the smallest active atom is uninformative
    tight = mass_near_zero_ratio(0.0, 1, a=0.2)
    assert tight["ratio"] > 0.0


def test_dominance_control_kernel(structure11, evaluator11):
    # the kernel itself flows to ratio 1; doubling it must fail
    f = sample_kernel(structure11, 1.0, (33, 33, 81), (0.5, 0.5, 0.2),
                      evaluator=evaluator11)
    rep = check_dominance_under_heat_flow(f, [0.5], tolerance=1e-2,
                                          denom_floor=1e-4,
                                          evaluator=evaluator11)
    assert abs(rep[0.5]["max_ratio"] - 1.0) <= 1e-2
    assert abs(rep[0.5]["min_ratio"] - 1.0) <= 1e-2
    assert rep[0.5]["nodes_used"] > 0
    doubled = f.with_values(2.0 * f.values)
    with pytest.raises(FitFailureError):
        check_dominance_under_heat_flow(doubled, [0.5], tolerance=1e-2,
                                        denom_floor=1e-4,
                                        evaluator=evaluator11)


def test_counterexample_grid_dominated(structure11, evaluator11):
    f = build_counterexample_grid(structure11, (33, 33, 33),
                                  (0.5, 0.5, 0.25), cutoff=1.0)
    assert f.metadata["fits"] > 0
    p1 = sample_kernel(structure11, 1.0, f.counts, f.spacings,
                       origins=f.origins, evaluator=evaluator11)
    diff = f.values.real - p1.values.real
    assert np.max(diff) <= 1e-9 * np.max(p1.values.real)
    assert np.min(f.values.real) >= 0.0
    assert f.values.real[16, 16, 16] > 0.0
    rep = check_dominance_under_heat_flow(f, [0.5], evaluator=evaluator11)
    assert rep[0.5]["max_ratio"] <= 0.9
