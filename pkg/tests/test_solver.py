import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from lti.phantom import make_circle, make_random_ellipses
from lti.shearlet import build_system
from lti.solver import (
    AdmmParams,
    CgReport,
    GradientAnalysis,
    PRESET_NAMES,
    ShearletAnalysis,
    admm_solve,
    cg_solve,
    expand_weights,
    objective,
    preset_params,
    soft_threshold,
)
from lti.tomo import (
    NoiseSpec,
    default_geometry,
    fbp,
    radon_forward,
    simulate_measurements,
)

PHI_50 = math.radians(50.0)


@pytest.fixture(scope="module")
def problem32():
    geometry = default_geometry(32, PHI_50, n_angles=51)
    disk = make_circle(32, 0.30, 1.0)
    y = radon_forward(disk, geometry)
    L = ShearletAnalysis(build_system(32, (0,)))
    return geometry, disk, y, L


# ---------------------------------------------------------------- thresholds


def test_soft_threshold_values():
    assert soft_threshold(np.array(3.0), 1.0) == 2.0
    assert soft_threshold(np.array(-0.5), 1.0) == 0.0
    assert soft_threshold(np.array(0.0), 5.0) == 0.0
    assert soft_threshold(np.array(-3.0), 1.0) == -2.0


def test_soft_threshold_rejects_negative():
    with pytest.raises(ValueError):
        soft_threshold(np.ones(3), -0.1)


@settings(max_examples=50, deadline=None)
@given(
    a=hnp.arrays(np.float64, 16, elements=st.floats(-50, 50)),
    b=st.floats(0, 10),
)
def test_soft_threshold_properties(a, b):
    out = soft_threshold(a, b)
    assert np.allclose(np.abs(out), np.maximum(np.abs(a) - b, 0.0))
    assert np.all(out * a >= 0)  # never flips sign


# ------------------------------------------------------------------- params


def test_params_validation():
    with pytest.raises(ValueError):
        AdmmParams(0.0, 0.1, (1.0,))
    with pytest.raises(ValueError):
        AdmmParams(0.1, 0.1, (-1.0,))
    with pytest.raises(ValueError):
        AdmmParams(0.1, 0.1, (1.0,), outer_iterations=0)


def test_preset_weight_rules():
    p = preset_params("ellipses50", 3)
    assert p.rho0 == 0.02 and p.rho1 == 0.1 and p.rho2 == 1.0
    assert p.scale_weights == (3 / 400, 9 / 400, 27 / 400)
    assert preset_params("mayo60", 2).scale_weights == (2 / 400, 4 / 400)
    assert preset_params("mayo75", 2).scale_weights == (2 / 72, 4 / 72)
    assert preset_params("lotus60", 1).scale_weights == (2 / 40,)
    assert set(PRESET_NAMES) == {"ellipses50", "mayo60", "mayo75", "lotus60"}
    with pytest.raises(ValueError):
        preset_params("shepp", 3)


def test_expand_weights_slabs():
    system = build_system(64)  # levels (0, 1)
    w = expand_weights((0.25, 0.5), system, lowpass_weight=0.125)
    assert w[0] == 0.125
    for pos, band in enumerate(system.index):
        if not band.is_lowpass:
            assert w[pos] == (0.25, 0.5)[band.scale]
    uniform = expand_weights((1.0, 1.0), system, lowpass_weight=1.0)
    assert np.array_equal(uniform, np.ones(system.n_subbands))
    with pytest.raises(ValueError):
        expand_weights((1.0,), system)


# ----------------------------------------------------------------------- cg


def test_cg_identity_operator():
    rhs = np.arange(12.0).reshape(3, 4)
    x, report = cg_solve(lambda v: v, rhs, tol=1e-12)
    assert np.allclose(x, rhs, rtol=0, atol=1e-12)
    assert report.iterations <= 2 and not report.failed


def test_cg_diagonal_operator():
    d = np.array([1.0, 2.0, 4.0, 8.0])
    rhs = np.array([3.0, 3.0, 3.0, 3.0])
    x, report = cg_solve(lambda v: d * v, rhs, tol=1e-12, max_iter=50)
    assert np.allclose(x, rhs / d, atol=1e-10)
    assert not report.failed


def test_cg_matches_dense_solve():
    rng = np.random.default_rng(0)
    m = rng.standard_normal((16, 16))
    spd = m @ m.T + 16 * np.eye(16)
    rhs = rng.standard_normal(16)
    tol = 1e-8
    x, report = cg_solve(lambda v: spd @ v, rhs, tol=tol, max_iter=200)
    direct = np.linalg.solve(spd, rhs)
    assert np.linalg.norm(x - direct) <= 10 * tol * np.linalg.norm(direct)
    assert not report.failed


def test_cg_zero_rhs():
    x, report = cg_solve(lambda v: 2 * v, np.zeros(5))
    assert not x.any() and report.iterations == 0


def test_cg_reports_breakdown():
    rhs = np.ones(4)
    x, report = cg_solve(lambda v: np.full_like(v, np.nan), rhs, max_iter=10)
    assert report.failed
    assert x.shape == rhs.shape and np.all(np.isfinite(x))


def test_cg_warm_start_speeds_convergence():
    rng = np.random.default_rng(1)
    m = rng.standard_normal((16, 16))
    spd = m @ m.T + 16 * np.eye(16)
    rhs = rng.standard_normal(16)
    solution = np.linalg.solve(spd, rhs)
    _, cold = cg_solve(lambda v: spd @ v, rhs, tol=1e-10, max_iter=100)
    _, warm = cg_solve(
        lambda v: spd @ v, rhs, warm_start=solution + 1e-9, tol=1e-10, max_iter=100
    )
    assert warm.iterations < cold.iterations


# ------------------------------------------------------------------ objective


def test_objective_trivials(problem32):
    geometry, _, y, L = problem32
    params = preset_params("ellipses50", 1)
    zero = np.zeros((32, 32))
    assert objective(zero, np.zeros_like(y), geometry, L, params) == 0.0
    assert objective(zero, y, geometry, L, params) == pytest.approx(
        0.5 * float(np.sum(y**2))
    )
    negative = zero.copy()
    negative[3, 3] = -1.0
    assert objective(negative, y, geometry, L, params) == math.inf


# ----------------------------------------------------------------------- admm


def test_admm_zero_measurement(problem32):
    geometry, _, _, L = problem32
    y = np.zeros((geometry.n_angles, geometry.n_det))
    image, state = admm_solve(y, geometry, L, preset_params("ellipses50", 1))
    assert not image.any()
    assert state.objective_history[-1] == 0.0


def test_admm_output_nonnegative(problem32):
    geometry, _, y, L = problem32
    image, state = admm_solve(y, geometry, L, preset_params("ellipses50", 1))
    assert image.min() >= 0.0
    assert len(state.objective_history) == 50
    assert np.array_equal(image, np.maximum(state.f, 0.0))


def test_admm_beats_fbp_on_disk(problem32):
    geometry, disk, y, L = problem32
    image, _ = admm_solve(y, geometry, L, preset_params("ellipses50", 1))
    re_admm = np.linalg.norm(image - disk) / np.linalg.norm(disk)
    re_fbp = np.linalg.norm(
        np.maximum(fbp(y, geometry, 32), 0.0) - disk
    ) / np.linalg.norm(disk)
    assert re_admm < 0.15
    assert re_admm < re_fbp


def test_admm_beats_fbp_on_every_random_phantom(problem32):
    geometry, _, _, L = problem32
    params = preset_params("ellipses50", 1)
    rng = np.random.default_rng(11)
    for i in range(3):
        phantom, _ = make_random_ellipses(32, rng)
        y = simulate_measurements(
            phantom, geometry, NoiseSpec(0.01, seed=100 + i), oversample=2
        )
        image, _ = admm_solve(y, geometry, L, params)
        re_admm = np.linalg.norm(image - phantom) / np.linalg.norm(phantom)
        re_fbp = np.linalg.norm(
            np.maximum(fbp(y, geometry, 32), 0.0) - phantom
        ) / np.linalg.norm(phantom)
        assert re_admm < re_fbp


def test_admm_primal_residual_settles(problem32):
    geometry, _, y, L = problem32
    params = preset_params("ellipses50", 1, outer_iterations=200)
    _, state = admm_solve(y, geometry, L, params)
    ratio = state.primal_residual_history[-1] / np.linalg.norm(state.f)
    assert ratio < 1e-3


def test_admm_f_update_matches_dense_solve():
    # One outer iteration from the standard start (z = u = 0) with the inner
    # system solved tightly must equal the explicit normal-equations solve
    # (rho0 R^T R + (rho1 + rho2) I) f = rho0 R^T y  on a grid small enough
    # to form densely.
    from lti.tomo import system_matrix

    geometry = default_geometry(16, PHI_50, n_angles=51)
    disk = make_circle(16, 0.3, 1.0)
    y = radon_forward(disk, geometry)
    L = ShearletAnalysis(build_system(16, (0,)))
    params = preset_params(
        "ellipses50", 1, outer_iterations=1, cg_tol=1e-12, cg_max_iter=800
    )
    _, state = admm_solve(y, geometry, L, params)
    a = system_matrix(16, geometry).toarray()
    m = params.rho0 * (a.T @ a) + (params.rho1 + params.rho2) * np.eye(256)
    dense = np.linalg.solve(m, params.rho0 * (a.T @ y.ravel())).reshape(16, 16)
    assert np.linalg.norm(state.f - dense) <= 1e-6 * np.linalg.norm(dense)


def test_admm_scaling_consistency(problem32):
    # Jointly scaling the measurement and the weights scales the minimizer.
    geometry, _, y, L = problem32
    params = preset_params("ellipses50", 1)
    base, _ = admm_solve(y, geometry, L, params)
    c = 3.7
    scaled_params = AdmmParams(
        params.rho0, params.rho1, tuple(c * w for w in params.scale_weights)
    )
    scaled, _ = admm_solve(c * y, geometry, L, scaled_params)
    gap = np.linalg.norm(scaled - c * base) / np.linalg.norm(c * base)
    assert gap <= 1e-3


# ------------------------------------------------------------------------ tv


def test_gradient_operator_adjoint():
    rng = np.random.default_rng(2)
    L = GradientAnalysis(24)
    f = rng.standard_normal((24, 24))
    g = rng.standard_normal((24, 24, 2))
    gap = abs(np.vdot(L.forward(f), g) - np.vdot(f, L.adjoint(g)))
    assert gap <= 1e-10 * np.linalg.norm(L.forward(f)) * np.linalg.norm(g)
    assert np.allclose(L.gram(f), L.adjoint(L.forward(f)))


def test_gradient_weights_single_scale():
    L = GradientAnalysis(8)
    w = L.coefficient_weights(AdmmParams(1.0, 1.0, (0.25,)))
    assert w.shape == (1, 1, 2) and np.all(w == 0.25)
    with pytest.raises(ValueError):
        L.coefficient_weights(AdmmParams(1.0, 1.0, (0.25, 0.5)))


def test_tv_variant_reconstructs_disk(problem32):
    geometry, disk, y, _ = problem32
    image, _ = admm_solve(
        y, geometry, GradientAnalysis(32), AdmmParams(1.0, 1.0, (0.02,))
    )
    re_tv = np.linalg.norm(image - disk) / np.linalg.norm(disk)
    assert re_tv < 0.15
