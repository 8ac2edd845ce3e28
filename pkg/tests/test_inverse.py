from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracinv.errors import DivergenceError, DomainError
from fracinv.grids import Grid2D, TimeGrid, l2_norm, spacetime_norm
from fracinv.inverse import (
    ForwardModel,
    ReconstructionConfig,
    StopReason,
    add_noise,
    gradient,
    invisible_source,
    make_rng,
    objective,
    optimality_residual,
    reconstruct,
    relative_error,
    synthetic_data,
)
from fracinv.operator import EllipticOperatorSpec, assemble
from fracinv.verify import smooth_bump

from conftest import gaussian


def plane(x, y):
    return x + y + 1.0


@pytest.fixture(scope="module")
def setup(frame_mask):
    grid = Grid2D(17, 17)
    tg = TimeGrid(1.0, 64)
    op = assemble(grid, EllipticOperatorSpec())
    sigma = tg.sample(gaussian)
    g_true = grid.sample(plane)
    model = ForwardModel(op, 1.2, tg, sigma, frame_mask)
    cfg = ReconstructionConfig(region_mask=frame_mask)
    return grid, tg, op, sigma, g_true, model, cfg


# --- noise ----------------------------------------------------------------------


def test_noise_zero_delta_is_identity():
    u = np.random.default_rng(0).standard_normal((5, 7))
    out = add_noise(u, 0.0, seed=3)
    assert np.array_equal(out, u) and out is not u


@given(delta=st.floats(0.0, 0.5), seed=st.integers(0, 2**32 - 1))
def test_noise_bounded_relative_deviation(delta, seed):
    u = np.linspace(-3, 3, 200).reshape(20, 10)
    out = add_noise(u, delta, seed)
    nz = u != 0
    assert np.all(np.abs(out[nz] / u[nz] - 1.0) <= delta + 4 * np.finfo(float).eps)
    assert np.all(out[~nz] == 0)


def test_noise_is_deterministic_per_seed():
    u = np.ones((30, 40))
    assert np.array_equal(add_noise(u, 0.02, 7), add_noise(u, 0.02, 7))
    assert not np.array_equal(add_noise(u, 0.02, 7), add_noise(u, 0.02, 8))


def test_noise_uses_full_uniform_range():
    draws = add_noise(np.ones(100000), 1.0, 1) - 1.0
    assert draws.min() < -0.99 and draws.max() > 0.99
    assert abs(draws.mean()) < 0.01


def test_noise_rejects_negative_delta():
    with pytest.raises(DomainError):
        add_noise(np.ones(3), -0.1, 0)


def test_rng_streams_are_independent():
    a = make_rng(5, 0).uniform(size=4)
    b = make_rng(5, 1).uniform(size=4)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, make_rng(5, 0).uniform(size=4))


# --- config -----------------------------------------------------------------------


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(tikhonov_weight=0.0),
        dict(relax=-1.0),
        dict(stop_eps=0.0),
        dict(stop_eps=1.0),
        dict(max_iter=0),
        dict(noise_delta=-0.01),
        dict(adjoint_scheme="other"),
        dict(region_mask=np.zeros(4, dtype=bool)),
    ],
)
def test_reconstruction_config_invariants(kwargs):
    with pytest.raises(DomainError):
        ReconstructionConfig(**kwargs)


# --- objective and gradient ---------------------------------------------------------


def test_objective_at_truth_is_regularization_only(setup):
    grid, tg, op, sigma, g_true, model, cfg = setup
    u = model.forward(g_true)
    phi = objective(g_true, u, sigma, cfg, model)
    assert phi == pytest.approx(cfg.tikhonov_weight * l2_norm(grid, g_true) ** 2, rel=1e-12)


def test_objective_at_zero_is_data_norm(setup, frame_mask):
    grid, tg, op, sigma, g_true, model, cfg = setup
    u = add_noise(model.forward(g_true), 0.05, 1)
    phi = objective(np.zeros(grid.size), u, sigma, cfg, model)
    assert phi == pytest.approx(spacetime_norm(grid, tg, u, frame_mask) ** 2, rel=1e-12)


def test_gradient_at_truth_is_twice_regularized_truth(setup):
    grid, tg, op, sigma, g_true, model, cfg = setup
    u = model.forward(g_true)
    grad = gradient(g_true, u, sigma, cfg, model)
    ref = 2 * cfg.tikhonov_weight * g_true
    assert l2_norm(grid, grad - ref) <= 1e-6 * l2_norm(grid, ref)


@pytest.mark.parametrize("alpha", [0.5, 1.2, 1.8])
def test_gradient_matches_central_differences(alpha, frame_mask):
    grid = Grid2D(17, 17)
    tg = TimeGrid(1.0, 64)
    op = assemble(grid, EllipticOperatorSpec())
    sigma = tg.sample(gaussian)
    model = ForwardModel(op, alpha, tg, sigma, frame_mask)
    cfg = ReconstructionConfig(region_mask=frame_mask)
    u_delta = add_noise(model.forward(grid.sample(plane)), 0.02, 0)
    rng = np.random.default_rng(9)
    for _ in range(5):
        g = 2.0 + rng.standard_normal(grid.size)
        d = rng.standard_normal(grid.size)
        eps = 1e-5
        fd = (objective(g + eps * d, u_delta, sigma, cfg, model) - objective(g - eps * d, u_delta, sigma, cfg, model)) / (2 * eps)
        an = float(np.sum(grid.weights * gradient(g, u_delta, sigma, cfg, model) * d))
        assert fd == pytest.approx(an, rel=1e-4)


def test_gradient_is_affine_in_data(setup):
    grid, tg, op, sigma, g_true, model, cfg = setup
    u1 = add_noise(model.forward(g_true), 0.05, 1)
    u2 = add_noise(model.forward(g_true), 0.05, 2)
    rng = np.random.default_rng(0)
    diffs = [
        gradient(g, u1, sigma, cfg, model) - gradient(g, u2, sigma, cfg, model)
        for g in (rng.standard_normal(grid.size), 5 * rng.standard_normal(grid.size))
    ]
    assert l2_norm(grid, diffs[0] - diffs[1]) <= 1e-10 * l2_norm(grid, diffs[0])


def test_mismatched_context_is_rejected(setup):
    grid, tg, op, sigma, g_true, model, cfg = setup
    u = model.forward(g_true)
    with pytest.raises(DomainError):
        objective(g_true, u, 2 * sigma, cfg, model)
    with pytest.raises(DomainError):
        gradient(g_true, u, sigma, ReconstructionConfig(region_mask=np.ones(grid.size, dtype=bool)), model)


def test_forward_model_rejects_bad_inputs(setup):
    grid, tg, op, sigma, g_true, model, cfg = setup
    with pytest.raises(DomainError):
        ForwardModel(op, 1.2, tg, sigma[:-1])
    with pytest.raises(DomainError):
        ForwardModel(op, 1.2, tg, sigma, np.zeros(grid.size, dtype=bool))


# --- relative error -----------------------------------------------------------------


def test_relative_error_examples(small_grid):
    g = small_grid.sample(plane)
    assert relative_error(small_grid, g, g) == 0.0
    assert relative_error(small_grid, np.zeros_like(g), g) == pytest.approx(1.0)
    assert relative_error(small_grid, 2 * g, g) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        relative_error(small_grid, g, np.zeros_like(g))


# --- iteration ----------------------------------------------------------------------


def test_zero_sigma_shrinks_geometrically_and_stops_at_once(setup, frame_mask):
    grid, tg, op, sigma, g_true, model, cfg = setup
    zero_model = ForwardModel(op, 1.2, tg, np.zeros(tg.nt + 1), frame_mask)
    u = np.zeros((tg.nt + 1, grid.size))
    g0 = np.full(grid.size, 2.0)
    # the step is rho/(M+rho) |g_k| = 2.5e-6 |g_k| < eps, so one iteration suffices
    rep = reconstruct(u, None, g0, cfg, zero_model)
    assert rep.iterations == 1 and rep.stop_reason is StopReason.CONVERGED
    np.testing.assert_allclose(rep.g_final, g0 * 4 / (4 + 1e-5), rtol=1e-14)


def test_zero_sigma_never_converges_when_shrink_exceeds_eps(setup, frame_mask):
    grid, tg, op, sigma, g_true, model, cfg = setup
    zero_model = ForwardModel(op, 1.2, tg, np.zeros(tg.nt + 1), frame_mask)
    rcfg = ReconstructionConfig(tikhonov_weight=0.1, relax=1.0, stop_eps=0.05, max_iter=12, region_mask=frame_mask)
    g0 = np.full(grid.size, 2.0)
    rep = reconstruct(np.zeros((tg.nt + 1, grid.size)), None, g0, rcfg, zero_model)
    assert rep.iterations == 12 and rep.stop_reason is StopReason.MAX_ITER
    np.testing.assert_allclose(rep.g_final, g0 * (1 / 1.1) ** 12, rtol=1e-12)
    # objective is rho |g_k|^2 and shrinks by the same factor squared
    hist = np.array(rep.objective_history)
    np.testing.assert_allclose(hist[1:] / hist[:-1], (1 / 1.1) ** 2, rtol=1e-12)


def test_reconstruction_is_bit_reproducible(setup, frame_mask):
    grid, tg, op, sigma, g_true, model, cfg = setup
    u = add_noise(model.forward(g_true), 0.02, 4)
    g0 = np.full(grid.size, 2.0)
    short = ReconstructionConfig(max_iter=15, region_mask=frame_mask)
    a = reconstruct(u, sigma, g0, short, model, g_true)
    b = reconstruct(u, sigma, g0, short, model, g_true)
    assert np.array_equal(a.g_final, b.g_final)
    assert a.objective_history == b.objective_history


def test_objective_decreases_after_warm_up(setup, frame_mask):
    grid, tg, op, sigma, g_true, model, cfg = setup
    u = add_noise(model.forward(g_true), 0.02, 0)
    rep = reconstruct(u, sigma, np.full(grid.size, 2.0), ReconstructionConfig(max_iter=60, region_mask=frame_mask), model, g_true)
    hist = np.array(rep.objective_history)
    assert np.all(np.diff(hist[5:]) <= 1e-12 * hist[0]), hist


def test_fixed_point_satisfies_optimality(setup, frame_mask):
    grid, tg, op, sigma, g_true, model, cfg = setup
    u = add_noise(model.forward(g_true), 0.02, 0)
    rcfg = ReconstructionConfig(stop_eps=1e-4, max_iter=3000, region_mask=frame_mask)
    rep = reconstruct(u, sigma, np.full(grid.size, 2.0), rcfg, model, g_true)
    assert rep.stop_reason is StopReason.CONVERGED
    res = optimality_residual(rep.g_final, u, rcfg, model)
    bound = rcfg.stop_eps * l2_norm(grid, rep.g_final) * (rcfg.relax + rcfg.tikhonov_weight)
    assert res <= bound


def test_callback_sees_every_iteration(setup, frame_mask):
    grid, tg, op, sigma, g_true, model, cfg = setup
    seen = []
    rep = reconstruct(
        model.forward(g_true), sigma, np.full(grid.size, 2.0), ReconstructionConfig(max_iter=4, region_mask=frame_mask), model,
        callback=lambda k, g, phi: seen.append((k, phi)),
    )
    assert [k for k, _ in seen] == [0, 1, 2, 3]
    assert [phi for _, phi in seen] == rep.objective_history
    assert rep.res is None


def test_divergence_is_reported_with_history(setup, frame_mask):
    grid, tg, op, sigma, g_true, model, cfg = setup
    # a tiny relaxation constant overshoots wildly
    rcfg = ReconstructionConfig(relax=1e-9, max_iter=50, region_mask=frame_mask)
    with pytest.raises(DivergenceError) as info:
        reconstruct(model.forward(g_true), sigma, np.full(grid.size, 2.0), rcfg, model)
    assert info.value.history and info.value.step >= 1


def test_initial_guess_validated(setup):
    grid, tg, op, sigma, g_true, model, cfg = setup
    with pytest.raises(DomainError):
        reconstruct(model.forward(g_true), sigma, np.full(3, 2.0), cfg, model)
    bad = np.full(grid.size, 2.0)
    bad[0] = np.nan
    with pytest.raises(DomainError):
        reconstruct(model.forward(g_true), sigma, bad, cfg, model)


def test_fine_data_is_close_to_same_grid_data():
    grid = Grid2D(17, 17)
    tg = TimeGrid(1.0, 64)
    sigma = tg.sample(gaussian)
    spec = EllipticOperatorSpec()
    coarse = synthetic_data(spec, grid, 1.2, tg, sigma, plane)
    fine = synthetic_data(spec, grid, 1.2, tg, sigma, plane, fine=True)
    rel = spacetime_norm(grid, tg, coarse - fine) / spacetime_norm(grid, tg, coarse)
    assert 0 < rel < 1e-2


# --- invisible source -----------------------------------------------------------------


def _corner_bump(grid, tg):
    x, y = grid.coords
    phi = smooth_bump(x, 0.15, 0.45) * smooth_bump(y, 0.15, 0.45)
    return np.outer(tg.sample(lambda t: smooth_bump(t, 0.1, 0.9)), phi)


@pytest.mark.parametrize("alpha", [0.6, 1.0, 1.5])
def test_invisible_source_reproduces_u0(alpha, small_grid, frame_mask):
    tg = TimeGrid(1.0, 128)
    op = assemble(small_grid, EllipticOperatorSpec())
    u0 = _corner_bump(small_grid, tg)
    f0, u = invisible_source(u0, op, alpha, tg, frame_mask)
    assert spacetime_norm(small_grid, tg, f0) > 0
    assert spacetime_norm(small_grid, tg, u - u0) <= 1e-8 * spacetime_norm(small_grid, tg, u0)
    assert spacetime_norm(small_grid, tg, u, frame_mask) <= 1e-3 * spacetime_norm(small_grid, tg, u)


def test_invisible_source_trivial(neumann_op, short_time, frame_mask):
    zero = np.zeros((65, neumann_op.grid.size))
    f0, u = invisible_source(zero, neumann_op, 1.3, short_time, frame_mask)
    assert np.all(f0 == 0) and np.all(u == 0)


def test_invisible_source_preconditions(small_grid, frame_mask):
    tg = TimeGrid(1.0, 64)
    op = assemble(small_grid, EllipticOperatorSpec())
    u0 = _corner_bump(small_grid, tg)
    on_region = u0 + np.outer(tg.sample(lambda t: smooth_bump(t, 0.1, 0.9)), frame_mask.astype(float))
    with pytest.raises(DomainError):
        invisible_source(on_region, op, 1.2, tg, frame_mask)
    early = u0.copy()
    early[1] = u0[32]
    with pytest.raises(DomainError):
        invisible_source(early, op, 1.5, tg, frame_mask)
    with pytest.raises(DomainError):
        invisible_source(u0[:10], op, 1.5, tg, frame_mask)


@pytest.mark.slow
def test_noiseless_recovery_is_discretization_limited(frame_mask):
    grid = Grid2D(17, 17)
    tg = TimeGrid(1.0, 64)
    op = assemble(grid, EllipticOperatorSpec())
    sigma = tg.sample(gaussian)
    g_true = grid.sample(plane)
    model = ForwardModel(op, 1.2, tg, sigma, frame_mask)
    rcfg = ReconstructionConfig(stop_eps=1e-6, max_iter=5000, region_mask=frame_mask)
    rep = reconstruct(model.forward(g_true), sigma, np.full(grid.size, 2.0), rcfg, model, g_true)
    assert rep.res <= 0.02
