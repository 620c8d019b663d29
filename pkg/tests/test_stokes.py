import numpy as np
import pytest

import poreflow as pf
from poreflow.oracle import dense_operators
from poreflow.spectral import fft, ifft, make_symbols
from poreflow.stokes import CONSTRAINT_NAMES, REPORT_COLUMNS, ResidualPair

from helpers import disk, rel_l2, stiff_penalties, unit_flows


def zero_state(grid):
    return pf.AdmmState.zeros(grid)


def test_penalty_validation():
    with pytest.raises(ValueError):
        pf.PenaltyParams(b=0.0)
    with pytest.raises(ValueError):
        pf.PenaltyParams(alpha=-1.0)
    with pytest.raises(ValueError):
        pf.PenaltyParams(growth=(0.9, 1.1, 1.1))
    with pytest.raises(ValueError):
        pf.PenaltyParams(ratio_threshold=(1.0, 10.0, 30.0))
    assert CONSTRAINT_NAMES == ("solid", "divergence", "coupling")


def test_config_validation():
    with pytest.raises(ValueError):
        pf.StokesConfig(nu=0.0)
    with pytest.raises(ValueError):
        pf.StokesConfig(max_iter=0)
    with pytest.raises(ValueError):
        pf.StokesConfig(symbol_mode="upwind")


def test_step1_constant_forcing_gives_mean_flow():
    # With zero multipliers and auxiliary velocity, only the zero mode is
    # forced: u = g_p / b everywhere.
    grid = pf.UnitCellGrid((12, 8))
    sym = make_symbols(grid, "central")
    pen = pf.PenaltyParams(alpha=2.0, beta=3.0, b=4.0, adaptive=False)
    cfg = pf.StokesConfig(pressure_gradient=(1.0, 0.0))
    u = pf.step1_velocity_solve(zero_state(grid), cfg, pen, sym)
    assert np.abs(u[0] - 0.25).max() < 1e-13
    assert np.abs(u[1]).max() < 1e-13


def test_step1_rank_one_inverse_identity():
    # M = A I + beta k k^T applied after its closed-form inverse is the
    # identity at any fixed mode.
    rng = np.random.default_rng(7)
    for _ in range(50):
        kap = rng.standard_normal(2)
        big_a = rng.uniform(0.5, 50.0)
        beta = rng.uniform(0.1, 100.0)
        m = big_a * np.eye(2) + beta * np.outer(kap, kap)
        r = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        correction = beta * (kap @ r) / (big_a + beta * (kap @ kap))
        u = (r - kap * correction) / big_a
        assert np.abs(m @ u - r).max() < 1e-12 * max(1.0, np.abs(r).max())


def test_step1_matches_dense_solve_of_same_system():
    # One full iteration from zero produces nontrivial multipliers; the next
    # velocity solve must agree with a dense assembly of the same operator.
    indicator = disk(8)
    grid = indicator.grid
    cfg = pf.StokesConfig(pressure_gradient=(1.0, 0.0))
    pen = pf.PenaltyParams(alpha=3.0, beta=2.0, b=1.5, adaptive=False)
    sym = make_symbols(grid, cfg.symbol_mode)

    state = zero_state(grid)
    u1 = pf.step1_velocity_solve(state, cfg, pen, sym)
    ut1 = pf.step2_aux_update(u1, state, pen, indicator)
    q1, a1, lam1 = pf.step3_multiplier_update(u1, ut1, state, pen, indicator, sym)
    state = pf.AdmmState(u1, ut1, q1, a1, lam1, 1)

    u2 = pf.step1_velocity_solve(state, cfg, pen, sym)

    ops = dense_operators(grid, cfg.symbol_mode)
    n = grid.n_pts
    system = np.zeros((2 * n, 2 * n))
    for c in range(2):
        for m in range(2):
            block = -pen.beta * ops.gradient[c] @ ops.gradient[m]
            if c == m:
                block = block + cfg.nu * (-ops.laplacian) + pen.b * np.eye(n)
            system[c * n:(c + 1) * n, m * n:(m + 1) * n] = block
    rhs = np.concatenate([
        cfg.pressure_gradient[c]
        - ops.gradient[c] @ state.q.ravel()
        - state.a[c].ravel()
        + pen.b * state.u_tilde[c].ravel()
        for c in range(2)
    ])
    u_dense = np.linalg.solve(system, rhs).reshape(2, *grid.dims)
    assert rel_l2(u2, u_dense) < 1e-10


def test_step2_pointwise_cases():
    grid = pf.UnitCellGrid((4, 4))
    indicator = pf.IndicatorField(grid, np.zeros((4, 4), dtype=int))
    pen = pf.PenaltyParams(alpha=1.0, b=1.0, adaptive=False)
    state = zero_state(grid)
    u = np.ones((2, 4, 4))

    # fluid point, zero multiplier: auxiliary velocity equals velocity
    ut = pf.step2_aux_update(u, state, pen, indicator)
    assert np.allclose(ut, u)

    # solid everywhere, zero multipliers: scaled down by b/(b+alpha)
    solid = pf.IndicatorField(grid, np.ones((4, 4), dtype=int))
    ut = pf.step2_aux_update(u, state, pf.PenaltyParams(alpha=3.0, b=1.0), solid)
    assert np.allclose(ut, 0.25 * u)

    # direct substitution: (a + b u - lam) / (b + alpha) at a solid point
    state.a[0] += 1.0
    state.lam[0] += 3.0
    u2 = np.zeros((2, 4, 4))
    u2[0] = 2.0
    ut = pf.step2_aux_update(u2, state, pen, solid)
    assert np.allclose(ut, 0.0)


def test_step3_multiplier_updates():
    grid = pf.UnitCellGrid((8, 8))
    sym = make_symbols(grid, "central")
    pen = pf.PenaltyParams(alpha=4.0, beta=2.0, b=2.0, adaptive=False)

    # divergence-free velocity, matching auxiliary, nothing on solid:
    # multipliers unchanged (mean-zero gauge preserved).
    indicator = pf.IndicatorField(grid, np.zeros((8, 8), dtype=int))
    state = zero_state(grid)
    u = np.ones((2, 8, 8))  # constant: divergence-free
    q, a, lam = pf.step3_multiplier_update(u, u.copy(), state, pen, indicator, sym)
    assert np.abs(q).max() < 1e-14
    assert np.abs(a).max() < 1e-14
    assert np.abs(lam).max() == 0.0

    # coupling gap at every point: a gains b * gap
    ut = u.copy()
    ut[0] -= 1.0
    _, a, _ = pf.step3_multiplier_update(u, ut, state, pen, indicator, sym)
    assert np.allclose(a[0], 2.0)
    assert np.allclose(a[1], 0.0)

    # solid cells accumulate alpha * u_tilde in the solid multiplier
    solid = pf.IndicatorField(grid, np.ones((8, 8), dtype=int))
    ut = np.zeros((2, 8, 8))
    ut[0] = 0.5
    _, _, lam = pf.step3_multiplier_update(u, ut, state, pen, solid, sym)
    assert np.allclose(lam[0], 2.0)


def test_residuals_zero_state_and_tolerance_floor():
    indicator = disk(16)
    cfg = pf.StokesConfig(eps_abs=1e-5, eps_rel=1e-5)
    pen = pf.PenaltyParams()
    sym = make_symbols(indicator.grid, cfg.symbol_mode)
    state = zero_state(indicator.grid)
    pairs = pf.residuals_and_tolerances(state, state.copy(), pen, cfg, indicator, sym)
    n_vec = state.u.size
    for pair, n in zip(pairs, (n_vec, indicator.grid.n_pts, n_vec)):
        assert pair.primal == 0.0 and pair.dual == 0.0
        assert pair.primal_tol >= np.sqrt(n) * cfg.eps_abs > 0.0
        assert pair.passed


def test_tolerances_reduce_to_absolute_when_eps_rel_zero():
    indicator = disk(16)
    cfg = pf.StokesConfig(eps_abs=1e-4, eps_rel=0.0)
    pen = pf.PenaltyParams()
    sym = make_symbols(indicator.grid, cfg.symbol_mode)
    rng = np.random.default_rng(9)
    noisy = pf.AdmmState(
        rng.standard_normal((2, 16, 16)), rng.standard_normal((2, 16, 16)),
        rng.standard_normal((16, 16)), rng.standard_normal((2, 16, 16)),
        rng.standard_normal((2, 16, 16)),
    )
    pairs = pf.residuals_and_tolerances(zero_state(indicator.grid), noisy, pen, cfg, indicator, sym)
    n_vec = noisy.u.size
    n_sca = noisy.q.size
    expect = [np.sqrt(n_vec) * 1e-4, np.sqrt(n_sca) * 1e-4, np.sqrt(n_vec) * 1e-4]
    for pair, tol in zip(pairs, expect):
        assert pair.primal_tol == pytest.approx(tol)
        assert pair.dual_tol == pytest.approx(tol)


def test_converged_run_final_record_passes_all_six():
    indicator = disk(16)
    _, report = pf.solve_stokes(
        indicator, pf.StokesConfig.with_tolerance(1e-5), pf.PenaltyParams()
    )
    assert report.converged
    final = report.final()
    for k in (1, 2, 3):
        assert final[f"r_p{k}"] <= final[f"r_p{k}_tol"]
        assert final[f"r_d{k}"] <= final[f"r_d{k}_tol"]
    assert report.history.shape == (report.iterations, len(REPORT_COLUMNS))


def test_adapt_penalties_rules():
    pen = pf.PenaltyParams(alpha=10.0, beta=10.0, b=10.0,
                           ratio_threshold=(20.0, 20.0, 20.0))

    # primal dominates beyond threshold: grow by the growth factor
    pairs = (ResidualPair(25.0, 1.0, 1.0, 1.0),
             ResidualPair(1.0, 1.0, 1.0, 1.0),
             ResidualPair(1.0, 1.0, 1.0, 1.0))
    out = pf.adapt_penalties(pen, pairs)
    assert out.alpha == pytest.approx(11.0)
    assert out.beta == 10.0 and out.b == 10.0

    # dual dominates at the floor: clamp holds
    floor_pen = pf.PenaltyParams(alpha=1e-3, ratio_threshold=(20.0,) * 3,
                                 floor=(1e-3,) * 3)
    pairs = (ResidualPair(1.0, 1.0, 50.0, 1.0),) + pairs[1:]
    out = pf.adapt_penalties(floor_pen, pairs)
    assert out.alpha == 1e-3

    # dead zone: unchanged
    pairs = (ResidualPair(1.0, 1.0, 1.0, 1.0),) * 3
    assert pf.adapt_penalties(pen, pairs).as_tuple() == pen.as_tuple()

    # vanishing dual with primal remaining counts as infinite ratio: grow
    pairs = (ResidualPair(1e-8, 1.0, 0.0, 1.0),) + pairs[1:]
    assert pf.adapt_penalties(pen, pairs).alpha == pytest.approx(11.0)

    # both zero: leave alone
    pairs = (ResidualPair(0.0, 1.0, 0.0, 1.0),) + pairs[1:]
    assert pf.adapt_penalties(pen, pairs).alpha == 10.0


def test_all_solid_fast_path():
    grid = pf.UnitCellGrid((16, 16))
    indicator = pf.IndicatorField(grid, np.ones((16, 16), dtype=int))
    state, report = pf.solve_stokes(indicator)
    assert report.converged
    assert report.iterations == 1
    assert np.linalg.norm(state.u) == 0.0
    final = report.final()
    assert all(final[f"r_p{k}"] <= final[f"r_p{k}_tol"] for k in (1, 2, 3))


def test_non_convergence_is_reported_not_raised():
    indicator = disk(16)
    state, report = pf.solve_stokes(
        indicator, pf.StokesConfig.with_tolerance(1e-8, max_iter=3)
    )
    assert not report.converged
    assert report.iterations == 3
    assert report.history.shape[0] == 3
    assert np.isfinite(state.u).all()


def test_solve_matches_oracle_small():
    indicator = disk(8)
    cfg = pf.StokesConfig.with_tolerance(1e-6)
    state, report = pf.solve_stokes(indicator, cfg, stiff_penalties())
    assert report.converged
    u_oracle = pf.oracle_stokes(indicator, cfg)
    assert rel_l2(state.u, u_oracle) <= 1e-4


def test_linearity_superposition():
    indicator = disk(16)
    eps = 1e-6
    pen = stiff_penalties()
    (s1, s2), _ = unit_flows(indicator, eps=eps, penalties=pen)
    c1, c2 = 0.7, -1.3
    cfg = pf.StokesConfig.with_tolerance(eps, pressure_gradient=(c1, c2))
    s_mix, report = pf.solve_stokes(indicator, cfg, pen)
    assert report.converged
    combo = c1 * s1.u + c2 * s2.u
    n_vec = s_mix.u.size
    allowance = 10.0 * np.sqrt(n_vec) * eps * (abs(c1) + abs(c2) + 1.0)
    assert np.linalg.norm(s_mix.u - combo) <= allowance


def test_rotation_symmetry_of_disk_flow():
    indicator = disk(16)
    eps = 1e-6
    (s1, s2), _ = unit_flows(indicator, eps=eps, penalties=stiff_penalties())
    # quarter-turn about the cell center maps index (i, j) -> (N-1-j, i)
    u1_rot = np.empty_like(s1.u)
    u1_rot[0] = -np.rot90(s1.u[1], k=1)
    u1_rot[1] = np.rot90(s1.u[0], k=1)
    n_vec = s1.u.size
    assert np.linalg.norm(u1_rot - s2.u) <= 10.0 * np.sqrt(n_vec) * eps


def test_fixed_point_consistency_one_more_iteration():
    indicator = disk(16)
    cfg = pf.StokesConfig.with_tolerance(1e-5)
    pen = stiff_penalties()
    state, report = pf.solve_stokes(indicator, cfg, pen)
    assert report.converged
    _, extra = pf.solve_stokes(
        indicator, pf.StokesConfig.with_tolerance(1e-5, max_iter=1), pen, init=state
    )
    final = extra.final()
    assert extra.converged
    for k in (1, 2, 3):
        assert final[f"r_d{k}"] <= final[f"r_d{k}_tol"]


def test_warm_start_reuses_converged_state():
    indicator = disk(16)
    cfg = pf.StokesConfig.with_tolerance(1e-5)
    pen = stiff_penalties()
    state, report = pf.solve_stokes(indicator, cfg, pen)
    _, warm = pf.solve_stokes(indicator, cfg, pen, init=state)
    assert warm.converged
    assert warm.iterations <= max(2, report.iterations // 10)


def test_pressure_gradient_dimension_checked():
    with pytest.raises(ValueError):
        pf.solve_stokes(disk(8), pf.StokesConfig(pressure_gradient=(1.0, 0.0, 0.0)))


def test_exact_symbols_still_converge_on_coarse_grids():
    # exact mode is kept for comparison studies; on coarse grids (no screened
    # interior solid cells) it reaches the oracle like the default mode
    indicator = disk(8)
    cfg = pf.StokesConfig.with_tolerance(1e-6, symbol_mode="exact")
    state, report = pf.solve_stokes(indicator, cfg, stiff_penalties())
    assert report.converged
    oracle = pf.oracle_stokes(indicator, cfg)
    assert rel_l2(state.u, oracle) <= 1e-4


def test_report_series_accessor():
    indicator = disk(16)
    _, report = pf.solve_stokes(indicator, pf.StokesConfig.with_tolerance(1e-4))
    series = report.series("r_p1")
    assert series.shape == (report.iterations,)
    assert series[-1] <= report.series("r_p1_tol")[-1]


def test_warm_start_rejects_bad_state():
    indicator = disk(8)
    bad = pf.AdmmState.zeros(pf.UnitCellGrid((16, 16)))
    with pytest.raises(ValueError):
        pf.solve_stokes(indicator, init=bad)
    nan_state = pf.AdmmState.zeros(indicator.grid)
    nan_state.u[0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        pf.solve_stokes(indicator, init=nan_state)
