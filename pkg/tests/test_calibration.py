import math

import numpy as np
import pytest

from softgrip.calibration import (
    CalibrationTable,
    angle_from_dp,
    force_from_dp,
    generate_locked_sweep,
    generate_regulated_sweep,
    hysteresis_sweep,
    interp_dp,
    interp_torque,
    read_csv,
    write_csv,
)
from softgrip.errors import (
    ConfigError,
    DomainError,
    ParseError,
    RangeError,
    SaturationError,
)
from softgrip.pneumatics import RingModel, RingState, joint_torque, lock, pressure_at_angle


def test_regulated_sweep_grid_shape(regulated_table):
    assert regulated_table.alpha_grid.shape == (17,)
    assert regulated_table.p0_grid.shape == (31,)
    assert regulated_table.torque_surface.shape == (17, 31)
    assert np.all(regulated_table.dp_surface == 0.0)


def test_regulated_sweep_matches_plant(ring, regulated_table):
    for i, a_deg in enumerate(regulated_table.alpha_grid):
        for j, p in enumerate(regulated_table.p0_grid):
            expect = joint_torque(ring, math.radians(a_deg), float(p))
            assert regulated_table.torque_surface[i, j] == expect


def test_regulated_sweep_dead_zone_and_growth(regulated_table):
    grid_a = regulated_table.alpha_grid
    grid_p = regulated_table.p0_grid
    surf = regulated_table.torque_surface
    for j, p in enumerate(grid_p):
        if p < 5.0:
            continue
        col = surf[:, j]
        assert np.all(col[grid_a <= 20.0] == 0.0)
        beyond = col[grid_a > 20.0]
        assert np.all(np.diff(beyond) > 0.0)
        assert np.all(beyond > 0.0)


def test_zero_coefficients_zero_surface():
    model = RingModel(c1=0.0, c2=0.0)
    table = generate_regulated_sweep(model)
    assert np.all(table.torque_surface == 0.0)


def test_locked_sweep_grids(locked_table):
    assert list(locked_table.p0_grid) == [0.0, 20.0, 40.0, 60.0, 80.0]
    assert locked_table.alpha_grid[0] == 0.0
    assert locked_table.alpha_grid[-1] == 80.0
    assert np.all(np.diff(locked_table.alpha_grid) == 1.0)


def test_locked_sweep_matches_plant_pointwise(ring, locked_table):
    for j, p0 in enumerate(locked_table.p0_grid):
        state = lock(RingState(p_gauge=float(p0), alpha=0.0), ring)
        for i, a_deg in enumerate(locked_table.alpha_grid):
            alpha = math.radians(a_deg)
            p = pressure_at_angle(state, ring, alpha)
            assert locked_table.dp_surface[i, j] == pytest.approx(p - p0, abs=1e-12)
            assert locked_table.torque_surface[i, j] == pytest.approx(
                joint_torque(ring, alpha, p), rel=1e-12
            )


def test_locked_sweep_baseline_row_zero(locked_table):
    assert np.all(locked_table.dp_surface[0] == 0.0)


def test_locked_sweep_dp_monotone(locked_table):
    assert np.all(np.diff(locked_table.dp_surface, axis=0) > 0.0)
    # higher initial pressure means a steeper rise at every angle
    assert np.all(np.diff(locked_table.dp_surface[1:], axis=1) > 0.0)


def test_hysteresis_leak_gap(ring):
    alphas, fwd, bwd = hysteresis_sweep(ring, p0=60.0)
    interior = slice(1, -1)
    assert np.all(bwd[interior] < fwd[interior])


def test_hysteresis_vanishes_without_leak():
    model = RingModel(leak_rate=0.0)
    alphas, fwd, bwd = hysteresis_sweep(model, p0=60.0)
    assert np.max(np.abs(fwd - bwd)) <= 1e-9


def test_interp_exact_at_nodes(locked_table):
    for i in (0, 13, 40, 80):
        for j in range(locked_table.p0_grid.size):
            a = float(locked_table.alpha_grid[i])
            p = float(locked_table.p0_grid[j])
            assert interp_dp(locked_table, a, p) == pytest.approx(
                locked_table.dp_surface[i, j], abs=1e-12
            )
            assert interp_torque(locked_table, a, p) == pytest.approx(
                locked_table.torque_surface[i, j], abs=1e-9
            )


def test_interp_cell_center_is_corner_mean(locked_table):
    i, j = 30, 2
    a = 0.5 * (locked_table.alpha_grid[i] + locked_table.alpha_grid[i + 1])
    p = 0.5 * (locked_table.p0_grid[j] + locked_table.p0_grid[j + 1])
    corners = locked_table.dp_surface[i : i + 2, j : j + 2]
    assert interp_dp(locked_table, float(a), float(p)) == pytest.approx(corners.mean())


def test_interp_continuous_across_cell_edges(locked_table):
    a = float(locked_table.alpha_grid[25])
    p = 30.0
    below = interp_dp(locked_table, a - 1e-10, p)
    above = interp_dp(locked_table, a + 1e-10, p)
    assert abs(below - above) < 1e-6


def test_interp_tracks_plant_between_nodes(ring, locked_table):
    # bilinear error is bounded by curvature; the 1 deg grid keeps it tiny
    rng = np.random.default_rng(3)
    for _ in range(300):
        a_deg = float(rng.uniform(0.0, 80.0))
        p0 = float(rng.uniform(0.0, 80.0))
        state = lock(RingState(p_gauge=p0, alpha=0.0), ring)
        truth = pressure_at_angle(state, ring, math.radians(a_deg)) - p0
        assert interp_dp(locked_table, a_deg, p0) == pytest.approx(truth, abs=1e-2)


def test_interp_rejects_out_of_hull(locked_table):
    with pytest.raises(RangeError):
        interp_dp(locked_table, -1.0, 60.0)
    with pytest.raises(RangeError):
        interp_dp(locked_table, 30.0, 95.0)
    with pytest.raises(RangeError):
        interp_torque(locked_table, 81.0, 60.0)


def test_angle_from_dp_zero(locked_table):
    assert angle_from_dp(locked_table, 0.0, 60.0) == 0.0


def test_angle_from_dp_roundtrip_at_nodes(locked_table):
    for p0 in (0.0, 20.0, 60.0, 80.0):
        for i in range(0, 81, 5):
            a = float(locked_table.alpha_grid[i])
            dp = interp_dp(locked_table, a, p0)
            if dp == 0.0:
                continue
            assert angle_from_dp(locked_table, dp, p0) == pytest.approx(a, abs=2e-3)


def test_angle_from_dp_roundtrip_off_nodes(locked_table):
    rng = np.random.default_rng(9)
    for _ in range(100):
        a = float(rng.uniform(1.0, 79.0))
        p0 = float(rng.uniform(0.0, 80.0))
        dp = interp_dp(locked_table, a, p0)
        assert angle_from_dp(locked_table, dp, p0) == pytest.approx(a, abs=2e-3)


def test_angle_from_dp_noise_propagation(locked_table):
    # a noisy dp maps to an angle error bounded by noise / local slope
    p0, a_star = 60.0, 30.0
    dp_star = interp_dp(locked_table, a_star, p0)
    slope_lo = (
        interp_dp(locked_table, a_star - 2.0, p0) - interp_dp(locked_table, a_star - 3.0, p0)
    )  # kPa per deg, shallowest slope near the operating point
    rng = np.random.default_rng(17)
    sigma = 0.26
    for _ in range(100):
        noisy = max(dp_star + float(rng.normal(0.0, sigma)), 0.0)
        a_hat = angle_from_dp(locked_table, noisy, p0)
        assert abs(a_hat - a_star) <= abs(noisy - dp_star) / slope_lo + 2e-3


def test_angle_from_dp_errors(locked_table):
    with pytest.raises(DomainError):
        angle_from_dp(locked_table, -0.1, 60.0)
    dp_max = interp_dp(locked_table, 80.0, 60.0)
    with pytest.raises(SaturationError):
        angle_from_dp(locked_table, dp_max + 1.0, 60.0)


def test_force_from_dp_zero_in_dead_zone(geom, locked_table):
    # small dp maps to angles inside the fabric dead zone: zero torque, zero force
    assert force_from_dp(locked_table, geom, 0.0, 60.0) == 0.0
    dp_at_15deg = interp_dp(locked_table, 15.0, 60.0)
    assert force_from_dp(locked_table, geom, dp_at_15deg, 60.0) == pytest.approx(0.0, abs=1e-9)


def test_force_from_dp_scales_with_moment_arm(geom, locked_table):
    from dataclasses import replace

    dp = interp_dp(locked_table, 45.0, 60.0)
    f1 = force_from_dp(locked_table, geom, dp, 60.0)
    f2 = force_from_dp(locked_table, replace(geom, tip_arm=2 * geom.tip_arm), dp, 60.0)
    assert f1 > 0.0
    assert f2 == pytest.approx(f1 / 2.0)


def test_force_from_dp_matches_plant(ring, geom, locked_table):
    # drive the plant to a known angle and check the inferred force
    p0 = 60.0
    state = lock(RingState(p_gauge=p0, alpha=0.0), ring)
    for a_deg in (30.0, 45.0, 60.0, 75.0):
        alpha = math.radians(a_deg)
        p = pressure_at_angle(state, ring, alpha)
        truth = joint_torque(ring, alpha, p) / geom.tip_arm
        est = force_from_dp(locked_table, geom, p - p0, p0)
        assert est == pytest.approx(truth, rel=5e-3)


def test_csv_roundtrip_lossless(locked_table, tmp_path):
    path = tmp_path / "locked.csv"
    locked_table.meta["note"] = "unit-test"
    write_csv(locked_table, path)
    back = read_csv(path)
    assert np.array_equal(back.alpha_grid, locked_table.alpha_grid)
    assert np.array_equal(back.p0_grid, locked_table.p0_grid)
    assert np.array_equal(back.dp_surface, locked_table.dp_surface)
    assert np.array_equal(back.torque_surface, locked_table.torque_surface)
    assert back.meta == {k: str(v) for k, v in locked_table.meta.items()}
    # a rewrite of the parsed table is byte-identical
    path2 = tmp_path / "again.csv"
    write_csv(back, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_csv_rejects_missing_magic(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("alpha_deg,p0_kpa,dp_kpa,torque_nmm\n")
    with pytest.raises(ParseError, match="line 1"):
        read_csv(path)


def test_csv_rejects_wrong_header_token(locked_table, tmp_path):
    path = tmp_path / "tab.csv"
    write_csv(locked_table, path)
    lines = path.read_text().splitlines()
    lines[2] = "alpha_deg,pressure,dp_kpa,torque_nmm"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError, match="p0_kpa"):
        read_csv(path)


def test_csv_rejects_shuffled_rows(locked_table, tmp_path):
    path = tmp_path / "tab.csv"
    write_csv(locked_table, path)
    lines = path.read_text().splitlines()
    lines[3], lines[4] = lines[4], lines[3]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError, match="row-major"):
        read_csv(path)


def test_csv_rejects_bad_cell(locked_table, tmp_path):
    path = tmp_path / "tab.csv"
    write_csv(locked_table, path)
    lines = path.read_text().splitlines()
    parts = lines[10].split(",")
    parts[2] = "oops"
    lines[10] = ",".join(parts)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError, match="line 11"):
        read_csv(path)


def test_csv_rejects_incomplete_grid(locked_table, tmp_path):
    path = tmp_path / "tab.csv"
    write_csv(locked_table, path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(ParseError, match="not complete"):
        read_csv(path)


def test_table_invariants_enforced():
    with pytest.raises(ConfigError):
        CalibrationTable(np.array([0.0]), np.array([0.0, 1.0]), np.zeros((1, 2)), np.zeros((1, 2)))
    with pytest.raises(ParseError, match="strictly increasing"):
        CalibrationTable(
            np.array([0.0, 0.0, 1.0]),
            np.array([0.0, 1.0]),
            np.zeros((3, 2)),
            np.zeros((3, 2)),
        )
    with pytest.raises(ParseError, match="shape"):
        CalibrationTable(
            np.array([0.0, 1.0]), np.array([0.0, 1.0]), np.zeros((3, 2)), np.zeros((2, 2))
        )
    with pytest.raises(ParseError, match="alpha=0"):
        CalibrationTable(
            np.array([0.0, 1.0]),
            np.array([0.0, 1.0]),
            np.array([[1.0, 1.0], [2.0, 2.0]]),
            np.zeros((2, 2)),
        )
    with pytest.raises(ParseError, match="non-decreasing"):
        CalibrationTable(
            np.array([0.0, 1.0]),
            np.array([0.0, 1.0]),
            np.array([[0.0, 0.0], [-1.0, 1.0]]),
            np.zeros((2, 2)),
        )


def test_degenerate_sweep_rejected(ring):
    with pytest.raises(ConfigError):
        generate_locked_sweep(ring, p0_grid_kpa=(60.0,))
    with pytest.raises(ConfigError):
        generate_regulated_sweep(ring, alpha_max_deg=0.0)
