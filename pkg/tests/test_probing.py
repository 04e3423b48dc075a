import math
from dataclasses import replace

import numpy as np
import pytest

from softgrip.errors import ConfigError, StateError
from softgrip.pneumatics import measurement_sigma
from softgrip.probing import (
    GripperSim,
    ProbeConfig,
    default_contact_threshold,
    detect_contact,
    probe,
    run_probe,
    sensitivity_sweep,
)

CFG = ProbeConfig()


def _sim(geom, ring, sensor, k, offset=40.0, seed=0):
    return GripperSim(geom, ring, sensor, k, offset, max_open=45.0, seed=seed)


def test_probe_config_totals():
    assert CFG.d_c == 30.0
    with pytest.raises(ConfigError):
        ProbeConfig(n_probe_steps=0)
    with pytest.raises(ConfigError):
        ProbeConfig(probe_step=-1.0)
    with pytest.raises(ConfigError):
        ProbeConfig(contact_threshold=0.0)


def test_default_threshold_formula(sensor):
    expect = 6.0 * measurement_sigma(sensor, 512) + sensor.quant_step
    assert default_contact_threshold(sensor, 512) == pytest.approx(expect)
    assert CFG.threshold(sensor) == pytest.approx(expect)
    assert replace(CFG, contact_threshold=3.0).threshold(sensor) == 3.0


def test_detect_contact_noise_free(geom, ring, quiet_sensor, locked_table):
    sim = _sim(geom, ring, quiet_sensor, 202.39, offset=40.0)
    opening, flags = detect_contact(sim, locked_table, CFG)
    assert flags == []
    assert opening == pytest.approx(40.0, abs=0.05)


def test_detect_contact_off_grid_offsets(geom, ring, quiet_sensor, locked_table):
    for offset in (36.3, 38.0, 40.7, 41.0):
        sim = _sim(geom, ring, quiet_sensor, 150.0, offset=offset)
        opening, flags = detect_contact(sim, locked_table, CFG)
        assert flags == []
        assert opening == pytest.approx(offset, abs=CFG.approach_step)


def test_detect_contact_noisy(geom, ring, sensor, locked_table):
    for seed in range(5):
        sim = _sim(geom, ring, sensor, 100.0, offset=40.0, seed=seed)
        opening, flags = detect_contact(sim, locked_table, CFG)
        assert flags == []
        assert opening == pytest.approx(40.0, abs=CFG.approach_step)


def test_empty_workspace_reports_no_contact(geom, ring, sensor, locked_table):
    sim = GripperSim(geom, ring, sensor, None, None, max_open=45.0, seed=0)
    report = run_probe(sim, locked_table, CFG)
    assert report.flags == ["no_contact"]
    assert report.contact_opening is None
    assert report.k_r is None


def test_probe_requires_contact(geom, ring, quiet_sensor, locked_table):
    sim = _sim(geom, ring, quiet_sensor, 100.0)
    with pytest.raises(StateError):
        probe(sim, locked_table, CFG)


def test_probe_trace_shape_and_monotonicity(geom, ring, quiet_sensor, locked_table):
    sim = _sim(geom, ring, quiet_sensor, 100.0)
    report = run_probe(sim, locked_table, CFG)
    assert len(report.dp_trace) == CFG.n_probe_steps
    assert [dc for dc, _ in report.dp_trace] == [6.0, 12.0, 18.0, 24.0, 30.0]
    dps = [dp for _, dp in report.dp_trace]
    assert all(b > a for a, b in zip(dps, dps[1:]))
    assert dps[0] > 0.0


def test_noise_free_stiffness_recovery(geom, ring, quiet_sensor, locked_table):
    # the full estimation chain recovers the object's Hooke stiffness
    for k_true in (20.0, 50.83, 100.0, 202.39, 250.0):
        sim = _sim(geom, ring, quiet_sensor, k_true)
        report = run_probe(sim, locked_table, CFG)
        assert report.flags == []
        assert report.k_o_est == pytest.approx(k_true, rel=0.10)
        truth = sim.true_equilibrium()
        assert report.est_force == pytest.approx(truth.force, rel=0.05)


def test_estimates_are_self_consistent(geom, ring, quiet_sensor, locked_table):
    sim = _sim(geom, ring, quiet_sensor, 150.0)
    report = run_probe(sim, locked_table, CFG)
    assert report.k_r == pytest.approx(report.est_force / CFG.d_c)
    assert report.k_o_est == pytest.approx(report.est_force / report.est_delta)
    assert 0.0 < report.est_delta < CFG.d_c


def test_relative_stiffness_preserves_ordering(geom, ring, quiet_sensor, locked_table):
    for p0 in (20.0, 60.0, 80.0):
        cfg = replace(CFG, p0=p0)
        krs = []
        for k in (50.83, 54.87, 202.39):
            sim = _sim(geom, ring, quiet_sensor, k)
            krs.append(run_probe(sim, locked_table, cfg).k_r)
        assert krs[0] < krs[1] < krs[2]


def test_soft_object_low_relative_stiffness(geom, ring, quiet_sensor, locked_table):
    reports = {}
    for k in (25.0, 150.0):
        sim = _sim(geom, ring, quiet_sensor, k)
        reports[k] = run_probe(sim, locked_table, CFG)
    assert reports[25.0].k_r < 0.6 * reports[150.0].k_r


def test_probe_with_supplied_contact_opening(geom, ring, quiet_sensor, locked_table):
    sim = _sim(geom, ring, quiet_sensor, 202.39)
    report = probe(sim, locked_table, CFG, contact_opening=40.0)
    assert report.contact_opening == 40.0
    assert report.k_o_est == pytest.approx(202.39, rel=0.02)


def test_probe_deterministic_for_fixed_seed(geom, ring, sensor, locked_table):
    r1 = run_probe(_sim(geom, ring, sensor, 100.0, seed=123), locked_table, CFG)
    r2 = run_probe(_sim(geom, ring, sensor, 100.0, seed=123), locked_table, CFG)
    assert r1.to_dict() == r2.to_dict()
    r3 = run_probe(_sim(geom, ring, sensor, 100.0, seed=124), locked_table, CFG)
    assert r3.dp_trace != r1.dp_trace


def test_report_serialization(geom, ring, quiet_sensor, locked_table):
    import json

    sim = _sim(geom, ring, quiet_sensor, 100.0)
    report = run_probe(sim, locked_table, CFG)
    doc = json.loads(report.to_json())
    assert doc["k_r"] == report.k_r
    assert doc["p0"] == CFG.p0
    csv = report.trace_csv().splitlines()
    assert csv[0] == "step,dc_mm,dp_kpa"
    assert len(csv) == 1 + len(report.dp_trace)
    step, dc, dp = csv[1].split(",")
    assert (int(step), float(dc), float(dp)) == (1, *report.dp_trace[0])


def test_sim_guards(geom, ring, sensor):
    with pytest.raises(ConfigError):
        GripperSim(geom, ring, sensor, 100.0, 50.0, max_open=45.0)
    with pytest.raises(ConfigError):
        GripperSim(geom, ring, sensor, 100.0, 40.0, max_open=0.0)
    sim = _sim(geom, ring, sensor, 100.0)
    with pytest.raises(StateError):
        sim.close_to(30.0, 8)


def test_sensitivity_sweep_identical_objects_zero(geom, ring, sensor, locked_table):
    ranked = sensitivity_sweep(
        geom, ring, sensor, locked_table, 50.0, 50.0,
        p0_grid=(20.0, 60.0), dc_grid=(12.0, 30.0),
    )
    assert all(sep == pytest.approx(0.0, abs=1e-9) for _, _, sep, _ in ranked)


def test_sensitivity_sweep_ranks_by_z(geom, ring, sensor, locked_table):
    ranked = sensitivity_sweep(geom, ring, sensor, locked_table, 50.83, 54.87)
    zs = [z for _, _, _, z in ranked]
    assert zs == sorted(zs, reverse=True)
    # separation grows with closing depth at a fixed supply pressure
    by_key = {(p0, dc): sep for p0, dc, sep, _ in ranked}
    seps = [by_key[(60.0, dc)] for dc in (20.0, 30.0, 40.0)]
    assert seps[0] < seps[1] < seps[2]


def test_sensitivity_sweep_deterministic(geom, ring, sensor, locked_table):
    r1 = sensitivity_sweep(geom, ring, sensor, locked_table, 50.83, 202.39,
                           p0_grid=(40.0, 80.0), dc_grid=(18.0, 30.0))
    r2 = sensitivity_sweep(geom, ring, sensor, locked_table, 50.83, 202.39,
                           p0_grid=(40.0, 80.0), dc_grid=(18.0, 30.0))
    assert r1 == r2
