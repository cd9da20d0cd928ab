import configparser

import numpy as np
import pytest

from rsma_noma.scenario import (Mode, ScenarioConfig, dbm_to_watts, draw_channels,
                                load_config, path_loss_db, watts_to_dbm)

from conftest import table1_config


def test_dbm_to_watts_known_values():
    assert dbm_to_watts(30.0) == 1.0
    assert dbm_to_watts(-110.0) == pytest.approx(1.0e-14, rel=1e-12)
    assert dbm_to_watts(35.0) == pytest.approx(3.1622776601683795, rel=1e-12)


def test_watts_to_dbm_round_trip():
    for dbm in (-110.0, 0.0, 10.0, 35.0):
        assert watts_to_dbm(dbm_to_watts(dbm)) == pytest.approx(dbm, abs=1e-9)
    with pytest.raises(ValueError):
        watts_to_dbm(0.0)


def test_path_loss_reference_points():
    assert path_loss_db(1.0) == pytest.approx(-128.1, abs=1e-12)
    assert path_loss_db(0.1) == pytest.approx(-90.5, abs=1e-12)
    assert path_loss_db(0.01) == pytest.approx(-52.9, abs=1e-9)
    with pytest.raises(ValueError):
        path_loss_db(0.0)
    with pytest.raises(ValueError):
        path_loss_db(-0.5)


def test_draw_channels_deterministic_under_seed():
    cfg = table1_config(num_users=2)
    a = draw_channels(cfg, np.random.default_rng(123))
    b = draw_channels(cfg, np.random.default_rng(123))
    assert np.array_equal(a.gains_noma, b.gains_noma)
    assert np.array_equal(a.gains_rsma, b.gains_rsma)
    assert np.array_equal(a.distances_m, b.distances_m)


def test_draw_channels_sorted_descending():
    cfg = table1_config(num_users=6)
    rng = np.random.default_rng(0)
    for _ in range(20):
        ch = draw_channels(cfg, rng)
        assert np.all(np.diff(ch.gains_noma) <= 0.0)


def test_delta_a_reciprocal_to_machine_precision():
    cfg = table1_config(num_users=5)
    rng = np.random.default_rng(7)
    eps = np.finfo(float).eps
    for _ in range(50):
        ch = draw_channels(cfg, rng)
        assert np.all(np.abs(ch.delta_noma * ch.a_noma - 1.0) <= 4 * eps)
        assert np.all(np.abs(ch.delta_rsma * ch.a_rsma - 1.0) <= 4 * eps)


def test_fading_is_unit_mean_exponential():
    # strip path loss back out of the gains and average the fading factor
    cfg = table1_config(num_users=4)
    rng = np.random.default_rng(2024)
    samples = []
    for _ in range(10_000):
        ch = draw_channels(cfg, rng)
        pl_lin = 10.0 ** (path_loss_db(ch.distances_m / 1000.0) / 10.0)
        samples.append(ch.gains_noma / pl_lin)
        samples.append(ch.gains_rsma / pl_lin)
    mean = float(np.mean(np.concatenate(samples)))
    assert abs(mean - 1.0) < 0.05


def test_distance_floor_and_geometry():
    cfg = table1_config(num_users=3, area_side_m=350.0, bs_height_m=4.0)
    rng = np.random.default_rng(1)
    for _ in range(200):
        ch = draw_channels(cfg, rng)
        assert np.all(ch.distances_m >= 4.0)  # BS height dominates the floor
        assert np.all(ch.distances_m <= np.sqrt(2 * 175.0**2 + 4.0**2) + 1e-9)


@pytest.mark.parametrize("bad", [
    dict(num_users=0),
    dict(r_th=-0.1),
    dict(weights_noma=0.0),
    dict(weights_rsma=[1.0, -1.0], num_users=2),
    dict(epsilon1=0.0),
    dict(l_max=0),
])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        table1_config(**bad)


def test_config_broadcasts_scalars():
    cfg = table1_config(num_users=3, r_th=0.5, weights_noma=2.0)
    assert cfg.r_th.tolist() == [0.5, 0.5, 0.5]
    assert cfg.weights_noma.tolist() == [2.0, 2.0, 2.0]


def test_load_config_file(tmp_path):
    text = """
[system]
num_users = 3
p_max_dbm = 30.0
noise_dbm = -100.0
p_tol_dbm = 5.0      # inline comment
area_side_m = 200.0
bs_height_m = 6.0

[users]
r_th = 0.5, 1.0, 1.5
weights_noma = 1.0
weights_rsma = 2.0, 1.5, 1.0

[algorithm]
mode = rsma
epsilon1 = 1e-4
l_max = 50
solver_tol = 1e-7
rng_seed = 9
"""
    path = tmp_path / "scenario.ini"
    path.write_text(text)
    cfg = load_config(path)
    assert cfg.num_users == 3
    assert cfg.p_max_dbm == 30.0
    assert cfg.p_tol_dbm == 5.0
    assert cfg.r_th.tolist() == [0.5, 1.0, 1.5]
    assert cfg.weights_noma.tolist() == [1.0, 1.0, 1.0]
    assert cfg.weights_rsma.tolist() == [2.0, 1.5, 1.0]
    assert cfg.mode is Mode.RSMA_ONLY
    assert cfg.epsilon1 == 1e-4
    assert cfg.l_max == 50
    assert cfg.rng_seed == 9
    assert cfg.area_side_m == 200.0
