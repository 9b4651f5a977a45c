import math
import os

import numpy as np
import pytest

import pacascade as pc

ALPHA = complex(-0.33, 0.033)
SMALL = {"symbols": 256}


def test_excitation_unit_peak():
    x = pc.make_excitation(symbols=128)
    assert x.dtype == np.complex128
    assert x.shape == (128 * 8,)
    assert np.max(np.abs(x)) == pytest.approx(1.0, abs=1e-15)


def test_linear_chain_is_a_gain():
    x = pc.make_excitation(symbols=64)
    y = pc.cascade_forward(x, [2.0, 0.5, 3.0], 0j)
    np.testing.assert_allclose(y, 3.0 * x, rtol=1e-12, atol=0)
    assert pc.nmse(3.0 * x, y) < -250 or math.isinf(pc.nmse(3.0 * x, y))


def test_cascade_matches_numpy_with_explicit_noise():
    x = pc.make_excitation(symbols=64)
    w = pc.draw_noise(2, x.size, 5)
    sigma = 0.01
    y = pc.cascade_forward(x, [1.1, 0.9], ALPHA, sigma, noise=w)
    ref = x.copy()
    for g, row in zip([1.1, 0.9], w):
        u = ref + sigma * row
        ref = g * (u + ALPHA * u * np.abs(u) ** 2)
    np.testing.assert_allclose(y, ref, rtol=1e-12, atol=1e-15)


def test_equivalent_pa_and_saturation():
    g, a, s = pc.equivalent_pa([1.3, 1.3], ALPHA, 0.1)
    assert g == pytest.approx(1.69)
    assert a == pytest.approx(ALPHA * (1 + 1.3**2))
    assert s == pytest.approx(0.1 * math.sqrt(1.3**4 + 1.3**2))
    assert pc.x_max(complex(-1 / 3, 0)) == pytest.approx(1.0)
    assert pc.scenario2_gain(complex(-1 / 3, 0)) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        pc.x_max(0j)


def test_psd_and_aclr():
    x = pc.make_excitation(symbols=2048)
    f, p = pc.estimate_psd(x)
    assert f.shape == p.shape == (1025,)
    assert f[0] == -4.0 and f[-1] == 4.0
    assert p.max() == 0.0
    assert pc.aclr(x) < -40.0


def test_simulate_and_optimize(tmp_path):
    sim = pc.simulate(2, 3, config=SMALL)
    assert [r["case"] for r in sim["scenarios"]] == ["scenario2"]
    res = pc.optimize("power", 1, config=SMALL)
    cases = {r["case"]: r for r in res["optimizations"]}
    assert cases["power-scenario1"]["input_power"] == 1.0
    assert 0.3 < cases["power-scenario2"]["input_power"] < 0.7

    out = tmp_path / "run"
    joint = pc.optimize("joint-unequal", 2, config=SMALL, out_dir=str(out))
    run = joint["optimizations"][0]
    assert all(0.7 - 1e-12 <= g <= 1.3 + 1e-12 for g in run["gains"])
    assert run["after"]["nmse_db"] < run["before"]["nmse_db"]
    assert (out / "manifest.json").exists()
    assert set(joint["files"]) <= set(os.listdir(out))


def test_sweep_is_deterministic(tmp_path):
    cfg = dict(SMALL, K_range=[1, 2], modes=["joint-equal"], alpha=ALPHA)
    a = pc.sweep(cfg, out_dir=str(tmp_path / "a"))
    b = pc.sweep(cfg, out_dir=str(tmp_path / "b"))
    assert a["digest"] == b["digest"]


def test_config_errors():
    with pytest.raises(ValueError):
        pc.sweep({"no_such_key": 1})
    with pytest.raises(pc.ConfigError):
        pc.simulate(1, 1, config={"epsilon": 2.0})
    assert pc.default_config()["alpha"] == ALPHA
