import numpy as np
import pytest
from hypothesis import given, strategies as st

from verhulstpc.channel import (
    ErrorModel, GainMatrix, build_gain_matrix, link_gains, load_csv, path_loss, perturb,
    rician_power, shadowing_db,
)
from verhulstpc.scenario import ChannelSettings, Geometry, place_uniform, streams

PATH_ONLY = ChannelSettings(shadowing=False, fading=False)


def _geometry(mts, bss=((2500.0, 2500.0),)):
    return Geometry(5000.0, 5000.0, tuple(bss), tuple(mts))


def test_equidistant_users_equal_gains():
    g = build_gain_matrix(_geometry([(2000.0, 2500.0), (3000.0, 2500.0)]), np.random.default_rng(0),
                          PATH_ONLY)
    assert g.entries[0, 0] == g.entries[1, 1]
    assert g.entries[0, 0] == pytest.approx(500.0 ** -2)


def test_path_loss_100m():
    assert path_loss(100.0) == pytest.approx(1e-4)
    g = build_gain_matrix(_geometry([(2600.0, 2500.0)]), np.random.default_rng(0), PATH_ONLY)
    assert g.entries[0, 0] == pytest.approx(1e-4)


def test_serving_bs_is_nearest_and_rows_follow_it():
    bss = ((1250.0, 1250.0), (3750.0, 3750.0))
    geo = _geometry([(1000.0, 1000.0), (4000.0, 4000.0)], bss)
    g = build_gain_matrix(geo, np.random.default_rng(0), PATH_ONLY)
    np.testing.assert_array_equal(g.serving_bs, [0, 1])
    d01 = np.hypot(1250 - 4000, 1250 - 4000)
    assert g.entries[0, 1] == pytest.approx(d01 ** -2)


def test_users_sharing_bs_share_interference_rows():
    geo = place_uniform(12, 5000.0, 5000.0, np.random.default_rng(4))
    g = build_gain_matrix(geo, np.random.default_rng(5))
    s = g.serving_bs
    for i in range(12):
        for j in range(12):
            if s[i] == s[j]:
                np.testing.assert_array_equal(g.entries[i], g.entries[j])


def test_shadowing_moments():
    x = shadowing_db(np.random.default_rng(1), 100_000, 6.0)
    assert abs(x.mean()) < 0.05
    assert x.var() == pytest.approx(6.0, rel=0.02)


def test_rician_mean_power():
    h2 = rician_power(np.random.default_rng(2), 200_000, 0.6, 0.4)
    assert h2.mean() == pytest.approx(0.36 + 2 * 0.16, rel=0.01)


def test_entries_positive_and_read_only():
    geo = place_uniform(8, 5000.0, 5000.0, np.random.default_rng(9))
    g = build_gain_matrix(geo, np.random.default_rng(3))
    assert np.all(g.entries > 0)
    with pytest.raises(ValueError):
        g.entries[0, 0] = 1.0


@pytest.mark.parametrize("bad", [np.zeros((2, 2)), np.ones((2, 3)), -np.ones((2, 2))])
def test_gain_matrix_rejects_bad_entries(bad):
    with pytest.raises(ValueError):
        GainMatrix(bad, np.zeros(bad.shape[0], dtype=int))


def test_distance_floor_warning():
    g, d, warnings = link_gains(_geometry([(2500.0, 2500.0)]), np.random.default_rng(0), PATH_ONLY)
    assert d[0, 0] == 1.0
    assert g[0, 0] == 1.0
    assert len(warnings) == 1


def test_same_seed_same_matrix():
    geo = place_uniform(10, 5000.0, 5000.0, np.random.default_rng(1))
    a = build_gain_matrix(geo, streams(42)["channel"])
    b = build_gain_matrix(geo, streams(42)["channel"])
    np.testing.assert_array_equal(a.entries, b.entries)


def test_perturb_zero_is_identity():
    g = GainMatrix(np.full((3, 3), 2.0), np.zeros(3, dtype=int))
    assert perturb(g, ErrorModel(0.0), np.random.default_rng(0)) is g


@given(st.floats(0.0, 0.99), st.integers(0, 2**32 - 1))
def test_perturb_bounds(hw, seed):
    g = GainMatrix(np.full((4, 4), 1.0), np.zeros(4, dtype=int))
    e = perturb(g, ErrorModel(hw), np.random.default_rng(seed)).entries
    assert np.all(e >= 1.0 - hw) and np.all(e <= 1.0 + hw)


def test_perturb_unbiased():
    g = GainMatrix(np.ones((100, 100)), np.zeros(100, dtype=int))
    rng = np.random.default_rng(8)
    ratios = np.stack([perturb(g, ErrorModel(0.2), rng).entries for _ in range(10)])
    assert ratios.min() >= 0.8 and ratios.max() <= 1.2
    assert ratios.mean() == pytest.approx(1.0, abs=0.003)


@pytest.mark.parametrize("hw", [-0.1, 1.0])
def test_error_model_range(hw):
    with pytest.raises(ValueError):
        ErrorModel(hw)


def test_csv_roundtrip(tmp_path):
    geo = place_uniform(5, 5000.0, 5000.0, np.random.default_rng(1))
    g = build_gain_matrix(geo, np.random.default_rng(2))
    g.to_csv(tmp_path / "g.csv")
    np.testing.assert_array_equal(load_csv(tmp_path / "g.csv"), g.entries)
