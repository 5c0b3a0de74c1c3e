import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from verhulstpc.linkmath import (
    achieved_rate, cir, cir_targets, class_cir_target, interference, snir, spreading_factor,
)
from verhulstpc.scenario import RadioConstants, UserClass

RADIO = RadioConstants()
CLASSES = (UserClass(1, 30e3), UserClass(2, 120e3), UserClass(3, 240e3))


def test_cir_two_users_no_noise():
    g = np.array([[1.0, 0.5], [0.5, 1.0]])
    assert cir([1.0, 1.0], g, 0.0, i=0) == pytest.approx(2.0)


def test_cir_three_users_with_noise():
    g = np.array([[1.0, 0.1, 0.1], [0.1, 1.0, 0.1], [0.1, 0.1, 1.0]])
    assert cir([1.0, 0.5, 0.5], g, 0.01, i=0) == pytest.approx(1.0 / 0.11)
    assert cir([1.0, 0.5, 0.5], g, 0.01, i=0) == pytest.approx(9.090909090909092)


def test_zero_powers_give_zero_cir():
    g = np.array([[1.0, 0.1], [0.1, 1.0]])
    np.testing.assert_array_equal(cir([0.0, 0.0], g, 1e-3), [0.0, 0.0])
    np.testing.assert_allclose(interference([0.0, 0.0], g, 1e-3), [1e-3, 1e-3])


def test_interference_uses_other_users_power():
    g = np.array([[1.0, 0.2], [0.3, 1.0]])
    np.testing.assert_allclose(interference([1.0, 2.0], g, 0.0), [0.4, 0.3])


def test_snir_and_rate():
    assert snir(0.0196, 128) == pytest.approx(2.5088)
    gamma = 30e3 * RADIO.target_snr / RADIO.chip_rate
    assert snir(gamma, 128) == pytest.approx(RADIO.target_snr)
    assert RADIO.target_snr == pytest.approx(2.5118864315)
    assert achieved_rate(gamma, RADIO.target_snr, RADIO.chip_rate) == pytest.approx(30e3)


def test_spreading_factor():
    np.testing.assert_allclose(spreading_factor([30e3, 120e3, 240e3], 3.84e6), [128, 32, 16])


def test_class_targets():
    t = class_cir_target([30e3, 120e3, 240e3], RADIO)
    np.testing.assert_allclose(t, [0.019624, 0.078497, 0.156987], rtol=1e-4)
    assert class_cir_target(RADIO.chip_rate, RADIO, "shannon") == pytest.approx(1.0)
    with pytest.raises(ValueError):
        class_cir_target(30e3, RADIO, "bogus")


def test_per_user_targets():
    t = cir_targets(CLASSES, (1, 1, 3), RADIO)
    np.testing.assert_allclose(t.per_user, class_cir_target([30e3, 30e3, 240e3], RADIO))
    assert t.mode == "spreading_factor"


def test_batched_cir_matches_loop():
    rng = np.random.default_rng(0)
    g = rng.uniform(0.01, 1.0, (5, 4, 4))
    p = rng.uniform(0.01, 1.0, (5, 4))
    batched = cir(p, g, 0.01)
    for t in range(5):
        np.testing.assert_allclose(batched[t], cir(p[t], g[t], 0.01))


gains = arrays(float, (4, 4), elements=st.floats(1e-6, 1.0))
powers = arrays(float, 4, elements=st.floats(1e-6, 1.0))


@given(gains, powers, st.floats(1e-3, 1e3))
def test_cir_scale_covariant(g, p, c):
    # scaling every power and the noise by c leaves the CIR unchanged
    np.testing.assert_allclose(cir(c * p, g, c * 1e-3), cir(p, g, 1e-3), rtol=1e-9)


@given(gains, powers, st.floats(1.01, 10.0))
def test_cir_increasing_in_own_power(g, p, c):
    q = p.copy()
    q[0] *= c
    before, after = cir(p, g, 1e-3), cir(q, g, 1e-3)
    assert after[0] > before[0]
    assert np.all(after[1:] <= before[1:])
