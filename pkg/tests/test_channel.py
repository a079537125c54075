import math

import numpy as np
import pytest
from hypothesis import example, given, strategies as st
from scipy import stats

from cvnetsim.channel import (
    ChannelConfig,
    FadingSource,
    LinkState,
    PathLossParams,
    RadioProfile,
    blocked_mask,
    compute_sinr,
    dbm_to_mw,
    friis_received_power,
    is_blocked,
    leakage_interference,
    los_probability,
    mmwave_path_loss,
    nakagami_fading_draw,
    thermal_noise_dbm,
    update_link,
)
from cvnetsim.engine import Simulator
from cvnetsim.mobility import Position

C = 299_792_458.0
P = PathLossParams()


# blockage ---------------------------------------------------------------

def test_blocker_on_segment():
    assert is_blocked(Position(0, 10), Position(0, -10), [Position(0, 0)], 2.0)


def test_blocker_far_from_segment():
    assert not is_blocked(Position(0, 10), Position(0, -10), [Position(100, 0)], 2.0)


def test_no_other_vehicles():
    assert not is_blocked(Position(0, 10), Position(0, -10), [], 2.0)


def test_blocker_beyond_endpoint_does_not_count():
    assert not is_blocked(Position(0, 10), Position(0, -10), [Position(0, -12)], 2.0)


def test_blocker_at_half_width_edge():
    tx, rx = Position(0, 10), Position(0, -10)
    assert is_blocked(tx, rx, [Position(1.0, 0)], 2.0)
    assert not is_blocked(tx, rx, [Position(1.01, 0)], 2.0)


@given(st.lists(st.tuples(st.floats(-50, 50), st.floats(-20, 20)), min_size=1, max_size=12))
@example([(0.0, -7.478594318946415), (0.0, -7.478594318946415)])  # coincident vehicles
def test_vectorized_blockage_matches_scalar(points):
    xy = np.array(points, dtype=float)
    tx = np.array([3.0, -10.0])
    if np.any(np.all(xy == tx, axis=1)):
        return
    active = np.ones(len(xy), dtype=bool)
    mask = blocked_mask(tx, xy, active, 2.0)
    for i in range(len(xy)):
        others = [Position(*xy[k]) for k in range(len(xy)) if k != i]
        assert mask[i] == is_blocked(Position(*tx), Position(*xy[i]), others, 2.0)


def test_los_probability_is_one_up_close():
    assert los_probability(10.0) == pytest.approx(1.0)
    assert 0 < los_probability(200.0) < los_probability(50.0) < 1


# path loss --------------------------------------------------------------

def test_path_loss_intercept_at_one_metre():
    assert mmwave_path_loss(1.0, True, P) == pytest.approx(69.8)


def test_path_loss_los_10m():
    assert mmwave_path_loss(10.0, True, P) == pytest.approx(89.8, abs=1e-9)


def test_path_loss_nlos_100m():
    assert mmwave_path_loss(100.0, False, P) == pytest.approx(136.5, abs=1e-9)


def test_path_loss_clamps_below_one_metre():
    assert mmwave_path_loss(0.01, True, P) == mmwave_path_loss(1.0, True, P)


def test_path_loss_adds_shadowing():
    assert mmwave_path_loss(10.0, True, P, 3.0) == pytest.approx(92.8)


@given(st.floats(1.0, 5000.0), st.floats(0.0, 1000.0))
def test_path_loss_nlos_dominates_and_grows(d, extra):
    assert mmwave_path_loss(d, False, P) >= mmwave_path_loss(d, True, P)
    for los in (True, False):
        assert mmwave_path_loss(d + extra, los, P) >= mmwave_path_loss(d, los, P)


# Friis ------------------------------------------------------------------

def test_friis_zero_loss_point():
    lam = C / 5.9e9
    assert friis_received_power(20.0, 3.0, lam / (4 * math.pi), lam) == pytest.approx(23.0, abs=1e-12)


def test_friis_dsrc_100m():
    lam = C / 5.9e9
    assert lam == pytest.approx(0.05081, abs=1e-5)
    assert friis_received_power(20.0, 0.0, 100.0, lam) == pytest.approx(-67.87, abs=0.01)


def test_friis_dsrc_10m():
    lam = C / 5.9e9
    assert friis_received_power(20.0, 0.0, 10.0, lam) == pytest.approx(-47.87, abs=0.01)


@given(st.floats(0.1, 1e4))
def test_friis_doubling_distance(d):
    lam = C / 5.9e9
    drop = friis_received_power(20, 0, d, lam) - friis_received_power(20, 0, 2 * d, lam)
    assert drop == pytest.approx(20 * math.log10(2), abs=1e-9)


def test_friis_rejects_nonpositive_distance():
    with pytest.raises(ValueError):
        friis_received_power(20.0, 0.0, 0.0, 0.05)


# fading -----------------------------------------------------------------

@pytest.mark.parametrize("m", [1.0, 3.0])
def test_nakagami_moments(m):
    g = nakagami_fading_draw(m, Simulator(1).stream("fading"), size=1_000_000)
    assert np.all(g > 0)
    assert abs(g.mean() - 1.0) < 0.01
    assert abs(g.var() - 1.0 / m) < 0.02 / m


def test_nakagami_m1_is_exponential():
    g = nakagami_fading_draw(1.0, Simulator(2).stream("fading"), size=200_000)
    assert stats.kstest(g, "expon").pvalue > 0.01


def test_exponential_fit_p_values_are_uniform_across_seeds():
    # a level-1% test fails for 1% of seeds; what must hold is that the
    # p-values themselves look uniform
    ps = [stats.kstest(nakagami_fading_draw(1.0, Simulator(s).stream("fading"), size=20_000), "expon").pvalue
          for s in range(100)]
    assert stats.kstest(ps, "uniform").pvalue > 0.001


def test_nakagami_rejects_small_shape():
    with pytest.raises(ValueError):
        nakagami_fading_draw(0.3, Simulator(1).stream("fading"))


def test_fading_source_without_fading():
    src = FadingSource(math.inf, Simulator(1).stream("fading"))
    assert [src() for _ in range(5)] == [1.0] * 5


def test_fading_source_matches_direct_draws():
    src = FadingSource(3.0, Simulator(1).stream("fading"), block=16)
    direct = nakagami_fading_draw(3.0, Simulator(1).stream("fading"), size=16)
    np.testing.assert_allclose([src() for _ in range(16)], direct)


# SINR -------------------------------------------------------------------

def test_sinr_unit_ratio():
    assert compute_sinr(3.0, 1.0, 2.0) == pytest.approx(0.0)


def test_sinr_ratio_100():
    assert compute_sinr(1e-6, 0.0, 1e-8) == pytest.approx(20.0)


def test_thermal_noise_1ghz():
    assert thermal_noise_dbm(1e9, 5.0) == pytest.approx(-79.0)
    assert RadioProfile().noise_dbm == pytest.approx(-79.0)


def test_sinr_requires_positive_noise():
    with pytest.raises(ValueError):
        compute_sinr(1.0, 0.0, 0.0)


@given(st.floats(1e-12, 1.0), st.floats(0.0, 1.0), st.floats(1e-12, 1.0), st.floats(1.01, 100.0))
def test_sinr_monotonicity(m, i, o, k):
    base = compute_sinr(m, i, o)
    assert compute_sinr(m * k, i, o) > base
    assert compute_sinr(m, i + o * (k - 1), o) < base
    assert compute_sinr(m, i, o * k) < base


# link updates -------------------------------------------------------------

BS = Position(1000.0, -10.0)
NO_SHADOW = PathLossParams(shadowing_sigma_los=0.0, shadowing_sigma_nlos=0.0)
GEOMETRIC = ChannelConfig()


def test_stationary_link_is_stable():
    rx = Position(1050.0, 5.0)
    first = update_link(LinkState(), BS, rx, [], RadioProfile(), NO_SHADOW, GEOMETRIC, 1.3, 0)
    second = update_link(first, BS, rx, [], RadioProfile(), NO_SHADOW, GEOMETRIC, -0.4, 100)
    assert (first.los, first.path_loss, first.sinr) == (second.los, second.path_loss, second.sinr)


def test_blocker_flips_link_to_nlos():
    rx = Position(1000.0, 12.0)
    clear = update_link(LinkState(), BS, rx, [Position(1040.0, 1.0)], RadioProfile(), NO_SHADOW, GEOMETRIC, 0.0, 0)
    blocked = update_link(clear, BS, rx, [Position(1000.0, 1.0)], RadioProfile(), NO_SHADOW, GEOMETRIC, 0.0, 1)
    assert clear.los and not blocked.los
    assert blocked.path_loss == pytest.approx(mmwave_path_loss(22.0, False, P))


def test_no_leakage_means_sinr_equals_snr():
    prof = RadioProfile(leakage_factor=0.0)
    rx_mw = np.array([1e-3, 5e-4])
    interference = leakage_interference(rx_mw, np.array([[0.0, 1.0], [1.0, 0.0]]), prof.leakage_factor)
    link = update_link(LinkState(), BS, Position(1020.0, 5.0), [], prof, NO_SHADOW, GEOMETRIC, 0.0, 0,
                       interference_mw=float(interference[0]))
    snr = link.rx_power - prof.noise_dbm
    assert link.sinr == pytest.approx(snr)


def test_probabilistic_los_mode_uses_the_uniform_draw():
    prob = ChannelConfig(blockage_mode="probabilistic")
    rx = Position(1300.0, 5.0)
    p = float(los_probability(BS.distance(rx)))
    assert update_link(LinkState(), BS, rx, [], RadioProfile(), P, prob, 0.0, 0, los_uniform=p * 0.5).los
    assert not update_link(LinkState(), BS, rx, [], RadioProfile(), P, prob, 0.0, 0, los_uniform=min(1.0, p + 1e-3)).los


@given(st.integers(2, 12), st.data())
def test_interference_grows_with_scheduled_vehicles(n, data):
    rx = np.array(data.draw(st.lists(st.floats(1e-9, 1.0), min_size=n, max_size=n)))
    overlap = np.array(data.draw(st.lists(st.lists(st.floats(0, 1), min_size=n, max_size=n), min_size=n, max_size=n)))
    np.fill_diagonal(overlap, 0.0)
    fewer = overlap.copy()
    fewer[:, -1] = 0.0  # drop the last vehicle from every co-schedule
    assert np.all(leakage_interference(rx, overlap, 0.01) >= leakage_interference(rx, fewer, 0.01) - 1e-18)


def test_dbm_round_trip():
    assert dbm_to_mw(0.0) == 1.0
    assert dbm_to_mw(20.0) == pytest.approx(100.0)


def test_radio_profile_validation():
    with pytest.raises(ValueError):
        RadioProfile(leakage_factor=1.5)
    with pytest.raises(ValueError):
        RadioProfile(fading_m=0.2)
    assert RadioProfile().carrier_frequency == 73e9
    assert RadioProfile.dsrc().carrier_frequency == 5.9e9
