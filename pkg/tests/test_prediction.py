import numpy as np
import pytest
from helpers import random_complex, random_hermitian_psd

from icc_mmwave_sim.beamforming import beam_array_responses, effective_channel, second_order_stats
from icc_mmwave_sim.channel import assemble_raw_channel, evolve_fading
from icc_mmwave_sim.models import FadingState, SoftChannelEstimate
from icc_mmwave_sim.receiver import anchor_select, build_schedule, predict_window


def test_anchor_select_argmin():
    assert anchor_select({4: 0.3, 5: 0.1, 6: 0.2}, [4, 5, 6]) == 5
    assert anchor_select({9: 1.0}, [9]) == 9


def test_anchor_select_ties_to_smallest_slot():
    assert anchor_select({6: 0.1, 4: 0.1}, [6, 4]) == 4


def test_anchor_select_rejects_empty():
    with pytest.raises(RuntimeError):
        anchor_select({}, [])


def test_first_window_predicts_from_known_channel(make_scenario):
    scenario = make_scenario(r=0.99)
    estimate = SoftChannelEstimate.empty(32, 8, 2)
    h0 = scenario.channel[0]
    targets, anchor = predict_window(1, scenario.schedule, scenario.stats, estimate, h0)

    assert targets == list(range(8))
    assert anchor == 0
    for k in targets:
        np.testing.assert_allclose(estimate.mean[k], 0.99**k * h0)
        np.testing.assert_allclose(estimate.cov[k], scenario.stats.omega_users(k))
    np.testing.assert_array_equal(estimate.cov[0], 0)
    np.testing.assert_array_equal(estimate.mean[8:], 0)


def test_first_window_on_static_channel(make_scenario):
    scenario = make_scenario(r=1.0, static=True)
    estimate = SoftChannelEstimate.empty(32, 8, 2)
    predict_window(1, scenario.schedule, scenario.stats, estimate, scenario.channel[0])
    for k in range(8):
        np.testing.assert_allclose(estimate.mean[k], scenario.channel[0])
    np.testing.assert_array_equal(estimate.cov[:8], 0)


def test_later_window_propagates_from_anchor(make_scenario, rng):
    scenario = make_scenario(r=0.98)
    stats = scenario.stats
    estimate = SoftChannelEstimate.empty(32, 8, 2)
    estimate.mean[:] = random_complex(rng, 32, 8, 2)
    for k in range(32):
        for m in range(2):
            estimate.cov[k, m] = random_hermitian_psd(rng, 8, scale=1.0)
    # 令 k = 5 的 MSE 最小
    estimate.cov[5] *= 0.01
    before = estimate.copy()

    targets, anchor = predict_window(2, scenario.schedule, stats, estimate, scenario.channel[0])

    assert anchor == 5
    assert targets == list(range(6, 16))
    np.testing.assert_array_equal(estimate.mean[:6], before.mean[:6])
    np.testing.assert_array_equal(estimate.cov[:6], before.cov[:6])
    np.testing.assert_array_equal(estimate.mean[16:], before.mean[16:])
    for k in targets:
        lag = k - 5
        np.testing.assert_allclose(estimate.mean[k], 0.98**lag * before.mean[5])
        np.testing.assert_allclose(
            estimate.cov[k], stats.omega_users(lag) + 0.98 ** (2 * lag) * before.cov[5]
        )


def test_anchor_at_window_end_changes_nothing(make_scenario, rng):
    scenario = make_scenario()
    estimate = SoftChannelEstimate.empty(32, 8, 2)
    estimate.mean[:] = random_complex(rng, 32, 8, 2)
    estimate.cov[:] = np.eye(8)
    estimate.cov[7] = 0.0
    window = scenario.schedule.window(2)
    before = estimate.copy()

    targets, anchor = predict_window(2, scenario.schedule, scenario.stats, estimate, scenario.channel[0])
    assert anchor == 7
    assert targets == [k for k in window if k > 7]
    np.testing.assert_array_equal(estimate.mean[:8], before.mean[:8])


def test_disjoint_windows_anchor_on_previous_window(make_scenario, rng):
    scenario = make_scenario(window=(8, 1, 4))
    estimate = SoftChannelEstimate.empty(32, 8, 2)
    estimate.cov[:] = np.eye(8)
    estimate.cov[3] = 0.0
    estimate.mean[3] = random_complex(rng, 8, 2)

    targets, anchor = predict_window(2, scenario.schedule, scenario.stats, estimate, scenario.channel[0])
    assert anchor == 3
    assert targets == list(range(8, 16))
    np.testing.assert_allclose(estimate.mean[15], scenario.stats.r**12 * estimate.mean[3])


def test_prediction_is_conditional_mean_of_ar_evolution(make_scenario):
    """
    以 H[0] 为条件，真实 AR 演化下 H[k] 的均值应为 r^k·H[0]
    """
    scenario = make_scenario(r=0.9)
    geometry = scenario.geometry
    rng = np.random.default_rng(77)
    sigma0 = random_complex(rng, 4, 15, 2)
    h0 = effective_channel(scenario.combiner, assemble_raw_channel(geometry, FadingState(sigma0)))

    batch = 10_000
    lag = 4
    state = FadingState(sigma=np.broadcast_to(sigma0, (batch,) + sigma0.shape).copy())
    for _ in range(lag):
        state = evolve_fading(state, 0.9, rng)
    hk = effective_channel(scenario.combiner, assemble_raw_channel(geometry, state))

    stats = second_order_stats(beam_array_responses(scenario.combiner, geometry), 0.9, range(8))
    schedule = build_schedule(32, 8, 3, 6)
    estimate = SoftChannelEstimate.empty(32, 8, 2)
    predict_window(1, schedule, stats, estimate, h0)

    mean = hk.mean(axis=0)
    se = np.sqrt(stats.omega(lag) / batch)
    assert np.all(np.abs(mean.real - estimate.mean[lag].real) <= 4 * se + 1e-12)
    assert np.all(np.abs(mean.imag - estimate.mean[lag].imag) <= 4 * se + 1e-12)
    # 预测误差的方差即 ω
    residual = np.mean(np.abs(hk - estimate.mean[lag]) ** 2, axis=0)
    np.testing.assert_allclose(residual, estimate.coeff_mse[lag], rtol=0.1)
