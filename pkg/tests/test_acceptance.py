"""
蒙特卡洛规模的趋势检查，耗时数十分钟，默认不运行（pytest -m slow）
"""

import math

import numpy as np
import pytest

from icc_mmwave_sim.config import build_config
from icc_mmwave_sim.manager import SimulationManager
from icc_mmwave_sim.receiver import JccctReceiver

pytestmark = pytest.mark.slow

BITS_PER_TRIAL = 128 * 2 * 2
# 单侧 95% 分位数
Z_95 = 1.645


def _sweep(snr_db, velocity_kmh, modes, trials=500):
    config = build_config(
        {
            "sweep": {
                "snr_db": snr_db,
                "velocity_kmh": velocity_kmh,
                "modes": modes,
                "trials": trials,
                "workers": 4,
            }
        }
    )
    records = SimulationManager(config).run_sweep()
    return {(r.snr_db, r.velocity_kmh, r.mode): r for r in records}


def _ber_margin(first, second) -> float:
    """
    两个汇总 BER 之差在 95% 置信下允许的统计波动
    """
    variance = sum(r.ber * (1 - r.ber) / (r.trials_used * BITS_PER_TRIAL) for r in (first, second))
    return Z_95 * math.sqrt(variance) + 1e-6


def test_static_noiseless_known_channel_is_error_free(make_scenario):
    for seed in range(100):
        scenario = make_scenario(
            r=1.0, static=True, noise_power=1e-6, computing_power=0.0, num_slots=128, seed=seed
        )
        receiver = JccctReceiver(
            scenario.stats, scenario.schedule, scenario.split, 8, 0.5, known_channel=scenario.channel
        )
        output = receiver.run(scenario.received, scenario.channel[0])
        assert np.array_equal(output.bits, scenario.frame.bits)


def test_ber_trends_at_low_velocity():
    snrs = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]
    records = _sweep(snrs, [10.0], ["full", "genie-channel"])
    full = [records[(snr, 10.0, "full")] for snr in snrs]
    genie = [records[(snr, 10.0, "genie-channel")] for snr in snrs]

    for a, b in zip(full, full[1:]):
        assert b.ber <= a.ber + _ber_margin(a, b)

    # 已知信道的 BER 首次低于 1e-3 处，JCDE 与其相差不超过一个数量级
    for f, g in zip(full, genie):
        if g.ber < 1e-3:
            assert f.ber <= max(10 * g.ber, 1e-3)
            break


def test_known_channel_ber_bounds_jcde_at_every_velocity():
    snrs = [0.0, 10.0, 20.0, 30.0]
    velocities = [10.0, 20.0, 30.0, 40.0]
    records = _sweep(snrs, velocities, ["full", "genie-channel"], trials=200)
    for snr in snrs:
        for velocity in velocities:
            full = records[(snr, velocity, "full")]
            genie = records[(snr, velocity, "genie-channel")]
            assert genie.ber <= full.ber + _ber_margin(full, genie)


def test_channel_nmse_trends():
    records = _sweep([10.0, 20.0, 30.0], [10.0, 40.0], ["full"])
    at_low_speed = [records[(snr, 10.0, "full")].nmse_channel_db for snr in (10.0, 20.0, 30.0)]
    assert at_low_speed[0] > at_low_speed[1] > at_low_speed[2]
    for snr in (10.0, 20.0, 30.0):
        assert records[(snr, 40.0, "full")].nmse_channel_db > records[(snr, 10.0, "full")].nmse_channel_db


def test_aircomp_tracks_genie_baselines():
    snrs = [15.0, 20.0, 25.0, 30.0]
    records = _sweep(snrs, [10.0], ["full", "genie-symbols", "genie-both"])
    full = [records[(snr, 10.0, "full")].nmse_aircomp_db for snr in snrs]
    symbols = [records[(snr, 10.0, "genie-symbols")].nmse_aircomp_db for snr in snrs]
    both = [records[(snr, 10.0, "genie-both")].nmse_aircomp_db for snr in snrs]

    for f, s, b in zip(full, symbols, both):
        # 与同样使用估计信道的基线相差不超过 3 dB
        assert f <= s + 3.0
        assert b <= f
    for a, b in zip(full, full[1:]):
        assert b <= a + 0.5

    # 噪声主导时接近真值基线；高 SNR 时两者之差由信道估计误差 (H - Ĥ)·d 决定
    assert full[0] <= both[0] + 3.0
