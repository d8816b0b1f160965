from dataclasses import dataclass
from typing import Callable

import numpy as np
import pytest
from numpy import ndarray

from icc_mmwave_sim.beamforming import (
    beam_array_responses,
    beam_channels,
    build_combiner,
    second_order_stats,
)
from icc_mmwave_sim.channel import build_geometry, draw_angles, generate_realization
from icc_mmwave_sim.config import ExperimentConfig, GeometryConfig, build_config
from icc_mmwave_sim.icc_signal import generate_frame, synthesize_rx
from icc_mmwave_sim.models import (
    ClusterGeometry,
    Combiner,
    FrameData,
    PowerSplit,
    SecondOrderStats,
    WindowSchedule,
)
from icc_mmwave_sim.receiver import build_schedule


@dataclass
class Scenario:
    geometry: ClusterGeometry
    combiner: Combiner
    channel: ndarray
    """波束域真实信道 (K, N, M)"""
    stats: SecondOrderStats
    schedule: WindowSchedule
    split: PowerSplit
    frame: FrameData
    received: ndarray


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def geometry_config() -> GeometryConfig:
    return GeometryConfig()


@pytest.fixture
def small_config() -> ExperimentConfig:
    return build_config(
        {
            "channel": {"num_slots": 32},
            "sweep": {"snr_db": [10.0], "velocity_kmh": [10.0], "trials": 2},
        }
    )


@pytest.fixture
def make_scenario() -> Callable[..., Scenario]:
    def _make(
        r: float = 0.999,
        noise_power: float = 0.01,
        computing_power: float = 0.01,
        num_slots: int = 32,
        num_beams: int = 8,
        window: tuple[int, int, int] = (8, 3, 6),
        seed: int = 7,
        static: bool = False,
    ) -> Scenario:
        rng = np.random.default_rng(seed)
        geom = GeometryConfig()
        geometry = build_geometry(geom, draw_angles(geom, rng))
        realization = generate_realization(geometry, 1.0 if static else r, num_slots, rng)
        combiner = build_combiner(realization.raw_channels[0], num_beams)
        channel = beam_channels(combiner, realization).beam_channels
        schedule = build_schedule(num_slots, *window)
        stats = second_order_stats(
            beam_array_responses(combiner, geometry), r, range(schedule.max_lag + 1)
        )
        split = PowerSplit(1.0 - computing_power, computing_power, noise_power)
        frame = generate_frame(geom.num_users, num_slots, split, rng)
        received = synthesize_rx(channel, frame.transmit, noise_power, rng)
        return Scenario(
            geometry=geometry,
            combiner=combiner,
            channel=channel,
            stats=stats,
            schedule=schedule,
            split=split,
            frame=frame,
            received=received,
        )

    return _make
