"""
簇状毫米波信道：阵列响应、相干时间、AR(1) 小尺度衰落
"""

import math

import numpy as np
from loguru import logger
from numpy import ndarray

from .config import GeometryConfig, TimingConfig
from .exceptions import ConfigurationError
from .models import (
    AngleSet,
    ChannelRealization,
    ClusterGeometry,
    CoherenceParams,
    FadingState,
)
from .utils import complex_normal


def _phase_vector(nu: ndarray, length: int) -> ndarray:
    """
    c(ν) = [1, e^{jπν}, ..., e^{jπ(P-1)ν}]，ν 可为任意形状，结果追加一维
    """
    return np.exp(1j * np.pi * np.multiply.outer(nu, np.arange(length)))


def steering_vector(theta, phi, n_rx: int) -> ndarray:
    """
    半波长间距 UPA 的阵列响应 c(sinθ·cosφ) ⊗ c(cosθ)

    theta/phi 可以是同形状的数组，结果形状为 theta.shape + (n_rx,)

    :raise ConfigurationError: n_rx 不是平方数
    """
    side = math.isqrt(n_rx) if n_rx > 0 else 0
    if n_rx < 1 or side * side != n_rx:
        raise ConfigurationError(f"UPA 天线数必须是平方数，当前为 {n_rx}")

    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    outer = _phase_vector(np.sin(theta) * np.cos(phi), side)
    inner = _phase_vector(np.cos(theta), side)
    # 批量 Kronecker 积
    kron = outer[..., :, None] * inner[..., None, :]
    return kron.reshape(theta.shape + (n_rx,))


def coherence_params(timing: TimingConfig, velocity: float) -> CoherenceParams:
    """
    由相对速度计算相干时间与 AR 相关系数 r

    :param velocity: 相对速度 (m/s)
    :raise ConfigurationError: 速度非正，或 K_max = 0（速度相对于符号时长过高）
    """
    if not velocity > 0:
        raise ConfigurationError(f"相对速度必须为正，当前为 {velocity}")

    coherence_time = 0.432 * (timing.speed_of_light / velocity) / timing.carrier_freq
    symbol_duration = timing.dft_size * (1 + timing.guard_fraction) / timing.sampling_rate
    k_max = math.floor(coherence_time / symbol_duration)
    if k_max < 1:
        raise ConfigurationError(
            f"速度 {velocity} m/s 过高: T_c={coherence_time:.3e}s 小于符号时长 "
            f"T_s={symbol_duration:.3e}s (K_max=0)"
        )

    r = math.exp(math.log(0.5) / k_max)
    return CoherenceParams(coherence_time, symbol_duration, k_max, r)


def kmh_to_ms(velocity_kmh: float) -> float:
    return velocity_kmh / 3.6


def draw_angles(geom: GeometryConfig, rng: np.random.Generator) -> AngleSet:
    """
    生成到达角：每个 (簇, 用户) 的中心角均匀分布于 [0,π)×[0,2π)，
    簇内射线叠加拉普拉斯偏移（标准差 ray_angle_spread_deg），角度在 K 个时隙内固定
    """
    L, C, M = geom.num_clusters, geom.rays_per_cluster, geom.num_users
    center_theta = rng.uniform(0.0, np.pi, size=(L, 1, M))
    center_phi = rng.uniform(0.0, 2 * np.pi, size=(L, 1, M))

    # Laplace(0, b) 的标准差为 √2·b
    scale = np.deg2rad(geom.ray_angle_spread_deg) / np.sqrt(2)
    theta = center_theta + rng.laplace(0.0, scale, size=(L, C, M))
    phi = center_phi + rng.laplace(0.0, scale, size=(L, C, M))
    return AngleSet(theta=theta, phi=phi)


def build_geometry(geom: GeometryConfig, angles: AngleSet) -> ClusterGeometry:
    """
    预计算所有 (l, c, m) 的阵列响应，堆叠为 (L, C, N_RX, M)
    """
    expected = (geom.num_clusters, geom.rays_per_cluster, geom.num_users)
    if angles.theta.shape != expected or angles.phi.shape != expected:
        raise ConfigurationError(
            f"角度数组形状 {angles.theta.shape} 与几何配置 {expected} 不一致"
        )
    if not (np.all(np.isfinite(angles.theta)) and np.all(np.isfinite(angles.phi))):
        raise ConfigurationError("到达角必须是有限值")

    steering = steering_vector(angles.theta, angles.phi, geom.num_rx_antennas)
    return ClusterGeometry(
        config=geom, angles=angles, steering=np.moveaxis(steering, -1, -2)
    )


def init_fading(geom: GeometryConfig, rng: np.random.Generator) -> FadingState:
    """
    σ[0] ~ CN(0, 1)，形状 (L, C, M)
    """
    shape = (geom.num_clusters, geom.rays_per_cluster, geom.num_users)
    return FadingState(sigma=complex_normal(rng, shape), slot_index=0)


def evolve_fading(state: FadingState, r: float, rng: np.random.Generator) -> FadingState:
    """
    σ[k] = r·σ[k-1] + √(1-r²)·ω[k]，ω ~ CN(0, 1)

    即使 r = 1 也会消耗同样数量的随机数，保证不同速度之间共享随机数
    """
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"相关系数 r 必须位于 [0, 1]，当前为 {r}")
    innovation = complex_normal(rng, state.sigma.shape)
    sigma = r * state.sigma + np.sqrt(1.0 - r * r) * innovation
    return FadingState(sigma=sigma, slot_index=state.slot_index + 1)


def assemble_raw_channel(geometry: ClusterGeometry, state: FadingState) -> ndarray:
    """
    h́_m = Σ_l Σ_c σ_{l,c,m}/√(L·C) · a(θ_{l,c,m}, φ_{l,c,m})，结果为 (..., N_RX, M)

    σ 可以带有前置批量维度 (..., L, C, M)
    """
    L, C = geometry.config.num_clusters, geometry.config.rays_per_cluster
    return np.einsum("...lcm,lcnm->...nm", state.sigma, geometry.steering) / np.sqrt(L * C)


def generate_realization(
    geometry: ClusterGeometry, r: float, num_slots: int, rng: np.random.Generator
) -> ChannelRealization:
    """
    生成 K 个时隙的天线域信道及其衰落轨迹
    """
    state = init_fading(geometry.config, rng)
    trajectory = [state]
    for _ in range(1, num_slots):
        state = evolve_fading(state, r, rng)
        trajectory.append(state)

    sigma = np.stack([s.sigma for s in trajectory])
    raw = assemble_raw_channel(geometry, FadingState(sigma=sigma))
    logger.debug(f"已生成信道实现: K={num_slots}, r={r:.6f}")
    return ChannelRealization(raw_channels=raw, fading=trajectory)
