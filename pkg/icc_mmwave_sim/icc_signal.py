"""
通信与计算叠加信号的生成与接收信号合成
"""

import numpy as np
from numpy import ndarray

from .models import FrameData, PowerSplit
from .utils import complex_normal

BITS_PER_SYMBOL = 2


def qpsk_modulate(bits: ndarray, data_power: float) -> ndarray:
    """
    格雷映射 (b0, b1) -> (Re 符号, Im 符号)，0 映射为 +，1 映射为 -

    :param bits: (..., 2) 的 0/1 数组
    :param data_power: 符号能量 E_d
    """
    amplitude = np.sqrt(data_power / 2)
    signs = 1 - 2 * np.asarray(bits, dtype=int)
    return amplitude * (signs[..., 0] + 1j * signs[..., 1])


def qpsk_demodulate(symbols: ndarray) -> ndarray:
    """
    按象限判决比特，实部或虚部恰为 0 时判为 0 比特
    """
    symbols = np.asarray(symbols)
    return np.stack([symbols.real < 0, symbols.imag < 0], axis=-1).astype(np.int8)


def generate_frame(
    num_users: int, num_slots: int, split: PowerSplit, rng: np.random.Generator
) -> FrameData:
    """
    生成一帧数据：QPSK 通信符号 d (能量 E_d) 与实高斯计算符号 s ~ N(0, E_c)

    预处理函数 ψ_m 为恒等映射，因此 x = d + s
    """
    bits = rng.integers(0, 2, size=(num_slots, num_users, BITS_PER_SYMBOL), dtype=np.int8)
    data = qpsk_modulate(bits, split.data_power)
    computing = np.sqrt(split.computing_power) * rng.standard_normal((num_slots, num_users))
    return FrameData(data=data, computing=computing, bits=bits)


def synthesize_rx(
    channel: ndarray, transmit: ndarray, noise_power: float, rng: np.random.Generator
) -> ndarray:
    """
    y = Σ_m h_m x_m + w，w ~ CN(0, N0·I_N)

    支持批量：channel (..., N, M)，transmit (..., M)。噪声以单位功率采样后缩放，
    不同 SNR 下共用同一组噪声样本

    :param noise_power: N0
    """
    if channel.shape[-1] != transmit.shape[-1]:
        raise ValueError(
            f"维度不一致: 信道有 {channel.shape[-1]} 个用户，发射向量长度为 {transmit.shape[-1]}"
        )
    clean = np.einsum("...nm,...m->...n", channel, transmit)
    noise = complex_normal(rng, clean.shape)
    return clean + np.sqrt(noise_power) * noise
