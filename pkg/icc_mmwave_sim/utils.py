from typing import Literal

import numpy as np
from loguru import logger
from numpy import ndarray

REGULARIZATION = 1e-12
"""奇异矩阵求解时添加的对角正则项"""
NMSE_FLOOR_DB = -300.0
"""NMSE 的 dB 下限（误差恰好为 0 时使用）"""

StreamName = Literal["geometry", "fading", "symbols", "noise"]

_STREAM_IDS: dict[str, int] = {"geometry": 0, "fading": 1, "symbols": 2, "noise": 3}


def make_rng(seed: int, trial: int, stream: StreamName) -> np.random.Generator:
    """
    为指定试验生成独立的具名随机数流

    基于计数器的 Philox 生成器，流之间互不影响：新增一个消费者不会改变其他流的取值

    :param seed: 全局种子 (64 位)
    :param trial: 试验编号
    :param stream: 流名称
    """
    if stream not in _STREAM_IDS:
        raise ValueError(f"未知的随机数流: {stream}")
    seed_seq = np.random.SeedSequence(
        entropy=seed, spawn_key=(trial, _STREAM_IDS[stream])
    )
    return np.random.Generator(np.random.Philox(seed_seq))


def complex_normal(
    rng: np.random.Generator, shape: tuple[int, ...] | int, variance: float = 1.0
) -> ndarray:
    """
    圆对称复高斯采样 CN(0, variance)
    """
    scale = np.sqrt(variance / 2)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def hermitize(matrix: ndarray) -> ndarray:
    """
    取 (X + Xᴴ)/2，支持批量矩阵 (..., N, N)
    """
    return 0.5 * (matrix + np.conj(np.swapaxes(matrix, -1, -2)))


def herm(matrix: ndarray) -> ndarray:
    return np.conj(np.swapaxes(matrix, -1, -2))


def solve_regularized(a: ndarray, b: ndarray, context: str) -> ndarray:
    """
    批量求解 a·x = b，奇异时添加 1e-12·I 后重试

    :param a: (..., N, N) 系数矩阵
    :param b: (..., N, P) 右端项
    :param context: 日志中标识调用方
    """
    try:
        return np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        logger.warning(f"{context}: 矩阵奇异，已添加 {REGULARIZATION}·I 正则项")
        eye = np.eye(a.shape[-1], dtype=a.dtype)
        return np.linalg.solve(a + REGULARIZATION * eye, b)


def inv_regularized(a: ndarray, context: str) -> ndarray:
    eye = np.broadcast_to(np.eye(a.shape[-1], dtype=complex), a.shape)
    return solve_regularized(a, eye, context)


def to_db(ratio: float) -> float:
    """
    线性比值转换为 dB，比值为 0 时返回 NMSE_FLOOR_DB
    """
    if ratio <= 0:
        return NMSE_FLOOR_DB
    return max(10.0 * float(np.log10(ratio)), NMSE_FLOOR_DB)


def snr_to_noise(snr_db: float) -> float:
    """
    发射总功率为 1 时，由 SNR(dB) 得到每个接收维度的噪声功率 N0
    """
    return float(10.0 ** (-snr_db / 10.0))


def parse_float_list(text: str) -> list[float]:
    """
    解析逗号分隔的浮点数列表，例如 ``"0,5,10"``
    """
    items = [item.strip() for item in text.split(",") if item.strip()]
    return [float(item) for item in items]
