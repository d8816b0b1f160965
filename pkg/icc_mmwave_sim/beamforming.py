"""
准 SVD 接收合并器与有效信道的二阶统计量
"""

from typing import Iterable, Optional

import numpy as np
import scipy.linalg
from loguru import logger
from numpy import ndarray

from .exceptions import ConfigurationError
from .models import (
    BeamArrayResponses,
    ChannelRealization,
    ClusterGeometry,
    Combiner,
    SecondOrderStats,
)
from .utils import herm

RANK_TOLERANCE = 1e-10


def _fix_phase(vectors: ndarray) -> ndarray:
    """
    使每一列第一个非零元素为正实数，保证不同平台上的 SVD 结果一致
    """
    fixed = vectors.copy()
    for j in range(fixed.shape[1]):
        column = fixed[:, j]
        nonzero = np.flatnonzero(np.abs(column) > RANK_TOLERANCE)
        if nonzero.size:
            pivot = column[nonzero[0]]
            fixed[:, j] = column * (np.conj(pivot) / np.abs(pivot))
    return fixed


def build_combiner(h0_raw: ndarray, num_beams: int) -> Combiner:
    """
    F_RX = [U]_{:, 1:N}，U 为已知 H[0] 的左奇异向量（按奇异值降序）

    合并器在之后的所有时隙保持不变

    :param h0_raw: 天线域信道 (N_RX, M)
    :param num_beams: 波束数 N
    """
    n_rx = h0_raw.shape[0]
    if not 1 <= num_beams <= n_rx:
        raise ConfigurationError(f"波束数 N={num_beams} 必须位于 [1, N_RX={n_rx}]")
    if not np.all(np.isfinite(h0_raw)):
        raise ConfigurationError("H[0] 含有非有限值")

    # LAPACK 已按奇异值降序返回
    u, singular_values, _ = scipy.linalg.svd(h0_raw, full_matrices=True)
    u = _fix_phase(u)

    scale = singular_values[0] if singular_values.size else 0.0
    rank = int(np.sum(singular_values > RANK_TOLERANCE * max(scale, 1.0)))
    if rank < num_beams:
        logger.debug(
            f"H[0] 的秩 ({rank}) 小于波束数 ({num_beams})，剩余 {num_beams - rank} 列使用正交补"
        )

    return Combiner(matrix=u[:, :num_beams], singular_values=singular_values)


def effective_channel(combiner: Combiner, h_raw: ndarray) -> ndarray:
    """
    H = F_RXᴴ·Ĥraw，支持批量 (..., N_RX, M)
    """
    if h_raw.shape[-2] != combiner.matrix.shape[0]:
        raise ValueError(
            f"维度不一致: 信道有 {h_raw.shape[-2]} 根天线，合并器为 {combiner.matrix.shape[0]}"
        )
    return herm(combiner.matrix) @ h_raw


def beam_channels(combiner: Combiner, realization: ChannelRealization) -> ChannelRealization:
    """
    填充波束域信道，返回新的 ChannelRealization
    """
    return ChannelRealization(
        raw_channels=realization.raw_channels,
        fading=realization.fading,
        beam_channels=effective_channel(combiner, realization.raw_channels),
    )


def beam_array_responses(combiner: Combiner, geometry: ClusterGeometry) -> BeamArrayResponses:
    """
    A_{l,c} = F_RXᴴ·Áraw_{l,c}，形状 (L, C, N, M)
    """
    return BeamArrayResponses(responses=effective_channel(combiner, geometry.steering))


def second_order_stats(
    beam: BeamArrayResponses, r: float, lags: Optional[Iterable[int]] = None
) -> SecondOrderStats:
    """
    计算 θ_nm、Θ 以及各滞后下的 ω/Ω 老化统计量

    :param beam: 波束域阵列响应
    :param r: AR 相关系数
    :param lags: 需要的滞后集合，统计量预计算到其中的最大值
    """
    responses = beam.responses
    num_clusters, num_rays = responses.shape[:2]

    theta = np.sum(np.abs(responses) ** 2, axis=(0, 1)) / num_rays
    # Σ_l Σ_c A[:, m] A[:, m]ᴴ / C_l，逐用户 (M, N, N)
    theta_users = np.einsum("lcnm,lcpm->mnp", responses, responses.conj()) / num_rays
    theta_matrix = theta_users.sum(axis=0)

    max_lag = max(lags) if lags is not None else 0
    k = np.arange(max_lag + 1)
    aging = (1.0 - r ** (2 * k)) / num_clusters

    return SecondOrderStats(
        theta=theta,
        theta_users=theta_users,
        theta_matrix=theta_matrix,
        r=r,
        aging=aging,
    )
