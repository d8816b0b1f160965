from typing import Iterable, Mapping

import numpy as np
from loguru import logger
from numpy import ndarray

from ..models import SecondOrderStats, SoftChannelEstimate, WindowSchedule


def anchor_select(mse_table: Mapping[int, float], candidates: Iterable[int]) -> int:
    """
    在候选时隙中选出信道估计总 MSE 最小的时隙，相等时取最小的 k

    :param mse_table: 时隙 -> Σ_{n,m} ψ̂ʰ_{nm,k}
    :param candidates: 候选时隙
    """
    ordered = sorted(candidates)
    if not ordered:
        raise RuntimeError("锚点候选集合为空")
    return min(ordered, key=lambda k: (mse_table[k], k))


def predict_window(
    tau: int,
    schedule: WindowSchedule,
    stats: SecondOrderStats,
    estimate: SoftChannelEstimate,
    h0: ndarray,
) -> tuple[list[int], int]:
    """
    窗口开始前的信道预测，直接更新 estimate

    τ = 1 时以已知的 H[0] 为条件：Ĥ_k = r^k·H[0]，协方差为 Ω_{m,k}；
    τ > 1 时在上个窗口已估计的时隙中选出 MSE 最小的 k_τ，只更新 k > k_τ 的时隙

    :return: (被更新的时隙, 锚点时隙)
    """
    window = schedule.window(tau)
    r = stats.r

    if tau == 1:
        slots = np.asarray(window)
        estimate.mean[slots] = (r ** slots)[:, None, None] * h0
        estimate.cov[slots] = stats.omega_users(slots)
        return list(window), 0

    new = set(schedule.new(tau))
    candidates = [k for k in window if k not in new]
    if not candidates:
        # D = 1 时窗口互不重叠，改用上一个窗口的时隙
        candidates = list(schedule.window(tau - 1))

    summed = estimate.coeff_mse[candidates].sum(axis=(1, 2))
    anchor = anchor_select(dict(zip(candidates, summed)), candidates)

    targets = [k for k in window if k > anchor]
    if targets:
        lags = np.asarray(targets) - anchor
        gain = r ** lags
        estimate.mean[targets] = gain[:, None, None] * estimate.mean[anchor]
        estimate.cov[targets] = (
            stats.omega_users(lags) + (gain**2)[:, None, None, None] * estimate.cov[anchor]
        )

    logger.debug(f"窗口 {tau}: 锚点 k_τ={anchor}，预测了 {len(targets)} 个时隙")
    return targets, anchor
