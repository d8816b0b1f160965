from typing import Optional

import numpy as np
from loguru import logger
from numpy import ndarray

from ..exceptions import NumericalFailure
from ..models import (
    BeliefWorkspace,
    PowerSplit,
    ReceiverOutput,
    SecondOrderStats,
    SoftChannelEstimate,
    SoftSymbolEstimate,
    WindowSchedule,
)
from .detection import (
    damp,
    data_combine,
    data_covariance,
    data_sic,
    hard_decide,
    qpsk_denoise,
)
from .estimation import chan_combine, chan_denoise, chan_noise_terms, chan_sic
from .prediction import predict_window


def _neighbor_table(
    schedule: WindowSchedule, tau: int
) -> tuple[ndarray, ndarray, ndarray, ndarray]:
    """
    将 S_{k,τ} ∪ {k} 排成定长表，最后一列为 k 自身

    :return: (slots, index (T, G+1), lag (T, G+1), 邻域掩码 (T, G+1))
    """
    slots = np.asarray(schedule.window(tau))
    width = schedule.neighborhood + 1
    index = np.repeat(slots[:, None], width, axis=1)
    mask = np.zeros(index.shape, dtype=bool)
    for row, k in enumerate(slots):
        neighbors = schedule.neighborhood_of(int(k), tau)
        index[row, : len(neighbors)] = neighbors
        mask[row, : len(neighbors)] = True
    lag = slots[:, None] - index
    return slots, index, lag, mask


def run_jcde(
    received: ndarray,
    tau: int,
    schedule: WindowSchedule,
    stats: SecondOrderStats,
    split: PowerSplit,
    symbols: SoftSymbolEstimate,
    channels: SoftChannelEstimate,
    prior: SoftChannelEstimate,
    iterations: int,
    damping: float,
    estimate_channel: bool = True,
    workspace: Optional[BeliefWorkspace] = None,
) -> tuple[SoftSymbolEstimate, SoftChannelEstimate]:
    """
    在窗口 K_τ 上执行 t_max 次 BiGaBP 迭代，原地更新 symbols 与 channels

    每次迭代先用上一轮的信道软副本更新所有用户的数据消息，
    再用新的软符号更新所有信道消息；最后一次迭代的合并集合包含 k 自身

    :param received: 所有时隙的接收信号 (K, N)
    :param prior: 信道预测给出的先验（去噪器使用）
    :param estimate_channel: 为 False 时只做数据检测（已知信道）
    :raise NumericalFailure: 出现非正 η 或非有限估计
    """
    workspace = workspace if workspace is not None else BeliefWorkspace()
    slots, index, lag, neighbor_mask = _neighbor_table(schedule, tau)
    self_column = np.zeros_like(neighbor_mask)
    self_column[:, -1] = True
    noise = split.effective_noise

    for t in range(1, iterations + 1):
        # 数据检测
        h = channels.mean[slots]
        d_old = symbols.mean[slots]
        psi_old = symbols.mse[slots]
        sic = data_sic(received[slots], h, d_old)
        xi, _ = data_covariance(h, psi_old, noise, channels.aggregate_cov[slots])
        d_bar, psi_bar, eta, floored = data_combine(sic, h, xi, psi_old)
        if floored:
            workspace.floored_variances += floored
            logger.debug(f"窗口 {tau} 第 {t} 次迭代: {floored} 个 ψ̄^d 被截断到下限")
        d_new, psi_new = qpsk_denoise(d_bar, psi_bar, split.data_power)
        symbols.mean[slots] = damp(d_new, d_old, damping)
        symbols.mse[slots] = damp(psi_new, psi_old, damping)

        workspace.data_sic, workspace.xi, workspace.eta = sic, xi, eta
        workspace.data_extrinsic = (d_bar, psi_bar)

        if not estimate_channel:
            continue

        # 信道估计
        mask = neighbor_mask | self_column if t == iterations else neighbor_mask
        h_nb = channels.mean[index]
        d_nb = symbols.mean[index]
        y_sic = chan_sic(received[index], h_nb, d_nb)
        nu, nu_to_k = chan_noise_terms(
            h_nb,
            channels.coeff_mse[index],
            d_nb,
            symbols.mse[index],
            stats,
            noise,
            lag,
        )
        h_bar, psi_h_bar, informative = chan_combine(y_sic, nu_to_k, d_nb, lag, mask, stats.r)
        mean, cov = chan_denoise(
            h_bar,
            psi_h_bar,
            prior.mean[slots],
            prior.cov[slots],
            channels.mean[slots],
            channels.cov[slots],
            damping,
            informative,
        )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise NumericalFailure(f"窗口 {tau} 第 {t} 次迭代出现非有限的信道估计")
        channels.mean[slots] = mean
        channels.cov[slots] = cov

        workspace.chan_sic, workspace.chan_noise = y_sic, nu
        workspace.chan_extrinsic = (h_bar, psi_h_bar)

    return symbols, channels


class JccctReceiver:
    """
    联合通信、计算与信道跟踪接收机（窗口化信道预测 + BiGaBP 联合信道与数据估计）
    """

    def __init__(
        self,
        stats: SecondOrderStats,
        schedule: WindowSchedule,
        split: PowerSplit,
        iterations: int,
        damping: float,
        known_channel: Optional[ndarray] = None,
    ) -> None:
        self._stats = stats
        self._schedule = schedule
        self._split = split
        self._iterations = iterations
        self._damping = damping
        self._known_channel = known_channel
        self._workspace = BeliefWorkspace()

    @property
    def workspace(self) -> BeliefWorkspace:
        return self._workspace

    @property
    def schedule(self) -> WindowSchedule:
        return self._schedule

    def _initial_state(
        self, num_beams: int, num_users: int
    ) -> tuple[SoftSymbolEstimate, SoftChannelEstimate, SoftChannelEstimate]:
        """
        [初始化] d̂ = 0, ψ^d = 1；已知信道时信道估计直接取真值且 MSE 为 0
        """
        num_slots = self._schedule.num_slots
        symbols = SoftSymbolEstimate.initial(num_slots, num_users)
        channels = SoftChannelEstimate.empty(num_slots, num_beams, num_users)
        if self._known_channel is not None:
            channels.mean[:] = self._known_channel
        return symbols, channels, channels.copy()

    def run(self, received: ndarray, h0: ndarray) -> ReceiverOutput:
        """
        执行完整的接收流程：逐窗口预测与 JCDE，最后硬判决

        :param received: 波束域接收信号 (K, N)
        :param h0: 已知的 0 时刻波束域信道 (N, M)
        """
        num_beams, num_users = h0.shape
        symbols, channels, prior = self._initial_state(num_beams, num_users)
        estimate_channel = self._known_channel is None

        for tau in range(1, self._schedule.tau_max + 1):
            if estimate_channel:
                targets, _ = predict_window(tau, self._schedule, self._stats, channels, h0)
                prior.mean[targets] = channels.mean[targets]
                prior.cov[targets] = channels.cov[targets]

            run_jcde(
                received,
                tau,
                self._schedule,
                self._stats,
                self._split,
                symbols,
                channels,
                prior,
                self._iterations,
                self._damping,
                estimate_channel=estimate_channel,
                workspace=self._workspace,
            )

        decisions, bits = hard_decide(symbols.mean, self._split.data_power)
        logger.debug(
            f"接收完成: {self._schedule.tau_max} 个窗口, "
            f"ψ̄^d 截断 {self._workspace.floored_variances} 次"
        )
        return ReceiverOutput(
            symbols=symbols, channels=channels, decisions=decisions, bits=bits
        )
