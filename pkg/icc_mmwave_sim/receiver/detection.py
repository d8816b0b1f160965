"""
BiGaBP 的数据检测部分（软干扰消除、向量高斯近似、QPSK 去噪）

所有函数都对前导的时隙维批量计算
"""

from typing import TypeVar

import numpy as np
from numpy import ndarray

from ..exceptions import NumericalFailure
from ..icc_signal import qpsk_demodulate, qpsk_modulate
from ..utils import herm, hermitize, inv_regularized

MIN_EXTRINSIC_VARIANCE = 1e-12
"""ψ̄^d 的下限"""

T = TypeVar("T", float, complex, ndarray)


def data_sic(received: ndarray, channel: ndarray, symbols: ndarray) -> ndarray:
    """
    ỹ_{m,k} = y[k] - Σ_{i≠m} ĥ_{i,k}·d̂_{i,k}

    :param received: (..., N)
    :param channel: 软信道 ĥ (..., N, M)
    :param symbols: 软符号 d̂ (..., M)
    :return: (..., M, N)，第 m 行为用户 m 的干扰消除结果
    """
    contributions = channel * symbols[..., None, :]
    residual = received - contributions.sum(axis=-1)
    return residual[..., None, :] + np.swapaxes(contributions, -1, -2)


def data_covariance(
    channel: ndarray, symbol_mse: ndarray, effective_noise: float, channel_cov: ndarray
) -> tuple[ndarray, ndarray]:
    """
    Ξ_k = Σ_i ĥ_i ĥ_iᴴ ψ̂^d_i + Ñ0·I_N + Ψ̂ʰ_k

    :param channel: ĥ (..., N, M)
    :param symbol_mse: ψ̂^d (..., M)
    :param effective_noise: Ñ0
    :param channel_cov: 聚合信道误差协方差 Ψ̂ʰ_k (..., N, N)
    :return: (Ξ_k, 逐用户去除自身项后的 Ξ_{m,k} (..., M, N, N))
    """
    num_beams = channel.shape[-2]
    outer = np.einsum("...nm,...pm->...mnp", channel, channel.conj())
    self_terms = outer * symbol_mse[..., :, None, None]
    xi = self_terms.sum(axis=-3) + effective_noise * np.eye(num_beams) + channel_cov
    xi = hermitize(xi)
    return xi, xi[..., None, :, :] - self_terms


def data_combine(
    sic: ndarray, channel: ndarray, xi: ndarray, symbol_mse: ndarray
) -> tuple[ndarray, ndarray, ndarray, int]:
    """
    用共享的 Ξ_k⁻¹ 计算外信息（矩阵求逆引理消除了 Ξ 对 m 的依赖）

    η = ĥᴴ Ξ⁻¹ ĥ，d̄ = ĥᴴ Ξ⁻¹ ỹ / η，ψ̄^d = (1 - η·ψ̂^d)/η

    :param sic: ỹ (..., M, N)
    :param channel: ĥ (..., N, M)
    :param xi: Ξ_k (..., N, N)
    :param symbol_mse: ψ̂^d (..., M)
    :return: (d̄, ψ̄^d, η, 截断到下限的个数)
    :raise NumericalFailure: η 非正
    """
    xi_inv = hermitize(inv_regularized(xi, "Ξ_k"))
    weighted = xi_inv @ channel
    eta = np.real(np.einsum("...nm,...nm->...m", channel.conj(), weighted))
    if np.any(~np.isfinite(eta)) or np.any(eta <= 0):
        raise NumericalFailure(f"η 非正或非有限: min={np.nanmin(eta)}")

    numerator = np.einsum("...nm,...mn->...m", weighted.conj(), sic)
    mean = numerator / eta
    variance = (1.0 - eta * symbol_mse) / eta
    floored = int(np.count_nonzero(variance < MIN_EXTRINSIC_VARIANCE))
    return mean, np.maximum(variance, MIN_EXTRINSIC_VARIANCE), eta, floored


def qpsk_denoise(mean: ndarray, variance: ndarray, data_power: float) -> tuple[ndarray, ndarray]:
    """
    QPSK 的贝叶斯最优去噪器

    d̂′ = c_d·(tanh(2c_d·Re(d̄)/ψ̄) + j·tanh(2c_d·Im(d̄)/ψ̄))，ψ̂′ = 1 - |d̂′|²
    """
    c_d = np.sqrt(data_power / 2)
    scale = 2 * c_d / variance
    estimate = c_d * (np.tanh(scale * np.real(mean)) + 1j * np.tanh(scale * np.imag(mean)))
    return estimate, 1.0 - np.abs(estimate) ** 2


def damp(new: T, old: T, beta: float) -> T:
    """
    β·new + (1-β)·old
    """
    return beta * new + (1.0 - beta) * old


def hard_decide(symbols: ndarray, data_power: float) -> tuple[ndarray, ndarray]:
    """
    最近星座点判决，d̂ 位于判决边界时判为 (0, 0) 比特对应的点

    :return: (判决符号, 比特)
    """
    bits = qpsk_demodulate(symbols)
    return qpsk_modulate(bits, data_power), bits


def deflated_combine(
    sic: ndarray, channel: ndarray, xi_user: ndarray
) -> tuple[ndarray, ndarray]:
    """
    逐用户直接求逆 Ξ_{m,k} 的外信息，用于核对共享逆矩阵的结果

    :param sic: ỹ (M, N)
    :param channel: ĥ (N, M)
    :param xi_user: Ξ_{m,k} (M, N, N)
    """
    h = np.swapaxes(channel, -1, -2)[..., None]
    solved = np.linalg.solve(xi_user, h)
    gain = np.real(herm(h) @ solved)[..., 0, 0]
    mean = (herm(solved) @ sic[..., None])[..., 0, 0] / gain
    return mean, 1.0 / gain
