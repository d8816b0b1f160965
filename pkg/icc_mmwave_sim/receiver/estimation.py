"""
BiGaBP 的信道估计部分：标量高斯近似下沿时间维传播信道置信度
"""

import numpy as np
from numpy import ndarray

from ..models import SecondOrderStats
from ..utils import hermitize, solve_regularized
from .detection import damp


def chan_sic(received: ndarray, channel: ndarray, symbols: ndarray) -> ndarray:
    """
    ỹ_{nm,s} = y_n[s] - Σ_{i≠m} ĥ_{ni,s}·d̂_{i,s}

    :param received: (..., N)
    :param channel: (..., N, M)
    :param symbols: (..., M)
    :return: (..., N, M)
    """
    contributions = channel * symbols[..., None, :]
    residual = received - contributions.sum(axis=-1)
    return residual[..., :, None] + contributions


def chan_noise_terms(
    channel: ndarray,
    channel_mse: ndarray,
    symbols: ndarray,
    symbol_mse: ndarray,
    stats: SecondOrderStats,
    effective_noise: float,
    lag: ndarray,
) -> tuple[ndarray, ndarray]:
    """
    计算 ν_{s,nm} 与老化到时隙 k 的 ν_{s→k,nm}

    ν_{s,nm} = Σ_{i≠m} {|ĥ_{ni,s}|²ψ̂^d_{i,s} + (|d̂_{i,s}|² + ψ̂^d_{i,s})ψ̂ʰ_{ni,s}} + θ_nm·ψ̂^d_{m,s} + Ñ0

    来自过去 (k > s) 与来自未来 (k < s) 的置信度老化方式不同:
      k > s: ω_{|k-s|}·|d̂_{m,s}|² + r^{2(k-s)}·ν_s
      k < s: r^{2(k-s)}·(ω_{|k-s|}·|d̂_{m,s}|² + ν_s)

    :param channel: 时隙 s 的 ĥ (..., N, M)
    :param channel_mse: 时隙 s 的 ψ̂ʰ (..., N, M)
    :param symbols: 时隙 s 的 d̂ (..., M)
    :param symbol_mse: 时隙 s 的 ψ̂^d (..., M)
    :param lag: k - s，形状与前导维一致
    :return: (ν_s, ν_{s→k})，均为 (..., N, M)
    """
    power = np.abs(symbols) ** 2
    terms = (
        np.abs(channel) ** 2 * symbol_mse[..., None, :]
        + (power + symbol_mse)[..., None, :] * channel_mse
    )
    interference = terms.sum(axis=-1, keepdims=True) - terms
    nu = interference + stats.theta * symbol_mse[..., None, :] + effective_noise

    lag = np.asarray(lag)
    aging = stats.omega(lag) * power[..., None, :]
    decay = (stats.r ** (2.0 * lag))[..., None, None]
    nu_to_k = np.where(
        (lag >= 0)[..., None, None], aging + decay * nu, decay * (aging + nu)
    )
    return nu, nu_to_k


def chan_combine(
    sic: ndarray, nu_to_k: ndarray, symbols: ndarray, lag: ndarray, mask: ndarray, r: float
) -> tuple[ndarray, ndarray, ndarray]:
    """
    合并邻域内老化后的观测得到外信息

    ψ̄ʰ = (Σ_s |d̂_{m,s}|²/ν_{s→k})⁻¹，h̄ = ψ̄ʰ·Σ_s d̂*_{m,s}·r^{k-s}·ỹ_{nm,s}/ν_{s→k}

    :param sic: (T, J, N, M)，J 为邻域中的位置
    :param nu_to_k: (T, J, N, M)
    :param symbols: (T, J, M)
    :param lag: k - s，(T, J)
    :param mask: 该位置是否属于合并集合，(T, J)
    :return: (h̄, ψ̄ʰ, informative)，informative (T, M) 表示合并集合中存在非零软符号；
        否则对应的 ψ̄ʰ 为 inf、h̄ 为 0
    """
    weight = np.where(mask[..., None, None], 1.0 / nu_to_k, 0.0)
    conj_symbols = np.conj(symbols)[..., None, :]
    precision = np.sum(weight * np.abs(conj_symbols) ** 2, axis=1)
    aged = (r ** lag.astype(float))[..., None, None] * sic
    weighted_sum = np.sum(weight * conj_symbols * aged, axis=1)

    informative = np.all(precision > 0, axis=-2)
    safe = np.where(precision > 0, precision, 1.0)
    variance = np.where(precision > 0, 1.0 / safe, np.inf)
    mean = np.where(precision > 0, weighted_sum / safe, 0.0)
    return mean, variance, informative


def chan_denoise(
    extrinsic_mean: ndarray,
    extrinsic_var: ndarray,
    prior_mean: ndarray,
    prior_cov: ndarray,
    old_mean: ndarray,
    old_cov: ndarray,
    beta: float,
    informative: ndarray,
) -> tuple[ndarray, ndarray]:
    """
    高斯去噪器并阻尼

    Λ = Ω + Ψ̄，ĥ′ = Ω·Λ⁻¹·h̄ + Ψ̄·Λ⁻¹·μ，Ψ̂′ = Ω·Λ⁻¹·Ψ̄，其中 (μ, Ω) 为信道预测给出的先验

    :param extrinsic_mean: h̄ (T, N, M)
    :param extrinsic_var: ψ̄ʰ (T, N, M)
    :param prior_mean: μ (T, N, M)
    :param prior_cov: Ω (T, M, N, N)
    :param old_mean: 阻尼前的 ĥ (T, N, M)
    :param old_cov: 阻尼前的 Ψ̂ʰ (T, M, N, N)
    :param informative: (T, M)，为 False 的用户直接沿用先验
    :return: (ĥ, Ψ̂ʰ)
    """
    num_beams = prior_cov.shape[-1]
    h_bar = np.swapaxes(extrinsic_mean, -1, -2)
    mu = np.swapaxes(prior_mean, -1, -2)
    psi_bar = np.where(informative[..., None], np.swapaxes(extrinsic_var, -1, -2), 1.0)
    psi_bar_matrix = psi_bar[..., None, :] * np.eye(num_beams)

    lam = prior_cov + psi_bar_matrix
    rhs = np.concatenate([h_bar[..., None], mu[..., None], psi_bar_matrix], axis=-1)
    solved = solve_regularized(lam, rhs, "Λ_{m,k}")

    new_mean = (prior_cov @ solved[..., 0:1])[..., 0] + psi_bar * solved[..., 1]
    new_cov = hermitize(prior_cov @ solved[..., 2:])

    keep = informative[..., None]
    new_mean = np.where(keep, new_mean, mu)
    new_cov = np.where(keep[..., None], new_cov, prior_cov)

    mean = damp(np.swapaxes(new_mean, -1, -2), old_mean, beta)
    cov = damp(new_cov, old_cov, beta)
    return mean, cov
