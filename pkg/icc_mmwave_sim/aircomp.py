"""
基于检测残差的空中计算 (AirComp)：MMSE 合并与目标函数估计
"""

import numpy as np
from numpy import ndarray

from .models import AirCompInputs, FunctionEstimate
from .utils import herm, solve_regularized


def mmse_combiner(inputs: AirCompInputs) -> ndarray:
    """
    u_k = (Ĥ(ξ_k + E_c·I_M)Ĥᴴ + N0·I_N)⁻¹ · E_c·Ĥ·1_M，逐时隙计算（不考虑信道估计误差）

    :return: (K, N)
    """
    channel = inputs.channel
    num_beams = channel.shape[-2]
    power = inputs.xi + inputs.computing_power
    covariance = (channel * power[..., None, :]) @ herm(channel)
    covariance = covariance + inputs.noise_power * np.eye(num_beams)
    target = inputs.computing_power * channel.sum(axis=-1)
    return solve_regularized(covariance, target[..., None], "AirComp 合并器")[..., 0]


def estimate_function(inputs: AirCompInputs, combiner: ndarray) -> FunctionEstimate:
    """
    f̂[k] = Re(u_kᴴ(y[k] - Ĥ[k]·d̂[k]))，后处理函数 φ 为恒等映射

    目标 Σ_m s_m 为实数，取实部
    """
    residual = inputs.received - np.einsum("...nm,...m->...n", inputs.channel, inputs.symbols)
    value = np.real(np.einsum("...n,...n->...", combiner.conj(), residual))
    return FunctionEstimate(value=value, combiner=combiner)


def expected_function_mse(inputs: AirCompInputs, combiner: ndarray) -> ndarray:
    """
    残差模型 e = Ĥ(d - d̂) + Ĥs + w 下（d - d̂ ~ CN(0, ξ)，s 为实高斯）实部读出的理论 MSE

    E|f - Re(uᴴe)|² = M·E_c - 2·uᴴp + (uᴴRu + Re(E_c·uᴴĤĤᵀu*))/2

    :return: (K,)
    """
    channel = inputs.channel
    num_users = channel.shape[-1]
    e_c = inputs.computing_power
    power = inputs.xi + e_c
    covariance = (channel * power[..., None, :]) @ herm(channel)
    covariance = covariance + inputs.noise_power * np.eye(channel.shape[-2])
    cross = e_c * channel.sum(axis=-1)

    u = combiner
    quad = np.real(np.einsum("...n,...np,...p->...", u.conj(), covariance, u))
    pseudo = e_c * np.einsum("...n,...nm,...pm,...p->...", u.conj(), channel, channel, u.conj())
    linear = np.real(np.einsum("...n,...n->...", u.conj(), cross))
    return num_users * e_c - 2 * linear + 0.5 * (quad + np.real(pseudo))
