from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy import ndarray

from .config import GeometryConfig, Mode


@dataclass(frozen=True)
class CoherenceParams:
    coherence_time: float
    """相干时间 T_c (s)"""
    symbol_duration: float
    """符号时长 T_s (s)"""
    k_max: int
    """离散相干时间 K_max"""
    r: float
    """相邻符号间的相关系数"""


@dataclass(frozen=True)
class AngleSet:
    theta: ndarray
    """俯仰到达角 (L, C, M)，弧度"""
    phi: ndarray
    """方位到达角 (L, C, M)，弧度"""


@dataclass(frozen=True)
class ClusterGeometry:
    config: GeometryConfig
    angles: AngleSet
    steering: ndarray
    """各射线的阵列响应 Áraw (L, C, N_RX, M)"""


@dataclass
class FadingState:
    sigma: ndarray
    """小尺度衰落系数 (L, C, M)"""
    slot_index: int = 0
    """时隙编号 k"""


@dataclass
class ChannelRealization:
    raw_channels: ndarray
    """天线域信道 (K, N_RX, M)"""
    fading: list[FadingState] = field(default_factory=list)
    """每个时隙的衰落状态"""
    beam_channels: Optional[ndarray] = None
    """波束域信道 (K, N, M)，确定合并器之后才有"""

    @property
    def num_slots(self) -> int:
        return self.raw_channels.shape[0]


@dataclass(frozen=True)
class Combiner:
    matrix: ndarray
    """F_RX (N_RX, N)，列正交归一"""
    singular_values: ndarray
    """H[0] 的奇异值（降序）"""

    @property
    def num_beams(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class BeamArrayResponses:
    responses: ndarray
    """波束域阵列响应 A_{l,c} (L, C, N, M)"""

    @property
    def num_clusters(self) -> int:
        return self.responses.shape[0]


@dataclass(frozen=True)
class SecondOrderStats:
    """
    有效信道的二阶老化统计量

    各滞后 k' 的统计量都是 θ/Θ 乘以同一个标量 (1 - r^{2k'})/L，这里只预存该标量表
    """

    theta: ndarray
    """θ_nm (N, M)"""
    theta_users: ndarray
    """Σ_l Σ_c A[:, m] A[:, m]ᴴ / C_l，(M, N, N)"""
    theta_matrix: ndarray
    """Θ (N, N)"""
    r: float
    aging: ndarray
    """(1 - r^{2k'})/L，k' = 0 .. max_lag"""

    @property
    def max_lag(self) -> int:
        return self.aging.shape[0] - 1

    def _aging(self, lag) -> ndarray:
        lag = np.abs(np.asarray(lag))
        if np.any(lag > self.max_lag):
            raise ValueError(f"滞后 {int(np.max(lag))} 超出预计算范围 {self.max_lag}")
        return self.aging[lag]

    def omega(self, lag) -> ndarray:
        """
        ω_{nm,k'}，lag 可以是数组，结果形状为 lag.shape + (N, M)
        """
        scale = self._aging(lag)
        return scale[..., None, None] * self.theta

    def omega_users(self, lag) -> ndarray:
        """
        Ω_{m,k'}，结果形状为 lag.shape + (M, N, N)
        """
        scale = self._aging(lag)
        return scale[..., None, None, None] * self.theta_users

    def omega_matrix(self, lag) -> ndarray:
        """
        Ω_{k'}，结果形状为 lag.shape + (N, N)
        """
        scale = self._aging(lag)
        return scale[..., None, None] * self.theta_matrix


@dataclass(frozen=True)
class PowerSplit:
    data_power: float
    """E_d"""
    computing_power: float
    """E_c"""
    noise_power: float
    """N0"""

    @property
    def effective_noise(self) -> float:
        """Ñ0 = N0 + E_c，检测时计算信号被视为噪声"""
        return self.noise_power + self.computing_power


@dataclass(frozen=True)
class FrameData:
    data: ndarray
    """QPSK 通信符号 d (K, M)"""
    computing: ndarray
    """实值计算符号 s (K, M)"""
    bits: ndarray
    """比特 (K, M, 2)"""

    @property
    def transmit(self) -> ndarray:
        """x = d + s"""
        return self.data + self.computing

    @property
    def target(self) -> ndarray:
        """f[k] = Σ_m s_m[k]"""
        return self.computing.sum(axis=-1)


@dataclass(frozen=True)
class WindowSchedule:
    num_slots: int
    window_length: int
    window_depth: int
    neighborhood: int
    windows: tuple[tuple[int, ...], ...]
    """K_τ，下标 τ-1"""
    new_slots: tuple[tuple[int, ...], ...]
    """K_τ⁺"""
    neighborhoods: tuple[dict[int, tuple[int, ...]], ...]
    """S_{k,τ}，对 K_τ 中每个 k"""

    @property
    def tau_max(self) -> int:
        return len(self.windows)

    @property
    def max_lag(self) -> int:
        """预测与置信度合并用到的最大时隙间隔，D = 1 时锚点可能位于上一个窗口"""
        return max(max(self.window_depth, 2) * self.window_length, self.neighborhood // 2)

    def window(self, tau: int) -> tuple[int, ...]:
        return self.windows[tau - 1]

    def new(self, tau: int) -> tuple[int, ...]:
        return self.new_slots[tau - 1]

    def cumulative(self, tau: int) -> tuple[int, ...]:
        """K̆_τ = ∪_{t<=τ} K_t"""
        slots: set[int] = set()
        for t in range(tau):
            slots.update(self.windows[t])
        return tuple(sorted(slots))

    def neighborhood_of(self, k: int, tau: int) -> tuple[int, ...]:
        return self.neighborhoods[tau - 1][k]


@dataclass
class SoftSymbolEstimate:
    mean: ndarray
    """软符号 d̂ (K, M)"""
    mse: ndarray
    """ψ^d (K, M)"""

    @classmethod
    def initial(cls, num_slots: int, num_users: int) -> "SoftSymbolEstimate":
        return cls(
            mean=np.zeros((num_slots, num_users), dtype=complex),
            mse=np.ones((num_slots, num_users)),
        )


@dataclass
class SoftChannelEstimate:
    mean: ndarray
    """ĥ (K, N, M)"""
    cov: ndarray
    """Ψ̂ʰ_{m,k} (K, M, N, N)"""

    @classmethod
    def empty(cls, num_slots: int, num_beams: int, num_users: int) -> "SoftChannelEstimate":
        return cls(
            mean=np.zeros((num_slots, num_beams, num_users), dtype=complex),
            cov=np.zeros((num_slots, num_users, num_beams, num_beams), dtype=complex),
        )

    @property
    def coeff_mse(self) -> ndarray:
        """ψ̂ʰ_{nm,k} (K, N, M)，即 Ψ̂ʰ_{m,k} 的对角线"""
        diag = np.real(np.diagonal(self.cov, axis1=-2, axis2=-1))
        return np.swapaxes(diag, -1, -2)

    @property
    def aggregate_cov(self) -> ndarray:
        """Ψ̂ʰ_k = Σ_m Ψ̂ʰ_{m,k} (K, N, N)"""
        return self.cov.sum(axis=-3)

    def copy(self) -> "SoftChannelEstimate":
        return SoftChannelEstimate(mean=self.mean.copy(), cov=self.cov.copy())


@dataclass
class BeliefWorkspace:
    """
    最近一次迭代的消息传递中间量，便于诊断
    """

    data_sic: Optional[ndarray] = None
    """ỹ_{m,k} (T, M, N)"""
    xi: Optional[ndarray] = None
    """Ξ_k (T, N, N)"""
    eta: Optional[ndarray] = None
    """η_{m,k} (T, M)"""
    data_extrinsic: Optional[tuple[ndarray, ndarray]] = None
    """(d̄, ψ̄^d)"""
    chan_sic: Optional[ndarray] = None
    """ỹ_{nm,s} (S, N, M)"""
    chan_noise: Optional[ndarray] = None
    """ν_{s,nm} (S, N, M)"""
    chan_extrinsic: Optional[tuple[ndarray, ndarray]] = None
    """(h̄, ψ̄ʰ)"""
    floored_variances: int = 0
    """ψ̄^d 被截断到下限的次数"""


@dataclass(frozen=True)
class ReceiverOutput:
    symbols: SoftSymbolEstimate
    channels: SoftChannelEstimate
    decisions: ndarray
    """硬判决符号 (K, M)"""
    bits: ndarray
    """判决比特 (K, M, 2)"""


@dataclass(frozen=True)
class AirCompInputs:
    received: ndarray
    """y (K, N)"""
    channel: ndarray
    """Ĥ (K, N, M)"""
    symbols: ndarray
    """用于求残差的符号 d̂ (K, M)"""
    xi: ndarray
    """ξ_k 的对角元 (K, M)"""
    computing_power: float
    noise_power: float


@dataclass(frozen=True)
class FunctionEstimate:
    value: ndarray
    """f̂[k] (K,)"""
    combiner: ndarray
    """u_k (K, N)"""


@dataclass(frozen=True)
class TrialResult:
    trial: int
    bit_errors: int = 0
    total_bits: int = 0
    channel_error: float = 0.0
    """Σ_k ‖H - Ĥ‖²_F"""
    channel_energy: float = 0.0
    """Σ_k ‖H‖²_F"""
    function_error: float = 0.0
    """Σ_k |f - f̂|²"""
    function_energy: float = 0.0
    """Σ_k |f|²"""
    failed: bool = False
    message: str = ""


@dataclass(frozen=True)
class MetricsRecord:
    snr_db: float
    velocity_kmh: float
    mode: Mode
    ber: float
    nmse_channel_db: float
    nmse_aircomp_db: float
    trials_used: int
    failed_trials: int = 0
    wall_time_s: Optional[float] = None
    valid: bool = True
