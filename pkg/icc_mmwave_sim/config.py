import math
import tomllib
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from .exceptions import ConfigurationError

Mode = Literal["full", "genie-channel", "genie-symbols", "genie-both"]
ALL_MODES: tuple[Mode, ...] = ("full", "genie-channel", "genie-symbols", "genie-both")

SPEED_OF_LIGHT = 2.998e8


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GeometryConfig(_Section):
    num_rx_antennas: int = 16
    """接收天线数 N_RX（UPA，必须是平方数）"""
    num_users: int = 2
    """单天线用户数 M"""
    num_clusters: int = 4
    """簇数 L"""
    rays_per_cluster: int = 15
    """每簇射线数 C_l（所有簇相同）"""
    ray_angle_spread_deg: float = 5.0
    """簇内射线相对簇中心的拉普拉斯角度偏移标准差（度）"""

    @field_validator("num_rx_antennas")
    @classmethod
    def check_square(cls, v: int) -> int:
        if v < 1 or math.isqrt(v) ** 2 != v:
            raise ValueError(f"num_rx_antennas 必须是正的平方数，当前为 {v}")
        return v

    @field_validator("num_users", "num_clusters", "rays_per_cluster")
    @classmethod
    def check_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("数量参数必须 >= 1")
        return v

    @property
    def side(self) -> int:
        """UPA 每一维的阵元数 √N_RX"""
        return math.isqrt(self.num_rx_antennas)


class TimingConfig(_Section):
    carrier_freq: float = 60e9
    """载波频率 f_c (Hz)"""
    sampling_rate: float = 2.64e9
    """采样率 f_s (Hz)"""
    dft_size: int = 512
    """DFT 点数 N_DFT"""
    guard_fraction: float = 0.25
    """保护间隔占比 N_G"""
    speed_of_light: float = SPEED_OF_LIGHT
    """光速 v_c (m/s)"""
    num_slots: int = 128
    """时隙数 K"""

    @field_validator("carrier_freq", "sampling_rate", "speed_of_light")
    @classmethod
    def check_positive_float(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("频率与光速必须为正")
        return v

    @field_validator("dft_size", "num_slots")
    @classmethod
    def check_positive_int(cls, v: int) -> int:
        if v < 1:
            raise ValueError("dft_size 与 num_slots 必须 >= 1")
        return v

    @field_validator("guard_fraction")
    @classmethod
    def check_guard(cls, v: float) -> float:
        if not 0.0 <= v <= 1.0:
            raise ValueError("guard_fraction 必须位于 [0, 1]")
        return v


class ChannelConfig(GeometryConfig, TimingConfig):
    """
    ``[channel]`` 配置段：几何参数与时间参数
    """

    @property
    def geometry(self) -> GeometryConfig:
        return GeometryConfig(
            **{name: getattr(self, name) for name in GeometryConfig.model_fields}
        )

    @property
    def timing(self) -> TimingConfig:
        return TimingConfig(
            **{name: getattr(self, name) for name in TimingConfig.model_fields}
        )


class SignalConfig(_Section):
    data_power: float = 0.99
    """通信符号功率 E_d"""
    computing_power: float = 0.01
    """计算符号功率 E_c"""

    @model_validator(mode="after")
    def check_split(self) -> "SignalConfig":
        if self.data_power < 0 or self.computing_power < 0:
            raise ValueError("功率分配必须非负")
        if not math.isclose(self.data_power + self.computing_power, 1.0, abs_tol=1e-9):
            raise ValueError("必须满足 E_d + E_c = 1")
        return self


class ReceiverConfig(_Section):
    num_beams: int = 8
    """波束数 N (<= N_RX)"""
    window_length: int = 8
    """窗口参数 W"""
    window_depth: int = 3
    """窗口参数 D（每个窗口覆盖 D·W 个时隙）"""
    neighborhood: int = 6
    """信道置信度时间邻域 G（偶数）"""
    iterations: int = 8
    """每个窗口的 JCDE 迭代次数 t_max"""
    damping: float = 0.5
    """阻尼系数 β"""

    @field_validator("num_beams", "window_length", "window_depth", "iterations")
    @classmethod
    def check_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("接收机计数参数必须 >= 1")
        return v

    @field_validator("neighborhood")
    @classmethod
    def check_even(cls, v: int) -> int:
        if v < 0 or v % 2:
            raise ValueError(f"neighborhood (G) 必须是非负偶数，当前为 {v}")
        return v

    @field_validator("damping")
    @classmethod
    def check_damping(cls, v: float) -> float:
        if not 0.0 <= v <= 1.0:
            raise ValueError("damping 必须位于 [0, 1]")
        return v


class SweepConfig(_Section):
    snr_db: list[float] = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]
    """SNR 扫描轴 (dB)，定义为 -10·log10(N0)"""
    velocity_kmh: list[float] = [10.0, 20.0, 30.0, 40.0]
    """相对速度扫描轴 (km/h)"""
    trials: int = 500
    """每个网格点的试验次数"""
    seed: int = 20240601
    """全局随机种子 (64 位)"""
    modes: list[Mode] = list(ALL_MODES)
    """评估模式"""
    workers: int = 1
    """并行试验进程数"""
    record_wall_time: bool = False
    """在 CSV 中写入耗时（开启后输出不再逐字节可复现）"""
    failure_budget: float = 0.1
    """任一网格点失败试验比例超过此值时以退出码 3 结束"""

    @field_validator("snr_db", "velocity_kmh", "modes")
    @classmethod
    def check_not_empty(cls, v: list) -> list:
        if not v:
            raise ValueError("扫描轴不能为空")
        return v

    @field_validator("velocity_kmh")
    @classmethod
    def check_velocity(cls, v: list[float]) -> list[float]:
        if any(not speed > 0 for speed in v):
            raise ValueError("速度必须为正")
        return v

    @field_validator("trials", "workers")
    @classmethod
    def check_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("trials 与 workers 必须 >= 1")
        return v

    @field_validator("seed")
    @classmethod
    def check_seed(cls, v: int) -> int:
        if not 0 <= v < 2**64:
            raise ValueError("seed 必须是 64 位无符号整数")
        return v


class ExperimentConfig(_Section):
    channel: ChannelConfig = ChannelConfig()
    signal: SignalConfig = SignalConfig()
    receiver: ReceiverConfig = ReceiverConfig()
    sweep: SweepConfig = SweepConfig()

    @model_validator(mode="after")
    def check_cross_section(self) -> "ExperimentConfig":
        if self.receiver.num_beams > self.channel.num_rx_antennas:
            raise ValueError(
                f"num_beams ({self.receiver.num_beams}) 不能超过 "
                f"num_rx_antennas ({self.channel.num_rx_antennas})"
            )
        return self

    def with_overrides(self, **sections: dict) -> "ExperimentConfig":
        """
        返回覆盖了部分键的新配置，例如 ``with_overrides(sweep={"trials": 2})``
        """
        data = self.model_dump()
        for section, values in sections.items():
            data[section].update({k: v for k, v in values.items() if v is not None})
        return build_config(data)


def build_config(data: dict) -> ExperimentConfig:
    """
    由字典构造配置，校验失败时抛出 ConfigurationError
    """
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"配置校验失败:\n{e}") from e


def load_config(path: Optional[Union[str, Path]] = None) -> ExperimentConfig:
    """
    从 TOML 文件读取配置，未给出的键使用默认值

    :param path: 配置文件路径，为 None 时返回默认配置
    """
    if path is None:
        return ExperimentConfig()

    path = Path(path)
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except FileNotFoundError as e:
        raise ConfigurationError(f"配置文件不存在: {path}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(f"配置文件格式错误: {path}: {e}") from e

    return build_config(data)
