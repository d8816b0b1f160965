import math

from ..exceptions import ConfigurationError
from ..models import WindowSchedule


def build_schedule(
    num_slots: int, window_length: int, window_depth: int, neighborhood: int
) -> WindowSchedule:
    """
    构造滑动窗口 K_τ、新增时隙 K_τ⁺ 与信道置信度邻域 S_{k,τ}

    K_τ = {k | (τ-D)·W <= k <= τ·W - 1}，超出 K-1 的部分被截断；
    τ_max = ceil(K/W) + D - 1

    :param num_slots: K
    :param window_length: W
    :param window_depth: D
    :param neighborhood: G（偶数）
    """
    if num_slots < 1:
        raise ConfigurationError(f"时隙数必须 >= 1，当前为 {num_slots}")
    if window_length < 1 or window_depth < 1:
        raise ConfigurationError(f"W 与 D 必须 >= 1，当前为 W={window_length}, D={window_depth}")
    if neighborhood < 0 or neighborhood % 2:
        raise ConfigurationError(f"G 必须是非负偶数，当前为 {neighborhood}")

    tau_max = math.ceil(num_slots / window_length) + window_depth - 1
    half = neighborhood // 2

    windows: list[tuple[int, ...]] = []
    new_slots: list[tuple[int, ...]] = []
    neighborhoods: list[dict[int, tuple[int, ...]]] = []
    previous: set[int] = set()
    cumulative_end = -1

    for tau in range(1, tau_max + 1):
        start = max((tau - window_depth) * window_length, 0)
        stop = min(tau * window_length - 1, num_slots - 1)
        window = tuple(range(start, stop + 1))
        windows.append(window)
        new_slots.append(tuple(k for k in window if k not in previous))
        previous = set(window)

        # K̆_τ 是连续区间 [0, cumulative_end]
        cumulative_end = max(cumulative_end, stop)
        neighborhoods.append(
            {
                k: tuple(
                    s
                    for s in range(max(k - half, 0), min(k + half, cumulative_end) + 1)
                    if s != k
                )
                for k in window
            }
        )

    return WindowSchedule(
        num_slots=num_slots,
        window_length=window_length,
        window_depth=window_depth,
        neighborhood=neighborhood,
        windows=tuple(windows),
        new_slots=tuple(new_slots),
        neighborhoods=tuple(neighborhoods),
    )
