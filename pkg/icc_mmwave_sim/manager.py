import csv
import time
from concurrent.futures import ProcessPoolExecutor
from itertools import product
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from jinja2 import Environment, FileSystemLoader
from jinja2.exceptions import TemplateNotFound
from loguru import logger
from tqdm import tqdm

from .aircomp import estimate_function, mmse_combiner
from .beamforming import (
    beam_array_responses,
    beam_channels,
    build_combiner,
    second_order_stats,
)
from .channel import (
    build_geometry,
    coherence_params,
    draw_angles,
    generate_realization,
    kmh_to_ms,
)
from .config import ExperimentConfig, Mode
from .exceptions import NumericalFailure
from .icc_signal import generate_frame, synthesize_rx
from .models import AirCompInputs, MetricsRecord, PowerSplit, TrialResult
from .receiver import JccctReceiver, build_schedule
from .utils import make_rng, snr_to_noise, to_db

SEARCH_PATH = [Path(__file__).parent / "templates"]
CSV_FIELDS = [
    "snr_db",
    "velocity_kmh",
    "mode",
    "ber",
    "nmse_channel_db",
    "nmse_aircomp_db",
    "trials_used",
    "failed_trials",
    "wall_time_s",
]
GENIE_CHANNEL_MODES = ("genie-channel", "genie-both")
GENIE_SYMBOL_MODES = ("genie-symbols", "genie-both")
PATH_LIKE = Union[str, Path]


class SimulationManager:
    def __init__(self, config: ExperimentConfig) -> None:
        self._config = config
        receiver = config.receiver
        self._schedule = build_schedule(
            config.channel.num_slots,
            receiver.window_length,
            receiver.window_depth,
            receiver.neighborhood,
        )
        # 运行前检查所有扫描速度，K_max = 0 时抛出 ConfigurationError
        self._coherence = {
            velocity: coherence_params(config.channel.timing, kmh_to_ms(velocity))
            for velocity in config.sweep.velocity_kmh
        }
        self._jinja2_env = Environment(loader=FileSystemLoader(SEARCH_PATH))

    @property
    def config(self) -> ExperimentConfig:
        return self._config

    def _grid(self) -> list[tuple[float, float, Mode]]:
        """
        扫描网格 (snr, velocity, mode)，顺序固定
        """
        sweep = self._config.sweep
        return [
            (snr, velocity, mode)
            for velocity, snr, mode in product(sweep.velocity_kmh, sweep.snr_db, sweep.modes)
        ]

    def run_trial(self, snr_db: float, velocity_kmh: float, mode: Mode, trial: int) -> TrialResult:
        """
        运行单次试验：生成信道与数据帧，执行接收机（按模式替换为真值）与 AirComp

        随机数只取决于 (seed, trial, 流名称)，因此所有模式、SNR 与速度共享同一组随机数

        :return: 原始误差统计；接收机数值失败时返回 failed=True 的结果
        """
        cfg = self._config
        channel_cfg, signal_cfg, receiver_cfg = cfg.channel, cfg.signal, cfg.receiver
        seed = cfg.sweep.seed
        geom = channel_cfg.geometry
        num_slots = channel_cfg.num_slots

        params = self._coherence.get(velocity_kmh)
        if params is None:
            params = coherence_params(channel_cfg.timing, kmh_to_ms(velocity_kmh))
        geometry = build_geometry(geom, draw_angles(geom, make_rng(seed, trial, "geometry")))
        realization = generate_realization(
            geometry, params.r, num_slots, make_rng(seed, trial, "fading")
        )
        combiner = build_combiner(realization.raw_channels[0], receiver_cfg.num_beams)
        realization = beam_channels(combiner, realization)
        channel = realization.beam_channels
        assert channel is not None

        split = PowerSplit(
            data_power=signal_cfg.data_power,
            computing_power=signal_cfg.computing_power,
            noise_power=snr_to_noise(snr_db),
        )
        frame = generate_frame(geom.num_users, num_slots, split, make_rng(seed, trial, "symbols"))
        received = synthesize_rx(
            channel, frame.transmit, split.noise_power, make_rng(seed, trial, "noise")
        )

        stats = second_order_stats(
            beam_array_responses(combiner, geometry), params.r, range(self._schedule.max_lag + 1)
        )
        receiver = JccctReceiver(
            stats,
            self._schedule,
            split,
            receiver_cfg.iterations,
            receiver_cfg.damping,
            known_channel=channel if mode in GENIE_CHANNEL_MODES else None,
        )

        try:
            output = receiver.run(received, channel[0])
        except NumericalFailure as e:
            logger.error(f"试验 {trial} (snr={snr_db}, v={velocity_kmh}, {mode}) 数值失败: {e}")
            return TrialResult(trial=trial, failed=True, message=str(e))

        estimate = output.channels.mean
        if mode in GENIE_SYMBOL_MODES:
            symbols = frame.data
            xi = np.zeros(frame.data.shape)
        else:
            symbols = output.decisions
            # ψ^d 包含计算符号的功率，只保留通信数据部分
            xi = np.maximum(output.symbols.mse - split.computing_power, 0.0)

        inputs = AirCompInputs(
            received=received,
            channel=channel if mode in GENIE_CHANNEL_MODES else estimate,
            symbols=symbols,
            xi=xi,
            computing_power=split.computing_power,
            noise_power=split.noise_power,
        )
        function = estimate_function(inputs, mmse_combiner(inputs))
        target = frame.target

        return TrialResult(
            trial=trial,
            bit_errors=int(np.count_nonzero(output.bits != frame.bits)),
            total_bits=int(frame.bits.size),
            channel_error=float(np.sum(np.abs(channel - estimate) ** 2)),
            channel_energy=float(np.sum(np.abs(channel) ** 2)),
            function_error=float(np.sum((target - function.value) ** 2)),
            function_energy=float(np.sum(target**2)),
        )

    @staticmethod
    def aggregate(
        results: Iterable[TrialResult],
        snr_db: float,
        velocity_kmh: float,
        mode: Mode,
        wall_time: Optional[float] = None,
    ) -> MetricsRecord:
        """
        汇总同一网格点的试验：BER 为总误比特数/总比特数，NMSE 为误差和与能量和之比 (dB)

        有效试验数为 0 或分母为 0 时记录被标记为无效
        """
        results = list(results)
        valid = [r for r in results if not r.failed]
        failed = len(results) - len(valid)

        total_bits = sum(r.total_bits for r in valid)
        channel_energy = sum(r.channel_energy for r in valid)
        function_energy = sum(r.function_energy for r in valid)

        if not valid or total_bits == 0 or channel_energy == 0 or function_energy == 0:
            logger.warning(f"网格点 (snr={snr_db}, v={velocity_kmh}, {mode}) 没有可用的统计量")
            return MetricsRecord(
                snr_db=snr_db,
                velocity_kmh=velocity_kmh,
                mode=mode,
                ber=float("nan"),
                nmse_channel_db=float("nan"),
                nmse_aircomp_db=float("nan"),
                trials_used=len(valid),
                failed_trials=failed,
                wall_time_s=wall_time,
                valid=False,
            )

        return MetricsRecord(
            snr_db=snr_db,
            velocity_kmh=velocity_kmh,
            mode=mode,
            ber=sum(r.bit_errors for r in valid) / total_bits,
            nmse_channel_db=to_db(sum(r.channel_error for r in valid) / channel_energy),
            nmse_aircomp_db=to_db(sum(r.function_error for r in valid) / function_energy),
            trials_used=len(valid),
            failed_trials=failed,
            wall_time_s=wall_time,
        )

    def _run_point(
        self, executor: Optional[ProcessPoolExecutor], snr: float, velocity: float, mode: Mode
    ) -> list[TrialResult]:
        trials = range(self._config.sweep.trials)
        if executor is None:
            return [self.run_trial(snr, velocity, mode, trial) for trial in trials]

        tasks = [(snr, velocity, mode, trial) for trial in trials]
        chunksize = max(1, len(tasks) // (4 * self._config.sweep.workers))
        # map 保持提交顺序，汇总结果与进程数无关
        return list(executor.map(_worker_trial, tasks, chunksize=chunksize))

    def run_sweep(self) -> list[MetricsRecord]:
        """
        遍历 (snr, velocity, mode) 网格，按试验并行
        """
        sweep = self._config.sweep
        grid = self._grid()
        logger.info(
            f"开始扫描: {len(grid)} 个网格点 × {sweep.trials} 次试验, {sweep.workers} 个进程"
        )

        executor = (
            ProcessPoolExecutor(
                max_workers=sweep.workers,
                initializer=_init_worker,
                initargs=(self._config,),
            )
            if sweep.workers > 1
            else None
        )

        records: list[MetricsRecord] = []
        try:
            for snr, velocity, mode in tqdm(grid, desc="sweep", unit="point", disable=None):
                start_time = time.perf_counter()
                results = self._run_point(executor, snr, velocity, mode)
                wall_time = time.perf_counter() - start_time
                record = self.aggregate(
                    results,
                    snr,
                    velocity,
                    mode,
                    wall_time if sweep.record_wall_time else None,
                )
                logger.info(
                    f"snr={snr} dB, v={velocity} km/h, {mode}: BER={record.ber:.3e}, "
                    f"NMSE_H={record.nmse_channel_db:.2f} dB, NMSE_f={record.nmse_aircomp_db:.2f} dB "
                    f"({record.failed_trials} 次失败)"
                )
                records.append(record)
        finally:
            if executor is not None:
                executor.shutdown()

        logger.success(f"扫描完成，共 {len(records)} 条记录✨")
        return records

    def exceeds_failure_budget(self, records: Sequence[MetricsRecord]) -> bool:
        """
        任一网格点失败试验比例超过 failure_budget
        """
        budget = self._config.sweep.failure_budget
        for record in records:
            total = record.trials_used + record.failed_trials
            if total and record.failed_trials / total > budget:
                logger.error(
                    f"网格点 (snr={record.snr_db}, v={record.velocity_kmh}, {record.mode}) "
                    f"失败比例 {record.failed_trials}/{total} 超过上限 {budget}"
                )
                return True
        return False

    @staticmethod
    def write_csv(records: Sequence[MetricsRecord], path: PATH_LIKE) -> Path:
        """
        写出结果 CSV，每个网格点一行
        """
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", newline="", encoding="utf-8") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(CSV_FIELDS)
                for record in records:
                    writer.writerow(_format_row(record))
        except OSError as e:
            raise OSError(f"写入 CSV 失败: {path}: {e}") from e

        logger.info(f"结果已写入 {path}")
        return path

    def _render_template(self, template_name: str, **context) -> str:
        if not template_name.endswith((".j2", ".jinja2")):
            template_name += ".jinja2"
        try:
            template = self._jinja2_env.get_template(template_name)
        except TemplateNotFound:
            logger.error(f"模板文件 {template_name} 未找到!")
            raise
        return template.render(**context)

    def write_plot_script(self, csv_path: PATH_LIKE, path: PATH_LIKE) -> Path:
        """
        生成绘制 BER / 信道 NMSE / AirComp NMSE 曲线的 matplotlib 脚本
        """
        path = Path(path)
        sweep = self._config.sweep
        script = self._render_template(
            "plot_curves.py",
            csv_path=Path(csv_path).as_posix(),
            velocities=list(sweep.velocity_kmh),
            modes=list(sweep.modes),
        )
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(script, encoding="utf-8")
        except OSError as e:
            raise OSError(f"写入绘图脚本失败: {path}: {e}") from e

        logger.info(f"绘图脚本已写入 {path}")
        return path


def _format_float(value: Optional[float]) -> str:
    if value is None:
        return ""
    return f"{value:.10g}"


def _format_row(record: MetricsRecord) -> list[str]:
    return [
        _format_float(record.snr_db),
        _format_float(record.velocity_kmh),
        record.mode,
        _format_float(record.ber),
        _format_float(record.nmse_channel_db),
        _format_float(record.nmse_aircomp_db),
        str(record.trials_used),
        str(record.failed_trials),
        _format_float(record.wall_time_s),
    ]


_worker_manager: Optional[SimulationManager] = None


def _init_worker(config: ExperimentConfig) -> None:
    global _worker_manager
    _worker_manager = SimulationManager(config)


def _worker_trial(task: tuple[float, float, Mode, int]) -> TrialResult:
    assert _worker_manager
    return _worker_manager.run_trial(*task)
