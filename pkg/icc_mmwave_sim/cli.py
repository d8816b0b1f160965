import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from loguru import logger

from .config import load_config
from .exceptions import ConfigurationError
from .manager import SimulationManager
from .utils import parse_float_list

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_FAILURE = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="时变毫米波信道下通信与计算一体化接收机的蒙特卡洛仿真",
    )
    parser.add_argument("--config", type=Path, default=None, help="TOML 配置文件")
    parser.add_argument("--snr", type=str, default=None, help="SNR 列表 (dB)，逗号分隔")
    parser.add_argument("--velocity", type=str, default=None, help="速度列表 (km/h)，逗号分隔")
    parser.add_argument("--trials", type=int, default=None, help="每个网格点的试验次数")
    parser.add_argument("--seed", type=int, default=None, help="64 位随机种子")
    parser.add_argument("--modes", type=str, default=None, help="评估模式，逗号分隔")
    parser.add_argument("--workers", type=int, default=None, help="并行进程数")
    parser.add_argument("--output", type=Path, default=Path("results.csv"), help="CSV 输出路径")
    parser.add_argument("--emit-plot-script", type=Path, default=None, help="生成绘图脚本的路径")
    parser.add_argument("--log-level", type=str, default="INFO", help="日志级别")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)

    logger.remove()
    logger.add(sys.stderr, level=args.log_level.upper())

    try:
        config = load_config(args.config)
        modes = None
        if args.modes is not None:
            modes = [mode.strip() for mode in args.modes.split(",") if mode.strip()]
        config = config.with_overrides(
            sweep={
                "snr_db": parse_float_list(args.snr) if args.snr is not None else None,
                "velocity_kmh": (
                    parse_float_list(args.velocity) if args.velocity is not None else None
                ),
                "trials": args.trials,
                "seed": args.seed,
                "modes": modes,
                "workers": args.workers,
            }
        )
        manager = SimulationManager(config)
    except (ConfigurationError, ValueError) as e:
        logger.error(f"配置错误: {e}")
        return EXIT_CONFIG_ERROR

    records = manager.run_sweep()
    manager.write_csv(records, args.output)
    if args.emit_plot_script is not None:
        manager.write_plot_script(args.output, args.emit_plot_script)

    if manager.exceeds_failure_budget(records):
        return EXIT_NUMERICAL_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
