import csv
import math

import numpy as np
import pytest

from icc_mmwave_sim.exceptions import ConfigurationError, NumericalFailure
from icc_mmwave_sim.manager import CSV_FIELDS, SimulationManager
from icc_mmwave_sim.models import MetricsRecord, TrialResult
from icc_mmwave_sim.receiver import JccctReceiver
from icc_mmwave_sim.utils import NMSE_FLOOR_DB


def test_aggregate_pools_errors_over_trials():
    results = [
        TrialResult(trial=0, bit_errors=3, total_bits=100, channel_error=1.0, channel_energy=10.0,
                    function_error=0.5, function_energy=5.0),
        TrialResult(trial=1, bit_errors=1, total_bits=100, channel_error=0.0, channel_energy=10.0,
                    function_error=0.0, function_energy=5.0),
        TrialResult(trial=2, failed=True, message="η 非正"),
    ]
    record = SimulationManager.aggregate(results, 10.0, 20.0, "full")
    assert record.ber == pytest.approx(0.02)
    assert record.nmse_channel_db == pytest.approx(-13.0103, abs=1e-4)
    assert record.nmse_aircomp_db == pytest.approx(-13.0103, abs=1e-4)
    assert record.trials_used == 2
    assert record.failed_trials == 1
    assert record.valid
    assert record.wall_time_s is None


def test_aggregate_without_usable_trials_is_invalid():
    record = SimulationManager.aggregate([TrialResult(trial=0, failed=True)], 0.0, 10.0, "full")
    assert not record.valid
    assert math.isnan(record.ber)
    assert record.trials_used == 0
    assert record.failed_trials == 1


def test_aggregate_floors_exact_estimates():
    result = TrialResult(trial=0, bit_errors=0, total_bits=10, channel_error=0.0, channel_energy=1.0,
                         function_error=0.0, function_energy=1.0)
    record = SimulationManager.aggregate([result], 30.0, 10.0, "genie-both")
    assert record.ber == 0
    assert record.nmse_channel_db == NMSE_FLOOR_DB


def test_run_trial_is_deterministic(small_config):
    manager = SimulationManager(small_config)
    assert manager.run_trial(10.0, 10.0, "full", 0) == manager.run_trial(10.0, 10.0, "full", 0)
    assert manager.run_trial(10.0, 10.0, "full", 0) != manager.run_trial(10.0, 10.0, "full", 1)


def test_modes_share_random_numbers(small_config):
    manager = SimulationManager(small_config)
    full = manager.run_trial(10.0, 10.0, "full", 0)
    genie = manager.run_trial(10.0, 10.0, "genie-symbols", 0)
    # 相同的信道、数据与噪声，只有 AirComp 的输入不同
    assert full.bit_errors == genie.bit_errors
    assert full.channel_error == genie.channel_error
    assert full.channel_energy == genie.channel_energy
    assert full.function_energy == genie.function_energy


def test_genie_channel_has_no_channel_error(small_config):
    manager = SimulationManager(small_config)
    result = manager.run_trial(40.0, 10.0, "genie-both", 0)
    assert result.channel_error == 0
    assert result.bit_errors == 0
    assert result.total_bits == 32 * 2 * 2
    assert not result.failed


def test_numerical_failure_marks_trial_failed(small_config, monkeypatch):
    def explode(self, received, h0):
        raise NumericalFailure("η 非正")

    monkeypatch.setattr(JccctReceiver, "run", explode)
    result = SimulationManager(small_config).run_trial(10.0, 10.0, "full", 0)
    assert result.failed
    assert "η" in result.message


def test_run_sweep_covers_grid(small_config):
    config = small_config.with_overrides(sweep={"snr_db": [5.0, 15.0]})
    records = SimulationManager(config).run_sweep()
    assert len(records) == 2 * 4
    assert [(r.snr_db, r.mode) for r in records[:4]] == [
        (5.0, "full"),
        (5.0, "genie-channel"),
        (5.0, "genie-symbols"),
        (5.0, "genie-both"),
    ]
    assert all(r.valid and r.trials_used == 2 for r in records)
    assert all(0.0 <= r.ber <= 1.0 for r in records)


def test_csv_is_identical_across_worker_counts(small_config, tmp_path):
    serial = SimulationManager(small_config.with_overrides(sweep={"modes": ["full"]}))
    parallel = SimulationManager(small_config.with_overrides(sweep={"modes": ["full"], "workers": 2}))
    first = serial.write_csv(serial.run_sweep(), tmp_path / "serial.csv")
    second = parallel.write_csv(parallel.run_sweep(), tmp_path / "parallel.csv")
    assert first.read_bytes() == second.read_bytes()


def test_write_csv_format(tmp_path):
    records = [
        MetricsRecord(snr_db=10.0, velocity_kmh=20.0, mode="full", ber=0.0125,
                      nmse_channel_db=-21.5, nmse_aircomp_db=-9.25, trials_used=500),
        MetricsRecord(snr_db=15.0, velocity_kmh=20.0, mode="genie-both", ber=0.0,
                      nmse_channel_db=NMSE_FLOOR_DB, nmse_aircomp_db=-12.0, trials_used=499,
                      failed_trials=1, wall_time_s=1.5),
    ]
    path = SimulationManager.write_csv(records, tmp_path / "out" / "results.csv")
    with open(path, encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert rows[0] == CSV_FIELDS
    assert rows[1] == ["10", "20", "full", "0.0125", "-21.5", "-9.25", "500", "0", ""]
    assert rows[2] == ["15", "20", "genie-both", "0", "-300", "-12", "499", "1", "1.5"]


def test_wall_time_is_opt_in(small_config):
    config = small_config.with_overrides(sweep={"modes": ["genie-both"], "record_wall_time": True})
    record = SimulationManager(config).run_sweep()[0]
    assert record.wall_time_s is not None and record.wall_time_s >= 0


def test_failure_budget(small_config):
    manager = SimulationManager(small_config)
    ok = MetricsRecord(snr_db=0.0, velocity_kmh=10.0, mode="full", ber=0.1,
                       nmse_channel_db=-10.0, nmse_aircomp_db=-5.0, trials_used=95, failed_trials=5)
    bad = MetricsRecord(snr_db=0.0, velocity_kmh=10.0, mode="full", ber=0.1,
                        nmse_channel_db=-10.0, nmse_aircomp_db=-5.0, trials_used=80, failed_trials=20)
    assert not manager.exceeds_failure_budget([ok])
    assert manager.exceeds_failure_budget([ok, bad])


def test_plot_script_is_rendered(small_config, tmp_path):
    manager = SimulationManager(small_config)
    path = manager.write_plot_script(tmp_path / "results.csv", tmp_path / "plot.py")
    script = path.read_text(encoding="utf-8")
    assert (tmp_path / "results.csv").as_posix() in script
    assert "VELOCITIES = [10.0]" in script
    compile(script, str(path), "exec")


def test_noise_scales_with_snr(small_config):
    manager = SimulationManager(small_config)
    low = manager.run_trial(0.0, 10.0, "genie-both", 0)
    high = manager.run_trial(30.0, 10.0, "genie-both", 0)
    assert high.function_error < low.function_error
    assert np.isclose(high.function_energy, low.function_energy)


def test_manager_checks_velocities_before_running(small_config):
    config = small_config.with_overrides(sweep={"velocity_kmh": [10.0, 40000.0]})
    with pytest.raises(ConfigurationError, match="K_max=0"):
        SimulationManager(config)


@pytest.mark.parametrize("snr_db", [15.0, 30.0])
def test_genie_aircomp_is_not_worse_than_estimated(small_config, snr_db):
    manager = SimulationManager(small_config)
    # 同一试验编号共享信道、数据与噪声，逐试验做配对比较
    gap = np.array(
        [
            manager.run_trial(snr_db, 10.0, "full", t).function_error
            - manager.run_trial(snr_db, 10.0, "genie-both", t).function_error
            for t in range(12)
        ]
    )
    # 单侧 95% 置信：不能拒绝 E[gap] >= 0
    assert gap.mean() + 1.645 * gap.std(ddof=1) / np.sqrt(gap.size) >= 0
