import csv
import hashlib
import json
from pathlib import Path

import pytest

from codesign.accel import MixedDataflowPlan, estimate_mixed
from codesign.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from codesign.errors import ConfigValidationError, MissingCellsError
from codesign.harness import (
    cmd_codesign,
    cmd_mixed,
    cmd_report,
    cmd_srcc,
    cmd_stage1,
    cmd_table,
    config_from_dict,
    resolve_all,
)
from codesign.perftable import read_table_csv


def tiny_config(out_dir, **overrides):
    raw = {
        "space": {"kind": "cell", "seed": 3, "count": 10},
        "hardware": {"seed": 3, "counts": {"KC-P": 3, "X-P": 3}},
        "proxy": {"index": 0},
        "k": 4,
        "constraints": [
            {"latency_budget": 1e12, "energy_budget": 1e15, "resource_budget": 1e9},
        ],
        "mixed": {"enabled": True, "plan_count": 5, "plan_seed": 2},
        "output_dir": str(out_dir),
    }
    raw.update(overrides)
    return raw


def digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class TestConfigValidation:
    def test_collects_every_violation(self):
        with pytest.raises(ConfigValidationError) as err:
            config_from_dict({
                "space": {"kind": "resnet", "seed": "x", "count": 0},
                "hardware": {"seed": 1, "counts": {"bad-flow": 3}},
                "proxy": {},
                "k": 0,
                "constraints": [],
                "output_dir": "",
            })
        text = "; ".join(err.value.violations)
        assert len(err.value.violations) >= 6
        assert "space.kind" in text
        assert "proxy" in text
        assert "constraints" in text

    def test_seed_must_be_explicit(self):
        raw = tiny_config("/tmp/x")
        del raw["space"]["seed"]
        with pytest.raises(ConfigValidationError, match="space.seed"):
            config_from_dict(raw)

    def test_proxy_index_bounds_checked_at_resolution(self, tmp_path):
        config = config_from_dict(tiny_config(tmp_path, proxy={"index": 99}))
        with pytest.raises(ConfigValidationError, match="out of range"):
            resolve_all(config)

    def test_random_proxy_is_deterministic(self, tmp_path):
        config = config_from_dict(tiny_config(tmp_path, proxy={"random_seed": 4}))
        _, _, p1 = resolve_all(config)
        _, _, p2 = resolve_all(config)
        assert p1 == p2

    def test_mutually_exclusive_proxy_selectors(self, tmp_path):
        with pytest.raises(ConfigValidationError, match="mutually exclusive"):
            config_from_dict(tiny_config(tmp_path, proxy={"index": 0, "random_seed": 1}))


class TestTableCommand:
    def test_row_count_and_rerun_identical(self, tmp_path):
        config = config_from_dict(tiny_config(tmp_path))
        path = cmd_table(config)
        space, hw, _ = resolve_all(config)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 1 + space.size * hw.size
        first = digest(path)
        path.unlink()
        cmd_table(config)
        assert digest(path) == first

    def test_single_cell_table(self, tmp_path):
        config = config_from_dict(tiny_config(
            tmp_path,
            space={"kind": "cell", "seed": 5, "count": 1},
            hardware={"seed": 5, "counts": {"X-P": 1}},
        ))
        path = cmd_table(config)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 2

    def test_resume_reuses_persisted_table(self, tmp_path, caplog):
        config = config_from_dict(tiny_config(tmp_path))
        cmd_table(config)
        with caplog.at_level("INFO"):
            cmd_table(config)
        assert any("reusing persisted" in r.message for r in caplog.records)

    def test_space_dumps_are_canonical(self, tmp_path):
        config = config_from_dict(tiny_config(tmp_path))
        cmd_table(config)
        archs = json.loads((tmp_path / "architectures.json").read_text())
        accels = json.loads((tmp_path / "accelerators.json").read_text())
        space, hw, _ = resolve_all(config)
        assert len(archs) == space.size
        assert len(accels) == hw.size
        assert archs[0]["architecture"]["kind"] == "cell"

    def test_no_temp_files_left_behind(self, tmp_path):
        config = config_from_dict(tiny_config(tmp_path))
        cmd_table(config)
        assert not list(tmp_path.glob("*.tmp-*"))


class TestSrccCommand:
    def test_outputs_and_round_trip(self, tmp_path):
        config = config_from_dict(tiny_config(tmp_path))
        table_path = cmd_table(config)
        cmd_srcc(config)
        direct = (tmp_path / "srcc_latency.csv").read_text()

        other = tmp_path / "reused"
        config2 = config_from_dict(tiny_config(other))
        cmd_srcc(config2, table_path=table_path)
        assert (other / "srcc_latency.csv").read_text() == direct

    def test_matrix_csv_shape(self, tmp_path):
        config = config_from_dict(tiny_config(tmp_path))
        cmd_srcc(config)
        with open(tmp_path / "srcc_energy.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        _, hw, _ = resolve_all(config)
        assert len(rows) == 1 + hw.size
        assert len(rows[0]) == 1 + hw.size

    def test_missing_cells_detected(self, tmp_path):
        config = config_from_dict(tiny_config(tmp_path))
        path = cmd_table(config)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-1]) + "\n")
        with pytest.raises(MissingCellsError, match="missing 1 cells"):
            read_table_csv(path)


class TestStage1Command:
    def test_optimal_set_json(self, tmp_path):
        config = config_from_dict(tiny_config(tmp_path))
        path = cmd_stage1(config)
        payload = json.loads(path.read_text())
        assert payload["proxy"]["accel_id"]
        assert len(payload["constraint_grid"]) <= config.k
        assert payload["entries"]
        for entry in payload["entries"]:
            assert set(entry) == {"arch_id", "architecture", "latency_cycles",
                                  "energy_nj", "accuracy"}


class TestCodesignCommand:
    def test_comparison_and_sweep_shapes(self, tmp_path):
        config = config_from_dict(tiny_config(tmp_path))
        cmd_codesign(config)
        space, hw, _ = resolve_all(config)
        with open(tmp_path / "comparison.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 3 * len(config.constraints)
        coupled = [r for r in rows if r["strategy"] == "coupled"]
        assert all(r["error"] == "" for r in rows)
        assert float(coupled[0]["gap_vs_oracle"]) == 0.0

        with open(tmp_path / "proxy_sweep.csv", newline="") as fh:
            sweep = list(csv.DictReader(fh))
        assert len(sweep) == hw.size * len(config.constraints)
        for row in sweep:
            assert float(row["srcc_latency_vs_target"]) <= 1.0
            assert float(row["gap_vs_oracle"]) >= -1e-12

    def test_no_sweep_flag(self, tmp_path):
        config = config_from_dict(tiny_config(tmp_path))
        cmd_codesign(config, sweep_all_proxies=False)
        assert not (tmp_path / "proxy_sweep.csv").exists()


class TestMixedCommand:
    def test_outputs_match_scalar_estimates(self, tmp_path):
        config = config_from_dict(tiny_config(tmp_path))
        path = cmd_mixed(config)
        table = read_table_csv(path)
        plans = json.loads((tmp_path / "mixed_plans.json").read_text())
        assert len(plans) == config.mixed_plan_count
        space, hw, _ = resolve_all(config)
        by_id = {a.accel_id: a for a in hw.accelerators}
        plan0 = MixedDataflowPlan(
            segments=tuple(by_id[s] for s in plans[0]["segments"]))
        est = estimate_mixed(space.architectures[0], plan0)
        assert int(table.latency[0, 0]) == est.latency_cycles
        assert float(table.energy[0, 0]) == est.energy_nj

    def test_requires_enabled_flag(self, tmp_path):
        config = config_from_dict(tiny_config(tmp_path, mixed={"enabled": False}))
        with pytest.raises(ConfigValidationError):
            cmd_mixed(config)

    def test_plan_sampling_reproducible(self, tmp_path):
        config = config_from_dict(tiny_config(tmp_path))
        cmd_mixed(config)
        first = (tmp_path / "mixed_plans.json").read_text()
        cmd_mixed(config)
        assert (tmp_path / "mixed_plans.json").read_text() == first


CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


class TestShippedConfigs:
    def test_cell_config_resolves_to_full_scale(self):
        raw = json.loads((CONFIG_DIR / "cell-1017x133.json").read_text())
        config = config_from_dict(raw)
        space, hw, proxy = resolve_all(config)
        assert space.size == 1017
        assert hw.size == 133
        assert proxy in hw.accelerators

    def test_mobile_config_resolves_to_full_scale(self):
        raw = json.loads((CONFIG_DIR / "mobile-1046x132.json").read_text())
        config = config_from_dict(raw)
        space, hw, proxy = resolve_all(config)
        assert space.size == 1046
        assert hw.size == 132
        assert proxy in hw.accelerators


class TestReportCommand:
    def test_report_lists_artifacts(self, tmp_path):
        config = config_from_dict(tiny_config(tmp_path))
        cmd_table(config)
        text = cmd_report(config)
        assert "perf_table.csv" in text
        assert "matches the supplied config" in text
        assert (tmp_path / "report.txt").exists()


class TestCliEntry:
    def write_config(self, tmp_path, raw) -> Path:
        path = tmp_path / "config.json"
        path.write_text(json.dumps(raw))
        return path

    def test_table_command_exit_ok(self, tmp_path, capsys):
        cfg = self.write_config(tmp_path, tiny_config(tmp_path / "bundle"))
        assert main(["--config", str(cfg), "table"]) == EXIT_OK
        out = capsys.readouterr().out.strip()
        assert out.endswith("perf_table.csv")

    def test_invalid_config_exit_two(self, tmp_path, capsys):
        cfg = self.write_config(tmp_path, {"space": {"kind": "bad"}})
        assert main(["--config", str(cfg), "table"]) == EXIT_CONFIG
        assert "config error" in capsys.readouterr().err

    def test_runtime_error_exit_one(self, tmp_path, capsys):
        cfg = self.write_config(tmp_path, tiny_config(tmp_path / "bundle"))
        code = main(["--config", str(cfg), "srcc",
                     "--table", str(tmp_path / "missing.csv")])
        assert code == EXIT_RUNTIME

    def test_out_override(self, tmp_path):
        cfg = self.write_config(tmp_path, tiny_config(tmp_path / "bundle"))
        override = tmp_path / "elsewhere"
        assert main(["--config", str(cfg), "--out", str(override), "table"]) == EXIT_OK
        assert (override / "perf_table.csv").exists()

    def test_report_command(self, tmp_path, capsys):
        cfg = self.write_config(tmp_path, tiny_config(tmp_path / "bundle"))
        main(["--config", str(cfg), "table"])
        capsys.readouterr()
        assert main(["--config", str(cfg), "report"]) == EXIT_OK
        assert "artifacts" in capsys.readouterr().out
