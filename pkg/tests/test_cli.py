"""Config loading, command execution, artifacts, determinism."""

import csv
import json
from pathlib import Path

import pytest

from bdies2d.cli import CSV_HEADER, ConfigError, fmt17, load_config, main, run


def write_config(tmp_path, payload, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return p


MINIMAL_SOLVE = {
    "command": "solve",
    "domain": {"kind": "disk", "center": [0.0, 0.0], "radius": 0.4},
    "case": "exp_saddle",
    "family": "x",
    "resolutions": {"n_boundary": 128, "n_t": 32, "n_s": 12},
}


class TestLoadConfig:
    def test_minimal_solve_valid(self, tmp_path):
        cfg = load_config(write_config(tmp_path, MINIMAL_SOLVE))
        assert cfg.command == "solve"
        assert cfg.resolutions == [(128, 32, 12)]

    def test_unknown_keys_rejected(self, tmp_path):
        bad = dict(MINIMAL_SOLVE, extra=1)
        with pytest.raises(ConfigError, match="unknown keys"):
            load_config(write_config(tmp_path, bad))

    def test_unknown_domain_key_rejected(self, tmp_path):
        bad = dict(MINIMAL_SOLVE,
                   domain={"kind": "disk", "radius": 0.4, "color": "red"})
        with pytest.raises(ConfigError, match="unknown keys"):
            load_config(write_config(tmp_path, bad))

    def test_large_diameter_rejected_with_message(self, tmp_path):
        bad = dict(MINIMAL_SOLVE,
                   domain={"kind": "disk", "center": [0, 0], "radius": 0.6})
        with pytest.raises(ConfigError, match="diameter"):
            load_config(write_config(tmp_path, bad))

    def test_large_diameter_allowed_with_flag(self, tmp_path):
        ok = dict(MINIMAL_SOLVE,
                  domain={"kind": "disk", "center": [0, 0], "radius": 0.6},
                  allow_large_domain=True)
        cfg = load_config(write_config(tmp_path, ok))
        assert cfg.allow_large_domain

    def test_family_y_accepted(self, tmp_path):
        cfg = load_config(write_config(tmp_path,
                                       dict(MINIMAL_SOLVE, family="y")))
        assert cfg.family == "y"

    def test_solve_requires_case(self, tmp_path):
        bad = {k: v for k, v in MINIMAL_SOLVE.items() if k != "case"}
        with pytest.raises(ConfigError, match="case"):
            load_config(write_config(tmp_path, bad))

    def test_study_needs_three_resolutions(self, tmp_path):
        bad = dict(MINIMAL_SOLVE, command="study",
                   resolutions=[{"n_boundary": 32, "n_t": 12, "n_s": 6}])
        with pytest.raises(ConfigError, match="3 resolutions"):
            load_config(write_config(tmp_path, bad))

    def test_odd_boundary_count_rejected(self, tmp_path):
        bad = dict(MINIMAL_SOLVE,
                   resolutions={"n_boundary": 33, "n_t": 12, "n_s": 6})
        with pytest.raises(ConfigError, match="even"):
            load_config(write_config(tmp_path, bad))

    def test_parse_error(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text("{not json")
        with pytest.raises(ConfigError, match="JSON"):
            load_config(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "nope.json")


class TestRunCommands:
    def test_solve_const_one(self, tmp_path):
        cfg = load_config(write_config(tmp_path, dict(
            MINIMAL_SOLVE, case="const_one",
            resolutions={"n_boundary": 64, "n_t": 16, "n_s": 8})))
        status = run(cfg, tmp_path / "out")
        assert status == 0
        results = json.loads((tmp_path / "out" / "results.json").read_text())
        checks = {c["name"]: c for c in results["checks"]}
        assert checks["err_u_max_rel"]["value"] < 1e-8
        assert checks["err_u_max_rel"]["pass"]
        assert (tmp_path / "out" / "errors.csv").exists()

    def test_solve_family_y_marked_experimental(self, tmp_path):
        cfg = load_config(write_config(tmp_path, dict(
            MINIMAL_SOLVE, family="y", case="const_one",
            resolutions={"n_boundary": 64, "n_t": 16, "n_s": 8})))
        assert run(cfg, tmp_path / "out") == 0
        results = json.loads((tmp_path / "out" / "results.json").read_text())
        assert results["experimental"] is True

    def test_validate_exponential(self, tmp_path):
        cfg = load_config(write_config(tmp_path, {
            "command": "validate",
            "domain": {"kind": "disk", "center": [0, 0], "radius": 0.4},
            "coefficient": {"preset": "exponential", "direction": [1, 1]},
            "family": "x",
            "resolutions": {"n_boundary": 64, "n_t": 16, "n_s": 8},
        }))
        assert run(cfg, tmp_path / "out") == 0
        results = json.loads((tmp_path / "out" / "results.json").read_text())
        assert all(c["pass"] for c in results["checks"])
        assert not (tmp_path / "out" / "errors.csv").exists()

    def test_study_writes_three_rows(self, tmp_path):
        cfg = load_config(write_config(tmp_path, {
            "command": "study",
            "domain": {"kind": "disk", "center": [0, 0], "radius": 0.4},
            "case": "exp_saddle",
            "family": "x",
            "resolutions": [
                {"n_boundary": 48, "n_t": 16, "n_s": 8},
                {"n_boundary": 96, "n_t": 24, "n_s": 10},
                {"n_boundary": 192, "n_t": 48, "n_s": 16},
            ],
        }))
        assert run(cfg, tmp_path / "out") == 0
        with open(tmp_path / "out" / "errors.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 3
        errs = [float(r["err_u_max"]) for r in rows]
        assert errs[0] > errs[1] > errs[2]
        assert open(tmp_path / "out" / "errors.csv").readline().strip() == CSV_HEADER

    def test_compare_emits_both_tables(self, tmp_path):
        cfg = load_config(write_config(tmp_path, {
            "command": "compare",
            "domain": {"kind": "disk", "center": [0, 0], "radius": 0.4},
            "case": "quad_coeff",
            "family": "x",
            "resolutions": [
                {"n_boundary": 32, "n_t": 12, "n_s": 6},
                {"n_boundary": 64, "n_t": 24, "n_s": 12},
            ],
        }))
        assert run(cfg, tmp_path / "out") == 0
        results = json.loads((tmp_path / "out" / "results.json").read_text())
        assert len(results["family_x_rows"]) == 2
        assert len(results["family_y_rows"]) == 2
        assert (tmp_path / "out" / "errors_family_y.csv").exists()

    def test_determinism_modulo_timings(self, tmp_path):
        cfg_path = write_config(tmp_path, dict(
            MINIMAL_SOLVE, case="const_one",
            resolutions={"n_boundary": 64, "n_t": 16, "n_s": 8}))
        for d in ("a", "b"):
            assert run(load_config(cfg_path), tmp_path / d) == 0

        def strip_timing_csv(path):
            out = []
            for line in Path(path).read_text().splitlines():
                out.append(",".join(line.split(",")[:-1]))
            return out

        assert (strip_timing_csv(tmp_path / "a" / "errors.csv")
                == strip_timing_csv(tmp_path / "b" / "errors.csv"))
        ra = json.loads((tmp_path / "a" / "results.json").read_text())
        rb = json.loads((tmp_path / "b" / "results.json").read_text())
        ra.pop("timings"), rb.pop("timings")
        assert ra == rb


class TestMain:
    def test_exit_codes(self, tmp_path):
        p = write_config(tmp_path, dict(
            MINIMAL_SOLVE, case="const_one",
            resolutions={"n_boundary": 64, "n_t": 16, "n_s": 8}))
        assert main(["solve", "--config", str(p),
                     "--out", str(tmp_path / "o")]) == 0

    def test_config_error_exit_2(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text("{")
        assert main(["solve", "--config", str(p)]) == 2

    def test_command_mismatch_exit_2(self, tmp_path):
        p = write_config(tmp_path, MINIMAL_SOLVE)
        assert main(["validate", "--config", str(p)]) == 2


class TestFormatting:
    def test_fmt17_round_trips(self):
        vals = [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 3.141592653589793]
        for v in vals:
            assert float(fmt17(v)) == v
