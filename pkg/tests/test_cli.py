import json
from dataclasses import replace

import pytest

from qhydro.cli import (
    CSV_COLUMNS,
    ConfigError,
    SCENARIOS,
    compare_quantum_diffusion,
    config_hash,
    default_config,
    emit_timeseries,
    main,
    parse_config,
    render_config,
    run_scenario,
    write_report,
)

EXPECTED_HEADER = (
    "t,norm,energy,sigma2_measured,ent_boltzmann,dEntB_dt_fd,"
    "production_advective,production_correlation,fisher,production_diffusive,"
    "ent_von_neumann,ref_sigma2,ref_entropy,ref_divergence"
)


@pytest.fixture()
def quick_free():
    # small, fast variant of the spreading-packet scenario
    return replace(
        default_config("free_gaussian"),
        L=20.0,
        N=256,
        dt=1e-3,
        t_final=0.5,
        snapshot_stride=100,
    )


@pytest.fixture()
def quick_diffusion():
    return replace(
        default_config("diffusion_gaussian"),
        L=20.0,
        N=256,
        dt=1e-3,
        t_final=0.5,
        snapshot_stride=50,
    )


class TestConfig:
    @pytest.mark.parametrize("name", sorted(SCENARIOS))
    def test_defaults_validate(self, name):
        run_or_not = default_config(name)
        assert run_or_not.scenario == name

    def test_round_trip(self, tmp_path, quick_free):
        path = tmp_path / "cfg.ini"
        path.write_text(render_config(quick_free))
        parsed = parse_config(path)
        assert parsed == quick_free
        assert config_hash(parsed) == config_hash(quick_free)

    def test_all_violations_reported(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text(
            "[scenario]\nname = free_gaussian\n"
            "[physics]\nhbar = -1\nmass = 0\n"
            "[grid]\nN = 7\n"
        )
        with pytest.raises(ConfigError) as err:
            parse_config(path)
        text = "\n".join(err.value.problems)
        assert "hbar" in text and "mass" in text and "N" in text
        assert len(err.value.problems) >= 3

    def test_unknown_scenario(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[scenario]\nname = quantum_pinball\n")
        with pytest.raises(ConfigError, match="unknown scenario"):
            parse_config(path)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[scenario]\nname = free_gaussian\n[grid]\nM = 3\n")
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config(path)

    def test_von_neumann_budget_enforced(self):
        cfg = replace(default_config("free_gaussian"), enable_von_neumann=True)
        problems = []
        with pytest.raises(ConfigError, match="vn_max_N"):
            run_scenario(cfg)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            parse_config(tmp_path / "nope.ini")


class TestRunScenario:
    def test_free_gaussian_passes(self, quick_free):
        report = run_scenario(quick_free)
        assert report.exit_code == 0
        names = {c.name for c in report.identities}
        assert "sigma2_matches_reference" in names
        assert "production_advective_equals_correlation" in names
        assert report.provenance["version"]
        assert report.provenance["config_hash"] == config_hash(quick_free)

    def test_diffusion_passes(self, quick_diffusion):
        report = run_scenario(quick_diffusion)
        assert report.exit_code == 0
        names = {c.name for c in report.identities}
        assert "sigma2_exact_kernel" in names
        assert "entropy_nondecreasing" in names

    def test_rows_match_snapshot_count(self, quick_free):
        report = run_scenario(quick_free)
        assert len(report.rows) == 6  # t = 0 plus five strides
        assert report.rows[0].t == 0.0
        assert abs(report.rows[-1].t - 0.5) < 1e-12

    def test_von_neumann_column_sampled(self, quick_free):
        cfg = replace(quick_free, enable_von_neumann=True, vn_stride=2)
        report = run_scenario(cfg)
        vn = [r.ent_von_neumann for r in report.rows]
        assert vn[0] is not None
        assert vn[1] is None
        assert vn[2] is not None

    def test_identity_lines_are_parseable(self, quick_free):
        report = run_scenario(quick_free)
        for line in report.identity_lines():
            assert line.startswith("IDENTITY scenario=free_gaussian name=")
            assert "tolerance=" in line and "measured=" in line
            assert line.endswith("PASS") or line.endswith("FAIL")


class TestEmit:
    def test_csv_header_contract(self, tmp_path, quick_free):
        report = run_scenario(quick_free)
        paths = emit_timeseries(report, tmp_path, formats=("csv",))
        text = paths[0].read_text()
        assert text.splitlines()[0] == EXPECTED_HEADER
        assert text.isascii()

    def test_disabled_von_neumann_empty_marker(self, tmp_path, quick_free):
        report = run_scenario(quick_free)
        (path,) = emit_timeseries(report, tmp_path, formats=("csv",))
        idx = CSV_COLUMNS.index("ent_von_neumann")
        for line in path.read_text().splitlines()[1:]:
            assert line.split(",")[idx] == ""

    def test_json_mirror_field_names(self, tmp_path, quick_free):
        report = run_scenario(quick_free)
        emit_timeseries(report, tmp_path, formats=("json",))
        payload = json.loads((tmp_path / "timeseries.json").read_text())
        assert payload["columns"] == CSV_COLUMNS
        assert set(payload["rows"][0]) == set(CSV_COLUMNS)
        assert payload["rows"][1]["ent_von_neumann"] is None

    def test_byte_identical_across_runs(self, tmp_path, quick_free):
        r1 = run_scenario(quick_free)
        r2 = run_scenario(quick_free)
        d1, d2 = tmp_path / "a", tmp_path / "b"
        emit_timeseries(r1, d1)
        emit_timeseries(r2, d2)
        assert (d1 / "timeseries.csv").read_bytes() == (d2 / "timeseries.csv").read_bytes()
        assert (d1 / "timeseries.json").read_bytes() == (d2 / "timeseries.json").read_bytes()

    def test_field_dumps_on_request(self, tmp_path, quick_free):
        cfg = replace(quick_free, emit_fields=True)
        report = run_scenario(cfg)
        paths = emit_timeseries(report, tmp_path)
        field_files = [p for p in paths if p.name.startswith("fields_")]
        assert len(field_files) == len(report.rows)
        header = field_files[0].read_text().splitlines()[0]
        assert header == "x,rho,u_advective"

    def test_report_json(self, tmp_path, quick_free):
        report = run_scenario(quick_free)
        path = write_report(report, tmp_path)
        payload = json.loads(path.read_text())
        assert payload["scenario"] == "free_gaussian"
        assert payload["exit_code"] == 0
        assert all("tolerance" in c and "measured" in c for c in payload["identities"])


class TestCompare:
    def test_matched_start_and_separation(self, quick_free):
        cfg = replace(quick_free, D=0.5, t_final=1.0, snapshot_stride=200)
        report = compare_quantum_diffusion(cfg)
        assert report.exit_code == 0
        rows = report.rows
        assert rows[0]["rho_l2_divergence"] < 1e-13
        assert rows[-1]["rho_l2_divergence"] > 1e-3  # they separate immediately
        # widths: quadratic vs linear growth
        assert rows[-1]["sigma2_quantum"] < rows[-1]["sigma2_diffusive"]

    def test_entropy_crossover_asserted_on_long_runs(self):
        cfg = replace(
            default_config("free_gaussian"),
            L=40.0,
            N=1024,
            D=0.5,
            dt=1e-3,
            t_final=6.0,
            snapshot_stride=500,
        )
        report = compare_quantum_diffusion(cfg)
        names = {c.name for c in report.identities}
        assert "quantum_entropy_overtakes_diffusive" in names
        assert report.exit_code == 0

    def test_compare_emits_own_table(self, tmp_path, quick_free):
        cfg = replace(quick_free, t_final=0.2, snapshot_stride=100)
        report = compare_quantum_diffusion(cfg)
        paths = emit_timeseries(report, tmp_path)
        assert (tmp_path / "compare.csv").exists()
        header = (tmp_path / "compare.csv").read_text().splitlines()[0]
        assert header.startswith("t,sigma2_quantum,ref_sigma2_quantum")


class TestMain:
    def test_list_scenarios(self, capsys):
        assert main(["list-scenarios"]) == 0
        out = capsys.readouterr().out
        for name in SCENARIOS:
            assert name in out

    def test_print_default_config(self, capsys):
        assert main(["print-default-config", "diffusion_gaussian"]) == 0
        out = capsys.readouterr().out
        assert "[scenario]" in out and "name = diffusion_gaussian" in out

    def test_run_end_to_end(self, tmp_path, capsys, quick_free):
        path = tmp_path / "cfg.ini"
        path.write_text(render_config(replace(quick_free, directory=str(tmp_path / "out"))))
        code = main(["run", str(path)])
        assert code == 0
        assert (tmp_path / "out" / "timeseries.csv").exists()
        assert (tmp_path / "out" / "report.json").exists()
        out = capsys.readouterr().out
        assert "IDENTITY scenario=free_gaussian" in out

    def test_config_error_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.ini"
        path.write_text("[scenario]\nname = free_gaussian\n[grid]\nN = 7\n")
        assert main(["run", str(path)]) == 2
        assert "config error" in capsys.readouterr().err

    def test_identity_failure_exit_code(self, tmp_path, capsys):
        # an unresolved grid cannot hold the spreading-packet references
        path = tmp_path / "under.ini"
        path.write_text(
            "[scenario]\nname = free_gaussian\n"
            "[grid]\nL = 5.0\nN = 16\n"
            "[evolution]\ndt = 0.01\nt_final = 2.0\nsnapshot_stride = 20\n"
            f"[output]\ndirectory = {tmp_path / 'out'}\n"
        )
        assert main(["run", str(path)]) == 1
        assert "FAIL" in capsys.readouterr().out

    def test_numeric_abort_exit_code(self, tmp_path, capsys):
        # a density far narrower than the grid spacing rings negative
        path = tmp_path / "spike.ini"
        path.write_text(
            "[scenario]\nname = diffusion_gaussian\n"
            "[physics]\nsigma0 = 1e-3\n"
            "[grid]\nL = 20.0\nN = 256\n"
            "[evolution]\ndt = 1e-4\nt_final = 0.01\nsnapshot_stride = 10\n"
            f"[output]\ndirectory = {tmp_path / 'out'}\n"
        )
        assert main(["run", str(path)]) == 3
        assert "numeric abort" in capsys.readouterr().err

    def test_vn_flag_override(self, tmp_path, quick_free):
        path = tmp_path / "cfg.ini"
        out_dir = tmp_path / "out"
        path.write_text(render_config(replace(quick_free, directory=str(out_dir))))
        assert main(["run", str(path), "--vn", "on"]) == 0
        payload = json.loads((out_dir / "timeseries.json").read_text())
        assert payload["rows"][0]["ent_von_neumann"] is not None

    def test_format_flag_restricts_output(self, tmp_path, quick_free):
        path = tmp_path / "cfg.ini"
        out_dir = tmp_path / "out"
        path.write_text(render_config(replace(quick_free, directory=str(out_dir))))
        assert main(["run", str(path), "--format", "json"]) == 0
        assert (out_dir / "timeseries.json").exists()
        assert not (out_dir / "timeseries.csv").exists()

    def test_seed_recorded(self, tmp_path, quick_free):
        path = tmp_path / "cfg.ini"
        out_dir = tmp_path / "out"
        path.write_text(render_config(replace(quick_free, directory=str(out_dir))))
        assert main(["run", str(path), "--seed", "7"]) == 0
        payload = json.loads((out_dir / "report.json").read_text())
        assert payload["provenance"]["seed"] == 7

    def test_compare_command(self, tmp_path, capsys, quick_free):
        path = tmp_path / "cfg.ini"
        out_dir = tmp_path / "out"
        cfg = replace(quick_free, t_final=0.2, snapshot_stride=100, directory=str(out_dir))
        path.write_text(render_config(cfg))
        assert main(["compare", str(path)]) == 0
        assert (out_dir / "compare.csv").exists()

    def test_custom_scenario(self, tmp_path, capsys):
        path = tmp_path / "cfg.ini"
        out_dir = tmp_path / "out"
        path.write_text(
            "[scenario]\nname = custom\n"
            "[physics]\npotential = harmonic\nomega0 = 2.0\nsigma0 = 0.6\nwidth_rate = 0.1\n"
            "[grid]\nL = 12.0\nN = 256\n"
            "[evolution]\ndt = 1e-3\nt_final = 0.3\nsnapshot_stride = 100\n"
            f"[output]\ndirectory = {out_dir}\n"
        )
        assert main(["run", str(path)]) == 0
        lines = (out_dir / "timeseries.csv").read_text().splitlines()
        idx = CSV_COLUMNS.index("ref_sigma2")
        assert lines[1].split(",")[idx] == ""  # no closed-form reference

    def test_unwritable_destination_reported(self, tmp_path, capsys, quick_free):
        blocker = tmp_path / "not_a_dir"
        blocker.write_text("plain file")
        path = tmp_path / "cfg.ini"
        cfg = replace(quick_free, t_final=0.1, directory=str(blocker / "out"))
        path.write_text(render_config(cfg))
        assert main(["run", str(path)]) == 2
        err = capsys.readouterr().err
        assert "output error" in err and "not_a_dir" in err
