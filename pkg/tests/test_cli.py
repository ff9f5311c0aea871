import json
from pathlib import Path

import pytest

from primelab import ConfigError, QuadratureError
from primelab.cli import (
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VIOLATION,
    load_config_file,
    main,
    parse_config,
)


def run_cli(*argv: str) -> int:
    return main(list(argv))


class TestParseConfig:
    def test_defaults(self):
        cfg = parse_config({}, {}, {})
        assert cfg.limit == 10**6
        assert cfg.spacing == 1.25
        assert cfg.threshold_spec == "log:c=1"
        assert cfg.seed == 42
        assert cfg.trials == 10**4
        assert cfg.format == "csv"
        assert cfg.output == "-"
        assert cfg.jobs >= 1

    def test_scientific_notation(self):
        cfg = parse_config({"limit": "1e8"}, {}, {})
        assert cfg.limit == 10**8

    def test_precedence_flag_over_file(self):
        cfg = parse_config({"limit": "200"}, {}, {"limit": "300"})
        assert cfg.limit == 200

    def test_precedence_env_over_file(self):
        cfg = parse_config({}, {"PRIME_LAB_JOBS": "3", "PRIME_LAB_CACHE": "/tmp/x"},
                           {"jobs": "7", "cache_dir": "/tmp/y"})
        assert cfg.jobs == 3
        assert cfg.cache_dir == Path("/tmp/x")

    def test_precedence_flag_over_env(self):
        cfg = parse_config({"jobs": "5"}, {"PRIME_LAB_JOBS": "3"}, {})
        assert cfg.jobs == 5

    def test_bad_values_name_the_key(self):
        with pytest.raises(ConfigError, match="limit"):
            parse_config({"limit": "abc"}, {}, {})
        with pytest.raises(ConfigError, match="spacing"):
            parse_config({"spacing": "1.0"}, {}, {})
        with pytest.raises(ConfigError, match="format"):
            parse_config({"format": "xml"}, {}, {})
        with pytest.raises(ConfigError):
            parse_config({"threshold": "zeta:c=1"}, {}, {})


class TestConfigFile:
    def test_parse(self, tmp_path):
        path = tmp_path / "primelab.conf"
        path.write_text("# comment\nlimit = 500\nthreshold = loglog:c=2  # inline\n")
        assert load_config_file(path) == {"limit": "500", "threshold": "loglog:c=2"}

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "primelab.conf"
        path.write_text("volume = 11\n")
        with pytest.raises(ConfigError, match="volume"):
            load_config_file(path)

    def test_default_file_is_picked_up(self, tmp_path, monkeypatch, capsys):
        monkeypatch.chdir(tmp_path)
        Path("primelab.conf").write_text("limit = 10\n")
        assert run_cli("pi", "--no-cache") == EXIT_OK
        assert capsys.readouterr().out == "4\n"


class TestSubcommands:
    def test_pi(self, capsys):
        assert run_cli("pi", "--limit", "100", "--no-cache") == EXIT_OK
        assert capsys.readouterr().out == "25\n"

    def test_pi_scientific(self, capsys):
        assert run_cli("pi", "--limit", "1e3", "--no-cache") == EXIT_OK
        assert capsys.readouterr().out == "168\n"

    def test_li_at_lower_limit(self, capsys):
        assert run_cli("li", "--n", "2") == EXIT_OK
        assert capsys.readouterr().out == "0\n"

    def test_li_value_format(self, capsys):
        assert run_cli("li", "--n", "10") == EXIT_OK
        out = capsys.readouterr().out.strip()
        assert out == "5.12043572467"  # 12 significant digits

    def test_li_requires_n(self, capsys):
        assert run_cli("li") == EXIT_USAGE

    def test_sieve_checkpoints(self, capsys):
        assert run_cli("sieve", "--limit", "1000", "--anchors", "10,100,1000", "--no-cache") == EXIT_OK
        assert capsys.readouterr().out == "n,pi\n10,4\n100,25\n1000,168\n"

    def test_sieve_writes_cache(self, tmp_path, capsys):
        cache = tmp_path / "cachedir"
        assert run_cli("sieve", "--limit", "100", "--anchors", "100",
                       "--cache-dir", str(cache)) == EXIT_OK
        capsys.readouterr()
        assert (cache / "checkpoints.tsv").read_text() == "100\t25\n"

    def test_cache_env_var_honored(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("PRIME_LAB_CACHE", str(tmp_path / "envcache"))
        assert run_cli("sieve", "--limit", "10", "--anchors", "10") == EXIT_OK
        capsys.readouterr()
        assert (tmp_path / "envcache" / "checkpoints.tsv").exists()

    def test_scan_error_csv(self, capsys):
        assert run_cli("scan-error", "--limit", "1e4", "--no-cache") == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "n,pi,li,delta,sqrt_li,ratio,Q,bound_ok,sign"
        first = lines[1].split(",")
        assert first[0] == "100"
        assert first[1] == "25"
        assert first[7] == "true"
        assert first[8] == "-1"

    def test_scan_error_violation_exits_3(self, capsys):
        code = run_cli("scan-error", "--limit", "1e4", "--threshold", "loglog:c=0.1", "--no-cache")
        assert code == EXIT_VIOLATION
        out = capsys.readouterr().out
        assert ",false," in out

    def test_scan_error_json_summary(self, capsys):
        assert run_cli("scan-error", "--limit", "1e4", "--format", "json", "--no-cache") == EXIT_OK
        summary = json.loads(capsys.readouterr().out)
        assert set(summary) == {"max_ratio", "argmax_n", "fits"}
        assert summary["max_ratio"] < 1
        families = {f["family"] for f in summary["fits"]}
        assert families == {"log", "loglog", "power"}

    def test_pbin_check(self, capsys):
        assert run_cli("pbin-check", "--k", "4", "--m", "1", "--q", "tail") == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "k,m,q,A,region,h,binom,satisfied,witness"
        # m = 1, A = 2: upper tail is q > 3, so exactly q = 4
        assert len(lines) == 2
        row = lines[1].split(",")
        assert row[2] == "4"
        assert row[4] == "upper"
        assert row[7] == "true"
        assert row[8] == ""

    def test_pbin_check_na_row_does_not_gate(self, capsys):
        # central q: the equal point is beaten (witness emitted), but the
        # claim does not apply there, so the exit status stays 0
        assert run_cli("pbin-check", "--k", "4", "--m", "2", "--q", "2") == EXIT_OK
        row = capsys.readouterr().out.splitlines()[1].split(",")
        assert row[4] == "na"
        assert row[7] == "false"
        assert row[8] != ""

    def test_concentration_csv(self, capsys):
        assert run_cli("concentration", "--n", "100", "--p", "0.5",
                       "--trials", "2000", "--seed", "7") == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "n,m,family,c,alpha,window_lo,window_hi,trials,hits,empirical,exact,gaussian"
        row = lines[1].split(",")
        assert row[0] == "100"
        assert row[1] == "50"
        assert row[2] == "log"
        assert row[4] == ""  # alpha only applies to the power family
        assert float(row[9]) >= 0.999
        assert float(row[10]) >= 0.9999

    def test_usage_errors(self, capsys):
        assert run_cli("pi", "--limit", "abc") == EXIT_USAGE
        assert run_cli("pi", "--bogus-flag") == EXIT_USAGE
        assert run_cli("scan-error", "--threshold", "zeta:c=1") == EXIT_USAGE

    def test_quadrature_failure_exits_2(self, monkeypatch, capsys):
        from primelab import logint

        def broken(u0, u1):
            raise QuadratureError("forced non-convergence")

        monkeypatch.setattr(logint, "_quad", broken)
        assert run_cli("li", "--n", "123456.789") == EXIT_NUMERIC


class TestReport:
    @pytest.fixture()
    def evidence(self, tmp_path):
        scan_csv = tmp_path / "scan.csv"
        pbin_csv = tmp_path / "pbin.csv"
        conc_csv = tmp_path / "conc.csv"
        assert run_cli("scan-error", "--limit", "1e4", "--no-cache",
                       "--output", str(scan_csv)) == EXIT_OK
        assert run_cli("pbin-check", "--k", "6", "--m", "1", "--q", "tail",
                       "--output", str(pbin_csv)) == EXIT_OK
        assert run_cli("concentration", "--n", "100,1000", "--p", "0.3,0.5",
                       "--trials", "2000", "--output", str(conc_csv)) == EXIT_OK
        return scan_csv, pbin_csv, conc_csv

    def test_aggregates_all_claims(self, evidence, tmp_path, capsys):
        out = tmp_path / "report.json"
        code = run_cli("report", *map(str, evidence), "--output", str(out))
        assert code == EXIT_OK
        summary = json.loads(out.read_text())
        assert set(summary) == {"Prop1", "Prop2", "Thm3", "Thm4", "Thm5", "Lemma2"}
        assert summary["Prop1"]["violations"] == 0
        assert summary["Thm5"]["violations"] == []
        assert summary["Thm4"]["violations_with_li_mean"] == []
        assert summary["Lemma2"]["checkpoint_sign_flips"] == []
        assert summary["Thm3"]["mc_within_4se"] == summary["Thm3"]["mc_with_exact"]
        assert summary["Prop2"]["min_exact"] > 0.98

    def test_report_flags_violations(self, tmp_path, capsys):
        bad_csv = tmp_path / "bad.csv"
        assert run_cli("scan-error", "--limit", "1e4", "--threshold", "loglog:c=0.1",
                       "--no-cache", "--output", str(bad_csv)) == EXIT_VIOLATION
        code = run_cli("report", str(bad_csv), "--threshold", "loglog:c=0.1",
                       "--output", str(tmp_path / "r.json"))
        assert code == EXIT_VIOLATION
        summary = json.loads((tmp_path / "r.json").read_text())
        assert summary["Thm5"]["violations"]

    def test_unrecognized_header(self, tmp_path):
        stray = tmp_path / "stray.csv"
        stray.write_text("a,b,c\n1,2,3\n")
        assert run_cli("report", str(stray)) == EXIT_USAGE


class TestDeterminism:
    @pytest.mark.parametrize(
        "argv",
        [
            ["pi", "--limit", "1e5"],
            ["sieve", "--limit", "1e4"],
            ["li", "--n", "12345"],
            ["scan-error", "--limit", "2e4"],
            ["pbin-check", "--k", "8", "--m", "2", "--q", "tail"],
            ["concentration", "--n", "1000", "--p", "0.3", "--trials", "4000"],
        ],
    )
    def test_byte_identical_across_jobs_and_runs(self, argv, tmp_path):
        outputs = []
        for run_idx, jobs in enumerate(["1", "8", "1", "8"]):
            out = tmp_path / f"out_{run_idx}"
            cache = tmp_path / f"cache_{run_idx}"
            code = run_cli(*argv, "--jobs", jobs, "--output", str(out),
                           "--cache-dir", str(cache), "--seed", "42")
            assert code == EXIT_OK
            outputs.append(out.read_bytes())
        assert len(set(outputs)) == 1
