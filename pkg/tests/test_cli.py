import json

import pytest

from mutacp import framework
from mutacp.analysis import classify
from mutacp.montecarlo import SWEEP_COLUMNS


def data_lines(text):
    return [line for line in text.splitlines() if line and not line.startswith("#")]


def test_thresholds_for_binary_tree(capsys):
    assert framework.main(["thresholds", "--d", "2", "--r", "1"]) == 0
    out = capsys.readouterr().out
    assert "survive_all_r,1\n" in out
    assert "die_out,0.3333333333\n" in out
    assert "0.6666666667, 1)" in out
    assert "window_weak,empty\n" in out
    assert "lambdabound,0.6666666667\n" in out


def test_thresholds_weak_window(capsys):
    assert framework.main(["thresholds", "--d", "6"]) == 0
    assert "(0.2, 0.2041241452)" in capsys.readouterr().out


def test_thresholds_json(capsys):
    assert framework.main(["thresholds", "--d", "2", "--r", "0.5", "--lambda", "0.8", "--format", "json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["values"]["survive_all_r"] == 1.0
    assert payload["values"]["gw_mean_U"] == pytest.approx(0.8)
    assert payload["values"]["r_line_verdict"] == "TransitionInR"


def test_invalid_tree_exits_with_two(capsys):
    assert framework.main(["thresholds", "--d", "1"]) == 2
    assert "mutacp:" in capsys.readouterr().err


def test_simulate_needs_rates():
    assert framework.main(["simulate", "--r", "0.3"]) == 2


def test_simulate_is_reproducible(tmp_path, capsys):
    first, second = tmp_path / "a.tsv", tmp_path / "b.tsv"
    flags = ["--d", "2", "--lambda", "1", "--r", "0.3", "--seed", "7", "--nmax", "300", "--tmax", "10"]
    assert framework.main(["simulate", *flags, "--out", str(first)]) == 0
    assert framework.main(["simulate", *flags, "--out", str(second)]) == 0
    assert first.read_text() == second.read_text()
    summaries = [line for line in capsys.readouterr().out.splitlines() if line.startswith("# summary")]
    assert len(summaries) == 2
    assert summaries[0] == summaries[1]


def test_simulate_without_mutation_dies(capsys):
    assert framework.main(["simulate", "--lambda", "1", "--r", "0", "--seed", "7", "--nmax", "100000"]) == 0
    assert "# summary status=extinct" in capsys.readouterr().out


def test_simulate_nonspatial_has_no_sites(tmp_path, capsys):
    path = tmp_path / "run.tsv"
    assert framework.main(["simulate", "--kind", "nonspatial", "--lambda", "2", "--r", "0.5",
                           "--seed", "1", "--nmax", "200", "--out", str(path)]) == 0
    sites = {line.split("\t")[2] for line in data_lines(path.read_text())}
    assert sites == {"-"}
    capsys.readouterr()


def sweep_flags(tmp_path, name):
    return ["sweep", "--lambdas", "0.5,1,1.5", "--rs", "0.1,0.5,0.9", "--trials", "5",
            "--tmax", "5", "--nmax", "100", "--seed", "1", "--workers", "1", "--out", str(tmp_path / name)]


def test_sweep_grid(tmp_path):
    assert framework.main(sweep_flags(tmp_path, "a.csv")) == 0
    assert framework.main(sweep_flags(tmp_path, "b.csv")) == 0
    text = (tmp_path / "a.csv").read_text()
    assert text == (tmp_path / "b.csv").read_text()
    lines = data_lines(text)
    assert lines[0] == ",".join(SWEEP_COLUMNS)
    assert len(lines) == 10
    for line in lines[1:]:
        fields = dict(zip(SWEEP_COLUMNS, line.split(",")))
        assert fields["verdict"] == str(classify(2, float(fields["lambda"]), float(fields["r"])))


def test_sweep_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("MUTACP_SEED", "11")
    flags = ["sweep", "--lambdas", "1", "--rs", "0.5", "--trials", "5", "--tmax", "5", "--nmax", "100", "--workers", "1"]
    assert framework.main([*flags, "--out", str(tmp_path / "a.csv")]) == 0
    assert framework.main([*flags, "--out", str(tmp_path / "b.csv")]) == 0
    text = (tmp_path / "a.csv").read_text()
    assert "# seed=11" in text
    assert text == (tmp_path / "b.csv").read_text()


def test_config_file_fills_defaults_and_flags_win(tmp_path):
    settings = tmp_path / "sweep.conf"
    settings.write_text("# defaults\ntrials = 3\nlambdas = 0.5,1\nworkers=1\nseed=2\n")
    out = tmp_path / "out.csv"
    assert framework.main(["sweep", "--config", str(settings), "--rs", "0.5", "--trials", "4",
                           "--tmax", "5", "--nmax", "100", "--out", str(out)]) == 0
    lines = data_lines(out.read_text())
    assert len(lines) == 3
    assert all(dict(zip(SWEEP_COLUMNS, line.split(",")))["trials"] == "4" for line in lines[1:])


def test_config_file_rejects_unknown_keys(tmp_path):
    settings = tmp_path / "bad.conf"
    settings.write_text("colour = blue\n")
    assert framework.main(["thresholds", "--config", str(settings)]) == 2


def test_couple_reports_no_violations(capsys):
    assert framework.main(["couple", "--lambda", "1", "--r", "0.3", "--tmax", "5", "--nmax", "300",
                           "--trials", "3", "--seed", "1"]) == 0
    lines = data_lines(capsys.readouterr().out)
    assert len(lines) == 4
    assert all(line.endswith(",0") for line in lines[1:])


def test_exact_two_site_table(capsys):
    assert framework.main(["exact", "--lambda", "1000", "--r", "0.5"]) == 0
    lines = data_lines(capsys.readouterr().out)
    assert lines[0] == "t,start,value,limit,closed_form"
    assert [line.split(",")[1] for line in lines[1:]] == ["pair_same", "single", "pair_split"]


def test_exact_dump(tmp_path, capsys):
    path = tmp_path / "generator.txt"
    assert framework.main(["exact", "--graph", "path:3", "--lambda", "1", "--r", "0.5", "--dump", str(path)]) == 0
    assert "# state 14 " in path.read_text()
    capsys.readouterr()


def test_check_suites(capsys):
    assert framework.main(["check", "thresholds", "twosite"]) == 0
    out = capsys.readouterr().out
    assert "PASS thresholds" in out
    assert "FAIL" not in out


def test_check_two_site_suite_by_both_names(capsys):
    assert framework.main(["check", "remark10"]) == 0
    first = capsys.readouterr().out
    assert "PASS twosite" in first
    assert framework.main(["check", "remark10", "twosite"]) == 0
    assert capsys.readouterr().out == first


@pytest.mark.parametrize("trials", ["0", "-3"])
def test_non_positive_trials_exit_with_two(tmp_path, trials):
    flags = ["--lambdas", "1", "--rs", "0.5", "--trials", trials, "--out", str(tmp_path / "a.csv")]
    assert framework.main(["sweep", *flags]) == 2
    assert framework.main(["couple", "--lambda", "1", "--r", "0.3", "--trials", trials]) == 2
    assert not (tmp_path / "a.csv").exists()


def test_unknown_subcommand():
    with pytest.raises(SystemExit):
        framework.main(["fly"])
