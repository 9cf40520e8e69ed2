import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from sparse_adapt import cli
from sparse_adapt.errors import DimensionError, ParameterError
from sparse_adapt.harness import MseTrajectory, build_config, run_experiment
from sparse_adapt.report import format_value, read_csv, render_svg, write_csv

SVG = "{http://www.w3.org/2000/svg}"


def traj(label, values):
    return MseTrajectory(label, np.asarray(values, dtype=float), 0, 1)


# ---------------------------------------------------------------- config


def test_defaults():
    s = cli.parse_config(env={})
    c = s.config
    assert (c.n, c.n_t, c.t_dominant, c.snr_db) == (16, 2, 3, 3.0)
    assert (c.trials, c.iterations, c.master_seed) == (200, 2000, 1)
    labels = [a.label for a in c.algorithms]
    assert labels == ["NLMS", "LP-NLMS", "L0-NLMS", "NLMF", "LP-NLMF", "L0-NLMF"]
    assert all(a.mu_s == 0.5 and a.mu_f == 1.5 for a in c.algorithms)


def test_flags_override_file(tmp_path):
    p = tmp_path / "exp.ini"
    p.write_text("[experiment]\nsnr = 6\nt = 3\ntrials = 10\n")
    s = cli.parse_config(p, {"snr": 9.0, "t": 1}, env={})
    assert s.config.snr_db == 9.0 and s.config.t_dominant == 1 and s.config.trials == 10


def test_env_seed_fallback(tmp_path):
    assert cli.parse_config(env={"SPARSE_ADAPT_SEED": "42"}).config.master_seed == 42
    assert cli.parse_config(flags={"seed": 5},
                            env={"SPARSE_ADAPT_SEED": "42"}).config.master_seed == 5


def test_rejects_mu_f_out_of_range():
    with pytest.raises(ParameterError) as info:
        cli.parse_config(flags={"mu_f": 2.5}, env={})
    assert info.value.field == "mu_f"
    assert cli.main(["run", "--mu-f", "2.5", "--trials", "1", "--iters", "1"]) == 2


@pytest.mark.parametrize("text", [
    "[experiment]\nbogus = 1\n",
    "[weird]\nn = 1\n",
    "[experiment]\nn = sixteen\n",
    "[experiment]\nalgos = NLMS\n[algo NLMS]\nbeta = 3\n",
    "[experiment]\nalgos = L0-NLMS\n[algo L0-NLMS]\np = 0.3\n",
    "[experiment]\nalgos = LP-NLMS\n[algo LP-NLMS]\nmu_f = 1.0\n",
    "[experiment]\nalgos = NLMS\n[algo L0-NLMS]\nbeta = 3\n",
    "[experiment]\ntrials = 0\n",
])
def test_invalid_files(tmp_path, text):
    p = tmp_path / "bad.ini"
    p.write_text(text)
    with pytest.raises(ParameterError):
        cli.parse_config(p, env={})


def test_algo_section_overrides(tmp_path):
    p = tmp_path / "a.ini"
    p.write_text("[experiment]\nalgos = L0-NLMS, NLMF\nbeta = 4\n"
                 "[algo L0-NLMS]\nlambda = 0.01\nbeta = 7\n")
    a, b = cli.parse_config(p, env={}).config.algorithms
    assert a.lambda_reg == 0.01 and a.beta == 7.0
    assert b.beta == 4.0


def test_missing_config_file(tmp_path):
    with pytest.raises(ParameterError):
        cli.parse_config(tmp_path / "nope.ini", env={})


def test_echo_round_trip(tmp_path):
    s = cli.parse_config(flags={"algos": "LP-NLMF,L0-LMS,NLMS", "beta": 3.0, "t": 1}, env={})
    p = tmp_path / "echo.ini"
    p.write_text(cli.config_echo(s))
    again = cli.parse_config(p, env={})
    assert again.config == s.config


# ---------------------------------------------------------------- csv


def test_csv_layout(tmp_path):
    p = tmp_path / "a.csv"
    write_csv([traj("NLMS", [1.0, 0.5, 0.25])], p)
    raw = p.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert len(lines) == 4
    assert lines[0] == "iteration,NLMS_mse,NLMS_mse_db"
    assert lines[1] == "1,1,0"
    assert lines[2].startswith("2,0.5,-3.0102999566")


def test_csv_unequal_lengths(tmp_path):
    with pytest.raises(DimensionError):
        write_csv([traj("A", [1, 2]), traj("B", [1, 2, 3])], tmp_path / "x.csv")
    with pytest.raises(DimensionError):
        write_csv([], tmp_path / "x.csv")


def test_format_value_significant_digits():
    assert format_value(1 / 3) == "0.333333333333"
    assert format_value(123456.7890123456) == "123456.789012"
    assert format_value(2.5e-7) == "0.00000025"
    assert format_value(float("nan")) == ""


def test_csv_round_trip(tmp_path):
    trajs = run_experiment(build_config(trials=3, iterations=50))
    p = tmp_path / "r.csv"
    write_csv(trajs, p)
    back = read_csv(p)
    for t in trajs:
        np.testing.assert_allclose(back[t.algorithm_label], t.per_iteration_mse, rtol=5e-12)


def test_csv_deterministic(tmp_path):
    cfg = build_config(trials=3, iterations=60)
    write_csv(run_experiment(cfg), tmp_path / "a.csv")
    write_csv(run_experiment(cfg), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_csv_all_diverged_column(tmp_path):
    p = tmp_path / "d.csv"
    write_csv([traj("NLMS", [1.0, 0.5]), MseTrajectory("LMF", np.empty(0), 3, 3)], p)
    assert p.read_text().splitlines()[1] == "1,1,0,,"
    assert read_csv(p)["LMF"].size == 0


# ---------------------------------------------------------------- svg


def test_svg_constant_line(tmp_path):
    p = tmp_path / "c.svg"
    render_svg([traj("flat", np.ones(10))], p, db_scale=True, title="flat <line>")
    root = ET.parse(p).getroot()
    [line] = root.iter(SVG + "polyline")
    ys = {pt.split(",")[1] for pt in line.get("points").split()}
    assert len(ys) == 1
    # 0 dB sits midway in the padded [-1, 1] dB range
    assert float(ys.pop()) == pytest.approx(40 + 405 / 2)


def test_svg_two_series(tmp_path):
    p = tmp_path / "two.svg"
    render_svg([traj("A", [1.0, 0.5, 0.2]), traj("B", [1.0, 0.8, 0.7])], p, db_scale=False)
    root = ET.parse(p).getroot()
    assert len(list(root.iter(SVG + "polyline"))) == 2
    entries = [g for g in root.iter(SVG + "g") if g.get("class") == "legend-entry"]
    assert len(entries) == 2
    assert any(t.get("class") == "ytick" for t in root.iter(SVG + "line"))
    assert b"<image" not in p.read_bytes()


def test_svg_requires_data(tmp_path):
    with pytest.raises(DimensionError):
        render_svg([], tmp_path / "e.svg")


# ---------------------------------------------------------------- commands


def test_run_writes_outputs_and_manifest(tmp_path, capsys):
    csv = tmp_path / "out" / "r.csv"
    svg = tmp_path / "out" / "r.svg"
    rc = cli.main(["run", "--trials", "3", "--iters", "40", "--t", "1",
                   "--out-csv", str(csv), "--out-svg", str(svg)])
    assert rc == 0
    assert csv.exists() and svg.exists()
    ET.parse(svg)
    manifest = json.loads((tmp_path / "out" / "r.csv.manifest.json").read_text())
    assert manifest["config_echo"]["trials"] == 3
    assert str(csv) in manifest["output_files"]
    assert "L0-NLMF" in capsys.readouterr().out

    # re-running from the manifest reproduces the CSV byte for byte
    csv2 = tmp_path / "again.csv"
    rc = cli.main(["run", "--config", str(tmp_path / "out" / "r.csv.manifest.json"),
                   "--out-csv", str(csv2)])
    assert rc == 0
    assert csv.read_bytes() == csv2.read_bytes()


def test_divergence_exit_code(tmp_path):
    rc = cli.main(["run", "--algos", "LMF,NLMF", "--snr", "9", "--trials", "2",
                   "--iters", "200", "--out-csv", str(tmp_path / "d.csv")])
    assert rc == 3


def test_paper_sign_flag():
    s = cli.parse_config(flags={"paper_sign_l0": True, "algos": "L0-NLMS"}, env={})
    assert s.config.algorithms[0].paper_sign_l0


def test_reproduce_small(tmp_path):
    rc = cli.main(["reproduce", "--trials", "2", "--iters", "30", "--out-dir", str(tmp_path)])
    assert rc == 0
    names = sorted(p.name for p in tmp_path.glob("*.csv"))
    assert names == ["fig4_T1_snr3.csv", "fig5_T3_snr3.csv", "fig6_T3_snr6.csv",
                     "fig7_T3_snr9.csv"]
    assert len(list(tmp_path.glob("*.svg"))) == 4


def test_validate_command(capsys):
    assert cli.main(["validate"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 5
