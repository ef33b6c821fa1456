import csv
import json

import pytest

from lattice_wiretap import cli


def small_config(**over):
    cfg = json.loads(cli.default_config_text())
    cfg.update(trials=400, fading_draws=4, tail_trials=2000)
    cfg["bob"]["snr_grid"] = [10.0, 100.0]
    cfg.update(over)
    return cfg


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg, indent=2))
    return p


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_default_config_validates():
    cfg = cli.parse_config(cli.default_config_text())
    assert cfg["field_name"] == "Q(zeta8)"


@pytest.mark.parametrize("command", ["design-code", "analyze-lattice", "bounds"])
def test_commands_write_fixed_columns(command, tmp_path):
    assert cli.main([command, "--config", str(write(tmp_path, small_config())), "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / f"{command}.csv")
    assert rows[0] == cli.COLUMNS[command]
    assert len(rows) > 1 and all(len(r) == len(rows[0]) for r in rows)
    report = json.loads((tmp_path / f"{command}.json").read_text())
    assert "versions" in report and "wall_clock_seconds" in report


def test_verify_exits_zero(tmp_path):
    assert cli.main(["verify", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "verify.csv")
    ok = rows[0].index("ok")
    assert all(r[ok] == "true" for r in rows[1:])


def test_simulate_reproducible_across_threads(tmp_path):
    cfg = write(tmp_path, small_config())
    outs = []
    for i, threads in enumerate((1, 2)):
        d = tmp_path / f"run{i}"
        assert cli.main(["simulate", "--config", str(cfg), "--out", str(d), "--seed", "99", "--threads", str(threads)]) == 0
        outs.append((d / "simulate.csv").read_bytes())
    assert outs[0] == outs[1]
    assert read_csv(tmp_path / "run0" / "simulate.csv")[1][0] == "99"


def test_rprime_refusal_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, small_config(R_prime=0.5))
    assert cli.main(["design-code", "--config", str(cfg), "--out", str(tmp_path)]) == 3
    assert "R′ > ln(eG/2)" in capsys.readouterr().err


def test_schema_error_reports_line(tmp_path, capsys):
    cfg = small_config(P=-1.0)
    path = write(tmp_path, cfg)
    line = next(i for i, s in enumerate(path.read_text().splitlines(), 1) if '"P"' in s)
    assert cli.main(["design-code", "--config", str(path), "--out", str(tmp_path)]) == 2
    assert f"{path}:{line}:" in capsys.readouterr().err


def test_malformed_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "P": 10,\n')
    assert cli.main(["verify", "--config", str(path), "--out", str(tmp_path)]) == 2
    assert "bad.json" in capsys.readouterr().err


def test_bad_seed(tmp_path):
    assert cli.main(["verify", "--seed", "-1", "--out", str(tmp_path)]) == 2


def test_render_csv_cells():
    text = cli.render_csv("bounds", [(1, "c", "x", 0.1, None, True)])
    assert text.splitlines()[1] == "1,c,x,0.1,,true"
    with pytest.raises(AssertionError):
        cli.render_csv("bounds", [(1, 2)])
