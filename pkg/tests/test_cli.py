import csv
import io
import json
import subprocess
import sys

import pytest

from varpricing.cli import run


def invoke(*argv):
    out = io.StringIO()
    code = run(list(argv), stdout=out)
    return code, out.getvalue()


def report(*argv):
    code, text = invoke(*argv)
    assert code == 0
    return json.loads(text)


def write_scenario(tmp_path, config, name="s.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return str(path)


BASE = {"distribution": {"kind": "uniform", "theta_max": 1.0},
        "costs": [{"provider": 1, "poly": [0.0125, 0.0, 1.0]}, {"provider": 2, "poly": [0.2, 0.0, 0.25]}]}


def test_constant_bne():
    r = report("constant-bne")
    assert r["results"]["price_interval"] == [0.2625, 0.2625]
    assert r["results"]["welfare"] == -0.2625
    assert r["command"] == "constant-bne"
    assert len(r["scenario_digest"]) == 64


def test_exists_one_innovative():
    r = report("exists-one-innovative", "--innovator", "2")
    assert r["results"]["exists"] is False and r["results"]["witness_cutoff"] == 0.0


def test_innovate_positive():
    res = report("innovate", "--theorem", "positive", "--t-bar", "0.9")["results"]
    assert res["rho"]["p_f"] == pytest.approx(0.215)
    assert res["rho"]["p_l"] == pytest.approx(0.5309, abs=1e-4)
    assert "tolerance" in res


def test_innovate_premise_failure(capsys):
    code, text = invoke("innovate", "--theorem", "dominant")
    assert code == 2 and text == ""
    assert "premise failed" in capsys.readouterr().err


def test_innovate_positive_needs_t_bar(capsys):
    code, _ = invoke("innovate", "--theorem", "positive")
    assert code == 2
    assert "--t-bar" in capsys.readouterr().err


def test_check_bne_with_oracle():
    res = report("check-bne", "--pf", "0", "--pl", "0.4676", "--cutoff", "0.595", "--low", "1", "--certify")
    res = res["results"]
    assert res["status"] == "Verified"
    assert res["oracle"]["certified"] is True


def test_check_bne_violated():
    res = report("check-bne", "--pf", "0.05", "--pl", str((0.2784 - 0.05) / 0.595), "--cutoff", "0.595",
                 "--low", "1")["results"]
    assert res["status"] == "Violated"
    assert res["violated_condition"] == "high_keeps"


def test_find_bne():
    res = report("find-bne")["results"]
    assert len(res["equilibria"]) == 1
    eq = res["equilibria"][0]
    assert eq["p_f_range"][1] == pytest.approx(0.0409, abs=1e-4)
    assert eq["oracle"]["certified"] is True


def test_find_bne_needs_two_innovators(tmp_path, capsys):
    path = write_scenario(tmp_path, {**BASE, "innovative": [True, False]})
    code, _ = invoke("find-bne", "--scenario", path)
    assert code == 2
    assert "innovative" in capsys.readouterr().err


def test_sweep_csv():
    code, text = invoke("sweep", "--pf", "0.215", "--pl", "0.5309", "--innovator", "1", "--samples", "11")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 11
    assert {"p_f", "profit_1", "profit_2", "welfare"} <= set(rows[0])


def test_sweep_by_cutoff():
    code, text = invoke("sweep", "--pf", "0", "--pl", "0.4676", "--by-cutoff", "--samples", "5")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [float(r["cutoff"]) for r in rows] == [0.0, 0.25, 0.5, 0.75, 1.0]


def test_reproduce_example(tmp_path, capsys):
    r = report("reproduce-example", "--plot-dir", str(tmp_path))
    for name in ("fig1_sweep.csv", "fig2_sweep.csv", "fig3_cutoff_sweep.csv"):
        assert (tmp_path / name).exists()
    assert any("0.0442" in w for w in r["warnings"])
    assert "0.0442" in capsys.readouterr().err


def test_reproduce_rejects_scenario(tmp_path):
    code, _ = invoke("reproduce-example", "--scenario", write_scenario(tmp_path, BASE))
    assert code == 2


def test_deterministic_output(tmp_path):
    first = invoke("find-bne")[1]
    assert first == invoke("find-bne")[1]
    out = tmp_path / "r.json"
    invoke("constant-bne", "--out", str(out))
    assert out.read_text() == invoke("constant-bne")[1]


def test_digest_ignores_key_order(tmp_path):
    a = write_scenario(tmp_path, BASE, "a.json")
    b = write_scenario(tmp_path, {"costs": BASE["costs"], "distribution": {"theta_max": 1.0, "kind": "uniform"}},
                       "b.json")
    assert report("constant-bne", "--scenario", a)["scenario_digest"] == \
        report("constant-bne", "--scenario", b)["scenario_digest"]


@pytest.mark.parametrize("config, field", [
    ({**BASE, "costs": BASE["costs"][:1]}, "costs"),
    ({**BASE, "distribution": {"kind": "weird"}}, "distribution.kind"),
    ({**BASE, "costs": [BASE["costs"][0], {"provider": 2, "poly": [0.2, -1.0]}]}, "costs[1]"),
    ({**BASE, "costs": [BASE["costs"][0], {**BASE["costs"][0]}]}, "costs[1].provider"),
    ({**BASE, "settings": {"epsilon": -1}}, "settings.epsilon"),
    ({**BASE, "settings": {"bogus": 1}}, "settings.bogus"),
    ({**BASE, "extra": 1}, "extra"),
])
def test_validation_names_field(tmp_path, capsys, config, field):
    code, _ = invoke("constant-bne", "--scenario", write_scenario(tmp_path, config))
    assert code == 2
    err = capsys.readouterr().err
    assert err.startswith(f"error: {field}")


def test_bad_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{")
    assert invoke("constant-bne", "--scenario", str(path))[0] == 2
    assert "invalid JSON" in capsys.readouterr().err


def test_bad_flag_value(capsys):
    assert invoke("find-bne", "--grid-step", "5")[0] == 2
    assert "--grid-step" in capsys.readouterr().err


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        run(["no-such-command"])
    assert exc.value.code == 2


def test_internal_error_exit_1(monkeypatch, capsys):
    from varpricing import cli

    def boom(sc, args):
        raise RuntimeError("boom")

    monkeypatch.setitem(cli.COMMANDS, "constant-bne", boom)
    assert invoke("constant-bne")[0] == 1
    assert "internal error" in capsys.readouterr().err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "varpricing", "constant-bne"], capture_output=True, text=True,
                          check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["results"]["canonical_price"] == 0.2625
