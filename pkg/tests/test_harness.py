import csv
import io
import json

import numpy as np
import pytest

from bgcode.errors import ConfigurationError
from bgcode.harness import CSV_HEADER, figures
from bgcode.harness.cli import main
from bgcode.harness.config import RunConfig, load_config, merge
from bgcode.harness.demo import DemoTrainingConfig, FixedPoint, train
from bgcode.harness.proptest import GridSpec, run_grid
from bgcode.alphabet import Alphabet


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_merge_flags_override_file(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"s": 3, "u": 2, "attack": {"kind": "symmetrization", "collapse": False}}))
    cfg = merge(load_config(path), {"s": 4, "u": None})
    assert (cfg.s, cfg.u, cfg.attack, cfg.collapse) == (4, 2, "symmetrization", False)


@pytest.mark.parametrize("values", [{"bogus": 1}, {"s": "3"}, {"attack": "flood"}])
def test_merge_rejects(values):
    with pytest.raises(ConfigurationError):
        merge(values, {})


def test_bad_json(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{nope")
    with pytest.raises(ConfigurationError):
        load_config(path)


def test_system_checks_n():
    with pytest.raises(ConfigurationError):
        RunConfig(s=2, u=1, n=4).system()


def test_cli_honest_row(capsys):
    assert main(["run", "--s", "2", "--u", "1", "--p", "8"]) == 0
    text = capsys.readouterr().out
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    row = _rows(text)[0]
    assert (row["correct"], row["c"], row["kappa_bits"], row["matches"]) == ("1", "0", "0", "0")


def test_cli_align_and_stall(capsys):
    assert main(["run", "--s", "3", "--u", "1", "--m", "1", "--p", "64", "--attack", "align_and_stall"]) == 0
    assert _rows(capsys.readouterr().out)[0]["matches"] == "3"


def test_cli_config_error(capsys):
    assert main(["run", "--n", "7", "--s", "2", "--u", "1"]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_cli_bad_alphabet(capsys):
    assert main(["run", "--alphabet-log2", "40"]) == 2


def test_cli_repetitions_and_transcripts(tmp_path):
    out = tmp_path / "runs.csv"
    tr = tmp_path / "t.jsonl"
    argv = ["run", "--s", "4", "--u", "2", "--p", "16", "--attack", "symmetrization", "--seed", "1",
            "--repetitions", "3", "--out", str(out), "--transcript", str(tr)]
    assert main(argv) == 0
    rows = _rows(out.read_text())
    assert [r["seed"] for r in rows] == ["1", "2", "3"]
    assert all(r["correct"] == "1" and int(r["c"]) <= 2 for r in rows)
    assert sorted(p.name for p in tmp_path.glob("t.seed*.jsonl")) == ["t.seed1.jsonl", "t.seed2.jsonl",
                                                                     "t.seed3.jsonl"]


def test_cli_is_deterministic(tmp_path):
    outs = []
    for tag in "ab":
        out, tr = tmp_path / f"{tag}.csv", tmp_path / f"{tag}.jsonl"
        main(["run", "--s", "3", "--u", "1", "--m", "2", "--p", "16", "--attack", "random_corruption",
              "--seed", "11", "--out", str(out), "--transcript", str(tr)])
        outs.append((out.read_bytes(), tr.read_bytes()))
    assert outs[0] == outs[1]


def test_cli_config_file(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"s": 2, "u": 1, "m": 2, "p": 8, "d": 2, "attack": "random_corruption"}))
    assert main(["run", "--config", str(path), "--seed", "5"]) == 0
    row = _rows(capsys.readouterr().out)[0]
    assert (row["n"], row["m"], row["seed"], row["attack"]) == ("6", "2", "5", "random_corruption")


def test_fig2_endpoints():
    assert figures.local_comps_for_replication(2 + 1e-9) == 0
    assert figures.local_comps_for_replication(1) is None
    assert figures.local_comps_for_replication(1.5) == 2
    rows = _rows(figures.fig2())
    pts = {int(r["u"]): int(r["c"]) for r in rows if r["series"] == "points"}
    assert pts[1] == 10 and pts[11] == 0


def test_fig4_ratio():
    rows = figures.fig4_rows()
    assert [r["c"] for r in rows] == [10, 5, 3, 2, 2, 1, 1, 1, 1, 1, 0]
    assert rows[-1]["ratio"] == 1
    assert 0.52 <= float(rows[0]["ratio"]) <= 0.53


def test_fig3_and_fig5_shapes():
    assert {r["s"] for r in _rows(figures.fig3())} == {"5", "6", "7", "8", "9"}
    rows = figures.fig5_rows(p_exp=(2, 4))
    assert {r["s"] for r in rows} == {1, 3, 5, 9}
    assert all(r["ratio"] >= 1 for r in rows)


def test_cli_figure_all(tmp_path):
    assert main(["figure", "all", "--out", str(tmp_path)]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["fig2.csv", "fig3.csv", "fig4.csv", "fig5.csv"]


def test_quantizer_roundtrip():
    fx = FixedPoint(Alphabet(32), 16)
    x = np.array([-1.5, 0.0, 3.25, -0.0001])
    assert np.allclose(fx.dequantize(fx.quantize(x)), x, atol=2 ** -16)
    assert fx.dequantize(fx.quantize(np.array([1e9])))[0] == (2 ** 31 - 1) / 2 ** 16


def test_demo_zero_lr_keeps_theta():
    traj = train(DemoTrainingConfig(lr=0.0, iterations=3))
    assert all(not t.any() for t in traj.thetas)


def test_demo_single_step():
    cfg = DemoTrainingConfig(iterations=1, s=1, u=1, m=1, p=4, d=2)
    assert train(cfg).same_as(train(cfg, use_protocol=False))


def test_demo_attack_none_matches_symmetrization():
    a = train(DemoTrainingConfig(iterations=5, attack="none"))
    b = train(DemoTrainingConfig(iterations=5, attack="symmetrization"))
    assert a.same_as(b)


def test_cli_demo(tmp_path):
    out = tmp_path / "demo.csv"
    assert main(["demo-gd", "--out", str(out), "--iterations", "4"]) == 0
    rows = _rows(out.read_text())
    assert len(rows) == 5 and all(r["identical"] == "1" for r in rows)


def test_small_proptest_grid():
    report = run_grid(GridSpec(max_n=4, max_s=2, max_m=1, q_values=(1, 4), k_values=(2,), d_values=(1,)))
    assert report.ok, report.failures[:3]
    assert report.runs > 50


def test_cli_proptest_limit(capsys):
    assert main(["proptest", "--limit", "30"]) == 0
    assert capsys.readouterr().out.startswith("30 runs")
