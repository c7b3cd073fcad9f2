import csv
import io
import math
import subprocess
import sys

import numpy as np
import pytest

from qst_channel import ModelParams, eigendecompose, build_hamiltonian
from qst_channel.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_TOLERANCE, EXIT_USAGE, main, \
    parse_axis
from qst_channel.regimes import predict_weak_offres

FIG1 = ["--n", "30", "--l", "6", "--g", "0.05", "--omega", "1.5"]
FIG2 = ["--n", "16", "--l", "8", "--g", "0.01", "--omega", "0"]
FIG3 = ["--n", "50", "--l", "4", "--g", "10", "--omega", "0"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    assert rows, "empty table"
    return rows


def column(rows, key):
    return np.array([float(r[key]) for r in rows])


class TestSimulate:
    def test_header_and_format(self, capsys):
        code, out, _ = run(capsys, "simulate", *FIG2, "--t-end", "10", "--samples", "3")
        assert code == EXIT_OK
        lines = out.split("\n")
        assert lines[0] == "t,p_a,p_b,p_chan"
        assert len(lines) == 5 and lines[-1] == ""
        assert "\r" not in out
        assert lines[2].startswith("5,")

    def test_decoupled(self, capsys):
        _, out, _ = run(capsys, "simulate", "--n", "8", "--l", "2", "--g", "0",
                        "--omega", "0.3", "--t-end", "100", "--samples", "11")
        rows = table(out)
        np.testing.assert_allclose(column(rows, "p_a"), 1.0, rtol=0, atol=1e-15)
        assert all(r["p_b"] == "0" and r["p_chan"] == "0" for r in rows)

    def test_fig2_transfer(self, capsys):
        _, out, _ = run(capsys, "simulate", *FIG2, "--t-end", "1256.6", "--samples", "2001")
        rows = table(out)
        t = column(rows, "t")
        i = int(np.argmin(np.abs(t - 628.3)))
        assert float(rows[i]["p_b"]) >= 0.999

    def test_deterministic(self, tmp_path, capsys):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for p in paths:
            assert main(["simulate", *FIG1, "--samples", "500", "--out", str(p)]) == EXIT_OK
        capsys.readouterr()
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_initial_b(self, capsys):
        _, out, _ = run(capsys, "simulate", *FIG2, "--initial", "B", "--t-end", "1",
                        "--samples", "2")
        assert float(table(out)[0]["p_b"]) == pytest.approx(1.0, abs=1e-14)

    def test_explicit_times(self, capsys):
        _, out, _ = run(capsys, "simulate", *FIG2, "--times", "0,1.5,3")
        assert [r["t"] for r in table(out)] == ["0", "1.5", "3"]


class TestPoles:
    def test_weak_coupling(self, capsys):
        _, out, _ = run(capsys, "poles", "--n", "4", "--l", "1", "--g", "1e-6",
                        "--omega", "0.5")
        omegas = column(table(out), "omega")
        targets = [0.5, -1.0, 0.0, 1.0]
        assert all(np.min(np.abs(omegas - x)) < 1e-6 for x in targets)

    def test_matches_eigenvalues(self, capsys):
        _, out, _ = run(capsys, "poles", "--n", "4", "--l", "2", "--g", "0.1",
                        "--omega", "1.5")
        rows = table(out)
        omegas = column(rows, "omega")
        assert omegas.tolist() == sorted(omegas.tolist())
        spec = eigendecompose(build_hamiltonian(ModelParams(4, 2, 0.1, 1.5)))
        weight = np.abs(spec.eigenvectors[:2]) ** 2
        coupled = spec.eigenvalues[weight.sum(axis=0) > 1e-12]
        for e in coupled:
            assert np.min(np.abs(omegas - e)) <= 1e-8
        w = column(rows, "residue_weight")
        parity = np.array([r["parity"] for r in rows])
        for par in ("plus", "minus"):
            assert w[parity == par].sum() == pytest.approx(1.0, abs=1e-8)


class TestPredict:
    def test_fig1(self, capsys):
        _, out, _ = run(capsys, "predict", *FIG1)
        row = table(out)[0]
        assert row["regime"] == "WeakOffResonance"
        expected = predict_weak_offres(ModelParams(30, 6, 0.05, 1.5)).omega_minus
        assert float(row["omega_minus"]) == expected
        assert row["slow_freq"] == ""

    def test_fig2(self, capsys):
        _, out, _ = run(capsys, "predict", *FIG2)
        row = table(out)[0]
        assert row["regime"] == "WeakResonantDiscrete"
        assert float(row["transfer_time"]) == pytest.approx(628.3185307, rel=1e-9)
        assert float(row["delta_2_plus"]) == pytest.approx(0.005)

    def test_fig3(self, capsys):
        _, out, _ = run(capsys, "predict", *FIG3)
        row = table(out)[0]
        assert row["regime"] == "StrongCoupling"
        assert float(row["slow_freq"]) == pytest.approx(3.125e-5, rel=1e-15)

    def test_crossover(self, capsys):
        _, out, _ = run(capsys, "predict", "--n", "16", "--l", "8", "--g", "0.01",
                        "--omega", "0.1")
        row = table(out)[0]
        assert row["regime"] == "Crossover"
        for key in ("omega_minus", "gamma_big", "transfer_time", "slow_freq"):
            assert row[key] == ""

    def test_threshold_env(self, capsys, monkeypatch):
        monkeypatch.setenv("QST_CHANNEL_THRESHOLDS", "0.01,0.02,3")
        _, out, _ = run(capsys, "predict", *FIG2)
        assert table(out)[0]["regime"] == "WeakResonantDiffusive"


class TestCompare:
    def test_fig2(self, capsys):
        code, _, err = run(capsys, "compare", *FIG2, "--tolerance", "0.02")
        assert code == EXIT_OK
        assert float(err.strip().split("=")[1]) < 0.02

    def test_fig1(self, capsys):
        code, _, _ = run(capsys, "compare", *FIG1, "--tolerance", "0.05")
        assert code == EXIT_OK

    def test_zero_tolerance(self, capsys):
        code, _, err = run(capsys, "compare", *FIG2, "--tolerance", "0", "--samples", "50")
        assert code == EXIT_TOLERANCE
        assert "max_abs_deviation=" in err

    def test_summary_on_stdout_with_out(self, tmp_path, capsys):
        target = tmp_path / "cmp.csv"
        code, out, _ = run(capsys, "compare", *FIG2, "--out", str(target))
        assert code == EXIT_OK
        assert out.startswith("max_abs_deviation=")
        assert target.read_text().startswith("t,p_a_num,p_b_num,p_a_th,p_b_th,deviation\n")

    def test_no_predictor(self, capsys):
        code, _, err = run(capsys, "compare", "--n", "16", "--l", "8", "--g", "0.01",
                           "--omega", "0.1")
        assert code == EXIT_USAGE and "error" in err


class TestSweep:
    def test_single_point(self, capsys):
        _, out, _ = run(capsys, "sweep", *FIG2)
        rows = table(out)
        assert len(rows) == 1
        assert float(rows[0]["max_p_b"]) >= 0.999

    def test_ordering_and_jobs(self, capsys):
        args = ["sweep", *FIG2, "--sweep-g", "0.01,0.02", "--sweep-l", "6:8:2",
                "--samples", "200"]
        _, serial, _ = run(capsys, *args)
        _, parallel, _ = run(capsys, *args, "--jobs", "2")
        assert serial == parallel
        keys = [(r["l"], r["g"]) for r in table(serial)]
        assert keys == [("6", "0.01"), ("6", "0.02"), ("8", "0.01"), ("8", "0.02")]

    def test_distance_monotonic(self, capsys):
        _, out, _ = run(capsys, "sweep", *FIG1, "--sweep-l", "2,4,6,8")
        t_max = column(table(out), "t_at_max")
        assert all(b > a for a, b in zip(t_max, t_max[1:]))
        k = 1.5 - math.sqrt(1.25)
        ratio = t_max[1:] / t_max[:-1]
        np.testing.assert_allclose(ratio, k ** -2, rtol=0.1)

    def test_sqrt_n_scaling(self, capsys):
        _, out, _ = run(capsys, "sweep", *FIG2, "--sweep-n", "16,32,64", "--l-ratio", "0.5")
        t_max = column(table(out), "t_at_max")
        np.testing.assert_allclose(t_max / np.sqrt([16, 32, 64]), t_max[0] / 4, rtol=0.05)


class TestFigures:
    def test_tables(self, tmp_path, capsys):
        assert main(["figures", "--out", str(tmp_path), "--samples", "1001"]) == EXIT_OK
        capsys.readouterr()
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == ["fig1.csv", "fig2.csv", "fig3.csv"]
        for name in names:
            head = (tmp_path / name).read_text().split("\n", 1)[0]
            assert head == "t,p_a_num,p_b_num,p_a_th,p_b_th"

        fig1 = table((tmp_path / "fig1.csv").read_text())
        assert all(r["p_b_num"] and r["p_b_th"] for r in fig1)

        fig2 = table((tmp_path / "fig2.csv").read_text())
        for a, b in (("p_a_num", "p_a_th"), ("p_b_num", "p_b_th")):
            assert np.abs(column(fig2, a) - column(fig2, b)).max() <= 0.02

        fig3 = table((tmp_path / "fig3.csv").read_text())
        t = column(fig3, "t")
        step = np.diff(t)
        # coarse envelope grid plus a window resolving the fast oscillation
        assert step.max() / step.min() > 1e3
        assert t[-1] == pytest.approx(math.pi)


class TestErrors:
    def test_config_file_and_override(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# fig 2\nn = 16\nl = 8\ng = 0.01\nomega = 0\nsamples = 3\n"
                       "t_end = 10\n")
        _, out, _ = run(capsys, "simulate", "--config", str(cfg), "--samples", "4")
        assert len(table(out)) == 4

    def test_bad_config_leaves_no_file(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("n = sixteen\n")
        target = tmp_path / "out.csv"
        code, _, err = run(capsys, "simulate", "--config", str(cfg), "--out", str(target))
        assert code == EXIT_USAGE and err.startswith("error:")
        assert not target.exists()
        assert list(tmp_path.iterdir()) == [cfg]

    @pytest.mark.parametrize("argv", [
        ["--samples", "1"], ["--t-start", "5", "--t-end", "5"], ["--t-start", "-1"],
        ["--l", "17"], ["--g", "-1"], ["--jobs", "0"], ["--initial", "C"],
        ["--times", "3,1"], ["--l-ratio", "0.3"],
    ])
    def test_usage_errors(self, argv, capsys):
        code, out, err = run(capsys, "simulate", *FIG2, *argv)
        assert code == EXIT_USAGE and out == "" and "error" in err

    def test_bad_sweep_axis(self, capsys):
        code, _, _ = run(capsys, "sweep", *FIG2, "--sweep-g", "1:0:0.1")
        assert code == EXIT_USAGE

    def test_argparse_usage(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["bogus"])
        assert exc.value.code == EXIT_USAGE

    def test_numerical_exit_code_constant(self):
        assert EXIT_NUMERICAL == 3


def test_parse_axis():
    assert parse_axis("2:8:2", True) == [2, 4, 6, 8]
    assert parse_axis("0.1:0.3:0.1", False) == pytest.approx([0.1, 0.2, 0.3])
    assert parse_axis("3,1", True) == [3, 1]


def test_console_script_module():
    proc = subprocess.run([sys.executable, "-m", "qst_channel.cli", "predict", *FIG3],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "StrongCoupling" in proc.stdout
