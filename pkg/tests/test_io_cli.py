import json
import os

import jsonschema
import numpy as np
import pytest

from gstab import matrixio
from gstab.cli import main
from gstab.rng import RandomStream
from gstab.synthetic import gen_class_gaussians


def gen(seed=0):
    return RandomStream(seed).substream(0)


class TestMatrixFiles:
    def test_binary_round_trip_bitwise(self, tmp_path):
        x = gen(1).standard_normal((13, 7))
        path = tmp_path / "m.gstb"
        matrixio.write_matrix_binary(path, x)
        again = matrixio.read_matrix(path)
        assert np.array_equal(x, again)
        matrixio.write_matrix_binary(tmp_path / "m2.gstb", again)
        assert (tmp_path / "m.gstb").read_bytes() == (tmp_path / "m2.gstb").read_bytes()

    def test_binary_header_layout(self, tmp_path):
        x = np.arange(6.0).reshape(2, 3)
        path = tmp_path / "m.gstb"
        matrixio.write_matrix_binary(path, x)
        raw = path.read_bytes()
        assert raw[:4] == b"GSTB"
        assert int.from_bytes(raw[4:6], "little") == 1
        assert int.from_bytes(raw[8:16], "little") == 2
        assert int.from_bytes(raw[16:24], "little") == 3
        assert len(raw) == 24 + 8 * 6

    def test_csv_round_trip_preserves_values(self, tmp_path):
        x = gen(2).standard_normal((9, 4)) * 1e-7
        path = tmp_path / "m.csv"
        matrixio.write_matrix_csv(path, x)
        assert np.array_equal(matrixio.read_matrix(path), x)

    def test_csv_header_autodetected(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("a,b\n1.0,2.0\n3.0,4.0\n")
        x, header = matrixio.read_matrix_with_header(path)
        assert header == ["a", "b"]
        assert np.array_equal(x, [[1.0, 2.0], [3.0, 4.0]])

    def test_truncated_binary_rejected(self, tmp_path):
        x = gen(3).standard_normal((4, 4))
        path = tmp_path / "m.gstb"
        matrixio.write_matrix_binary(path, x)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(matrixio.InputFormatError):
            matrixio.read_matrix(path)

    def test_ragged_csv_rejected(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("1,2\n3,4,5\n")
        with pytest.raises(matrixio.InputFormatError):
            matrixio.read_matrix(path)

    def test_labels_round_trip(self, tmp_path):
        path = tmp_path / "y.csv"
        path.write_text("label\n0\n1\n2\n1\n")
        assert np.array_equal(matrixio.read_labels(path), [0, 1, 2, 1])

    def test_label_column_extraction(self):
        x = np.array([[1.0, 0.0, 5.5], [2.0, 1.0, 6.5]])
        rest, labels = matrixio.split_label_column(x, ["f0", "y", "f1"], "y")
        assert np.array_equal(labels, [0, 1])
        assert np.array_equal(rest, [[1.0, 5.5], [2.0, 6.5]])


class TestReports:
    def test_report_round_trips_losslessly(self):
        report = matrixio.build_report(
            ["metrics", "feature_split"],
            320,
            {"splits": 30},
            [{"metric": "feature_split", "value": 0.1 + 0.2}],
        )
        text = matrixio.dump_report(report)
        assert json.loads(text)["results"][0]["value"] == 0.1 + 0.2

    def test_report_validates_against_schema(self):
        schema = matrixio.load_report_schema()
        report = matrixio.build_report(
            ["metrics", "cka"],
            7,
            {"x": 1},
            [{"metric": "cka", "value": 0.5, "ci": {"low": 0.4, "high": 0.6, "iterations": 100}}],
            warnings=["w"],
        )
        jsonschema.validate(report, schema)


def write_inputs(tmp_path, n=60, d=12, seed=5):
    x = gen(seed).standard_normal((n, d))
    y = gen(seed + 1).integers(0, 3, size=n)
    x_path = tmp_path / "x.csv"
    y_path = tmp_path / "y.csv"
    matrixio.write_matrix_csv(x_path, x)
    y_path.write_text("\n".join(str(v) for v in y) + "\n")
    return x_path, y_path, x, y


class TestCliMetrics:
    def test_metrics_report_written_and_valid(self, tmp_path, capsys):
        x_path, y_path, _, _ = write_inputs(tmp_path)
        out = tmp_path / "report.json"
        code = main(
            [
                "metrics",
                "--input", str(x_path),
                "--labels", str(y_path),
                "--metric", "feature_split,variance_ratio",
                "--splits", "5",
                "--seed", "11",
                "--output", str(out),
            ]
        )
        assert code == 0
        report = json.loads(out.read_text())
        jsonschema.validate(report, matrixio.load_report_schema())
        names = [r["metric"] for r in report["results"]]
        assert names == ["feature_split", "variance_ratio"]

    def test_reports_byte_identical_across_runs(self, tmp_path):
        x_path, y_path, _, _ = write_inputs(tmp_path)
        outs = []
        for name in ("a.json", "b.json"):
            out = tmp_path / name
            code = main(
                [
                    "metrics",
                    "--input", str(x_path),
                    "--labels", str(y_path),
                    "--metric", "feature_split,supervised_rdm",
                    "--splits", "6",
                    "--seed", "3",
                    "--workers", "1" if name == "a.json" else "4",
                    "--output", str(out),
                ]
            )
            assert code == 0
            outs.append(out.read_bytes())
        # workers flag must not alter any reported number
        assert json.loads(outs[0])["results"] == json.loads(outs[1])["results"]

    def test_missing_labels_is_exit_2_with_code(self, tmp_path, capsys):
        x_path, _, _, _ = write_inputs(tmp_path)
        code = main(
            ["metrics", "--input", str(x_path), "--metric", "variance_ratio"]
        )
        captured = capsys.readouterr()
        assert code == 2
        assert "LabelRequired" in captured.err
        assert len(captured.err.strip().splitlines()) == 1

    def test_missing_reference_is_exit_2(self, tmp_path, capsys):
        x_path, _, _, _ = write_inputs(tmp_path)
        code = main(["metrics", "--input", str(x_path), "--metric", "cka"])
        assert code == 2
        assert "ReferenceRequired" in capsys.readouterr().err

    def test_reference_metrics(self, tmp_path):
        x_path, _, x, _ = write_inputs(tmp_path)
        ref = tmp_path / "ref.csv"
        matrixio.write_matrix_csv(ref, x)
        out = tmp_path / "r.json"
        code = main(
            [
                "metrics",
                "--input", str(x_path),
                "--reference", str(ref),
                "--metric", "cka,procrustes,rdm_spearman",
                "--output", str(out),
            ]
        )
        assert code == 0
        values = {r["metric"]: r["value"] for r in json.loads(out.read_text())["results"]}
        for v in values.values():
            assert v == pytest.approx(1.0, abs=1e-8)

    def test_bootstrap_ci_included(self, tmp_path):
        x_path, y_path, _, _ = write_inputs(tmp_path)
        out = tmp_path / "boot.json"
        code = main(
            [
                "metrics",
                "--input", str(x_path),
                "--labels", str(y_path),
                "--metric", "variance_ratio",
                "--bootstrap", "50",
                "--output", str(out),
            ]
        )
        assert code == 0
        entry = json.loads(out.read_text())["results"][0]
        assert entry["ci"]["iterations"] == 50
        assert entry["ci"]["low"] <= entry["ci"]["high"]

    def test_label_col_from_header(self, tmp_path):
        g = gen(8)
        x = g.standard_normal((30, 3))
        y = g.integers(0, 2, size=30)
        path = tmp_path / "with_labels.csv"
        rows = ["f0,f1,f2,target"] + [
            ",".join([f"{v:.17g}" for v in row] + [str(int(lab))])
            for row, lab in zip(x, y)
        ]
        path.write_text("\n".join(rows) + "\n")
        out = tmp_path / "lc.json"
        code = main(
            [
                "metrics",
                "--input", str(path),
                "--label-col", "target",
                "--metric", "variance_ratio",
                "--output", str(out),
            ]
        )
        assert code == 0

    def test_env_seed_override(self, tmp_path, monkeypatch):
        x_path, _, _, _ = write_inputs(tmp_path)
        monkeypatch.setenv("GSTB_SEED", "777")
        out = tmp_path / "env.json"
        code = main(
            ["metrics", "--input", str(x_path), "--metric", "feature_split", "--splits", "4", "--output", str(out)]
        )
        assert code == 0
        assert json.loads(out.read_text())["seed"] == 777


class TestCliTransform:
    def test_identity_binary_bitwise(self, tmp_path):
        x = gen(9).standard_normal((20, 6))
        src = tmp_path / "in.gstb"
        matrixio.write_matrix_binary(src, x)
        out = tmp_path / "out.gstb"
        code = main(["transform", "--input", str(src), "--encoder", "identity", "--output", str(out)])
        assert code == 0
        assert src.read_bytes() == out.read_bytes()
        sidecar = json.loads((tmp_path / "out.gstb.params.json").read_text())
        assert sidecar["encoder"] == "identity"

    def test_pca_shape(self, tmp_path):
        x = gen(10).standard_normal((50, 30))
        src = tmp_path / "in.csv"
        matrixio.write_matrix_csv(src, x)
        out = tmp_path / "out.csv"
        code = main(["transform", "--input", str(src), "--encoder", "pca:k=10", "--output", str(out)])
        assert code == 0
        assert matrixio.read_matrix(out).shape == (50, 10)

    def test_noise_deterministic_per_seed(self, tmp_path):
        x = gen(11).standard_normal((15, 5))
        src = tmp_path / "in.gstb"
        matrixio.write_matrix_binary(src, x)
        outs = []
        for name in ("n1.gstb", "n2.gstb"):
            out = tmp_path / name
            assert main(
                ["transform", "--input", str(src), "--encoder", "noise:sigma=0.1", "--seed", "5", "--output", str(out)]
            ) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_bad_encoder_spec_exit_2(self, tmp_path, capsys):
        x = gen(12).standard_normal((10, 4))
        src = tmp_path / "in.csv"
        matrixio.write_matrix_csv(src, x)
        code = main(["transform", "--input", str(src), "--encoder", "pca:k=oops"])
        assert code == 2
        assert "SpecParse" in capsys.readouterr().err


class TestCliDrift:
    def test_identical_snapshots_zero_drift(self, tmp_path):
        x = gen(13).standard_normal((40, 8))
        b = tmp_path / "b.csv"
        matrixio.write_matrix_csv(b, x)
        out = tmp_path / "d.json"
        code = main(
            [
                "drift",
                "--baseline", str(b),
                "--current", str(b),
                "--metrics", "rdm_spearman,cka,procrustes,rdm_pearson",
                "--output", str(out),
            ]
        )
        assert code == 0
        for entry in json.loads(out.read_text())["results"]:
            assert abs(entry["value"]) <= 1e-10

    def test_sweep_monotone_and_threshold(self, tmp_path):
        from gstab.synthetic import MixedSpec, gen_mixed

        x = gen_mixed(MixedSpec(n=120, d=64, alpha=0.9, seed=14))
        b = tmp_path / "b.csv"
        matrixio.write_matrix_csv(b, x)
        out = tmp_path / "sweep.json"
        code = main(
            [
                "drift",
                "--baseline", str(b),
                "--sweep", "noise:0.0,0.3,0.6,1.0,1.5",
                "--metrics", "rdm_spearman",
                "--output", str(out),
            ]
        )
        assert code == 0
        report = json.loads(out.read_text())
        drifts = report["values"]["rdm_spearman"]
        assert drifts == sorted(drifts)

    def test_sweep_with_accuracy_reports_roc(self, tmp_path):
        from gstab.synthetic import MixedSpec, gen_mixed

        x = gen_mixed(MixedSpec(n=100, d=64, alpha=0.9, seed=15))
        b = tmp_path / "b.csv"
        matrixio.write_matrix_csv(b, x)
        acc = tmp_path / "acc.csv"
        acc.write_text("0.95\n0.95\n0.94\n0.9\n0.8\n")
        out = tmp_path / "roc.json"
        code = main(
            [
                "drift",
                "--baseline", str(b),
                "--sweep", "noise:0.0,0.2,0.5,1.0,2.0",
                "--metrics", "rdm_spearman,cka",
                "--accuracy", str(acc),
                "--output", str(out),
            ]
        )
        assert code == 0
        report = json.loads(out.read_text())
        aux = report["results"][0]["aux"]
        assert "roc_auc" in aux and "false_alarm_rate" in aux
        assert "early_warning" in report["values"]

    def test_row_mismatch_exit_2(self, tmp_path, capsys):
        g = gen(16)
        b, c = tmp_path / "b.csv", tmp_path / "c.csv"
        matrixio.write_matrix_csv(b, g.standard_normal((10, 4)))
        matrixio.write_matrix_csv(c, g.standard_normal((12, 4)))
        code = main(["drift", "--baseline", str(b), "--current", str(c), "--metrics", "cka"])
        assert code == 2
        assert "RowCountMismatch" in capsys.readouterr().err


class TestCliSteer:
    def test_steer_report(self, tmp_path):
        x, y = gen_class_gaussians(60, 16, 2, separation=1.0, noise=0.1, seed=17)
        xt, yt = x[:60], y[:60]
        xs, ys = x[60:], y[60:]
        paths = {}
        for name, arr in (("xt", xt), ("xs", xs)):
            p = tmp_path / f"{name}.csv"
            matrixio.write_matrix_csv(p, arr)
            paths[name] = p
        for name, arr in (("yt", yt), ("ys", ys)):
            p = tmp_path / f"{name}.csv"
            p.write_text("\n".join(str(int(v)) for v in arr) + "\n")
            paths[name] = p
        out = tmp_path / "steer.json"
        code = main(
            [
                "steer",
                "--train", f"{paths['xt']},{paths['yt']}",
                "--test", f"{paths['xs']},{paths['ys']}",
                "--controls", "shuffled,random:5",
                "--output", str(out),
            ]
        )
        assert code == 0
        report = json.loads(out.read_text())
        metrics = {r["metric"]: r["value"] for r in report["results"]}
        assert "max_drop" in metrics and "true_vs_random_ratio" in metrics
        assert abs(metrics["shuffled_supervised_rdm"]) <= 0.3

    def test_alpha_zero_grid(self, tmp_path):
        x, y = gen_class_gaussians(40, 8, 2, separation=1.5, noise=0.1, seed=18)
        xp, yp = tmp_path / "x.csv", tmp_path / "y.csv"
        matrixio.write_matrix_csv(xp, x)
        yp.write_text("\n".join(str(int(v)) for v in y) + "\n")
        out = tmp_path / "a0.json"
        code = main(
            [
                "steer",
                "--train", f"{xp},{yp}",
                "--test", f"{xp},{yp}",
                "--alphas", "0",
                "--output", str(out),
            ]
        )
        assert code == 0
        metrics = {r["metric"]: r["value"] for r in json.loads(out.read_text())["results"]}
        assert metrics["max_drop"] == 0.0


class TestCliValidate:
    def test_sanity_suite_passes_and_prints_lines(self, tmp_path, capsys):
        out = tmp_path / "v.json"
        code = main(["validate", "--suite", "sanity", "--output", str(out)])
        captured = capsys.readouterr()
        assert code == 0
        lines = [l for l in captured.out.splitlines() if l.startswith("[")]
        assert len(lines) == 4 and all(l.startswith("[PASS]") for l in lines)
        report = json.loads(out.read_text())
        jsonschema.validate(report, matrixio.load_report_schema())

    def test_validate_runs_byte_identical(self, tmp_path, capsys):
        outs = []
        for name in ("v1.json", "v2.json"):
            out = tmp_path / name
            code = main(["validate", "--suite", "determinism", "--output", str(out), "--workers", "2"])
            assert code == 0
            outs.append(out.read_bytes())
        capsys.readouterr()
        assert outs[0] == outs[1]

    def test_failing_suite_exits_1(self, monkeypatch, capsys):
        from gstab import suites

        def broken(seed=320, workers=1):
            result = suites.SuiteResult("sanity")
            result.add("always_fails", 1.0, "v <= 0.0", False)
            return result

        monkeypatch.setitem(suites.SUITES, "sanity", broken)
        code = main(["validate", "--suite", "sanity"])
        captured = capsys.readouterr()
        assert code == 1
        assert "[FAIL]" in captured.out


class TestCliPaperScaleExample:
    def test_feature_split_on_gaussian_500x128_near_zero(self, tmp_path):
        x = gen(99).standard_normal((500, 128))
        path = tmp_path / "g.csv"
        matrixio.write_matrix_csv(path, x)
        out = tmp_path / "fs.json"
        code = main(
            ["metrics", "--input", str(path), "--metric", "feature_split", "--seed", "320", "--output", str(out)]
        )
        assert code == 0
        value = json.loads(out.read_text())["results"][0]["value"]
        assert abs(value) <= 0.05
