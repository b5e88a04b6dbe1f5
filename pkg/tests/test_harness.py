import csv
import json
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hqnn.circuit_metrics import SamplingPlan
from hqnn.embedding import Embedding
from hqnn.harness import cli
from hqnn.harness.complexity import (
    amplitude_depth,
    amplitude_prep_cnots,
    angle_depth,
    complexity_report,
    equal_param_qnn_layers,
    hqnn_classical_formula,
    nn_amplitude_classical,
    nn_angle_classical,
    nn_classical_formula,
    nn_params,
    qpu_ratio_equal_layers,
    qpu_ratio_equal_params,
    quantum_params,
    u4_gates,
)
from hqnn.harness.config import load_config, merge, spec_from_config
from hqnn.harness.datasets import DatasetSpec, TargetFunction, damped_sinc, make_dataset, read_csv, write_csv
from hqnn.harness.models import ExperimentSpec, ModelAuditError, ModelKind, Task, build_model
from hqnn.harness.runner import (
    EMBEDDING_COLUMNS,
    METRIC_COLUMNS,
    NOISE_COLUMNS,
    SweepKind,
    load_run_report,
    read_trace,
    run_experiment,
    sweep,
)
from hqnn.metrics import MetricReport
from hqnn.training import TrainConfig

FAST = TrainConfig(epochs=2, repeats=2)


class TestDatasets:
    def test_sinc_values(self):
        assert damped_sinc([3.0]) == pytest.approx(math.sin(15) / 15, abs=1e-15)
        assert damped_sinc([1.0, 2.0]) == pytest.approx(math.sin(5) / 5 + math.sin(10) / 10, abs=1e-15)

    def test_sinc_rejects_zero(self):
        with pytest.raises(ValueError):
            damped_sinc([0.0])

    @pytest.mark.parametrize("fn", list(TargetFunction))
    def test_split_and_interval(self, fn):
        ds = make_dataset(DatasetSpec(fn, seed=3))
        assert ds.x_train.shape == (200, fn.n_inputs) and ds.x_test.shape == (100, fn.n_inputs)
        x = np.concatenate([ds.x_train, ds.x_test])
        assert np.all(x > 0) and np.all(x <= 3)
        assert not set(map(tuple, ds.x_train)) & set(map(tuple, ds.x_test))
        np.testing.assert_array_equal(ds.y_train, damped_sinc(ds.x_train))

    def test_seeded(self):
        a, b = make_dataset(DatasetSpec(seed=1)), make_dataset(DatasetSpec(seed=1))
        np.testing.assert_array_equal(a.x_train, b.x_train)
        assert not np.array_equal(a.x_train, make_dataset(DatasetSpec(seed=2)).x_train)

    def test_csv_round_trip(self, tmp_path):
        ds = make_dataset(DatasetSpec(TargetFunction.DAMPED_SINC_2D))
        write_csv(tmp_path / "d.csv", ds)
        back = read_csv(tmp_path / "d.csv")
        for a, b in zip((ds.x_train, ds.y_train, ds.x_test, ds.y_test), (back.x_train, back.y_train, back.x_test, back.y_test)):
            np.testing.assert_array_equal(a, b)

    def test_csv_bad_split(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("x1,y,split\n1.0,0.2,validate\n", encoding="utf-8")
        with pytest.raises(ValueError, match="unknown split"):
            read_csv(p)

    def test_csv_missing_columns(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b\n1,2\n", encoding="utf-8")
        with pytest.raises(ValueError):
            read_csv(p)


def spec(task, model, n=1, L=5, **kw):
    return ExperimentSpec(Task(task), ModelKind(model), n, L, **kw)


class TestModelCounts:
    @pytest.mark.parametrize(
        "task,model,n,L,width,classical,quantum",
        [
            ("univariate", "nn", 0, 1, 2, 2, 0),
            ("univariate", "nn", 0, 5, 2, 25, 0),
            ("univariate", "nn", 0, 10, 2, 55, 0),
            ("univariate", "qnn", 1, 1, 2, 0, 3),
            ("univariate", "qnn", 1, 5, 2, 0, 15),
            ("univariate", "hqnn", 1, 1, 2, 4, 3),
            ("univariate", "hqnn", 1, 5, 2, 4, 15),
            ("univariate", "hqnn_no_cin", 1, 1, 2, 2, 3),
            ("univariate", "hqnn_no_cin", 1, 5, 2, 2, 15),
            ("univariate", "nn", 0, 5, 8, 241, 0),
            ("univariate", "nn", 0, 5, 16, 865, 0),
            ("univariate", "nn", 0, 5, 32, 3265, 0),
            ("multivariate", "nn", 0, 1, 2, 3, 0),
            ("multivariate", "nn", 0, 10, 2, 57, 0),
            ("multivariate", "qnn", 2, 1, 2, 0, 6),
            ("multivariate", "qnn", 2, 5, 2, 0, 30),
            ("multivariate", "hqnn", 2, 1, 2, 9, 6),
            ("multivariate", "hqnn", 2, 5, 2, 9, 30),
            ("multivariate", "nn", 0, 5, 32, 3297, 0),
            ("multivariate", "nn", 0, 5, 64, 12737, 0),
            ("multivariate", "nn", 0, 5, 128, 50049, 0),
        ],
    )
    def test_reference_rows(self, task, model, n, L, width, classical, quantum):
        s = spec(task, model, n, L, nn_width=width)
        m = build_model(s)
        rep = complexity_report(s)
        assert (m.n_classical, m.n_quantum) == (classical, quantum)
        assert (rep.classical_param_count, rep.quantum_param_count) == (classical, quantum)

    def test_width_two_nn_at_five_layers_multivariate(self):
        # [2, 2, 2, 2, 2, 1] has 6 + 6 + 6 + 6 + 3 weights and biases
        assert build_model(spec("multivariate", "nn", 0, 5)).n_classical == 27

    def test_hqnn_without_input_net_multivariate(self):
        # only the [2 -> 1] regression layer remains
        assert build_model(spec("multivariate", "hqnn_no_cin", 2, 5)).n_classical == 3

    def test_audit_catches_mismatch(self, monkeypatch):
        import hqnn.harness.models as models

        real = models.complexity_report
        monkeypatch.setattr(models, "complexity_report", lambda s: replace(real(s), quantum_param_count=-1))
        with pytest.raises(ModelAuditError):
            build_model(spec("univariate", "hqnn"))

    def test_qnn_input_mismatch(self):
        with pytest.raises(ValueError):
            spec("multivariate", "qnn", 1)
        # two amplitudes fit on one qubit, three do not
        spec("multivariate", "qnn", 1, embedding=Embedding.AMPLITUDE)
        with pytest.raises(ValueError):
            ExperimentSpec(Task.CUSTOM_CSV, ModelKind.QNN, 1, embedding=Embedding.AMPLITUDE, data_path="d.csv", custom_inputs=3)

    def test_amplitude_hqnn(self):
        m = build_model(spec("multivariate", "hqnn", 3, 2, embedding=Embedding.AMPLITUDE))
        assert m.n_classical == 3 * 8 + 4 and m.n_quantum == 18

    def test_seeded_build(self):
        s = spec("univariate", "hqnn")
        np.testing.assert_array_equal(build_model(s, 4).get_params(), build_model(s, 4).get_params())


class TestComplexity:
    def test_quantum_counts(self):
        assert [quantum_params(9, L) for L in (1, 5, 10, 15, 20)] == [27, 135, 270, 405, 540]
        assert [quantum_params(n, 20) for n in (2, 4, 7)] == [120, 240, 420]

    def test_depths_at_nine_qubits_twenty_layers(self):
        assert angle_depth(9, 20) == 260
        assert amplitude_depth(9, 20) == 10480

    @pytest.mark.parametrize("n,L,depth", [(2, 1, 6), (4, 5, 40), (7, 20, 220), (9, 15, 195)])
    def test_angle_depth_rows(self, n, L, depth):
        assert angle_depth(n, L) == depth

    def test_prep_cnot_bound(self):
        assert [amplitude_prep_cnots(n) for n in (1, 2, 3, 9)] == [0, 3, 14, 65529]

    def test_u4_counts(self):
        assert u4_gates(Embedding.ANGLE, 9, 20) == 180
        assert u4_gates(Embedding.AMPLITUDE, 2, 5) == 5 * (2 + 3)
        assert u4_gates(Embedding.ANGLE, 1, 5) == 0

    def test_report(self):
        s = ExperimentSpec(Task.CUSTOM_CSV, ModelKind.HQNN, 9, 20, Embedding.AMPLITUDE, data_path="x.csv", custom_inputs=384)
        rep = complexity_report(s)
        assert rep.circuit_depth == 10480 and rep.quantum_param_count == 540
        assert rep.classical_param_count == 385 * 512 + 10
        assert rep.circuit_depth_expression.endswith("= 10480")

    def test_bias_free_formulas(self):
        assert hqnn_classical_formula(1, 1) == 2 and hqnn_classical_formula(2, 2) == 6
        assert nn_angle_classical(384, 9) == 385 * 9
        assert nn_amplitude_classical(384, 9) == 384 * 512 + 9
        assert equal_param_qnn_layers(3, 2) == 4
        with pytest.raises(ValueError):
            equal_param_qnn_layers(2, 2)
        assert qpu_ratio_equal_params(4) == 1.5
        assert qpu_ratio_equal_layers(2, 1) == pytest.approx(12 / 6)

    @given(st.integers(1, 64), st.integers(1, 50), st.integers(1, 50), st.integers(1, 4))
    def test_nn_exceeds_hqnn_exactly_when(self, m, L, n_in, m_out):
        nn = nn_classical_formula(n_in, m, L, m_out)
        hqnn_total = hqnn_classical_formula(n_in, m, m_out) + 3 * m * L
        assert (nn >= hqnn_total) == (m * (L + 2) >= 3 * L)

    @given(st.integers(1, 30), st.integers(0, 30))
    def test_equal_param_layers_match_budget(self, m, L_nn):
        if (m * (L_nn + 2)) % 3:
            return
        L_q = equal_param_qnn_layers(m, L_nn)
        assert 3 * m * L_q == m * m * (L_nn + 2)
        assert qpu_ratio_equal_layers(m, L_q) * L_q * (m + 4) == pytest.approx(m * m * (L_q + 2))

    def test_nn_param_helper(self):
        assert nn_params(1, 10) == 55 and nn_params(2, 5, 128) == 50049


class TestConfig:
    def test_load_and_merge(self, tmp_path):
        p = tmp_path / "c.ini"
        p.write_text(
            "[experiment]\ntask = multivariate\nmodel = hqnn\nqubits = 2\n[train]\nepochs = 3\n"
            "cosine_schedule = yes\n[noise]\nchannel = depolarizing\nrate = 0.01\n",
            encoding="utf-8",
        )
        cfg = merge(load_config(p), {"train": {"seed": 7, "epochs": None}})
        s = spec_from_config(cfg)
        assert s.task is Task.MULTIVARIATE and s.n_qubits == 2
        assert s.train.epochs == 3 and s.train.seed == 7 and s.train.cosine_schedule
        assert s.noise.rate == 0.01

    @pytest.mark.parametrize(
        "text", ["[bogus]\na = 1\n", "[train]\nlr = 0.1\n", "[train]\nepochs = many\n", "[experiment]\nmodel = svm\n"]
    )
    def test_rejects(self, tmp_path, text):
        p = tmp_path / "c.ini"
        p.write_text(text, encoding="utf-8")
        with pytest.raises(ValueError):
            load_config(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config(tmp_path / "none.ini")


class TestRunner:
    def test_layout_and_round_trip(self, tmp_path):
        s = spec("univariate", "hqnn", train=FAST, output_dir=tmp_path)
        agg = run_experiment(s)
        assert len(agg.ok_runs) == 2
        for seed in (0, 1):
            d = tmp_path / f"run-{seed}"
            assert len(read_trace(d / "trace.csv")) == 2
            assert load_run_report(d) == agg.runs[seed].report
        data = json.loads((tmp_path / "aggregate.json").read_text(encoding="utf-8"))
        assert data["n_ok"] == 2 and data["complexity"]["classical_param_count"] == 4
        mean = np.mean([r.report.mse for r in agg.runs])
        assert data["test_metrics"]["mse"]["mean"] == mean
        with (tmp_path / "runs.csv").open(encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["seed"] + MetricReport.columns() and len(rows) == 3

    def test_rerun_is_byte_identical(self, tmp_path):
        outs = []
        for name in ("a", "b"):
            s = spec("multivariate", "hqnn", 2, 2, train=FAST, output_dir=tmp_path / name)
            run_experiment(s)
            outs.append({p.relative_to(tmp_path / name): p.read_bytes() for p in (tmp_path / name).rglob("*") if p.is_file()})
        assert outs[0] == outs[1]

    def test_parallel_matches_serial(self):
        s = spec("univariate", "hqnn", train=FAST)
        a = run_experiment(s, jobs=1)
        b = run_experiment(s, jobs=2)
        assert [r.report for r in a.runs] == [r.report for r in b.runs]

    def test_diverged_run_recorded(self, monkeypatch):
        import hqnn.harness.runner as runner
        from hqnn.training import TrainingDiverged

        def boom(*a, **k):
            raise TrainingDiverged("loss became nan at epoch 1")

        monkeypatch.setattr(runner, "train", boom)
        agg = run_experiment(spec("univariate", "hqnn", train=FAST))
        assert not agg.ok_runs and all("nan" in r.error for r in agg.runs)
        assert math.isnan(agg.stat("mse")[0])

    def test_custom_csv_task(self, tmp_path):
        write_csv(tmp_path / "d.csv", make_dataset(DatasetSpec(TargetFunction.DAMPED_SINC_2D)))
        s = ExperimentSpec(Task.CUSTOM_CSV, ModelKind.HQNN, 2, 1, data_path=tmp_path / "d.csv", custom_inputs=2, train=FAST)
        assert len(run_experiment(s).ok_runs) == 2
        bad = replace(s, custom_inputs=3)
        with pytest.raises(ValueError):
            run_experiment(bad)


class TestSweeps:
    def test_metric_sweep_rows(self, tmp_path):
        plan = SamplingPlan(n_samples=80, n_bins=75, n_runs=2)
        base = spec("univariate", "hqnn", output_dir=tmp_path)
        cols, rows = sweep(SweepKind.LAYERS_QUBITS_METRICS, {"qubits": [2, 4, 7, 9], "layers": [1, 5, 10, 15, 20]}, base, plan=plan)
        assert cols == METRIC_COLUMNS
        for metric in ("entangling_capability", "expressibility_kl"):
            assert len([r for r in rows if r[2] == metric]) == 20
        with (tmp_path / "sweep.csv").open(encoding="utf-8") as fh:
            assert len(list(csv.reader(fh))) == 41

    def test_noise_sweep_rows(self):
        base = spec("univariate", "hqnn", train=TrainConfig(epochs=1))
        grid = {"channels": ["depolarizing", "amplitude_damping"], "rates": [0, 0.001, 0.01, 0.1, 0.2]}
        cols, rows = sweep(SweepKind.NOISE, grid, base)
        assert cols == NOISE_COLUMNS and len(rows) == 10
        # rate 0 on either channel is the noiseless model
        assert rows[0][3] == pytest.approx(rows[5][3], abs=1e-12)

    def test_embedding_sweep_layout(self):
        base = spec("multivariate", "hqnn", 2, train=TrainConfig(epochs=1, repeats=1))
        cols, rows = sweep(SweepKind.EMBEDDING, {"embeddings": ["angle", "amplitude"], "layers": [1, 2]}, base)
        assert cols == EMBEDDING_COLUMNS and len(rows) == 4
        assert [r[:3] for r in rows] == [["angle", 2, 1], ["angle", 2, 2], ["amplitude", 2, 1], ["amplitude", 2, 2]]
        assert rows[2][3] == 2 * 4 + 4 + 3

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            sweep(SweepKind.LAYERS_QUBITS_METRICS, {"qubits": [], "layers": [1]}, spec("univariate", "hqnn"))


class TestCli:
    def test_report(self, capsys):
        assert cli.main(["report", "--model", "hqnn", "--qubits", "1", "--layers", "5"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["classical_param_count"] == 4 and out["quantum_param_count"] == 15
        assert list(out) == sorted(out)

    def test_approx(self, tmp_path, capsys):
        rc = cli.main(["approx", "--epochs", "1", "--repeats", "1", "--output-dir", str(tmp_path)])
        assert rc == 0 and json.loads(capsys.readouterr().out)["n_ok"] == 1
        assert (tmp_path / "run-0" / "summary.json").exists()

    def test_dataset(self, tmp_path):
        assert cli.main(["dataset", "--task", "multivariate", "--output", str(tmp_path / "d.csv")]) == 0
        assert read_csv(tmp_path / "d.csv").n_inputs == 2

    def test_gradcheck(self, capsys):
        assert cli.main(["gradcheck", "--models", "3"]) == 0
        assert "PASS" in capsys.readouterr().out

    def test_analyze(self, capsys):
        rc = cli.main(["analyze", "--qubits", "2", "--layers", "1", "2", "--samples", "100", "--runs", "1"])
        lines = capsys.readouterr().out.strip().splitlines()
        assert rc == 0 and lines[0] == ",".join(METRIC_COLUMNS) and len(lines) == 5

    def test_noise(self, capsys):
        rc = cli.main(["noise", "--epochs", "1", "--channel", "depolarizing", "--rate", "0", "0.1"])
        assert rc == 0 and len(capsys.readouterr().out.strip().splitlines()) == 3

    def test_invalid_spec_exit_code(self, capsys):
        assert cli.main(["report", "--task", "multivariate", "--model", "qnn", "--qubits", "1"]) == 2
        assert "error" in capsys.readouterr().err
