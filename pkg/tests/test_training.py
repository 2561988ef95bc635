import numpy as np
import pytest

from singmos.errors import DataConsistencyError, NumericDivergenceError, ValidationError
from singmos.models import ModelSpec, build
from singmos.store import ClipLabel, Dataset, EmbeddingTable, synth_generate, write_embeddings
from singmos.training import (
    GridCell,
    TrainConfig,
    cell_seed,
    evaluate,
    run_grid,
    train,
    write_results_csv,
)


def small_dataset(seed=0, dims=(16, 12), counts=(24, 8, 8, 8), noise_sd=0.1):
    table_a, table_b, labels = synth_generate(seed, dims, counts, noise_sd)
    return Dataset(table_a, table_b, labels)


def single_dataset(seed=0, dim=16, counts=(24, 8, 8, 8), noise_sd=0.1):
    table_a, _, labels = synth_generate(seed, (dim, 8), counts, noise_sd)
    return Dataset(table_a, None, labels)


def quick_config(**overrides):
    base = dict(max_epochs=4, batch_size=8, patience=0, seed=1, dropout_rate=0.1)
    base.update(overrides)
    return TrainConfig(**base)


class TestTrain:
    def test_patience_zero_runs_all_epochs(self):
        ds = single_dataset()
        config = quick_config(max_epochs=5)
        _, report = train(ModelSpec("cnn", 16, seed=config.seed), ds, config)
        assert report.stopped_epoch == 5
        assert len(report.epochs) == 5
        assert len(report.dev_mse) == 5

    def test_early_stopping_stops_and_restores_best(self):
        ds = single_dataset(noise_sd=0.5)
        config = quick_config(max_epochs=30, patience=2, lr=5e-2)  # noisy + hot lr plateaus fast
        model, report = train(ModelSpec("fcn", 16, seed=config.seed), ds, config)
        assert report.stopped_epoch <= 30
        assert report.best_epoch <= report.stopped_epoch
        assert report.dev_mse[report.best_epoch - 1] == min(report.dev_mse)
        # the returned model is the best-epoch model
        redone = evaluate(model, "dev", ds)
        assert redone["mse"] == report.dev_mse[report.best_epoch - 1]

    def test_determinism_bitwise_reports(self):
        ds = small_dataset()
        spec = ModelSpec("batch", 16, 12, seed=1)
        r1 = train(spec, ds, quick_config())[1]
        r2 = train(ModelSpec("batch", 16, 12, seed=1), small_dataset(), quick_config())[1]
        assert r1.to_json() == r2.to_json()

    def test_loss_identity_and_bd_nonnegative(self):
        ds = small_dataset()
        _, report = train(ModelSpec("batch", 16, 12, seed=3), ds, quick_config(alpha=0.3))
        for entry in report.epochs:
            assert entry.total - (entry.mse + entry.alpha * entry.bd) == 0.0
            assert entry.bd >= 0.0

    def test_missing_embedding_raises_named_error(self):
        ds = small_dataset()
        del ds.table_b.records[2]
        missing = "clip_00002"
        with pytest.raises(DataConsistencyError, match=missing):
            train(ModelSpec("batch", 16, 12, seed=1), ds, quick_config())

    def test_wrong_table_count_for_kind(self):
        ds = single_dataset()
        with pytest.raises(Exception, match="two embedding tables"):
            train(ModelSpec("batch", 16, 12, seed=1), ds, quick_config())

    def test_numeric_divergence_reports_coordinates(self):
        table_a, _, labels = synth_generate(0, (12, 8), (8, 2, 2, 2), 0.1)
        # a single inf coordinate turns the prediction into nan (mixed-sign
        # infinities meet in the output dot product)
        poisoned = table_a.records[1][1].copy()
        poisoned[3] = np.float32("inf")
        table_a.records[1] = (table_a.records[1][0], poisoned)
        ds = Dataset(table_a, None, labels)
        with pytest.raises(NumericDivergenceError) as err, np.errstate(invalid="ignore"):
            train(ModelSpec("fcn", 12, seed=1), ds, quick_config(batch_size=8))
        assert err.value.epoch == 1 and err.value.batch == 1

    def test_planted_signal_cnn_reaches_tiny_train_mse(self):
        # noise-free planted data: the label is an exact function of the
        # embedding, so the conv regressor must drive train MSE below 1e-2
        table_a, _, labels = synth_generate(7, (32, 8), (96, 16, 16, 16), 0.0)
        ds = Dataset(table_a, None, labels)
        config = TrainConfig(max_epochs=500, batch_size=32, patience=0, seed=2, dropout_rate=0.0)
        _, report = train(ModelSpec("cnn", 32, dropout_rate=0.0, seed=2), ds, config)
        assert min(entry.mse for entry in report.epochs) < 1e-2

    def test_report_json_field_names(self):
        ds = single_dataset()
        _, report = train(ModelSpec("fcn", 16, seed=1), ds, quick_config(max_epochs=2))
        doc = __import__("json").loads(report.to_json())
        assert list(doc.keys()) == ["epochs", "dev_mse", "best_epoch", "stopped_epoch", "test_metrics", "seed"]
        assert set(doc["test_metrics"].keys()) == {"test-main", "test-other1"}
        assert set(doc["epochs"][0].keys()) == {"mse", "bd", "alpha", "total"}


class TestEvaluate:
    def test_zero_network_against_hand_values(self):
        dim = 16
        table = EmbeddingTable(
            "t", dim, [("a", np.zeros(dim, np.float32)), ("b", np.zeros(dim, np.float32))]
        )
        labels = [ClipLabel("a", 2.0, "test-main"), ClipLabel("b", 4.0, "test-main")]
        model = build(ModelSpec("fcn", dim, seed=0))
        for lp in model.parameters():
            lp.weights.data[...] = 0.0
            lp.bias.data[...] = 0.0
        metrics = evaluate(model, "test-main", Dataset(table, None, labels))
        assert metrics == {"mae": 3.0, "mse": 10.0}

    def test_matches_bruteforce_two_pass(self):
        ds = single_dataset(seed=4)
        model, _ = train(ModelSpec("fcn", 16, seed=4), ds, quick_config(max_epochs=2))
        metrics = evaluate(model, "test-other1", ds)

        ids = ds.clip_ids("test-other1")
        mos = {label.clip_id: label.mos for label in ds.labels}
        abs_sum = 0.0
        sq_sum = 0.0
        for clip_id in ids:
            vec = ds.table_a.vector(clip_id).astype(np.float64)[None, :]
            pred = float(model.forward(vec).predictions[0])
            abs_sum += abs(pred - mos[clip_id])
            sq_sum += (pred - mos[clip_id]) ** 2
        assert abs(metrics["mae"] - abs_sum / len(ids)) < 1e-12
        assert abs(metrics["mse"] - sq_sum / len(ids)) < 1e-12

    def test_empty_split(self):
        table_a, _, labels = synth_generate(0, (12, 8), (4, 2, 2, 2), 0.1)
        labels = [label for label in labels if label.split != "test-main"]
        ds = Dataset(table_a, None, labels)
        with pytest.raises(ValidationError, match="empty"):
            evaluate(build(ModelSpec("fcn", 12, seed=0)), "test-main", ds)


class TestGrid:
    def write_data(self, tmp_path, dims=(12, 10), counts=(20, 6, 6, 6)):
        table_a, table_b, labels = synth_generate(11, dims, counts, 0.1)
        table_a.ptm_id, table_b.ptm_id = "ptm-one", "ptm-two"
        write_embeddings(table_a, tmp_path / "ptm-one.smos")
        write_embeddings(table_b, tmp_path / "ptm-two.smos")
        from singmos.store import write_labels

        write_labels(labels, tmp_path / "labels.csv")
        return tmp_path / "labels.csv"

    def test_empty_cell_list(self, tmp_path):
        labels = self.write_data(tmp_path)
        rows = run_grid([], tmp_path, labels, quick_config())
        assert rows == []
        write_results_csv(rows, tmp_path / "out.csv")
        content = (tmp_path / "out.csv").read_text()
        assert content == "cell,kind,split,mae,mse,stopped_epoch,seed,error\n"

    def test_single_cell_two_rows(self, tmp_path):
        labels = self.write_data(tmp_path)
        cells = [GridCell("one", "cnn", "ptm-one")]
        rows = run_grid(cells, tmp_path, labels, quick_config(max_epochs=1))
        assert [r["split"] for r in rows] == ["test-main", "test-other1"]
        assert all(r["error"] == "" for r in rows)
        assert all(r["seed"] == cell_seed(quick_config().seed, "one") for r in rows)

    def test_thirteen_model_two_head_grid_row_count(self, tmp_path):
        labels = self.write_data(tmp_path)
        names = [f"m{i:02d}" for i in range(13)]
        cells = [
            GridCell(f"{name}-{kind}", kind, "ptm-one")
            for name in names
            for kind in ("fcn", "cnn")
        ]
        rows = run_grid(cells, tmp_path, labels, quick_config(max_epochs=1))
        assert len(rows) == 13 * 2 * 2  # models x heads x test splits

    def test_failed_cell_recorded_and_run_continues(self, tmp_path):
        labels = self.write_data(tmp_path)
        cells = [
            GridCell("missing", "cnn", "nonexistent-ptm"),
            GridCell("fine", "cnn", "ptm-one"),
        ]
        rows = run_grid(cells, tmp_path, labels, quick_config(max_epochs=1))
        assert rows[0]["cell"] == "missing" and rows[0]["error"] != ""
        assert rows[1]["cell"] == "fine" and rows[1]["error"] == ""
        assert len(rows) == 3

    def test_parallel_workers_match_serial(self, tmp_path):
        labels = self.write_data(tmp_path)
        cells = [GridCell("a", "fcn", "ptm-one"), GridCell("b", "concat", "ptm-one", "ptm-two")]
        serial = run_grid(cells, tmp_path, labels, quick_config(max_epochs=1), workers=1)
        parallel = run_grid(cells, tmp_path, labels, quick_config(max_epochs=1), workers=2)
        assert serial == parallel

    def test_cell_seeds_are_independent(self):
        assert cell_seed(0, "XV+EC") != cell_seed(0, "XV")
        assert cell_seed(0, "XV") == cell_seed(0, "XV")

    def test_csv_numeric_formatting(self, tmp_path):
        rows = [{
            "cell": "c", "kind": "cnn", "split": "test-main",
            "mae": 0.1234567, "mse": 1.0, "stopped_epoch": 3, "seed": 42, "error": "",
        }]
        write_results_csv(rows, tmp_path / "r.csv")
        lines = (tmp_path / "r.csv").read_text().splitlines()
        assert lines[1] == "c,cnn,test-main,0.123457,1.000000,3,42,"
