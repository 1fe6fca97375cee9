"""Training loop: convergence, divergence handling, determinism."""

import numpy as np
import pytest
import torch

from qectrain.formats import load_weights
from qectrain.prepare import prepare
from qectrain.train import (
    TrainConfig,
    TrainingDiverged,
    pretrain,
    quantize_train,
    write_report,
)


def quiet(_msg):
    pass


@pytest.fixture(scope="module")
def small_training_set(small_data):
    xs, ys = [], []
    for key in (1, 3, 7, 12):
        x, y = prepare(str(small_data[key][0]), "Z")
        xs.append(x)
        ys.append(y)
    return np.concatenate(xs), np.concatenate(ys)


def test_config_validation():
    TrainConfig().validate()
    with pytest.raises(ValueError, match="optimizer"):
        TrainConfig(optimizer="sgd").validate()
    with pytest.raises(ValueError, match="val_fraction"):
        TrainConfig(val_fraction=1.0).validate()
    with pytest.raises(ValueError, match=">= 1"):
        TrainConfig(batch_size=0).validate()


def test_loss_decreases_and_beats_majority(small_training_set):
    x, y = small_training_set
    cfg = TrainConfig(max_epochs=12, patience=12, seed=3)
    model, report = pretrain(x, y, cfg, log=quiet)
    assert report.epochs_run >= 3
    assert report.train_loss[1] < report.train_loss[0]
    assert report.train_loss[2] < report.train_loss[1]
    best_acc = max(report.val_accuracy)
    assert best_acc > report.majority_accuracy, (
        f"best accuracy {best_acc:.4f} does not beat always-majority "
        f"{report.majority_accuracy:.4f}")


def test_zero_information_labels_stay_near_half():
    """With labels independent of the inputs the model cannot beat a coin:
    accuracy sits near 0.5 and predicted probabilities stay uncommitted."""
    rng = np.random.default_rng(5)
    x = np.full((4000, 20, 4), -1.0, np.float32)
    x[:, :6] = rng.integers(0, 2, (4000, 6, 4))
    y = rng.integers(0, 2, 4000).astype(np.float32)
    cfg = TrainConfig(max_epochs=5, patience=5, seed=5)
    model, report = pretrain(x, y, cfg, log=quiet)
    assert 0.42 <= report.val_accuracy[-1] <= 0.58
    with torch.no_grad():
        p = torch.sigmoid(model(torch.from_numpy(x[:500]))).numpy()
    assert 0.35 <= p.mean() <= 0.65


def test_nan_inputs_abort_with_diagnostics(small_training_set):
    x, y = small_training_set
    x = x[:2000].copy()
    x[:, 0, 1] = np.nan  # poisons live rows (column 0 still marks them live)
    cfg = TrainConfig(max_epochs=2, patience=2, seed=0)
    with pytest.raises(TrainingDiverged, match="non-finite loss at epoch"):
        pretrain(x, y[:2000], cfg, log=quiet)


def test_exported_bytes_deterministic(small_training_set, tmp_path):
    x, y = small_training_set
    x, y = x[:3000], y[:3000]
    paths = []
    for run in range(2):
        cfg = TrainConfig(max_epochs=2, patience=2, seed=11)
        model, _ = pretrain(x, y, cfg, log=quiet)
        out = tmp_path / f"run{run}.qecnw"
        quantize_train(model, x, y, cfg, "Z", out, log=quiet)
        paths.append(out)
    assert paths[0].read_bytes() == paths[1].read_bytes()

    cfg = TrainConfig(max_epochs=2, patience=2, seed=12)  # different seed
    model, _ = pretrain(x, y, cfg, log=quiet)
    other = tmp_path / "other.qecnw"
    quantize_train(model, x, y, cfg, "Z", other, log=quiet)
    assert other.read_bytes() != paths[0].read_bytes()


def test_quantize_train_exports_loadable_file(small_training_set, tmp_path):
    x, y = small_training_set
    cfg = TrainConfig(max_epochs=1, patience=1, seed=2)
    model, _ = pretrain(x[:2000], y[:2000], cfg, log=quiet)
    out = tmp_path / "decoder.qecnw"
    tensors, report = quantize_train(model, x[:2000], y[:2000], cfg, "Z", out,
                                     log=quiet)
    assert report.stage == "qat"
    back = load_weights(out)
    assert back.kind == "Z"
    assert back.n_parameters == 4736 + 33
    assert (back.input_size, back.hidden_size, back.frac_bits) == (4, 32, 4)


def test_write_report(tmp_path, small_training_set):
    import json

    x, y = small_training_set
    cfg = TrainConfig(max_epochs=1, patience=1, seed=0)
    _, report = pretrain(x[:1500], y[:1500], cfg, log=quiet)
    path = tmp_path / "report.json"
    write_report(path, cfg, [report], extra={"note": "unit"})
    doc = json.loads(path.read_text())
    assert doc["config"]["seed"] == 0
    assert doc["stages"][0]["stage"] == "pretrain"
    assert len(doc["stages"][0]["train_loss"]) == doc["stages"][0]["epochs_run"]
    assert doc["note"] == "unit"
