"""Two-stage training: float pretraining, then 6-bit quantization-aware
fine-tuning that exports the deployable weight file.

Both stages share one loop: Adam on binary cross-entropy over the verdict
pre-activation at each sample's last real row, early stopping on
validation loss, NaN abort with diagnostics. The quantization-aware stage
runs the same forward pass with fake-quantized weights and activations
(straight-through gradients), so the exported int8 tensors realize the
function that was actually trained.

Determinism: given a fixed config seed the data order, initialization, and
therefore the exported weight file bytes are reproducible (single-threaded
torch).
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import torch

from .formats import WeightTensors, save_weights
from .model import ClippedLstm
from .prepare import PAD_VALUE, SEQ_LEN, majority_baseline

torch.set_num_threads(1)


class TrainingDiverged(RuntimeError):
    """Loss became non-finite; carries the epoch/batch diagnostics."""


@dataclass
class TrainConfig:
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    batch_size: int = 256
    max_epochs: int = 50
    patience: int = 5  # early stopping on validation loss
    val_fraction: float = 0.2  # 80/20 train/validation split
    seq_len: int = SEQ_LEN
    pad_value: float = PAD_VALUE
    hidden_size: int = 32
    frac_bits: int = 4
    seed: int = 0

    def validate(self) -> None:
        if self.optimizer != "adam":
            raise ValueError(f"unsupported optimizer {self.optimizer!r}")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must lie strictly between 0 and 1")
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ValueError("batch_size, max_epochs, patience must be >= 1")


@dataclass
class StageReport:
    stage: str
    seed: int
    samples: int
    val_samples: int
    epochs_run: int
    best_epoch: int
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)
    majority_accuracy: float = 0.0
    wall_seconds: float = 0.0


def _split(x: np.ndarray, y: np.ndarray, cfg: TrainConfig):
    n = len(x)
    n_val = max(1, int(round(n * cfg.val_fraction)))
    rng = np.random.default_rng(cfg.seed)
    perm = rng.permutation(n)
    val, tr = perm[:n_val], perm[n_val:]
    return x[tr], y[tr], x[val], y[val]


def _run_stage(model: ClippedLstm, x: np.ndarray, y: np.ndarray,
               cfg: TrainConfig, quant: bool, stage: str,
               learning_rate: float | None = None,
               log=print) -> StageReport:
    cfg.validate()
    if x.ndim != 3 or x.shape[1] != cfg.seq_len:
        raise ValueError(f"expected (B, {cfg.seq_len}, dim) tensors, "
                         f"got {x.shape}")
    t0 = time.perf_counter()
    torch.manual_seed(cfg.seed)
    xt_tr, y_tr, xt_val, y_val = _split(x, y, cfg)
    report = StageReport(stage=stage, seed=cfg.seed, samples=len(xt_tr),
                         val_samples=len(xt_val), epochs_run=0, best_epoch=-1,
                         majority_accuracy=majority_baseline(y_val))
    xt_tr = torch.from_numpy(np.ascontiguousarray(xt_tr, np.float32))
    y_tr = torch.from_numpy(np.ascontiguousarray(y_tr, np.float32))
    xt_val = torch.from_numpy(np.ascontiguousarray(xt_val, np.float32))
    y_val_t = torch.from_numpy(np.ascontiguousarray(y_val, np.float32))

    opt = torch.optim.Adam(model.parameters(),
                           lr=cfg.learning_rate if learning_rate is None
                           else learning_rate)
    loss_fn = torch.nn.BCEWithLogitsLoss()
    order = torch.Generator().manual_seed(cfg.seed + 1)
    best_loss, best_state, stale = float("inf"), None, 0

    for epoch in range(cfg.max_epochs):
        model.train()
        perm = torch.randperm(len(xt_tr), generator=order)
        total = 0.0
        for k in range(0, len(xt_tr), cfg.batch_size):
            idx = perm[k:k + cfg.batch_size]
            opt.zero_grad()
            out = model(xt_tr[idx], quant=quant)
            loss = loss_fn(out, y_tr[idx])
            if not torch.isfinite(loss):
                raise TrainingDiverged(
                    f"{stage}: non-finite loss at epoch {epoch}, batch "
                    f"{k // cfg.batch_size} (lr={opt.param_groups[0]['lr']}, "
                    f"quant={quant})")
            loss.backward()
            opt.step()
            model.clamp_to_representable()
            total += float(loss.detach()) * len(idx)
        model.eval()
        with torch.no_grad():
            val_out = model(xt_val, quant=quant)
            val_loss = float(loss_fn(val_out, y_val_t))
            val_acc = float(((val_out > 0).numpy() == (y_val > 0.5)).mean())
        report.train_loss.append(total / len(xt_tr))
        report.val_loss.append(val_loss)
        report.val_accuracy.append(val_acc)
        report.epochs_run = epoch + 1
        log(f"[{stage}] epoch {epoch}: train {report.train_loss[-1]:.5f} "
            f"val {val_loss:.5f} acc {val_acc:.4f}")
        if val_loss < best_loss - 1e-6:
            best_loss, stale = val_loss, 0
            report.best_epoch = epoch
            best_state = {k: v.clone() for k, v in model.state_dict().items()}
        else:
            stale += 1
            if stale >= cfg.patience:
                log(f"[{stage}] early stop at epoch {epoch} "
                    f"(best {report.best_epoch})")
                break
    if best_state is not None:
        model.load_state_dict(best_state)
    report.wall_seconds = time.perf_counter() - t0
    return report


def pretrain(x: np.ndarray, y: np.ndarray, cfg: TrainConfig,
             log=print) -> tuple[ClippedLstm, StageReport]:
    """Stage 1: float model from scratch."""
    model = ClippedLstm(input_size=x.shape[2], hidden_size=cfg.hidden_size,
                        frac_bits=cfg.frac_bits, seed=cfg.seed)
    report = _run_stage(model, x, y, cfg, quant=False, stage="pretrain",
                        log=log)
    return model, report


def quantize_train(model: ClippedLstm, x: np.ndarray, y: np.ndarray,
                   cfg: TrainConfig, kind: str, out_path,
                   learning_rate: float | None = None,
                   log=print) -> tuple[WeightTensors, StageReport]:
    """Stage 2: quantization-aware fine-tuning + atomic weight export."""
    lr = cfg.learning_rate / 5 if learning_rate is None else learning_rate
    report = _run_stage(model, x, y, cfg, quant=True, stage="qat",
                        learning_rate=lr, log=log)
    tensors = model.export_int8(kind)
    save_weights(tensors, out_path)
    return tensors, report


def write_report(path, config: TrainConfig, stages: list[StageReport],
                 extra: dict | None = None) -> None:
    doc = {
        "config": asdict(config),
        "stages": [asdict(s) for s in stages],
    }
    if extra:
        doc.update(extra)
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
