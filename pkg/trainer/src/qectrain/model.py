"""Clipped-activation LSTM decoder: trainable module + integer mirror.

The recurrent cell uses the inference hardware's activation algebra so the
trained function transfers directly:

- gates i, f, o: hard sigmoid clip(0.5 z + 0.5, 0, 1);
- candidate: clip(z, 0, 1);
- cell: c' = clip(f c + i g, 0, 2); hidden: h' = o * clip(c', 0, 1);
- verdict: dense accumulator w_d . h + b_d > 0.

Quantization-aware mode fake-quantizes weights to signed 6-bit at
`frac_bits` fractional bits and every activation to the fixed-point grid
the integer pipeline stores (gates and h on 1/256 steps in [0, 255/256],
c on 1/256 steps in [0, 511/256]), with straight-through gradients and the
pipeline's round-half-away rescaling; because every intermediate is an
exact dyadic in float32, the quantized forward pass computes bit for bit
the function the exported integer decoder runs.

`integer_forward` mirrors the deployed integer pipeline exactly (24-bit
accumulators at frac_bits+8 fractional bits, round-half-away-from-zero
rescaling, saturating unsigned 0.8/1.8 state) for trainer-side validation
of exported weight files.

Padded rows (-1) are skipped: state carries through unchanged, so the
output after the padded tail equals the output at the last real row.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn

from .formats import GATES, WEIGHT_MAX, WEIGHT_MIN, WeightTensors

HIDDEN_DEFAULT = 32
FRAC_BITS = 4


def hard_sigmoid(z: torch.Tensor) -> torch.Tensor:
    return (0.5 * z + 0.5).clamp(0.0, 1.0)


def fake_quant(w: torch.Tensor, scale: int, lo: int, hi: int) -> torch.Tensor:
    """Round-to-grid with straight-through gradient."""
    q = (w * scale).round().clamp(lo, hi) / scale
    return w + (q - w).detach()


def fake_quant_act(v: torch.Tensor, scale: int, hi: int) -> torch.Tensor:
    """Nonnegative activation onto its hardware grid, straight-through.

    Rounds half away from zero (floor(x + 0.5) for x >= 0) to match the
    integer pipeline's rescaling; all values involved are exact dyadics in
    float32, so with on-grid weights the quantized forward pass reproduces
    the integer pipeline bit for bit.
    """
    q = torch.floor(v * scale + 0.5).clamp(0, hi) / scale
    return v + (q - v).detach()


class ClippedLstm(nn.Module):
    """Single recurrent layer plus a one-neuron dense head."""

    def __init__(self, input_size: int, hidden_size: int = HIDDEN_DEFAULT,
                 frac_bits: int = FRAC_BITS, seed: int = 0):
        super().__init__()
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.frac_bits = frac_bits
        g = torch.Generator().manual_seed(seed)

        def uniform(*shape, scale):
            return nn.Parameter(
                (torch.rand(*shape, generator=g, dtype=torch.float32) * 2 - 1)
                * scale)

        h = hidden_size
        # gates stacked in (i, f, c, o) order along dim 0
        self.w_x = uniform(4 * h, input_size, scale=0.5)
        self.w_h = uniform(4 * h, h, scale=0.25)
        self.b = nn.Parameter(torch.zeros(4 * h))
        self.w_d = uniform(h, scale=0.5)
        self.b_d = nn.Parameter(torch.zeros(()))

    # -- parameter views ---------------------------------------------------

    def effective_params(self, quant: bool):
        if not quant:
            return self.w_x, self.w_h, self.b, self.w_d, self.b_d
        s = 1 << self.frac_bits
        return (fake_quant(self.w_x, s, WEIGHT_MIN, WEIGHT_MAX),
                fake_quant(self.w_h, s, WEIGHT_MIN, WEIGHT_MAX),
                fake_quant(self.b, s, WEIGHT_MIN, WEIGHT_MAX),
                fake_quant(self.w_d, s, WEIGHT_MIN, WEIGHT_MAX),
                fake_quant(self.b_d, s, WEIGHT_MIN, WEIGHT_MAX))

    def clamp_to_representable(self) -> None:
        """Keep float master weights inside the signed 6-bit range."""
        hi = WEIGHT_MAX / (1 << self.frac_bits)
        lo = WEIGHT_MIN / (1 << self.frac_bits)
        with torch.no_grad():
            for p in self.parameters():
                p.clamp_(lo, hi)

    # -- forward -----------------------------------------------------------

    def forward(self, x: torch.Tensor, quant: bool = False) -> torch.Tensor:
        """(B, T, input) padded with -1 -> (B,) dense pre-activations."""
        B, T, _ = x.shape
        H = self.hidden_size
        w_x, w_h, b, w_d, b_d = self.effective_params(quant)
        h = x.new_zeros(B, H)
        c = x.new_zeros(B, H)
        for t in range(T):
            xt = x[:, t]
            live = (xt[:, :1] >= 0).to(x.dtype)  # 0 for padded rows
            z = xt.clamp(min=0) @ w_x.T + h @ w_h.T + b
            zi, zf, zc, zo = z.split(H, dim=1)
            i = hard_sigmoid(zi)
            f = hard_sigmoid(zf)
            o = hard_sigmoid(zo)
            g = zc.clamp(0.0, 1.0)
            if quant:
                i = fake_quant_act(i, 256, 255)
                f = fake_quant_act(f, 256, 255)
                o = fake_quant_act(o, 256, 255)
                g = fake_quant_act(g, 256, 255)
            c_new = (f * c + i * g).clamp(0.0, 2.0)
            if quant:
                c_new = fake_quant_act(c_new, 256, 511)
            h_new = o * c_new.clamp(0.0, 1.0)
            if quant:
                h_new = fake_quant_act(h_new, 256, 255)
            h = live * h_new + (1 - live) * h
            c = live * c_new + (1 - live) * c
        return h @ w_d + b_d

    # -- export ------------------------------------------------------------

    def export_int8(self, kind: str) -> WeightTensors:
        s = 1 << self.frac_bits
        with torch.no_grad():
            def q(t):
                return ((t * s).round().clamp(WEIGHT_MIN, WEIGHT_MAX)
                        .to(torch.int8).cpu().numpy())

            wx, wh, b = q(self.w_x), q(self.w_h), q(self.b)
            H = self.hidden_size
            return WeightTensors(
                kind=kind, frac_bits=self.frac_bits,
                input_size=self.input_size, hidden_size=H,
                w_x={g: wx[j * H:(j + 1) * H].copy()
                     for j, g in enumerate(GATES)},
                w_h={g: wh[j * H:(j + 1) * H].copy()
                     for j, g in enumerate(GATES)},
                b={g: b[j * H:(j + 1) * H].copy() for j, g in enumerate(GATES)},
                w_d=q(self.w_d), b_d=int(q(self.b_d)))

    @classmethod
    def from_tensors(cls, t: WeightTensors, seed: int = 0) -> "ClippedLstm":
        """Float model whose parameters realize an exported file exactly."""
        model = cls(t.input_size, t.hidden_size, t.frac_bits, seed=seed)
        s = 1.0 / (1 << t.frac_bits)
        with torch.no_grad():
            model.w_x.copy_(torch.from_numpy(
                np.concatenate([t.w_x[g] for g in GATES]).astype(np.float32)) * s)
            model.w_h.copy_(torch.from_numpy(
                np.concatenate([t.w_h[g] for g in GATES]).astype(np.float32)) * s)
            model.b.copy_(torch.from_numpy(
                np.concatenate([t.b[g] for g in GATES]).astype(np.float32)) * s)
            model.w_d.copy_(
                torch.from_numpy(t.w_d.astype(np.float32)) * s)
            model.b_d.copy_(torch.tensor(float(t.b_d) * s))
        return model


def _rhaz_div(a: np.ndarray, b: int) -> np.ndarray:
    """Integer division rounding half away from zero."""
    a = np.asarray(a)
    return np.sign(a) * ((np.abs(a) + b // 2) // b)


def integer_forward(t: WeightTensors,
                    rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Bit-exact integer pipeline on (B, T, input) defect-bit sequences.

    Rows with a leading -1 are treated as padding and skipped. Returns
    (y, flip): the quantized sigmoid output in [0, 255/256] and the verdict
    bit (dense accumulator > 0) after the last real row.
    """
    fb = t.frac_bits
    one = 1 << (fb + 8)
    sigma_div = 1 << (fb + 1)
    relu_div = 1 << fb
    wx = {g: t.w_x[g].astype(np.int64) for g in GATES}
    wh = {g: t.w_h[g].astype(np.int64) for g in GATES}
    b = {g: t.b[g].astype(np.int64) for g in GATES}
    wd = t.w_d.astype(np.int64)

    rows = np.asarray(rows)
    B = rows.shape[0]
    h = np.zeros((B, t.hidden_size), np.int64)
    c = np.zeros((B, t.hidden_size), np.int64)
    for step in range(rows.shape[1]):
        xt = rows[:, step]
        live = xt[:, 0] >= 0
        if not live.any():
            continue
        x = np.clip(xt, 0, None).astype(np.int64)

        def acc(g):
            return ((x @ wx[g].T) << 8) + h @ wh[g].T + (b[g] << 8)

        i = np.clip(_rhaz_div(acc("i") + one, sigma_div), 0, 255)
        f = np.clip(_rhaz_div(acc("f") + one, sigma_div), 0, 255)
        o = np.clip(_rhaz_div(acc("o") + one, sigma_div), 0, 255)
        g = np.clip(_rhaz_div(acc("c"), relu_div), 0, 255)
        c_new = np.clip(_rhaz_div(f * c + i * g, 256), 0, 511)
        h_new = np.clip(_rhaz_div(o * np.minimum(c_new, 256), 256), 0, 255)
        mask = live[:, None]
        h = np.where(mask, h_new, h)
        c = np.where(mask, c_new, c)
    acc_d = h @ wd + (np.int64(t.b_d) << 8)
    y = np.clip(_rhaz_div(acc_d + one, sigma_div), 0, 255) / 256.0
    return y, acc_d > 0
