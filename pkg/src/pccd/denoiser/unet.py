"""1-D U-Net noise predictor over the 128-point axis.

The 3x128x3 tensor is folded into 9 feature channels over 128 positions. Each
down stage is conv -> +time -> SiLU -> conv -> SiLU -> (skip) -> avg-pool; the
bottleneck is conv -> SiLU with an optional residual self-attention; each up
stage upsamples, concatenates the skip and mirrors the down block.

Two additions make the template-style lattice channel and the small-t regime
learnable. A learned positional embedding is added in the first block (rows
0-63 and 64-127 of the tensor mean different things, which a pure convolution
cannot tell apart). The output head is gated: eps_hat = g(t) * (x_t - U) where
U is the U-Net output and g = expm1(affine(time embedding)) is a per-feature
gain. The ideal gain 1/sqrt(1 - abar_t) spans two orders of magnitude while U
stays O(1); with the gain initialized to zero a fresh network predicts 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonFiniteActivation, StepOutOfRange
from . import layers as L

N_FEATURES = 9
N_POSITIONS = 128
KERNEL = 3


@dataclass(frozen=True)
class DenoiserConfig:
    stages: int = 4
    widths: tuple[int, ...] = (16, 32, 64, 128)
    use_attention: bool = True
    time_embed_dim: int = 32
    T: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if self.stages < 1:
            raise ValueError("need at least one stage")
        if len(self.widths) != self.stages:
            raise ValueError(f"{self.stages} stages but {len(self.widths)} widths")
        if N_POSITIONS % (2**self.stages):
            raise ValueError(f"{N_POSITIONS} positions not divisible by 2^{self.stages}")
        if any(w < 1 for w in self.widths) or self.time_embed_dim < 2 or self.T < 1:
            raise ValueError("widths, time_embed_dim and T must be positive")


PRESETS = {
    "four-stage": DenoiserConfig(),
    "five-stage": DenoiserConfig(stages=5, widths=(16, 32, 64, 128, 128)),
    "tiny": DenoiserConfig(stages=1, widths=(4,), use_attention=True, time_embed_dim=8),
}


def param_shapes(cfg: DenoiserConfig) -> dict[str, tuple[int, ...]]:
    """Ordered parameter names and shapes; the order is the serialization order."""
    E = cfg.time_embed_dim
    shapes: dict[str, tuple[int, ...]] = {"time.w": (E, E), "time.b": (E,)}
    shapes["pos"] = (cfg.widths[0], N_POSITIONS)
    cin = N_FEATURES
    for i, w in enumerate(cfg.widths):
        shapes[f"down{i}.conv1.w"] = (w, cin, KERNEL)
        shapes[f"down{i}.conv1.b"] = (w,)
        shapes[f"down{i}.time.w"] = (w, E)
        shapes[f"down{i}.time.b"] = (w,)
        shapes[f"down{i}.conv2.w"] = (w, w, KERNEL)
        shapes[f"down{i}.conv2.b"] = (w,)
        cin = w
    wb = cfg.widths[-1]
    shapes["mid.conv.w"] = (wb, wb, KERNEL)
    shapes["mid.conv.b"] = (wb,)
    if cfg.use_attention:
        for p in "qkv":
            shapes[f"mid.attn.w{p}"] = (wb, wb)
        shapes["mid.attn.wo"] = (wb, wb)
        shapes["mid.attn.bo"] = (wb,)
    cin = wb
    for i in reversed(range(cfg.stages)):
        w = cfg.widths[i]
        shapes[f"up{i}.conv1.w"] = (w, cin + w, KERNEL)
        shapes[f"up{i}.conv1.b"] = (w,)
        shapes[f"up{i}.time.w"] = (w, E)
        shapes[f"up{i}.time.b"] = (w,)
        shapes[f"up{i}.conv2.w"] = (w, w, KERNEL)
        shapes[f"up{i}.conv2.b"] = (w,)
        cin = w
    shapes["out.w"] = (N_FEATURES, cfg.widths[0], KERNEL)
    shapes["out.b"] = (N_FEATURES,)
    shapes["gain.w"] = (N_FEATURES, E)
    shapes["gain.b"] = (N_FEATURES,)
    return shapes


def init_params(cfg: DenoiserConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Fan-in scaled uniform initialization."""
    shapes = param_shapes(cfg)
    params = {}
    for name, shape in shapes.items():
        if name.startswith("gain.") or name == "pos":
            params[name] = np.zeros(shape)
            continue
        # biases share the fan-in of their weight
        weight = name[:-1] + "w" if name.endswith(".b") else name.replace(".bo", ".wo")
        params[name] = L.init_uniform(rng, shape, int(np.prod(shapes[weight][1:])))
    return params


def to_sequence(x) -> np.ndarray:
    """(B, 3, 128, 3) -> (B, 9, 128), feature index = channel * 3 + component."""
    B = x.shape[0]
    return np.ascontiguousarray(x.transpose(0, 1, 3, 2).reshape(B, N_FEATURES, N_POSITIONS))


def from_sequence(h) -> np.ndarray:
    B = h.shape[0]
    return np.ascontiguousarray(h.reshape(B, 3, 3, N_POSITIONS).transpose(0, 1, 3, 2))


class UNet1D:
    """Stateless network; parameters are passed in as a name -> array dict."""

    def __init__(self, cfg: DenoiserConfig):
        self.cfg = cfg

    def forward(self, params, x, t, keep_tape: bool = False):
        """Predict noise for a batch x of shape (B, 3, 128, 3) at steps t (B,)."""
        cfg = self.cfg
        x = np.asarray(x, dtype=float)
        t = np.broadcast_to(np.asarray(t), (x.shape[0],))
        if np.any(t < 1) or np.any(t > cfg.T):
            raise StepOutOfRange(f"timesteps must lie in [1, {cfg.T}]")
        tape = []

        emb = L.sinusoidal_embedding(t, cfg.time_embed_dim)
        u, c_lin = L.linear_forward(emb, params["time.w"], params["time.b"])
        temb, c_act = L.silu_forward(u)
        tape.append(("time", (c_lin, c_act)))

        x_seq = h = to_sequence(x)
        skips = []
        for i in range(cfg.stages):
            h, cache = self._block(params, f"down{i}", h, temb, params["pos"] if i == 0 else None)
            tape.append((f"down{i}", cache))
            skips.append(h)
            h, _ = L.avgpool_forward(h)

        h, c_conv = L.conv1d_forward(h, params["mid.conv.w"], params["mid.conv.b"])
        h, c_act = L.silu_forward(h)
        c_attn = None
        if cfg.use_attention:
            a, c_attn = L.attention_forward(
                h, params["mid.attn.wq"], params["mid.attn.wk"], params["mid.attn.wv"],
                params["mid.attn.wo"], params["mid.attn.bo"],
            )
            h = h + a
        tape.append(("mid", (c_conv, c_act, c_attn)))

        for i in reversed(range(cfg.stages)):
            h, _ = L.upsample_forward(h)
            c_up = h.shape[1]
            h = np.concatenate([h, skips[i]], axis=1)
            h, cache = self._block(params, f"up{i}", h, temb)
            tape.append((f"up{i}", (c_up, cache)))

        out, c_out = L.conv1d_forward(h, params["out.w"], params["out.b"])
        z, c_gain = L.linear_forward(temb, params["gain.w"], params["gain.b"])
        gain = np.expm1(z)[:, :, None]
        resid = x_seq - out
        out = gain * resid
        tape.append(("out", c_out))
        tape.append(("gain", (z, gain, resid, c_gain)))
        if not np.all(np.isfinite(out)):
            raise NonFiniteActivation("non-finite values in network output")
        out = from_sequence(out)
        return (out, tape) if keep_tape else out

    def _block(self, params, name, h, temb, pos=None):
        h, c1 = L.conv1d_forward(h, params[f"{name}.conv1.w"], params[f"{name}.conv1.b"])
        tproj, ct = L.linear_forward(temb, params[f"{name}.time.w"], params[f"{name}.time.b"])
        h = h + tproj[:, :, None]
        if pos is not None:
            h = h + pos
        h, a1 = L.silu_forward(h)
        h, c2 = L.conv1d_forward(h, params[f"{name}.conv2.w"], params[f"{name}.conv2.b"])
        h, a2 = L.silu_forward(h)
        return h, (c1, ct, a1, c2, a2)

    def _block_backward(self, name, dh, cache, grads):
        c1, ct, a1, c2, a2 = cache
        dh = L.silu_backward(dh, a2)
        dh, grads[f"{name}.conv2.w"], grads[f"{name}.conv2.b"] = L.conv1d_backward(dh, c2)
        dh = L.silu_backward(dh, a1)
        if name == "down0":
            grads["pos"] = dh.sum(axis=0)
        dtproj = dh.sum(axis=-1)
        dtemb, grads[f"{name}.time.w"], grads[f"{name}.time.b"] = L.linear_backward(dtproj, ct)
        dx, grads[f"{name}.conv1.w"], grads[f"{name}.conv1.b"] = L.conv1d_backward(dh, c1)
        return dx, dtemb

    def backward(self, tape, dout) -> dict[str, np.ndarray]:
        """Gradients of sum(dout * forward(x)) with respect to every parameter."""
        cfg = self.cfg
        grads: dict[str, np.ndarray] = {}
        steps = dict(tape)

        dh = to_sequence(np.asarray(dout, dtype=float))
        z, gain, resid, c_gain = steps["gain"]
        dz = np.einsum("bfl,bfl->bf", dh, resid) * np.exp(z)
        dtemb, grads["gain.w"], grads["gain.b"] = L.linear_backward(dz, c_gain)
        dh = -gain * dh
        dh, grads["out.w"], grads["out.b"] = L.conv1d_backward(dh, steps["out"])

        dskips = {}
        for i in range(cfg.stages):
            c_up, cache = steps[f"up{i}"]
            dcat, dt = self._block_backward(f"up{i}", dh, cache, grads)
            dtemb = dtemb + dt
            dskips[i] = dcat[:, c_up:]
            dh = L.upsample_backward(dcat[:, :c_up], None)

        c_conv, c_act, c_attn = steps["mid"]
        if c_attn is not None:
            da, *g = L.attention_backward(dh, c_attn)
            for k, v in zip(("wq", "wk", "wv", "wo", "bo"), g):
                grads[f"mid.attn.{k}"] = v
            dh = dh + da
        dh = L.silu_backward(dh, c_act)
        dh, grads["mid.conv.w"], grads["mid.conv.b"] = L.conv1d_backward(dh, c_conv)

        for i in reversed(range(cfg.stages)):
            dh = L.avgpool_backward(dh, None) + dskips[i]
            dh, dt = self._block_backward(f"down{i}", dh, steps[f"down{i}"], grads)
            dtemb = dtemb + dt

        c_lin, c_act = steps["time"]
        du = L.silu_backward(dtemb, c_act)
        _, grads["time.w"], grads["time.b"] = L.linear_backward(du, c_lin)
        return {name: grads[name] for name in param_shapes(cfg)}
