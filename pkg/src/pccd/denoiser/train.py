"""MAE objective, exact gradients, Adam and the training loop."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..diffusion import NoiseSchedule, make_rng
from ..errors import EmptyDataset, NonFiniteGradient, NonFiniteLoss, ShapeMismatch
from .unet import DenoiserConfig, UNet1D, init_params, param_shapes

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 128
    training_steps: int = 500
    adam_beta1: float = 0.9
    adam_beta2: float = 0.99
    adam_epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not (self.learning_rate > 0 and self.batch_size > 0 and self.training_steps > 0 and self.adam_epsilon > 0):
            raise ValueError("learning rate, batch size, steps and epsilon must be positive")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def zeros_like(cls, params):
        return cls({k: np.zeros_like(p) for k, p in params.items()}, {k: np.zeros_like(p) for k, p in params.items()})


@dataclass
class DenoiserCheckpoint:
    config: DenoiserConfig
    params: dict[str, np.ndarray]
    adam: AdamState
    schedule_fingerprint: bytes = b"\0" * 8

    @classmethod
    def initialize(cls, config: DenoiserConfig, seed: int = 0, schedule: NoiseSchedule | None = None):
        params = init_params(config, make_rng(seed))
        fp = schedule.fingerprint() if schedule is not None else b"\0" * 8
        return cls(config, params, AdamState.zeros_like(params), fp)

    @property
    def net(self) -> UNet1D:
        return UNet1D(self.config)

    def n_parameters(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def predictor(self, schedule: NoiseSchedule | None = None):
        """Single-tensor noise predictor ``(x_t, t) -> eps_hat`` for the sampler."""
        if schedule is not None and schedule.fingerprint() != self.schedule_fingerprint:
            import warnings

            warnings.warn("checkpoint was trained under a different noise schedule", stacklevel=2)
        net = self.net

        def predict(xt, t):
            return net.forward(self.params, np.asarray(xt)[None], np.array([t]))[0]

        return predict


def forward(ckpt: DenoiserCheckpoint, xt, t) -> np.ndarray:
    """Noise estimate for one 3x128x3 tensor or a batch of them."""
    xt = np.asarray(xt, dtype=float)
    if xt.ndim == 3:
        return ckpt.net.forward(ckpt.params, xt[None], np.array([t]))[0]
    return ckpt.net.forward(ckpt.params, xt, np.asarray(t))


def mae_loss(eps, eps_hat) -> float:
    eps, eps_hat = np.asarray(eps), np.asarray(eps_hat)
    if eps.shape != eps_hat.shape:
        raise ShapeMismatch(f"{eps.shape} vs {eps_hat.shape}")
    return float(np.mean(np.abs(eps - eps_hat)))


def loss_and_gradient(ckpt: DenoiserCheckpoint, xt, t, eps):
    """Batch-mean MAE and its gradient for every parameter.

    The subgradient at an exactly zero residual is taken as 0.
    """
    xt = np.asarray(xt, dtype=float)
    if xt.ndim == 3:
        xt, eps, t = xt[None], np.asarray(eps)[None], np.atleast_1d(t)
    net = ckpt.net
    out, tape = net.forward(ckpt.params, xt, np.asarray(t), keep_tape=True)
    resid = out - eps
    loss = float(np.mean(np.abs(resid)))
    grads = net.backward(tape, np.sign(resid) / resid.size)
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(f"non-finite gradient for {name}")
    return loss, grads


def gradient(ckpt: DenoiserCheckpoint, xt, t, eps) -> dict[str, np.ndarray]:
    return loss_and_gradient(ckpt, xt, t, eps)[1]


def adam_step(params, grads, state: AdamState, cfg: TrainConfig):
    """One bias-corrected Adam update; returns new (params, state)."""
    step = state.step + 1
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    new_params, m, v = {}, {}, {}
    for k, p in params.items():
        g = grads[k]
        m[k] = b1 * state.m[k] + (1.0 - b1) * g
        v[k] = b2 * state.v[k] + (1.0 - b2) * g * g
        m_hat = m[k] / (1.0 - b1**step)
        v_hat = v[k] / (1.0 - b2**step)
        new_params[k] = p - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_epsilon)
    return new_params, AdamState(m, v, step)


@dataclass
class TrainResult:
    checkpoint: DenoiserCheckpoint
    losses: list[float] = field(default_factory=list)


def train(
    dataset,
    schedule: NoiseSchedule,
    dcfg: DenoiserConfig,
    tcfg: TrainConfig,
    checkpoint: DenoiserCheckpoint | None = None,
) -> TrainResult:
    """Fit the noise predictor on clean tensors with the MAE objective."""
    data = np.asarray([np.asarray(x, dtype=float) for x in dataset])
    if data.size == 0 or len(data) == 0:
        raise EmptyDataset("training set is empty")
    if dcfg.T != schedule.T:
        raise ValueError(f"denoiser T={dcfg.T} does not match schedule T={schedule.T}")
    rng = make_rng(tcfg.seed)
    ckpt = checkpoint or DenoiserCheckpoint.initialize(dcfg, seed=tcfg.seed, schedule=schedule)
    ckpt.schedule_fingerprint = schedule.fingerprint()
    n = len(data)
    B = tcfg.batch_size
    sqrt_ab = np.sqrt(schedule.alpha_bar)
    sqrt_1mab = np.sqrt(1.0 - schedule.alpha_bar)

    losses = []
    for step in range(tcfg.training_steps):
        idx = rng.integers(0, n, size=B) if n < B else rng.choice(n, size=B, replace=False)
        t = rng.integers(1, schedule.T + 1, size=B)
        eps = rng.standard_normal((B, *data.shape[1:]))
        xt = sqrt_ab[t - 1, None, None, None] * data[idx] + sqrt_1mab[t - 1, None, None, None] * eps
        loss, grads = loss_and_gradient(ckpt, xt, t, eps)
        if not np.isfinite(loss):
            raise NonFiniteLoss(f"loss became {loss} at step {step}")
        ckpt.params, ckpt.adam = adam_step(ckpt.params, grads, ckpt.adam, tcfg)
        losses.append(loss)
        if step % 50 == 0:
            log.debug("step %d loss %.5f", step, loss)
    return TrainResult(ckpt, losses)


__all__ = [
    "AdamState",
    "DenoiserCheckpoint",
    "TrainConfig",
    "TrainResult",
    "adam_step",
    "forward",
    "gradient",
    "loss_and_gradient",
    "mae_loss",
    "param_shapes",
    "train",
]
