"""DDPM noise schedule, forward corruption, reverse step and sampling loops.

Timesteps are 1-indexed: ``t = 1..T`` and ``x_0`` is data. Schedule arrays are
stored 0-indexed (entry ``t - 1`` belongs to step ``t``).
"""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidParams, ShapeMismatch, StepOutOfRange

BETA_MIN = 1e-8
BETA_MAX = 0.999

Predictor = Callable[[np.ndarray, int], np.ndarray]


def make_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 stream; normals come from numpy's ziggurat ``standard_normal``."""
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray
    sigma: np.ndarray
    s: float | None = None

    @property
    def T(self) -> int:
        return len(self.beta)

    def check_step(self, t: int) -> int:
        t = int(t)
        if not 1 <= t <= self.T:
            raise StepOutOfRange(f"step {t} outside [1, {self.T}]")
        return t

    def alpha_bar_at(self, t: int) -> float:
        """Cumulative signal retention, with alpha_bar(0) = 1."""
        return 1.0 if t == 0 else float(self.alpha_bar[t - 1])

    def fingerprint(self) -> bytes:
        """8-byte digest of the schedule arrays."""
        h = hashlib.sha256()
        h.update(np.int64(self.T).tobytes())
        h.update(np.ascontiguousarray(self.beta, dtype="<f8").tobytes())
        return h.digest()[:8]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,beta,alpha,alpha_bar,sigma\n")
        for i in range(self.T):
            cols = (self.beta[i], self.alpha[i], self.alpha_bar[i], self.sigma[i])
            buf.write(f"{i + 1}," + ",".join(repr(float(v)) for v in cols) + "\n")
        return buf.getvalue()


def schedule_from_betas(beta, s: float | None = None) -> NoiseSchedule:
    beta = np.asarray(beta, dtype=float)
    if beta.ndim != 1 or beta.size < 1 or np.any(beta <= 0) or np.any(beta >= 1):
        raise InvalidParams("betas must be a non-empty 1-D array in (0, 1)")
    alpha = 1.0 - beta
    arrays = [beta, alpha, np.cumprod(alpha), np.sqrt(beta)]
    for a in arrays:
        a.flags.writeable = False
    return NoiseSchedule(*arrays, s=s)


def cosine_schedule(T: int = 1000, s: float = 0.008) -> NoiseSchedule:
    """Squared-cosine schedule: alpha_bar(t) = f(t)/f(0), f(t) = cos^2(((t/T) + s)/(1 + s) * pi/2).

    Betas are clipped to [1e-8, 0.999] and alpha_bar is then recomputed as the
    running product of (1 - beta) so the two always agree.
    """
    if int(T) != T or T < 1:
        raise InvalidParams(f"T must be a positive integer, got {T}")
    if not s > 0:
        raise InvalidParams(f"offset s must be positive, got {s}")
    T = int(T)
    steps = np.arange(T + 1, dtype=float)
    f = np.cos(((steps / T) + s) / (1.0 + s) * (np.pi / 2.0)) ** 2
    beta = np.clip(1.0 - f[1:] / f[:-1], BETA_MIN, BETA_MAX)
    return schedule_from_betas(beta, s=s)


def _check_shapes(a, b):
    if np.shape(a) != np.shape(b):
        raise ShapeMismatch(f"shape {np.shape(a)} does not match {np.shape(b)}")


def q_sample(x0, t: int, eps, sch: NoiseSchedule) -> np.ndarray:
    """x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps."""
    t = sch.check_step(t)
    _check_shapes(x0, eps)
    ab = sch.alpha_bar[t - 1]
    return np.sqrt(ab) * np.asarray(x0) + np.sqrt(1.0 - ab) * np.asarray(eps)


def predict_x0(xt, t: int, eps_hat, sch: NoiseSchedule) -> np.ndarray:
    t = sch.check_step(t)
    ab = sch.alpha_bar[t - 1]
    return (np.asarray(xt) - np.sqrt(1.0 - ab) * np.asarray(eps_hat)) / np.sqrt(ab)


def oracle_eps(xt, x0, t: int, sch: NoiseSchedule) -> np.ndarray:
    """The exact noise that maps x0 to xt at step t."""
    t = sch.check_step(t)
    ab = sch.alpha_bar[t - 1]
    return (np.asarray(xt) - np.sqrt(ab) * np.asarray(x0)) / np.sqrt(1.0 - ab)


def reverse_step(xt, t: int, eps_hat, z, sch: NoiseSchedule) -> np.ndarray:
    """x_{t-1} = (x_t - beta_t / sqrt(1 - abar_t) * eps_hat) / sqrt(alpha_t) + sigma_t z."""
    t = sch.check_step(t)
    i = t - 1
    mean = (np.asarray(xt) - sch.beta[i] / np.sqrt(1.0 - sch.alpha_bar[i]) * np.asarray(eps_hat)) / np.sqrt(
        sch.alpha[i]
    )
    return mean + sch.sigma[i] * np.asarray(z)


def oracle_predictor(x0, sch: NoiseSchedule) -> Predictor:
    """A noise predictor that knows the clean data exactly."""
    x0 = np.array(x0, dtype=float)

    def predict(xt, t):
        return oracle_eps(xt, x0, t, sch)

    return predict


def denoise_loop(
    xT,
    predictor: Predictor,
    sch: NoiseSchedule,
    rng: np.random.Generator,
    callback: Callable[[int, np.ndarray], None] | None = None,
) -> np.ndarray:
    x = np.array(xT, dtype=float)
    for t in range(sch.T, 0, -1):
        if callback is not None:
            callback(t, x)
        eps_hat = predictor(x, t)
        z = rng.standard_normal(x.shape) if t > 1 else np.zeros_like(x)
        x = reverse_step(x, t, eps_hat, z, sch)
    if callback is not None:
        callback(0, x)
    return x


def sample(
    predictor: Predictor,
    sch: NoiseSchedule,
    seed: int,
    shape=(3, 128, 3),
    callback: Callable[[int, np.ndarray], None] | None = None,
) -> np.ndarray:
    """Generate from standard-normal x_T. ``callback(t, x_t)`` sees every state down to t=0."""
    rng = make_rng(seed)
    xT = rng.standard_normal(shape)
    return denoise_loop(xT, predictor, sch, rng, callback)


def reconstruct(
    x0,
    predictor: Predictor,
    sch: NoiseSchedule,
    seed: int,
    callback: Callable[[int, np.ndarray], None] | None = None,
) -> np.ndarray:
    """Noise x0 all the way to step T, then denoise it back."""
    x0 = np.asarray(x0, dtype=float)
    rng = make_rng(seed)
    xT = q_sample(x0, sch.T, rng.standard_normal(x0.shape), sch)
    return denoise_loop(xT, predictor, sch, rng, callback)
