"""DDPM numerics with a pluggable denoiser.

Timesteps are 1-indexed: t runs over [1, T]. Schedule tables are kept in
float64 so the cumulative alpha product does not drift over long
horizons. Reverse sampling uses the standard posterior step with
sigma_t^2 = beta_t * (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t) and a
deterministic final step (sigma_1 = 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .conditioning import LatentCondition

DEFAULT_BETA1 = 0.0015
DEFAULT_BETA2 = 0.0205
DEFAULT_T = 1000


@dataclass(frozen=True)
class NoiseSchedule:
    beta: np.ndarray  # (T,) float64, beta[t-1] is beta_t
    alpha: np.ndarray  # (T,) 1 - beta_t
    alpha_bar: np.ndarray  # (T,) cumulative product, float64

    def __post_init__(self):
        if (self.beta <= 0).any() or (self.beta >= 1).any():
            raise ValueError("betas must lie in (0, 1)")
        if (np.diff(self.alpha_bar) >= 0).any():
            raise ValueError("alpha_bar must be strictly decreasing")

    @property
    def num_steps(self) -> int:
        return len(self.beta)

    def check_t(self, t: int) -> None:
        if not (1 <= t <= self.num_steps):
            raise ValueError(f"t={t} out of range [1, {self.num_steps}]")

    def as_array(self) -> np.ndarray:
        """(3, T) stack of (beta, alpha, alpha_bar) for file export."""
        return np.stack([self.beta, self.alpha, self.alpha_bar]).astype(np.float32)


class Denoiser(Protocol):
    def __call__(
        self, z_t: np.ndarray, t: int, cond: LatentCondition | None = None
    ) -> np.ndarray: ...


def linear_schedule(
    beta1: float = DEFAULT_BETA1,
    beta2: float = DEFAULT_BETA2,
    num_steps: int = DEFAULT_T,
) -> NoiseSchedule:
    if not (0 < beta1 <= beta2 < 1):
        raise ValueError("require 0 < beta1 <= beta2 < 1")
    if num_steps < 1:
        raise ValueError("num_steps must be >= 1")
    if num_steps == 1:
        beta = np.array([beta1], dtype=np.float64)
    else:
        beta = np.linspace(beta1, beta2, num_steps, dtype=np.float64)
    alpha = 1.0 - beta
    alpha_bar = np.cumprod(alpha)
    # kept in float64: the cumulative product must stay exact over long T
    return NoiseSchedule(beta=beta, alpha=alpha, alpha_bar=alpha_bar)


def forward_closed(
    z0: np.ndarray, t: int, eps: np.ndarray, sched: NoiseSchedule
) -> np.ndarray:
    """Closed-form marginal: sqrt(ab_t) z0 + sqrt(1 - ab_t) eps."""
    sched.check_t(t)
    ab = float(sched.alpha_bar[t - 1])
    return np.sqrt(ab) * np.asarray(z0) + np.sqrt(1.0 - ab) * np.asarray(eps)


def forward_step(
    z_prev: np.ndarray, t: int, sched: NoiseSchedule, rng: np.random.Generator
) -> np.ndarray:
    """One ancestral step z_t ~ N(sqrt(1-beta_t) z_{t-1}, beta_t I)."""
    sched.check_t(t)
    beta = float(sched.beta[t - 1])
    z_prev = np.asarray(z_prev)
    return np.sqrt(1.0 - beta) * z_prev + np.sqrt(beta) * rng.standard_normal(
        z_prev.shape
    )


def make_training_pair(
    z0: np.ndarray, t: int, sched: NoiseSchedule, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Draw eps and return (z_t, eps) for external noise-prediction losses."""
    sched.check_t(t)
    eps = rng.standard_normal(np.asarray(z0).shape)
    return forward_closed(z0, t, eps, sched), eps


def ddpm_reverse_step(
    z_t: np.ndarray,
    t: int,
    eps_hat: np.ndarray,
    sched: NoiseSchedule,
    rng: np.random.Generator,
) -> np.ndarray:
    sched.check_t(t)
    beta = float(sched.beta[t - 1])
    alpha = float(sched.alpha[t - 1])
    ab_t = float(sched.alpha_bar[t - 1])
    mean = (np.asarray(z_t) - (beta / np.sqrt(1.0 - ab_t)) * np.asarray(eps_hat)) / np.sqrt(
        alpha
    )
    if t == 1:
        return mean
    ab_prev = float(sched.alpha_bar[t - 2])
    sigma = np.sqrt(beta * (1.0 - ab_prev) / (1.0 - ab_t))
    return mean + sigma * rng.standard_normal(mean.shape)


def sample(
    denoiser: Denoiser,
    sched: NoiseSchedule,
    shape: tuple[int, ...],
    cond: LatentCondition | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Full reverse trajectory from z_T ~ N(0, I) down to z_0."""
    rng = rng or np.random.default_rng()
    z = rng.standard_normal(shape)
    for t in range(sched.num_steps, 0, -1):
        eps_hat = denoiser(z, t, cond)
        if not np.isfinite(eps_hat).all():
            raise FloatingPointError(f"denoiser produced non-finite output at t={t}")
        z = ddpm_reverse_step(z, t, eps_hat, sched, rng)
    return z


def analytic_gaussian_denoiser(
    mu: np.ndarray | float, var: np.ndarray | float, sched: NoiseSchedule
) -> Callable[..., np.ndarray]:
    """Exact noise predictor for a diagonal Gaussian data distribution.

    Under z0 ~ N(mu, diag(var)) the posterior mean m of z0 given z_t is
    available in closed form:

        m = (sqrt(ab_t) var z_t + (1 - ab_t) mu) / (ab_t var + 1 - ab_t)

    and eps_hat = (z_t - sqrt(ab_t) m) / sqrt(1 - ab_t). Used as a
    verification oracle for the sampler.
    """
    mu = np.asarray(mu, dtype=np.float64)
    var = np.asarray(var, dtype=np.float64)
    if (var <= 0).any():
        raise ValueError("variance must be positive")

    def denoiser(z_t: np.ndarray, t: int, cond: LatentCondition | None = None):
        ab = float(sched.alpha_bar[t - 1])
        m = (np.sqrt(ab) * var * z_t + (1.0 - ab) * mu) / (ab * var + (1.0 - ab))
        return (z_t - np.sqrt(ab) * m) / np.sqrt(1.0 - ab)

    return denoiser
