"""A pool of turbo decoder pairs, one per hypothesized noise density."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .stable_noise import ChannelDensity, GsnrSpec, gsnr_to_dispersion, sas_density
from .turbo_codec import TurboCodeConfig, channel_llr, turbo_decode_llrs

__all__ = [
    "DEFAULT_ALPHAS",
    "Expert",
    "ExpertPool",
    "default_pool",
    "pool_for_gsnr",
    "decode_all",
]

logger = logging.getLogger(__name__)

#: Cauchy, four interior exponents, Gaussian.
DEFAULT_ALPHAS = (1.0, 1.2, 1.4, 1.6, 1.8, 2.0)


@dataclass(frozen=True)
class Expert:
    label: str
    alpha: float
    density: ChannelDensity


@dataclass(frozen=True)
class ExpertPool:
    experts: tuple
    iters: int = 8

    def __post_init__(self):
        experts = tuple(self.experts)
        if not experts:
            raise ValueError("pool needs at least one expert")
        labels = [e.label for e in experts]
        if len(set(labels)) != len(labels):
            raise ValueError(f"expert labels must be unique, got {labels}")
        if self.iters < 1:
            raise ValueError("iters must be >= 1")
        object.__setattr__(self, "experts", experts)

    def __len__(self):
        return len(self.experts)

    @property
    def labels(self) -> list[str]:
        return [e.label for e in self.experts]

    @property
    def alphas(self) -> np.ndarray:
        return np.array([e.alpha for e in self.experts])

    def subset(self, indices) -> "ExpertPool":
        return ExpertPool(tuple(self.experts[i] for i in indices), self.iters)


def _label(alpha: float) -> str:
    if alpha == 1.0:
        return "cauchy"
    if alpha == 2.0:
        return "gaussian"
    return f"sas{alpha:.2f}"


def default_pool(gamma: float, alphas=DEFAULT_ALPHAS, iters: int = 8, rule: str = "mebcgm") -> ExpertPool:
    """Experts sharing dispersion ``gamma``: Cauchy(gamma), ME-BCGM at the
    interior exponents, and N(0, 2 gamma)."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return ExpertPool(
        tuple(Expert(_label(a), float(a), sas_density(float(a), gamma, rule)) for a in alphas),
        iters,
    )


def pool_for_gsnr(gsnr: GsnrSpec, alphas=DEFAULT_ALPHAS, iters: int = 8, rule: str = "mebcgm") -> ExpertPool:
    """Experts that know the operating GSNR but not alpha: each expert's
    dispersion is the one its own exponent implies at ``gsnr``."""
    return ExpertPool(
        tuple(
            Expert(_label(a), float(a), sas_density(float(a), gsnr_to_dispersion(gsnr, float(a)), rule))
            for a in alphas
        ),
        iters,
    )


def _decode_one(cfg, density, frames, iters):
    llr = turbo_decode_llrs(cfg, channel_llr(density, frames, cfg.amplitude), iters)
    return expit(llr)


def decode_all(pool: ExpertPool, cfg: TurboCodeConfig, frames, n_jobs: int = 1, batched: bool = True):
    """Decode ``frames`` (``(n, N)`` or ``(N,)``) under every expert.

    Returns ``(posteriors, failed)``: posteriors have shape ``(M, n, k)``
    (``(M, k)`` for a single frame), ``failed`` is a boolean ``(M,)``
    marking experts whose decoding failed numerically; their posteriors are
    replaced by 0.5.
    """
    frames = np.asarray(frames, dtype=float)
    single = frames.ndim == 1
    frames = np.atleast_2d(frames)
    if frames.shape[-1] != cfg.n:
        raise ValueError(f"frame length {frames.shape[-1]} != {cfg.n}")
    M = len(pool)
    out = np.empty((M, frames.shape[0], cfg.k))
    failed = np.zeros(M, dtype=bool)

    def run(m):
        try:
            with np.errstate(over="raise", invalid="raise"):
                return _decode_one(cfg, pool.experts[m].density, frames, pool.iters)
        except (FloatingPointError, ValueError) as exc:
            logger.warning("expert %s failed: %s", pool.experts[m].label, exc)
            return None

    results = None
    if batched and n_jobs == 1:
        try:
            llrs = np.stack([channel_llr(e.density, frames, cfg.amplitude) for e in pool.experts])
            results = list(expit(turbo_decode_llrs(cfg, llrs, pool.iters)))
        except (FloatingPointError, ValueError) as exc:
            # isolate the failing expert(s)
            logger.warning("batched decode failed (%s); retrying per expert", exc)
    if results is None and n_jobs == 1:
        results = [run(m) for m in range(M)]
    elif results is None:
        with ThreadPoolExecutor(max_workers=n_jobs) as ex:
            results = list(ex.map(run, range(M)))

    for m, res in enumerate(results):
        if res is None or not np.all(np.isfinite(res)):
            failed[m] = True
            out[m] = 0.5
        else:
            out[m] = res
    if single:
        out = out[:, 0]
    return out, failed
